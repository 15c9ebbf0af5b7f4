#include "vpath/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <json.hpp>
#include <openssl/evp.h>

#include "vpath/error.hpp"

namespace vpath {

namespace {

class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 0xF];
    }
    return out;
  }

private:
  EVP_MD_CTX* ctx_;
};

} // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::int64_t manifest_clock() {
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    try {
      return std::stoll(env);
    } catch (const std::exception&) {
      throw ParameterError("SOURCE_DATE_EPOCH must be an integer");
    }
  }
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string format_rfc3339(std::int64_t seconds) {
  const std::chrono::sys_seconds tp{std::chrono::seconds{seconds}};
  const auto day = std::chrono::floor<std::chrono::days>(tp);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{tp - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

void write_manifest(std::ostream& out, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "vpath-manifest/1";
  j["tool"] = "vpath";
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  auto& params = j["parameters"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.parameters) params[k] = v;
  j["seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json();
  auto digests = [](const std::vector<FileDigest>& files) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return arr;
  };
  j["inputs"] = digests(m.inputs);
  j["outputs"] = digests(m.outputs);
  j["started_at"] = format_rfc3339(m.started);
  j["finished_at"] = format_rfc3339(m.finished);
  out << j.dump(2) << '\n';
}

} // namespace vpath
