#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vpath/error.hpp"
#include "vpath/manifest.hpp"

using namespace vpath;

TEST_CASE("sha256 digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto path = std::filesystem::temp_directory_path() / "vpath_digest_test.txt";
  std::ofstream(path) << "abc";
  CHECK(sha256_file(path.string()) == sha256_hex("abc"));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(sha256_file("/nonexistent/file"), IoError);
}

TEST_CASE("timestamps") {
  CHECK(format_rfc3339(1600000000) == "2020-09-13T12:26:40Z");
  CHECK(format_rfc3339(0) == "1970-01-01T00:00:00Z");
  ::setenv("SOURCE_DATE_EPOCH", "1234567890", 1);
  CHECK(manifest_clock() == 1234567890);
  ::unsetenv("SOURCE_DATE_EPOCH");
  CHECK(manifest_clock() > 1600000000);
}

TEST_CASE("manifest JSON carries parameters, seed, digests and version") {
  RunManifest m;
  m.command = "cluster";
  m.parameters = {{"method", "kmeans"}, {"k", "5"}};
  m.seed = 3;
  m.inputs = {{"matrix.csv", sha256_hex("x")}};
  m.outputs = {{"assignment.csv", sha256_hex("y")}};
  m.started = 1600000000;
  m.finished = 1600000001;
  std::ostringstream out;
  write_manifest(out, m);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j.at("format") == "vpath-manifest/1");
  CHECK(j.at("command") == "cluster");
  CHECK(j.at("seed") == 3);
  CHECK(j.at("tool_version") == std::string(kToolVersion));
  CHECK(j.at("started_at") == "2020-09-13T12:26:40Z");
  CHECK(j.dump().find(sha256_hex("x")) != std::string::npos);
  CHECK(j.dump().find("assignment.csv") != std::string::npos);

  std::ostringstream again;
  write_manifest(again, m);
  CHECK(again.str() == out.str());
}
