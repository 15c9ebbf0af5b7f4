#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpath/geo.hpp"
#include "vpath/gmm.hpp"
#include "vpath/ingest.hpp"

namespace vpath {

inline constexpr int kAbsent = -1;

/// Equal-width bins along the axis from the west port to the east port.
struct SegmentScheme {
  LocalPoint axis_origin;    // west port
  LocalPoint axis_direction; // unit vector towards the east port
  std::vector<double> boundaries; // S+1 strictly increasing axis coordinates, meters

  std::size_t segments() const noexcept { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  double axis_coordinate(const LocalPoint& p) const noexcept;
  /// Segment index of an axis coordinate, or nullopt outside the boundaries.
  std::optional<std::size_t> segment_of(double t) const noexcept;
};

/// The two port centroids found by 2-means over every voyage's first and last
/// point, ordered west (smaller x) first.
std::pair<LocalPoint, LocalPoint> find_ports(std::span<const Voyage> voyages, const Projection& proj);

SegmentScheme build_scheme(std::span<const Voyage> train, std::size_t segments, const Projection& proj);

struct SegmentModels {
  Projection projection;
  SegmentScheme scheme;
  std::vector<GaussianMixture> models;
  std::size_t components = 0;
};

struct SegmentFitOptions {
  GmmOptions gmm;
  std::size_t min_points_per_component = 10;
  int threads = 0; // segments fitted concurrently
};

/// One mixture per segment over the projected training points in that segment.
/// Segment s is fitted with seed derive_seed(seed, s).
SegmentModels fit_segment_models(std::span<const Voyage> train, const SegmentScheme& scheme,
                                 const Projection& proj, std::size_t components, std::uint64_t seed,
                                 const SegmentFitOptions& options = {});

struct PathSignature {
  std::string voyage_id;
  std::vector<int> assignments;                   // component index or kAbsent
  std::vector<std::optional<double>> mean_loglik; // empty when absent
  std::size_t outside_points = 0;                 // points beyond the scheme boundaries
};

PathSignature signature(const Voyage& v, const SegmentModels& models);

using SignatureKey = std::vector<int>;

struct SignatureMap {
  std::vector<std::size_t> discriminative; // segment indices forming the key
  std::map<SignatureKey, std::string> entries;
  std::vector<std::optional<double>> floors; // per-segment novelty threshold on mean_loglik
  std::vector<std::string> labels;           // sorted label set
};

/// Key of a signature restricted to the discriminative segments.
SignatureKey signature_key(const PathSignature& s, const SignatureMap& map);

/// A segment is discriminative when the classes' modal assignments there are
/// not all equal. Keys map to the majority class; a tied majority is a MappingError.
SignatureMap learn_signature_map(std::span<const PathSignature> signatures, std::span<const std::string> labels,
                                 double floor_sigmas = 3.0);

struct Classification {
  std::string voyage_id;
  std::string label;
  bool novel = false;        // unseen key or a segment likelihood below its floor
  bool exact = false;        // key found in the map
  std::size_t hamming = 0;   // to the chosen key, over present segments
  std::vector<std::size_t> below_floor;
  double confidence = 0.0;   // mean of the present segments' mean_loglik
  PathSignature signature;
};

Classification classify_voyage(const Voyage& v, const SegmentModels& models, const SignatureMap& map);
Classification classify_signature(const PathSignature& sig, const SignatureMap& map);

/// `voyage_id,class_label,novel,exact,hamming,confidence,signature,seg1_loglik,...`
void write_classifications(std::ostream& out, std::span<const Classification> results, std::size_t segments);

struct SegmentModelFile {
  SegmentModels models;
  SignatureMap map;
};

void write_model_json(std::ostream& out, const SegmentModelFile& model);
SegmentModelFile read_model_json(std::istream& in);

} // namespace vpath
