#pragma once

// The observed structural document: a shot partition of the timeline with a
// six-dimension label vector and a skeleton label per shot.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sv6d/taxonomy.h"

namespace sv6d {

// Absolute tolerance (seconds) for partition adjacency and coverage checks.
inline constexpr double kTimestampTolerance = 1e-3;

struct Resolution {
  int width = 0;
  int height = 0;
  bool operator==(const Resolution&) const = default;
};

struct VideoMeta {
  double duration_s = 0.0;
  std::optional<double> frame_rate;
  std::optional<Resolution> resolution;
  std::optional<std::string> platform;
  std::optional<bool> is_aigc;
  bool operator==(const VideoMeta&) const = default;
};

struct SemanticShot {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const noexcept { return end_s - start_s; }
  bool operator==(const SemanticShot&) const = default;
};

// A single tag, or a tag set for multi-valued sub-dimensions. Set order is
// kept as written so that serialization round-trips.
struct LabelValue {
  std::vector<std::string> labels;
  bool is_set = false;

  static LabelValue single(std::string label) { return {{std::move(label)}, false}; }
  static LabelValue set(std::vector<std::string> labels) { return {std::move(labels), true}; }
  bool operator==(const LabelValue&) const = default;
};

using SubDimensionLabels = std::map<std::string, LabelValue>;
using ShotLabelVector = std::map<Dimension, SubDimensionLabels>;

struct ShotRecord {
  SemanticShot span;
  ShotLabelVector labels;
  std::string skeleton;
  std::map<Dimension, std::string> evidence;  // optional free text per dimension
  bool operator==(const ShotRecord&) const = default;
};

struct StructuralDocument {
  VideoMeta meta;
  std::string skeleton_taxonomy;
  std::vector<ShotRecord> shots;
  bool operator==(const StructuralDocument&) const = default;
};

enum class ViolationKind {
  kNonPositiveDuration,
  kNoShots,
  kNegativeTimestamp,
  kEmptyInterval,
  kStartNotAtZero,
  kEndNotAtDuration,
  kGap,
  kOverlap,
  kUnknownSkeletonTaxonomy,
  kUnknownSkeletonLabel,
  kUnknownSubDimension,
  kOutOfVocabulary,
  kEmptyLabelSet,
  kSetOnSingleValued,
  kInvalidCombination,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::string message;
  std::optional<std::size_t> shot;
  // Timeline location of the problem, when it has one.
  std::optional<double> t_start;
  std::optional<double> t_end;

  std::string describe() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

// Total: never throws for document content; every problem becomes a Violation.
ValidationReport validate_document(const StructuralDocument& doc, const TaxonomyRegistry& registry);

// Registry-free subset of the checks: duration, interval sanity, partition.
std::vector<Violation> check_partition(const StructuralDocument& doc);

struct SkeletonSegment {
  std::string seg_type;
  std::size_t first_shot = 0;  // inclusive, 0-based
  std::size_t last_shot = 0;   // inclusive, 0-based
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const SkeletonSegment&) const = default;
};

// Maximal contiguous merging of per-shot skeleton labels. Throws
// Error(kInvalidDocument) when the shots do not partition the timeline.
std::vector<SkeletonSegment> derive_skeleton(const StructuralDocument& doc);

// Expands segments back to one skeleton label per shot.
std::vector<std::string> flatten_skeleton(std::span<const SkeletonSegment> segments);

// Strict parse of the canonical file format; throws Error(kParse) naming the field.
StructuralDocument parse_document(const nlohmann::json& j);
StructuralDocument parse_document_text(std::string_view text);
StructuralDocument load_document(const std::filesystem::path& path);
nlohmann::json to_json(const StructuralDocument& doc);

// Best-effort parse of model output: nullopt when the text is not JSON;
// otherwise keeps every shot with numeric, ordered, non-negative bounds and
// every string-valued label, dropping the rest. The result may have no shots.
std::optional<StructuralDocument> parse_prediction(std::string_view raw_output);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace sv6d
