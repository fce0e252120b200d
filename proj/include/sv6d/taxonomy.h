#pragma once

// Closed label vocabularies for the six structural dimensions, their ordinal
// orderings and confusion graphs, plus the skeleton taxonomies.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

namespace sv6d {

// Order matches the weight vector w_1..w_6 used by the objective.
enum class Dimension {
  kCameraLanguage = 0,
  kAesthetics = 1,
  kEditing = 2,
  kSubject = 3,
  kNarrative = 4,
  kDissemination = 5,
};

inline constexpr std::size_t kNumDimensions = 6;
inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::kCameraLanguage, Dimension::kAesthetics, Dimension::kEditing,
    Dimension::kSubject,        Dimension::kNarrative,  Dimension::kDissemination};

std::string_view to_string(Dimension dim) noexcept;
std::optional<Dimension> parse_dimension(std::string_view id) noexcept;
inline std::size_t index_of(Dimension dim) noexcept { return static_cast<std::size_t>(dim); }

enum class SubDimensionKind { kOrdinal, kCategorical };

// Lowercases ASCII, trims, and collapses internal whitespace runs to one space.
std::string normalize_tag(std::string_view tag);

class SubDimension {
 public:
  using Edge = std::pair<std::string, std::string>;

  // Throws Error(kTaxonomy) on an empty label list, duplicate labels, confusion
  // edges with unknown endpoints, or edges declared on an ordinal sub-dimension.
  SubDimension(std::string id, SubDimensionKind kind, bool multi_valued,
               std::vector<std::string> labels, std::vector<Edge> confusion_edges = {},
               std::vector<std::string> synthetic = {});

  const std::string& id() const noexcept { return id_; }
  SubDimensionKind kind() const noexcept { return kind_; }
  bool multi_valued() const noexcept { return multi_valued_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<Edge>& confusion_edges() const noexcept { return edges_; }
  const std::vector<std::string>& synthetic() const noexcept { return synthetic_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::optional<std::size_t> find(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label).has_value(); }

  // Hop count on the confusion graph (categorical) or rank difference
  // (ordinal); nullopt when the two labels are disconnected.
  std::optional<std::size_t> hops(std::size_t a, std::size_t b) const;

  // Normalized distance in [0,1]; see label_distance().
  double distance(std::size_t a, std::size_t b) const { return distance_[a * size() + b]; }

  // Labels at exactly `radius` hops (or ranks) from `label`, in label order.
  std::vector<std::size_t> shell(std::size_t label, std::size_t radius) const;

 private:
  std::string id_;
  SubDimensionKind kind_;
  bool multi_valued_;
  std::vector<std::string> labels_;
  std::vector<Edge> edges_;
  std::vector<std::string> synthetic_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> hops_;  // size()*size(); kUnreachable when disconnected
  std::vector<double> distance_;
};

struct DimensionSpec {
  Dimension id;
  std::vector<SubDimension> sub_dimensions;
  std::optional<std::size_t> declared_label_count;

  const SubDimension* find(std::string_view sub) const noexcept;
  std::size_t label_count() const noexcept;
};

// A framing x configuration style pairing that annotators must never emit.
struct InvalidCombination {
  Dimension dimension;
  std::string first_sub;
  std::string first_label;
  std::string second_sub;
  std::string second_label;
};

class TaxonomyRegistry {
 public:
  static TaxonomyRegistry from_json(const nlohmann::json& config);
  static TaxonomyRegistry from_text(std::string_view text);
  static TaxonomyRegistry load_file(const std::filesystem::path& path);

  // The registry compiled into the library from data/taxonomy/default.json.
  static const TaxonomyRegistry& builtin();

  nlohmann::json to_json() const;
  const std::string& version() const noexcept { return version_; }
  // SHA-256 of the canonical JSON serialization.
  const std::string& digest() const noexcept { return digest_; }

  const DimensionSpec& dimension(Dimension dim) const { return dimensions_[index_of(dim)]; }
  const std::array<DimensionSpec, kNumDimensions>& dimensions() const noexcept {
    return dimensions_;
  }
  // Throws Error(kUnknownLabel) when the sub-dimension does not exist.
  const SubDimension& sub_dimension(Dimension dim, std::string_view sub) const;

  const std::map<std::string, std::vector<std::string>>& skeleton_taxonomies() const noexcept {
    return skeletons_;
  }
  const std::vector<std::string>* skeleton_labels(std::string_view taxonomy) const;

  const std::vector<InvalidCombination>& invalid_combinations() const noexcept {
    return invalid_combinations_;
  }

  // True when normalize_tag(tag) equals a normalized canonical tag of any dimension.
  bool is_canonical_tag(std::string_view tag) const;

 private:
  TaxonomyRegistry() = default;

  std::string version_;
  std::array<DimensionSpec, kNumDimensions> dimensions_;
  std::map<std::string, std::vector<std::string>> skeletons_;
  std::vector<InvalidCombination> invalid_combinations_;
  std::unordered_set<std::string> normalized_tags_;
  std::string digest_;
};

// Ordinal: |rank(a) - rank(b)| / (m - 1), 0 when m == 1.
// Categorical: confusion-graph hop count divided by the diameter of the
// connected component holding both labels; 1 for disconnected pairs.
// Throws Error(kUnknownLabel) for an unknown sub-dimension or label.
double label_distance(const TaxonomyRegistry& registry, Dimension dim, std::string_view sub,
                      std::string_view a, std::string_view b);

// Distance-1 shell around `label`, in label order; never contains `label`.
std::vector<std::string> confusion_neighborhood(const TaxonomyRegistry& registry, Dimension dim,
                                                std::string_view sub, std::string_view label);

}  // namespace sv6d
