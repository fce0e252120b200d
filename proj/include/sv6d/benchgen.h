#pragma once

// Multiple-choice item generation from structural documents. Every item has
// four label options A-D plus a fixed abstain option E; distractors are
// drawn from the confusion neighborhood of the truth first.

#include <array>
#include <map>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sv6d/document.h"
#include "sv6d/taxonomy.h"

namespace sv6d {

inline constexpr std::string_view kAbstainText = "none of the above / cannot determine";
inline constexpr std::string_view kAnchorPlaceholder = "{anchor}";
inline constexpr std::string_view kSequenceSeparator = " → ";
inline constexpr std::string_view kSetSeparator = "; ";

enum class AnswerType { kSingle, kMulti, kOrdered };
std::string_view to_string(AnswerType type) noexcept;
std::optional<AnswerType> parse_answer_type(std::string_view id) noexcept;

// Temporal distractor kinds for ordered items, in generation preference order.
enum class TrapKind { kReversal, kStasis, kSubstitution, kSkip };
std::string_view to_string(TrapKind kind) noexcept;
std::optional<TrapKind> parse_trap_kind(std::string_view id) noexcept;

// An interval [start_s, end_s], or a single timestamp when end_s is absent.
struct Anchor {
  double start_s = 0.0;
  std::optional<double> end_s;
  bool operator==(const Anchor&) const = default;
};

std::string render_anchor(const Anchor& anchor);

struct ItemConfig {
  std::string task_id;
  Dimension dimension = Dimension::kCameraLanguage;
  // When empty, the unique sub-dimension whose vocabulary holds every truth
  // label is used.
  std::string sub_dimension;
  std::string template_text;
  Anchor anchor;
  std::vector<std::string> truth;  // one label, a label set, or a sequence
  std::string evidence;
  AnswerType answer_type = AnswerType::kSingle;
  std::uint64_t seed = 0;
  std::optional<double> duration_s;  // bounds the anchor when known
};

struct Option {
  char key = 'A';
  std::vector<std::string> atoms;  // empty for E
  std::string text;
  bool operator==(const Option&) const = default;
};

struct BenchItem {
  std::string id;
  Dimension dimension = Dimension::kCameraLanguage;
  std::string sub_dimension;
  AnswerType answer_type = AnswerType::kSingle;
  Anchor anchor;
  std::string stem;
  std::array<Option, 5> options;
  char answer_key = 'E';
  bool hard = false;
  bool legality_fallback = false;
  std::vector<TrapKind> traps;  // distinct kinds among the distractors, in preference order
  std::vector<std::string> truth;
  bool operator==(const BenchItem&) const = default;
};

nlohmann::json to_json(const BenchItem& item);
BenchItem parse_bench_item(const nlohmann::json& j);

// Sub-dimension whose vocabulary the item draws on. Throws
// Error(kGeneration) when none or several fit the truth.
const SubDimension& resolve_sub_dimension(const ItemConfig& cfg, const TaxonomyRegistry& registry);

// Deterministic in (cfg, cfg.seed). Throws Error(kGeneration) when the
// template lacks "{anchor}", the stem would leak a label or the evidence,
// the label space cannot supply four distinct options, the truth has no
// confusion neighbor, or an ordered truth is too short for two trap kinds;
// Error(kInvalidArgument) for a malformed config.
BenchItem generate_item(const ItemConfig& cfg, const TaxonomyRegistry& registry);

struct InvariantViolation {
  std::string invariant;  // "I1" .. "I7", or "config"
  std::string message;
};

// Re-derives every invariant from the registry without the generator's helpers.
std::vector<InvariantViolation> verify_item(const BenchItem& item, const ItemConfig& cfg,
                                            const TaxonomyRegistry& registry);

// ---- suites ---------------------------------------------------------------

struct PlanTask {
  Dimension dimension = Dimension::kCameraLanguage;
  std::string sub_dimension;
  AnswerType answer_type = AnswerType::kSingle;
  std::size_t count = 0;
  std::size_t sequence_length = 3;  // ordered items only
  std::string template_text;        // default template when empty
};

struct Plan {
  std::vector<PlanTask> tasks;
  std::vector<ItemConfig> items;  // explicit configurations, generated as given
  std::optional<std::uint64_t> seed;
};

// Throws Error(kConfig) naming the field: empty plan, unknown dimension,
// unknown sub-dimension, bad answer type.
Plan parse_plan(const nlohmann::json& j, const TaxonomyRegistry& registry);

struct SkippedItem {
  std::string task_id;
  std::string reason;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string registry_version;
  std::size_t n_items = 0;
  std::map<std::string, std::size_t> per_dimension;
  std::map<std::string, std::size_t> per_answer_type;
  std::map<std::string, std::size_t> hard_per_dimension;
  std::size_t n_hard = 0;
  std::vector<SkippedItem> skipped;
};

struct Suite {
  std::vector<BenchItem> items;
  std::vector<ItemConfig> configs;  // parallel to items; not serialized
  Manifest manifest;
};

// Anchors and truths are sampled from `docs` per task; every item seeds
// itself from (seed, task_id), so output is independent of generation order.
// Throws Error(kInvalidDocument) when a document fails validation.
Suite generate_suite(const std::vector<StructuralDocument>& docs, const Plan& plan,
                     std::uint64_t seed, const TaxonomyRegistry& registry);

nlohmann::json to_json(const Manifest& manifest);
nlohmann::json to_json(const Suite& suite);
// Canonical serialization; byte-identical for identical inputs.
std::string serialize_suite(const Suite& suite);
Suite parse_suite(const nlohmann::json& j);

}  // namespace sv6d
