#pragma once

// The composite structural loss (alignment + dimension-wise label matching +
// quality regularization) and the per-task verifiable rewards built on it.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sv6d/alignment.h"
#include "sv6d/config.h"
#include "sv6d/document.h"
#include "sv6d/taxonomy.h"

namespace sv6d {

enum class TaskType {
  kTemporalGrounding,
  kTemporalActionLocalization,
  kOcr,
  kChainOfThought,
  // r = 1 - normalized composite loss, without the per-task weighting.
  kSv6dComposite,
};

std::string_view to_string(TaskType type) noexcept;
std::optional<TaskType> parse_task_type(std::string_view id) noexcept;

// Deterministic checks applied to a structured prediction. R_form is the
// fraction of these that fail.
enum class FormatCheck {
  kSyntax,                 // text parses as JSON
  kShotBoundaries,         // non-empty "shots", each with start_s and end_s
  kDimensionKeys,          // each shot has non-empty "labels" keyed by known dimensions
  kNonNegativeTimestamps,  // numeric timestamps are >= 0
  kOrderedTimestamps,      // start_s < end_s wherever both are numeric
  kNumericFields,          // start_s, end_s, meta.duration_s are numbers
};
inline constexpr std::size_t kNumFormatChecks = 6;
std::string_view to_string(FormatCheck check) noexcept;

struct RegularizerTerms {
  double r_prof = 0.0;  // out-of-vocabulary fraction of predicted labels (1 if none predicted)
  double r_comp = 0.0;  // dimensions with no label at all, divided by 6
  double r_form = 0.0;  // failed format checks, divided by 6
  double l_reg = 0.0;   // lambda_p * r_prof + lambda_c * r_comp + lambda_f * r_form
  std::size_t labels_total = 0;
  std::size_t labels_oov = 0;
  std::vector<FormatCheck> failed_checks;
};

// Total over arbitrary text. Tags match canonical ones case-insensitively
// after whitespace normalization.
RegularizerTerms regularize(std::string_view raw_output, const TaxonomyRegistry& registry,
                            const RegularizerConfig& config);

// Sum_k w_k * mean over matched pairs of d_k; 1 when nothing is matched.
double l_struct(const AlignmentResult& alignment, const StructuralDocument& pred,
                const StructuralDocument& truth, const AlignmentConfig& config,
                const TaxonomyRegistry& registry, OovPolicy policy = OovPolicy::kThrow);

struct RewardBreakdown {
  TaskType task_type = TaskType::kSv6dComposite;
  double format_score = 0.0;
  double iou_score = 0.0;
  double label_score = 0.0;
  std::optional<double> similarity_score;  // OCR
  std::optional<double> judge_score;       // chain-of-thought
  double r_prof = 0.0;
  double r_comp = 0.0;
  double r_form = 0.0;
  double l_align = 0.0;
  double l_struct = 0.0;
  double l_reg = 0.0;
  double l_sv6d = 0.0;           // raw l_align + l_struct + l_reg
  double normalized_loss = 0.0;  // (l_align/(1+beta) + l_struct + l_reg/sum(lambda)) / 3
  double reward = 0.0;
  std::vector<std::string> failed_checks;
};

nlohmann::json to_json(const RewardBreakdown& breakdown);

// Composite loss for one rollout. `pred` overrides parsing of `pred_output`
// when the caller already holds a document; unknown labels in the prediction
// count as maximally distant. An unparseable prediction takes the worst-case
// conventions l_align = 1 + beta and l_struct = 1. Throws
// Error(kInvalidDocument) when `truth` fails validation.
RewardBreakdown sv6d_loss(std::string_view pred_output,
                          const std::optional<StructuralDocument>& pred,
                          const StructuralDocument& truth, const LossConfig& config,
                          const TaxonomyRegistry& registry);

// Pluggable scorer for free-form reasoning rollouts; must return a value in [0,1].
class JudgeProvider {
 public:
  virtual ~JudgeProvider() = default;
  virtual double score(std::string_view rollout, std::string_view reference) const = 0;
};

// 0.2 Format + 0.4 IoU + 0.4 Label over the composite-loss components.
RewardBreakdown grounding_reward(std::string_view rollout, const StructuralDocument& truth,
                                 const LossConfig& config, const TaxonomyRegistry& registry);

// 0.2 Format + 0.8 IoU. The rollout is JSON: {"spans": [[start, end], ...]}
// or a bare array of [start, end] pairs.
RewardBreakdown localization_reward(std::string_view rollout,
                                    const std::vector<SemanticShot>& truth_spans);

// 1 - EditDistance / max(length) over Unicode code points; 1 for two empty strings.
RewardBreakdown ocr_reward(std::string_view predicted, std::string_view reference);

// 0.3 Format + 0.7 Judge. Format checks a <think>...</think> block followed
// by a non-empty <answer>...</answer>. Throws Error(kUnsupported) without a judge.
RewardBreakdown chain_of_thought_reward(std::string_view rollout, std::string_view reference,
                                        const JudgeProvider* judge);

std::size_t edit_distance(std::string_view a, std::string_view b);
double edit_similarity(std::string_view a, std::string_view b);

using RewardReference =
    std::variant<std::monostate, StructuralDocument, std::vector<SemanticShot>, std::string>;

struct RewardTask {
  TaskType type = TaskType::kTemporalGrounding;
  std::string rollout;
  RewardReference reference;
};

// Dispatches on task type. Throws Error(kInvalidArgument) when the reference
// shape does not fit the task type.
RewardBreakdown task_reward(const RewardTask& task, const LossConfig& config,
                            const TaxonomyRegistry& registry, const JudgeProvider* judge = nullptr);

}  // namespace sv6d
