#include "sv6d/objective.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "sv6d/error.h"

namespace sv6d {

namespace {

constexpr std::array<std::string_view, 5> kTaskTypeIds = {
    "temporal_grounding", "temporal_action_localization", "ocr", "chain_of_thought",
    "sv6d_composite"};

constexpr std::array<std::string_view, kNumFormatChecks> kFormatCheckIds = {
    "syntax", "shot_boundaries", "dimension_keys", "non_negative_timestamps",
    "ordered_timestamps", "numeric_fields"};

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

std::string_view to_string(TaskType type) noexcept {
  return kTaskTypeIds[static_cast<std::size_t>(type)];
}

std::optional<TaskType> parse_task_type(std::string_view id) noexcept {
  for (std::size_t i = 0; i < kTaskTypeIds.size(); ++i) {
    if (kTaskTypeIds[i] == id) return static_cast<TaskType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(FormatCheck check) noexcept {
  return kFormatCheckIds[static_cast<std::size_t>(check)];
}

RegularizerTerms regularize(std::string_view raw_output, const TaxonomyRegistry& registry,
                            const RegularizerConfig& config) {
  config.validate();
  std::array<bool, kNumFormatChecks> failed{};
  auto fail = [&](FormatCheck c) { failed[static_cast<std::size_t>(c)] = true; };

  RegularizerTerms terms;
  std::array<bool, kNumDimensions> dimension_present{};

  const nlohmann::json root = nlohmann::json::parse(raw_output, nullptr, false);
  if (root.is_discarded()) {
    failed.fill(true);
  } else {
    if (root.is_object()) {
      if (auto meta = root.find("meta"); meta != root.end() && meta->is_object()) {
        if (auto d = meta->find("duration_s"); d != meta->end() && !d->is_number()) {
          fail(FormatCheck::kNumericFields);
        }
      }
    }
    const nlohmann::json* shots = nullptr;
    if (root.is_object()) {
      if (auto it = root.find("shots"); it != root.end() && it->is_array() && !it->empty()) {
        shots = &*it;
      }
    }
    if (shots == nullptr) {
      fail(FormatCheck::kShotBoundaries);
      fail(FormatCheck::kDimensionKeys);
    } else {
      for (const auto& shot : *shots) {
        if (!shot.is_object()) {
          fail(FormatCheck::kShotBoundaries);
          fail(FormatCheck::kDimensionKeys);
          continue;
        }
        const auto s = shot.find("start_s");
        const auto e = shot.find("end_s");
        if (s == shot.end() || e == shot.end()) fail(FormatCheck::kShotBoundaries);
        const bool s_num = s != shot.end() && s->is_number();
        const bool e_num = e != shot.end() && e->is_number();
        if ((s != shot.end() && !s_num) || (e != shot.end() && !e_num)) {
          fail(FormatCheck::kNumericFields);
        }
        if ((s_num && s->get<double>() < 0.0) || (e_num && e->get<double>() < 0.0)) {
          fail(FormatCheck::kNonNegativeTimestamps);
        }
        if (s_num && e_num && !(s->get<double>() < e->get<double>())) {
          fail(FormatCheck::kOrderedTimestamps);
        }

        const auto labels = shot.find("labels");
        if (labels == shot.end() || !labels->is_object() || labels->empty()) {
          fail(FormatCheck::kDimensionKeys);
          continue;
        }
        for (const auto& [dim_id, subs] : labels->items()) {
          const auto dim = parse_dimension(dim_id);
          if (!dim) fail(FormatCheck::kDimensionKeys);
          if (!subs.is_object()) {
            fail(FormatCheck::kDimensionKeys);
            continue;
          }
          auto count = [&](const nlohmann::json& leaf) {
            ++terms.labels_total;
            if (dim) dimension_present[index_of(*dim)] = true;
            if (!leaf.is_string() || !registry.is_canonical_tag(leaf.get<std::string>())) {
              ++terms.labels_oov;
            }
          };
          for (const auto& [sub_id, value] : subs.items()) {
            if (value.is_array()) {
              for (const auto& leaf : value) count(leaf);
            } else if (!value.is_null()) {
              count(value);
            }
          }
        }
      }
    }
  }

  for (std::size_t c = 0; c < kNumFormatChecks; ++c) {
    if (failed[c]) terms.failed_checks.push_back(static_cast<FormatCheck>(c));
  }
  terms.r_form = static_cast<double>(terms.failed_checks.size()) / kNumFormatChecks;
  terms.r_prof = terms.labels_total == 0 ? 1.0
                                         : static_cast<double>(terms.labels_oov) /
                                               static_cast<double>(terms.labels_total);
  const auto absent = std::count(dimension_present.begin(), dimension_present.end(), false);
  terms.r_comp = static_cast<double>(absent) / static_cast<double>(kNumDimensions);
  terms.l_reg = config.lambda_p * terms.r_prof + config.lambda_c * terms.r_comp +
                config.lambda_f * terms.r_form;
  return terms;
}

double l_struct(const AlignmentResult& alignment, const StructuralDocument& pred,
                const StructuralDocument& truth, const AlignmentConfig& config,
                const TaxonomyRegistry& registry, OovPolicy policy) {
  if (alignment.matches.empty()) return 1.0;
  std::array<double, kNumDimensions> sums{};
  for (const auto& [i, j] : alignment.matches) {
    if (i >= pred.shots.size() || j >= truth.shots.size()) {
      throw Error(ErrorKind::kInvalidArgument, "alignment does not belong to these documents");
    }
    const auto d = dimension_distances(pred.shots[i].labels, truth.shots[j].labels, registry, policy);
    for (std::size_t k = 0; k < kNumDimensions; ++k) sums[k] += d[k];
  }
  const double m = static_cast<double>(alignment.matches.size());
  double total = 0.0;
  for (std::size_t k = 0; k < kNumDimensions; ++k) total += config.weights[k] * (sums[k] / m);
  return clamp01(total);
}

nlohmann::json to_json(const RewardBreakdown& b) {
  nlohmann::json j = {{"task_type", to_string(b.task_type)},
                      {"format_score", b.format_score},
                      {"iou_score", b.iou_score},
                      {"label_score", b.label_score},
                      {"r_prof", b.r_prof},
                      {"r_comp", b.r_comp},
                      {"r_form", b.r_form},
                      {"l_align", b.l_align},
                      {"l_struct", b.l_struct},
                      {"l_reg", b.l_reg},
                      {"l_sv6d", b.l_sv6d},
                      {"normalized_loss", b.normalized_loss},
                      {"reward", b.reward},
                      {"failed_checks", b.failed_checks}};
  if (b.similarity_score) j["similarity_score"] = *b.similarity_score;
  if (b.judge_score) j["judge_score"] = *b.judge_score;
  return j;
}

RewardBreakdown sv6d_loss(std::string_view pred_output,
                          const std::optional<StructuralDocument>& pred,
                          const StructuralDocument& truth, const LossConfig& config,
                          const TaxonomyRegistry& registry) {
  config.validate();
  const auto report = validate_document(truth, registry);
  if (!report.ok()) {
    throw Error(ErrorKind::kInvalidDocument,
                "reference document is invalid: " + report.violations.front().describe(),
                "reference");
  }

  RewardBreakdown out;
  out.task_type = TaskType::kSv6dComposite;
  const RegularizerTerms reg = regularize(pred_output, registry, config.regularizer);
  out.r_prof = reg.r_prof;
  out.r_comp = reg.r_comp;
  out.r_form = reg.r_form;
  out.l_reg = reg.l_reg;
  for (FormatCheck c : reg.failed_checks) out.failed_checks.emplace_back(to_string(c));
  out.format_score = 1.0 - reg.r_form;

  const std::optional<StructuralDocument> parsed = pred ? pred : parse_prediction(pred_output);
  const double beta = config.alignment.beta;
  if (parsed) {
    const AlignmentResult a = align(*parsed, truth, config.alignment, registry, OovPolicy::kMaxDistance);
    out.l_align = a.l_align;
    out.l_struct = l_struct(a, *parsed, truth, config.alignment, registry, OovPolicy::kMaxDistance);
    out.iou_score = clamp01(a.mean_iou * (1.0 - a.cardinality_fraction));
    if (!a.matches.empty()) {
      double sum = 0.0;
      for (double d : a.per_pair_label_distance) sum += d;
      out.label_score = clamp01(1.0 - sum / static_cast<double>(a.matches.size()));
    }
  } else {
    out.l_align = 1.0 + beta;
    out.l_struct = 1.0;
  }
  out.l_sv6d = out.l_align + out.l_struct + out.l_reg;
  out.normalized_loss =
      clamp01((out.l_align / (1.0 + beta) + out.l_struct + out.l_reg / config.regularizer.total()) /
              3.0);
  out.reward = 1.0 - out.normalized_loss;
  return out;
}

RewardBreakdown grounding_reward(std::string_view rollout, const StructuralDocument& truth,
                                 const LossConfig& config, const TaxonomyRegistry& registry) {
  RewardBreakdown out = sv6d_loss(rollout, std::nullopt, truth, config, registry);
  out.task_type = TaskType::kTemporalGrounding;
  out.reward = 0.2 * out.format_score + 0.4 * out.iou_score + 0.4 * out.label_score;
  return out;
}

namespace {

struct ParsedSpans {
  std::vector<SemanticShot> valid;
  std::vector<std::string> failed_checks;
  std::size_t n_checks = 5;
};

ParsedSpans parse_spans(std::string_view rollout) {
  ParsedSpans out;
  bool syntax = true, present = true, numeric = true, non_negative = true, ordered = true;
  const nlohmann::json root = nlohmann::json::parse(rollout, nullptr, false);
  const nlohmann::json* spans = nullptr;
  if (root.is_discarded()) {
    syntax = present = numeric = non_negative = ordered = false;
  } else {
    if (root.is_array()) {
      spans = &root;
    } else if (root.is_object()) {
      if (auto it = root.find("spans"); it != root.end() && it->is_array()) spans = &*it;
    }
    if (spans == nullptr || spans->empty()) present = false;
  }
  if (spans != nullptr) {
    for (const auto& span : *spans) {
      const nlohmann::json* s = nullptr;
      const nlohmann::json* e = nullptr;
      if (span.is_array() && span.size() == 2) {
        s = &span[0];
        e = &span[1];
      } else if (span.is_object() && span.contains("start_s") && span.contains("end_s")) {
        s = &span["start_s"];
        e = &span["end_s"];
      } else {
        present = false;
        continue;
      }
      if (!s->is_number() || !e->is_number()) {
        numeric = false;
        continue;
      }
      const double a = s->get<double>();
      const double b = e->get<double>();
      bool ok = true;
      if (a < 0.0 || b < 0.0) non_negative = ok = false;
      if (!(a < b)) ordered = ok = false;
      if (ok) out.valid.push_back({a, b});
    }
  }
  if (!syntax) out.failed_checks.emplace_back("syntax");
  if (!present) out.failed_checks.emplace_back("spans_present");
  if (!numeric) out.failed_checks.emplace_back("numeric_fields");
  if (!non_negative) out.failed_checks.emplace_back("non_negative_timestamps");
  if (!ordered) out.failed_checks.emplace_back("ordered_timestamps");
  return out;
}

}  // namespace

RewardBreakdown localization_reward(std::string_view rollout,
                                    const std::vector<SemanticShot>& truth_spans) {
  for (const auto& s : truth_spans) {
    if (!(s.start_s < s.end_s)) {
      throw Error(ErrorKind::kInvalidArgument, "reference span needs start < end", "reference");
    }
  }
  const ParsedSpans parsed = parse_spans(rollout);
  RewardBreakdown out;
  out.task_type = TaskType::kTemporalActionLocalization;
  out.failed_checks = parsed.failed_checks;
  out.r_form = static_cast<double>(parsed.failed_checks.size()) / static_cast<double>(parsed.n_checks);
  out.format_score = 1.0 - out.r_form;

  CostMatrix costs(parsed.valid.size(), truth_spans.size());
  for (std::size_t i = 0; i < parsed.valid.size(); ++i) {
    for (std::size_t j = 0; j < truth_spans.size(); ++j) {
      costs(i, j) = 1.0 - temporal_iou(parsed.valid[i], truth_spans[j]);
    }
  }
  const Assignment assignment = hungarian_match(costs);
  double iou_sum = 0.0;
  for (const auto& [i, j] : assignment.pairs) iou_sum += temporal_iou(parsed.valid[i], truth_spans[j]);
  const std::size_t larger = std::max(parsed.valid.size(), truth_spans.size());
  const std::size_t diff = parsed.valid.size() > truth_spans.size()
                               ? parsed.valid.size() - truth_spans.size()
                               : truth_spans.size() - parsed.valid.size();
  const double fraction = larger == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(larger);
  const double mean_iou =
      assignment.pairs.empty() ? 0.0 : iou_sum / static_cast<double>(assignment.pairs.size());
  out.iou_score = clamp01(mean_iou * (1.0 - fraction));
  out.reward = 0.2 * out.format_score + 0.8 * out.iou_score;
  return out;
}

namespace {

// Lenient UTF-8 decoding; stray bytes map to distinct private values.
std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      out.push_back(0x110000 + c);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::u32string x = decode_utf8(a);
  const std::u32string y = decode_utf8(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

double edit_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(decode_utf8(a).size(), decode_utf8(b).size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

RewardBreakdown ocr_reward(std::string_view predicted, std::string_view reference) {
  RewardBreakdown out;
  out.task_type = TaskType::kOcr;
  out.format_score = 1.0;
  out.similarity_score = edit_similarity(predicted, reference);
  out.reward = *out.similarity_score;
  return out;
}

RewardBreakdown chain_of_thought_reward(std::string_view rollout, std::string_view reference,
                                        const JudgeProvider* judge) {
  if (judge == nullptr) {
    throw Error(ErrorKind::kUnsupported, "chain_of_thought rewards need a configured judge",
                "task_type");
  }
  RewardBreakdown out;
  out.task_type = TaskType::kChainOfThought;

  const std::string text(rollout);
  const bool non_empty = std::any_of(text.begin(), text.end(),
                                     [](unsigned char c) { return !std::isspace(c); });
  const auto think_open = text.find("<think>");
  const auto think_close = text.find("</think>");
  const bool think = think_open != std::string::npos && think_close != std::string::npos &&
                     think_open < think_close &&
                     text.find("<think>", think_open + 1) == std::string::npos;
  const auto answer_open = text.find("<answer>");
  const auto answer_close = text.find("</answer>");
  bool answer = answer_open != std::string::npos && answer_close != std::string::npos &&
                answer_open < answer_close;
  if (answer) {
    const auto body = text.substr(answer_open + 8, answer_close - answer_open - 8);
    answer = std::any_of(body.begin(), body.end(), [](unsigned char c) { return !std::isspace(c); });
  }
  const bool order = think && answer_open != std::string::npos && think_close < answer_open;
  if (!non_empty) out.failed_checks.emplace_back("non_empty");
  if (!think) out.failed_checks.emplace_back("think_block");
  if (!answer) out.failed_checks.emplace_back("answer_block");
  if (!order) out.failed_checks.emplace_back("think_before_answer");
  out.r_form = static_cast<double>(out.failed_checks.size()) / 4.0;
  out.format_score = 1.0 - out.r_form;

  const double judged = judge->score(rollout, reference);
  if (!(judged >= 0.0 && judged <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "judge score must lie in [0, 1]");
  }
  out.judge_score = judged;
  out.reward = 0.3 * out.format_score + 0.7 * judged;
  return out;
}

RewardBreakdown task_reward(const RewardTask& task, const LossConfig& config,
                            const TaxonomyRegistry& registry, const JudgeProvider* judge) {
  auto mismatch = [&](const char* expected) -> Error {
    return Error(ErrorKind::kInvalidArgument,
                 std::string(to_string(task.type)) + " expects " + expected + " as reference",
                 "reference");
  };
  switch (task.type) {
    case TaskType::kTemporalGrounding:
    case TaskType::kSv6dComposite: {
      const auto* doc = std::get_if<StructuralDocument>(&task.reference);
      if (doc == nullptr) throw mismatch("a structural document");
      if (task.type == TaskType::kTemporalGrounding) {
        return grounding_reward(task.rollout, *doc, config, registry);
      }
      return sv6d_loss(task.rollout, std::nullopt, *doc, config, registry);
    }
    case TaskType::kTemporalActionLocalization: {
      const auto* spans = std::get_if<std::vector<SemanticShot>>(&task.reference);
      if (spans == nullptr) throw mismatch("a list of spans");
      return localization_reward(task.rollout, *spans);
    }
    case TaskType::kOcr: {
      const auto* text = std::get_if<std::string>(&task.reference);
      if (text == nullptr) throw mismatch("a text string");
      return ocr_reward(task.rollout, *text);
    }
    case TaskType::kChainOfThought: {
      const auto* text = std::get_if<std::string>(&task.reference);
      if (text == nullptr) throw mismatch("a text string");
      return chain_of_thought_reward(task.rollout, *text, judge);
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown task type");
}

}  // namespace sv6d
