#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>

#include "support.h"
#include "sv6d/error.h"
#include "sv6d/objective.h"

using namespace sv6d;
using sv6d::fixtures::random_document;
using sv6d::fixtures::toy_registry;

namespace {

ShotLabelVector toy_labels() {
  return {{Dimension::kCameraLanguage,
           {{"shot_size", LabelValue::single("s2")}, {"movement", LabelValue::set({"pan"})}}},
          {Dimension::kAesthetics, {{"tone", LabelValue::single("mid key")}}},
          {Dimension::kEditing, {{"logic", LabelValue::single("x")}}},
          {Dimension::kSubject, {{"config", LabelValue::single("one")}}},
          {Dimension::kNarrative, {{"function", LabelValue::single("opening")}}},
          {Dimension::kDissemination, {{"hook", LabelValue::single("reveal")}}}};
}

StructuralDocument toy_doc(std::size_t n) {
  StructuralDocument doc;
  doc.skeleton_taxonomy = "dramatic_arc";
  for (std::size_t i = 0; i < n; ++i) doc.shots.push_back({{double(i), double(i + 1)}, toy_labels(), "other", {}});
  doc.meta.duration_s = double(n);
  return doc;
}

// Levenshtein distance by memoized recursion over code-point vectors.
std::size_t ref_edit_distance(const std::u32string& a, const std::u32string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min({best, go(i + 1, j) + 1, go(i, j + 1) + 1});
    return memo[key] = best;
  };
  return go(0, 0);
}

class FixedJudge : public JudgeProvider {
 public:
  explicit FixedJudge(double v) : v_(v) {}
  double score(std::string_view, std::string_view) const override { return v_; }

 private:
  double v_;
};

}  // namespace

TEST(Regularizer, CleanCompleteParse) {
  const auto& reg = TaxonomyRegistry::builtin();
  const auto text = read_text_file(SV6D_SOURCE_DIR "/data/examples/product_spot.json");
  const auto t = regularize(text, reg, {});
  EXPECT_DOUBLE_EQ(t.r_prof, 0.0);
  EXPECT_DOUBLE_EQ(t.r_comp, 0.0);
  EXPECT_DOUBLE_EQ(t.r_form, 0.0);
  EXPECT_DOUBLE_EQ(t.l_reg, 0.0);
}

TEST(Regularizer, MissingDimensionIsOneSixth) {
  const auto& reg = TaxonomyRegistry::builtin();
  auto j = nlohmann::json::parse(read_text_file(SV6D_SOURCE_DIR "/data/examples/product_spot.json"));
  for (auto& shot : j["shots"]) shot["labels"].erase("editing");
  const auto t = regularize(j.dump(), reg, {});
  EXPECT_EQ(t.r_comp, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(t.r_prof, 0.0);
}

TEST(Regularizer, MediumCloseCountsAsOutOfVocabulary) {
  const auto& reg = TaxonomyRegistry::builtin();
  auto j = nlohmann::json::parse(read_text_file(SV6D_SOURCE_DIR "/data/examples/product_spot.json"));
  const auto before = regularize(j.dump(), reg, {});
  j["shots"][0]["labels"]["camera_language"]["shot_size"] = "medium close";
  const auto after = regularize(j.dump(), reg, {});
  EXPECT_EQ(after.labels_total, before.labels_total);
  EXPECT_EQ(after.labels_oov, before.labels_oov + 1);
  EXPECT_DOUBLE_EQ(after.r_prof, 1.0 / double(after.labels_total));
  // Case and spacing do not matter.
  j["shots"][0]["labels"]["camera_language"]["shot_size"] = "Medium  Close-Up";
  EXPECT_EQ(regularize(j.dump(), reg, {}).labels_oov, 0u);
}

TEST(Regularizer, FormatChecks) {
  const auto& reg = toy_registry();
  auto t = regularize("not json at all", reg, {});
  EXPECT_DOUBLE_EQ(t.r_form, 1.0);
  EXPECT_DOUBLE_EQ(t.r_prof, 1.0);
  EXPECT_DOUBLE_EQ(t.r_comp, 1.0);
  EXPECT_NEAR(t.l_reg, 1.0, 1e-15);

  // Negative and reversed timestamps fail two checks.
  const std::string bad = R"({"meta":{"duration_s":3},"shots":[
      {"start_s":-1,"end_s":1,"labels":{"editing":{"logic":"x"}}},
      {"start_s":2,"end_s":1.5,"labels":{"editing":{"logic":"x"}}}]})";
  t = regularize(bad, reg, {});
  EXPECT_EQ(t.failed_checks.size(), 2u);
  EXPECT_DOUBLE_EQ(t.r_form, 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(t.r_comp, 5.0 / 6.0);

  t = regularize(R"({"meta":{"duration_s":"3"},"shots":[{"start_s":0,"end_s":"3","labels":{"bogus":{}}}]})", reg, {});
  EXPECT_NE(std::find(t.failed_checks.begin(), t.failed_checks.end(), FormatCheck::kNumericFields),
            t.failed_checks.end());
  EXPECT_NE(std::find(t.failed_checks.begin(), t.failed_checks.end(), FormatCheck::kDimensionKeys),
            t.failed_checks.end());
}

TEST(Regularizer, WeightedSum) {
  const auto& reg = toy_registry();
  RegularizerConfig cfg{0.5, 0.25, 2.0};
  const auto t = regularize(R"({"shots":[]})", reg, cfg);
  EXPECT_NEAR(t.l_reg, 0.5 * t.r_prof + 0.25 * t.r_comp + 2.0 * t.r_form, 1e-15);
}

TEST(Objective, LStructTwoPairFixture) {
  const auto& reg = toy_registry();
  AlignmentConfig cfg;
  cfg.weights = {0.1, 0.2, 0.3, 0.1, 0.2, 0.1};
  const auto truth = toy_doc(2);
  auto pred = toy_doc(2);
  // Pair 0: shot_size s2 -> s4 (0.5) gives camera d = 0.25; editing x -> z gives 1.
  pred.shots[0].labels[Dimension::kCameraLanguage]["shot_size"] = LabelValue::single("s4");
  pred.shots[0].labels[Dimension::kEditing]["logic"] = LabelValue::single("z");
  // Pair 1: tone mid -> high (0.5); hook reveal -> question (1).
  pred.shots[1].labels[Dimension::kAesthetics]["tone"] = LabelValue::single("high key");
  pred.shots[1].labels[Dimension::kDissemination]["hook"] = LabelValue::single("question");
  const double d[2][6] = {{0.25, 0, 1, 0, 0, 0}, {0, 0.5, 0, 0, 0, 1}};
  double expect = 0.0;
  for (int k = 0; k < 6; ++k) expect += cfg.weights[k] * (d[0][k] + d[1][k]) / 2.0;
  const auto a = align(pred, truth, cfg, reg);
  EXPECT_NEAR(l_struct(a, pred, truth, cfg, reg), expect, 1e-15);

  // Enumerating the matched pairs in the opposite order gives the same value.
  auto flipped = a;
  std::reverse(flipped.matches.begin(), flipped.matches.end());
  std::reverse(flipped.per_pair_iou.begin(), flipped.per_pair_iou.end());
  std::reverse(flipped.per_pair_label_distance.begin(), flipped.per_pair_label_distance.end());
  EXPECT_NEAR(l_struct(flipped, pred, truth, cfg, reg), expect, 1e-15);
}

TEST(Objective, LStructEmptyMatchIsOne) {
  AlignmentResult none;
  EXPECT_DOUBLE_EQ(l_struct(none, toy_doc(1), toy_doc(1), {}, toy_registry()), 1.0);
}

TEST(Objective, LStructMonotoneUnderCorruption) {
  const auto& reg = toy_registry();
  AlignmentConfig cfg;
  Rng rng(17);
  for (int round = 0; round < 200; ++round) {
    const auto truth = random_document(rng, reg, 1 + rng.uniform_below(6));
    auto pred = truth;
    // Corrupt a random single-valued label to its farthest alternative.
    auto& shot = pred.shots[rng.uniform_below(pred.shots.size())];
    const Dimension dim = kAllDimensions[rng.uniform_below(kNumDimensions)];
    const auto& spec = reg.dimension(dim);
    const auto& sub = spec.sub_dimensions[rng.uniform_below(spec.sub_dimensions.size())];
    if (sub.multi_valued()) continue;
    auto& value = shot.labels[dim][sub.id()];
    const std::size_t cur = *sub.find(value.labels[0]);
    std::size_t far = cur;
    for (std::size_t i = 0; i < sub.size(); ++i) {
      if (sub.distance(cur, i) > sub.distance(cur, far)) far = i;
    }
    value.labels[0] = sub.labels()[far];
    const auto before = l_struct(align(truth, truth, cfg, reg), truth, truth, cfg, reg);
    const auto after = l_struct(align(pred, truth, cfg, reg), pred, truth, cfg, reg);
    EXPECT_GE(after, before);
  }
}

TEST(Objective, SelfLossIsZero) {
  const auto& reg = TaxonomyRegistry::builtin();
  Rng rng(3);
  for (int round = 0; round < 20; ++round) {
    const auto doc = random_document(rng, reg, 1 + rng.uniform_below(20));
    const auto b = sv6d_loss(to_json(doc).dump(), std::nullopt, doc, {}, reg);
    EXPECT_DOUBLE_EQ(b.l_sv6d, 0.0);
    EXPECT_DOUBLE_EQ(b.normalized_loss, 0.0);
    EXPECT_DOUBLE_EQ(b.reward, 1.0);
  }
}

TEST(Objective, UnparseablePredictionIsWorstCase) {
  const auto b = sv6d_loss("<<<>>>", std::nullopt, toy_doc(3), {}, toy_registry());
  EXPECT_DOUBLE_EQ(b.l_align, 1.5);
  EXPECT_DOUBLE_EQ(b.l_struct, 1.0);
  EXPECT_DOUBLE_EQ(b.r_form, 1.0);
  EXPECT_NEAR(b.normalized_loss, 1.0, 1e-15);
  EXPECT_NEAR(b.reward, 0.0, 1e-15);
  EXPECT_NEAR(b.l_sv6d, 1.5 + 1.0 + 1.0, 1e-15);
}

TEST(Objective, MixedFixtureNormalizedLoss) {
  const auto& reg = toy_registry();
  const auto truth = toy_doc(2);
  auto pred = toy_doc(2);
  pred.shots[0].labels[Dimension::kEditing]["logic"] = LabelValue::single("y");      // d = 0.5
  pred.shots[1].labels[Dimension::kDissemination]["hook"] = LabelValue::single("viral");  // OOV
  const auto b = sv6d_loss(to_json(pred).dump(), std::nullopt, truth, {}, reg);
  const double l_align = 0.0;
  const double l_struct = (1.0 / 6.0) * (0.5 / 2.0) + (1.0 / 6.0) * (1.0 / 2.0);
  const double r_prof = 1.0 / 14.0;  // 7 label leaves per shot, one unknown
  const double l_reg = r_prof / 3.0;
  EXPECT_NEAR(b.l_align, l_align, 1e-15);
  EXPECT_NEAR(b.l_struct, l_struct, 1e-15);
  EXPECT_NEAR(b.r_prof, r_prof, 1e-15);
  EXPECT_NEAR(b.l_reg, l_reg, 1e-15);
  EXPECT_NEAR(b.l_sv6d, l_align + l_struct + l_reg, 1e-15);
  EXPECT_NEAR(b.normalized_loss, (l_align / 1.5 + l_struct + l_reg / 1.0) / 3.0, 1e-15);
  EXPECT_NEAR(b.reward, 1.0 - b.normalized_loss, 1e-15);
}

TEST(Objective, InvalidTruthRejected) {
  auto truth = toy_doc(2);
  truth.shots[1].span.start_s = 1.5;
  try {
    sv6d_loss("{}", std::nullopt, truth, {}, toy_registry());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidDocument);
  }
}

TEST(Rewards, GroundingPerfectParse) {
  const auto& reg = toy_registry();
  const auto truth = toy_doc(3);
  const auto b = grounding_reward(to_json(truth).dump(), truth, {}, reg);
  EXPECT_NEAR(b.reward, 0.2 * 1 + 0.4 * 1 + 0.4 * 1, 1e-12);
  EXPECT_DOUBLE_EQ(b.format_score, 1.0);
}

TEST(Rewards, GroundingIsWeightedSumOfComponents) {
  const auto& reg = toy_registry();
  Rng rng(41);
  for (int round = 0; round < 100; ++round) {
    const auto truth = random_document(rng, reg, 1 + rng.uniform_below(8));
    const auto pred = random_document(rng, reg, 1 + rng.uniform_below(8));
    const auto b = grounding_reward(to_json(pred).dump(), truth, {}, reg);
    EXPECT_NEAR(b.reward, 0.2 * b.format_score + 0.4 * b.iou_score + 0.4 * b.label_score, 1e-12);
    EXPECT_GE(b.reward, 0.0);
    EXPECT_LE(b.reward, 1.0);
    EXPECT_GE(b.normalized_loss, 0.0);
    EXPECT_LE(b.normalized_loss, 1.0);
  }
}

TEST(Rewards, Localization) {
  const std::vector<SemanticShot> truth = {{0, 1}, {2, 4}};
  // Each span overlaps its truth by half.
  auto b = localization_reward(R"({"spans":[[0,2],[3,4]]})", truth);
  EXPECT_DOUBLE_EQ(b.format_score, 1.0);
  EXPECT_NEAR(b.iou_score, 0.5, 1e-12);
  EXPECT_NEAR(b.reward, 0.2 + 0.8 * 0.5, 1e-12);
  EXPECT_NEAR(b.reward, 0.6, 1e-12);
  b = localization_reward(R"([{"start_s":0,"end_s":1},{"start_s":2,"end_s":4}])", truth);
  EXPECT_NEAR(b.reward, 1.0, 1e-12);
  b = localization_reward("nonsense", truth);
  EXPECT_LT(b.format_score, 1.0);
  EXPECT_DOUBLE_EQ(b.iou_score, 0.0);
}

TEST(Rewards, Ocr) {
  EXPECT_NEAR(ocr_reward("abc", "abd").reward, 1.0 - 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(ocr_reward("same", "same").reward, 1.0);
  EXPECT_DOUBLE_EQ(ocr_reward("", "").reward, 1.0);
  EXPECT_DOUBLE_EQ(ocr_reward("", "abc").reward, 0.0);
  // Accented characters count once.
  EXPECT_NEAR(ocr_reward("héllo", "hello").reward, 0.8, 1e-12);
}

TEST(Rewards, EditDistanceMatchesRecursiveOracle) {
  Rng rng(8);
  const std::u32string alphabet = U"abcé";
  auto to_utf8 = [](const std::u32string& s) {
    std::string out;
    for (char32_t c : s) {
      if (c < 0x80) {
        out += char(c);
      } else {
        out += char(0xC0 | (c >> 6));
        out += char(0x80 | (c & 0x3F));
      }
    }
    return out;
  };
  for (int round = 0; round < 300; ++round) {
    std::u32string a, b;
    for (std::size_t i = rng.uniform_below(8); i > 0; --i) a += alphabet[rng.uniform_below(4)];
    for (std::size_t i = rng.uniform_below(8); i > 0; --i) b += alphabet[rng.uniform_below(4)];
    const auto ua = to_utf8(a), ub = to_utf8(b);
    EXPECT_EQ(edit_distance(ua, ub), ref_edit_distance(a, b));
    EXPECT_DOUBLE_EQ(edit_similarity(ua, ub), edit_similarity(ub, ua));
  }
}

TEST(Rewards, ChainOfThought) {
  const FixedJudge judge(0.5);
  auto b = chain_of_thought_reward("<think>count shots</think><answer>4</answer>", "4", &judge);
  EXPECT_DOUBLE_EQ(b.format_score, 1.0);
  EXPECT_NEAR(b.reward, 0.3 + 0.7 * 0.5, 1e-12);
  b = chain_of_thought_reward("just 4", "4", &judge);
  EXPECT_LT(b.format_score, 1.0);
  try {
    chain_of_thought_reward("<think>a</think><answer>b</answer>", "b", nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsupported);
  }
  const FixedJudge broken(1.5);
  EXPECT_THROW(chain_of_thought_reward("<think>a</think><answer>b</answer>", "b", &broken), Error);
}

TEST(Rewards, TaskDispatchChecksReferenceShape) {
  RewardTask task;
  task.type = TaskType::kTemporalGrounding;
  task.rollout = "{}";
  task.reference = std::string("text");
  try {
    task_reward(task, {}, toy_registry());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
  task.type = TaskType::kOcr;
  task.rollout = "abc";
  task.reference = std::string("abd");
  EXPECT_NEAR(task_reward(task, {}, toy_registry()).reward, 2.0 / 3.0, 1e-12);
}

TEST(Rewards, TaskTypeIds) {
  for (auto t : {TaskType::kTemporalGrounding, TaskType::kTemporalActionLocalization, TaskType::kOcr,
                 TaskType::kChainOfThought, TaskType::kSv6dComposite}) {
    EXPECT_EQ(parse_task_type(to_string(t)), t);
  }
  EXPECT_FALSE(parse_task_type("captioning").has_value());
}
