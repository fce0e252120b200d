#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "support.h"
#include "sv6d/alignment.h"
#include "sv6d/error.h"
#include "sv6d/hungarian.h"
#include "sv6d/label_metrics.h"

using namespace sv6d;
using sv6d::fixtures::random_document;
using sv6d::fixtures::toy_registry;

namespace {

// Exhaustive minimum over injections of the smaller side into the larger.
double brute_force_min(const CostMatrix& c) {
  const bool flip = c.rows() > c.cols();
  const std::size_t small = flip ? c.cols() : c.rows();
  const std::size_t large = flip ? c.rows() : c.cols();
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < small; ++i) s += flip ? c(perm[i], i) : c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return small == 0 ? 0.0 : best;
}

CostMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c, bool coarse) {
  CostMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      // Coarse grids force ties; fine values exercise the general case.
      m(i, j) = coarse ? double(rng.uniform_below(4)) / 4.0 : double(rng.uniform_below(1u << 20)) / double(1u << 20);
    }
  }
  return m;
}

bool is_partial_bijection(const Assignment& a, std::size_t rows, std::size_t cols) {
  std::vector<bool> used_r(rows), used_c(cols);
  for (const auto& [r, c] : a.pairs) {
    if (r >= rows || c >= cols || used_r[r] || used_c[c]) return false;
    used_r[r] = used_c[c] = true;
  }
  return a.pairs.size() == std::min(rows, cols);
}

ShotLabelVector toy_labels(const std::string& logic = "x", const std::string& size = "s2") {
  return {{Dimension::kCameraLanguage,
           {{"shot_size", LabelValue::single(size)}, {"movement", LabelValue::set({"pan"})}}},
          {Dimension::kAesthetics, {{"tone", LabelValue::single("mid key")}}},
          {Dimension::kEditing, {{"logic", LabelValue::single(logic)}}},
          {Dimension::kSubject, {{"config", LabelValue::single("one")}}},
          {Dimension::kNarrative, {{"function", LabelValue::single("opening")}}},
          {Dimension::kDissemination, {{"hook", LabelValue::single("reveal")}}}};
}

StructuralDocument doc_from_spans(const std::vector<SemanticShot>& spans) {
  StructuralDocument doc;
  doc.skeleton_taxonomy = "dramatic_arc";
  for (const auto& s : spans) doc.shots.push_back({s, toy_labels(), "other", {}});
  doc.meta.duration_s = spans.empty() ? 1.0 : spans.back().end_s;
  return doc;
}

}  // namespace

TEST(Hungarian, ZeroDiagonal) {
  const auto a = hungarian_match(CostMatrix{{0, 1}, {1, 0}});
  EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(a.total_cost, 0.0);
}

TEST(Hungarian, ThreeByThreeMatchesPermutationSearch) {
  const CostMatrix m{{1, 2, 3}, {2, 4, 6}, {3, 6, 9}};
  const auto a = hungarian_match(m);
  EXPECT_DOUBLE_EQ(a.total_cost, brute_force_min(m));
  EXPECT_DOUBLE_EQ(a.total_cost, 10.0);
  EXPECT_TRUE(is_partial_bijection(a, 3, 3));
}

TEST(Hungarian, RectangularMatchesInjectionSearch) {
  const CostMatrix m{{0.9, 0.1, 0.5}, {0.2, 0.8, 0.3}};
  const auto a = hungarian_match(m);
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_DOUBLE_EQ(a.total_cost, brute_force_min(m));
  EXPECT_DOUBLE_EQ(a.total_cost, 0.3);

  CostMatrix t(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) t(i, j) = m(j, i);
  const auto b = hungarian_match(t);
  EXPECT_TRUE(is_partial_bijection(b, 3, 2));
  EXPECT_DOUBLE_EQ(b.total_cost, 0.3);
}

TEST(Hungarian, EmptyMatrices) {
  EXPECT_TRUE(hungarian_match(CostMatrix(0, 4)).pairs.empty());
  EXPECT_TRUE(hungarian_match(CostMatrix(3, 0)).pairs.empty());
}

TEST(Hungarian, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(hungarian_match(CostMatrix{{0, -1}, {1, 0}}), Error);
  EXPECT_THROW(hungarian_match(CostMatrix{{0, std::numeric_limits<double>::quiet_NaN()}, {1, 0}}), Error);
}

TEST(Hungarian, TiesBreakByLowestIndex) {
  const auto a = hungarian_match(CostMatrix(3, 3, 1.0));
  EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 2}}));
  const auto b = hungarian_match(CostMatrix(2, 4, 0.5));
  EXPECT_EQ(b.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
}

TEST(Hungarian, RandomMatricesMatchBruteForce) {
  Rng rng(2024);
  for (int round = 0; round < 400; ++round) {
    const std::size_t r = 1 + rng.uniform_below(6), c = 1 + rng.uniform_below(6);
    const auto m = random_matrix(rng, r, c, round % 2 == 0);
    const auto a = hungarian_match(m);
    ASSERT_TRUE(is_partial_bijection(a, r, c));
    double s = 0.0;
    for (const auto& [i, j] : a.pairs) s += m(i, j);
    EXPECT_DOUBLE_EQ(s, a.total_cost);
    EXPECT_NEAR(a.total_cost, brute_force_min(m), 1e-12);
  }
}

TEST(Alignment, TemporalIou) {
  EXPECT_DOUBLE_EQ(temporal_iou({0, 10}, {0, 10}), 1.0);
  EXPECT_DOUBLE_EQ(temporal_iou({0, 10}, {20, 30}), 0.0);
  EXPECT_DOUBLE_EQ(temporal_iou({0, 10}, {5, 15}), 5.0 / 15.0);
  EXPECT_DOUBLE_EQ(temporal_iou({5, 15}, {0, 10}), temporal_iou({0, 10}, {5, 15}));
  EXPECT_THROW(temporal_iou({3, 3}, {0, 1}), Error);
  EXPECT_THROW(temporal_iou({0, 1}, {4, 2}), Error);
}

TEST(Alignment, CostEntrySubstitution) {
  // IoU([0,2],[1,2]) = 0.5; only editing differs, at distance 1, under weight
  // 0.25, so the aggregate label distance is 0.25.
  AlignmentConfig cfg;
  cfg.weights = {0.0625, 0.0625, 0.25, 0.0625, 0.0625, 0.5};
  auto pred = doc_from_spans({{0, 2}});
  const auto truth = doc_from_spans({{0, 1}, {1, 2}});
  pred.shots[0].labels[Dimension::kEditing]["logic"] = LabelValue::single("z");
  const auto c = cost_matrix(pred, truth, cfg, toy_registry());
  EXPECT_NEAR(c(0, 1), 0.5 * (1 - 0.5) + 0.5 * 0.25, 1e-15);
  EXPECT_NEAR(c(0, 1), 0.375, 1e-15);
}

TEST(Alignment, CostExtremes) {
  const auto& reg = toy_registry();
  AlignmentConfig cfg;
  Rng rng(5);
  const auto doc = random_document(rng, reg, 6);
  const auto c = cost_matrix(doc, doc, cfg, reg);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(c(i, i), 0.0);

  // Disjoint spans and every label maximally distant.
  auto a = doc_from_spans({{0, 1}});
  auto b = doc_from_spans({{0, 1}, {1, 2}});
  b.meta.duration_s = 2;
  a.shots[0].labels = {{Dimension::kCameraLanguage,
                        {{"shot_size", LabelValue::single("s0")}, {"movement", LabelValue::set({"static"})}}},
                       {Dimension::kAesthetics, {{"tone", LabelValue::single("low key")}}},
                       {Dimension::kEditing, {{"logic", LabelValue::single("lonely")}}},
                       {Dimension::kSubject, {{"config", LabelValue::single("many")}}},
                       {Dimension::kNarrative, {{"function", LabelValue::single("ending")}}},
                       {Dimension::kDissemination, {{"hook", LabelValue::single("teaser")}}}};
  b.shots[1].labels = toy_labels("x", "s4");
  b.shots[1].labels[Dimension::kAesthetics]["tone"] = LabelValue::single("high key");
  b.shots[1].labels[Dimension::kSubject]["config"] = LabelValue::single("none");
  b.shots[1].labels[Dimension::kNarrative]["function"] = LabelValue::single("opening");
  b.shots[1].labels[Dimension::kDissemination]["hook"] = LabelValue::single("question");
  const auto m = cost_matrix(a, b, cfg, reg);
  EXPECT_DOUBLE_EQ(m(0, 1), 1.0);
}

TEST(Alignment, DimensionDistances) {
  const auto& reg = toy_registry();
  auto pred = toy_labels();
  const auto truth = toy_labels();
  pred[Dimension::kEditing]["logic"] = LabelValue::single("y");  // d_3 = 0.5
  AlignmentConfig cfg;
  const auto d = dimension_distances(pred, truth, reg);
  EXPECT_DOUBLE_EQ(d[2], 0.5);
  EXPECT_NEAR(aggregate_label_distance(pred, truth, cfg, reg), 0.5 / 6.0, 1e-15);
  EXPECT_NEAR(aggregate_label_distance(pred, truth, cfg, reg), 0.0833333333333333, 1e-12);
  EXPECT_DOUBLE_EQ(aggregate_label_distance(truth, truth, cfg, reg), 0.0);
}

TEST(Alignment, SubDimensionMeanAndMissingSides) {
  const auto& reg = toy_registry();
  auto pred = toy_labels();
  const auto truth = toy_labels();
  // shot_size s2 -> s3 (0.25) and movement {pan} -> {pan, tilt} (Jaccard 0.5).
  pred[Dimension::kCameraLanguage]["shot_size"] = LabelValue::single("s3");
  pred[Dimension::kCameraLanguage]["movement"] = LabelValue::set({"pan", "tilt"});
  EXPECT_DOUBLE_EQ(dimension_distances(pred, truth, reg)[0], (0.25 + 0.5) / 2.0);
  pred[Dimension::kCameraLanguage].erase("movement");
  EXPECT_DOUBLE_EQ(dimension_distances(pred, truth, reg)[0], (0.25 + 1.0) / 2.0);
  EXPECT_DOUBLE_EQ(set_distance({"a", "b"}, {"b", "c"}), 1.0 - 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(set_distance({}, {}), 0.0);
}

TEST(Alignment, OovPolicy) {
  const auto& reg = toy_registry();
  auto pred = toy_labels();
  pred[Dimension::kEditing]["logic"] = LabelValue::single("mystery");
  EXPECT_THROW(dimension_distances(pred, toy_labels(), reg), Error);
  EXPECT_DOUBLE_EQ(dimension_distances(pred, toy_labels(), reg, OovPolicy::kMaxDistance)[2], 1.0);
}

TEST(Alignment, CardinalityPenalty) {
  const auto& reg = toy_registry();
  AlignmentConfig cfg;
  const auto pred = doc_from_spans({{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  auto truth = doc_from_spans({{0, 1}, {1, 2}});
  const auto r = align(pred, truth, cfg, reg);
  ASSERT_EQ(r.matches.size(), 2u);
  EXPECT_NEAR(r.l_align, 0.0 + 0.5 * (2.0 / 4.0), 1e-12);
  EXPECT_NEAR(r.l_align, 0.25, 1e-12);
}

TEST(Alignment, EmptyPredictionConvention) {
  const auto& reg = toy_registry();
  AlignmentConfig cfg;
  StructuralDocument empty;
  empty.skeleton_taxonomy = "dramatic_arc";
  empty.meta.duration_s = 3;
  const auto truth = doc_from_spans({{0, 1}, {1, 2}, {2, 3}});
  const auto r = align(empty, truth, cfg, reg);
  EXPECT_TRUE(r.matches.empty());
  EXPECT_NEAR(r.l_align, 1.0 + 0.5 * 1.0, 1e-12);
}

TEST(Alignment, SelfAlignment) {
  const auto& reg = TaxonomyRegistry::builtin();
  AlignmentConfig cfg;
  Rng rng(99);
  for (int round = 0; round < 30; ++round) {
    const auto doc = random_document(rng, reg, 1 + rng.uniform_below(20));
    const auto r = align(doc, doc, cfg, reg);
    EXPECT_EQ(r.matches.size(), doc.shots.size());
    EXPECT_DOUBLE_EQ(r.l_align, 0.0);
  }
}

TEST(Alignment, PermutationInvarianceOfOptimum) {
  Rng rng(31);
  for (int round = 0; round < 100; ++round) {
    const std::size_t r = 1 + rng.uniform_below(6), c = 1 + rng.uniform_below(6);
    const auto m = random_matrix(rng, r, c, false);
    std::vector<std::size_t> pr(r), pc(c);
    std::iota(pr.begin(), pr.end(), 0);
    std::iota(pc.begin(), pc.end(), 0);
    rng.shuffle(pr);
    rng.shuffle(pc);
    CostMatrix p(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) p(i, j) = m(pr[i], pc[j]);
    EXPECT_NEAR(hungarian_match(m).total_cost, hungarian_match(p).total_cost, 1e-12);
  }
}

TEST(Alignment, CostMonotonicity) {
  const auto& reg = toy_registry();
  AlignmentConfig cfg;
  const auto truth = doc_from_spans({{0, 4}});
  double last = -1.0;
  // Shrinking overlap lowers IoU; the cost must not decrease.
  for (double end : {4.0, 3.0, 2.0, 1.0}) {
    auto pred = doc_from_spans({{0, end}});
    const double c = cost_matrix(pred, truth, cfg, reg)(0, 0);
    EXPECT_GE(c, last);
    last = c;
  }
  last = -1.0;
  for (const char* size : {"s2", "s3", "s4"}) {
    auto pred = doc_from_spans({{0, 4}});
    pred.shots[0].labels = toy_labels("x", size);
    const double c = cost_matrix(pred, truth, cfg, reg)(0, 0);
    EXPECT_GE(c, last);
    last = c;
  }
}
