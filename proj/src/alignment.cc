#include "sv6d/alignment.h"

#include <algorithm>
#include <cmath>

#include "sv6d/error.h"

namespace sv6d {

double temporal_iou(const SemanticShot& a, const SemanticShot& b) {
  if (!(a.start_s < a.end_s) || !(b.start_s < b.end_s)) {
    throw Error(ErrorKind::kInvalidArgument, "temporal_iou needs intervals with start < end");
  }
  const double inter = std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
  const double uni = a.length() + b.length() - inter;
  return inter / uni;
}

CostMatrix cost_matrix(const StructuralDocument& pred, const StructuralDocument& truth,
                       const AlignmentConfig& config, const TaxonomyRegistry& registry,
                       OovPolicy policy) {
  config.validate();
  CostMatrix costs(pred.shots.size(), truth.shots.size());
  for (std::size_t i = 0; i < pred.shots.size(); ++i) {
    for (std::size_t j = 0; j < truth.shots.size(); ++j) {
      const double iou = temporal_iou(pred.shots[i].span, truth.shots[j].span);
      const double delta = aggregate_label_distance(pred.shots[i].labels, truth.shots[j].labels,
                                                    config, registry, policy);
      costs(i, j) = config.alpha * (1.0 - iou) + (1.0 - config.alpha) * delta;
    }
  }
  return costs;
}

AlignmentResult align(const StructuralDocument& pred, const StructuralDocument& truth,
                      const AlignmentConfig& config, const TaxonomyRegistry& registry,
                      OovPolicy policy) {
  const CostMatrix costs = cost_matrix(pred, truth, config, registry, policy);
  const Assignment assignment = hungarian_match(costs);

  AlignmentResult result;
  result.matches = assignment.pairs;
  double one_minus_iou = 0.0;
  double iou_sum = 0.0;
  for (const auto& [i, j] : result.matches) {
    const double iou = temporal_iou(pred.shots[i].span, truth.shots[j].span);
    result.per_pair_iou.push_back(iou);
    result.per_pair_label_distance.push_back(aggregate_label_distance(
        pred.shots[i].labels, truth.shots[j].labels, config, registry, policy));
    one_minus_iou += 1.0 - iou;
    iou_sum += iou;
  }
  const std::size_t n_pred = pred.shots.size();
  const std::size_t n_truth = truth.shots.size();
  const std::size_t larger = std::max(n_pred, n_truth);
  const std::size_t diff = n_pred > n_truth ? n_pred - n_truth : n_truth - n_pred;
  result.cardinality_fraction =
      larger == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(larger);
  result.cardinality_penalty = config.beta * result.cardinality_fraction;

  const double m = static_cast<double>(result.matches.size());
  const double mean_term = result.matches.empty() ? 1.0 : one_minus_iou / m;
  result.mean_iou = result.matches.empty() ? 0.0 : iou_sum / m;
  result.l_align = mean_term + result.cardinality_penalty;
  return result;
}

double mean_span_iou(const std::vector<std::pair<SemanticShot, SemanticShot>>& pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [a, b] : pairs) sum += temporal_iou(a, b);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace sv6d
