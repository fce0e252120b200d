#pragma once

// Temporal alignment of predicted against ground-truth shots: IoU, the
// combined cost matrix, the optimal matching, and the alignment loss.

#include <cstddef>
#include <utility>
#include <vector>

#include "sv6d/config.h"
#include "sv6d/document.h"
#include "sv6d/hungarian.h"
#include "sv6d/label_metrics.h"
#include "sv6d/taxonomy.h"

namespace sv6d {

struct AlignmentResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred index, truth index)
  std::vector<double> per_pair_iou;
  std::vector<double> per_pair_label_distance;
  // |N_pred - N_truth| / max(N_pred, N_truth); 0 when both are empty.
  double cardinality_fraction = 0.0;
  // beta * cardinality_fraction.
  double cardinality_penalty = 0.0;
  // Mean matched IoU; 0 when nothing is matched.
  double mean_iou = 0.0;
  // mean(1 - IoU) over matches (1 when there are none) + cardinality_penalty.
  double l_align = 0.0;
};

// |a n b| / |a u b| on interval lengths. Throws Error(kInvalidArgument)
// unless start_s < end_s for both.
double temporal_iou(const SemanticShot& a, const SemanticShot& b);

// C_ij = alpha * (1 - IoU) + (1 - alpha) * aggregate label distance.
CostMatrix cost_matrix(const StructuralDocument& pred, const StructuralDocument& truth,
                       const AlignmentConfig& config, const TaxonomyRegistry& registry,
                       OovPolicy policy = OovPolicy::kThrow);

AlignmentResult align(const StructuralDocument& pred, const StructuralDocument& truth,
                      const AlignmentConfig& config, const TaxonomyRegistry& registry,
                      OovPolicy policy = OovPolicy::kThrow);

// Mean IoU over already-paired spans (subject localization items); 0 for no pairs.
double mean_span_iou(const std::vector<std::pair<SemanticShot, SemanticShot>>& pairs);

}  // namespace sv6d
