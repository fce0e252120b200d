#pragma once

// Per-dimension label distance d_k between two shot label vectors and the
// weighted aggregate used by both the cost matrix and the structural loss.

#include <array>
#include <string>
#include <vector>

#include "sv6d/config.h"
#include "sv6d/document.h"
#include "sv6d/taxonomy.h"

namespace sv6d {

// kThrow rejects unknown labels and sub-dimensions. kMaxDistance scores them
// as maximally distant, which is how unvalidated model output is handled.
enum class OovPolicy { kThrow, kMaxDistance };

// Jaccard distance 1 - |A n B| / |A u B| over distinct labels; 0 for two empty sets.
double set_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// d_k for every dimension: the mean, over sub-dimensions present on at least
// one side, of the sub-dimension distance. A sub-dimension present on only
// one side contributes 1; a dimension with nothing on either side scores 0.
std::array<double, kNumDimensions> dimension_distances(const ShotLabelVector& pred,
                                                       const ShotLabelVector& truth,
                                                       const TaxonomyRegistry& registry,
                                                       OovPolicy policy = OovPolicy::kThrow);

// Sum_k w_k * d_k.
double aggregate_label_distance(const ShotLabelVector& pred, const ShotLabelVector& truth,
                                const AlignmentConfig& config, const TaxonomyRegistry& registry,
                                OovPolicy policy = OovPolicy::kThrow);

}  // namespace sv6d
