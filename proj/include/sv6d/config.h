#pragma once

// Tunable coefficients of the structural loss. Defaults: alpha = beta = 0.5,
// uniform dimension weights, and lambda_p = lambda_c = lambda_f = 1/3.

#include <array>
#include <string>

#include "json.hpp"
#include "sv6d/taxonomy.h"

namespace sv6d {

using DimensionWeights = std::array<double, kNumDimensions>;

inline DimensionWeights uniform_weights() {
  DimensionWeights w;
  w.fill(1.0 / static_cast<double>(kNumDimensions));
  return w;
}

struct AlignmentConfig {
  double alpha = 0.5;  // temporal vs. label cost balance, in (0, 1)
  double beta = 0.5;   // cardinality penalty coefficient, >= 0
  DimensionWeights weights = uniform_weights();  // > 0, summing to 1 within 1e-9

  // Throws Error(kConfig) whose field() names the offending entry.
  void validate() const;
};

struct RegularizerConfig {
  double lambda_p = 1.0 / 3.0;
  double lambda_c = 1.0 / 3.0;
  double lambda_f = 1.0 / 3.0;

  double total() const noexcept { return lambda_p + lambda_c + lambda_f; }
  void validate() const;
};

struct LossConfig {
  AlignmentConfig alignment;
  RegularizerConfig regularizer;

  void validate() const;
};

// Applies an override object {alpha, beta, weights, lambda_p, lambda_c,
// lambda_f} on top of `base` and validates the result. `weights` is either an
// array of six numbers in dimension order or an object keyed by dimension id
// (missing ids keep their base value). Error fields are prefixed by `path`.
LossConfig merge_config(LossConfig base, const nlohmann::json& overrides,
                        const std::string& path = "");

nlohmann::json to_json(const LossConfig& config);

}  // namespace sv6d
