#include "sv6d/config.h"

#include <cmath>

#include "json_util.h"
#include "sv6d/error.h"

namespace sv6d {

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kConfig, field + ": " + what, field);
}

}  // namespace

void AlignmentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) config_error("alpha", "must lie in (0, 1)");
  if (!(beta >= 0.0) || !std::isfinite(beta)) config_error("beta", "must be finite and >= 0");
  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) {
      config_error("weights." + std::string(to_string(kAllDimensions[k])), "must be > 0");
    }
    sum += weights[k];
  }
  if (std::abs(sum - 1.0) > 1e-9) config_error("weights", "must sum to 1");
}

void RegularizerConfig::validate() const {
  const std::pair<const char*, double> lambdas[] = {
      {"lambda_p", lambda_p}, {"lambda_c", lambda_c}, {"lambda_f", lambda_f}};
  for (const auto& [name, value] : lambdas) {
    if (!(value >= 0.0) || !std::isfinite(value)) config_error(name, "must be finite and >= 0");
  }
  if (!(total() > 0.0)) config_error("lambda_p", "lambda_p + lambda_c + lambda_f must be > 0");
}

void LossConfig::validate() const {
  alignment.validate();
  regularizer.validate();
}

LossConfig merge_config(LossConfig base, const nlohmann::json& overrides, const std::string& path) {
  const detail::JsonReader in(ErrorKind::kConfig);
  in.object(overrides, path);
  for (const auto& [key, value] : overrides.items()) {
    const std::string field = detail::join_path(path, key);
    if (key == "alpha") {
      base.alignment.alpha = in.number(value, field);
    } else if (key == "beta") {
      base.alignment.beta = in.number(value, field);
    } else if (key == "lambda_p") {
      base.regularizer.lambda_p = in.number(value, field);
    } else if (key == "lambda_c") {
      base.regularizer.lambda_c = in.number(value, field);
    } else if (key == "lambda_f") {
      base.regularizer.lambda_f = in.number(value, field);
    } else if (key == "weights") {
      if (value.is_array()) {
        if (value.size() != kNumDimensions) in.fail(field, "expected 6 weights");
        for (std::size_t k = 0; k < kNumDimensions; ++k) {
          base.alignment.weights[k] = in.number(value[k], detail::index_path(field, k));
        }
      } else {
        in.object(value, field);
        for (const auto& [dim_id, w] : value.items()) {
          const auto dim = parse_dimension(dim_id);
          if (!dim) in.fail(field + "." + dim_id, "unknown dimension");
          base.alignment.weights[index_of(*dim)] = in.number(w, field + "." + dim_id);
        }
      }
    } else {
      in.fail(field, "unknown config key");
    }
  }
  try {
    base.validate();
  } catch (const Error& e) {
    const std::string field = detail::join_path(path, e.field());
    throw Error(ErrorKind::kConfig, field + ": " + std::string(e.what()).substr(e.field().size() + 2),
                field);
  }
  return base;
}

nlohmann::json to_json(const LossConfig& config) {
  nlohmann::json weights = nlohmann::json::object();
  for (Dimension dim : kAllDimensions) {
    weights[std::string(to_string(dim))] = config.alignment.weights[index_of(dim)];
  }
  return {{"alpha", config.alignment.alpha},
          {"beta", config.alignment.beta},
          {"weights", std::move(weights)},
          {"lambda_p", config.regularizer.lambda_p},
          {"lambda_c", config.regularizer.lambda_c},
          {"lambda_f", config.regularizer.lambda_f}};
}

}  // namespace sv6d
