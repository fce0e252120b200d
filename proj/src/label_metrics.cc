#include "sv6d/label_metrics.h"

#include <algorithm>
#include <set>

#include "sv6d/error.h"

namespace sv6d {

double set_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : sa) common += sb.count(x);
  const std::size_t unite = sa.size() + sb.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(unite);
}

namespace {

void check_labels(const SubDimension& sub, Dimension dim, const LabelValue& value) {
  for (const auto& label : value.labels) {
    if (!sub.contains(label)) {
      throw Error(ErrorKind::kUnknownLabel, "label '" + label + "' is not in " +
                                                std::string(to_string(dim)) + "." + sub.id());
    }
  }
}

double sub_distance(const SubDimension* sub, Dimension dim, const std::string& sub_id,
                    const LabelValue& a, const LabelValue& b, OovPolicy policy) {
  if (sub == nullptr) {
    if (policy == OovPolicy::kThrow) {
      throw Error(ErrorKind::kUnknownLabel, "unknown sub-dimension '" +
                                                std::string(to_string(dim)) + "." + sub_id + "'");
    }
    return 1.0;
  }
  if (policy == OovPolicy::kThrow) {
    check_labels(*sub, dim, a);
    check_labels(*sub, dim, b);
  }
  if (sub->multi_valued()) return set_distance(a.labels, b.labels);

  if (a.labels.size() != 1 || b.labels.size() != 1) {
    if (policy == OovPolicy::kThrow) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string(to_string(dim)) + "." + sub_id + " takes exactly one label");
    }
    return set_distance(a.labels, b.labels);
  }
  const auto ia = sub->find(a.labels.front());
  const auto ib = sub->find(b.labels.front());
  if (!ia || !ib) return 1.0;
  return sub->distance(*ia, *ib);
}

}  // namespace

std::array<double, kNumDimensions> dimension_distances(const ShotLabelVector& pred,
                                                       const ShotLabelVector& truth,
                                                       const TaxonomyRegistry& registry,
                                                       OovPolicy policy) {
  static const SubDimensionLabels kEmpty;
  std::array<double, kNumDimensions> out{};
  for (Dimension dim : kAllDimensions) {
    const auto pit = pred.find(dim);
    const auto tit = truth.find(dim);
    const auto& p = pit == pred.end() ? kEmpty : pit->second;
    const auto& t = tit == truth.end() ? kEmpty : tit->second;

    std::set<std::string> sub_ids;
    for (const auto& [id, _] : p) sub_ids.insert(id);
    for (const auto& [id, _] : t) sub_ids.insert(id);
    if (sub_ids.empty()) continue;

    const auto& spec = registry.dimension(dim);
    double sum = 0.0;
    for (const auto& id : sub_ids) {
      const auto pa = p.find(id);
      const auto tb = t.find(id);
      if (pa == p.end() || tb == t.end()) {
        if (policy == OovPolicy::kThrow && spec.find(id) == nullptr) {
          throw Error(ErrorKind::kUnknownLabel, "unknown sub-dimension '" +
                                                    std::string(to_string(dim)) + "." + id + "'");
        }
        sum += 1.0;
        continue;
      }
      sum += sub_distance(spec.find(id), dim, id, pa->second, tb->second, policy);
    }
    out[index_of(dim)] = sum / static_cast<double>(sub_ids.size());
  }
  return out;
}

double aggregate_label_distance(const ShotLabelVector& pred, const ShotLabelVector& truth,
                                const AlignmentConfig& config, const TaxonomyRegistry& registry,
                                OovPolicy policy) {
  const auto d = dimension_distances(pred, truth, registry, policy);
  double total = 0.0;
  for (std::size_t k = 0; k < kNumDimensions; ++k) total += config.weights[k] * d[k];
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace sv6d
