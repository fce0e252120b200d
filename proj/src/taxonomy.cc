#include "sv6d/taxonomy.h"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json_util.h"
#include "sv6d/digest.h"
#include "sv6d/error.h"

namespace sv6d {

extern const char* const kDefaultTaxonomyJson;  // generated from data/taxonomy/default.json

namespace {

constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

constexpr std::array<std::string_view, kNumDimensions> kDimensionIds = {
    "camera_language", "aesthetics", "editing", "subject", "narrative", "dissemination"};

const std::set<std::string>& dramatic_arc_labels() {
  static const std::set<std::string> labels = {"exposition",     "rising action", "climax",
                                               "falling action", "dénouement",    "other"};
  return labels;
}

[[noreturn]] void taxonomy_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::kTaxonomy, path + ": " + what, path);
}

}  // namespace

std::string_view to_string(Dimension dim) noexcept { return kDimensionIds[index_of(dim)]; }

std::optional<Dimension> parse_dimension(std::string_view id) noexcept {
  for (std::size_t i = 0; i < kDimensionIds.size(); ++i) {
    if (kDimensionIds[i] == id) return static_cast<Dimension>(i);
  }
  return std::nullopt;
}

std::string normalize_tag(std::string_view tag) {
  std::string out;
  out.reserve(tag.size());
  bool pending_space = false;
  for (unsigned char c : tag) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

SubDimension::SubDimension(std::string id, SubDimensionKind kind, bool multi_valued,
                           std::vector<std::string> labels, std::vector<Edge> confusion_edges,
                           std::vector<std::string> synthetic)
    : id_(std::move(id)),
      kind_(kind),
      multi_valued_(multi_valued),
      labels_(std::move(labels)),
      edges_(std::move(confusion_edges)),
      synthetic_(std::move(synthetic)) {
  if (labels_.empty()) taxonomy_error(id_, "label list is empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) taxonomy_error(id_, "empty label");
    if (!index_.emplace(labels_[i], i).second) {
      taxonomy_error(id_, "duplicate label '" + labels_[i] + "'");
    }
  }
  if (kind_ == SubDimensionKind::kOrdinal && !edges_.empty()) {
    taxonomy_error(id_, "ordinal sub-dimensions take no confusion edges");
  }
  for (const auto& label : synthetic_) {
    if (!index_.contains(label)) taxonomy_error(id_, "synthetic marker on unknown label '" + label + "'");
  }

  const std::size_t m = labels_.size();
  hops_.assign(m * m, kUnreachable);
  distance_.assign(m * m, 1.0);

  if (kind_ == SubDimensionKind::kOrdinal) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t h = a > b ? a - b : b - a;
        hops_[a * m + b] = h;
        distance_[a * m + b] = m == 1 ? 0.0 : static_cast<double>(h) / static_cast<double>(m - 1);
      }
    }
    return;
  }

  std::vector<std::vector<std::size_t>> adjacency(m);
  for (const auto& [a, b] : edges_) {
    auto ia = index_.find(a);
    auto ib = index_.find(b);
    if (ia == index_.end() || ib == index_.end()) {
      taxonomy_error(id_, "confusion edge to unknown label '" +
                              (ia == index_.end() ? a : b) + "'");
    }
    if (ia->second == ib->second) taxonomy_error(id_, "self-loop confusion edge on '" + a + "'");
    adjacency[ia->second].push_back(ib->second);
    adjacency[ib->second].push_back(ia->second);
  }
  for (std::size_t src = 0; src < m; ++src) {
    std::deque<std::size_t> queue{src};
    hops_[src * m + src] = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : adjacency[u]) {
        if (hops_[src * m + v] == kUnreachable) {
          hops_[src * m + v] = hops_[src * m + u] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  // Component diameter: eccentricity maximum over members of the component.
  std::vector<std::size_t> diameter(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t h = hops_[a * m + b];
      if (h != kUnreachable) diameter[a] = std::max(diameter[a], h);
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    std::size_t component_diameter = diameter[a];
    for (std::size_t b = 0; b < m; ++b) {
      if (hops_[a * m + b] != kUnreachable) {
        component_diameter = std::max(component_diameter, diameter[b]);
      }
    }
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t h = hops_[a * m + b];
      if (h == kUnreachable) {
        distance_[a * m + b] = 1.0;
      } else if (h == 0) {
        distance_[a * m + b] = 0.0;
      } else {
        distance_[a * m + b] = static_cast<double>(h) / static_cast<double>(component_diameter);
      }
    }
  }
}

std::optional<std::size_t> SubDimension::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SubDimension::hops(std::size_t a, std::size_t b) const {
  const std::size_t h = hops_[a * size() + b];
  if (h == kUnreachable) return std::nullopt;
  return h;
}

std::vector<std::size_t> SubDimension::shell(std::size_t label, std::size_t radius) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < size(); ++b) {
    if (hops_[label * size() + b] == radius) out.push_back(b);
  }
  return out;
}

const SubDimension* DimensionSpec::find(std::string_view sub) const noexcept {
  for (const auto& s : sub_dimensions) {
    if (s.id() == sub) return &s;
  }
  return nullptr;
}

std::size_t DimensionSpec::label_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sub_dimensions) n += s.size();
  return n;
}

TaxonomyRegistry TaxonomyRegistry::from_json(const nlohmann::json& config) {
  const detail::JsonReader in(ErrorKind::kTaxonomy);
  TaxonomyRegistry reg;
  reg.version_ = in.string_field(config, "version", "");
  if (reg.version_.empty()) taxonomy_error("version", "must be non-empty");

  const auto& dims = in.array(in.field(config, "dimensions", ""), "dimensions");
  std::array<bool, kNumDimensions> seen{};
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const std::string dpath = detail::index_path("dimensions", d);
    const std::string id = in.string_field(dims[d], "id", dpath);
    const auto dim = parse_dimension(id);
    if (!dim) taxonomy_error(dpath + ".id", "unknown dimension '" + id + "'");
    if (seen[index_of(*dim)]) taxonomy_error(dpath + ".id", "dimension '" + id + "' declared twice");
    seen[index_of(*dim)] = true;

    DimensionSpec spec{*dim, {}, std::nullopt};
    if (const auto* count = in.optional_field(dims[d], "declared_label_count")) {
      spec.declared_label_count = in.unsigned_integer(*count, dpath + ".declared_label_count");
    }
    const std::string spath = dpath + ".sub_dimensions";
    const auto& subs = in.array(in.field(dims[d], "sub_dimensions", dpath), spath);
    if (subs.empty()) taxonomy_error(spath, "no sub-dimensions");
    for (std::size_t s = 0; s < subs.size(); ++s) {
      const std::string path = detail::index_path(spath, s);
      const auto& js = subs[s];
      std::string sub_id = in.string_field(js, "id", path);
      if (spec.find(sub_id) != nullptr) taxonomy_error(path + ".id", "duplicate sub-dimension '" + sub_id + "'");
      const std::string kind_text = in.string_field(js, "kind", path);
      SubDimensionKind kind;
      if (kind_text == "ordinal") {
        kind = SubDimensionKind::kOrdinal;
      } else if (kind_text == "categorical") {
        kind = SubDimensionKind::kCategorical;
      } else {
        taxonomy_error(path + ".kind", "expected 'ordinal' or 'categorical'");
      }
      bool multi = false;
      if (const auto* mv = in.optional_field(js, "multi_valued")) multi = in.boolean(*mv, path + ".multi_valued");

      std::vector<std::string> labels;
      const auto& jl = in.array(in.field(js, "labels", path), path + ".labels");
      for (std::size_t i = 0; i < jl.size(); ++i) {
        labels.push_back(in.string(jl[i], detail::index_path(path + ".labels", i)));
      }
      std::vector<SubDimension::Edge> edges;
      if (const auto* je = in.optional_field(js, "confusion_edges")) {
        in.array(*je, path + ".confusion_edges");
        for (std::size_t i = 0; i < je->size(); ++i) {
          const std::string epath = detail::index_path(path + ".confusion_edges", i);
          const auto& pair = in.array((*je)[i], epath);
          if (pair.size() != 2) taxonomy_error(epath, "an edge is a pair of labels");
          edges.emplace_back(in.string(pair[0], epath), in.string(pair[1], epath));
        }
      }
      std::vector<std::string> synthetic;
      if (const auto* jsyn = in.optional_field(js, "synthetic")) {
        in.array(*jsyn, path + ".synthetic");
        for (std::size_t i = 0; i < jsyn->size(); ++i) {
          synthetic.push_back(in.string((*jsyn)[i], path + ".synthetic"));
        }
      }
      try {
        spec.sub_dimensions.emplace_back(std::move(sub_id), kind, multi, std::move(labels),
                                         std::move(edges), std::move(synthetic));
      } catch (const Error& e) {
        taxonomy_error(path, e.what());
      }
    }
    if (spec.declared_label_count && *spec.declared_label_count != spec.label_count()) {
      taxonomy_error(dpath, "declared " + std::to_string(*spec.declared_label_count) +
                                " labels but defines " + std::to_string(spec.label_count()));
    }
    reg.dimensions_[index_of(*dim)] = std::move(spec);
  }
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    if (!seen[i]) taxonomy_error("dimensions", "missing dimension '" + std::string(kDimensionIds[i]) + "'");
  }

  const auto& skel = in.object(in.field(config, "skeleton_taxonomies", ""), "skeleton_taxonomies");
  for (const auto& [name, labels] : skel.items()) {
    const std::string path = "skeleton_taxonomies." + name;
    in.array(labels, path);
    std::vector<std::string> list;
    std::set<std::string> unique;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto label = in.string(labels[i], detail::index_path(path, i));
      if (!unique.insert(label).second) taxonomy_error(path, "duplicate label '" + label + "'");
      list.push_back(std::move(label));
    }
    if (list.empty()) taxonomy_error(path, "label list is empty");
    reg.skeletons_.emplace(name, std::move(list));
  }
  const auto arc = reg.skeletons_.find("dramatic_arc");
  if (arc == reg.skeletons_.end()) {
    taxonomy_error("skeleton_taxonomies", "missing required taxonomy 'dramatic_arc'");
  }
  if (std::set<std::string>(arc->second.begin(), arc->second.end()) != dramatic_arc_labels()) {
    taxonomy_error("skeleton_taxonomies.dramatic_arc",
                   "must be exactly {exposition, rising action, climax, falling action, "
                   "dénouement, other}");
  }

  if (const auto* combos = in.optional_field(config, "invalid_combinations")) {
    in.array(*combos, "invalid_combinations");
    for (std::size_t i = 0; i < combos->size(); ++i) {
      const std::string path = detail::index_path("invalid_combinations", i);
      const auto& jc = (*combos)[i];
      const std::string dim_id = in.string_field(jc, "dimension", path);
      const auto dim = parse_dimension(dim_id);
      if (!dim) taxonomy_error(path + ".dimension", "unknown dimension '" + dim_id + "'");
      InvalidCombination combo{*dim, {}, {}, {}, {}};
      auto side = [&](std::string_view key, std::string& sub, std::string& label) {
        const std::string spath = detail::join_path(path, key);
        const auto& js = in.field(jc, key, path);
        sub = in.string_field(js, "sub_dimension", spath);
        label = in.string_field(js, "label", spath);
        const auto* sd = reg.dimensions_[index_of(*dim)].find(sub);
        if (sd == nullptr) taxonomy_error(spath, "unknown sub-dimension '" + sub + "'");
        if (!sd->contains(label)) taxonomy_error(spath, "unknown label '" + label + "'");
      };
      side("first", combo.first_sub, combo.first_label);
      side("second", combo.second_sub, combo.second_label);
      reg.invalid_combinations_.push_back(std::move(combo));
    }
  }

  for (const auto& spec : reg.dimensions_) {
    for (const auto& sub : spec.sub_dimensions) {
      for (const auto& label : sub.labels()) reg.normalized_tags_.insert(normalize_tag(label));
    }
  }
  reg.digest_ = sha256_hex(reg.to_json().dump());
  return reg;
}

TaxonomyRegistry TaxonomyRegistry::from_text(std::string_view text) {
  return from_json(detail::parse_json_text(text, ErrorKind::kTaxonomy));
}

TaxonomyRegistry TaxonomyRegistry::load_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIo, "cannot read taxonomy file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return from_text(buffer.str());
}

const TaxonomyRegistry& TaxonomyRegistry::builtin() {
  static const TaxonomyRegistry registry = from_text(kDefaultTaxonomyJson);
  return registry;
}

nlohmann::json TaxonomyRegistry::to_json() const {
  nlohmann::json out;
  out["version"] = version_;
  auto& dims = out["dimensions"] = nlohmann::json::array();
  for (const auto& spec : dimensions_) {
    nlohmann::json jd;
    jd["id"] = to_string(spec.id);
    if (spec.declared_label_count) jd["declared_label_count"] = *spec.declared_label_count;
    auto& subs = jd["sub_dimensions"] = nlohmann::json::array();
    for (const auto& sub : spec.sub_dimensions) {
      nlohmann::json js;
      js["id"] = sub.id();
      js["kind"] = sub.kind() == SubDimensionKind::kOrdinal ? "ordinal" : "categorical";
      js["multi_valued"] = sub.multi_valued();
      js["labels"] = sub.labels();
      if (sub.kind() == SubDimensionKind::kCategorical) {
        auto& edges = js["confusion_edges"] = nlohmann::json::array();
        for (const auto& [a, b] : sub.confusion_edges()) edges.push_back({a, b});
      }
      if (!sub.synthetic().empty()) js["synthetic"] = sub.synthetic();
      subs.push_back(std::move(js));
    }
    dims.push_back(std::move(jd));
  }
  out["skeleton_taxonomies"] = skeletons_;
  auto& combos = out["invalid_combinations"] = nlohmann::json::array();
  for (const auto& c : invalid_combinations_) {
    combos.push_back({{"dimension", to_string(c.dimension)},
                      {"first", {{"sub_dimension", c.first_sub}, {"label", c.first_label}}},
                      {"second", {{"sub_dimension", c.second_sub}, {"label", c.second_label}}}});
  }
  return out;
}

const SubDimension& TaxonomyRegistry::sub_dimension(Dimension dim, std::string_view sub) const {
  const auto* found = dimension(dim).find(sub);
  if (found == nullptr) {
    throw Error(ErrorKind::kUnknownLabel, "unknown sub-dimension '" + std::string(to_string(dim)) +
                                              "." + std::string(sub) + "'");
  }
  return *found;
}

const std::vector<std::string>* TaxonomyRegistry::skeleton_labels(std::string_view taxonomy) const {
  auto it = skeletons_.find(std::string(taxonomy));
  return it == skeletons_.end() ? nullptr : &it->second;
}

bool TaxonomyRegistry::is_canonical_tag(std::string_view tag) const {
  return normalized_tags_.contains(normalize_tag(tag));
}

namespace {

std::size_t require_label(const SubDimension& sub, Dimension dim, std::string_view label) {
  const auto idx = sub.find(label);
  if (!idx) {
    throw Error(ErrorKind::kUnknownLabel, "label '" + std::string(label) + "' is not in " +
                                              std::string(to_string(dim)) + "." + sub.id());
  }
  return *idx;
}

}  // namespace

double label_distance(const TaxonomyRegistry& registry, Dimension dim, std::string_view sub,
                      std::string_view a, std::string_view b) {
  const auto& sd = registry.sub_dimension(dim, sub);
  return sd.distance(require_label(sd, dim, a), require_label(sd, dim, b));
}

std::vector<std::string> confusion_neighborhood(const TaxonomyRegistry& registry, Dimension dim,
                                                std::string_view sub, std::string_view label) {
  const auto& sd = registry.sub_dimension(dim, sub);
  std::vector<std::string> out;
  for (std::size_t i : sd.shell(require_label(sd, dim, label), 1)) out.push_back(sd.labels()[i]);
  return out;
}

}  // namespace sv6d
