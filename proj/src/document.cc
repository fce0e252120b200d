#include "sv6d/document.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.h"
#include "sv6d/error.h"

namespace sv6d {

namespace {

std::string fmt_seconds(double t) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << t;
  return out.str();
}

Violation make_violation(ViolationKind kind, std::string message,
                         std::optional<std::size_t> shot = std::nullopt,
                         std::optional<double> t0 = std::nullopt,
                         std::optional<double> t1 = std::nullopt) {
  return Violation{kind, std::move(message), shot, t0, t1};
}

}  // namespace

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::kNonPositiveDuration: return "non_positive_duration";
    case ViolationKind::kNoShots: return "no_shots";
    case ViolationKind::kNegativeTimestamp: return "negative_timestamp";
    case ViolationKind::kEmptyInterval: return "empty_interval";
    case ViolationKind::kStartNotAtZero: return "start_not_at_zero";
    case ViolationKind::kEndNotAtDuration: return "end_not_at_duration";
    case ViolationKind::kGap: return "gap";
    case ViolationKind::kOverlap: return "overlap";
    case ViolationKind::kUnknownSkeletonTaxonomy: return "unknown_skeleton_taxonomy";
    case ViolationKind::kUnknownSkeletonLabel: return "unknown_skeleton_label";
    case ViolationKind::kUnknownSubDimension: return "unknown_sub_dimension";
    case ViolationKind::kOutOfVocabulary: return "out_of_vocabulary";
    case ViolationKind::kEmptyLabelSet: return "empty_label_set";
    case ViolationKind::kSetOnSingleValued: return "set_on_single_valued";
    case ViolationKind::kInvalidCombination: return "invalid_combination";
  }
  return "unknown";
}

std::string Violation::describe() const {
  std::string out(to_string(kind));
  if (t_start && t_end) {
    out += " at t=" + fmt_seconds(*t_start) + ".." + fmt_seconds(*t_end);
  } else if (t_start) {
    out += " at t=" + fmt_seconds(*t_start);
  }
  if (shot) out += " (shot " + std::to_string(*shot) + ")";
  out += ": " + message;
  return out;
}

std::vector<Violation> check_partition(const StructuralDocument& doc) {
  std::vector<Violation> out;
  const double duration = doc.meta.duration_s;
  if (!(duration > 0.0)) {
    out.push_back(make_violation(ViolationKind::kNonPositiveDuration,
                                 "duration_s must be > 0, got " + fmt_seconds(duration)));
  }
  if (doc.shots.empty()) {
    out.push_back(make_violation(ViolationKind::kNoShots, "document has no shots"));
    return out;
  }
  for (std::size_t i = 0; i < doc.shots.size(); ++i) {
    const auto& s = doc.shots[i].span;
    if (s.start_s < 0.0 || s.end_s < 0.0) {
      out.push_back(make_violation(ViolationKind::kNegativeTimestamp, "negative timestamp", i,
                                   s.start_s, s.end_s));
    }
    if (!(s.start_s < s.end_s)) {
      out.push_back(make_violation(ViolationKind::kEmptyInterval,
                                   "start_s must be strictly below end_s", i, s.start_s, s.end_s));
    }
  }
  const auto& first = doc.shots.front().span;
  if (std::abs(first.start_s) > kTimestampTolerance) {
    out.push_back(make_violation(ViolationKind::kStartNotAtZero, "first shot must start at 0", 0,
                                 0.0, first.start_s));
  }
  const auto& last = doc.shots.back().span;
  if (duration > 0.0 && std::abs(last.end_s - duration) > kTimestampTolerance) {
    out.push_back(make_violation(ViolationKind::kEndNotAtDuration,
                                 "last shot must end at duration_s=" + fmt_seconds(duration),
                                 doc.shots.size() - 1, std::min(last.end_s, duration),
                                 std::max(last.end_s, duration)));
  }
  for (std::size_t i = 0; i + 1 < doc.shots.size(); ++i) {
    const double end = doc.shots[i].span.end_s;
    const double next = doc.shots[i + 1].span.start_s;
    if (next > end + kTimestampTolerance) {
      out.push_back(make_violation(ViolationKind::kGap,
                                   "uncovered timeline between shots " + std::to_string(i) +
                                       " and " + std::to_string(i + 1),
                                   i + 1, end, next));
    } else if (next < end - kTimestampTolerance) {
      out.push_back(make_violation(ViolationKind::kOverlap,
                                   "shots " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                       " overlap",
                                   i + 1, next, end));
    }
  }
  return out;
}

ValidationReport validate_document(const StructuralDocument& doc, const TaxonomyRegistry& registry) {
  ValidationReport report;
  report.violations = check_partition(doc);
  auto& out = report.violations;

  const auto* skeleton = registry.skeleton_labels(doc.skeleton_taxonomy);
  if (skeleton == nullptr) {
    out.push_back(make_violation(ViolationKind::kUnknownSkeletonTaxonomy,
                                 "unknown skeleton taxonomy '" + doc.skeleton_taxonomy + "'"));
  }

  for (std::size_t i = 0; i < doc.shots.size(); ++i) {
    const auto& shot = doc.shots[i];
    const double t0 = shot.span.start_s;
    const double t1 = shot.span.end_s;
    if (skeleton != nullptr &&
        std::find(skeleton->begin(), skeleton->end(), shot.skeleton) == skeleton->end()) {
      out.push_back(make_violation(ViolationKind::kUnknownSkeletonLabel,
                                   "skeleton label '" + shot.skeleton + "' is not in " +
                                       doc.skeleton_taxonomy,
                                   i, t0, t1));
    }
    for (const auto& [dim, subs] : shot.labels) {
      const auto& spec = registry.dimension(dim);
      for (const auto& [sub_id, value] : subs) {
        const std::string where = std::string(to_string(dim)) + "." + sub_id;
        const auto* sub = spec.find(sub_id);
        if (sub == nullptr) {
          out.push_back(make_violation(ViolationKind::kUnknownSubDimension,
                                       "unknown sub-dimension '" + where + "'", i, t0, t1));
          continue;
        }
        if (value.is_set && !sub->multi_valued()) {
          out.push_back(make_violation(ViolationKind::kSetOnSingleValued,
                                       where + " takes a single label", i, t0, t1));
        }
        if (value.labels.empty()) {
          out.push_back(make_violation(ViolationKind::kEmptyLabelSet,
                                       where + " has an empty label set", i, t0, t1));
        }
        for (const auto& label : value.labels) {
          if (!sub->contains(label)) {
            out.push_back(make_violation(ViolationKind::kOutOfVocabulary,
                                         "'" + label + "' is not a canonical " + where + " label",
                                         i, t0, t1));
          }
        }
      }
    }
    for (const auto& combo : registry.invalid_combinations()) {
      auto dim_it = shot.labels.find(combo.dimension);
      if (dim_it == shot.labels.end()) continue;
      auto has = [&](const std::string& sub, const std::string& label) {
        auto it = dim_it->second.find(sub);
        if (it == dim_it->second.end()) return false;
        return std::find(it->second.labels.begin(), it->second.labels.end(), label) !=
               it->second.labels.end();
      };
      if (has(combo.first_sub, combo.first_label) && has(combo.second_sub, combo.second_label)) {
        out.push_back(make_violation(
            ViolationKind::kInvalidCombination,
            std::string(to_string(combo.dimension)) + ": '" + combo.first_label + "' cannot pair with '" +
                combo.second_label + "'",
            i, t0, t1));
      }
    }
  }
  return report;
}

std::vector<SkeletonSegment> derive_skeleton(const StructuralDocument& doc) {
  const auto problems = check_partition(doc);
  if (!problems.empty()) {
    throw Error(ErrorKind::kInvalidDocument,
                "cannot derive skeleton: " + problems.front().describe());
  }
  std::vector<SkeletonSegment> segments;
  for (std::size_t i = 0; i < doc.shots.size(); ++i) {
    const auto& shot = doc.shots[i];
    if (!segments.empty() && segments.back().seg_type == shot.skeleton) {
      segments.back().last_shot = i;
      segments.back().end_s = shot.span.end_s;
    } else {
      segments.push_back({shot.skeleton, i, i, shot.span.start_s, shot.span.end_s});
    }
  }
  return segments;
}

std::vector<std::string> flatten_skeleton(std::span<const SkeletonSegment> segments) {
  std::vector<std::string> out;
  for (const auto& seg : segments) {
    for (std::size_t i = seg.first_shot; i <= seg.last_shot; ++i) out.push_back(seg.seg_type);
  }
  return out;
}

namespace {

LabelValue parse_label_value(const detail::JsonReader& in, const nlohmann::json& j,
                             const std::string& path) {
  if (j.is_string()) return LabelValue::single(j.get<std::string>());
  if (!j.is_array()) in.fail(path, "expected a label string or an array of labels");
  LabelValue value;
  value.is_set = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    value.labels.push_back(in.string(j[i], detail::index_path(path, i)));
  }
  return value;
}

}  // namespace

StructuralDocument parse_document(const nlohmann::json& j) {
  const detail::JsonReader in(ErrorKind::kParse);
  StructuralDocument doc;
  const auto& meta = in.field(j, "meta", "");
  doc.meta.duration_s = in.number_field(meta, "duration_s", "meta");
  if (const auto* fr = in.optional_field(meta, "frame_rate")) {
    doc.meta.frame_rate = in.number(*fr, "meta.frame_rate");
  }
  if (const auto* res = in.optional_field(meta, "resolution")) {
    doc.meta.resolution = Resolution{
        static_cast<int>(in.unsigned_integer(in.field(*res, "width", "meta.resolution"),
                                             "meta.resolution.width")),
        static_cast<int>(in.unsigned_integer(in.field(*res, "height", "meta.resolution"),
                                             "meta.resolution.height"))};
  }
  if (const auto* p = in.optional_field(meta, "platform")) doc.meta.platform = in.string(*p, "meta.platform");
  if (const auto* a = in.optional_field(meta, "is_aigc")) doc.meta.is_aigc = in.boolean(*a, "meta.is_aigc");

  doc.skeleton_taxonomy = in.string_field(j, "skeleton_taxonomy", "");
  const auto& shots = in.array(in.field(j, "shots", ""), "shots");
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const std::string path = detail::index_path("shots", i);
    const auto& js = in.object(shots[i], path);
    ShotRecord shot;
    shot.span.start_s = in.number_field(js, "start_s", path);
    shot.span.end_s = in.number_field(js, "end_s", path);
    shot.skeleton = in.string_field(js, "skeleton", path);
    if (const auto* labels = in.optional_field(js, "labels")) {
      in.object(*labels, path + ".labels");
      for (const auto& [dim_id, subs] : labels->items()) {
        const std::string dpath = path + ".labels." + dim_id;
        const auto dim = parse_dimension(dim_id);
        if (!dim) in.fail(dpath, "unknown dimension '" + dim_id + "'");
        in.object(subs, dpath);
        auto& target = shot.labels[*dim];
        for (const auto& [sub_id, value] : subs.items()) {
          target.emplace(sub_id, parse_label_value(in, value, dpath + "." + sub_id));
        }
      }
    }
    if (const auto* evidence = in.optional_field(js, "evidence")) {
      in.object(*evidence, path + ".evidence");
      for (const auto& [dim_id, text] : evidence->items()) {
        const std::string epath = path + ".evidence." + dim_id;
        const auto dim = parse_dimension(dim_id);
        if (!dim) in.fail(epath, "unknown dimension '" + dim_id + "'");
        shot.evidence.emplace(*dim, in.string(text, epath));
      }
    }
    doc.shots.push_back(std::move(shot));
  }
  return doc;
}

StructuralDocument parse_document_text(std::string_view text) {
  return parse_document(detail::parse_json_text(text, ErrorKind::kParse));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIo, "cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

StructuralDocument load_document(const std::filesystem::path& path) {
  return parse_document_text(read_text_file(path));
}

nlohmann::json to_json(const StructuralDocument& doc) {
  nlohmann::json meta;
  meta["duration_s"] = doc.meta.duration_s;
  if (doc.meta.frame_rate) meta["frame_rate"] = *doc.meta.frame_rate;
  if (doc.meta.resolution) {
    meta["resolution"] = {{"width", doc.meta.resolution->width},
                          {"height", doc.meta.resolution->height}};
  }
  if (doc.meta.platform) meta["platform"] = *doc.meta.platform;
  if (doc.meta.is_aigc) meta["is_aigc"] = *doc.meta.is_aigc;

  nlohmann::json shots = nlohmann::json::array();
  for (const auto& shot : doc.shots) {
    nlohmann::json js;
    js["start_s"] = shot.span.start_s;
    js["end_s"] = shot.span.end_s;
    js["skeleton"] = shot.skeleton;
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [dim, subs] : shot.labels) {
      nlohmann::json jd = nlohmann::json::object();
      for (const auto& [sub, value] : subs) {
        if (value.is_set) {
          jd[sub] = value.labels;
        } else {
          jd[sub] = value.labels.empty() ? std::string() : value.labels.front();
        }
      }
      labels[std::string(to_string(dim))] = std::move(jd);
    }
    js["labels"] = std::move(labels);
    if (!shot.evidence.empty()) {
      nlohmann::json ev = nlohmann::json::object();
      for (const auto& [dim, text] : shot.evidence) ev[std::string(to_string(dim))] = text;
      js["evidence"] = std::move(ev);
    }
    shots.push_back(std::move(js));
  }
  return {{"meta", std::move(meta)},
          {"skeleton_taxonomy", doc.skeleton_taxonomy},
          {"shots", std::move(shots)}};
}

std::optional<StructuralDocument> parse_prediction(std::string_view raw_output) {
  nlohmann::json j = nlohmann::json::parse(raw_output, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return std::nullopt;

  StructuralDocument doc;
  if (!j.is_object()) return doc;
  if (auto meta = j.find("meta"); meta != j.end() && meta->is_object()) {
    if (auto d = meta->find("duration_s"); d != meta->end() && d->is_number()) {
      doc.meta.duration_s = d->get<double>();
    }
  }
  if (auto tax = j.find("skeleton_taxonomy"); tax != j.end() && tax->is_string()) {
    doc.skeleton_taxonomy = tax->get<std::string>();
  }
  auto shots = j.find("shots");
  if (shots == j.end() || !shots->is_array()) return doc;
  for (const auto& js : *shots) {
    if (!js.is_object()) continue;
    auto s = js.find("start_s");
    auto e = js.find("end_s");
    if (s == js.end() || e == js.end() || !s->is_number() || !e->is_number()) continue;
    ShotRecord shot;
    shot.span = {s->get<double>(), e->get<double>()};
    if (shot.span.start_s < 0.0 || !(shot.span.start_s < shot.span.end_s)) continue;
    if (auto sk = js.find("skeleton"); sk != js.end() && sk->is_string()) {
      shot.skeleton = sk->get<std::string>();
    }
    if (auto labels = js.find("labels"); labels != js.end() && labels->is_object()) {
      for (const auto& [dim_id, subs] : labels->items()) {
        const auto dim = parse_dimension(dim_id);
        if (!dim || !subs.is_object()) continue;
        for (const auto& [sub_id, value] : subs.items()) {
          if (value.is_string()) {
            shot.labels[*dim][sub_id] = LabelValue::single(value.get<std::string>());
          } else if (value.is_array()) {
            LabelValue set = LabelValue::set({});
            for (const auto& v : value) {
              if (v.is_string()) set.labels.push_back(v.get<std::string>());
            }
            if (!set.labels.empty()) shot.labels[*dim][sub_id] = std::move(set);
          }
        }
      }
    }
    doc.shots.push_back(std::move(shot));
  }
  if (doc.meta.duration_s <= 0.0 && !doc.shots.empty()) {
    doc.meta.duration_s = doc.shots.back().span.end_s;
  }
  return doc;
}

}  // namespace sv6d
