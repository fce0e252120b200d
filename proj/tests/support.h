#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sv6d/benchgen.h"
#include "sv6d/document.h"
#include "sv6d/scoring.h"
#include "sv6d/rng.h"
#include "sv6d/taxonomy.h"

namespace sv6d::fixtures {

inline nlohmann::json sub_json(const std::string& id, const std::string& kind,
                               std::vector<std::string> labels,
                               std::vector<std::pair<std::string, std::string>> edges = {},
                               bool multi = false) {
  nlohmann::json j = {{"id", id}, {"kind", kind}, {"multi_valued", multi}, {"labels", labels}};
  if (!edges.empty()) {
    j["confusion_edges"] = nlohmann::json::array();
    for (const auto& [a, b] : edges) j["confusion_edges"].push_back({a, b});
  }
  return j;
}

// A small registry: one or two sub-dimensions per dimension, with shapes that
// make hand-computed distances easy.
inline nlohmann::json toy_registry_json() {
  nlohmann::json dims = nlohmann::json::array();
  dims.push_back({{"id", "camera_language"},
                  {"sub_dimensions",
                   {sub_json("shot_size", "ordinal", {"s0", "s1", "s2", "s3", "s4"}),
                    sub_json("movement", "categorical", {"pan", "tilt", "zoom", "static"},
                             {{"pan", "tilt"}, {"tilt", "zoom"}}, true)}}});
  dims.push_back({{"id", "aesthetics"},
                  {"sub_dimensions", {sub_json("tone", "ordinal", {"low key", "mid key", "high key"})}}});
  dims.push_back({{"id", "editing"},
                  {"sub_dimensions",
                   {sub_json("logic", "categorical", {"x", "y", "z", "lonely"}, {{"x", "y"}, {"y", "z"}})}}});
  dims.push_back({{"id", "subject"},
                  {"sub_dimensions", {sub_json("config", "ordinal", {"none", "one", "two", "many"})}}});
  dims.push_back({{"id", "narrative"},
                  {"sub_dimensions", {sub_json("function", "ordinal", {"opening", "middle", "ending"})}}});
  dims.push_back({{"id", "dissemination"},
                  {"sub_dimensions",
                   {sub_json("hook", "categorical", {"question", "reveal", "countdown", "teaser"},
                             {{"question", "reveal"}, {"countdown", "teaser"}})}}});
  return {{"version", "toy-1"},
          {"dimensions", dims},
          {"skeleton_taxonomies",
           {{"dramatic_arc", {"exposition", "rising action", "climax", "falling action", "dénouement", "other"}}}}};
}

inline const TaxonomyRegistry& toy_registry() {
  static const TaxonomyRegistry reg = TaxonomyRegistry::from_json(toy_registry_json());
  return reg;
}

// Every sub-dimension of `registry` gets a value; multi-valued ones get 1-3 distinct labels.
inline ShotLabelVector random_labels(Rng& rng, const TaxonomyRegistry& registry) {
  ShotLabelVector out;
  for (const auto& spec : registry.dimensions()) {
    auto& subs = out[spec.id];
    for (const auto& sub : spec.sub_dimensions) {
      const auto& labels = sub.labels();
      if (sub.multi_valued()) {
        const std::size_t k = 1 + rng.uniform_below(std::min<std::size_t>(3, labels.size()));
        std::vector<std::string> pool = labels;
        rng.shuffle(pool);
        pool.resize(k);
        subs[sub.id()] = LabelValue::set(pool);
      } else {
        subs[sub.id()] = LabelValue::single(labels[rng.uniform_below(labels.size())]);
      }
    }
  }
  // Keep clear of declared invalid combinations.
  for (const auto& combo : registry.invalid_combinations()) {
    auto& subs = out[combo.dimension];
    auto first = subs.find(combo.first_sub);
    auto second = subs.find(combo.second_sub);
    if (first == subs.end() || second == subs.end()) continue;
    if (first->second.labels[0] != combo.first_label || second->second.labels[0] != combo.second_label) continue;
    const auto& labels = registry.sub_dimension(combo.dimension, combo.first_sub).labels();
    for (const auto& l : labels) {
      if (l != combo.first_label) {
        first->second.labels[0] = l;
        break;
      }
    }
  }
  return out;
}

// A valid document with `n` shots over a millisecond-grid timeline.
inline StructuralDocument random_document(Rng& rng, const TaxonomyRegistry& registry, std::size_t n) {
  StructuralDocument doc;
  doc.skeleton_taxonomy = "dramatic_arc";
  const auto& arc = *registry.skeleton_labels("dramatic_arc");
  std::int64_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t len = 200 + static_cast<std::int64_t>(rng.uniform_below(4800));
    ShotRecord shot;
    shot.span = {static_cast<double>(t) / 1000.0, static_cast<double>(t + len) / 1000.0};
    shot.labels = random_labels(rng, registry);
    // Runs of equal skeleton labels are common in real documents.
    if (i > 0 && rng.uniform_below(2) == 0) {
      shot.skeleton = doc.shots.back().skeleton;
    } else {
      shot.skeleton = arc[rng.uniform_below(arc.size())];
    }
    doc.shots.push_back(std::move(shot));
    t += len;
  }
  doc.meta.duration_s = static_cast<double>(t) / 1000.0;
  return doc;
}

inline std::string document_text(const StructuralDocument& doc) { return to_json(doc).dump(); }

// Ten hand-built items over three dimensions with known outcomes:
//
//   id   dimension        type     hard  key  response              correct
//   q01  camera_language  single   yes   A    "A"                   yes
//   q02  camera_language  single   no    B    "The answer is (C)."  no
//   q03  camera_language  multi    yes   C    "C"                   yes
//   q04  camera_language  single   no    E    "E"                   yes (fallback item)
//   q05  editing          single   yes   D    "D."                  yes
//   q06  editing          multi    no    A    "Both A and C"        no (unparsed)
//   q07  editing          ordered  yes   B    "**B**"               yes
//   q08  narrative        ordered  yes   A    "C"                   no
//   q09  narrative        single   no    C    (no answer)           no
//   q10  narrative        ordered  no    D    "Answer: D"           yes
//
// Hand tally: Acc camera 3/4, editing 2/3, narrative 1/3; macro 7/12;
// hard camera 2/2 (q01, q03), editing 2/2, narrative 0/1 -> hard 2/3;
// single 3/5, multi 1/2, ordered 2/3; 9 answered, 1 unparsed, 6 correct.
struct ScoringFixture {
  std::vector<BenchItem> items;
  std::vector<AnswerRecord> answers;
};

inline BenchItem fixture_item(const std::string& id, Dimension dim, AnswerType type, char key, bool hard,
                              bool fallback = false) {
  BenchItem item;
  item.id = id;
  item.dimension = dim;
  item.sub_dimension = "sub";
  item.answer_type = type;
  item.anchor = {0.0, 1.0};
  item.stem = "Q " + id + " [0.00s, 1.00s]";
  item.hard = hard;
  item.legality_fallback = fallback;
  item.answer_key = key;
  std::vector<std::string> truth;
  std::vector<std::vector<std::string>> others;
  switch (type) {
    case AnswerType::kSingle:
      truth = {"t"};
      others = {{"o1"}, {"o2"}, {"o3"}, {"o4"}};
      break;
    case AnswerType::kMulti:
      truth = {"a", "b"};
      others = {{"a"}, {"b"}, {"a", "c"}, {"b", "c"}};
      break;
    case AnswerType::kOrdered:
      truth = {"x", "y", "z"};
      others = {{"z", "y", "x"}, {"x", "x", "x"}, {"x", "y", "y"}, {"y", "z"}};
      item.traps = {TrapKind::kReversal, TrapKind::kStasis, TrapKind::kSubstitution};
      break;
  }
  if (fallback) truth = {"outside"};
  item.truth = truth;
  const std::string_view sep = type == AnswerType::kOrdered ? kSequenceSeparator : kSetSeparator;
  std::size_t next = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    Option& o = item.options[i];
    o.key = static_cast<char>('A' + i);
    o.atoms = (!fallback && o.key == key) ? truth : others[next++];
    if (type == AnswerType::kMulti && o.key == key) std::reverse(o.atoms.begin(), o.atoms.end());
    o.text.clear();
    for (std::size_t k = 0; k < o.atoms.size(); ++k) o.text += (k ? std::string(sep) : "") + o.atoms[k];
  }
  item.options[4] = {'E', {}, std::string(kAbstainText)};
  return item;
}

inline ScoringFixture scoring_fixture() {
  using D = Dimension;
  using T = AnswerType;
  ScoringFixture f;
  f.items = {fixture_item("q01", D::kCameraLanguage, T::kSingle, 'A', true),
             fixture_item("q02", D::kCameraLanguage, T::kSingle, 'B', false),
             fixture_item("q03", D::kCameraLanguage, T::kMulti, 'C', true),
             fixture_item("q04", D::kCameraLanguage, T::kSingle, 'E', false, true),
             fixture_item("q05", D::kEditing, T::kSingle, 'D', true),
             fixture_item("q06", D::kEditing, T::kMulti, 'A', false),
             fixture_item("q07", D::kEditing, T::kOrdered, 'B', true),
             fixture_item("q08", D::kNarrative, T::kOrdered, 'A', true),
             fixture_item("q09", D::kNarrative, T::kSingle, 'C', false),
             fixture_item("q10", D::kNarrative, T::kOrdered, 'D', false)};
  f.answers = {{"q01", "A", {}},          {"q02", "The answer is (C).", {}}, {"q03", "C", {}},
               {"q04", "E", {}},          {"q05", "D.", {}},                 {"q06", "Both A and C", {}},
               {"q07", "**B**", {}},      {"q08", "C", {}},                  {"q10", "Answer: D", {}}};
  return f;
}

inline std::string answers_jsonl(const std::vector<AnswerRecord>& answers) {
  std::string out;
  for (const auto& a : answers) out += nlohmann::json{{"item_id", a.item_id}, {"response", a.raw_response}}.dump() + "\n";
  return out;
}

}  // namespace sv6d::fixtures
