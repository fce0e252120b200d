#include "sv6d/benchgen.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <functional>
#include <set>

#include "json_util.h"
#include "sv6d/error.h"
#include "sv6d/rng.h"

namespace sv6d {

namespace {

constexpr std::array<std::string_view, 3> kAnswerTypeIds = {"single", "multi", "ordered"};
constexpr std::array<std::string_view, 4> kTrapIds = {"reversal", "stasis", "substitution", "skip"};
constexpr std::array<char, 4> kChoiceKeys = {'A', 'B', 'C', 'D'};

using Atoms = std::vector<std::size_t>;  // label indices into one sub-dimension

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Case-insensitive occurrence of `needle` not glued to surrounding word characters.
bool mentions(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  const std::string h = ascii_lower(haystack);
  const std::string n = ascii_lower(needle);
  for (std::size_t pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + 1)) {
    const bool left = pos == 0 || !is_word_byte(static_cast<unsigned char>(h[pos - 1]));
    const std::size_t end = pos + n.size();
    const bool right = end == h.size() || !is_word_byte(static_cast<unsigned char>(h[end]));
    if (left && right) return true;
  }
  return false;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string render_stem(const std::string& tmpl, const Anchor& anchor) {
  const std::string rendered = render_anchor(anchor);
  std::string out;
  std::size_t from = 0;
  for (std::size_t pos = tmpl.find(kAnchorPlaceholder); pos != std::string::npos;
       pos = tmpl.find(kAnchorPlaceholder, from)) {
    out.append(tmpl, from, pos - from);
    out += rendered;
    from = pos + kAnchorPlaceholder.size();
  }
  out.append(tmpl, from);
  return out;
}

Error generation_error(const ItemConfig& cfg, const std::string& what) {
  return Error(ErrorKind::kGeneration, cfg.task_id + ": " + what);
}

class Builder {
 public:
  Builder(const ItemConfig& cfg, const SubDimension& sub, Rng& rng)
      : cfg_(cfg), sub_(sub), rng_(rng) {}

  Option make_option(const Atoms& atoms) const {
    Option o;
    Atoms ordered = atoms;
    if (cfg_.answer_type == AnswerType::kMulti) std::sort(ordered.begin(), ordered.end());
    for (std::size_t a : ordered) o.atoms.push_back(sub_.labels()[a]);
    o.text = join(o.atoms, cfg_.answer_type == AnswerType::kOrdered ? kSequenceSeparator
                                                                     : kSetSeparator);
    return o;
  }

  std::vector<std::size_t> neighbors(std::size_t label) const { return sub_.shell(label, 1); }

  std::vector<std::size_t> shuffled(std::vector<std::size_t> v) {
    rng_.shuffle(v);
    return v;
  }

  Atoms random_atoms(std::size_t n, bool distinct) {
    Atoms out;
    if (distinct) {
      std::vector<std::size_t> all(sub_.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      rng_.shuffle(all);
      out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(n, all.size())));
    } else {
      for (std::size_t i = 0; i < n; ++i) out.push_back(rng_.uniform_below(sub_.size()));
    }
    return out;
  }

 private:
  const ItemConfig& cfg_;
  const SubDimension& sub_;
  Rng& rng_;
};

Atoms canonical(Atoms a, AnswerType type) {
  if (type == AnswerType::kMulti) std::sort(a.begin(), a.end());
  return a;
}

// Collects distinct distractors, never equal to the truth.
struct DistractorSet {
  AnswerType type;
  Atoms truth;
  std::vector<Atoms> picked;
  std::set<Atoms> seen;

  DistractorSet(AnswerType t, const Atoms& y) : type(t), truth(canonical(y, t)) { seen.insert(truth); }

  bool full() const { return picked.size() == 3; }
  bool add(const Atoms& a) {
    if (full() || a.empty()) return false;
    const Atoms key = canonical(a, type);
    if (!seen.insert(key).second) return false;
    picked.push_back(a);
    return true;
  }
};

std::optional<TrapKind> classify_trap(const Atoms& truth, const Atoms& seq) {
  const std::size_t m = truth.size();
  if (seq == truth) return std::nullopt;
  if (seq.size() == m) {
    if (std::equal(seq.begin(), seq.end(), truth.rbegin())) return TrapKind::kReversal;
    if (std::all_of(seq.begin(), seq.end(), [&](std::size_t x) { return x == seq.front(); })) {
      return TrapKind::kStasis;
    }
    std::size_t diff = 0;
    for (std::size_t i = 0; i < m; ++i) diff += seq[i] != truth[i];
    if (diff == 1) return TrapKind::kSubstitution;
  } else if (m >= 3 && seq.size() + 1 == m) {
    for (std::size_t i = 1; i + 1 < m; ++i) {
      Atoms dropped = truth;
      dropped.erase(dropped.begin() + static_cast<std::ptrdiff_t>(i));
      if (dropped == seq) return TrapKind::kSkip;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(AnswerType type) noexcept {
  return kAnswerTypeIds[static_cast<std::size_t>(type)];
}

std::optional<AnswerType> parse_answer_type(std::string_view id) noexcept {
  for (std::size_t i = 0; i < kAnswerTypeIds.size(); ++i) {
    if (kAnswerTypeIds[i] == id) return static_cast<AnswerType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(TrapKind kind) noexcept { return kTrapIds[static_cast<std::size_t>(kind)]; }

std::optional<TrapKind> parse_trap_kind(std::string_view id) noexcept {
  for (std::size_t i = 0; i < kTrapIds.size(); ++i) {
    if (kTrapIds[i] == id) return static_cast<TrapKind>(i);
  }
  return std::nullopt;
}

std::string render_anchor(const Anchor& anchor) {
  char buf[96];
  if (anchor.end_s) {
    std::snprintf(buf, sizeof buf, "[%.2fs, %.2fs]", anchor.start_s, *anchor.end_s);
  } else {
    std::snprintf(buf, sizeof buf, "t=%.2fs", anchor.start_s);
  }
  return buf;
}

const SubDimension& resolve_sub_dimension(const ItemConfig& cfg, const TaxonomyRegistry& registry) {
  const DimensionSpec& dim = registry.dimension(cfg.dimension);
  if (!cfg.sub_dimension.empty()) {
    const SubDimension* sub = dim.find(cfg.sub_dimension);
    if (sub == nullptr) {
      throw Error(ErrorKind::kInvalidArgument,
                  cfg.task_id + ": unknown sub-dimension " + cfg.sub_dimension, "sub_dimension");
    }
    return *sub;
  }
  const SubDimension* found = nullptr;
  for (const auto& sub : dim.sub_dimensions) {
    const bool all = !cfg.truth.empty() &&
                     std::all_of(cfg.truth.begin(), cfg.truth.end(),
                                 [&](const std::string& t) { return sub.contains(t); });
    if (!all) continue;
    if (found != nullptr) throw generation_error(cfg, "truth fits several sub-dimensions");
    found = &sub;
  }
  if (found == nullptr) {
    throw generation_error(cfg, "no sub-dimension given and none holds the truth labels");
  }
  return *found;
}

BenchItem generate_item(const ItemConfig& cfg, const TaxonomyRegistry& registry) {
  if (cfg.task_id.empty()) throw Error(ErrorKind::kInvalidArgument, "item needs a task_id", "task_id");
  if (cfg.truth.empty()) throw Error(ErrorKind::kInvalidArgument, cfg.task_id + ": empty truth", "truth");
  if (cfg.answer_type == AnswerType::kSingle && cfg.truth.size() != 1) {
    throw Error(ErrorKind::kInvalidArgument, cfg.task_id + ": single items take exactly one truth label",
                "truth");
  }
  if (cfg.answer_type == AnswerType::kMulti) {
    const std::set<std::string> distinct(cfg.truth.begin(), cfg.truth.end());
    if (distinct.size() != cfg.truth.size()) {
      throw Error(ErrorKind::kInvalidArgument, cfg.task_id + ": repeated label in truth set", "truth");
    }
  }
  const Anchor& anchor = cfg.anchor;
  const double limit = cfg.duration_s ? *cfg.duration_s + kTimestampTolerance : 1e300;
  if (anchor.start_s < 0.0 || anchor.start_s > limit ||
      (anchor.end_s && (*anchor.end_s <= anchor.start_s || *anchor.end_s > limit))) {
    throw Error(ErrorKind::kInvalidArgument, cfg.task_id + ": anchor outside the video", "anchor");
  }
  if (cfg.template_text.find(kAnchorPlaceholder) == std::string::npos) {
    throw generation_error(cfg, "template has no {anchor} placeholder");
  }

  const SubDimension& sub = resolve_sub_dimension(cfg, registry);
  BenchItem item;
  item.id = cfg.task_id;
  item.dimension = cfg.dimension;
  item.sub_dimension = sub.id();
  item.answer_type = cfg.answer_type;
  item.anchor = anchor;
  item.truth = cfg.truth;
  item.stem = render_stem(cfg.template_text, anchor);

  for (const auto& label : sub.labels()) {
    if (mentions(item.stem, label)) throw generation_error(cfg, "stem mentions label '" + label + "'");
  }
  for (const auto& label : cfg.truth) {
    if (mentions(item.stem, label)) throw generation_error(cfg, "stem mentions the truth");
  }
  if (!cfg.evidence.empty() && ascii_lower(item.stem).find(ascii_lower(cfg.evidence)) != std::string::npos) {
    throw generation_error(cfg, "stem contains the evidence text");
  }
  if (sub.size() < 4) throw generation_error(cfg, "label space too small for four distinct options");

  Rng rng(cfg.seed);
  Builder builder(cfg, sub, rng);
  item.options[4] = Option{'E', {}, std::string(kAbstainText)};

  Atoms truth;
  bool legal = true;
  for (const auto& label : cfg.truth) {
    const auto idx = sub.find(label);
    if (!idx) {
      legal = false;
      break;
    }
    truth.push_back(*idx);
  }

  if (!legal) {
    // Legality fallback: E is correct; A-D are arbitrary in-vocabulary options
    // of the requested shape.
    item.legality_fallback = true;
    item.answer_key = 'E';
    const std::size_t m = cfg.answer_type == AnswerType::kSingle
                              ? 1
                              : std::min(cfg.truth.size(), sub.size());
    std::set<Atoms> seen;
    std::vector<Atoms> options;
    for (int attempt = 0; options.size() < 4 && attempt < 10000; ++attempt) {
      Atoms a = builder.random_atoms(m, cfg.answer_type != AnswerType::kOrdered);
      if (seen.insert(canonical(a, cfg.answer_type)).second) options.push_back(std::move(a));
    }
    if (options.size() < 4) throw generation_error(cfg, "cannot form four distinct options");
    for (std::size_t i = 0; i < 4; ++i) {
      item.options[i] = builder.make_option(options[i]);
      item.options[i].key = kChoiceKeys[i];
    }
    return item;
  }

  const std::size_t key_pos = rng.uniform_below(4);
  DistractorSet ds(cfg.answer_type, truth);
  std::vector<std::optional<TrapKind>> kinds;

  // Membership of a distractor in the confusion neighborhood of the truth.
  std::function<bool(const Atoms&)> in_neighborhood;

  switch (cfg.answer_type) {
    case AnswerType::kSingle: {
      const std::size_t y = truth.front();
      const auto n1 = builder.neighbors(y);
      if (n1.empty()) throw generation_error(cfg, "truth label has no confusion neighbor");
      const auto n2 = sub.shell(y, 2);
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < sub.size(); ++i) {
        if (i == y || std::count(n1.begin(), n1.end(), i) || std::count(n2.begin(), n2.end(), i)) continue;
        rest.push_back(i);
      }
      for (const std::vector<std::size_t>* pool : std::initializer_list<const std::vector<std::size_t>*>{&n1, &n2, &rest}) {
        for (std::size_t label : builder.shuffled(*pool)) ds.add({label});
      }
      in_neighborhood = [n1](const Atoms& a) {
        return a.size() == 1 && std::count(n1.begin(), n1.end(), a.front()) > 0;
      };
      break;
    }
    case AnswerType::kMulti: {
      const std::set<std::size_t> t(truth.begin(), truth.end());
      std::set<std::size_t> near;
      for (std::size_t x : truth) {
        for (std::size_t n : builder.neighbors(x)) {
          if (!t.count(n)) near.insert(n);
        }
      }
      auto with = [&](std::size_t add, std::optional<std::size_t> drop) {
        Atoms a;
        for (std::size_t x : truth) {
          if (!drop || x != *drop) a.push_back(x);
        }
        a.push_back(add);
        return a;
      };
      std::vector<Atoms> insertions, deletions, swaps;
      for (std::size_t n : near) insertions.push_back(with(n, std::nullopt));
      if (truth.size() >= 2) {
        for (std::size_t x : truth) {
          Atoms a;
          for (std::size_t y : truth) {
            if (y != x) a.push_back(y);
          }
          deletions.push_back(a);
        }
      }
      for (std::size_t x : truth) {
        for (std::size_t n : near) swaps.push_back(with(n, x));
      }
      if (insertions.empty() && deletions.empty() && swaps.empty()) {
        throw generation_error(cfg, "truth set has no confusion neighbor");
      }
      std::vector<Atoms> remaining;
      for (std::vector<Atoms>* group : {&insertions, &deletions, &swaps}) {
        rng.shuffle(*group);
        if (!group->empty()) ds.add(group->front());
        remaining.insert(remaining.end(), group->begin(), group->end());
      }
      rng.shuffle(remaining);
      for (const auto& a : remaining) ds.add(a);
      // One edit with an arbitrary label.
      std::vector<Atoms> loose;
      for (std::size_t n = 0; n < sub.size(); ++n) {
        if (t.count(n) || near.count(n)) continue;
        loose.push_back(with(n, std::nullopt));
        for (std::size_t x : truth) loose.push_back(with(n, x));
      }
      rng.shuffle(loose);
      for (const auto& a : loose) ds.add(a);
      for (int attempt = 0; !ds.full() && attempt < 10000; ++attempt) {
        ds.add(builder.random_atoms(1 + rng.uniform_below(sub.size()), true));
      }
      in_neighborhood = [t, near](const Atoms& a) {
        const std::set<std::size_t> s(a.begin(), a.end());
        std::size_t added = 0, removed = 0;
        for (std::size_t x : s) {
          if (!t.count(x)) {
            if (!near.count(x)) return false;
            ++added;
          }
        }
        for (std::size_t x : t) removed += s.count(x) == 0;
        return added <= 1 && removed <= 1 && added + removed >= 1;
      };
      break;
    }
    case AnswerType::kOrdered: {
      const std::size_t m = truth.size();
      if (m < 2) throw generation_error(cfg, "trap construction is infeasible for a sequence of length 1");
      std::vector<std::pair<std::size_t, std::size_t>> near_subs;  // (position, label)
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t n : builder.neighbors(truth[i])) near_subs.emplace_back(i, n);
      }
      if (near_subs.empty()) throw generation_error(cfg, "no position has a confusion neighbor");
      rng.shuffle(near_subs);
      auto substituted = [&](std::size_t i, std::size_t label) {
        Atoms a = truth;
        a[i] = label;
        return a;
      };
      // Candidates are accepted only when their trap kind is unambiguous.
      auto offer = [&](const Atoms& a, TrapKind intended) {
        if (classify_trap(truth, a) == intended) ds.add(a);
      };
      offer(Atoms(truth.rbegin(), truth.rend()), TrapKind::kReversal);
      offer(Atoms(m, truth.front()), TrapKind::kStasis);
      for (const auto& [i, n] : near_subs) {
        const std::size_t before = ds.picked.size();
        offer(substituted(i, n), TrapKind::kSubstitution);
        if (ds.picked.size() > before) break;
      }
      std::vector<std::size_t> interior;
      for (std::size_t i = 1; i + 1 < m; ++i) interior.push_back(i);
      rng.shuffle(interior);
      auto skipped = [&](std::size_t i) {
        Atoms a = truth;
        a.erase(a.begin() + static_cast<std::ptrdiff_t>(i));
        return a;
      };
      if (!interior.empty()) offer(skipped(interior.front()), TrapKind::kSkip);
      for (const auto& [i, n] : near_subs) offer(substituted(i, n), TrapKind::kSubstitution);
      for (std::size_t i : interior) offer(skipped(i), TrapKind::kSkip);
      std::vector<std::pair<std::size_t, std::size_t>> far_subs;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t n = 0; n < sub.size(); ++n) {
          if (n != truth[i]) far_subs.emplace_back(i, n);
        }
      }
      rng.shuffle(far_subs);
      for (const auto& [i, n] : far_subs) offer(substituted(i, n), TrapKind::kSubstitution);
      for (const auto& a : ds.picked) kinds.push_back(classify_trap(truth, a));
      std::set<TrapKind> distinct;
      for (const auto& k : kinds) {
        if (k) distinct.insert(*k);
      }
      if (distinct.size() < 2) throw generation_error(cfg, "fewer than two trap kinds available");
      item.traps.assign(distinct.begin(), distinct.end());
      in_neighborhood = [truth, &builder](const Atoms& a) {
        if (a.size() != truth.size()) return false;
        std::size_t diff = 0;
        bool near = true;
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (a[i] == truth[i]) continue;
          ++diff;
          const auto n = builder.neighbors(truth[i]);
          near = near && std::count(n.begin(), n.end(), a[i]) > 0;
        }
        return diff == 1 && near;
      };
      break;
    }
  }
  if (!ds.full()) throw generation_error(cfg, "label space too small for four distinct options");

  std::size_t hard_count = 0;
  for (const auto& a : ds.picked) hard_count += in_neighborhood(a);
  if (hard_count == 0) throw generation_error(cfg, "no distractor from the confusion neighborhood");
  item.hard = hard_count >= 2;

  std::vector<Atoms> distractors = ds.picked;
  rng.shuffle(distractors);
  std::size_t next = 0;
  for (std::size_t pos = 0; pos < 4; ++pos) {
    item.options[pos] = builder.make_option(pos == key_pos ? truth : distractors[next++]);
    item.options[pos].key = kChoiceKeys[pos];
  }
  item.answer_key = kChoiceKeys[key_pos];
  return item;
}

// ---- verification -----------------------------------------------------------
// A second, deliberately naive implementation: labels are located by linear
// scan and neighborhoods come straight from ranks and the confusion edge list.

namespace {

struct Vocabulary {
  const SubDimension& sub;

  std::optional<std::size_t> rank(const std::string& label) const {
    const auto& labels = sub.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return i;
    }
    return std::nullopt;
  }

  bool adjacent(const std::string& a, const std::string& b) const {
    if (a == b) return false;
    if (sub.kind() == SubDimensionKind::kOrdinal) {
      const auto ra = rank(a), rb = rank(b);
      return ra && rb && (*ra + 1 == *rb || *rb + 1 == *ra);
    }
    for (const auto& [x, y] : sub.confusion_edges()) {
      if ((x == a && y == b) || (x == b && y == a)) return true;
    }
    return false;
  }
};

bool same_answer(const std::vector<std::string>& option, const std::vector<std::string>& truth,
                 AnswerType type) {
  switch (type) {
    case AnswerType::kSingle:
      return option.size() == 1 && truth.size() == 1 && option[0] == truth[0];
    case AnswerType::kMulti: {
      std::vector<std::string> a = option, b = truth;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      return a == b;
    }
    case AnswerType::kOrdered:
      return option == truth;
  }
  return false;
}

bool near_truth(const std::vector<std::string>& option, const std::vector<std::string>& truth,
                AnswerType type, const Vocabulary& vocab) {
  switch (type) {
    case AnswerType::kSingle:
      return option.size() == 1 && truth.size() == 1 && vocab.adjacent(truth[0], option[0]);
    case AnswerType::kMulti: {
      std::vector<std::string> added, removed;
      for (const auto& x : option) {
        if (std::find(truth.begin(), truth.end(), x) == truth.end()) added.push_back(x);
      }
      for (const auto& x : truth) {
        if (std::find(option.begin(), option.end(), x) == option.end()) removed.push_back(x);
      }
      if (added.size() > 1 || removed.size() > 1 || added.size() + removed.size() == 0) return false;
      for (const auto& x : added) {
        const bool ok = std::any_of(truth.begin(), truth.end(),
                                    [&](const std::string& y) { return vocab.adjacent(x, y); });
        if (!ok) return false;
      }
      return true;
    }
    case AnswerType::kOrdered: {
      if (option.size() != truth.size()) return false;
      std::size_t diff = 0;
      for (std::size_t i = 0; i < option.size(); ++i) {
        if (option[i] == truth[i]) continue;
        if (!vocab.adjacent(truth[i], option[i])) return false;
        ++diff;
      }
      return diff == 1;
    }
  }
  return false;
}

std::optional<TrapKind> trap_of(const std::vector<std::string>& option,
                                const std::vector<std::string>& truth) {
  const std::size_t m = truth.size();
  if (option == truth) return std::nullopt;
  if (option.size() == m) {
    std::vector<std::string> reversed(truth.rbegin(), truth.rend());
    if (option == reversed) return TrapKind::kReversal;
    if (std::count(option.begin(), option.end(), option[0]) == static_cast<std::ptrdiff_t>(m)) {
      return TrapKind::kStasis;
    }
    std::size_t diff = 0;
    for (std::size_t i = 0; i < m; ++i) diff += option[i] != truth[i];
    return diff == 1 ? std::optional(TrapKind::kSubstitution) : std::nullopt;
  }
  if (m >= 3 && option.size() == m - 1) {
    for (std::size_t k = 1; k + 1 < m; ++k) {
      std::vector<std::string> d = truth;
      d.erase(d.begin() + static_cast<std::ptrdiff_t>(k));
      if (d == option) return TrapKind::kSkip;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<InvariantViolation> verify_item(const BenchItem& item, const ItemConfig& cfg,
                                            const TaxonomyRegistry& registry) {
  std::vector<InvariantViolation> out;
  auto flag = [&](const char* inv, std::string msg) { out.push_back({inv, std::move(msg)}); };

  const DimensionSpec& dim = registry.dimension(cfg.dimension);
  const SubDimension* sub = dim.find(item.sub_dimension);
  if (sub == nullptr) {
    flag("config", "unknown sub-dimension " + item.sub_dimension);
    return out;
  }
  if (!cfg.sub_dimension.empty() && cfg.sub_dimension != item.sub_dimension) {
    flag("config", "sub-dimension differs from the configuration");
  }
  if (item.id != cfg.task_id || item.dimension != cfg.dimension ||
      item.answer_type != cfg.answer_type || !(item.anchor == cfg.anchor) || item.truth != cfg.truth) {
    flag("config", "item metadata differs from the configuration");
  }
  const Vocabulary vocab{*sub};

  const std::string_view keys = "ABCDE";
  for (std::size_t i = 0; i < 5; ++i) {
    if (item.options[i].key != keys[i]) flag("I2", "options are not keyed A-E in order");
  }
  const Option& e = item.options[4];
  if (e.text != kAbstainText || !e.atoms.empty()) flag("I2", "option E is not the fixed abstain option");

  // I1 and I2
  for (std::size_t i = 0; i < 4; ++i) {
    const Option& o = item.options[i];
    for (const auto& atom : o.atoms) {
      if (!vocab.rank(atom)) flag("I1", std::string(1, o.key) + ": '" + atom + "' is not in the label space");
    }
    switch (item.answer_type) {
      case AnswerType::kSingle:
        if (o.atoms.size() != 1 || o.text != o.atoms[0]) flag("I2", std::string(1, o.key) + " is not one label");
        break;
      case AnswerType::kMulti: {
        std::set<std::string> s(o.atoms.begin(), o.atoms.end());
        std::string text;
        for (std::size_t k = 0; k < o.atoms.size(); ++k) text += (k ? "; " : "") + o.atoms[k];
        if (o.atoms.empty() || s.size() != o.atoms.size() || o.text != text) {
          flag("I2", std::string(1, o.key) + " is not a label set");
        }
        break;
      }
      case AnswerType::kOrdered: {
        std::string text;
        for (std::size_t k = 0; k < o.atoms.size(); ++k) text += (k ? " → " : "") + o.atoms[k];
        if (o.atoms.empty() || o.text != text) flag("I2", std::string(1, o.key) + " is not a label sequence");
        break;
      }
    }
  }

  bool legal = !cfg.truth.empty();
  for (const auto& t : cfg.truth) legal = legal && vocab.rank(t).has_value();

  // I6
  const std::string expected_stem = [&] {
    std::string s = cfg.template_text;
    for (auto p = s.find("{anchor}"); p != std::string::npos; p = s.find("{anchor}", p)) {
      const std::string r = render_anchor(cfg.anchor);
      s.replace(p, 8, r);
      p += r.size();
    }
    return s;
  }();
  if (item.stem != expected_stem) flag("I6", "stem is not the rendered template");
  auto leaks = [&](const std::string& needle) {
    std::string h, n;
    for (char c : item.stem) h += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (char c : needle) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n.empty() || n.size() > h.size()) return false;
    auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80; };
    for (std::size_t p = 0; p + n.size() <= h.size(); ++p) {
      if (h.compare(p, n.size(), n) != 0) continue;
      if ((p == 0 || !word(h[p - 1])) && (p + n.size() == h.size() || !word(h[p + n.size()]))) return true;
    }
    return false;
  };
  for (const auto& t : cfg.truth) {
    if (leaks(t)) flag("I6", "stem contains the truth '" + t + "'");
  }
  for (const auto& label : sub->labels()) {
    if (leaks(label)) flag("I6", "stem contains label '" + label + "'");
  }
  if (!cfg.evidence.empty()) {
    std::string h, n;
    for (char c : item.stem) h += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (char c : cfg.evidence) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (h.find(n) != std::string::npos) flag("I6", "stem contains the evidence");
  }

  // I7
  if (!legal) {
    if (item.answer_key != 'E') flag("I7", "truth is outside the label space but the key is not E");
    if (!item.legality_fallback) flag("I7", "fallback item not marked");
    if (item.hard || !item.traps.empty()) flag("I7", "fallback item carries hard/trap metadata");
    for (std::size_t i = 0; i < 4; ++i) {
      if (same_answer(item.options[i].atoms, cfg.truth, item.answer_type)) {
        flag("I7", "fallback option matches the truth");
      }
    }
    return out;
  }
  if (item.legality_fallback) flag("I7", "in-vocabulary truth marked as fallback");

  // I3
  std::vector<std::size_t> matching;
  for (std::size_t i = 0; i < 4; ++i) {
    if (same_answer(item.options[i].atoms, cfg.truth, item.answer_type)) matching.push_back(i);
  }
  if (matching.size() != 1) {
    flag("I3", std::to_string(matching.size()) + " of A-D match the truth");
  } else if (keys[matching[0]] != item.answer_key) {
    flag("I3", "answer key does not point at the matching option");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (same_answer(item.options[i].atoms, item.options[j].atoms, item.answer_type)) {
        flag("I3", std::string("options ") + keys[i] + " and " + keys[j] + " coincide");
      }
    }
  }

  // I4
  std::size_t near = 0;
  std::set<TrapKind> trap_kinds;
  for (std::size_t i = 0; i < 4; ++i) {
    if (keys[i] == item.answer_key) continue;
    near += near_truth(item.options[i].atoms, cfg.truth, item.answer_type, vocab);
    if (item.answer_type == AnswerType::kOrdered) {
      if (auto k = trap_of(item.options[i].atoms, cfg.truth)) trap_kinds.insert(*k);
    }
  }
  if (near == 0) flag("I4", "no distractor from the confusion neighborhood");
  if (item.hard != (near >= 2)) flag("I4", "hard flag disagrees with the neighborhood count");

  // I5
  if (item.answer_type == AnswerType::kOrdered) {
    if (trap_kinds.size() < 2) flag("I5", "fewer than two trap kinds among the distractors");
    const std::set<TrapKind> recorded(item.traps.begin(), item.traps.end());
    if (recorded != trap_kinds || recorded.size() != item.traps.size()) {
      flag("I5", "recorded traps disagree with the distractors");
    }
  } else if (!item.traps.empty()) {
    flag("I5", "traps recorded on a non-ordered item");
  }
  return out;
}

// ---- serialization ----------------------------------------------------------

nlohmann::json to_json(const BenchItem& item) {
  nlohmann::json anchor = {{"start_s", item.anchor.start_s}};
  if (item.anchor.end_s) anchor["end_s"] = *item.anchor.end_s;
  nlohmann::json options = nlohmann::json::array();
  for (const auto& o : item.options) {
    options.push_back({{"key", std::string(1, o.key)}, {"text", o.text}, {"atoms", o.atoms}});
  }
  nlohmann::json traps = nlohmann::json::array();
  for (TrapKind t : item.traps) traps.push_back(to_string(t));
  return {{"id", item.id},
          {"dimension", to_string(item.dimension)},
          {"sub_dimension", item.sub_dimension},
          {"answer_type", to_string(item.answer_type)},
          {"anchor", anchor},
          {"stem", item.stem},
          {"options", options},
          {"answer_key", std::string(1, item.answer_key)},
          {"hard", item.hard},
          {"legality_fallback", item.legality_fallback},
          {"traps", traps},
          {"truth", item.truth}};
}

namespace {

std::vector<std::string> string_array(const detail::JsonReader& in, const nlohmann::json& j,
                                      const std::string& path) {
  std::vector<std::string> out;
  in.array(j, path);
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(in.string(j[i], detail::index_path(path, i)));
  return out;
}

char letter(const detail::JsonReader& in, const nlohmann::json& j, const std::string& path) {
  const std::string s = in.string(j, path);
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'E') in.fail(path, "expected a letter A-E");
  return s[0];
}

Anchor parse_anchor(const detail::JsonReader& in, const nlohmann::json& j, const std::string& path) {
  Anchor a;
  a.start_s = in.number_field(j, "start_s", path);
  if (const auto* e = in.optional_field(j, "end_s")) a.end_s = in.number(*e, detail::join_path(path, "end_s"));
  return a;
}

Dimension dimension_field(const detail::JsonReader& in, const nlohmann::json& j, const std::string& path) {
  const std::string id = in.string_field(j, "dimension", path);
  const auto d = parse_dimension(id);
  if (!d) in.fail(detail::join_path(path, "dimension"), "unknown dimension '" + id + "'");
  return *d;
}

AnswerType answer_type_field(const detail::JsonReader& in, const nlohmann::json& j,
                             const std::string& path) {
  const std::string id = in.string_field(j, "answer_type", path);
  const auto t = parse_answer_type(id);
  if (!t) in.fail(detail::join_path(path, "answer_type"), "unknown answer type '" + id + "'");
  return *t;
}

}  // namespace

BenchItem parse_bench_item(const nlohmann::json& j) {
  const detail::JsonReader in(ErrorKind::kParse);
  in.object(j, "");
  BenchItem item;
  item.id = in.string_field(j, "id", "");
  item.dimension = dimension_field(in, j, "");
  item.sub_dimension = in.string_field(j, "sub_dimension", "");
  item.answer_type = answer_type_field(in, j, "");
  item.anchor = parse_anchor(in, in.field(j, "anchor", ""), "anchor");
  item.stem = in.string_field(j, "stem", "");
  const auto& options = in.array(in.field(j, "options", ""), "options");
  if (options.size() != 5) in.fail("options", "expected five options");
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string path = detail::index_path("options", i);
    Option& o = item.options[i];
    o.key = letter(in, in.field(options[i], "key", path), detail::join_path(path, "key"));
    o.text = in.string_field(options[i], "text", path);
    o.atoms = string_array(in, in.field(options[i], "atoms", path), detail::join_path(path, "atoms"));
  }
  item.answer_key = letter(in, in.field(j, "answer_key", ""), "answer_key");
  item.hard = in.boolean(in.field(j, "hard", ""), "hard");
  if (const auto* f = in.optional_field(j, "legality_fallback")) {
    item.legality_fallback = in.boolean(*f, "legality_fallback");
  }
  if (const auto* t = in.optional_field(j, "traps")) {
    const auto names = string_array(in, *t, "traps");
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto k = parse_trap_kind(names[i]);
      if (!k) in.fail(detail::index_path("traps", i), "unknown trap kind");
      item.traps.push_back(*k);
    }
  }
  item.truth = string_array(in, in.field(j, "truth", ""), "truth");
  return item;
}

// ---- plans and suites -------------------------------------------------------

Plan parse_plan(const nlohmann::json& j, const TaxonomyRegistry& registry) {
  const detail::JsonReader in(ErrorKind::kConfig);
  in.object(j, "");
  Plan plan;
  if (const auto* s = in.optional_field(j, "seed")) plan.seed = in.unsigned_integer(*s, "seed");
  for (const auto& [key, value] : j.items()) {
    if (key != "seed" && key != "tasks" && key != "items") in.fail(key, "unknown plan field");
  }
  if (const auto* tasks = in.optional_field(j, "tasks")) {
    in.array(*tasks, "tasks");
    for (std::size_t i = 0; i < tasks->size(); ++i) {
      const std::string path = detail::index_path("tasks", i);
      const auto& t = (*tasks)[i];
      in.object(t, path);
      PlanTask task;
      task.dimension = dimension_field(in, t, path);
      task.sub_dimension = in.string_field(t, "sub_dimension", path);
      if (registry.dimension(task.dimension).find(task.sub_dimension) == nullptr) {
        in.fail(detail::join_path(path, "sub_dimension"), "unknown sub-dimension '" + task.sub_dimension + "'");
      }
      task.answer_type = answer_type_field(in, t, path);
      task.count = in.unsigned_integer(in.field(t, "count", path), detail::join_path(path, "count"));
      if (const auto* len = in.optional_field(t, "sequence_length")) {
        task.sequence_length = in.unsigned_integer(*len, detail::join_path(path, "sequence_length"));
      }
      if (const auto* tmpl = in.optional_field(t, "template")) {
        task.template_text = in.string(*tmpl, detail::join_path(path, "template"));
      }
      plan.tasks.push_back(std::move(task));
    }
  }
  if (const auto* items = in.optional_field(j, "items")) {
    in.array(*items, "items");
    for (std::size_t i = 0; i < items->size(); ++i) {
      const std::string path = detail::index_path("items", i);
      const auto& it = (*items)[i];
      in.object(it, path);
      ItemConfig cfg;
      cfg.task_id = in.string_field(it, "task_id", path);
      cfg.dimension = dimension_field(in, it, path);
      if (const auto* sub = in.optional_field(it, "sub_dimension")) {
        cfg.sub_dimension = in.string(*sub, detail::join_path(path, "sub_dimension"));
      }
      cfg.template_text = in.string_field(it, "template", path);
      cfg.anchor = parse_anchor(in, in.field(it, "anchor", path), detail::join_path(path, "anchor"));
      cfg.truth = string_array(in, in.field(it, "truth", path), detail::join_path(path, "truth"));
      if (const auto* ev = in.optional_field(it, "evidence")) {
        cfg.evidence = in.string(*ev, detail::join_path(path, "evidence"));
      }
      cfg.answer_type = answer_type_field(in, it, path);
      if (const auto* s = in.optional_field(it, "seed")) {
        cfg.seed = in.unsigned_integer(*s, detail::join_path(path, "seed"));
      } else {
        cfg.seed = 0;  // derived from the suite seed at generation time
      }
      if (const auto* d = in.optional_field(it, "duration_s")) {
        cfg.duration_s = in.number(*d, detail::join_path(path, "duration_s"));
      }
      plan.items.push_back(std::move(cfg));
    }
  }
  if (plan.tasks.empty() && plan.items.empty()) in.fail("tasks", "plan has no tasks or items");
  return plan;
}

namespace {

std::string default_template(const PlanTask& task) {
  switch (task.answer_type) {
    case AnswerType::kSingle:
      return "Which " + task.sub_dimension + " option fits the span {anchor}?";
    case AnswerType::kMulti:
      return "Select every " + task.sub_dimension + " tag that applies within {anchor}.";
    case AnswerType::kOrdered:
      return "How does " + task.sub_dimension + " progress across {anchor}?";
  }
  return {};
}

struct Candidate {
  std::size_t doc;
  std::size_t first_shot;
  std::size_t last_shot;
};

std::vector<Candidate> candidates_for(const std::vector<StructuralDocument>& docs, const PlanTask& task) {
  std::vector<Candidate> out;
  auto value = [&](const ShotRecord& shot) -> const LabelValue* {
    auto d = shot.labels.find(task.dimension);
    if (d == shot.labels.end()) return nullptr;
    auto s = d->second.find(task.sub_dimension);
    return s == d->second.end() ? nullptr : &s->second;
  };
  for (std::size_t di = 0; di < docs.size(); ++di) {
    const auto& shots = docs[di].shots;
    for (std::size_t si = 0; si < shots.size(); ++si) {
      if (task.answer_type != AnswerType::kOrdered) {
        const LabelValue* v = value(shots[si]);
        if (v == nullptr || v->labels.empty()) continue;
        const bool want_set = task.answer_type == AnswerType::kMulti;
        if (v->is_set != want_set || (!want_set && v->labels.size() != 1)) continue;
        out.push_back({di, si, si});
        continue;
      }
      const std::size_t len = task.sequence_length;
      if (len == 0 || si + len > shots.size()) continue;
      bool ok = true;
      for (std::size_t k = si; k < si + len && ok; ++k) {
        const LabelValue* v = value(shots[k]);
        ok = v != nullptr && !v->is_set && v->labels.size() == 1;
        if (ok && k > si) ok = value(shots[k - 1])->labels[0] != v->labels[0];
      }
      if (ok) out.push_back({di, si, si + len - 1});
    }
  }
  return out;
}

}  // namespace

Suite generate_suite(const std::vector<StructuralDocument>& docs, const Plan& plan, std::uint64_t seed,
                     const TaxonomyRegistry& registry) {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto report = validate_document(docs[i], registry);
    if (!report.ok()) {
      throw Error(ErrorKind::kInvalidDocument,
                  "document " + std::to_string(i) + ": " + report.violations.front().describe());
    }
  }
  Suite suite;
  suite.manifest.seed = seed;
  suite.manifest.registry_version = registry.version();

  auto emit = [&](const ItemConfig& cfg) {
    try {
      BenchItem item = generate_item(cfg, registry);
      suite.items.push_back(std::move(item));
      suite.configs.push_back(cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kGeneration) throw;
      suite.manifest.skipped.push_back({cfg.task_id, e.what()});
    }
  };

  for (std::size_t ti = 0; ti < plan.tasks.size(); ++ti) {
    const PlanTask& task = plan.tasks[ti];
    const std::string task_key = std::string(to_string(task.dimension)) + "/" + task.sub_dimension + "/" +
                                 std::string(to_string(task.answer_type)) + "/t" + std::to_string(ti);
    std::vector<Candidate> pool = candidates_for(docs, task);
    Rng(derive_seed(seed, task_key)).shuffle(pool);
    for (std::size_t k = 0; k < task.count; ++k) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "-%04zu", k);
      ItemConfig cfg;
      cfg.task_id = task_key + suffix;
      if (pool.empty()) {
        suite.manifest.skipped.push_back({cfg.task_id, "no eligible anchor in the documents"});
        continue;
      }
      const Candidate& c = pool[k % pool.size()];
      const StructuralDocument& doc = docs[c.doc];
      cfg.dimension = task.dimension;
      cfg.sub_dimension = task.sub_dimension;
      cfg.template_text = task.template_text.empty() ? default_template(task) : task.template_text;
      cfg.anchor = {doc.shots[c.first_shot].span.start_s, doc.shots[c.last_shot].span.end_s};
      for (std::size_t s = c.first_shot; s <= c.last_shot; ++s) {
        const auto& v = doc.shots[s].labels.at(task.dimension).at(task.sub_dimension);
        cfg.truth.insert(cfg.truth.end(), v.labels.begin(), v.labels.end());
      }
      if (task.answer_type != AnswerType::kOrdered) {
        if (auto ev = doc.shots[c.first_shot].evidence.find(task.dimension);
            ev != doc.shots[c.first_shot].evidence.end()) {
          cfg.evidence = ev->second;
        }
      }
      cfg.answer_type = task.answer_type;
      cfg.seed = derive_seed(seed, cfg.task_id);
      cfg.duration_s = doc.meta.duration_s;
      emit(cfg);
    }
  }
  for (ItemConfig cfg : plan.items) {
    if (cfg.seed == 0) cfg.seed = derive_seed(seed, cfg.task_id);
    emit(cfg);
  }

  Manifest& m = suite.manifest;
  m.n_items = suite.items.size();
  for (const auto& item : suite.items) {
    const std::string dim(to_string(item.dimension));
    ++m.per_dimension[dim];
    ++m.per_answer_type[std::string(to_string(item.answer_type))];
    if (item.hard) {
      ++m.hard_per_dimension[dim];
      ++m.n_hard;
    }
  }
  return suite;
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : m.skipped) skipped.push_back({{"task_id", s.task_id}, {"reason", s.reason}});
  return {{"seed", m.seed},
          {"registry_version", m.registry_version},
          {"n_items", m.n_items},
          {"per_dimension", m.per_dimension},
          {"per_answer_type", m.per_answer_type},
          {"hard_per_dimension", m.hard_per_dimension},
          {"n_hard", m.n_hard},
          {"skipped", skipped}};
}

nlohmann::json to_json(const Suite& suite) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : suite.items) items.push_back(to_json(item));
  return {{"format", "sv6d-suite/1"}, {"manifest", to_json(suite.manifest)}, {"items", items}};
}

std::string serialize_suite(const Suite& suite) { return to_json(suite).dump(2) + "\n"; }

Suite parse_suite(const nlohmann::json& j) {
  const detail::JsonReader in(ErrorKind::kParse);
  in.object(j, "");
  Suite suite;
  const auto& items = in.array(in.field(j, "items", ""), "items");
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      suite.items.push_back(parse_bench_item(items[i]));
    } catch (const Error& e) {
      const std::string path = e.field().empty() ? detail::index_path("items", i)
                                                 : detail::index_path("items", i) + "." + e.field();
      throw Error(ErrorKind::kParse, path + ": " + e.what(), path);
    }
  }
  if (const auto* m = in.optional_field(j, "manifest")) {
    in.object(*m, "manifest");
    if (const auto* s = in.optional_field(*m, "seed")) suite.manifest.seed = in.unsigned_integer(*s, "manifest.seed");
    if (const auto* v = in.optional_field(*m, "registry_version")) {
      suite.manifest.registry_version = in.string(*v, "manifest.registry_version");
    }
  }
  Manifest& m = suite.manifest;
  m.n_items = suite.items.size();
  for (const auto& item : suite.items) {
    const std::string dim(to_string(item.dimension));
    ++m.per_dimension[dim];
    ++m.per_answer_type[std::string(to_string(item.answer_type))];
    if (item.hard) {
      ++m.hard_per_dimension[dim];
      ++m.n_hard;
    }
  }
  return suite;
}

}  // namespace sv6d
