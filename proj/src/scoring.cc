#include "sv6d/scoring.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json_util.h"
#include "sv6d/error.h"

namespace sv6d {

bool match(const std::vector<std::string>& output, const std::vector<std::string>& truth,
           AnswerType type, std::string* note) {
  auto mismatch = [&](const char* why) {
    if (note != nullptr) *note = why;
    return false;
  };
  switch (type) {
    case AnswerType::kSingle:
      if (output.size() != 1 || truth.size() != 1) return mismatch("single answers hold exactly one label");
      return output[0] == truth[0];
    case AnswerType::kMulti: {
      if (output.empty() || truth.empty()) return mismatch("empty label set");
      const std::set<std::string> a(output.begin(), output.end());
      const std::set<std::string> b(truth.begin(), truth.end());
      return a == b;
    }
    case AnswerType::kOrdered:
      if (output.empty() || truth.empty()) return mismatch("empty label sequence");
      return output == truth;
  }
  return mismatch("unknown answer type");
}

namespace {

bool is_letter(char c) { return c >= 'A' && c <= 'E'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<char> extract_choice(std::string_view raw_response) {
  // Rule 1: a lone letter, possibly wrapped in brackets, emphasis or a trailing period.
  std::string_view s = trim(raw_response);
  while (!s.empty() && std::string_view("([*_\"'").find(s.front()) != std::string_view::npos) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::string_view(")]*_\"'.:").find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
  }
  s = trim(s);
  if (s.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    if (is_letter(c)) return c;
  }

  const std::string text(raw_response);
  // Rule 2: an explicit answer statement.
  static const std::regex kAnswer(
      R"((?:[Aa]nswer|ANSWER)(?:\s+is)?\s*[:\-]?\s*[\(\[*]*([A-E])(?![A-Za-z0-9]))");
  std::set<char> stated;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kAnswer); it != std::sregex_iterator(); ++it) {
    stated.insert((*it)[1].str()[0]);
  }
  if (stated.size() == 1) return *stated.begin();
  if (stated.size() > 1) return std::nullopt;

  // Rule 3: exactly one distinct standalone capital letter A-E.
  std::set<char> tokens;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_letter(text[i])) continue;
    const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    const bool right = i + 1 == text.size() || !std::isalnum(static_cast<unsigned char>(text[i + 1]));
    if (left && right) tokens.insert(text[i]);
  }
  if (tokens.size() == 1) return *tokens.begin();
  return std::nullopt;
}

ScoreReport score_suite(const std::vector<BenchItem>& items, const std::vector<AnswerRecord>& answers,
                        const ChoiceJudge* judge) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!index.emplace(items[i].id, i).second) {
      throw Error(ErrorKind::kInvalidArgument, "suite repeats item id " + items[i].id, "items");
    }
  }
  std::vector<const AnswerRecord*> by_item(items.size(), nullptr);
  for (std::size_t a = 0; a < answers.size(); ++a) {
    const std::string field = "answers[" + std::to_string(a) + "].item_id";
    auto it = index.find(answers[a].item_id);
    if (it == index.end()) {
      throw Error(ErrorKind::kInvalidArgument, "answer for unknown item " + answers[a].item_id, field);
    }
    if (by_item[it->second] != nullptr) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate answer for item " + answers[a].item_id, field);
    }
    by_item[it->second] = &answers[a];
  }

  ScoreReport r;
  r.n_items = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const BenchItem& item = items[i];
    bool correct = false;
    if (const AnswerRecord* ans = by_item[i]) {
      ++r.n_scored;
      std::optional<char> choice = ans->extracted_choice ? ans->extracted_choice
                                                         : extract_choice(ans->raw_response);
      if (!choice && judge != nullptr) choice = judge->choose(item, ans->raw_response);
      if (choice && !is_letter(*choice)) choice.reset();
      if (!choice) {
        ++r.n_unparsed;
      } else if (*choice == 'E') {
        correct = item.legality_fallback;
      } else {
        correct = match(item.options[static_cast<std::size_t>(*choice - 'A')].atoms, item.truth,
                        item.answer_type);
      }
    } else {
      ++r.n_unanswered;
    }
    r.n_correct += correct;
    const std::string dim(to_string(item.dimension));
    auto bump = [&](Tally& t) {
      ++t.n;
      t.correct += correct;
    };
    bump(r.dimension_tallies[dim]);
    bump(r.answer_type_tallies[std::string(to_string(item.answer_type))]);
    if (item.hard) bump(r.hard_tallies[dim]);
  }

  for (const auto& [k, t] : r.dimension_tallies) r.per_dimension[k] = t.accuracy();
  for (const auto& [k, t] : r.hard_tallies) r.hard_per_dimension[k] = t.accuracy();
  for (const auto& [k, t] : r.answer_type_tallies) r.per_answer_type[k] = t.accuracy();
  auto mean = [](const std::map<std::string, double>& m) {
    if (m.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [k, v] : m) s += v;
    return s / static_cast<double>(m.size());
  };
  r.macro = mean(r.per_dimension);
  r.hard = mean(r.hard_per_dimension);
  return r;
}

std::vector<AnswerRecord> parse_answers_jsonl(std::string_view text) {
  std::vector<AnswerRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::kParse, where + ": malformed JSON", where);
    const detail::JsonReader in(ErrorKind::kParse);
    in.object(j, where);
    AnswerRecord rec;
    rec.item_id = in.string_field(j, "item_id", where);
    if (const auto* resp = in.optional_field(j, "response")) {
      rec.raw_response = in.string(*resp, where + ".response");
    }
    if (const auto* c = in.optional_field(j, "choice")) {
      const std::string s = in.string(*c, where + ".choice");
      if (s.size() != 1 || !is_letter(s[0])) in.fail(where + ".choice", "expected a letter A-E");
      rec.extracted_choice = s[0];
    }
    out.push_back(std::move(rec));
  }
  return out;
}

nlohmann::json to_json(const ScoreReport& r) {
  auto tallies = [](const std::map<std::string, Tally>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, t] : m) j[k] = {{"n", t.n}, {"correct", t.correct}};
    return j;
  };
  return {{"per_dimension", r.per_dimension},
          {"hard_per_dimension", r.hard_per_dimension},
          {"per_answer_type", r.per_answer_type},
          {"macro", r.macro},
          {"hard", r.hard},
          {"counts",
           {{"dimension", tallies(r.dimension_tallies)},
            {"hard", tallies(r.hard_tallies)},
            {"answer_type", tallies(r.answer_type_tallies)}}},
          {"n_items", r.n_items},
          {"n_scored", r.n_scored},
          {"n_unparsed", r.n_unparsed},
          {"n_unanswered", r.n_unanswered},
          {"n_correct", r.n_correct}};
}

std::string format_report_table(const ScoreReport& r) {
  std::ostringstream out;
  char line[160];
  auto row = [&](const std::string& name, const Tally& t) {
    std::snprintf(line, sizeof line, "  %-24s %6zu %8zu %9.4f\n", name.c_str(), t.n, t.correct, t.accuracy());
    out << line;
  };
  out << "  group                         n  correct  accuracy\n";
  for (const auto& [k, t] : r.dimension_tallies) row(k, t);
  for (const auto& [k, t] : r.answer_type_tallies) row("type:" + k, t);
  for (const auto& [k, t] : r.hard_tallies) row("hard:" + k, t);
  std::snprintf(line, sizeof line, "  macro %.4f   hard %.4f   items %zu  answered %zu  unparsed %zu\n",
                r.macro, r.hard, r.n_items, r.n_scored, r.n_unparsed);
  out << line;
  return out.str();
}

}  // namespace sv6d
