#pragma once

// Rule-based scoring of answer files against a generated suite: exact match
// per answer type, per-dimension / macro / hard-subset / per-type accuracy.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sv6d/benchgen.h"

namespace sv6d {

struct AnswerRecord {
  std::string item_id;
  std::string raw_response;
  std::optional<char> extracted_choice;  // filled by score_suite when absent
};

// single: label equality; multi: set equality; ordered: sequence equality.
// Shape mismatches are false and explained in `note` when given.
bool match(const std::vector<std::string>& output, const std::vector<std::string>& truth,
           AnswerType type, std::string* note = nullptr);

// Rules, in order: the whole response is one letter (optionally bracketed or
// punctuated); "answer is X" / "Answer: X"; exactly one distinct standalone
// capital A-E token. Anything else is absent.
std::optional<char> extract_choice(std::string_view raw_response);

// Optional second chance for responses the rules cannot parse.
class ChoiceJudge {
 public:
  virtual ~ChoiceJudge() = default;
  virtual std::optional<char> choose(const BenchItem& item, std::string_view raw_response) const = 0;
};

struct Tally {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n); }
};

struct ScoreReport {
  std::map<std::string, double> per_dimension;       // dimensions with >= 1 item
  std::map<std::string, double> hard_per_dimension;  // dimensions with >= 1 hard item
  std::map<std::string, double> per_answer_type;     // answer types with >= 1 item
  double macro = 0.0;  // mean of per_dimension
  double hard = 0.0;   // mean of hard_per_dimension; 0 when there are no hard items
  std::map<std::string, Tally> dimension_tallies;
  std::map<std::string, Tally> hard_tallies;
  std::map<std::string, Tally> answer_type_tallies;
  std::size_t n_items = 0;
  std::size_t n_scored = 0;      // items with an answer record
  std::size_t n_unparsed = 0;    // answered but no choice could be extracted
  std::size_t n_unanswered = 0;
  std::size_t n_correct = 0;
};

// Unanswered and unparsed items count as incorrect. Throws
// Error(kInvalidArgument) for an answer naming an unknown or repeated item.
ScoreReport score_suite(const std::vector<BenchItem>& items, const std::vector<AnswerRecord>& answers,
                        const ChoiceJudge* judge = nullptr);

// One JSON object per line: {"item_id": ..., "response": ...} with an
// optional "choice". Blank lines are skipped. Throws Error(kParse) naming the line.
std::vector<AnswerRecord> parse_answers_jsonl(std::string_view text);

nlohmann::json to_json(const ScoreReport& report);
std::string format_report_table(const ScoreReport& report);

}  // namespace sv6d
