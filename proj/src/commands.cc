#include "sv6d/commands.h"

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json_util.h"
#include "sv6d/alignment.h"
#include "sv6d/benchgen.h"
#include "sv6d/config.h"
#include "sv6d/document.h"
#include "sv6d/objective.h"
#include "sv6d/scoring.h"
#include "sv6d/service.h"

namespace sv6d::cli {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kInvalidDocument:
    case ErrorKind::kUnknownLabel:
      return kExitMalformedInput;
    case ErrorKind::kConfig:
    case ErrorKind::kTaxonomy:
      return kExitConfig;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kGeneration:
      return kExitOperation;
    case ErrorKind::kUnsupported:
      return kExitUnsupported;
    case ErrorKind::kIo:
      return kExitIo;
  }
  return kExitOperation;
}

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string registry;
  std::string config;
  std::string format = "text";
  std::string out;
  const CLI::App* active = nullptr;  // the parsed subcommand; loss flags are looked up on it
  double alpha = 0, beta = 0, lambda_p = 0, lambda_c = 0, lambda_f = 0;
  std::vector<double> weights;
};

void add_registry_flags(CLI::App* sub, Common& c) {
  sub->add_option("--registry", c.registry, "taxonomy registry JSON (default: $SV6D_REGISTRY, else built in)");
  sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"text", "json"}));
}

void add_loss_flags(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "loss configuration JSON file");
  sub->add_option("--alpha", c.alpha, "temporal vs. label cost balance");
  sub->add_option("--beta", c.beta, "cardinality penalty coefficient");
  sub->add_option("--lambda-p", c.lambda_p, "weight of the vocabulary term");
  sub->add_option("--lambda-c", c.lambda_c, "weight of the completeness term");
  sub->add_option("--lambda-f", c.lambda_f, "weight of the format term");
  sub->add_option("--weights", c.weights, "six comma-separated dimension weights")->delimiter(',')->expected(6);
}

const TaxonomyRegistry& load_registry(const Common& c, std::optional<TaxonomyRegistry>& storage) {
  std::string path = c.registry;
  if (path.empty()) {
    if (const char* env = std::getenv("SV6D_REGISTRY"); env != nullptr && *env != '\0') path = env;
  }
  if (path.empty()) return TaxonomyRegistry::builtin();
  try {
    storage.emplace(TaxonomyRegistry::load_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(ErrorKind::kTaxonomy, "registry " + path + ": " + e.what(), e.field());
  }
  return *storage;
}

// defaults < config file < flags
LossConfig load_config(const Common& c) {
  LossConfig config;
  if (!c.config.empty()) {
    const nlohmann::json j = detail::parse_json_text(read_text_file(c.config), ErrorKind::kConfig);
    config = merge_config(config, j, "config");
  }
  nlohmann::json flags = nlohmann::json::object();
  auto given = [&](const char* name) {
    const CLI::Option* opt = c.active ? c.active->get_option_no_throw(name) : nullptr;
    return opt && opt->count() > 0;
  };
  if (given("--alpha")) flags["alpha"] = c.alpha;
  if (given("--beta")) flags["beta"] = c.beta;
  if (given("--lambda-p")) flags["lambda_p"] = c.lambda_p;
  if (given("--lambda-c")) flags["lambda_c"] = c.lambda_c;
  if (given("--lambda-f")) flags["lambda_f"] = c.lambda_f;
  if (given("--weights")) flags["weights"] = c.weights;
  return merge_config(config, flags, "flags");
}

nlohmann::json read_json_file(const std::string& path, ErrorKind kind = ErrorKind::kParse) {
  try {
    return detail::parse_json_text(read_text_file(path), kind);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path + ": " + e.what(), e.field());
  }
}

StructuralDocument read_document(const std::string& path) {
  try {
    return parse_document(read_json_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo || e.what() == std::string_view(path)) throw;
    const std::string msg = e.what();
    throw Error(e.kind(), msg.rfind(path, 0) == 0 ? msg : path + ": " + msg, e.field());
  }
}

// Writes to --out when given, otherwise to `out`.
void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file || !(file << text)) throw Error(ErrorKind::kIo, "cannot write '" + c.out + "'");
}

nlohmann::json violation_json(const Violation& v) {
  nlohmann::json j = {{"kind", to_string(v.kind)}, {"message", v.message}};
  if (v.shot) j["shot"] = *v.shot;
  if (v.t_start) j["t_start"] = *v.t_start;
  if (v.t_end) j["t_end"] = *v.t_end;
  return j;
}

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// ---- subcommands ------------------------------------------------------------

int cmd_validate(const Common& c, const std::string& path, std::ostream& out) {
  std::optional<TaxonomyRegistry> storage;
  const TaxonomyRegistry& registry = load_registry(c, storage);
  const StructuralDocument doc = read_document(path);
  const ValidationReport report = validate_document(doc, registry);
  if (c.format == "json") {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : report.violations) v.push_back(violation_json(x));
    emit(c, out, nlohmann::json{{"ok", report.ok()}, {"violations", v}}.dump(2) + "\n");
  } else {
    std::string text;
    if (report.ok()) {
      text = "ok: " + std::to_string(doc.shots.size()) + " shots, " +
             std::to_string(derive_skeleton(doc).size()) + " skeleton segments\n";
    }
    for (const auto& v : report.violations) text += v.describe() + "\n";
    emit(c, out, text);
  }
  return report.ok() ? kExitOk : kExitViolations;
}

int cmd_align(const Common& c, const std::string& pred_path, const std::string& truth_path,
              std::ostream& out, std::ostream& err) {
  std::optional<TaxonomyRegistry> storage;
  const TaxonomyRegistry& registry = load_registry(c, storage);
  const LossConfig config = load_config(c);
  const StructuralDocument pred = read_document(pred_path);
  const StructuralDocument truth = read_document(truth_path);
  for (const auto& [doc, path] : {std::pair{&pred, &pred_path}, std::pair{&truth, &truth_path}}) {
    const auto report = validate_document(*doc, registry);
    if (!report.ok()) {
      for (const auto& v : report.violations) err << *path << ": " << v.describe() << "\n";
      throw Error(ErrorKind::kInvalidDocument, *path + " is not a valid document");
    }
  }
  const AlignmentResult a = align(pred, truth, config.alignment, registry);
  const double ls = l_struct(a, pred, truth, config.alignment, registry);
  if (c.format == "json") {
    nlohmann::json matches = nlohmann::json::array();
    for (std::size_t k = 0; k < a.matches.size(); ++k) {
      matches.push_back({{"pred", a.matches[k].first},
                         {"truth", a.matches[k].second},
                         {"iou", a.per_pair_iou[k]},
                         {"label_distance", a.per_pair_label_distance[k]}});
    }
    emit(c, out,
         nlohmann::json{{"matches", matches},
                        {"mean_iou", a.mean_iou},
                        {"cardinality_fraction", a.cardinality_fraction},
                        {"cardinality_penalty", a.cardinality_penalty},
                        {"l_align", a.l_align},
                        {"l_struct", ls}}
                 .dump(2) +
             "\n");
  } else {
    std::string text = "pred  truth       iou  label_dist\n";
    for (std::size_t k = 0; k < a.matches.size(); ++k) {
      char line[96];
      std::snprintf(line, sizeof line, "%4zu  %5zu  %8.4f  %10.4f\n", a.matches[k].first, a.matches[k].second,
                    a.per_pair_iou[k], a.per_pair_label_distance[k]);
      text += line;
    }
    text += "l_align " + fixed(a.l_align) + "\nl_struct " + fixed(ls) + "\n";
    emit(c, out, text);
  }
  return kExitOk;
}

std::string breakdown_text(const RewardBreakdown& b) {
  std::string text;
  auto line = [&](const char* k, double v) { text += std::string(k) + " " + fixed(v) + "\n"; };
  text += "task_type " + std::string(to_string(b.task_type)) + "\n";
  line("l_align", b.l_align);
  line("l_struct", b.l_struct);
  line("l_reg", b.l_reg);
  line("l_sv6d", b.l_sv6d);
  line("normalized_loss", b.normalized_loss);
  line("r_prof", b.r_prof);
  line("r_comp", b.r_comp);
  line("r_form", b.r_form);
  line("format_score", b.format_score);
  line("iou_score", b.iou_score);
  line("label_score", b.label_score);
  if (b.similarity_score) line("similarity_score", *b.similarity_score);
  if (b.judge_score) line("judge_score", *b.judge_score);
  line("reward", b.reward);
  for (const auto& f : b.failed_checks) text += "failed_check " + f + "\n";
  return text;
}

int cmd_loss(const Common& c, const std::string& pred_path, const std::string& truth_path, std::ostream& out) {
  std::optional<TaxonomyRegistry> storage;
  const TaxonomyRegistry& registry = load_registry(c, storage);
  const LossConfig config = load_config(c);
  const std::string raw = read_text_file(pred_path);
  const StructuralDocument truth = read_document(truth_path);
  const RewardBreakdown b = sv6d_loss(raw, std::nullopt, truth, config, registry);
  emit(c, out, c.format == "json" ? to_json(b).dump(2) + "\n" : breakdown_text(b));
  return kExitOk;
}

struct RewardArgs {
  std::string request;
  std::string task;
  std::string rollout;
  std::string reference;
};

int cmd_reward(const Common& c, const RewardArgs& r, std::ostream& out) {
  std::optional<TaxonomyRegistry> storage;
  const TaxonomyRegistry& registry = load_registry(c, storage);
  const LossConfig config = load_config(c);
  nlohmann::json request;
  if (!r.request.empty()) {
    request = read_json_file(r.request);
  } else {
    if (r.task.empty() || r.rollout.empty() || r.reference.empty()) {
      throw CLI::ValidationError("reward", "either --request or all of --task, --rollout, --reference");
    }
    const auto type = parse_task_type(r.task);
    if (!type) throw Error(ErrorKind::kUnsupported, "unsupported task type '" + r.task + "'", "task_type");
    request["task_type"] = r.task;
    request["rollout_text"] = read_text_file(r.rollout);
    if (*type == TaskType::kOcr || *type == TaskType::kChainOfThought) {
      request["reference"] = read_text_file(r.reference);
    } else {
      request["reference"] = read_json_file(r.reference);
    }
  }
  const RewardService service(registry, config);
  const nlohmann::json response = service.evaluate(request);
  if (c.format == "json") {
    emit(c, out, response.dump(2) + "\n");
  } else {
    std::string text;
    for (const char* k : {"engine_version", "registry_version", "config_digest", "request_digest"}) {
      text += std::string(k) + " " + response[k].get<std::string>() + "\n";
    }
    for (const char* k : {"format_score", "iou_score", "label_score", "similarity_score", "judge_score",
                          "l_sv6d", "normalized_loss", "reward"}) {
      if (response.contains(k)) text += std::string(k) + " " + fixed(response[k].get<double>()) + "\n";
    }
    emit(c, out, text);
  }
  return kExitOk;
}

struct GenArgs {
  std::string plan;
  std::vector<std::string> docs;
  std::optional<std::uint64_t> seed;
  CLI::Option* seed_opt = nullptr;
  std::uint64_t seed_value = 0;
};

std::vector<fs::path> expand_documents(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") found.push_back(entry.path());
      }
      if (ec) throw Error(ErrorKind::kIo, "cannot list '" + in + "'");
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

int cmd_gen(const Common& c, const GenArgs& g, std::ostream& out) {
  std::optional<TaxonomyRegistry> storage;
  const TaxonomyRegistry& registry = load_registry(c, storage);
  const Plan plan = parse_plan(read_json_file(g.plan, ErrorKind::kConfig), registry);
  std::uint64_t seed = 0;
  if (g.seed_opt->count()) {
    seed = g.seed_value;
  } else if (plan.seed) {
    seed = *plan.seed;
  } else {
    throw Error(ErrorKind::kConfig, "no seed: pass --seed or set \"seed\" in the plan", "seed");
  }
  std::vector<StructuralDocument> docs;
  for (const auto& p : expand_documents(g.docs)) docs.push_back(read_document(p.string()));
  const Suite suite = generate_suite(docs, plan, seed, registry);
  const std::string text = serialize_suite(suite);
  if (c.out.empty()) {
    out << text;
    return kExitOk;
  }
  emit(c, out, text);
  const Manifest& m = suite.manifest;
  if (c.format == "json") {
    out << to_json(m).dump(2) << "\n";
  } else {
    out << "items " << m.n_items << "  hard " << m.n_hard << "  skipped " << m.skipped.size() << "  seed "
        << m.seed << "\n";
    for (const auto& [dim, n] : m.per_dimension) {
      const auto h = m.hard_per_dimension.count(dim) ? m.hard_per_dimension.at(dim) : 0;
      out << "  " << dim << " " << n << " (hard " << h << ")\n";
    }
    for (const auto& [t, n] : m.per_answer_type) out << "  type:" << t << " " << n << "\n";
    for (const auto& s : m.skipped) out << "  skipped " << s.task_id << ": " << s.reason << "\n";
  }
  return kExitOk;
}

int cmd_score(const Common& c, const std::string& suite_path, const std::string& answers_path,
              std::ostream& out) {
  const Suite suite = parse_suite(read_json_file(suite_path));
  const auto answers = parse_answers_jsonl(read_text_file(answers_path));
  const ScoreReport report = score_suite(suite.items, answers);
  const std::string json = to_json(report).dump(2) + "\n";
  if (c.out.empty()) {
    out << (c.format == "json" ? json : format_report_table(report));
  } else {
    emit(c, out, json);
    if (c.format == "text") out << format_report_table(report);
  }
  return kExitOk;
}

int cmd_serve(const Common& c, const std::string& host, int port, std::ostream& out) {
  std::optional<TaxonomyRegistry> storage;
  const TaxonomyRegistry& registry = load_registry(c, storage);
  const RewardService service(registry, load_config(c));
  HttpRewardServer server(service);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by the server threads

  const int bound = server.bind(host, port);
  server.start();
  out << "listening on http://" << host << ":" << bound << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sv6d: structural video documents, alignment losses, rewards, and benchmark items", "sv6d"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kEngineVersion));
  Common c;

  auto* validate = app.add_subcommand("validate", "check a structural document");
  std::string doc_path;
  validate->add_option("document", doc_path, "document JSON")->required();
  add_registry_flags(validate, c);
  validate->add_option("--out", c.out, "write the report here instead of stdout");

  auto* align_cmd = app.add_subcommand("align", "optimal shot matching between two documents");
  std::string pred_path, truth_path;
  align_cmd->add_option("prediction", pred_path, "predicted document JSON")->required();
  align_cmd->add_option("reference", truth_path, "reference document JSON")->required();
  add_registry_flags(align_cmd, c);
  add_loss_flags(align_cmd, c);
  align_cmd->add_option("--out", c.out, "output file");

  auto* loss = app.add_subcommand("loss", "composite structural loss of a raw prediction");
  loss->add_option("prediction", pred_path, "raw model output (any text)")->required();
  loss->add_option("reference", truth_path, "reference document JSON")->required();
  add_registry_flags(loss, c);
  add_loss_flags(loss, c);
  loss->add_option("--out", c.out, "output file");

  auto* reward = app.add_subcommand("reward", "verifiable reward for one rollout");
  RewardArgs ra;
  reward->add_option("--request", ra.request, "request body JSON, as sent to the service");
  reward->add_option("--task", ra.task, "task type");
  reward->add_option("--rollout", ra.rollout, "rollout text file");
  reward->add_option("--reference", ra.reference, "reference file (JSON, or plain text for ocr/chain_of_thought)");
  add_registry_flags(reward, c);
  add_loss_flags(reward, c);
  reward->add_option("--out", c.out, "output file");

  auto* gen = app.add_subcommand("gen", "generate a multiple-choice suite");
  GenArgs ga;
  gen->add_option("--plan", ga.plan, "plan JSON")->required();
  gen->add_option("--docs", ga.docs, "document files or directories")->required();
  ga.seed_opt = gen->add_option("--seed", ga.seed_value, "suite seed (overrides the plan)");
  add_registry_flags(gen, c);
  gen->add_option("--out", c.out, "suite output file");

  auto* score = app.add_subcommand("score", "score an answer file against a suite");
  std::string suite_path, answers_path;
  score->add_option("--suite", suite_path, "suite JSON")->required();
  score->add_option("--answers", answers_path, "answers JSONL")->required();
  score->add_option("--format", c.format, "output format")->check(CLI::IsMember({"text", "json"}));
  score->add_option("--out", c.out, "report JSON output file");

  auto* serve = app.add_subcommand("serve", "run the HTTP reward service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 picks a free one)");
  add_registry_flags(serve, c);
  add_loss_flags(serve, c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  c.active = app.get_subcommands().front();

  try {
    if (*validate) return cmd_validate(c, doc_path, out);
    if (*align_cmd) return cmd_align(c, pred_path, truth_path, out, err);
    if (*loss) return cmd_loss(c, pred_path, truth_path, out);
    if (*reward) return cmd_reward(c, ra, out);
    if (*gen) return cmd_gen(c, ga, out);
    if (*score) return cmd_score(c, suite_path, answers_path, out);
    if (*serve) return cmd_serve(c, host, port, out);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]";
    if (!e.field().empty()) err << " " << e.field();
    err << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
  return kExitUsage;
}

}  // namespace sv6d::cli
