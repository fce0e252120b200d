#include "sv6d/service.h"

#include <atomic>

#include "httplib.h"
#include "json_util.h"
#include "sv6d/digest.h"
#include "sv6d/document.h"

namespace sv6d {

namespace {

std::string prefixed(const std::string& prefix, const std::string& field) {
  if (field.empty()) return prefix;
  if (field.front() == '[') return prefix + field;
  return prefix + "." + field;
}

std::vector<SemanticShot> parse_spans_reference(const nlohmann::json& j) {
  const detail::JsonReader in(ErrorKind::kParse);
  const nlohmann::json* spans = &j;
  std::string path = "reference";
  if (j.is_object()) {
    spans = &in.field(j, "spans", path);
    path = "reference.spans";
  }
  in.array(*spans, path);
  std::vector<SemanticShot> out;
  for (std::size_t i = 0; i < spans->size(); ++i) {
    const std::string p = detail::index_path(path, i);
    const auto& s = (*spans)[i];
    SemanticShot shot;
    if (s.is_array() && s.size() == 2) {
      shot.start_s = in.number(s[0], p + "[0]");
      shot.end_s = in.number(s[1], p + "[1]");
    } else if (s.is_object()) {
      shot.start_s = in.number_field(s, "start_s", p);
      shot.end_s = in.number_field(s, "end_s", p);
    } else {
      in.fail(p, "expected [start, end] or {start_s, end_s}");
    }
    if (!(shot.start_s >= 0.0 && shot.start_s < shot.end_s)) in.fail(p, "span needs 0 <= start < end");
    out.push_back(shot);
  }
  return out;
}

}  // namespace

int http_status_for(const Error& e) { return e.kind() == ErrorKind::kUnsupported ? 422 : 400; }

RewardService::RewardService(const TaxonomyRegistry& registry, LossConfig config,
                             std::shared_ptr<const JudgeProvider> judge)
    : registry_(registry), config_(config), judge_(std::move(judge)) {
  config_.validate();
  config_digest_ = sha256_hex(to_json(config_).dump());
}

nlohmann::json RewardService::envelope() const {
  return {{"engine_version", kEngineVersion},
          {"registry_version", registry_.version()},
          {"registry_digest", registry_.digest()}};
}

nlohmann::json RewardService::error_body(const Error& e) const {
  nlohmann::json j = envelope();
  j["error"] = {{"code", to_string(e.kind())}, {"field", e.field()}, {"message", e.what()}};
  return j;
}

nlohmann::json RewardService::evaluate(const nlohmann::json& request) const {
  const detail::JsonReader in(ErrorKind::kParse);
  in.object(request, "");
  for (const auto& [key, value] : request.items()) {
    if (key != "task_type" && key != "rollout_text" && key != "reference" && key != "overrides" &&
        key != "id") {
      in.fail(key, "unknown request field");
    }
  }
  const std::string type_id = in.string_field(request, "task_type", "");
  const auto type = parse_task_type(type_id);
  if (!type) throw Error(ErrorKind::kUnsupported, "unsupported task type '" + type_id + "'", "task_type");

  LossConfig config = config_;
  if (const auto* o = in.optional_field(request, "overrides")) config = merge_config(config, *o, "overrides");

  RewardTask task;
  task.type = *type;
  task.rollout = in.string_field(request, "rollout_text", "");
  const nlohmann::json& ref = in.field(request, "reference", "");
  try {
    switch (*type) {
      case TaskType::kTemporalGrounding:
      case TaskType::kSv6dComposite:
        task.reference = parse_document(ref);
        break;
      case TaskType::kTemporalActionLocalization:
        task.reference = parse_spans_reference(ref);
        break;
      case TaskType::kOcr:
      case TaskType::kChainOfThought:
        task.reference = in.string(ref, "reference");
        break;
    }
  } catch (const Error& e) {
    if (e.field().rfind("reference", 0) == 0) throw;
    throw Error(e.kind(), std::string("reference: ") + e.what(), prefixed("reference", e.field()));
  }

  const RewardBreakdown breakdown = task_reward(task, config, registry_, judge_.get());
  nlohmann::json out = envelope();
  out["config_digest"] = sha256_hex(to_json(config).dump());
  out["request_digest"] = sha256_hex(request.dump());
  if (const auto* id = in.optional_field(request, "id")) out["id"] = *id;
  const nlohmann::json fields = to_json(breakdown);
  for (const auto& [k, v] : fields.items()) out[k] = v;
  return out;
}

ServiceResponse RewardService::health() const {
  nlohmann::json j = envelope();
  j["status"] = "ok";
  j["config_digest"] = config_digest_;
  return {200, j.dump()};
}

ServiceResponse RewardService::reward(std::string_view body) const {
  try {
    return {200, evaluate(detail::parse_json_text(body, ErrorKind::kParse)).dump()};
  } catch (const Error& e) {
    return {http_status_for(e), error_body(e).dump()};
  }
}

ServiceResponse RewardService::reward_batch(std::string_view body) const {
  nlohmann::json requests;
  try {
    const nlohmann::json j = detail::parse_json_text(body, ErrorKind::kParse);
    const detail::JsonReader in(ErrorKind::kParse);
    requests = in.array(in.field(j, "requests", ""), "requests");
  } catch (const Error& e) {
    return {http_status_for(e), error_body(e).dump()};
  }
  nlohmann::json responses = nlohmann::json::array();
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      responses.push_back(evaluate(requests[i]));
    } catch (const Error& e) {
      nlohmann::json err = error_body(e);
      err["status"] = http_status_for(e);
      responses.push_back(std::move(err));
    }
  }
  nlohmann::json out = envelope();
  out["responses"] = std::move(responses);
  return {200, out.dump()};
}

ServiceResponse RewardService::handle(std::string_view method, std::string_view path,
                                      std::string_view body) const {
  if (path == "/v1/health" && method == "GET") return health();
  if (path == "/v1/reward" && method == "POST") return reward(body);
  if (path == "/v1/reward/batch" && method == "POST") return reward_batch(body);
  nlohmann::json j = envelope();
  j["error"] = {{"code", "not_found"}, {"field", ""}, {"message", "no route for " + std::string(method) + " " + std::string(path)}};
  return {404, j.dump()};
}

struct HttpRewardServer::Impl {
  const RewardService& service;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  explicit Impl(const RewardService& s) : service(s) {
    // httplib's default adds SO_REUSEPORT, which would let two servers share a port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.health());
    });
    server.Post("/v1/reward", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.reward(req.body));
    });
    server.Post("/v1/reward/batch", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.reward_batch(req.body));
    });
  }
};

HttpRewardServer::HttpRewardServer(const RewardService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpRewardServer::~HttpRewardServer() { stop(); }

int HttpRewardServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0) {
    throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port), "bind");
  }
  impl_->bound = true;
  return bound;
}

void HttpRewardServer::listen() { impl_->server.listen_after_bind(); }

void HttpRewardServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpRewardServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace sv6d
