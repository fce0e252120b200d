#include <gtest/gtest.h>

#include "httplib.h"
#include "support.h"
#include "sv6d/config.h"
#include "sv6d/error.h"
#include "sv6d/service.h"

using namespace sv6d;
using nlohmann::json;

namespace {

json grounding_request() {
  return json::parse(read_text_file(SV6D_SOURCE_DIR "/data/examples/grounding_request.json"));
}

class HalfJudge : public JudgeProvider {
 public:
  double score(std::string_view, std::string_view) const override { return 0.5; }
};

}  // namespace

TEST(Config, MergePrecedenceAndErrors) {
  LossConfig base;
  const auto file = merge_config(base, json{{"alpha", 0.3}, {"lambda_f", 0.5}}, "config");
  const auto flags = merge_config(file, json{{"alpha", 0.7}}, "flags");
  EXPECT_DOUBLE_EQ(flags.alignment.alpha, 0.7);
  EXPECT_DOUBLE_EQ(flags.regularizer.lambda_f, 0.5);
  EXPECT_DOUBLE_EQ(flags.alignment.beta, 0.5);

  // Object-keyed weights: unnamed dimensions keep their base value of 1/6.
  const auto w = merge_config(base, json{{"weights", {{"editing", 0.25}, {"subject", 1.0 / 12.0}}}});
  EXPECT_DOUBLE_EQ(w.alignment.weights[index_of(Dimension::kEditing)], 0.25);
  EXPECT_DOUBLE_EQ(w.alignment.weights[index_of(Dimension::kNarrative)], 1.0 / 6.0);
  try {
    merge_config(base, json{{"alpha", 1.5}}, "overrides");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_EQ(e.field(), "overrides.alpha");
  }
  try {
    merge_config(base, json{{"weights", {0.5, 0.5, 0.1, 0.1, 0.1, 0.1}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field().rfind("weights", 0), 0u) << e.field();
  }
  EXPECT_THROW(merge_config(base, json{{"gamma", 1}}), Error);
  EXPECT_THROW(merge_config(base, json{{"lambda_p", 0}, {"lambda_c", 0}, {"lambda_f", 0}}), Error);
}

TEST(Service, PerfectGroundingRequest) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  const auto res = service.reward(grounding_request().dump());
  ASSERT_EQ(res.status, 200) << res.body;
  const auto body = json::parse(res.body);
  EXPECT_DOUBLE_EQ(body["reward"].get<double>(), 1.0);
  EXPECT_EQ(body["engine_version"], std::string(kEngineVersion));
  EXPECT_EQ(body["registry_version"], TaxonomyRegistry::builtin().version());
  EXPECT_EQ(body["registry_digest"], TaxonomyRegistry::builtin().digest());
  EXPECT_EQ(body["request_digest"].get<std::string>().size(), 64u);
}

TEST(Service, IdenticalRequestsGiveIdenticalBodies) {
  const RewardService a(TaxonomyRegistry::builtin(), {});
  const RewardService b(TaxonomyRegistry::builtin(), {});
  auto req = grounding_request();
  req["rollout_text"] = "{\"shots\": []}";
  EXPECT_EQ(a.reward(req.dump()).body, a.reward(req.dump()).body);
  EXPECT_EQ(a.reward(req.dump()).body, b.reward(req.dump()).body);
}

TEST(Service, AlphaOverrideOutOfRange) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  auto req = grounding_request();
  req["overrides"] = {{"alpha", 1.5}};
  const auto res = service.reward(req.dump());
  EXPECT_EQ(res.status, 400);
  const auto body = json::parse(res.body);
  EXPECT_EQ(body["error"]["field"], "overrides.alpha");
  EXPECT_EQ(body["error"]["code"], "config_error");
  EXPECT_TRUE(body.contains("engine_version"));
}

TEST(Service, OverridesChangeConfigDigest) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  auto req = grounding_request();
  const auto plain = json::parse(service.reward(req.dump()).body);
  EXPECT_EQ(plain["config_digest"], service.config_digest());
  req["overrides"] = {{"beta", 1.0}};
  const auto tuned = json::parse(service.reward(req.dump()).body);
  EXPECT_NE(tuned["config_digest"], plain["config_digest"]);
}

TEST(Service, MalformedRequests) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  auto check = [&](const std::string& body, int status, const std::string& field) {
    const auto res = service.reward(body);
    EXPECT_EQ(res.status, status) << body;
    EXPECT_EQ(json::parse(res.body)["error"]["field"], field) << res.body;
  };
  check("{", 400, "");
  check(R"({"task_type":"ocr","rollout_text":"a"})", 400, "reference");
  check(R"({"task_type":"ocr","rollout_text":"a","reference":"b","extra":1})", 400, "extra");
  check(R"({"task_type":"captioning","rollout_text":"a","reference":"b"})", 422, "task_type");
  check(R"({"task_type":"temporal_grounding","rollout_text":"{}","reference":{"meta":{}}})", 400,
        "reference.meta.duration_s");
}

TEST(Service, ChainOfThoughtNeedsJudge) {
  const json req = {{"task_type", "chain_of_thought"},
                    {"rollout_text", "<think>a</think><answer>b</answer>"},
                    {"reference", "b"}};
  const RewardService without(TaxonomyRegistry::builtin(), {});
  const auto res = without.reward(req.dump());
  EXPECT_EQ(res.status, 422);
  EXPECT_EQ(json::parse(res.body)["error"]["code"], "unsupported_task");

  const RewardService with(TaxonomyRegistry::builtin(), {}, std::make_shared<HalfJudge>());
  const auto ok = with.reward(req.dump());
  ASSERT_EQ(ok.status, 200);
  EXPECT_NEAR(json::parse(ok.body)["reward"].get<double>(), 0.65, 1e-12);
}

TEST(Service, BatchPreservesOrderAndMatchesSingles) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  json requests = json::array();
  for (int i = 0; i < 3; ++i) {
    auto req = grounding_request();
    req["id"] = "r" + std::to_string(i);
    if (i == 1) req["rollout_text"] = "garbage";
    requests.push_back(req);
  }
  requests.push_back(json{{"task_type", "ocr"}, {"rollout_text", "abc"}, {"reference", "abd"}, {"id", "r3"}});
  requests.push_back(json{{"task_type", "ocr"}, {"rollout_text", 5}, {"reference", "abd"}});
  const auto res = service.reward_batch(json{{"requests", requests}}.dump());
  ASSERT_EQ(res.status, 200);
  const auto body = json::parse(res.body);
  ASSERT_EQ(body["responses"].size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(body["responses"][i]["id"], "r" + std::to_string(i));
    EXPECT_EQ(body["responses"][i], json::parse(service.reward(requests[i].dump()).body));
  }
  EXPECT_EQ(body["responses"][4]["status"], 400);
  EXPECT_NEAR(body["responses"][3]["reward"].get<double>(), 2.0 / 3.0, 1e-12);
}

TEST(Service, Routing) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  EXPECT_EQ(service.handle("GET", "/v1/health", "").status, 200);
  EXPECT_EQ(service.handle("GET", "/v1/reward", "").status, 404);
  EXPECT_EQ(service.handle("POST", "/v2/reward", "{}").status, 404);
}

TEST(Http, EndToEndOnEphemeralPort) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  HttpRewardServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  server.start();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");

  const std::string body = grounding_request().dump();
  auto r1 = client.Post("/v1/reward", body, "application/json");
  auto r2 = client.Post("/v1/reward", body, "application/json");
  ASSERT_TRUE(r1 && r2);
  EXPECT_EQ(r1->status, 200);
  EXPECT_EQ(r1->body, r2->body);
  EXPECT_EQ(r1->body, service.reward(body).body);

  json batch = {{"requests", json::array({grounding_request(), grounding_request(), grounding_request()})}};
  auto rb = client.Post("/v1/reward/batch", batch.dump(), "application/json");
  ASSERT_TRUE(rb);
  EXPECT_EQ(json::parse(rb->body)["responses"].size(), 3u);

  auto bad = client.Post("/v1/reward", R"({"task_type":"chain_of_thought","rollout_text":"x","reference":"y"})",
                         "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  server.stop();
}

TEST(Http, BindFailureIsIoError) {
  const RewardService service(TaxonomyRegistry::builtin(), {});
  HttpRewardServer first(service);
  const int port = first.bind("127.0.0.1", 0);
  HttpRewardServer second(service);
  try {
    second.bind("127.0.0.1", port);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}
