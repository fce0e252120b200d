#pragma once

// Stateless reward service. RewardService maps a request body to a status
// and a JSON body without any I/O, so responses are a pure function of
// (body, registry, config); HttpRewardServer exposes it over HTTP.

#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "sv6d/config.h"
#include "sv6d/error.h"
#include "sv6d/objective.h"
#include "sv6d/taxonomy.h"

namespace sv6d {

inline constexpr std::string_view kEngineVersion = "0.1.0";

struct ServiceResponse {
  int status = 200;
  std::string body;
};

class RewardService {
 public:
  // `judge` may be null; chain_of_thought requests are then rejected with 422.
  RewardService(const TaxonomyRegistry& registry, LossConfig config,
                std::shared_ptr<const JudgeProvider> judge = nullptr);

  ServiceResponse health() const;
  ServiceResponse reward(std::string_view body) const;
  ServiceResponse reward_batch(std::string_view body) const;

  // Routes GET /v1/health, POST /v1/reward, POST /v1/reward/batch.
  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  // Response object for one parsed request; throws Error on bad input.
  nlohmann::json evaluate(const nlohmann::json& request) const;

  const std::string& config_digest() const noexcept { return config_digest_; }

 private:
  nlohmann::json envelope() const;
  nlohmann::json error_body(const Error& e) const;

  const TaxonomyRegistry& registry_;
  LossConfig config_;
  std::shared_ptr<const JudgeProvider> judge_;
  std::string config_digest_;
};

// HTTP status for an error kind: 422 for unsupported tasks, 400 otherwise.
int http_status_for(const Error& e);

class HttpRewardServer {
 public:
  explicit HttpRewardServer(const RewardService& service);
  ~HttpRewardServer();
  HttpRewardServer(const HttpRewardServer&) = delete;
  HttpRewardServer& operator=(const HttpRewardServer&) = delete;

  // Binds (port 0 picks a free port) and returns the bound port. Throws
  // Error(kIo) when binding fails.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sv6d
