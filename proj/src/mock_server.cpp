// SPDX-License-Identifier: Apache-2.0
#include "pvf/mock_server.hpp"

#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "pvf/errors.hpp"

namespace pvf {

MockServerConfig MockServerConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read mock tables file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
    MockServerConfig config;
    for (const auto& [prompt, words] : j.at("tables").items()) {
      config.tables[prompt] = words.get<std::map<std::string, double>>();
    }
    config.require_token = j.value("require_token", std::string{});
    config.fail_first = j.value("fail_first", 0);
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mock tables JSON: ") + e.what());
  }
}

MockInferenceServer::MockInferenceServer(MockServerConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  failures_left_.store(config_.fail_first);
  install_routes();
}

MockInferenceServer::~MockInferenceServer() { stop(); }

void MockInferenceServer::install_routes() {
  auto guard = [this](const httplib::Request& req,
                      httplib::Response& res) -> bool {
    requests_.fetch_add(1);
    if (!config_.require_token.empty() &&
        req.get_header_value("Authorization") !=
            "Bearer " + config_.require_token) {
      res.status = 401;
      res.set_content(R"({"error":"unauthorized"})", "application/json");
      return false;
    }
    if (failures_left_.load() > 0) {
      failures_left_.fetch_sub(1);
      res.status = 503;
      res.set_content(R"({"error":"temporarily unavailable"})",
                      "application/json");
      return false;
    }
    return true;
  };

  server_->Post("/v1/probe", [this, guard](const httplib::Request& req,
                                           httplib::Response& res) {
    if (!guard(req, res)) return;
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"bad json"})", "application/json");
      return;
    }
    if (!body.contains("prompt") || !body.contains("candidates")) {
      res.status = 400;
      res.set_content(R"({"error":"missing fields"})", "application/json");
      return;
    }
    const auto prompt = body["prompt"].get<std::string>();
    auto it = config_.tables.find(prompt);
    if (it == config_.tables.end()) {
      res.status = 404;
      res.set_content(
          nlohmann::json{{"error", "unknown prompt"}, {"prompt", prompt}}
              .dump(),
          "application/json");
      return;
    }
    nlohmann::json logprobs = nlohmann::json::object();
    for (const auto& cand : body["candidates"]) {
      const auto word = cand.get<std::string>();
      auto wit = it->second.find(word);
      if (wit != it->second.end()) {
        logprobs[word] = wit->second;
      }
    }
    res.set_content(
        nlohmann::json{{"logprobs", logprobs}, {"model", "mock"}}.dump(),
        "application/json");
  });

  server_->Post("/v1/completions", [this, guard](const httplib::Request& req,
                                                 httplib::Response& res) {
    if (!guard(req, res)) return;
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"bad json"})", "application/json");
      return;
    }
    const auto prompt = body.value("prompt", std::string{});
    auto it = config_.tables.find(prompt);
    if (it == config_.tables.end()) {
      res.status = 404;
      res.set_content(R"({"error":"unknown prompt"})", "application/json");
      return;
    }
    nlohmann::json top = nlohmann::json::object();
    for (const auto& [word, lp] : it->second) {
      top[" " + word] = lp;  // completion tokens carry a leading space
    }
    nlohmann::json out = {
        {"choices",
         nlohmann::json::array(
             {{{"text", ""}, {"logprobs", {{"top_logprobs", {top}}}}}})},
        {"model", "mock"}};
    res.set_content(out.dump(), "application/json");
  });

  server_->Get("/v1/stats", [this](const httplib::Request&,
                                   httplib::Response& res) {
    res.set_content(
        nlohmann::json{{"probe_requests", requests_.load()}}.dump(),
        "application/json");
  });
}

int MockInferenceServer::start() {
  const int port = server_->bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    throw BackendUnavailable("mock server failed to bind a port");
  }
  thread_ = std::thread([this]() { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void MockInferenceServer::serve_blocking(int port) {
  if (!server_->listen("127.0.0.1", port)) {
    throw BackendUnavailable("mock server failed to listen on port " +
                             std::to_string(port));
  }
}

void MockInferenceServer::stop() {
  if (server_) {
    server_->stop();
  }
  if (thread_.joinable()) {
    thread_.join();
  }
}

}  // namespace pvf
