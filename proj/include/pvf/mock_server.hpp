// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file mock_server.hpp
 * @brief Scripted inference server for deterministic end-to-end runs.
 *
 * Serves the probe wire protocol from a hardcoded prompt -> logprob table:
 *   POST /v1/probe        {"prompt", "slot", "candidates"}
 *                         -> {"logprobs": {...}, "model": "mock"}
 *   POST /v1/completions  OpenAI-style shim answered from the same tables
 *   GET  /v1/stats        {"probe_requests": N} (request counter)
 *
 * Config JSON:
 *   {"tables": {"<prompt>": {"word": <logprob>, ...}, ...},
 *    "require_token": "secret",   // optional: enforce bearer auth
 *    "fail_first": 2}             // optional: 503 for the first N requests
 */

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace pvf {

struct MockServerConfig {
  std::map<std::string, std::map<std::string, double>> tables;
  std::string require_token;
  int fail_first = 0;

  static MockServerConfig load(const std::filesystem::path& path);
};

class MockInferenceServer {
 public:
  explicit MockInferenceServer(MockServerConfig config);
  ~MockInferenceServer();

  MockInferenceServer(const MockInferenceServer&) = delete;
  MockInferenceServer& operator=(const MockInferenceServer&) = delete;

  /// Binds 127.0.0.1 on a free port and serves in a background thread.
  int start();
  /// Serves on a fixed port, blocking the calling thread (tool entry point).
  void serve_blocking(int port);
  void stop();

  /// Total POST /v1/probe and /v1/completions hits, including rejected ones.
  std::uint64_t probe_requests() const { return requests_.load(); }

 private:
  void install_routes();

  MockServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<int> failures_left_{0};
};

}  // namespace pvf
