// SPDX-License-Identifier: Apache-2.0

// Standalone scripted inference server; serves hardcoded logprob tables over
// the probe wire protocol. Useful for demos and manual pipeline runs.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "pvf/errors.hpp"
#include "pvf/mock_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"scripted mock inference server"};
  std::string tables_path;
  int port = 8060;
  app.add_option("--tables", tables_path, "JSON logprob tables")->required();
  app.add_option("--port", port, "listen port (127.0.0.1)");
  CLI11_PARSE(app, argc, argv);

  try {
    pvf::MockInferenceServer server(
        pvf::MockServerConfig::load(tables_path));
    std::printf("serving %s on 127.0.0.1:%d\n", tables_path.c_str(), port);
    std::fflush(stdout);
    server.serve_blocking(port);
  } catch (const pvf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.kind());
  }
  return 0;
}
