#include <CLI11.hpp>

#include <iostream>

#include "lens/stub_server.hpp"

// Serves the logprob wire protocol with a deterministic hash-based token
// model; a stand-in endpoint for exercising the remote scorer path.
int main(int argc, char** argv) {
  CLI::App app{"Deterministic stub scorer endpoint"};
  std::string host = "127.0.0.1";
  int port = 8311;
  uint64_t seed = 0;
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port");
  app.add_option("--seed", seed, "Token model seed");
  CLI11_PARSE(app, argc, argv);

  lens::StubScorerServer server(lens::hashed_token_model(seed));
  std::cout << "serving /v1/logprobs on http://" << host << ":" << port
            << std::endl;
  try {
    server.run_blocking(host, port);
  } catch (const std::exception& e) {
    std::cerr << e.what() << std::endl;
    return 1;
  }
  return 0;
}
