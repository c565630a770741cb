#pragma once

#include <memory>
#include <string>

#include "ctxbench/providers.hpp"

namespace ctxbench {

// Serves any in-process provider over the wire protocol. Used to run the
// mocks behind a real socket (contract tests, offline CLI runs). Any of the
// three capabilities may be null; the matching endpoints then answer 501.
class ProviderServer {
 public:
  ProviderServer(FillMaskProvider* fill, ScoringProvider* scorer, GenerationProvider* generator);
  ~ProviderServer();

  ProviderServer(const ProviderServer&) = delete;
  ProviderServer& operator=(const ProviderServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ctxbench
