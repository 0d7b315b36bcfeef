#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "ipd/model_client.hpp"

namespace ipd {

/// Behaviour knobs of the stand-in chat-completion backend.
struct MockOptions {
  int delay_ms = 0;          // added to every completion
  int fail_first = 0;        // the first N completion requests answer HTTP 500
  int malformed_every = 0;   // every Nth completion gets a reply without JSON (0: never)
  int exit_percent = 5;      // chance (by prompt hash) that a move reply asks to end the match
  int deviate_percent = 10;  // chance (by prompt hash) that a move reply plays action_b regardless
};

/// Reply text for a prompt. Pure in the prompt: moves mirror the opponent's last
/// action in the history (action_a when there is none), sometimes play action_b
/// anyway and occasionally end the match; plans, critiques and meta answers are fixed-shape. Every reply opens with
/// a <think> block and carries its JSON in a fenced block.
std::string mock_reply(const std::string& prompt, const MockOptions& options = {});

/// Full chat-completion response body for a request body. Throws std::invalid_argument
/// when the request has no user message.
std::string mock_response_body(const std::string& request_body, const MockOptions& options = {});

/// In-process Transport that answers like the mock server, without sockets.
std::shared_ptr<Transport> make_mock_transport(const MockOptions& options = {});

/// OpenAI-style HTTP server backed by mock_reply.
class MockServer {
 public:
  explicit MockServer(MockOptions options = {});
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port; throws std::runtime_error when binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop() is called from elsewhere.
  void listen_blocking(const std::string& host, int port);
  void stop();

  std::string endpoint() const;
  int requests_served() const { return served_->load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<std::atomic<int>> served_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace ipd
