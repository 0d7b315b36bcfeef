#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ipd {

/// Connection and sampling settings for the chat-completion backend.
///
/// Wire protocol: `POST {endpoint}{api_path}` with an OpenAI-style body
/// `{"model", "messages": [{"role": "user", "content": <prompt>}], "stream": false, ...sampling}`;
/// the reply text is `choices[0].message.content`. Ollama, llama.cpp server and vLLM
/// all serve this shape. The health check is `GET {endpoint}{health_path}`.
struct ModelConfig {
  std::string endpoint = "http://127.0.0.1:11434";
  std::string model = "qwen3:14b";
  std::string api_path = "/v1/chat/completions";
  std::string health_path = "/v1/models";
  nlohmann::json sampling = nlohmann::json::object();  // passed through verbatim
  double request_timeout_s = 120.0;
  int max_retries = 3;
  int retry_backoff_ms = 250;
};

/// One request/response attempt against the backend.
struct ModelExchange {
  std::string request_text;
  std::string response_text;
  int http_status = 0;  // 0 when no HTTP response was received
  std::string error;    // empty on success
  double latency_ms = 0.0;
  int attempt = 1;  // 1-based
  std::int64_t timestamp_ms = 0;  // wall clock at send time
};

class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, std::vector<ModelExchange> exchanges)
      : std::runtime_error(what), exchanges_(std::move(exchanges)) {}
  const std::vector<ModelExchange>& exchanges() const { return exchanges_; }

 private:
  std::vector<ModelExchange> exchanges_;
};

/// Retries exhausted on transport failures or error statuses.
class BackendUnavailable : public BackendError {
  using BackendError::BackendError;
};

/// Retries exhausted and the final attempt timed out.
class BackendTimeout : public BackendError {
  using BackendError::BackendError;
};

/// complete_pair failure; `side` is 0 or 1.
class PairedBackendError : public std::runtime_error {
 public:
  PairedBackendError(int side, const std::string& label, const std::string& cause,
                     std::array<std::vector<ModelExchange>, 2> exchanges, bool timeout)
      : std::runtime_error(label + ": " + cause),
        side_(side),
        exchanges_(std::move(exchanges)),
        timeout_(timeout) {}
  int side() const { return side_; }
  bool timed_out() const { return timeout_; }
  const std::array<std::vector<ModelExchange>, 2>& exchanges() const { return exchanges_; }

 private:
  int side_;
  std::array<std::vector<ModelExchange>, 2> exchanges_;
  bool timeout_;
};

struct HttpResult {
  int status = 0;  // 0: transport failure
  std::string body;
  std::string error;
  bool timed_out = false;
};

/// Moves request bodies to the backend. Implementations must be safe to call
/// from several threads at once.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResult post(const std::string& path, const std::string& body, double timeout_s) = 0;
  virtual HttpResult get(const std::string& path, double timeout_s) = 0;
};

std::shared_ptr<Transport> make_http_transport(const std::string& endpoint);

/// Called with each reply text; throws MalformedReply to request a retry.
using ReplyCheck = std::function<void(const std::string&)>;

struct Completion {
  std::string text;
  std::vector<ModelExchange> exchanges;  // every attempt, in order
  /// The final reply still failed the check: the caller should fall back.
  bool malformed = false;
};

class ModelClient {
 public:
  explicit ModelClient(ModelConfig config);
  ModelClient(ModelConfig config, std::shared_ptr<Transport> transport);

  const ModelConfig& config() const { return config_; }

  /// True when the health endpoint answers with a 2xx status.
  bool health_check() const;

  /// Sends `prompt` and returns the reply text. Retries up to max_retries times on
  /// transport errors, timeouts, non-2xx statuses and replies rejected by `check`.
  /// Throws BackendTimeout / BackendUnavailable when transport retries run out.
  /// When only the check keeps failing, returns the last reply with `malformed` set.
  Completion complete(const std::string& prompt, const ReplyCheck& check = {}) const;

  /// Both requests are in flight at once and joined before returning, so neither
  /// reply can depend on the other. Throws PairedBackendError naming the failing side.
  std::array<Completion, 2> complete_pair(const std::string& prompt_first,
                                          const std::string& prompt_second,
                                          const ReplyCheck& check_first = {},
                                          const ReplyCheck& check_second = {},
                                          std::array<std::string, 2> labels = {"player 1",
                                                                               "player 2"}) const;

  std::string request_body(const std::string& prompt) const;
  /// Extracts choices[0].message.content; throws std::runtime_error on other shapes.
  static std::string reply_text(const std::string& response_body);

 private:
  ModelConfig config_;
  std::shared_ptr<Transport> transport_;
};

}  // namespace ipd
