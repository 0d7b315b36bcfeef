#include "ipd/mock_backend.hpp"

#include <chrono>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace ipd {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fenced(const json& payload) { return "```json\n" + payload.dump() + "\n```"; }

std::string move_reply(const std::string& prompt, const MockOptions& options) {
  std::string action = "action_a";
  const std::string marker = "opponent chose ";
  if (const auto at = prompt.rfind(marker); at != std::string::npos) {
    const auto token = prompt.substr(at + marker.size(), 8);
    if (token == "action_b") action = "action_b";
  }
  const std::uint64_t h = fnv1a(prompt);
  if (static_cast<int>((h >> 16) % 100) < options.deviate_percent) action = "action_b";
  const bool end = static_cast<int>(h % 100) < options.exit_percent;
  return "<think>Copy what the opponent did last.</think>\n" +
         fenced({{"action", action}, {"end_match", end}, {"reasoning", "mirror the opponent"}});
}

std::string meta_reply(const std::string& prompt) {
  static const std::regex question(R"(^Q\d+\. .*\[answer: (integer|true or false)\]\s*$)");
  static const std::regex score(R"(Your total score so far: (-?\d+))");
  int total = 0;
  std::smatch m;
  if (std::regex_search(prompt, m, score)) total = std::stoi(m[1]);
  json answers = json::array();
  std::istringstream in(prompt);
  for (std::string line; std::getline(in, line);) {
    if (!std::regex_match(line, m, question)) continue;
    if (m[1] == "integer") answers.push_back(total);
    else answers.push_back(true);
  }
  return "<think>Answer each question.</think>\n" + fenced({{"answers", answers}});
}

std::string completion_body(const std::string& text, const std::string& model) {
  const json body = {{"id", "mock-" + std::to_string(fnv1a(text))},
                     {"object", "chat.completion"},
                     {"model", model},
                     {"choices", json::array({{{"index", 0},
                                               {"message", {{"role", "assistant"}, {"content", text}}},
                                               {"finish_reason", "stop"}}})}};
  return body.dump();
}

/// Shared request counter and failure injection for transport and server.
struct MockState {
  MockOptions options;
  std::atomic<int> completions{0};

  HttpResult complete(const std::string& request_body) {
    const int n = ++completions;
    if (options.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(options.delay_ms));
    if (n <= options.fail_first) return {500, R"({"error":"injected failure"})", "", false};
    try {
      if (options.malformed_every > 0 && n % options.malformed_every == 0) {
        const json req = json::parse(request_body);
        return {200, completion_body("I would rather not answer in JSON.", req.value("model", "mock")), "", false};
      }
      return {200, mock_response_body(request_body, options), "", false};
    } catch (const std::exception& e) {
      return {400, json{{"error", e.what()}}.dump(), "", false};
    }
  }
};

const std::string kModelsBody = R"({"object":"list","data":[{"id":"mock","object":"model"}]})";

class MockTransport final : public Transport {
 public:
  explicit MockTransport(const MockOptions& options) { state_.options = options; }
  HttpResult post(const std::string& path, const std::string& body, double) override {
    if (path != "/v1/chat/completions") return {404, "", "", false};
    return state_.complete(body);
  }
  HttpResult get(const std::string& path, double) override {
    if (path != "/v1/models") return {404, "", "", false};
    return {200, kModelsBody, "", false};
  }

 private:
  MockState state_;
};

}  // namespace

std::string mock_reply(const std::string& prompt, const MockOptions& options) {
  if (prompt.find("{\"answers\":") != std::string::npos) return meta_reply(prompt);
  if (prompt.find("{\"feedback\":") != std::string::npos)
    return "<think>Review the plan.</think>\n" +
           fenced({{"feedback", "Keep playing action_a with opponents who do the same and answer action_b in kind."}});
  if (prompt.find("{\"plan\":") != std::string::npos)
    return "<think>Pick a simple strategy.</think>\n" +
           fenced({{"plan", "Start with action_a, then repeat the opponent's previous action."}});
  return move_reply(prompt, options);
}

std::string mock_response_body(const std::string& request_body, const MockOptions& options) {
  const json req = json::parse(request_body);
  const auto& messages = req.at("messages");
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->value("role", "") == "user")
      return completion_body(mock_reply(it->at("content").get<std::string>(), options), req.value("model", "mock"));
  }
  throw std::invalid_argument("request has no user message");
}

std::shared_ptr<Transport> make_mock_transport(const MockOptions& options) {
  return std::make_shared<MockTransport>(options);
}

struct MockServer::Impl {
  httplib::Server server;
  MockState state;
};

MockServer::MockServer(MockOptions options)
    : impl_(std::make_unique<Impl>()), served_(std::make_shared<std::atomic<int>>(0)) {
  impl_->state.options = options;
  auto served = served_;
  Impl* impl = impl_.get();
  impl_->server.Post("/v1/chat/completions", [impl, served](const httplib::Request& req, httplib::Response& res) {
    const HttpResult r = impl->state.complete(req.body);
    ++*served;
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  impl_->server.Get("/v1/models", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(kModelsBody, "application/json");
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw std::runtime_error("mock server could not bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockServer::listen_blocking(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!impl_->server.listen(host, port))
    throw std::runtime_error("mock server could not listen on " + host + ":" + std::to_string(port));
}

void MockServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::endpoint() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace ipd
