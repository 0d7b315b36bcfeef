#include "ipd/model_client.hpp"

#include <algorithm>
#include <future>
#include <optional>
#include <thread>

#include <httplib.h>

#include "ipd/errors.hpp"

namespace ipd {

namespace {

using nlohmann::json;

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string endpoint) : endpoint_(std::move(endpoint)) {
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  }

  HttpResult post(const std::string& path, const std::string& body, double timeout_s) override {
    auto client = connect(timeout_s);
    return convert(client.Post(path, body, "application/json"));
  }

  HttpResult get(const std::string& path, double timeout_s) override {
    auto client = connect(timeout_s);
    return convert(client.Get(path));
  }

 private:
  // One client per request: httplib::Client is not safe to share across threads.
  httplib::Client connect(double timeout_s) const {
    httplib::Client client(endpoint_);
    const auto usec = std::chrono::microseconds(static_cast<std::int64_t>(timeout_s * 1e6));
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                                  static_cast<time_t>(usec.count() % 1000000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                            static_cast<time_t>(usec.count() % 1000000));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                             static_cast<time_t>(usec.count() % 1000000));
    client.set_keep_alive(false);
    return client;
  }

  static HttpResult convert(const httplib::Result& res) {
    HttpResult out;
    if (!res) {
      out.error = httplib::to_string(res.error());
      out.timed_out = res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
                      res.error() == httplib::Error::ConnectionTimeout;
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

  std::string endpoint_;
};

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::shared_ptr<Transport> make_http_transport(const std::string& endpoint) {
  return std::make_shared<HttpTransport>(endpoint);
}

ModelClient::ModelClient(ModelConfig config) : ModelClient(config, make_http_transport(config.endpoint)) {}

ModelClient::ModelClient(ModelConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) throw std::invalid_argument("model client needs a transport");
}

bool ModelClient::health_check() const {
  const auto res = transport_->get(config_.health_path, std::min(config_.request_timeout_s, 10.0));
  return res.status >= 200 && res.status < 300;
}

std::string ModelClient::request_body(const std::string& prompt) const {
  json body = {{"model", config_.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"stream", false}};
  if (config_.sampling.is_object()) {
    for (const auto& [k, v] : config_.sampling.items()) body[k] = v;
  }
  return body.dump();
}

std::string ModelClient::reply_text(const std::string& response_body) {
  const json doc = json::parse(response_body, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("backend response is not JSON");
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw std::runtime_error("backend response has no choices[0].message.content");
  }
}

Completion ModelClient::complete(const std::string& prompt, const ReplyCheck& check) const {
  const std::string body = request_body(prompt);
  const int attempts = 1 + std::max(0, config_.max_retries);
  Completion out;
  bool transport_failed = false;
  bool timed_out = false;
  std::string last_error;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    ModelExchange ex;
    ex.request_text = body;
    ex.attempt = attempt;
    ex.timestamp_ms = wall_ms();
    const auto start = std::chrono::steady_clock::now();
    const HttpResult res = transport_->post(config_.api_path, body, config_.request_timeout_s);
    ex.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    ex.http_status = res.status;
    ex.response_text = res.body;

    transport_failed = true;
    timed_out = res.timed_out;
    if (res.status == 0) {
      ex.error = res.error.empty() ? "transport failure" : res.error;
    } else if (res.status < 200 || res.status >= 300) {
      ex.error = "HTTP " + std::to_string(res.status);
    } else {
      try {
        out.text = reply_text(res.body);
        transport_failed = false;
        out.malformed = false;
        if (check) check(out.text);
      } catch (const MalformedReply& e) {
        ex.error = std::string("malformed reply: ") + e.what();
        out.malformed = true;
      } catch (const std::runtime_error& e) {
        ex.error = e.what();
        transport_failed = true;
      }
    }
    last_error = ex.error;
    out.exchanges.push_back(std::move(ex));
    if (!transport_failed && !out.malformed) return out;
    if (transport_failed && attempt < attempts && config_.retry_backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms * attempt));
  }

  if (transport_failed) {
    const std::string what = "backend failed after " + std::to_string(attempts) + " attempts: " + last_error;
    if (timed_out) throw BackendTimeout(what, std::move(out.exchanges));
    throw BackendUnavailable(what, std::move(out.exchanges));
  }
  return out;
}

std::array<Completion, 2> ModelClient::complete_pair(const std::string& prompt_first,
                                                     const std::string& prompt_second,
                                                     const ReplyCheck& check_first,
                                                     const ReplyCheck& check_second,
                                                     std::array<std::string, 2> labels) const {
  auto first = std::async(std::launch::async, [&] { return complete(prompt_first, check_first); });
  auto second = std::async(std::launch::async, [&] { return complete(prompt_second, check_second); });

  std::array<Completion, 2> out;
  std::array<std::vector<ModelExchange>, 2> exchanges;
  std::optional<int> failed_side;
  std::string cause;
  bool timeout = false;
  std::array<std::future<Completion>*, 2> futures{&first, &second};
  for (int side = 0; side < 2; ++side) {
    try {
      out[side] = futures[side]->get();
      exchanges[side] = out[side].exchanges;
    } catch (const BackendError& e) {
      exchanges[side] = e.exchanges();
      if (!failed_side) {
        failed_side = side;
        cause = e.what();
        timeout = dynamic_cast<const BackendTimeout*>(&e) != nullptr;
      }
    }
  }
  if (failed_side) throw PairedBackendError(*failed_side, labels[*failed_side], cause, std::move(exchanges), timeout);
  return out;
}

}  // namespace ipd
