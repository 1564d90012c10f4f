#pragma once

// HTTP front end for LookupService:
//   POST /1.1/statuses/lookup.json   form field id=1,2,3
//   200 JSON array | 400 bad request | 413 too many ids | 429 + Retry-After

#include <atomic>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>

#include "tweetvault/clock.hpp"
#include "tweetvault/lookup.hpp"

namespace tweetvault {

inline constexpr const char* kLookupPath = "/1.1/statuses/lookup.json";

inline std::string bearer_token(const httplib::Request& req) {
  auto auth = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (auth.rfind(kPrefix, 0) == 0) return auth.substr(kPrefix.size());
  return "anonymous";
}

class MockServer {
 public:
  MockServer(std::shared_ptr<LookupService> service, std::shared_ptr<Clock> clock = std::make_shared<SystemClock>())
      : service_(std::move(service)), clock_(std::move(clock)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); };
    server_.set_tcp_nodelay(true);
    server_.Post(kLookupPath, handler);
    server_.Get(kLookupPath, handler);
  }

  ~MockServer() { stop(); }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread until stop() is called elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    server_.listen_after_bind();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  const LookupService& service() const { return *service_; }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    auto error = [&](int status, const std::string& msg) {
      res.status = status;
      res.set_content(json({{"errors", {{{"message", msg}}}}}).dump(), "application/json");
    };
    if (!req.has_param("id")) return error(400, "missing id parameter");
    try {
      auto ids = parse_id_list(req.get_param_value("id"));
      auto tweets = service_->lookup(ids, bearer_token(req), clock_->now_ms());
      json body = json::array();
      for (const auto& t : tweets) body.push_back(to_json(t));
      res.set_content(body.dump(), "application/json");
    } catch (const LookupRejected& e) {
      switch (e.kind()) {
        case LookupRejected::Kind::kThrottled:
          res.set_header("Retry-After", std::to_string(e.retry_after_seconds()));
          return error(429, e.what());
        case LookupRejected::Kind::kRequestTooLarge:
          return error(413, e.what());
        case LookupRejected::Kind::kBadRequest:
          return error(400, e.what());
      }
    }
  }

  std::shared_ptr<LookupService> service_;
  std::shared_ptr<Clock> clock_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace tweetvault
