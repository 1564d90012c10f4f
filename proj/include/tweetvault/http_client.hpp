#pragma once

#include <memory>
#include <string>

#include <httplib.h>

#include "tweetvault/fetcher.hpp"
#include "tweetvault/mock_server.hpp"

namespace tweetvault {

// LookupClient over HTTP. `endpoint` is `http://host:port` optionally followed
// by the lookup path.
class HttpLookupClient final : public LookupClient {
 public:
  explicit HttpLookupClient(const std::string& endpoint, int timeout_seconds = 30) {
    auto scheme = endpoint.find("://");
    auto path_pos = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    std::string base = path_pos == std::string::npos ? endpoint : endpoint.substr(0, path_pos);
    path_ = path_pos == std::string::npos || endpoint.size() == path_pos + 1 ? kLookupPath : endpoint.substr(path_pos);
    client_ = std::make_unique<httplib::Client>(base);
    if (!client_->is_valid()) throw std::invalid_argument("invalid endpoint: " + endpoint);
    client_->set_connection_timeout(timeout_seconds, 0);
    client_->set_read_timeout(timeout_seconds, 0);
    client_->set_keep_alive(true);
    client_->set_tcp_nodelay(true);
  }

  LookupResponse lookup(std::span<const TweetId> ids, const std::string& token) override {
    LookupResponse r;
    httplib::Headers headers = {{"Authorization", "Bearer " + token}};
    httplib::Params params = {{"id", format_id_list(ids)}};
    auto res = client_->Post(path_, headers, params);
    if (!res) {
      r.status = LookupResponse::Status::kTransportError;
      r.error = httplib::to_string(res.error());
      return r;
    }
    if (res->status == 200) {
      json body = json::parse(res->body, nullptr, false);
      if (body.is_discarded() || !body.is_array()) {
        r.status = LookupResponse::Status::kTransportError;
        r.error = "malformed response body";
        return r;
      }
      for (const auto& t : body) {
        TweetId id = 0;
        if (auto it = t.find("id_str"); it != t.end() && it->is_string()) id = std::stoull(it->get<std::string>());
        else if (auto it2 = t.find("id"); it2 != t.end() && it2->is_number_unsigned()) id = it2->get<TweetId>();
        r.records.push_back({id, t.dump()});
      }
      return r;
    }
    if (res->status == 429) {
      r.status = LookupResponse::Status::kThrottled;
      r.retry_after_seconds = 1;
      if (res->has_header("Retry-After")) {
        try {
          r.retry_after_seconds = std::stoi(res->get_header_value("Retry-After"));
        } catch (const std::exception&) {
        }
      }
      return r;
    }
    r.status = res->status >= 500 ? LookupResponse::Status::kTransportError : LookupResponse::Status::kRejected;
    r.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    return r;
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string path_;
};

}  // namespace tweetvault
