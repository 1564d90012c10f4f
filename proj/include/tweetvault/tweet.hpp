#pragma once

// Tweet records: the full (hydrated) object served by the lookup endpoint and
// the eight-field dehydrated record that the archive stores.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tweetvault/civil_time.hpp"
#include "tweetvault/ids.hpp"

namespace tweetvault {

using json = nlohmann::json;

struct UrlEntity {
  std::string url;
  std::size_t begin = 0;  // code point offsets in text
  std::size_t end = 0;
};

struct UserProfile {
  std::uint64_t id = 0;
  std::string screen_name;
  std::string name;
  std::string description;
  std::string location;
  std::string created_at;
  std::string profile_image_url;
  std::string time_zone;
  std::uint32_t followers_count = 0;
  std::uint32_t friends_count = 0;
  std::uint32_t statuses_count = 0;
  std::uint32_t favourites_count = 0;
  bool verified = false;
};

struct HydratedTweet {
  TweetId id = 0;
  std::string created_at;
  std::string text;
  UserProfile user;
  std::optional<TweetId> in_reply_to_status_id;
  std::optional<std::uint64_t> in_reply_to_user_id;
  std::optional<std::string> lang;
  std::string source;
  std::vector<UrlEntity> urls;
  std::vector<std::string> hashtags;
};

// Serialized in the same shape as the public tweet object.
inline json to_json(const HydratedTweet& t) {
  json user = {
      {"id", t.user.id},
      {"id_str", std::to_string(t.user.id)},
      {"screen_name", t.user.screen_name},
      {"name", t.user.name},
      {"description", t.user.description},
      {"location", t.user.location},
      {"created_at", t.user.created_at},
      {"profile_image_url", t.user.profile_image_url},
      {"time_zone", t.user.time_zone},
      {"followers_count", t.user.followers_count},
      {"friends_count", t.user.friends_count},
      {"statuses_count", t.user.statuses_count},
      {"favourites_count", t.user.favourites_count},
      {"verified", t.user.verified},
      {"protected", false},
      {"geo_enabled", false},
      {"url", nullptr},
  };
  json urls = json::array();
  for (const auto& u : t.urls)
    urls.push_back({{"url", u.url}, {"expanded_url", nullptr}, {"indices", {u.begin, u.end}}});
  json hashtags = json::array();
  for (const auto& h : t.hashtags) hashtags.push_back({{"text", h}});
  json j = {
      {"created_at", t.created_at},
      {"id", t.id},
      {"id_str", std::to_string(t.id)},
      {"text", t.text},
      {"source", t.source},
      {"truncated", false},
      {"favorited", false},
      {"retweeted", false},
      {"retweet_count", 0},
      {"user", std::move(user)},
      {"entities", {{"urls", std::move(urls)}, {"hashtags", std::move(hashtags)}, {"user_mentions", json::array()}}},
      {"geo", nullptr},
      {"coordinates", nullptr},
      {"place", nullptr},
      {"contributors", nullptr},
  };
  if (t.in_reply_to_status_id) {
    j["in_reply_to_status_id"] = *t.in_reply_to_status_id;
    j["in_reply_to_status_id_str"] = std::to_string(*t.in_reply_to_status_id);
    j["in_reply_to_user_id"] = *t.in_reply_to_user_id;
    j["in_reply_to_user_id_str"] = std::to_string(*t.in_reply_to_user_id);
  } else {
    j["in_reply_to_status_id"] = nullptr;
    j["in_reply_to_status_id_str"] = nullptr;
    j["in_reply_to_user_id"] = nullptr;
    j["in_reply_to_user_id_str"] = nullptr;
  }
  j["lang"] = t.lang ? json(*t.lang) : json(nullptr);
  return j;
}

struct DehydratedTweet {
  std::string created_at;
  std::string id_str;
  std::optional<std::string> in_reply_to_status_id_str;
  std::optional<std::string> in_reply_to_user_id_str;
  std::string lang;
  std::string text;
  EpochMs timestamp = 0;
  std::string user_id_str;

  TweetId id() const { return std::stoull(id_str); }

  friend bool operator==(const DehydratedTweet&, const DehydratedTweet&) = default;
};

inline constexpr std::array<std::string_view, 8> kDehydratedFields = {
    "created_at", "id_str", "in_reply_to_status_id_str", "in_reply_to_user_id_str",
    "lang",       "text",   "timestamp",                 "user_id_str"};

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One line of JSON, fields in the fixed mapping order, absent reply ids as null.
inline std::string to_json_line(const DehydratedTweet& t) {
  json j = {
      {"created_at", t.created_at},
      {"id_str", t.id_str},
      {"in_reply_to_status_id_str", t.in_reply_to_status_id_str ? json(*t.in_reply_to_status_id_str) : json(nullptr)},
      {"in_reply_to_user_id_str", t.in_reply_to_user_id_str ? json(*t.in_reply_to_user_id_str) : json(nullptr)},
      {"lang", t.lang},
      {"text", t.text},
      {"timestamp", t.timestamp},
      {"user_id_str", t.user_id_str},
  };
  return j.dump();
}

namespace detail {

inline std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw RecordError(std::string("field ") + key + " is not a string");
  return it->get<std::string>();
}

}  // namespace detail

inline DehydratedTweet from_json_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw RecordError("malformed dehydrated record");
  DehydratedTweet t;
  try {
    t.created_at = j.at("created_at").get<std::string>();
    t.id_str = j.at("id_str").get<std::string>();
    t.in_reply_to_status_id_str = detail::optional_string(j, "in_reply_to_status_id_str");
    t.in_reply_to_user_id_str = detail::optional_string(j, "in_reply_to_user_id_str");
    t.lang = j.at("lang").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.timestamp = j.at("timestamp").get<EpochMs>();
    t.user_id_str = j.at("user_id_str").get<std::string>();
  } catch (const json::exception& e) {
    throw RecordError(std::string("malformed dehydrated record: ") + e.what());
  }
  return t;
}

}  // namespace tweetvault
