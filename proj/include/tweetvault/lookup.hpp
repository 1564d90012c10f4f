#pragma once

// The batched lookup contract: at most 100 ids per request, missing ids
// silently omitted, and a per-credential minimum spacing between requests.

#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tweetvault/civil_time.hpp"
#include "tweetvault/ids.hpp"
#include "tweetvault/mock_corpus.hpp"

namespace tweetvault {

class LookupRejected : public std::runtime_error {
 public:
  enum class Kind { kRequestTooLarge, kBadRequest, kThrottled };

  LookupRejected(Kind kind, const std::string& what, int retry_after_seconds = 0)
      : std::runtime_error(what), kind_(kind), retry_after_(retry_after_seconds) {}

  Kind kind() const { return kind_; }
  int retry_after_seconds() const { return retry_after_; }

 private:
  Kind kind_;
  int retry_after_;
};

// Comma-separated decimal ids, as sent in the `id` form field.
inline std::vector<TweetId> parse_id_list(std::string_view csv) {
  std::vector<TweetId> ids;
  std::size_t pos = 0;
  while (true) {
    auto comma = csv.find(',', pos);
    auto tok = detail::trim(csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    TweetId v = 0;
    try {
      v = detail::parse_u64(tok, "id");
    } catch (const std::invalid_argument&) {
      throw LookupRejected(LookupRejected::Kind::kBadRequest, "malformed id: '" + std::string(tok) + "'");
    }
    if (v < kMinTweetId) throw LookupRejected(LookupRejected::Kind::kBadRequest, "id must be positive");
    ids.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return ids;
}

inline std::string format_id_list(std::span<const TweetId> ids) {
  std::string s;
  for (auto id : ids) {
    if (!s.empty()) s += ',';
    s += std::to_string(id);
  }
  return s;
}

// Serves lookups from a synthetic corpus. Thread-safe; the limiter table is
// the only mutable state.
class LookupService {
 public:
  LookupService(CorpusSpec spec, double min_interval_seconds)
      : corpus_(std::move(spec)), interval_ms_(static_cast<EpochMs>(std::llround(min_interval_seconds * 1000))) {
    if (min_interval_seconds < 0) throw std::invalid_argument("min_interval must be >= 0");
  }

  // `now` is the request arrival time.
  std::vector<HydratedTweet> lookup(std::span<const TweetId> ids, const std::string& credential, EpochMs now) {
    if (ids.size() > kMaxBatchSize)
      throw LookupRejected(LookupRejected::Kind::kRequestTooLarge,
                           "too many ids: " + std::to_string(ids.size()) + " > 100");
    if (ids.empty()) throw LookupRejected(LookupRejected::Kind::kBadRequest, "no ids given");
    admit(credential, now);
    std::vector<HydratedTweet> out;
    for (auto id : ids)
      if (auto t = corpus_.tweet(id)) out.push_back(std::move(*t));
    return out;
  }

  const CorpusGenerator& corpus() const { return corpus_; }
  EpochMs interval_ms() const { return interval_ms_; }

  std::uint64_t requests_served() const {
    std::lock_guard lock(mu_);
    return served_;
  }
  std::uint64_t requests_throttled() const {
    std::lock_guard lock(mu_);
    return throttled_;
  }

 private:
  void admit(const std::string& credential, EpochMs now) {
    std::lock_guard lock(mu_);
    auto it = last_start_.find(credential);
    if (it != last_start_.end() && now - it->second < interval_ms_) {
      ++throttled_;
      const EpochMs wait = it->second + interval_ms_ - now;
      throw LookupRejected(LookupRejected::Kind::kThrottled, "rate limit exceeded",
                           static_cast<int>((wait + 999) / 1000));
    }
    last_start_[credential] = now;
    ++served_;
  }

  CorpusGenerator corpus_;
  EpochMs interval_ms_;
  mutable std::mutex mu_;
  std::map<std::string, EpochMs> last_start_;
  std::uint64_t served_ = 0;
  std::uint64_t throttled_ = 0;
};

}  // namespace tweetvault
