#pragma once

// Plot-ready series over an indexed archive. Buckets are calendar-based and
// independent of the storage partitioning.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tweetvault/search.hpp"

namespace tweetvault {

struct VolumeRow {
  EpochMs bucket_start = 0;
  std::uint64_t total = 0;
  friend bool operator==(const VolumeRow&, const VolumeRow&) = default;
};

struct TrendRow {
  EpochMs bucket_start = 0;
  std::uint64_t total = 0;
  std::uint64_t matches = 0;
  std::optional<double> per_mille;  // absent when total == 0
  friend bool operator==(const TrendRow&, const TrendRow&) = default;
};

using TrendSeries = std::vector<TrendRow>;

inline std::optional<double> per_mille(std::uint64_t matches, std::uint64_t total) {
  if (total == 0) return std::nullopt;
  return 1000.0 * static_cast<double>(matches) / static_cast<double>(total);
}

// Bucket starts covering the scope clipped to the archive bounds.
inline std::vector<EpochMs> bucket_span(TimeBounds scope, Granularity g, const ArchiveBounds& bounds) {
  const EpochMs lo = std::max(scope.lo, bounds.begin);
  const EpochMs hi = std::min(scope.hi, bounds.end - 1);
  std::vector<EpochMs> out;
  if (lo > hi) return out;
  for (EpochMs b = bucket_start(lo, g); b <= hi; b = next_bucket(b, g)) out.push_back(b);
  return out;
}

inline std::vector<VolumeRow> volume(const Searcher& s, Granularity g, TimeBounds scope = {}) {
  auto counts = s.count(Query::match_all(), g, scope);
  std::vector<VolumeRow> rows;
  for (auto b : bucket_span(scope, g, s.archive().bounds())) {
    auto it = counts.find(b);
    rows.push_back({b, it == counts.end() ? 0 : it->second});
  }
  return rows;
}

inline TrendSeries trend(const Searcher& s, const Query& q, Granularity g, TimeBounds scope = {}) {
  auto totals = s.count(Query::match_all(), g, scope);
  auto matches = s.count(q, g, scope);
  TrendSeries rows;
  for (auto b : bucket_span(scope, g, s.archive().bounds())) {
    TrendRow r{b, 0, 0, std::nullopt};
    if (auto it = totals.find(b); it != totals.end()) r.total = it->second;
    if (auto it = matches.find(b); it != matches.end()) r.matches = it->second;
    r.per_mille = per_mille(r.matches, r.total);
    rows.push_back(r);
  }
  return rows;
}

struct TokenCount {
  std::string token;
  std::uint64_t count = 0;
  friend bool operator==(const TokenCount&, const TokenCount&) = default;
};

// Gerund-like tokens: a word (not a hashtag or mention) ending in "ing" with
// at least one character before the suffix.
inline bool is_action_token(std::string_view t) {
  return t.size() > 3 && t.ends_with("ing") && t[0] != '#' && t[0] != '@';
}

// Sorted by count descending, then token ascending.
inline void rank(std::vector<TokenCount>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.count != b.count ? a.count > b.count : a.token < b.token;
  });
}

// Top-k action tokens by document frequency within scope.
inline std::vector<TokenCount> top_actions(const Searcher& s, std::size_t k, TimeBounds scope = {}) {
  std::map<std::string, std::uint64_t> df;
  std::mutex m;
  s.for_each_partition(scope, [&](const PartitionKey&, const IndexReader& index, DocOrdinal lo, DocOrdinal hi) {
    std::vector<TokenCount> local;
    const bool whole = lo == 0 && hi == index.doc_count();
    for (std::size_t i = 0; i < index.term_count() && lo < hi; ++i) {
      const auto e = index.term_entry(i);
      const auto term = index.term_string(e);
      if (!is_action_token(term)) continue;
      std::uint64_t n = 0;
      if (whole) {
        n = e.doc_freq;
      } else {
        for (auto c = index.postings(e); c.doc() < hi; c.next())
          if (c.doc() >= lo) ++n;
      }
      if (n) local.push_back({std::string(term), n});
    }
    std::lock_guard lock(m);
    for (auto& t : local) df[t.token] += t.count;
  });
  std::vector<TokenCount> out;
  out.reserve(df.size());
  for (auto& [t, n] : df) out.push_back({t, n});
  rank(out);
  if (out.size() > k) out.resize(k);
  return out;
}

struct DomainShare {
  std::string domain;
  std::uint64_t tweets = 0;
  double fraction = 0;  // of tweets with at least one URL
  friend bool operator==(const DomainShare&, const DomainShare&) = default;
};

struct UrlStats {
  std::uint64_t tweets = 0;
  std::uint64_t tweets_with_url = 0;
  std::vector<DomainShare> domains;
  std::optional<double> fraction_with_url() const {
    if (tweets == 0) return std::nullopt;
    return static_cast<double>(tweets_with_url) / static_cast<double>(tweets);
  }
};

inline constexpr const char* kInvalidDomain = "invalid";

// Lowercased host of an http(s) URL, or "invalid".
inline std::string url_domain(std::string_view url) {
  auto lower = [](std::string_view s) {
    std::string r(s);
    for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
  };
  const auto l = lower(url.substr(0, 8));
  std::size_t skip = l.starts_with("https://") ? 8 : l.starts_with("http://") ? 7 : 0;
  if (!skip) return kInvalidDomain;
  auto rest = url.substr(skip);
  auto host = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = host.rfind('@'); at != std::string_view::npos) host = host.substr(at + 1);
  if (auto colon = host.find(':'); colon != std::string_view::npos) {
    auto port = host.substr(colon + 1);
    if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) return kInvalidDomain;
    host = host.substr(0, colon);
  }
  auto h = lower(host);
  if (h.empty() || h.find('.') == std::string::npos || h.front() == '.' || h.back() == '.' || h.front() == '-' ||
      h.back() == '-' || h.find("..") != std::string::npos)
    return kInvalidDomain;
  for (char c : h)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '-')) return kInvalidDomain;
  return h;
}

// URLs in raw text: whitespace-delimited words starting with http:// or
// https:// (case-insensitive), minus trailing punctuation.
inline std::vector<std::string_view> find_urls(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    auto word = text.substr(i, j - i);
    while (!word.empty() && std::string_view("([<\"'").find(word.front()) != std::string_view::npos)
      word.remove_prefix(1);
    std::string head(word.substr(0, 8));
    for (auto& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (head.starts_with("http://") || head.starts_with("https://")) {
      while (!word.empty() && std::string_view(".,;:!?)]>\"'").find(word.back()) != std::string_view::npos)
        word.remove_suffix(1);
      out.push_back(word);
    }
    i = j;
  }
  return out;
}

// Scans stored records in scope; the quarantine partition is not included.
inline UrlStats url_stats(const ArchiveReader& archive, TimeBounds scope = {}) {
  std::vector<PartitionKey> keys;
  const EpochMs lo = std::max(scope.lo, archive.bounds().begin);
  const EpochMs hi = std::min(scope.hi, archive.bounds().end - 1);
  if (lo <= hi)
    for (const auto& k : partitions_for_range(lo, hi, archive.bounds()))
      if (archive.has_partition(k)) keys.push_back(k);

  struct Partial {
    std::uint64_t tweets = 0, with_url = 0;
    std::map<std::string, std::uint64_t> domains;
  };
  std::vector<Partial> parts(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    auto& p = parts[i];
    for (const auto& seg : archive.segments(keys[i]))
      archive.read_segment(seg, [&](const DehydratedTweet& r, std::string_view) {
        if (r.timestamp < scope.lo || r.timestamp > scope.hi) return;
        ++p.tweets;
        auto urls = find_urls(r.text);
        if (urls.empty()) return;
        ++p.with_url;
        std::vector<std::string> seen;
        for (auto u : urls) {
          auto d = url_domain(u);
          if (std::find(seen.begin(), seen.end(), d) == seen.end()) seen.push_back(std::move(d));
        }
        for (auto& d : seen) ++p.domains[d];
      });
  });

  UrlStats out;
  std::map<std::string, std::uint64_t> domains;
  for (const auto& p : parts) {
    out.tweets += p.tweets;
    out.tweets_with_url += p.with_url;
    for (const auto& [d, n] : p.domains) domains[d] += n;
  }
  for (const auto& [d, n] : domains)
    out.domains.push_back({d, n, static_cast<double>(n) / static_cast<double>(out.tweets_with_url)});
  std::sort(out.domains.begin(), out.domains.end(), [](const auto& a, const auto& b) {
    return a.tweets != b.tweets ? a.tweets > b.tweets : a.domain < b.domain;
  });
  return out;
}

}  // namespace tweetvault
