#pragma once

// Index-free query evaluation by scanning stored records. Slow but simple;
// used to cross-check the index.

#include <algorithm>
#include <string>
#include <vector>

#include "tweetvault/query.hpp"
#include "tweetvault/search.hpp"
#include "tweetvault/store.hpp"
#include "tweetvault/tokenizer.hpp"

namespace tweetvault {

inline bool scan_matches(const Query& q, const std::vector<std::string>& tokens, EpochMs ts) {
  switch (q.kind) {
    case Query::Kind::kTerm: return std::find(tokens.begin(), tokens.end(), q.tokens[0]) != tokens.end();
    case Query::Kind::kPhrase:
      return std::search(tokens.begin(), tokens.end(), q.tokens.begin(), q.tokens.end()) != tokens.end();
    case Query::Kind::kTimeRange: return q.t0 <= ts && ts <= q.t1;
    case Query::Kind::kAnd:
      return std::all_of(q.children.begin(), q.children.end(),
                         [&](const Query& c) { return scan_matches(c, tokens, ts); });
    case Query::Kind::kOr:
      return std::any_of(q.children.begin(), q.children.end(),
                         [&](const Query& c) { return scan_matches(c, tokens, ts); });
  }
  return false;
}

// Same contract as Searcher::execute, without the index.
inline std::vector<SearchResult> scan_search(const ArchiveReader& archive, const Query& q, TimeBounds scope = {}) {
  std::vector<SearchResult> out;
  for (const auto& key : archive.partitions()) {
    if (key.is_quarantine()) continue;
    archive.scan(key, [&](const DehydratedTweet& r) {
      if (r.timestamp < scope.lo || r.timestamp > scope.hi) return;
      if (scan_matches(q, tokenize(r.text), r.timestamp)) out.push_back({r.id_str, r.timestamp, r.text, key});
    });
  }
  std::sort(out.begin(), out.end(), [](const SearchResult& a, const SearchResult& b) {
    if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
    return std::stoull(a.id_str) > std::stoull(b.id_str);
  });
  return out;
}

}  // namespace tweetvault
