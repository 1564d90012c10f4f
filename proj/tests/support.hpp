#pragma once

// Shared test fixtures: scratch directories, record builders and an
// index-free reference evaluator for queries.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "tweetvault/dehydrator.hpp"
#include "tweetvault/mock_corpus.hpp"
#include "tweetvault/query.hpp"
#include "tweetvault/search.hpp"
#include "tweetvault/store.hpp"
#include "tweetvault/tokenizer.hpp"

namespace support {

namespace tv = tweetvault;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "tweetvault-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline tv::EpochMs at(int y, int mo, int d, int h = 0, int mi = 0, int s = 0) {
  return tv::to_epoch_ms(tv::CivilDateTime{{y, mo, d}, h, mi, s, 0});
}

inline tv::DehydratedTweet record(tv::TweetId id, tv::EpochMs ts, std::string text) {
  tv::DehydratedTweet d;
  d.created_at = tv::format_created_at(ts);
  d.id_str = std::to_string(id);
  d.lang = "en";
  d.text = std::move(text);
  d.timestamp = ts;
  d.user_id_str = std::to_string(1000 + id % 97);
  return d;
}

inline void write_archive(const fs::path& root, const std::vector<tv::DehydratedTweet>& recs,
                          std::uint64_t roll_records = tv::kSegmentRollRecords) {
  tv::ArchiveWriter w(root, {}, roll_records);
  for (const auto& r : recs) w.append(r);
  w.flush();
}

inline std::vector<tv::PartitionKey> stored_partitions(const tv::ArchiveReader& a) {
  std::vector<tv::PartitionKey> keys;
  for (const auto& k : a.partitions())
    if (!k.is_quarantine()) keys.push_back(k);
  return keys;
}

// Archive plus index of `recs` under dir/archive and dir/index.
inline void build_searchable(const fs::path& dir, const std::vector<tv::DehydratedTweet>& recs,
                             std::uint64_t roll_records = tv::kSegmentRollRecords) {
  write_archive(dir / "archive", recs, roll_records);
  tv::ArchiveReader a(dir / "archive");
  tv::build_indexes(a, stored_partitions(a), dir / "index");
}

// About n existing tweets of the default synthetic corpus, drawn at evenly
// spaced positions of the built-in candidate stream so they span every
// partition.
inline std::vector<tv::DehydratedTweet> synthetic_records(std::size_t n, std::uint64_t seed = 42) {
  tv::CorpusSpec spec;
  spec.seed = seed;
  tv::CorpusGenerator gen(spec);
  const auto stream = tv::enumerate(tv::RangeTable::builtin());
  const auto wanted = static_cast<std::uint64_t>(static_cast<double>(n) / spec.existence_rate * 1.05) + 1;
  const std::uint64_t stride = std::max<std::uint64_t>(1, stream.size() / wanted);
  std::vector<tv::DehydratedTweet> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < stream.size() && out.size() < n; i += stride)
    if (auto t = gen.tweet(stream.at(i))) out.push_back(tv::dehydrate(*t));
  return out;
}

// Reference evaluator: every document is tokenized up front and queries are
// answered by testing each document in turn.
class OracleCorpus {
 public:
  using Hit = std::pair<tv::EpochMs, tv::TweetId>;

  explicit OracleCorpus(const std::vector<tv::DehydratedTweet>& recs, tv::ArchiveBounds bounds = {}) {
    for (const auto& r : recs) {
      if (r.timestamp < bounds.begin || r.timestamp >= bounds.end) continue;
      Doc d{r.timestamp, std::stoull(r.id_str), {}};
      for (const auto& t : tv::tokenize(r.text)) d.tokens.push_back(intern(t));
      docs_.push_back(std::move(d));
    }
    std::sort(docs_.begin(), docs_.end(), [](const Doc& a, const Doc& b) {
      return a.ts != b.ts ? a.ts > b.ts : a.id > b.id;
    });
  }

  // Matching (timestamp, id) pairs, newest first.
  std::vector<Hit> evaluate(const tv::Query& q, tv::TimeBounds scope = {}) const {
    const auto c = compile(q);
    std::vector<Hit> out;
    for (const auto& d : docs_)
      if (d.ts >= scope.lo && d.ts <= scope.hi && match(c, d)) out.push_back({d.ts, d.id});
    return out;
  }

  std::size_t size() const { return docs_.size(); }

 private:
  static constexpr std::uint32_t kUnknown = 0xFFFFFFFF;

  struct Doc {
    tv::EpochMs ts;
    tv::TweetId id;
    std::vector<std::uint32_t> tokens;
  };
  struct Node {
    tv::Query::Kind kind;
    std::vector<std::uint32_t> tokens;
    std::vector<Node> children;
    tv::EpochMs t0, t1;
  };

  std::uint32_t intern(const std::string& t) {
    auto [it, inserted] = dict_.try_emplace(t, static_cast<std::uint32_t>(dict_.size()));
    return it->second;
  }

  Node compile(const tv::Query& q) const {
    Node n{q.kind, {}, {}, q.t0, q.t1};
    for (const auto& t : q.tokens) {
      auto it = dict_.find(t);
      n.tokens.push_back(it == dict_.end() ? kUnknown : it->second);
    }
    for (const auto& c : q.children) n.children.push_back(compile(c));
    return n;
  }

  static bool match(const Node& n, const Doc& d) {
    switch (n.kind) {
      case tv::Query::Kind::kTerm:
        for (auto t : d.tokens)
          if (t == n.tokens[0]) return true;
        return false;
      case tv::Query::Kind::kPhrase:
        for (std::size_t i = 0; i + n.tokens.size() <= d.tokens.size(); ++i) {
          std::size_t k = 0;
          while (k < n.tokens.size() && d.tokens[i + k] == n.tokens[k]) ++k;
          if (k == n.tokens.size()) return true;
        }
        return false;
      case tv::Query::Kind::kTimeRange: return n.t0 <= d.ts && d.ts <= n.t1;
      case tv::Query::Kind::kAnd:
        for (const auto& c : n.children)
          if (!match(c, d)) return false;
        return true;
      case tv::Query::Kind::kOr:
        for (const auto& c : n.children)
          if (match(c, d)) return true;
        return false;
    }
    return false;
  }

  std::unordered_map<std::string, std::uint32_t> dict_;
  std::vector<Doc> docs_;
};

inline std::vector<OracleCorpus::Hit> hits_of(const std::vector<tv::SearchResult>& rs) {
  std::vector<OracleCorpus::Hit> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back({r.timestamp, std::stoull(r.id_str)});
  return out;
}

// Random queries over the tokens of a record set: frequency-weighted terms,
// rare and absent terms, phrases lifted from (or scrambled out of) real
// texts, time ranges, and And/Or trees.
class QueryGenerator {
 public:
  QueryGenerator(const std::vector<tv::DehydratedTweet>& recs, std::uint64_t seed) : rng_(seed) {
    for (const auto& r : recs) {
      auto toks = tv::tokenize(r.text);
      if (!toks.empty()) {
        texts_.push_back(std::move(toks));
        stamps_.push_back(r.timestamp);
      }
      lo_ = std::min(lo_, r.timestamp);
      hi_ = std::max(hi_, r.timestamp);
    }
    std::unordered_map<std::string, int> seen;
    for (const auto& t : texts_)
      for (const auto& w : t)
        if (seen.emplace(w, 0).second) vocab_.push_back(w);
    std::sort(vocab_.begin(), vocab_.end());
  }

  tv::Query term() {
    const auto r = uniform(100);
    if (r < 5) return tv::Query::term("zzqx" + std::to_string(uniform(1000)));
    if (r < 20) return tv::Query::term(vocab_[uniform(vocab_.size())]);
    const auto& t = texts_[uniform(texts_.size())];
    return tv::Query::term(t[uniform(t.size())]);
  }

  tv::Query phrase() {
    const auto& t = texts_[uniform(texts_.size())];
    if (t.size() < 2) return term();
    const std::size_t len = std::min<std::size_t>(t.size(), 2 + uniform(4));
    const std::size_t start = uniform(t.size() - len + 1);
    std::vector<std::string> toks(t.begin() + static_cast<std::ptrdiff_t>(start),
                                  t.begin() + static_cast<std::ptrdiff_t>(start + len));
    if (uniform(5) == 0) std::shuffle(toks.begin(), toks.end(), rng_);
    return tv::Query::phrase(std::move(toks));
  }

  tv::Query time_range() {
    auto a = lo_ + static_cast<tv::EpochMs>(uniform(static_cast<std::uint64_t>(hi_ - lo_ + 1)));
    auto b = lo_ + static_cast<tv::EpochMs>(uniform(static_cast<std::uint64_t>(hi_ - lo_ + 1)));
    return tv::Query::time_range(std::min(a, b), std::max(a, b));
  }

  tv::Query query(int depth = 3) {
    const auto r = uniform(100);
    if (depth <= 1 || r < 40) {
      const auto leaf = uniform(10);
      if (leaf < 5) return term();
      if (leaf < 8) return phrase();
      return time_range();
    }
    std::vector<tv::Query> kids;
    const auto n = 2 + uniform(3);
    for (std::size_t i = 0; i < n; ++i) kids.push_back(query(depth - 1));
    return r < 70 ? tv::Query::all_of(std::move(kids)) : tv::Query::any_of(std::move(kids));
  }

  // A query of depth <= 3 that matches at least the chosen record, paired
  // with a scope containing that record.
  std::pair<tv::Query, tv::TimeBounds> anchored() {
    const auto i = uniform(texts_.size());
    const auto& t = texts_[i];
    auto own_term = [&] { return tv::Query::term(t[uniform(t.size())]); };
    std::vector<tv::Query> kids{own_term()};
    if (t.size() >= 2) {
      const std::size_t len = 2 + uniform(std::min<std::size_t>(t.size(), 4) - 1);
      const std::size_t start = uniform(t.size() - len + 1);
      kids.push_back(tv::Query::phrase(std::vector<std::string>(t.begin() + static_cast<std::ptrdiff_t>(start),
                                                                t.begin() + static_cast<std::ptrdiff_t>(start + len))));
    }
    kids.push_back(tv::Query::any_of({own_term(), query(2)}));
    const auto before = static_cast<tv::EpochMs>(uniform(3)) * tv::kMsPerWeek;
    const auto after = static_cast<tv::EpochMs>(uniform(3)) * tv::kMsPerWeek;
    return {tv::Query::all_of(std::move(kids)), {stamps_[i] - before, stamps_[i] + after}};
  }

  tv::TimeBounds scope() {
    switch (uniform(4)) {
      case 0:
      case 1: return {};
      case 2: {
        auto q = time_range();
        return {q.t0, q.t1};
      }
      default: {
        // A few weeks somewhere in the data.
        auto a = lo_ + static_cast<tv::EpochMs>(uniform(static_cast<std::uint64_t>(hi_ - lo_ + 1)));
        return {a, a + static_cast<tv::EpochMs>(1 + uniform(4)) * tv::kMsPerWeek};
      }
    }
  }

 private:
  std::uint64_t uniform(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_); }

  std::mt19937_64 rng_;
  std::vector<std::vector<std::string>> texts_;
  std::vector<tv::EpochMs> stamps_;
  std::vector<std::string> vocab_;
  tv::EpochMs lo_ = tv::kTimeMax;
  tv::EpochMs hi_ = tv::kTimeMin;
};

}  // namespace support
