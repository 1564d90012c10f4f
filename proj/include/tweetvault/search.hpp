#pragma once

// Query evaluation over per-partition indexes.
//
// Each query node becomes a forward iterator over ascending document
// ordinals; conjunctions leapfrog, disjunctions merge through a heap, and
// time ranges are ordinal intervals because ordinals follow timestamp order.
// Partitions are visited newest first and each partition's matches are
// emitted in reverse ordinal order, giving (timestamp desc, id desc) overall.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "tweetvault/index.hpp"
#include "tweetvault/parallel.hpp"
#include "tweetvault/partition.hpp"
#include "tweetvault/query.hpp"
#include "tweetvault/store.hpp"

namespace tweetvault {

enum class Granularity { kDay, kWeek, kMonth };

inline std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::kDay: return "day";
    case Granularity::kWeek: return "week";
    case Granularity::kMonth: return "month";
  }
  return {};
}

inline Granularity parse_granularity(std::string_view s) {
  if (s == "day") return Granularity::kDay;
  if (s == "week") return Granularity::kWeek;
  if (s == "month") return Granularity::kMonth;
  throw std::invalid_argument("unknown bucket '" + std::string(s) + "' (expected day, week or month)");
}

// Start of the bucket containing ts: UTC midnight, ISO-week Monday, or the
// first of the month.
inline EpochMs bucket_start(EpochMs ts, Granularity g) {
  const auto days = floor_div(ts, kMsPerDay);
  switch (g) {
    case Granularity::kDay: return days * kMsPerDay;
    case Granularity::kWeek: return iso_week_monday(days) * kMsPerDay;
    case Granularity::kMonth: {
      auto d = civil_from_days(days);
      return days_from_civil(d.year, d.month, 1) * kMsPerDay;
    }
  }
  return ts;
}

inline EpochMs next_bucket(EpochMs start, Granularity g) {
  switch (g) {
    case Granularity::kDay: return start + kMsPerDay;
    case Granularity::kWeek: return start + kMsPerWeek;
    case Granularity::kMonth: {
      auto d = civil_from_days(floor_div(start, kMsPerDay));
      return d.month == 12 ? days_from_civil(d.year + 1, 1, 1) * kMsPerDay
                           : days_from_civil(d.year, d.month + 1, 1) * kMsPerDay;
    }
  }
  return start;
}

struct SearchResult {
  std::string id_str;
  EpochMs timestamp = 0;
  std::string text;
  PartitionKey partition = PartitionKey::quarantine();

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

using BucketCounts = std::map<EpochMs, std::uint64_t>;

namespace detail {

class DocIterator {
 public:
  virtual ~DocIterator() = default;
  virtual DocOrdinal doc() const = 0;
  virtual void next() = 0;
  // Moves to the first document >= target; never moves backwards.
  virtual void advance(DocOrdinal target) = 0;
};

using DocIteratorPtr = std::unique_ptr<DocIterator>;

class TermIterator final : public DocIterator {
 public:
  explicit TermIterator(PostingCursor c) : cursor_(std::move(c)) {}
  DocOrdinal doc() const override { return cursor_.doc(); }
  void next() override { cursor_.next(); }
  void advance(DocOrdinal t) override { cursor_.advance(t); }

 private:
  PostingCursor cursor_;
};

class RangeIterator final : public DocIterator {
 public:
  RangeIterator(DocOrdinal begin, DocOrdinal end) : cur_(begin), end_(end) { clamp(); }
  DocOrdinal doc() const override { return cur_; }
  void next() override {
    if (cur_ != kNoMoreDocs) ++cur_;
    clamp();
  }
  void advance(DocOrdinal t) override {
    if (cur_ != kNoMoreDocs && t > cur_) cur_ = t;
    clamp();
  }

 private:
  void clamp() {
    if (cur_ >= end_) cur_ = kNoMoreDocs;
  }
  DocOrdinal cur_;
  DocOrdinal end_;
};

class AndIterator final : public DocIterator {
 public:
  explicit AndIterator(std::vector<DocIteratorPtr> children) : children_(std::move(children)) { align(); }
  DocOrdinal doc() const override { return doc_; }
  void next() override {
    children_[0]->next();
    align();
  }
  void advance(DocOrdinal t) override {
    if (doc_ >= t) return;
    children_[0]->advance(t);
    align();
  }

 private:
  void align() {
    DocOrdinal target = children_[0]->doc();
    for (;;) {
      bool agreed = true;
      for (auto& c : children_) {
        if (target == kNoMoreDocs) break;
        c->advance(target);
        if (c->doc() != target) {
          target = c->doc();
          agreed = false;
        }
      }
      if (agreed || target == kNoMoreDocs) break;
    }
    doc_ = target;
  }
  std::vector<DocIteratorPtr> children_;
  DocOrdinal doc_ = kNoMoreDocs;
};

class OrIterator final : public DocIterator {
 public:
  explicit OrIterator(std::vector<DocIteratorPtr> children) : children_(std::move(children)) {
    for (std::size_t i = 0; i < children_.size(); ++i)
      if (children_[i]->doc() != kNoMoreDocs) heap_.push({children_[i]->doc(), i});
  }
  DocOrdinal doc() const override { return heap_.empty() ? kNoMoreDocs : heap_.top().first; }
  void next() override {
    if (heap_.empty()) return;
    const auto cur = heap_.top().first;
    while (!heap_.empty() && heap_.top().first == cur) step([&](DocIterator& c) { c.next(); });
  }
  void advance(DocOrdinal t) override {
    while (!heap_.empty() && heap_.top().first < t) step([&](DocIterator& c) { c.advance(t); });
  }

 private:
  using Entry = std::pair<DocOrdinal, std::size_t>;
  template <typename Move>
  void step(Move&& move) {
    auto i = heap_.top().second;
    heap_.pop();
    move(*children_[i]);
    if (children_[i]->doc() != kNoMoreDocs) heap_.push({children_[i]->doc(), i});
  }
  std::vector<DocIteratorPtr> children_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

// Documents where token i occurs at position p + i for some p.
class PhraseIterator final : public DocIterator {
 public:
  explicit PhraseIterator(std::vector<PostingCursor> cursors) : cursors_(std::move(cursors)) { settle(); }
  DocOrdinal doc() const override { return doc_; }
  void next() override {
    if (doc_ == kNoMoreDocs) return;
    cursors_[0].next();
    settle();
  }
  void advance(DocOrdinal t) override {
    if (doc_ >= t) return;
    cursors_[0].advance(t);
    settle();
  }

 private:
  void settle() {
    for (;;) {
      DocOrdinal target = cursors_[0].doc();
      bool agreed = false;
      while (!agreed && target != kNoMoreDocs) {
        agreed = true;
        for (auto& c : cursors_) {
          c.advance(target);
          if (c.doc() != target) {
            target = c.doc();
            agreed = false;
            break;
          }
        }
      }
      doc_ = target;
      if (doc_ == kNoMoreDocs || positions_match()) return;
      cursors_[0].next();
    }
  }

  bool positions_match() {
    const auto first = cursors_[0].positions();
    for (auto p : first) {
      bool ok = true;
      for (std::size_t i = 1; i < cursors_.size() && ok; ++i) {
        const auto& pos = cursors_[i].positions();
        ok = std::binary_search(pos.begin(), pos.end(), p + static_cast<std::uint32_t>(i));
      }
      if (ok) return true;
    }
    return false;
  }

  std::vector<PostingCursor> cursors_;
  DocOrdinal doc_ = kNoMoreDocs;
};

// nullptr means "matches nothing in this partition".
inline DocIteratorPtr build_iterator(const Query& q, const IndexReader& index) {
  switch (q.kind) {
    case Query::Kind::kTerm: {
      auto e = index.find(q.tokens[0]);
      if (!e) return nullptr;
      return std::make_unique<TermIterator>(index.postings(*e));
    }
    case Query::Kind::kPhrase: {
      std::vector<PostingCursor> cursors;
      for (const auto& t : q.tokens) {
        auto e = index.find(t);
        if (!e) return nullptr;
        cursors.push_back(index.postings(*e));
      }
      if (cursors.size() == 1) return std::make_unique<TermIterator>(std::move(cursors[0]));
      return std::make_unique<PhraseIterator>(std::move(cursors));
    }
    case Query::Kind::kTimeRange: {
      auto b = index.lower_bound(q.t0);
      auto e = index.upper_bound(q.t1);
      if (b >= e) return nullptr;
      return std::make_unique<RangeIterator>(b, e);
    }
    case Query::Kind::kAnd: {
      std::vector<DocIteratorPtr> kids;
      for (const auto& c : q.children) {
        auto it = build_iterator(c, index);
        if (!it) return nullptr;
        kids.push_back(std::move(it));
      }
      if (kids.size() == 1) return std::move(kids[0]);
      return std::make_unique<AndIterator>(std::move(kids));
    }
    case Query::Kind::kOr: {
      std::vector<DocIteratorPtr> kids;
      for (const auto& c : q.children)
        if (auto it = build_iterator(c, index)) kids.push_back(std::move(it));
      if (kids.empty()) return nullptr;
      if (kids.size() == 1) return std::move(kids[0]);
      return std::make_unique<OrIterator>(std::move(kids));
    }
  }
  return nullptr;
}

}  // namespace detail

// Builds (or rebuilds) indexes for the given partitions in parallel.
inline std::vector<IndexMeta> build_indexes(const ArchiveReader& archive, const std::vector<PartitionKey>& keys,
                                            const fs::path& index_root, unsigned threads = default_parallelism()) {
  std::vector<IndexMeta> metas(keys.size());
  fs::create_directories(index_root);
  parallel_for(keys.size(), [&](std::size_t i) { metas[i] = build_index(archive, keys[i], index_root); }, threads);
  return metas;
}

class Searcher {
 public:
  Searcher(fs::path archive_root, fs::path index_root, ArchiveBounds bounds = {})
      : archive_(std::move(archive_root), bounds), index_root_(std::move(index_root)) {}

  const ArchiveReader& archive() const { return archive_; }
  const fs::path& index_root() const { return index_root_; }

  // Stored partitions that can hold matches of q within scope, oldest first.
  // Throws NotIndexedError naming every such partition without a current index.
  std::vector<PartitionKey> partitions_in_scope(const Query& q, TimeBounds scope = {}) const {
    const auto qb = time_bounds(q);
    const TimeBounds eff{std::max(qb.lo, scope.lo), std::min(qb.hi, scope.hi)};
    if (eff.empty()) return {};
    std::vector<PartitionKey> keys;
    std::vector<std::string> offending;
    for (const auto& k : partitions_for_range(eff.lo, eff.hi, archive_.bounds())) {
      if (!archive_.has_partition(k)) continue;
      if (index_state(archive_, k, index_root_) != IndexState::kCurrent) offending.push_back(k.name());
      keys.push_back(k);
    }
    if (!offending.empty()) throw NotIndexedError(std::move(offending));
    return keys;
  }

  // Streams matches in (timestamp desc, id desc) order until fn returns false.
  void execute(const Query& q, TimeBounds scope, const std::function<bool(const SearchResult&)>& fn) const {
    auto keys = partitions_in_scope(q, scope);
    std::vector<DocOrdinal> matches;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
      auto index = open(*it);
      collect(q, scope, index, [&](DocOrdinal d) { matches.push_back(d); });
      for (auto m = matches.rbegin(); m != matches.rend(); ++m) {
        SearchResult r{std::to_string(index.doc_id(*m)), index.doc_timestamp(*m), std::string(index.doc_text(*m)), *it};
        if (!fn(r)) return;
      }
      matches.clear();
    }
  }

  std::vector<SearchResult> execute(const Query& q, TimeBounds scope = {},
                                    std::size_t limit = std::numeric_limits<std::size_t>::max()) const {
    std::vector<SearchResult> out;
    if (limit == 0) return out;
    execute(q, scope, [&](const SearchResult& r) {
      out.push_back(r);
      return out.size() < limit;
    });
    return out;
  }

  // Matches per bucket start; buckets without matches are absent.
  BucketCounts count(const Query& q, Granularity g, TimeBounds scope = {}) const {
    auto keys = partitions_in_scope(q, scope);
    std::vector<BucketCounts> partial(keys.size());
    parallel_for(keys.size(), [&](std::size_t i) {
      auto index = open(keys[i]);
      auto& counts = partial[i];
      EpochMs cur_begin = 0, cur_end = 0;
      std::uint64_t* slot = nullptr;
      collect(q, scope, index, [&](DocOrdinal d) {
        const auto ts = index.doc_timestamp(d);
        if (!slot || ts < cur_begin || ts >= cur_end) {
          cur_begin = bucket_start(ts, g);
          cur_end = next_bucket(cur_begin, g);
          slot = &counts[cur_begin];
        }
        ++*slot;
      });
    });
    BucketCounts total;
    for (const auto& p : partial)
      for (const auto& [k, v] : p) total[k] += v;
    return total;
  }

  // Visits every indexed partition in scope with its reader and the ordinal
  // interval covering the scope.
  void for_each_partition(TimeBounds scope,
                          const std::function<void(const PartitionKey&, const IndexReader&, DocOrdinal, DocOrdinal)>& fn,
                          unsigned threads = default_parallelism()) const {
    auto keys = partitions_in_scope(Query::match_all(), scope);
    parallel_for(keys.size(), [&](std::size_t i) {
      auto index = open(keys[i]);
      fn(keys[i], index, index.lower_bound(scope.lo), index.upper_bound(scope.hi));
    }, threads);
  }

  // Number of partition indexes opened since construction or the last reset.
  std::uint64_t partitions_opened() const { return opened_.load(); }
  void reset_counters() { opened_.store(0); }

 private:
  IndexReader open(const PartitionKey& key) const {
    ++opened_;
    return IndexReader(partition_index_dir(index_root_, key));
  }

  template <typename Fn>
  static void collect(const Query& q, TimeBounds scope, const IndexReader& index, Fn&& fn) {
    auto root = detail::build_iterator(q, index);
    if (!root) return;
    const auto lo = index.lower_bound(scope.lo);
    const auto hi = index.upper_bound(scope.hi);
    for (root->advance(lo); root->doc() < hi; root->next()) fn(root->doc());
  }

  ArchiveReader archive_;
  fs::path index_root_;
  mutable std::atomic<std::uint64_t> opened_{0};
};

}  // namespace tweetvault
