#pragma once

// Candidate tweet id generation: the historical id progressions, the
// exhaustive fallback range, closed-form counting, sharding and batching.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <iterator>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tweetvault {

using TweetId = std::uint64_t;

inline constexpr TweetId kMinTweetId = 1;
inline constexpr TweetId kMaxTweetId = 3061014649ULL;
// Last id of July 31, 2009.
inline constexpr TweetId kArchiveEndId = 3061013977ULL;
inline constexpr std::size_t kMaxBatchSize = 100;

// One `start:step:end` progression with Octave colon semantics (end inclusive
// only when it is reachable from start).
struct IdRange {
  TweetId start = 0;
  std::uint64_t step = 1;
  TweetId end = 0;

  std::uint64_t size() const { return (end - start) / step + 1; }
  TweetId last() const { return start + step * ((end - start) / step); }
  TweetId at(std::uint64_t k) const { return start + step * k; }

  friend bool operator==(const IdRange&, const IdRange&) = default;
};

enum class DedupPolicy {
  kEmitRaw,           // plain concatenation, boundary values may repeat
  kDedupBoundaries,   // drop a range's first id if it equals the previous last id
};

inline std::string to_string(DedupPolicy p) {
  return p == DedupPolicy::kEmitRaw ? "raw" : "dedup";
}

inline DedupPolicy parse_policy(std::string_view s) {
  if (s == "raw" || s == "emit-raw") return DedupPolicy::kEmitRaw;
  if (s == "dedup" || s == "dedup-boundaries") return DedupPolicy::kDedupBoundaries;
  throw std::invalid_argument("unknown dedup policy: " + std::string(s));
}

namespace detail {

inline constexpr std::array<IdRange, 88> kBuiltinRanges = {{
    {20, 1, 81803},
    {81803, 10, 5317478},
    {5317478, 1, 5951471},
    {5951471, 10, 33659941},
    {33659941, 1, 34051542},
    {34051542, 10, 749778882},
    {749778882, 1, 797700951},
    {797700951, 10, 798082536},
    {798082536, 1, 861278101},
    {861278101, 10, 861796399},
    {861796399, 1, 907582571},
    {907582571, 10, 907936108},
    {907936108, 10, 908894500},
    {908894500, 1, 920578209},
    {920578209, 10, 920903970},
    {920903970, 1, 948996649},
    {948996649, 10, 950233829},
    {950233829, 1, 957352345},
    {957352345, 10, 957603791},
    {957603791, 1, 989085799},
    {989085799, 10, 989696020},
    {989696020, 1, 1062054690},
    {1062054690, 10, 1062633411},
    {1062633411, 1, 1063043430},
    {1063043430, 10, 1067177961},
    {1067177961, 1, 1268484169},
    {1268484169, 10, 1268752486},
    {1268752486, 1, 1276604442},
    {1276604442, 10, 1278491542},
    {1278491542, 1, 1305643870},
    {1305643870, 10, 1308469567},
    {1308469567, 1, 1337207851},
    {1337207851, 10, 1337561777},
    {1337561777, 1, 1341303857},
    {1341303857, 10, 1341654616},
    {1341654616, 1, 1347134019},
    {1347134019, 10, 1347350683},
    {1347350683, 1, 1358197730},
    {1358197730, 10, 1358777850},
    {1358777850, 1, 1365719225},
    {1365719225, 10, 1365920715},
    {1365920715, 1, 1433622936},
    {1433622936, 10, 1434276794},
    {1434276794, 1, 1445739899},
    {1445739899, 10, 1445939272},
    {1445939272, 1, 1467920729},
    {1467920729, 10, 1469118986},
    {1469118986, 1, 1469829667},
    {1469829667, 10, 1470202281},
    {1470202281, 1, 1476157039},
    {1476157039, 10, 1477122821},
    {1477122821, 1, 1489587493},
    {1489587493, 10, 1490448333},
    {1490448333, 1, 1494130684},
    {1494130684, 10, 1496083713},
    {1496083713, 1, 1682400687},
    {1682400687, 10, 1690038860},
    {1690038860, 1, 1711490733},
    {1711490733, 10, 1711821385},
    {1711821385, 1, 1726965818},
    {1726965818, 10, 1727193439},
    {1727193439, 1, 1734319873},
    {1734319873, 10, 1735002265},
    {1735002265, 1, 1986606277},
    {1986606277, 10, 1986848681},
    {1986848681, 1, 2023225505},
    {2023225505, 10, 2023747452},
    {2023747452, 1, 2048511605},
    {2048511605, 10, 2051073819},
    {2051073819, 1, 2111076679},
    {2111076679, 10, 2113946682},
    {2113946682, 1, 2130679870},
    {2130679870, 10, 2136747540},
    {2136747540, 1, 2202236683},
    {2202236683, 10, 2202553995},
    {2202553995, 1, 2313545593},
    {2313545593, 10, 2322204712},
    {2322204712, 1, 2408271108},
    {2408271108, 10, 2416149025},
    {2416149025, 1, 2453681374},
    {2453681374, 10, 2458487491},
    {2458487491, 1, 2486851754},
    {2486851754, 10, 2490430312},
    {2490430312, 1, 2530881466},
    {2530881466, 10, 2548066056},
    {2548066056, 1, 2831755333},
    {2831755333, 10, 2851555775},
    {2851555775, 1, 3061014649},
}};

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument("bad " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// An ordered list of progressions. Construction validates that every range is
// well formed and that the concatenated output never goes backwards.
class RangeTable {
 public:
  RangeTable() = default;

  explicit RangeTable(std::vector<IdRange> ranges) : ranges_(std::move(ranges)) {
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
      const auto& r = ranges_[i];
      if (r.step == 0) throw std::invalid_argument("range " + std::to_string(i) + ": step must be positive");
      if (r.start < kMinTweetId || r.end > kMaxTweetId)
        throw std::invalid_argument("range " + std::to_string(i) + ": id outside [1, 3061014649]");
      if (r.start > r.end) throw std::invalid_argument("range " + std::to_string(i) + ": start > end");
      if (i > 0 && r.start < ranges_[i - 1].last())
        throw std::invalid_argument("range " + std::to_string(i) + ": overlaps previous range");
    }
  }

  static const RangeTable& builtin() {
    static const RangeTable table(
        std::vector<IdRange>(detail::kBuiltinRanges.begin(), detail::kBuiltinRanges.end()));
    return table;
  }

  // Accepts `start:end` or `start:step:end` per line; `#` starts a comment.
  static RangeTable parse(std::string_view text) {
    std::vector<IdRange> out;
    std::size_t lineno = 0;
    while (!text.empty()) {
      auto nl = text.find('\n');
      auto line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      std::vector<std::string_view> parts;
      std::size_t pos = 0;
      while (true) {
        auto c = line.find(':', pos);
        parts.push_back(detail::trim(line.substr(pos, c == std::string_view::npos ? c : c - pos)));
        if (c == std::string_view::npos) break;
        pos = c + 1;
      }
      try {
        if (parts.size() == 2) {
          out.push_back({detail::parse_u64(parts[0], "start"), 1, detail::parse_u64(parts[1], "end")});
        } else if (parts.size() == 3) {
          out.push_back({detail::parse_u64(parts[0], "start"), detail::parse_u64(parts[1], "step"),
                         detail::parse_u64(parts[2], "end")});
        } else {
          throw std::invalid_argument("expected start:end or start:step:end");
        }
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return RangeTable(std::move(out));
  }

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& r : ranges_) {
      if (r.step == 1) os << r.start << ':' << r.end << '\n';
      else os << r.start << ':' << r.step << ':' << r.end << '\n';
    }
    return os.str();
  }

  // True when each range starts exactly where the previous one ends.
  bool chained() const {
    for (std::size_t i = 1; i < ranges_.size(); ++i)
      if (ranges_[i].start != ranges_[i - 1].end) return false;
    return true;
  }

  const std::vector<IdRange>& ranges() const { return ranges_; }
  std::size_t size() const { return ranges_.size(); }
  bool empty() const { return ranges_.empty(); }
  const IdRange& operator[](std::size_t i) const { return ranges_[i]; }

 private:
  std::vector<IdRange> ranges_;
};

// A lazily evaluated, random-access sequence of candidate ids. Either backed by
// a range table (closed-form indexing, O(1) iteration memory) or by an explicit
// id list. Windows over the sequence are cheap copies sharing the source.
class IdStream {
  struct TableSource {
    std::shared_ptr<const RangeTable> table;
    std::vector<std::uint64_t> skip;    // 0 or 1 per range
    std::vector<std::uint64_t> prefix;  // stream index of each range's first emitted id
    std::uint64_t total = 0;
  };
  using ListSource = std::shared_ptr<const std::vector<TweetId>>;

 public:
  IdStream() : IdStream(std::make_shared<const std::vector<TweetId>>()) {}

  IdStream(const RangeTable& table, DedupPolicy policy) {
    TableSource src;
    src.table = std::make_shared<const RangeTable>(table);
    const auto& rs = src.table->ranges();
    src.skip.resize(rs.size());
    src.prefix.resize(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      src.skip[i] = (policy == DedupPolicy::kDedupBoundaries && i > 0 && rs[i].start == rs[i - 1].last()) ? 1 : 0;
      src.prefix[i] = src.total;
      src.total += rs[i].size() - src.skip[i];
    }
    end_ = src.total;
    source_ = std::move(src);
  }

  explicit IdStream(std::vector<TweetId> ids)
      : IdStream(std::make_shared<const std::vector<TweetId>>(std::move(ids))) {}

  std::uint64_t size() const { return end_ - begin_; }
  bool empty() const { return size() == 0; }

  TweetId at(std::uint64_t i) const {
    if (i >= size()) throw std::out_of_range("IdStream index out of range");
    return absolute(begin_ + i);
  }

  // Sub-window [offset, offset + count) of this stream.
  IdStream window(std::uint64_t offset, std::uint64_t count) const {
    if (offset > size() || count > size() - offset) throw std::out_of_range("IdStream window out of range");
    IdStream w = *this;
    w.begin_ = begin_ + offset;
    w.end_ = w.begin_ + count;
    return w;
  }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = TweetId;
    using difference_type = std::ptrdiff_t;
    using pointer = const TweetId*;
    using reference = TweetId;

    iterator() = default;
    TweetId operator*() const { return value_; }
    iterator& operator++() {
      ++pos_;
      if (pos_ >= end_) return *this;
      if (src_ == nullptr) {
        value_ = (*list_)[pos_];
      } else if (left_ > 1) {
        --left_;
        value_ += step_;
      } else {
        seek(range_ + 1);
      }
      return *this;
    }
    iterator operator++(int) {
      auto t = *this;
      ++*this;
      return t;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.pos_ == b.pos_; }

   private:
    friend class IdStream;

    // Positions at the first non-empty effective range at or after r that
    // contains pos_.
    void seek(std::size_t r) {
      const auto& rs = src_->table->ranges();
      while (r + 1 < rs.size() && src_->prefix[r + 1] <= pos_) ++r;
      range_ = r;
      const auto& range = rs[r];
      std::uint64_t k = src_->skip[r] + (pos_ - src_->prefix[r]);
      value_ = range.at(k);
      step_ = range.step;
      left_ = range.size() - k;
    }

    const TableSource* src_ = nullptr;
    const std::vector<TweetId>* list_ = nullptr;
    std::uint64_t pos_ = 0;
    std::uint64_t end_ = 0;
    std::size_t range_ = 0;
    std::uint64_t left_ = 0;
    std::uint64_t step_ = 1;
    TweetId value_ = 0;
  };

  iterator begin() const {
    iterator it;
    it.pos_ = begin_;
    it.end_ = end_;
    if (begin_ >= end_) return it;
    if (auto* t = std::get_if<TableSource>(&source_)) {
      it.src_ = t;
      auto r = static_cast<std::size_t>(
          std::upper_bound(t->prefix.begin(), t->prefix.end(), begin_) - t->prefix.begin() - 1);
      it.seek(r);
    } else {
      it.list_ = std::get<ListSource>(source_).get();
      it.value_ = (*it.list_)[begin_];
    }
    return it;
  }

  iterator end() const {
    iterator it;
    it.pos_ = end_;
    it.end_ = end_;
    return it;
  }

  // Offset of this window within its underlying source.
  std::uint64_t source_offset() const { return begin_; }

 private:
  explicit IdStream(ListSource list) : end_(list->size()), source_(std::move(list)) {}

  TweetId absolute(std::uint64_t i) const {
    if (auto* t = std::get_if<TableSource>(&source_)) {
      auto r = static_cast<std::size_t>(
          std::upper_bound(t->prefix.begin(), t->prefix.end(), i) - t->prefix.begin() - 1);
      // Skip empty effective ranges sharing the same prefix.
      while (r + 1 < t->prefix.size() && t->prefix[r + 1] <= i) ++r;
      return t->table->ranges()[r].at(t->skip[r] + (i - t->prefix[r]));
    }
    return (*std::get<ListSource>(source_))[i];
  }

  std::uint64_t begin_ = 0;
  std::uint64_t end_ = 0;
  std::variant<ListSource, TableSource> source_;
};

inline IdStream enumerate(const RangeTable& table, DedupPolicy policy = DedupPolicy::kDedupBoundaries) {
  return IdStream(table, policy);
}

// Closed form: sum of progression lengths minus suppressed boundary duplicates.
inline std::uint64_t count(const RangeTable& table, DedupPolicy policy = DedupPolicy::kDedupBoundaries) {
  std::uint64_t total = 0;
  const auto& rs = table.ranges();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    total += rs[i].size();
    if (policy == DedupPolicy::kDedupBoundaries && i > 0 && rs[i].start == rs[i - 1].last()) --total;
  }
  return total;
}

// Every integer in [start, end].
inline IdStream enumerate_full(TweetId start, TweetId end) {
  if (start > end) throw std::invalid_argument("enumerate_full: start > end");
  return IdStream(RangeTable({IdRange{start, 1, end}}), DedupPolicy::kEmitRaw);
}

// Contiguous blocks whose sizes differ by at most one; earlier shards get the
// extra element.
inline std::vector<IdStream> shard(const IdStream& stream, std::size_t n_workers) {
  if (n_workers == 0) throw std::invalid_argument("shard: n_workers must be >= 1");
  std::vector<IdStream> out;
  out.reserve(n_workers);
  const std::uint64_t n = stream.size();
  const std::uint64_t base = n / n_workers;
  const std::uint64_t extra = n % n_workers;
  std::uint64_t offset = 0;
  for (std::size_t k = 0; k < n_workers; ++k) {
    std::uint64_t len = base + (k < extra ? 1 : 0);
    out.push_back(stream.window(offset, len));
    offset += len;
  }
  return out;
}

// Fixed-size batches over a stream; all full except possibly the last.
class Batches {
 public:
  Batches(IdStream stream, std::size_t size) : stream_(std::move(stream)), size_(size) {
    if (size < 1 || size > kMaxBatchSize)
      throw std::invalid_argument("batch size must be in [1, 100], got " + std::to_string(size));
  }

  std::uint64_t count() const { return (stream_.size() + size_ - 1) / size_; }
  std::size_t batch_size() const { return size_; }

  std::vector<TweetId> at(std::uint64_t k) const {
    if (k >= count()) throw std::out_of_range("batch index out of range");
    auto w = stream_.window(k * size_, std::min<std::uint64_t>(size_, stream_.size() - k * size_));
    return {w.begin(), w.end()};
  }

  const IdStream& stream() const { return stream_; }

 private:
  IdStream stream_;
  std::size_t size_;
};

inline Batches batch(IdStream stream, std::size_t size = kMaxBatchSize) {
  return Batches(std::move(stream), size);
}

}  // namespace tweetvault
