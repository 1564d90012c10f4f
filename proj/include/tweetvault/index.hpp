#pragma once

// Per-partition positional inverted index.
//
// Documents are numbered by their (timestamp, id) order inside the partition,
// so a time range is a contiguous ordinal interval. Files, all little-endian:
//
//   docs.bin      n x {u64 id, i64 timestamp}
//   textoff.bin   (n + 1) x u64 offsets into text.bin
//   text.bin      concatenated UTF-8 texts
//   terms.bin     concatenated term strings, sorted bytewise
//   termidx.bin   T x {u64 str_off, u32 str_len, u32 doc_freq, u64 post_off, u64 post_len}
//   postings.bin  per term, per doc: varint doc_delta, varint npos, npos x varint pos_delta
//   meta.json     counts plus the archive manifest fingerprint the index was built from
//
// Readers mmap the files and decode postings lazily.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "tweetvault/io.hpp"
#include "tweetvault/partition.hpp"
#include "tweetvault/store.hpp"
#include "tweetvault/tokenizer.hpp"

namespace tweetvault {

using DocOrdinal = std::uint32_t;
inline constexpr DocOrdinal kNoMoreDocs = std::numeric_limits<DocOrdinal>::max();
inline constexpr int kIndexFormat = 1;

class NotIndexedError : public std::runtime_error {
 public:
  explicit NotIndexedError(std::vector<std::string> partitions)
      : std::runtime_error("partitions not indexed: " + join(partitions)), partitions_(std::move(partitions)) {}
  const std::vector<std::string>& partitions() const { return partitions_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& p : v) s += (s.empty() ? "" : ", ") + p;
    return s;
  }
  std::vector<std::string> partitions_;
};

class IndexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

inline std::uint64_t get_varint(const std::uint8_t*& p, const std::uint8_t* end) {
  std::uint64_t v = 0;
  int shift = 0;
  while (p < end) {
    const std::uint8_t b = *p++;
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if (!(b & 0x80)) return v;
    shift += 7;
    if (shift > 63) break;
  }
  throw IndexError("corrupt varint in postings");
}

template <typename T>
void put_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_raw(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace detail

struct TermEntry {
  std::uint64_t str_off;
  std::uint32_t str_len;
  std::uint32_t doc_freq;
  std::uint64_t post_off;
  std::uint64_t post_len;
};
static_assert(sizeof(TermEntry) == 32);

struct IndexMeta {
  std::string partition;
  std::uint64_t docs = 0;
  std::uint64_t terms = 0;
  std::uint64_t source_records = 0;
  std::uint64_t source_segments = 0;

  json to_json() const {
    return {{"format", kIndexFormat},
            {"partition", partition},
            {"docs", docs},
            {"terms", terms},
            {"source_records", source_records},
            {"source_segments", source_segments}};
  }
  static IndexMeta from_json(const json& j) {
    if (j.at("format").get<int>() != kIndexFormat) throw IndexError("unsupported index format");
    return {j.at("partition"), j.at("docs"), j.at("terms"), j.at("source_records"), j.at("source_segments")};
  }
};

inline fs::path partition_index_dir(const fs::path& index_root, const PartitionKey& key) {
  return index_root / key.name();
}

// Builds the index of one partition into a staging directory and swaps it in.
// Output is a deterministic function of the partition contents.
inline IndexMeta build_index(const ArchiveReader& archive, const PartitionKey& key, const fs::path& index_root) {
  if (key.is_quarantine()) throw IndexError("the quarantine partition is not indexed");
  const auto segments = archive.segments(key);
  const auto docs = archive.load_partition(key);
  if (docs.size() >= kNoMoreDocs) throw IndexError("partition too large: " + key.name());

  std::string docs_bin, textoff_bin, text_bin;
  docs_bin.reserve(docs.size() * 16);
  std::unordered_map<std::string, std::uint32_t> term_ids;
  struct Acc {
    std::string postings;
    std::uint32_t doc_freq = 0;
    DocOrdinal last_doc = 0;
  };
  std::vector<Acc> accs;
  std::vector<std::string> term_strings;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> doc_positions;
  std::vector<std::uint32_t> doc_terms;

  for (DocOrdinal ord = 0; ord < docs.size(); ++ord) {
    const auto& d = docs[ord];
    detail::put_raw<std::uint64_t>(docs_bin, d.id());
    detail::put_raw<std::int64_t>(docs_bin, d.timestamp);
    detail::put_raw<std::uint64_t>(textoff_bin, text_bin.size());
    text_bin += d.text;

    doc_positions.clear();
    doc_terms.clear();
    for_each_token(d.text, [&](std::string_view tok, std::uint32_t pos) {
      auto [it, inserted] = term_ids.try_emplace(std::string(tok), static_cast<std::uint32_t>(accs.size()));
      if (inserted) {
        accs.emplace_back();
        term_strings.emplace_back(tok);
      }
      auto& positions = doc_positions[it->second];
      if (positions.empty()) doc_terms.push_back(it->second);
      positions.push_back(pos);
    });
    for (auto tid : doc_terms) {
      auto& acc = accs[tid];
      const auto& positions = doc_positions[tid];
      detail::put_varint(acc.postings, acc.doc_freq == 0 ? ord : ord - acc.last_doc);
      detail::put_varint(acc.postings, positions.size());
      std::uint32_t prev = 0;
      for (auto p : positions) {
        detail::put_varint(acc.postings, p - prev);
        prev = p;
      }
      acc.last_doc = ord;
      ++acc.doc_freq;
    }
  }
  detail::put_raw<std::uint64_t>(textoff_bin, text_bin.size());

  std::vector<std::uint32_t> order(accs.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return term_strings[a] < term_strings[b]; });

  std::string terms_bin, termidx_bin, postings_bin;
  for (auto tid : order) {
    TermEntry e{terms_bin.size(), static_cast<std::uint32_t>(term_strings[tid].size()), accs[tid].doc_freq,
                postings_bin.size(), accs[tid].postings.size()};
    terms_bin += term_strings[tid];
    postings_bin += accs[tid].postings;
    detail::put_raw(termidx_bin, e);
  }

  IndexMeta meta;
  meta.partition = key.name();
  meta.docs = docs.size();
  meta.terms = accs.size();
  meta.source_records = 0;
  for (const auto& s : segments) meta.source_records += s.record_count;
  meta.source_segments = segments.size();

  fs::create_directories(index_root);
  const auto final_dir = partition_index_dir(index_root, key);
  const auto staging = index_root / ("." + key.name() + ".staging");
  const auto retired = index_root / ("." + key.name() + ".retired");
  fs::remove_all(staging);
  fs::create_directories(staging);
  write_file_atomic(staging / "docs.bin", docs_bin);
  write_file_atomic(staging / "textoff.bin", textoff_bin);
  write_file_atomic(staging / "text.bin", text_bin);
  write_file_atomic(staging / "terms.bin", terms_bin);
  write_file_atomic(staging / "termidx.bin", termidx_bin);
  write_file_atomic(staging / "postings.bin", postings_bin);
  write_file_atomic(staging / "meta.json", meta.to_json().dump(2) + "\n");
  fs::remove_all(retired);
  if (fs::exists(final_dir)) fs::rename(final_dir, retired);
  fs::rename(staging, final_dir);
  fs::remove_all(retired);
  fsync_path(index_root);
  return meta;
}

// Read-only memory mapping of a whole file.
class MappedFile {
 public:
  MappedFile() = default;
  explicit MappedFile(const fs::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw IndexError("cannot open " + path.string());
    struct stat st{};
    if (::fstat(fd, &st) != 0) {
      ::close(fd);
      throw IndexError("cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* p = ::mmap(nullptr, size_, PROT_READ, MAP_SHARED, fd, 0);
      if (p == MAP_FAILED) {
        ::close(fd);
        throw IndexError("cannot mmap " + path.string());
      }
      data_ = static_cast<const std::uint8_t*>(p);
    }
    ::close(fd);
  }
  ~MappedFile() { reset(); }
  MappedFile(MappedFile&& o) noexcept : data_(std::exchange(o.data_, nullptr)), size_(std::exchange(o.size_, 0)) {}
  MappedFile& operator=(MappedFile&& o) noexcept {
    if (this != &o) {
      reset();
      data_ = std::exchange(o.data_, nullptr);
      size_ = std::exchange(o.size_, 0);
    }
    return *this;
  }
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  const std::uint8_t* data() const { return data_; }
  std::size_t size() const { return size_; }

 private:
  void reset() {
    if (data_) ::munmap(const_cast<std::uint8_t*>(data_), size_);
    data_ = nullptr;
    size_ = 0;
  }
  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
};

// Forward cursor over one term's postings.
class PostingCursor {
 public:
  PostingCursor() = default;
  PostingCursor(const std::uint8_t* begin, const std::uint8_t* end) : p_(begin), end_(end) { next(); }

  DocOrdinal doc() const { return doc_; }

  void next() {
    skip_positions();
    if (p_ >= end_) {
      doc_ = kNoMoreDocs;
      return;
    }
    const auto delta = static_cast<DocOrdinal>(detail::get_varint(p_, end_));
    doc_ = started_ ? doc_ + delta : delta;
    started_ = true;
    npos_ = static_cast<std::uint32_t>(detail::get_varint(p_, end_));
    positions_begin_ = p_;
    positions_read_ = false;
  }

  void advance(DocOrdinal target) {
    while (doc_ < target) next();
  }

  // Positions of the current document.
  const std::vector<std::uint32_t>& positions() {
    if (!positions_read_) {
      positions_.clear();
      const std::uint8_t* q = positions_begin_;
      std::uint32_t pos = 0;
      for (std::uint32_t i = 0; i < npos_; ++i) {
        pos += static_cast<std::uint32_t>(detail::get_varint(q, end_));
        positions_.push_back(pos);
      }
      p_ = q;
      positions_read_ = true;
    }
    return positions_;
  }

 private:
  void skip_positions() {
    if (!started_ || positions_read_) return;
    for (std::uint32_t i = 0; i < npos_; ++i) detail::get_varint(p_, end_);
  }

  const std::uint8_t* p_ = nullptr;
  const std::uint8_t* end_ = nullptr;
  const std::uint8_t* positions_begin_ = nullptr;
  DocOrdinal doc_ = kNoMoreDocs;
  std::uint32_t npos_ = 0;
  bool started_ = false;
  bool positions_read_ = false;
  std::vector<std::uint32_t> positions_;
};

class IndexReader {
 public:
  explicit IndexReader(const fs::path& dir) : dir_(dir) {
    if (!fs::exists(dir / "meta.json")) throw IndexError("no index at " + dir.string());
    meta_ = IndexMeta::from_json(json::parse(read_file(dir / "meta.json")));
    docs_ = MappedFile(dir / "docs.bin");
    textoff_ = MappedFile(dir / "textoff.bin");
    text_ = MappedFile(dir / "text.bin");
    terms_ = MappedFile(dir / "terms.bin");
    termidx_ = MappedFile(dir / "termidx.bin");
    postings_ = MappedFile(dir / "postings.bin");
    if (docs_.size() != meta_.docs * 16 || textoff_.size() != (meta_.docs + 1) * 8 ||
        termidx_.size() != meta_.terms * sizeof(TermEntry))
      throw IndexError("index files inconsistent with meta.json in " + dir.string());
  }

  const IndexMeta& meta() const { return meta_; }
  DocOrdinal doc_count() const { return static_cast<DocOrdinal>(meta_.docs); }
  std::size_t term_count() const { return meta_.terms; }

  TweetId doc_id(DocOrdinal d) const { return detail::get_raw<std::uint64_t>(docs_.data() + d * 16ULL); }
  EpochMs doc_timestamp(DocOrdinal d) const { return detail::get_raw<std::int64_t>(docs_.data() + d * 16ULL + 8); }
  std::string_view doc_text(DocOrdinal d) const {
    auto b = detail::get_raw<std::uint64_t>(textoff_.data() + d * 8ULL);
    auto e = detail::get_raw<std::uint64_t>(textoff_.data() + (d + 1) * 8ULL);
    return {reinterpret_cast<const char*>(text_.data()) + b, e - b};
  }

  // First ordinal whose timestamp is >= ts.
  DocOrdinal lower_bound(EpochMs ts) const {
    DocOrdinal lo = 0, hi = doc_count();
    while (lo < hi) {
      DocOrdinal mid = lo + (hi - lo) / 2;
      if (doc_timestamp(mid) < ts) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  }
  // First ordinal whose timestamp is > ts.
  DocOrdinal upper_bound(EpochMs ts) const {
    DocOrdinal lo = 0, hi = doc_count();
    while (lo < hi) {
      DocOrdinal mid = lo + (hi - lo) / 2;
      if (doc_timestamp(mid) <= ts) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  }

  TermEntry term_entry(std::size_t i) const {
    return detail::get_raw<TermEntry>(termidx_.data() + i * sizeof(TermEntry));
  }
  std::string_view term_string(const TermEntry& e) const {
    return {reinterpret_cast<const char*>(terms_.data()) + e.str_off, e.str_len};
  }

  std::optional<TermEntry> find(std::string_view term) const {
    std::size_t lo = 0, hi = term_count();
    while (lo < hi) {
      std::size_t mid = lo + (hi - lo) / 2;
      auto e = term_entry(mid);
      auto s = term_string(e);
      if (s < term) lo = mid + 1;
      else if (term < s) hi = mid;
      else return e;
    }
    return std::nullopt;
  }

  PostingCursor postings(const TermEntry& e) const {
    if (e.post_off + e.post_len > postings_.size()) throw IndexError("postings out of bounds in " + dir_.string());
    return PostingCursor(postings_.data() + e.post_off, postings_.data() + e.post_off + e.post_len);
  }

 private:
  fs::path dir_;
  IndexMeta meta_;
  MappedFile docs_, textoff_, text_, terms_, termidx_, postings_;
};

enum class IndexState { kMissing, kStale, kCurrent };

// Whether the partition's index exists and was built from the archive's
// current manifest.
inline IndexState index_state(const ArchiveReader& archive, const PartitionKey& key, const fs::path& index_root) {
  const auto meta_path = partition_index_dir(index_root, key) / "meta.json";
  if (!fs::exists(meta_path)) return IndexState::kMissing;
  IndexMeta meta;
  try {
    meta = IndexMeta::from_json(json::parse(read_file(meta_path)));
  } catch (const std::exception&) {
    return IndexState::kStale;
  }
  const auto segs = archive.segments(key);
  std::uint64_t records = 0;
  for (const auto& s : segs) records += s.record_count;
  return meta.source_records == records && meta.source_segments == segs.size() ? IndexState::kCurrent
                                                                              : IndexState::kStale;
}

}  // namespace tweetvault
