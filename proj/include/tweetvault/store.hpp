#pragma once

// Append-only, time-partitioned archive of dehydrated tweets.
//
//   <archive>/<partition>/segment-NNNNNN.ndjson.gz
//   <archive>/<partition>/manifest.txt     seq count min_ts max_ts
//
// Segments are immutable once listed in the manifest. A segment file that is
// not in the manifest (interrupted flush) is ignored and later overwritten.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tweetvault/io.hpp"
#include "tweetvault/partition.hpp"
#include "tweetvault/tweet.hpp"

namespace tweetvault {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SegmentMeta {
  PartitionKey partition = PartitionKey::quarantine();
  std::uint64_t seq = 0;
  std::uint64_t record_count = 0;
  EpochMs min_ts = 0;
  EpochMs max_ts = 0;
  fs::path path;
};

inline constexpr std::uint64_t kSegmentRollRecords = 1'000'000;
inline constexpr std::uint64_t kSegmentRollBytes = 256ULL << 20;
inline constexpr const char* kManifestName = "manifest.txt";

inline fs::path segment_path(const fs::path& partition_dir, std::uint64_t seq) {
  char name[32];
  std::snprintf(name, sizeof name, "segment-%06llu.ndjson.gz", static_cast<unsigned long long>(seq));
  return partition_dir / name;
}

inline std::vector<SegmentMeta> read_manifest(const fs::path& partition_dir, const PartitionKey& key) {
  std::vector<SegmentMeta> out;
  const auto path = partition_dir / kManifestName;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SegmentMeta m;
    m.partition = key;
    if (!(ls >> m.seq >> m.record_count >> m.min_ts >> m.max_ts))
      throw StoreError("corrupt manifest " + path.string() + ": '" + line + "'");
    m.path = segment_path(partition_dir, m.seq);
    out.push_back(std::move(m));
  }
  return out;
}

inline void write_manifest(const fs::path& partition_dir, const std::vector<SegmentMeta>& segments) {
  std::ostringstream os;
  os << "# seq count min_ts max_ts\n";
  for (const auto& s : segments) os << s.seq << ' ' << s.record_count << ' ' << s.min_ts << ' ' << s.max_ts << '\n';
  write_file_atomic(partition_dir / kManifestName, os.str());
}

// Routes records to their partition and writes them to per-partition open
// segments. Not thread-safe: one writer per archive at a time.
class ArchiveWriter {
 public:
  explicit ArchiveWriter(fs::path root, ArchiveBounds bounds = {}, std::uint64_t roll_records = kSegmentRollRecords,
                         std::uint64_t roll_bytes = kSegmentRollBytes)
      : root_(std::move(root)), bounds_(bounds), roll_records_(roll_records), roll_bytes_(roll_bytes) {
    bounds_.validate();
    fs::create_directories(root_);
  }

  ~ArchiveWriter() = default;  // unflushed records are discarded

  PartitionKey append(const DehydratedTweet& record) {
    auto key = partition_key(record.timestamp, bounds_);
    if (key.is_quarantine()) ++quarantined_;
    auto& open = open_segment(key);
    open.writer->write_line(to_json_line(record));
    ++open.meta.record_count;
    open.meta.min_ts = std::min(open.meta.min_ts, record.timestamp);
    open.meta.max_ts = std::max(open.meta.max_ts, record.timestamp);
    if (open.meta.record_count >= roll_records_ || open.writer->bytes() >= roll_bytes_) {
      auto meta = commit(key);
      flushed_.push_back(meta);
    }
    return key;
  }

  // Makes every buffered record readable; returns the segments created since
  // the previous flush.
  std::vector<SegmentMeta> flush() {
    while (!open_.empty()) flushed_.push_back(commit(open_.begin()->first));
    return std::exchange(flushed_, {});
  }

  std::uint64_t quarantined() const { return quarantined_; }
  const fs::path& root() const { return root_; }

 private:
  struct OpenSegment {
    SegmentMeta meta;
    std::unique_ptr<GzipFileWriter> writer;
  };

  OpenSegment& open_segment(const PartitionKey& key) {
    auto it = open_.find(key);
    if (it != open_.end()) return it->second;
    const auto dir = root_ / key.name();
    fs::create_directories(dir);
    auto& segs = manifest(key);
    OpenSegment seg;
    seg.meta.partition = key;
    seg.meta.seq = segs.empty() ? 0 : segs.back().seq + 1;
    seg.meta.min_ts = std::numeric_limits<EpochMs>::max();
    seg.meta.max_ts = std::numeric_limits<EpochMs>::min();
    seg.meta.path = segment_path(dir, seg.meta.seq);
    seg.writer = std::make_unique<GzipFileWriter>(seg.meta.path);
    return open_.emplace(key, std::move(seg)).first->second;
  }

  std::vector<SegmentMeta>& manifest(const PartitionKey& key) {
    auto it = manifests_.find(key);
    if (it == manifests_.end()) it = manifests_.emplace(key, read_manifest(root_ / key.name(), key)).first;
    return it->second;
  }

  SegmentMeta commit(const PartitionKey& key) {
    auto node = open_.extract(key);
    auto& seg = node.mapped();
    seg.writer->commit();
    auto& segs = manifest(key);
    segs.push_back(seg.meta);
    write_manifest(root_ / key.name(), segs);
    return seg.meta;
  }

  fs::path root_;
  ArchiveBounds bounds_;
  std::uint64_t roll_records_;
  std::uint64_t roll_bytes_;
  std::map<PartitionKey, OpenSegment> open_;
  std::map<PartitionKey, std::vector<SegmentMeta>> manifests_;
  std::vector<SegmentMeta> flushed_;
  std::uint64_t quarantined_ = 0;
};

using RecordCallback = std::function<void(const DehydratedTweet&)>;

struct PartitionStats {
  PartitionKey key = PartitionKey::quarantine();
  std::uint64_t segments = 0;
  std::uint64_t records = 0;
  EpochMs min_ts = 0;
  EpochMs max_ts = 0;
};

class ArchiveReader {
 public:
  explicit ArchiveReader(fs::path root, ArchiveBounds bounds = {}) : root_(std::move(root)), bounds_(bounds) {
    if (!fs::is_directory(root_)) throw StoreError("no archive at " + root_.string());
  }

  const fs::path& root() const { return root_; }
  const ArchiveBounds& bounds() const { return bounds_; }

  // Partitions that have a manifest, in time order (quarantine last).
  std::vector<PartitionKey> partitions() const {
    std::vector<PartitionKey> keys;
    for (const auto& e : fs::directory_iterator(root_)) {
      if (!e.is_directory()) continue;
      auto key = PartitionKey::parse(e.path().filename().string());
      if (key && fs::exists(e.path() / kManifestName)) keys.push_back(*key);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  bool has_partition(const PartitionKey& key) const { return fs::exists(root_ / key.name() / kManifestName); }

  std::vector<SegmentMeta> segments(const PartitionKey& key) const { return read_manifest(root_ / key.name(), key); }

  // Records of one segment in insertion order, with their stored line.
  void read_segment(const SegmentMeta& seg,
                    const std::function<void(const DehydratedTweet&, std::string_view line)>& fn) const {
    std::uint64_t n = 0;
    try {
      GzipLineReader reader(seg.path);
      std::string line;
      while (reader.next(line)) {
        auto rec = from_json_line(line);
        if (partition_key(rec.timestamp, bounds_) != seg.partition)
          throw StoreError("record " + rec.id_str + " does not belong to partition " + seg.partition.name());
        ++n;
        fn(rec, line);
      }
    } catch (const IoError& e) {
      throw StoreError("corrupt segment " + seg.path.string() + ": " + e.what());
    } catch (const RecordError& e) {
      throw StoreError("corrupt segment " + seg.path.string() + ": " + e.what());
    } catch (const StoreError& e) {
      throw StoreError("corrupt segment " + seg.path.string() + ": " + e.what());
    }
    if (n != seg.record_count)
      throw StoreError("corrupt segment " + seg.path.string() + ": expected " + std::to_string(seg.record_count) +
                       " records, found " + std::to_string(n));
  }

  // Every record of a partition, ordered by (timestamp, id).
  std::vector<DehydratedTweet> load_partition(const PartitionKey& key) const {
    std::vector<std::pair<TweetId, DehydratedTweet>> recs;
    for (const auto& seg : segments(key))
      read_segment(seg, [&](const DehydratedTweet& r, std::string_view) { recs.emplace_back(r.id(), r); });
    std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
      return a.second.timestamp != b.second.timestamp ? a.second.timestamp < b.second.timestamp : a.first < b.first;
    });
    std::vector<DehydratedTweet> out;
    out.reserve(recs.size());
    for (auto& r : recs) out.push_back(std::move(r.second));
    return out;
  }

  void scan(const PartitionKey& key, const RecordCallback& fn) const {
    if (!has_partition(key)) throw StoreError("no partition " + key.name());
    for (const auto& r : load_partition(key)) fn(r);
  }

  // All partitions in time order. With `errors`, a corrupt segment's partition
  // is skipped and the message recorded instead of aborting the scan.
  void scan_all(const RecordCallback& fn, std::vector<std::string>* errors = nullptr) const {
    for (const auto& key : partitions()) {
      std::vector<DehydratedTweet> recs;
      try {
        recs = load_partition(key);
      } catch (const StoreError& e) {
        if (!errors) throw;
        errors->push_back(e.what());
        continue;
      }
      for (const auto& r : recs) fn(r);
    }
  }

  std::vector<PartitionStats> stats() const {
    std::vector<PartitionStats> out;
    for (const auto& key : partitions()) {
      PartitionStats s;
      s.key = key;
      s.min_ts = std::numeric_limits<EpochMs>::max();
      s.max_ts = std::numeric_limits<EpochMs>::min();
      for (const auto& seg : segments(key)) {
        ++s.segments;
        s.records += seg.record_count;
        s.min_ts = std::min(s.min_ts, seg.min_ts);
        s.max_ts = std::max(s.max_ts, seg.max_ts);
      }
      out.push_back(s);
    }
    return out;
  }

  std::uint64_t record_count(const PartitionKey& key) const {
    std::uint64_t n = 0;
    for (const auto& seg : segments(key)) n += seg.record_count;
    return n;
  }

 private:
  fs::path root_;
  ArchiveBounds bounds_;
};

struct IngestStats {
  std::uint64_t read = 0;
  std::uint64_t stored = 0;
  std::uint64_t rejected = 0;
  std::uint64_t quarantined = 0;
  std::vector<SegmentMeta> segments;
};

// Loads every `*.ndjson.gz` file of dehydrated records in `in_dir`.
inline IngestStats ingest_directory(const fs::path& in_dir, ArchiveWriter& writer) {
  IngestStats stats;
  std::string line;
  for (const auto& in : list_files(in_dir, ".ndjson.gz")) {
    GzipLineReader reader(in);
    while (reader.next(line)) {
      if (line.empty()) continue;
      ++stats.read;
      try {
        auto rec = from_json_line(line);
        rec.id();
        writer.append(rec);
        ++stats.stored;
      } catch (const RecordError&) {
        ++stats.rejected;
      } catch (const std::logic_error&) {
        ++stats.rejected;
      }
    }
  }
  stats.segments = writer.flush();
  stats.quarantined = writer.quarantined();
  return stats;
}

}  // namespace tweetvault
