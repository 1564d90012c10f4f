#pragma once

// Rate-limited, resumable bulk collection through a lookup endpoint.
//
// Each worker owns one credential, one limiter, one checkpoint and one sink.
// Progress is committed one batch at a time: the sink is made durable first,
// then the checkpoint (which records the sink's durable size) is atomically
// replaced. On restart the sink is truncated back to the checkpointed size, so
// a crash anywhere costs at most one re-requested batch and never duplicates
// output.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <unistd.h>

#include "tweetvault/clock.hpp"
#include "tweetvault/ids.hpp"
#include "tweetvault/io.hpp"
#include "tweetvault/lookup.hpp"
#include "tweetvault/tweet.hpp"

namespace tweetvault {

struct Credential {
  std::string token;
  double min_interval = 5.0;  // seconds between request starts
};

struct FoundRecord {
  TweetId id = 0;
  std::string json;  // serialized tweet object, one line
};

struct LookupResponse {
  enum class Status { kOk, kThrottled, kTransportError, kRejected };
  Status status = Status::kOk;
  std::vector<FoundRecord> records;
  int retry_after_seconds = 0;
  std::string error;
};

class LookupClient {
 public:
  virtual ~LookupClient() = default;
  virtual LookupResponse lookup(std::span<const TweetId> ids, const std::string& token) = 0;
};

// Calls a LookupService directly, stamping requests with the caller's clock.
class InProcessLookupClient final : public LookupClient {
 public:
  InProcessLookupClient(LookupService& service, Clock& clock) : service_(service), clock_(clock) {}

  LookupResponse lookup(std::span<const TweetId> ids, const std::string& token) override {
    LookupResponse r;
    try {
      for (const auto& t : service_.lookup(ids, token, clock_.now_ms()))
        r.records.push_back({t.id, to_json(t).dump()});
    } catch (const LookupRejected& e) {
      r.status = e.kind() == LookupRejected::Kind::kThrottled ? LookupResponse::Status::kThrottled
                                                              : LookupResponse::Status::kRejected;
      r.retry_after_seconds = e.retry_after_seconds();
      r.error = e.what();
    }
    return r;
  }

 private:
  LookupService& service_;
  Clock& clock_;
};

struct SinkState {
  std::uint64_t file_seq = 0;
  std::uint64_t file_bytes = 0;
  std::uint64_t file_records = 0;
  std::uint64_t missing_bytes = 0;
  friend bool operator==(const SinkState&, const SinkState&) = default;
};

class Sink {
 public:
  virtual ~Sink() = default;
  // Must be durable when it returns.
  virtual void append(std::span<const FoundRecord> found, std::span<const TweetId> missing) = 0;
  virtual SinkState state() const = 0;
  // Discards anything written after `s`.
  virtual void restore(const SinkState& s) = 0;
};

inline constexpr std::uint64_t kRollRecords = 5'000'000;

// Append-only `<prefix>-NNNNNN.ndjson.gz` files, one gzip member per batch,
// rolled every `roll_records` records. Optionally logs missing ids to
// `<prefix>.missing.txt`.
class RollingGzipSink final : public Sink {
 public:
  RollingGzipSink(fs::path dir, std::string prefix, std::uint64_t roll_records = kRollRecords,
                  bool log_missing = false)
      : dir_(std::move(dir)), prefix_(std::move(prefix)), roll_(roll_records), log_missing_(log_missing) {
    if (roll_ == 0) throw std::invalid_argument("roll_records must be positive");
    fs::create_directories(dir_);
  }

  fs::path file_path(std::uint64_t seq) const {
    char name[32];
    std::snprintf(name, sizeof name, "-%06llu.ndjson.gz", static_cast<unsigned long long>(seq));
    return dir_ / (prefix_ + name);
  }
  fs::path missing_path() const { return dir_ / (prefix_ + ".missing.txt"); }

  void append(std::span<const FoundRecord> found, std::span<const TweetId> missing) override {
    std::size_t i = 0;
    while (i < found.size()) {
      if (state_.file_records == roll_) {
        ++state_.file_seq;
        state_.file_bytes = 0;
        state_.file_records = 0;
      }
      const std::size_t take = std::min<std::size_t>(found.size() - i, roll_ - state_.file_records);
      std::string lines;
      for (std::size_t k = i; k < i + take; ++k) {
        lines += found[k].json;
        lines += '\n';
      }
      state_.file_bytes += append_bytes(file_path(state_.file_seq), gzip_compress(lines));
      state_.file_records += take;
      i += take;
    }
    if (log_missing_ && !missing.empty()) {
      std::string lines;
      for (auto id : missing) lines += std::to_string(id) + '\n';
      state_.missing_bytes += append_bytes(missing_path(), lines);
    }
  }

  SinkState state() const override { return state_; }

  void restore(const SinkState& s) override {
    for (std::uint64_t seq = s.file_seq;; ++seq) {
      auto p = file_path(seq);
      if (!fs::exists(p)) break;
      if (seq == s.file_seq) fs::resize_file(p, s.file_bytes);
      else fs::remove(p);
    }
    if (fs::exists(missing_path())) fs::resize_file(missing_path(), s.missing_bytes);
    state_ = s;
  }

 private:
  static std::uint64_t append_bytes(const fs::path& p, const std::string& data) {
    std::FILE* f = std::fopen(p.c_str(), "ab");
    if (!f) throw IoError("cannot open " + p.string());
    bool ok = std::fwrite(data.data(), 1, data.size(), f) == data.size();
    ok = std::fflush(f) == 0 && ok;
    ok = ::fsync(::fileno(f)) == 0 && ok;
    std::fclose(f);
    if (!ok) throw IoError("write failed: " + p.string());
    return data.size();
  }

  fs::path dir_;
  std::string prefix_;
  std::uint64_t roll_;
  bool log_missing_;
  SinkState state_;
};

struct Checkpoint {
  std::uint64_t worker_id = 0;
  std::uint64_t next_batch_index = 0;
  std::uint64_t ids_requested = 0;
  std::uint64_t tweets_stored = 0;
  EpochMs last_update = 0;
  // Start time of the last request, so the limiter survives restarts.
  std::optional<EpochMs> last_request_start;
  std::uint64_t throttle_events = 0;
  std::uint64_t transport_errors = 0;
  EpochMs elapsed_ms = 0;
  SinkState sink;

  json to_json() const {
    return {{"worker_id", worker_id},
            {"next_batch_index", next_batch_index},
            {"ids_requested", ids_requested},
            {"tweets_stored", tweets_stored},
            {"last_update", last_update},
            {"last_request_start", last_request_start ? json(*last_request_start) : json(nullptr)},
            {"throttle_events", throttle_events},
            {"transport_errors", transport_errors},
            {"elapsed_ms", elapsed_ms},
            {"sink",
             {{"file_seq", sink.file_seq},
              {"file_bytes", sink.file_bytes},
              {"file_records", sink.file_records},
              {"missing_bytes", sink.missing_bytes}}}};
  }

  static Checkpoint from_json(const json& j) {
    Checkpoint c;
    c.worker_id = j.at("worker_id");
    c.next_batch_index = j.at("next_batch_index");
    c.ids_requested = j.at("ids_requested");
    c.tweets_stored = j.at("tweets_stored");
    c.last_update = j.at("last_update");
    if (!j.at("last_request_start").is_null()) c.last_request_start = j.at("last_request_start").get<EpochMs>();
    c.throttle_events = j.at("throttle_events");
    c.transport_errors = j.at("transport_errors");
    c.elapsed_ms = j.at("elapsed_ms");
    const auto& s = j.at("sink");
    c.sink = {s.at("file_seq"), s.at("file_bytes"), s.at("file_records"), s.at("missing_bytes")};
    if (c.tweets_stored > c.ids_requested) throw std::runtime_error("checkpoint: tweets_stored > ids_requested");
    return c;
  }

  static std::optional<Checkpoint> load(const fs::path& path) {
    if (!fs::exists(path)) return std::nullopt;
    try {
      return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
      throw IoError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
  }

  void save(const fs::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }
};

struct FetchReport {
  std::uint64_t batches_done = 0;
  std::uint64_t ids_requested = 0;
  std::uint64_t found = 0;
  std::uint64_t missing = 0;
  std::uint64_t throttle_events = 0;
  std::uint64_t transport_errors = 0;
  double wall_seconds = 0;
  std::vector<std::string> worker_errors;  // one entry per aborted fleet worker

  bool complete() const { return worker_errors.empty(); }
};

class FetchAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FetchOptions {
  std::size_t batch_size = kMaxBatchSize;
  std::uint64_t worker_id = 0;
  int max_transport_tries = 8;
  EpochMs backoff_base_ms = 1000;
  EpochMs backoff_cap_ms = 60'000;
  // Test hooks, called after the sink append and after the checkpoint save of
  // each batch. Throwing from them simulates a crash at that point.
  std::function<void(std::uint64_t batch)> after_sink;
  std::function<void(std::uint64_t batch)> after_checkpoint;
};

inline FetchReport report_from(const Checkpoint& cp) {
  FetchReport r;
  r.batches_done = cp.next_batch_index;
  r.ids_requested = cp.ids_requested;
  r.found = cp.tweets_stored;
  r.missing = cp.ids_requested - cp.tweets_stored;
  r.throttle_events = cp.throttle_events;
  r.transport_errors = cp.transport_errors;
  r.wall_seconds = static_cast<double>(cp.elapsed_ms) / 1000.0;
  return r;
}

// Requests every candidate once, in batch order, resuming from
// `checkpoint_path` if it exists.
inline FetchReport run(const IdStream& candidates, const Credential& credential, LookupClient& client, Sink& sink,
                       const fs::path& checkpoint_path, Clock& clock, const FetchOptions& options = {}) {
  if (!(credential.min_interval > 0)) throw std::invalid_argument("credential min_interval must be positive");
  const EpochMs interval_ms = static_cast<EpochMs>(std::llround(credential.min_interval * 1000));
  const Batches batches(candidates, options.batch_size);

  Checkpoint cp = Checkpoint::load(checkpoint_path).value_or(Checkpoint{});
  cp.worker_id = options.worker_id;
  if (cp.next_batch_index > batches.count())
    throw std::runtime_error("checkpoint is ahead of the candidate stream: " + checkpoint_path.string());
  sink.restore(cp.sink);
  if (checkpoint_path.has_parent_path()) fs::create_directories(checkpoint_path.parent_path());

  const EpochMs session_start = clock.now_ms();
  EpochMs committed_elapsed = cp.elapsed_ms;
  std::optional<EpochMs> last_start = cp.last_request_start;

  // The start time is persisted before the request goes out, so a worker that
  // crashes mid-request still honors the spacing after restart.
  auto begin_request = [&] {
    if (last_start) clock.sleep_until(*last_start + interval_ms);
    last_start = clock.now_ms();
    cp.last_request_start = last_start;
    cp.save(checkpoint_path);
  };

  for (std::uint64_t k = cp.next_batch_index; k < batches.count(); ++k) {
    const auto ids = batches.at(k);
    LookupResponse resp;
    int transport_failures = 0;
    while (true) {
      begin_request();
      resp = client.lookup(ids, credential.token);
      if (resp.status == LookupResponse::Status::kOk) break;
      if (resp.status == LookupResponse::Status::kThrottled) {
        // The same batch is re-issued once the server's wait has elapsed.
        ++cp.throttle_events;
        clock.sleep_until(clock.now_ms() + std::max(0, resp.retry_after_seconds) * kMsPerSecond);
        continue;
      }
      if (resp.status == LookupResponse::Status::kRejected)
        throw FetchAborted("batch " + std::to_string(k) + " rejected: " + resp.error);
      ++cp.transport_errors;
      if (++transport_failures >= options.max_transport_tries)
        throw FetchAborted("batch " + std::to_string(k) + ": transport failed " +
                           std::to_string(transport_failures) + " times: " + resp.error);
      const EpochMs backoff =
          std::min(options.backoff_cap_ms, options.backoff_base_ms << std::min(transport_failures - 1, 30));
      clock.sleep_until(clock.now_ms() + backoff);
    }

    std::unordered_set<TweetId> found_ids;
    for (const auto& r : resp.records) found_ids.insert(r.id);
    std::vector<TweetId> missing;
    for (auto id : ids)
      if (!found_ids.count(id)) missing.push_back(id);

    sink.append(resp.records, missing);
    if (options.after_sink) options.after_sink(k);

    cp.next_batch_index = k + 1;
    cp.ids_requested += ids.size();
    cp.tweets_stored += ids.size() - missing.size();
    cp.last_update = clock.now_ms();
    cp.last_request_start = last_start;
    cp.elapsed_ms = committed_elapsed + (clock.now_ms() - session_start);
    cp.sink = sink.state();
    cp.save(checkpoint_path);
    if (options.after_checkpoint) options.after_checkpoint(k);
  }
  return report_from(cp);
}

struct FleetFactories {
  std::function<std::unique_ptr<Sink>(std::size_t worker)> sink;
  std::function<std::unique_ptr<Clock>(std::size_t worker)> clock;
  std::function<std::unique_ptr<LookupClient>(std::size_t worker, Clock& clock)> client;
};

inline fs::path worker_checkpoint(const fs::path& dir, std::size_t worker) {
  return dir / ("worker-" + std::to_string(worker) + ".checkpoint.json");
}

// One worker per credential over contiguous shards of the candidates. Workers
// run concurrently and independently; a worker that aborts is reported in
// worker_errors while the others run to completion. Wall time is that of the
// slowest worker.
inline FetchReport run_fleet(const IdStream& candidates, const std::vector<Credential>& credentials,
                             const FleetFactories& make, const fs::path& checkpoint_dir,
                             const FetchOptions& options = {}) {
  if (credentials.empty()) throw std::invalid_argument("run_fleet: at least one credential required");
  fs::create_directories(checkpoint_dir);
  const auto shards = shard(candidates, credentials.size());
  std::vector<FetchReport> reports(credentials.size());
  std::vector<std::string> errors(credentials.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < credentials.size(); ++w) {
    threads.emplace_back([&, w] {
      try {
        auto clock = make.clock(w);
        auto client = make.client(w, *clock);
        auto sink = make.sink(w);
        FetchOptions opts = options;
        opts.worker_id = w;
        reports[w] = run(shards[w], credentials[w], *client, *sink, worker_checkpoint(checkpoint_dir, w), *clock, opts);
      } catch (const std::exception& e) {
        errors[w] = "worker " + std::to_string(w) + ": " + e.what();
        if (auto cp = Checkpoint::load(worker_checkpoint(checkpoint_dir, w))) reports[w] = report_from(*cp);
      }
    });
  }
  for (auto& t : threads) t.join();

  FetchReport total;
  for (std::size_t w = 0; w < reports.size(); ++w) {
    const auto& r = reports[w];
    total.batches_done += r.batches_done;
    total.ids_requested += r.ids_requested;
    total.found += r.found;
    total.missing += r.missing;
    total.throttle_events += r.throttle_events;
    total.transport_errors += r.transport_errors;
    total.wall_seconds = std::max(total.wall_seconds, r.wall_seconds);
    if (!errors[w].empty()) total.worker_errors.push_back(errors[w]);
  }
  return total;
}

}  // namespace tweetvault
