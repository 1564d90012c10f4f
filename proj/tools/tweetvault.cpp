// tweetvault: command-line entry point for the archive pipeline.
//
// Exit status: 0 success, 1 operational failure, 2 usage error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "tweetvault/analytics.hpp"
#include "tweetvault/demo.hpp"
#include "tweetvault/dehydrator.hpp"
#include "tweetvault/fetcher.hpp"
#include "tweetvault/http_client.hpp"
#include "tweetvault/ids.hpp"
#include "tweetvault/mock_server.hpp"
#include "tweetvault/planner.hpp"
#include "tweetvault/search.hpp"
#include "tweetvault/store.hpp"
#include "tweetvault/table.hpp"

namespace tv = tweetvault;
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `key = value` lines supplying option defaults; flags on the command line win.
class ConfigDefaults {
 public:
  static inline const std::set<std::string> kKeys = {
      "endpoint", "token", "tokens", "workers", "interval", "batch", "ids",   "table",  "policy", "raw",
      "dehydrated", "archive", "index", "checkpoint", "spec", "bucket", "format", "host", "port"};

  static ConfigDefaults from_args(int argc, char** argv) {
    ConfigDefaults c;
    for (int i = 1; i < argc; ++i) {
      std::string a = argv[i];
      std::string path;
      if (a == "--config" && i + 1 < argc) path = argv[i + 1];
      else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
      if (!path.empty()) c.load(path);
    }
    return c;
  }

  std::string get(const std::string& key, std::string fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? std::move(fallback) : it->second;
  }
  template <typename T>
  T get_as(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      if constexpr (std::is_same_v<T, double>) return std::stod(it->second);
      else return static_cast<T>(std::stoull(it->second));
    } catch (const std::exception&) {
      throw UsageError("config: bad value for " + key + ": '" + it->second + "'");
    }
  }

 private:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
      auto key = trim(line.substr(0, eq));
      if (!kKeys.count(key)) throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
      values_[key] = trim(line.substr(eq + 1));
    }
  }
  std::map<std::string, std::string> values_;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  tv::for_each_line(tv::read_file(path), [&](std::string_view l) {
    while (!l.empty() && (l.back() == '\r' || l.back() == ' ')) l.remove_suffix(1);
    while (!l.empty() && l.front() == ' ') l.remove_prefix(1);
    if (!l.empty() && l.front() != '#') out.emplace_back(l);
  });
  return out;
}

std::vector<tv::TweetId> read_id_file(const fs::path& path) {
  std::vector<tv::TweetId> ids;
  for (const auto& l : read_lines(path)) {
    if (l.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError(path.string() + ": not a decimal id: '" + l + "'");
    ids.push_back(std::stoull(l));
  }
  return ids;
}

tv::RangeTable load_table(const std::string& table_path) {
  return table_path.empty() ? tv::RangeTable::builtin() : tv::RangeTable::parse(tv::read_file(table_path));
}

tv::CorpusSpec load_spec(const std::string& spec_path) {
  if (spec_path.empty()) return {};
  return tv::parse_corpus_spec(tv::read_file(spec_path), fs::path(spec_path).parent_path());
}

tv::TimeBounds time_scope(const std::string& from, const std::string& to) {
  tv::TimeBounds b;
  if (!from.empty()) b.lo = tv::parse_iso8601(from);
  if (!to.empty()) b.hi = tv::parse_iso8601(to, true);
  if (b.empty()) throw UsageError("--from is after --to");
  return b;
}

std::string default_index_dir(const std::string& archive) { return archive + ".index"; }

void emit(const tv::Table& t, const std::string& format, const std::string& out_path = {}) {
  const auto f = tv::parse_table_format(format);
  if (out_path.empty() || out_path == "-") {
    tv::write_table(std::cout, t, f);
    return;
  }
  std::ostringstream os;
  tv::write_table(os, t, f);
  tv::write_file_atomic(out_path, os.str());
}

CLI::Option* add_format(CLI::App* cmd, std::string& var, const std::vector<std::string>& allowed) {
  return cmd->add_option("--format", var, "Output format")
      ->check(CLI::IsMember(allowed))
      ->capture_default_str();
}

void print_fetch_report(const tv::FetchReport& r) {
  std::cout << "batches " << r.batches_done << "\n"
            << "requested " << r.ids_requested << "\n"
            << "found " << r.found << "\n"
            << "missing " << r.missing << "\n"
            << "throttle_events " << r.throttle_events << "\n"
            << "transport_errors " << r.transport_errors << "\n"
            << "wall_seconds " << fixed(r.wall_seconds, 3) << "\n";
}

// Blocks SIGINT and SIGTERM in every thread started afterwards and returns
// once one of them arrives.
class SignalWaiter {
 public:
  SignalWaiter() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
  }
  int wait() {
    int sig = 0;
    sigwait(&set_, &sig);
    return sig;
  }

 private:
  sigset_t set_{};
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Archive, search and analyze a historical tweet collection"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "File of `key = value` option defaults");

  ConfigDefaults cfg;
  try {
    cfg = ConfigDefaults::from_args(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::map<const CLI::App*, std::function<int()>> handlers;
  auto on = [&](CLI::App* cmd, std::function<int()> fn) { handlers[cmd] = std::move(fn); };

  // ids
  auto* ids = app.add_subcommand("ids", "Candidate tweet id generation");
  ids->require_subcommand(1);
  std::string policy = cfg.get("policy", "dedup");
  std::string table_path = cfg.get("table", "");
  auto add_table_opts = [&](CLI::App* c) {
    c->add_option("--policy", policy, "Boundary duplicates: dedup or raw")
        ->check(CLI::IsMember({"dedup", "raw"}))
        ->capture_default_str();
    c->add_option("--table", table_path, "Range table file (start:end or start:step:end lines)");
  };
  auto* ids_count = ids->add_subcommand("count", "Print the number of candidate ids");
  add_table_opts(ids_count);
  on(ids_count, [&] {
    std::cout << tv::count(load_table(table_path), tv::parse_policy(policy)) << "\n";
    return 0;
  });
  auto* ids_emit = ids->add_subcommand("emit", "Print candidate ids, one per line");
  add_table_opts(ids_emit);
  std::size_t shards = 1, shard_index = 0;
  std::uint64_t emit_offset = 0;
  std::optional<std::uint64_t> emit_limit;
  ids_emit->add_option("--shards", shards, "Number of contiguous shards")->check(CLI::PositiveNumber)->capture_default_str();
  ids_emit->add_option("--shard-index", shard_index, "Shard to emit (0-based)")->capture_default_str();
  ids_emit->add_option("--offset", emit_offset, "Skip this many ids of the shard")->capture_default_str();
  ids_emit->add_option("--limit", emit_limit, "Emit at most this many ids");
  on(ids_emit, [&] {
    if (shard_index >= shards) throw UsageError("--shard-index must be < --shards");
    auto stream = tv::shard(tv::enumerate(load_table(table_path), tv::parse_policy(policy)), shards)[shard_index];
    const auto off = std::min(emit_offset, stream.size());
    const auto n = std::min(emit_limit.value_or(stream.size()), stream.size() - off);
    std::string buf;
    for (auto id : stream.window(off, n)) {
      buf += std::to_string(id);
      buf += '\n';
      if (buf.size() > (1 << 16)) {
        std::cout << buf;
        buf.clear();
      }
    }
    std::cout << buf << std::flush;
    return 0;
  });
  auto* ids_export = ids->add_subcommand("export-table", "Print the range table in text form");
  ids_export->add_option("--table", table_path, "Range table file to normalize instead of the built-in one");
  on(ids_export, [&] {
    std::cout << load_table(table_path).to_text();
    return 0;
  });

  // plan
  auto* plan = app.add_subcommand("plan", "Collection time and storage estimates (1 GB = 10^9 bytes)");
  plan->require_subcommand(0, 1);
  std::uint64_t plan_ids = tv::count(tv::RangeTable::builtin());
  tv::RatePolicy rate;
  rate.workers = cfg.get_as<std::size_t>("workers", 1);
  rate.min_interval = cfg.get_as<double>("interval", 5.0);
  rate.batch_size = cfg.get_as<std::size_t>("batch", 100);
  std::string plan_format = "text";
  plan->add_option("--ids", plan_ids, "Number of ids to request")->capture_default_str();
  plan->add_option("--workers", rate.workers, "Credentials working in parallel")->capture_default_str();
  plan->add_option("--interval", rate.min_interval, "Seconds between requests per credential")->capture_default_str();
  plan->add_option("--batch", rate.batch_size, "Ids per request")->capture_default_str();
  add_format(plan, plan_format, {"text", "csv", "tsv", "json"});
  on(plan, [&] {
    const auto d = tv::collection_days(plan_ids, rate);
    if (plan_format == "text") {
      std::cout << "ids           " << plan_ids << "\n"
                << "workers       " << rate.workers << "\n"
                << "interval      " << rate.min_interval << " s\n"
                << "batch         " << rate.batch_size << "\n"
                << "ids per day   " << tv::throughput_per_day(rate) << "\n"
                << "collection    " << d.whole_days << " days (" << fixed(d.days, 3) << ")\n";
      return 0;
    }
    tv::Table t{{"ids", "workers", "interval_s", "batch", "ids_per_day", "days", "whole_days"}, {}};
    t.add({plan_ids, rate.workers, rate.min_interval, rate.batch_size, tv::throughput_per_day(rate), d.days,
           d.whole_days});
    emit(t, plan_format);
    return 0;
  });
  auto* storage = plan->add_subcommand("storage", "Storage estimate for a number of tweets");
  std::uint64_t storage_tweets = 0;
  storage->add_option("--tweets", storage_tweets, "Number of stored tweets")->required();
  add_format(storage, plan_format, {"text", "csv", "tsv", "json"});
  on(storage, [&] {
    const auto s = tv::storage_estimate(storage_tweets);
    if (plan_format == "text") {
      std::cout << "tweets        " << storage_tweets << "\n"
                << "compressed    " << fixed(s.compressed_bytes / 1e9, 2) << " GB ("
                << fixed(s.compressed_bytes, 0) << " bytes)\n"
                << "decompressed  " << fixed(s.decompressed_bytes / 1e9, 2) << " GB ("
                << fixed(s.decompressed_bytes, 0) << " bytes)\n"
                << "units         1 GB = 10^9 bytes\n";
      return 0;
    }
    tv::Table t{{"tweets", "compressed_bytes", "decompressed_bytes"}, {}};
    t.add({storage_tweets, s.compressed_bytes, s.decompressed_bytes});
    emit(t, plan_format);
    return 0;
  });

  // mock
  auto* mock = app.add_subcommand("mock", "Synthetic lookup service");
  mock->require_subcommand(1);
  std::string spec_path = cfg.get("spec", "");
  std::string host = cfg.get("host", "127.0.0.1");
  int port = cfg.get_as<int>("port", 8080);
  double mock_interval = cfg.get_as<double>("interval", 5.0);
  auto* serve = mock->add_subcommand("serve", "Serve the lookup endpoint until interrupted");
  serve->add_option("--host", host, "Address to bind")->capture_default_str();
  serve->add_option("--port", port, "Port to bind (0 picks a free port)")->capture_default_str();
  serve->add_option("--spec", spec_path, "Corpus spec file (key = value)");
  serve->add_option("--interval", mock_interval, "Minimum seconds between requests per token")->capture_default_str();
  on(serve, [&] {
    SignalWaiter signals;
    auto service = std::make_shared<tv::LookupService>(load_spec(spec_path), mock_interval);
    tv::MockServer server(service);
    const int bound = server.start(host, port);
    std::cout << "listening on http://" << host << ":" << bound << tv::kLookupPath << std::endl;
    signals.wait();
    server.stop();
    std::cerr << "served " << service->requests_served() << " requests, throttled "
              << service->requests_throttled() << "\n";
    return 0;
  });
  auto* sample = mock->add_subcommand("sample", "Generate tweet objects offline");
  std::string sample_ids;
  std::string sample_out;
  bool sample_dehydrated = false;
  sample->add_option("--ids", sample_ids, "File of decimal ids, one per line")->required();
  sample->add_option("--spec", spec_path, "Corpus spec file (key = value)");
  sample->add_option("--out", sample_out, "Write sample-000000.ndjson.gz into this directory instead of stdout");
  sample->add_flag("--dehydrated", sample_dehydrated, "Emit the eight-field records instead");
  on(sample, [&] {
    tv::CorpusGenerator gen(load_spec(spec_path));
    std::unique_ptr<tv::GzipFileWriter> writer;
    if (!sample_out.empty()) {
      fs::create_directories(sample_out);
      writer = std::make_unique<tv::GzipFileWriter>(fs::path(sample_out) / "sample-000000.ndjson.gz");
    }
    std::uint64_t found = 0, missing = 0;
    for (auto id : read_id_file(sample_ids)) {
      auto t = gen.tweet(id);
      if (!t) {
        ++missing;
        continue;
      }
      ++found;
      auto line = sample_dehydrated ? tv::to_json_line(tv::dehydrate(*t)) : tv::to_json(*t).dump();
      if (writer) writer->write_line(line);
      else std::cout << line << '\n';
    }
    if (writer) writer->commit();
    std::cerr << "found " << found << " missing " << missing << "\n";
    return 0;
  });

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Collect tweets through the lookup endpoint");
  fetch->require_subcommand(1);
  auto* fetch_run = fetch->add_subcommand("run", "Fetch candidate ids with resumable checkpoints");
  std::string endpoint = cfg.get("endpoint", "");
  std::string token = cfg.get("token", "");
  std::string tokens_path = cfg.get("tokens", "");
  std::optional<std::size_t> workers;
  std::string ids_path = cfg.get("ids", "");
  double interval = cfg.get_as<double>("interval", 5.0);
  std::size_t batch_size = cfg.get_as<std::size_t>("batch", 100);
  std::string raw_dir = cfg.get("raw", "raw");
  std::string checkpoint_dir = cfg.get("checkpoint", "checkpoints");
  std::uint64_t fetch_offset = 0;
  std::optional<std::uint64_t> fetch_limit;
  std::uint64_t roll = tv::kRollRecords;
  bool log_missing = false;
  fetch_run->add_option("--endpoint", endpoint, "Lookup endpoint, http://host:port[/path]")->capture_default_str();
  fetch_run->add_option("--token", token, "Bearer token for a single worker");
  fetch_run->add_option("--tokens", tokens_path, "File of bearer tokens, one per line; one worker each");
  fetch_run->add_option("--workers", workers, "Use the first N tokens");
  auto* ids_opt = fetch_run->add_option("--ids", ids_path, "File of candidate ids, one per line");
  auto* table_opt = fetch_run->add_option("--table", table_path, "Range table file (default: built-in table)");
  ids_opt->excludes(table_opt);
  fetch_run->add_option("--policy", policy, "Boundary duplicates: dedup or raw")
      ->check(CLI::IsMember({"dedup", "raw"}))
      ->capture_default_str();
  fetch_run->add_option("--offset", fetch_offset, "Skip this many candidates")->capture_default_str();
  fetch_run->add_option("--limit", fetch_limit, "Fetch at most this many candidates");
  fetch_run->add_option("--interval", interval, "Seconds between request starts per token")->capture_default_str();
  fetch_run->add_option("--batch", batch_size, "Ids per request (1-100)")->capture_default_str();
  fetch_run->add_option("--out", raw_dir, "Output directory")->capture_default_str();
  fetch_run->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->capture_default_str();
  fetch_run->add_option("--roll", roll, "Records per output file")->capture_default_str();
  fetch_run->add_flag("--log-missing", log_missing, "Also write ids that were not returned");
  on(fetch_run, [&] {
    if (endpoint.empty()) throw UsageError("--endpoint is required");
    std::vector<tv::Credential> creds;
    if (!tokens_path.empty()) {
      for (const auto& t : read_lines(tokens_path)) creds.push_back({t, interval});
      if (creds.empty()) throw UsageError(tokens_path + " contains no tokens");
      if (workers) {
        if (*workers == 0 || *workers > creds.size())
          throw UsageError("--workers must be between 1 and the number of tokens (" + std::to_string(creds.size()) + ")");
        creds.resize(*workers);
      }
    } else {
      if (token.empty()) throw UsageError("--token or --tokens is required");
      if (workers && *workers != 1) throw UsageError("more than one worker needs --tokens with one token per worker");
      creds.push_back({token, interval});
    }
    tv::IdStream candidates = ids_path.empty() ? tv::enumerate(load_table(table_path), tv::parse_policy(policy))
                                               : tv::IdStream(read_id_file(ids_path));
    const auto off = std::min(fetch_offset, candidates.size());
    candidates = candidates.window(off, std::min(fetch_limit.value_or(candidates.size()), candidates.size() - off));
    tv::FleetFactories make;
    make.sink = [&](std::size_t w) {
      return std::make_unique<tv::RollingGzipSink>(raw_dir, "worker-" + std::to_string(w), roll, log_missing);
    };
    make.clock = [](std::size_t) { return std::make_unique<tv::SystemClock>(); };
    make.client = [&](std::size_t, tv::Clock&) { return std::make_unique<tv::HttpLookupClient>(endpoint); };
    tv::FetchOptions options;
    options.batch_size = batch_size;
    auto report = tv::run_fleet(candidates, creds, make, checkpoint_dir, options);
    print_fetch_report(report);
    for (const auto& e : report.worker_errors) std::cerr << "error: " << e << "\n";
    return report.complete() ? 0 : 1;
  });

  // dehydrate
  auto* dehydrate = app.add_subcommand("dehydrate", "Reduce hydrated records to the eight stored fields");
  std::string dehydrate_in = raw_dir, dehydrate_out = cfg.get("dehydrated", "dehydrated");
  dehydrate->add_option("--in", dehydrate_in, "Directory of *.ndjson.gz hydrated records")->capture_default_str();
  dehydrate->add_option("--out", dehydrate_out, "Output directory")->capture_default_str();
  on(dehydrate, [&] {
    auto s = tv::dehydrate_directory(dehydrate_in, dehydrate_out);
    std::cout << "read " << s.read << "\nwritten " << s.written << "\nrejected " << s.rejected << "\n";
    return 0;
  });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load dehydrated records into the partitioned archive");
  std::string ingest_in = cfg.get("dehydrated", "dehydrated");
  std::string archive_dir = cfg.get("archive", "archive");
  ingest->add_option("--in", ingest_in, "Directory of *.ndjson.gz dehydrated records")->capture_default_str();
  ingest->add_option("--archive", archive_dir, "Archive directory")->capture_default_str();
  on(ingest, [&] {
    tv::ArchiveWriter writer(archive_dir);
    auto s = tv::ingest_directory(ingest_in, writer);
    std::cout << "read " << s.read << "\nstored " << s.stored << "\nrejected " << s.rejected << "\nquarantined "
              << s.quarantined << "\nsegments " << s.segments.size() << "\n";
    return 0;
  });

  // archive
  auto* archive = app.add_subcommand("archive", "Inspect the archive");
  archive->require_subcommand(1);
  auto* archive_stats = archive->add_subcommand("stats", "Per-partition segment and record counts");
  std::string format = cfg.get("format", "csv");
  archive_stats->add_option("--archive", archive_dir, "Archive directory")->capture_default_str();
  add_format(archive_stats, format, {"csv", "tsv", "json"});
  on(archive_stats, [&] {
    tv::ArchiveReader reader(archive_dir);
    tv::Table t{{"partition", "segments", "records", "min_ts", "max_ts"}, {}};
    for (const auto& s : reader.stats())
      t.add({s.key.name(), s.segments, s.records, s.records ? tv::json(tv::format_iso8601(s.min_ts)) : tv::json(),
             s.records ? tv::json(tv::format_iso8601(s.max_ts)) : tv::json()});
    emit(t, format);
    return 0;
  });

  // index
  auto* index = app.add_subcommand("index", "Build search indexes");
  index->require_subcommand(1);
  auto* index_build = index->add_subcommand("build", "Index partitions whose index is missing or stale");
  std::string index_dir = cfg.get("index", "");
  bool force = false;
  std::vector<std::string> only_partitions;
  index_build->add_option("--archive", archive_dir, "Archive directory")->capture_default_str();
  index_build->add_option("--index", index_dir, "Index directory (default: <archive>.index)");
  index_build->add_flag("--force", force, "Rebuild current indexes too");
  index_build->add_option("--partition", only_partitions, "Restrict to these partitions (e.g. 2009-W07)");
  on(index_build, [&] {
    tv::ArchiveReader reader(archive_dir);
    const auto root = index_dir.empty() ? default_index_dir(archive_dir) : index_dir;
    std::vector<tv::PartitionKey> keys;
    std::size_t current = 0;
    for (const auto& k : reader.partitions()) {
      if (k.is_quarantine()) continue;
      if (!only_partitions.empty() &&
          std::find(only_partitions.begin(), only_partitions.end(), k.name()) == only_partitions.end())
        continue;
      if (!force && tv::index_state(reader, k, root) == tv::IndexState::kCurrent) {
        ++current;
        continue;
      }
      keys.push_back(k);
    }
    for (const auto& p : only_partitions) {
      auto k = tv::PartitionKey::parse(p);
      if (!k || !reader.has_partition(*k)) throw UsageError("no partition " + p + " in " + archive_dir);
    }
    for (const auto& m : tv::build_indexes(reader, keys, root))
      std::cout << "indexed " << m.partition << " docs " << m.docs << " terms " << m.terms << "\n";
    std::cout << "built " << keys.size() << " up-to-date " << current << "\n";
    return 0;
  });

  // Shared query options.
  std::string query_text;
  std::string from, to;
  std::string bucket = cfg.get("bucket", "week");
  auto add_scope = [&](CLI::App* c) {
    c->add_option("--archive", archive_dir, "Archive directory")->capture_default_str();
    c->add_option("--index", index_dir, "Index directory (default: <archive>.index)");
    c->add_option("--from", from, "Earliest timestamp, ISO 8601 date or datetime (UTC)");
    c->add_option("--to", to, "Latest timestamp; a bare date includes the whole day");
  };
  auto add_bucket = [&](CLI::App* c) {
    return c->add_option("--bucket", bucket, "Bucket granularity: day, week or month")
        ->check(CLI::IsMember({"day", "week", "month"}))
        ->capture_default_str();
  };
  auto searcher = [&] {
    return tv::Searcher(archive_dir, index_dir.empty() ? default_index_dir(archive_dir) : index_dir);
  };
  auto bucket_label = [](tv::EpochMs b) { return tv::format_iso_date(b); };

  // search
  auto* search = app.add_subcommand("search", "Boolean, phrase and time-range search, newest first");
  std::optional<std::size_t> limit;
  bool count_only = false;
  std::string search_format;
  search->add_option("--query", query_text, "Query: words (AND), OR, \"phrases\", (groups), from:/to: dates")
      ->required();
  add_scope(search);
  search->add_option("--limit", limit, "Return at most N results");
  search->add_flag("--count-only", count_only, "Print the number of matches instead of the matches");
  auto* search_bucket = add_bucket(search);
  add_format(search, search_format, {"csv", "tsv", "json"})->default_str("tsv for results, csv for counts");
  on(search, [&] {
    const auto q = tv::parse_query(query_text);
    const auto scope = time_scope(from, to);
    auto s = searcher();
    if (count_only || search_bucket->count() > 0) {
      const auto counts = s.count(q, tv::parse_granularity(bucket), scope);
      if (search_bucket->count() == 0) {
        std::uint64_t total = 0;
        for (const auto& [b, n] : counts) total += n;
        std::cout << total << "\n";
        return 0;
      }
      tv::Table t{{"bucket_start", "count"}, {}};
      for (const auto& [b, n] : counts) t.add({bucket_label(b), n});
      emit(t, search_format.empty() ? "csv" : search_format);
      return 0;
    }
    tv::Table t{{"timestamp", "id", "text"}, {}};
    for (const auto& r : s.execute(q, scope, limit.value_or(std::numeric_limits<std::size_t>::max())))
      t.add({tv::format_iso8601(r.timestamp), r.id_str, r.text});
    emit(t, search_format.empty() ? "tsv" : search_format);
    return 0;
  });

  // trend
  auto* trend = app.add_subcommand("trend", "Matches per thousand tweets per bucket");
  std::string out_path;
  trend->add_option("--query", query_text, "Query in the search grammar")->required();
  add_scope(trend);
  add_bucket(trend);
  trend->add_option("--out", out_path, "Write to this file instead of stdout");
  add_format(trend, format, {"csv", "tsv", "json"});
  on(trend, [&] {
    const auto rows = tv::trend(searcher(), tv::parse_query(query_text), tv::parse_granularity(bucket),
                                time_scope(from, to));
    tv::Table t{{"bucket_start", "total", "matches", "per_mille"}, {}};
    for (const auto& r : rows)
      t.add({bucket_label(r.bucket_start), r.total, r.matches, r.per_mille ? tv::json(*r.per_mille) : tv::json()});
    emit(t, format, out_path);
    return 0;
  });

  // volume
  auto* volume = app.add_subcommand("volume", "Stored tweets per bucket");
  add_scope(volume);
  add_bucket(volume);
  volume->add_option("--out", out_path, "Write to this file instead of stdout");
  add_format(volume, format, {"csv", "tsv", "json"});
  on(volume, [&] {
    tv::Table t{{"bucket_start", "total"}, {}};
    for (const auto& r : tv::volume(searcher(), tv::parse_granularity(bucket), time_scope(from, to)))
      t.add({bucket_label(r.bucket_start), r.total});
    emit(t, format, out_path);
    return 0;
  });

  // actions
  auto* actions = app.add_subcommand("actions", "Most frequent -ing tokens by document frequency");
  std::size_t top = 20;
  add_scope(actions);
  actions->add_option("--top", top, "Number of tokens")->capture_default_str();
  add_format(actions, format, {"csv", "tsv", "json"});
  on(actions, [&] {
    tv::Table t{{"token", "documents"}, {}};
    for (const auto& a : tv::top_actions(searcher(), top, time_scope(from, to))) t.add({a.token, a.count});
    emit(t, format);
    return 0;
  });

  // urls
  auto* urls = app.add_subcommand("urls", "Share of tweets with URLs and their domains");
  bool urls_summary = false;
  urls->add_option("--archive", archive_dir, "Archive directory")->capture_default_str();
  urls->add_option("--from", from, "Earliest timestamp, ISO 8601 date or datetime (UTC)");
  urls->add_option("--to", to, "Latest timestamp; a bare date includes the whole day");
  urls->add_flag("--summary", urls_summary, "Print totals instead of the domain ranking");
  add_format(urls, format, {"csv", "tsv", "json"});
  on(urls, [&] {
    const auto s = tv::url_stats(tv::ArchiveReader(archive_dir), time_scope(from, to));
    if (urls_summary) {
      tv::Table t{{"tweets", "tweets_with_url", "fraction_with_url"}, {}};
      auto f = s.fraction_with_url();
      t.add({s.tweets, s.tweets_with_url, f ? tv::json(*f) : tv::json()});
      emit(t, format);
      return 0;
    }
    tv::Table t{{"domain", "tweets", "fraction"}, {}};
    for (const auto& d : s.domains) t.add({d.domain, d.tweets, d.fraction});
    emit(t, format);
    return 0;
  });

  // demo
  auto* demo = app.add_subcommand("demo", "End-to-end pipeline rehearsal against the mock service");
  tv::DemoOptions demo_opts;
  std::string demo_workdir = demo_opts.workdir.string();
  demo->add_option("--seed", demo_opts.seed, "Corpus seed")->capture_default_str();
  demo->add_option("--ids", demo_opts.n_ids, "Number of candidate ids from the start of the built-in table")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo->add_option("--workdir", demo_workdir, "Scratch directory (replaced on each run)")->capture_default_str();
  on(demo, [&] {
    demo_opts.workdir = demo_workdir;
    auto report = tv::run_demo(demo_opts, &std::cerr);
    std::cout << report.text(false);
    std::cerr << "report written to " << (demo_opts.workdir / "report.txt").string() << "\n";
    return report.ok() ? 0 : 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const CLI::App* selected = &app;
  while (!selected->get_subcommands().empty()) selected = selected->get_subcommands().front();
  auto action = handlers.find(selected);
  if (action == handlers.end()) {
    std::cerr << selected->help();
    return 2;
  }
  try {
    return action->second();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tv::QueryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tv::TimeParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
