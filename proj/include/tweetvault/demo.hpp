#pragma once

// End-to-end rehearsal: mock lookup service over HTTP, fetch, dehydrate,
// ingest, index, then a fixed query battery checked against a scan.

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tweetvault/analytics.hpp"
#include "tweetvault/dehydrator.hpp"
#include "tweetvault/fetcher.hpp"
#include "tweetvault/http_client.hpp"
#include "tweetvault/mock_server.hpp"
#include "tweetvault/scan.hpp"
#include "tweetvault/search.hpp"
#include "tweetvault/store.hpp"
#include "tweetvault/wordlists.hpp"

namespace tweetvault {

inline constexpr const char* kDemoMarker = ".tweetvault-demo";

struct DemoOptions {
  std::uint64_t seed = 42;
  std::uint64_t n_ids = 100'000;
  fs::path workdir = "tweetvault-demo";
  double client_interval = 0.001;  // seconds; the mock service does not throttle
};

struct DemoCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DemoReport {
  std::vector<std::string> lines;  // deterministic summary
  std::vector<DemoCheck> checks;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::string failed_stage;
  std::string failure;

  bool ok() const {
    return failed_stage.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }

  std::string text(bool with_timings) const {
    std::ostringstream os;
    for (const auto& l : lines) os << l << '\n';
    for (const auto& c : checks) os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    if (!failed_stage.empty()) os << "FAILED at stage " << failed_stage << ": " << failure << '\n';
    if (with_timings)
      for (const auto& [stage, s] : stage_seconds) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", s);
        os << "time " << stage << ' ' << buf << " s\n";
      }
    os << (ok() ? "demo: OK" : "demo: FAILED") << '\n';
    return os.str();
  }
};

// Queries run by the demo, in the command-line grammar.
inline std::vector<std::string> demo_queries() {
  return {"obama",
          "\"eating a sandwich\"",
          "\"justin bieber\"",
          "sandwich OR bieber",
          "(super OR bowl) eating",
          "obama from:2006-06-01 to:2006-09-30",
          "#barcamp OR #sxsw",
          "café",
          common_words_query()};
}

inline DemoReport run_demo(const DemoOptions& opt, std::ostream* progress = nullptr) {
  DemoReport report;
  auto say = [&](const std::string& s) {
    if (progress) *progress << s << std::endl;
  };
  auto line = [&](const std::string& s) { report.lines.push_back(s); };
  auto check = [&](std::string name, bool passed, std::string detail) {
    report.checks.push_back({std::move(name), passed, std::move(detail)});
  };
  auto fixed = [](double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };

  std::string stage;
  auto timed = [&](const std::string& name, const std::function<void()>& fn) {
    stage = name;
    say("stage " + name);
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    report.stage_seconds.emplace_back(
        name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };

  try {
    stage = "setup";
    if (fs::exists(opt.workdir)) {
      const bool empty = fs::is_directory(opt.workdir) && fs::directory_iterator(opt.workdir) == fs::directory_iterator();
      if (!empty && !fs::exists(opt.workdir / kDemoMarker))
        throw std::runtime_error("workdir " + opt.workdir.string() + " exists and is not a demo workdir");
      fs::remove_all(opt.workdir);
    }
    fs::create_directories(opt.workdir);
    write_file_atomic(opt.workdir / kDemoMarker, "");
    const auto raw_dir = opt.workdir / "raw";
    const auto dehydrated_dir = opt.workdir / "dehydrated";
    const auto archive_dir = opt.workdir / "archive";
    const auto index_dir = opt.workdir / "index";

    CorpusSpec spec;
    spec.seed = opt.seed;
    const auto all_ids = enumerate(RangeTable::builtin());
    const auto candidates = all_ids.window(0, std::min<std::uint64_t>(opt.n_ids, all_ids.size()));
    line("seed " + std::to_string(opt.seed));
    line("candidate ids " + std::to_string(candidates.size()));

    FetchReport fetched;
    timed("fetch", [&] {
      auto service = std::make_shared<LookupService>(spec, 0.0);
      MockServer server(service);
      const int port = server.start();
      HttpLookupClient client("http://127.0.0.1:" + std::to_string(port));
      RollingGzipSink sink(raw_dir, "raw", kRollRecords, true);
      SystemClock clock;
      fetched = run(candidates, Credential{"demo", opt.client_interval}, client, sink,
                    opt.workdir / "fetch.checkpoint.json", clock);
      server.stop();
    });
    const double found_rate =
        fetched.ids_requested ? static_cast<double>(fetched.found) / static_cast<double>(fetched.ids_requested) : 0;
    line("requested " + std::to_string(fetched.ids_requested) + " found " + std::to_string(fetched.found) +
         " missing " + std::to_string(fetched.missing) + " found-rate " + fixed(found_rate, 4));
    {
      // Four standard errors, never tighter than one percentage point.
      const double p = spec.existence_rate;
      const double n = static_cast<double>(std::max<std::uint64_t>(1, fetched.ids_requested));
      const double tol = std::max(0.01, 4 * std::sqrt(p * (1 - p) / n));
      check("found-rate", std::abs(found_rate - p) <= tol,
            fixed(found_rate, 4) + " vs " + fixed(p, 3) + " +/- " + fixed(tol, 4));
      check("fetch-accounting", fetched.found + fetched.missing == candidates.size(),
            std::to_string(fetched.found) + " + " + std::to_string(fetched.missing) + " = " +
                std::to_string(candidates.size()));
    }

    DehydrateStats dehydrated;
    timed("dehydrate", [&] { dehydrated = dehydrate_directory(raw_dir, dehydrated_dir); });
    line("dehydrated " + std::to_string(dehydrated.written) + " rejected " + std::to_string(dehydrated.rejected));
    check("dehydrate-complete", dehydrated.written == fetched.found && dehydrated.rejected == 0,
          std::to_string(dehydrated.written) + " of " + std::to_string(fetched.found));

    IngestStats ingested;
    timed("ingest", [&] {
      ArchiveWriter writer(archive_dir);
      ingested = ingest_directory(dehydrated_dir, writer);
    });
    line("stored " + std::to_string(ingested.stored) + " quarantined " + std::to_string(ingested.quarantined));

    ArchiveReader archive(archive_dir);
    std::vector<PartitionKey> keys;
    for (const auto& k : archive.partitions())
      if (!k.is_quarantine()) keys.push_back(k);
    timed("index", [&] { build_indexes(archive, keys, index_dir); });
    line("partitions " + std::to_string(keys.size()));
    for (const auto& k : keys) line("  " + k.name() + " " + std::to_string(archive.record_count(k)));

    Searcher searcher(archive_dir, index_dir);
    timed("queries", [&] {
      for (const auto& text : demo_queries()) {
        const auto q = parse_query(text);
        const auto hits = searcher.execute(q);
        const auto oracle = scan_search(archive, q);
        const auto label = text.size() > 48 ? text.substr(0, 45) + "..." : text;
        line("query " + label + " -> " + std::to_string(hits.size()));
        check("oracle " + label, hits == oracle,
              std::to_string(hits.size()) + " indexed vs " + std::to_string(oracle.size()) + " scanned");
        std::uint64_t bucketed = 0;
        for (const auto& [b, n] : searcher.count(q, Granularity::kWeek)) bucketed += n;
        check("count " + label, bucketed == hits.size(), std::to_string(bucketed) + " bucketed");
      }
    });

    timed("analytics", [&] {
      std::uint64_t total = 0;
      for (const auto& r : volume(searcher, Granularity::kWeek)) total += r.total;
      std::uint64_t stored = 0;
      for (const auto& k : keys) stored += archive.record_count(k);
      check("volume-conservation", total == stored, std::to_string(total) + " of " + std::to_string(stored));
      bool normalized = true;
      for (const auto& r : trend(searcher, Query::match_all(), Granularity::kWeek))
        if (r.total > 0 && r.per_mille != 1000.0) normalized = false;
      check("trend-normalization", normalized, "match-all is 1000 per mille in every non-empty week");
      const auto urls = url_stats(archive);
      line("tweets with url " + std::to_string(urls.tweets_with_url) + " of " + std::to_string(urls.tweets));
      for (std::size_t i = 0; i < std::min<std::size_t>(3, urls.domains.size()); ++i)
        line("  " + urls.domains[i].domain + " " + std::to_string(urls.domains[i].tweets));
      const auto actions = top_actions(searcher, 5);
      for (const auto& a : actions) line("action " + a.token + " " + std::to_string(a.count));
    });
    stage.clear();
  } catch (const std::exception& e) {
    report.failed_stage = stage.empty() ? "unknown" : stage;
    report.failure = e.what();
  }
  try {
    if (fs::exists(opt.workdir)) write_file_atomic(opt.workdir / "report.txt", report.text(true));
  } catch (const std::exception&) {
  }
  return report;
}

}  // namespace tweetvault
