#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "support.hpp"
#include "tweetvault/fetcher.hpp"

namespace tv = tweetvault;
namespace fs = std::filesystem;

namespace {

// Records the clock time of every request and can inject failures.
class ScriptedClient final : public tv::LookupClient {
 public:
  ScriptedClient(tv::LookupService& svc, tv::Clock& clock) : inner_(svc, clock), clock_(clock) {}

  tv::LookupResponse lookup(std::span<const tv::TweetId> ids, const std::string& token) override {
    starts.push_back(clock_.now_ms());
    requested.insert(requested.end(), ids.begin(), ids.end());
    if (throttle_probability > 0 && rng_() % 1000 < throttle_probability * 1000) {
      tv::LookupResponse r;
      r.status = tv::LookupResponse::Status::kThrottled;
      r.retry_after_seconds = static_cast<int>(rng_() % 3);
      return r;
    }
    if (reject) {
      tv::LookupResponse r;
      r.status = tv::LookupResponse::Status::kRejected;
      r.error = "HTTP 400";
      return r;
    }
    if (transport_failures > 0) {
      --transport_failures;
      tv::LookupResponse r;
      r.status = tv::LookupResponse::Status::kTransportError;
      r.error = "connection reset";
      return r;
    }
    return inner_.lookup(ids, token);
  }

  std::vector<tv::EpochMs> starts;
  std::vector<tv::TweetId> requested;
  double throttle_probability = 0;
  int transport_failures = 0;
  bool reject = false;

 private:
  tv::InProcessLookupClient inner_;
  tv::Clock& clock_;
  std::mt19937_64 rng_{99};
};

// Lets a test keep a client alive after the fleet that used it is gone.
class Forwarding final : public tv::LookupClient {
 public:
  explicit Forwarding(tv::LookupClient& inner) : inner_(inner) {}
  tv::LookupResponse lookup(std::span<const tv::TweetId> ids, const std::string& token) override {
    return inner_.lookup(ids, token);
  }

 private:
  tv::LookupClient& inner_;
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = tv::read_file(e.path());
  return out;
}

std::vector<tv::TweetId> first_ids(std::size_t n, tv::TweetId start = 1'000'000) {
  std::vector<tv::TweetId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + i;
  return v;
}

void expect_min_gap(const std::vector<tv::EpochMs>& starts, tv::EpochMs interval) {
  for (std::size_t i = 1; i < starts.size(); ++i) ASSERT_GE(starts[i] - starts[i - 1], interval) << i;
}

}  // namespace

TEST(Fetch, RequestStartsRespectTheInterval) {
  support::TempDir tmp;
  tv::LookupService svc({}, 5.0);
  tv::SimulatedClock clock;
  ScriptedClient client(svc, clock);
  tv::RollingGzipSink sink(tmp / "out", "worker-0");
  const auto report =
      tv::run(tv::IdStream(first_ids(1000)), {"t", 5.0}, client, sink, tmp / "cp.json", clock);
  EXPECT_EQ(client.starts.size(), 10u);
  expect_min_gap(client.starts, 5000);
  EXPECT_GE(report.wall_seconds, 45.0);
  EXPECT_EQ(report.batches_done, 10u);
  EXPECT_EQ(report.found + report.missing, 1000u);
  EXPECT_EQ(report.throttle_events, 0u);
  EXPECT_EQ(client.requested, first_ids(1000));
}

TEST(Fetch, RandomTracesNeverViolateSpacing) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    support::TempDir tmp;
    const double interval = 0.5 + static_cast<double>(rng() % 100) / 10.0;
    tv::LookupService svc({}, interval);
    tv::SimulatedClock clock(static_cast<tv::EpochMs>(rng() % 1'000'000));
    ScriptedClient client(svc, clock);
    client.throttle_probability = 0.2;
    tv::RollingGzipSink sink(tmp / "out", "w");
    tv::FetchOptions opt;
    opt.batch_size = 1 + rng() % 100;
    const auto n = 2 * opt.batch_size + rng() % 2000;
    tv::run(tv::IdStream(first_ids(n)), {"t", interval}, client, sink, tmp / "cp.json", clock, opt);
    expect_min_gap(client.starts, static_cast<tv::EpochMs>(std::llround(interval * 1000)));
    EXPECT_GE(client.starts.size(), (n + opt.batch_size - 1) / opt.batch_size);
  }
}

TEST(Fetch, ThrottlingDoesNotChangeTheOutput) {
  support::TempDir tmp;
  auto fetch = [&](const fs::path& dir, double throttle, double server_interval) {
    tv::LookupService local({}, server_interval);
    tv::SimulatedClock clock;
    ScriptedClient client(local, clock);
    client.throttle_probability = throttle;
    tv::RollingGzipSink sink(dir / "out", "w", 700);
    auto r = tv::run(tv::IdStream(first_ids(5000)), {"t", 1.0}, client, sink, dir / "cp.json", clock);
    return std::pair{r, snapshot(dir / "out")};
  };
  auto [plain, plain_files] = fetch(tmp / "a", 0, 1.0);
  // Faster client than server: every other request is throttled by the server.
  auto [slow, slow_files] = fetch(tmp / "b", 0, 2.5);
  auto [chaos, chaos_files] = fetch(tmp / "c", 0.3, 1.0);
  EXPECT_EQ(plain.throttle_events, 0u);
  EXPECT_GT(slow.throttle_events, 0u);
  EXPECT_GT(chaos.throttle_events, 0u);
  EXPECT_EQ(plain_files, slow_files);
  EXPECT_EQ(plain_files, chaos_files);
  EXPECT_EQ(plain.found, slow.found);
}

TEST(Fetch, TransportErrorsBackOffThenAbortResumably) {
  support::TempDir tmp;
  tv::LookupService svc({}, 0.001);
  tv::SimulatedClock clock;
  ScriptedClient client(svc, clock);
  tv::RollingGzipSink sink(tmp / "out", "w");
  tv::FetchOptions opt;
  // Two good batches, then a dead endpoint.
  opt.after_checkpoint = [&](std::uint64_t k) {
    if (k == 1) client.transport_failures = 1000;
  };
  EXPECT_THROW(tv::run(tv::IdStream(first_ids(500)), {"t", 0.001}, client, sink, tmp / "cp.json", clock, opt),
               tv::FetchAborted);
  ASSERT_EQ(client.starts.size(), 2u + 8u);
  // Gaps after failures follow 1, 2, 4, ... seconds, capped at 60.
  for (std::size_t i = 3; i < client.starts.size(); ++i) {
    const tv::EpochMs expect = std::min<tv::EpochMs>(60'000, 1000LL << (i - 3));
    EXPECT_GE(client.starts[i] - client.starts[i - 1], expect) << i;
    EXPECT_LT(client.starts[i] - client.starts[i - 1], expect + 10) << i;
  }
  auto cp = tv::Checkpoint::load(tmp / "cp.json");
  ASSERT_TRUE(cp);
  EXPECT_EQ(cp->next_batch_index, 2u);

  // Recovery after a few failures completes and requests each id once more at most.
  ScriptedClient healthy(svc, clock);
  healthy.transport_failures = 3;
  tv::RollingGzipSink sink2(tmp / "out", "w");
  auto r = tv::run(tv::IdStream(first_ids(500)), {"t", 0.001}, healthy, sink2, tmp / "cp.json", clock);
  EXPECT_EQ(r.batches_done, 5u);
  EXPECT_EQ(r.ids_requested, 500u);
  EXPECT_GE(r.transport_errors, 3u);
}

TEST(Fetch, RejectedBatchAbortsImmediately) {
  support::TempDir tmp;
  tv::LookupService svc({}, 0.001);
  tv::SimulatedClock clock;
  ScriptedClient client(svc, clock);
  client.reject = true;
  tv::RollingGzipSink sink(tmp / "out", "w");
  EXPECT_THROW(tv::run(tv::IdStream(first_ids(300)), {"t", 0.001}, client, sink, tmp / "cp.json", clock),
               tv::FetchAborted);
  EXPECT_EQ(client.starts.size(), 1u);
}

TEST(Fetch, CrashAndRestartIsByteIdentical) {
  const auto ids = first_ids(1000, 40'000'000);
  support::TempDir ref;
  {
    tv::LookupService svc({}, 5.0);
    tv::SimulatedClock clock;
    tv::InProcessLookupClient client(svc, clock);
    tv::RollingGzipSink sink(ref / "out", "w", 150, true);
    tv::run(tv::IdStream(ids), {"t", 5.0}, client, sink, ref / "cp.json", clock);
  }
  const auto expect = snapshot(ref / "out");

  for (bool after_sink : {true, false}) {
    support::TempDir tmp;
    tv::LookupService svc({}, 5.0);
    tv::SimulatedClock clock;
    ScriptedClient client(svc, clock);
    {
      tv::RollingGzipSink sink(tmp / "out", "w", 150, true);
      tv::FetchOptions opt;
      auto crash = [](std::uint64_t k) {
        if (k == 3) throw std::runtime_error("killed");
      };
      (after_sink ? opt.after_sink : opt.after_checkpoint) = crash;
      EXPECT_THROW(tv::run(tv::IdStream(ids), {"t", 5.0}, client, sink, tmp / "cp.json", clock, opt),
                   std::runtime_error);
    }
    tv::RollingGzipSink sink(tmp / "out", "w", 150, true);
    auto r = tv::run(tv::IdStream(ids), {"t", 5.0}, client, sink, tmp / "cp.json", clock);
    EXPECT_EQ(snapshot(tmp / "out"), expect);
    EXPECT_EQ(r.ids_requested, 1000u);
    EXPECT_EQ(r.batches_done, 10u);
    // The restart re-requests at most the interrupted batch.
    EXPECT_EQ(client.requested.size(), after_sink ? 1100u : 1000u);
    expect_min_gap(client.starts, 5000);
  }
}

TEST(Fetch, SinkRollsAtTheRecordBoundary) {
  support::TempDir tmp;
  tv::CorpusSpec spec;
  spec.existence_rate = 1;
  spec.id_domain = tv::RangeTable::parse("1:100000");
  tv::LookupService svc(spec, 0.001);
  tv::SimulatedClock clock;
  tv::InProcessLookupClient client(svc, clock);
  tv::RollingGzipSink sink(tmp / "out", "w", 250);
  tv::run(tv::IdStream(first_ids(1000, 1)), {"t", 0.001}, client, sink, tmp / "cp.json", clock);
  std::vector<std::size_t> counts;
  for (std::uint64_t seq = 0; fs::exists(sink.file_path(seq)); ++seq) {
    tv::GzipLineReader r(sink.file_path(seq));
    std::string line;
    std::size_t n = 0;
    while (r.next(line)) ++n;
    counts.push_back(n);
  }
  EXPECT_EQ(counts, (std::vector<std::size_t>{250, 250, 250, 250}));
}

TEST(Fetch, FoundRateMatchesExistenceModel) {
  support::TempDir tmp;
  tv::LookupService svc({}, 0.001);
  tv::SimulatedClock clock;
  tv::InProcessLookupClient client(svc, clock);
  tv::RollingGzipSink sink(tmp / "out", "w");
  const auto stream = tv::enumerate(tv::RangeTable::builtin()).window(50'000'000, 100'000);
  auto r = tv::run(stream, {"t", 0.001}, client, sink, tmp / "cp.json", clock);
  EXPECT_EQ(r.ids_requested, 100'000u);
  EXPECT_NEAR(static_cast<double>(r.found) / static_cast<double>(r.ids_requested), 0.647, 0.01);
}

TEST(Fleet, ShardsAreDisjointAndSpeedUpLinearly) {
  const auto ids = first_ids(30'000, 2'000'000);
  auto fleet = [&](const fs::path& dir, std::size_t workers) {
    tv::LookupService svc({}, 5.0);
    std::vector<std::unique_ptr<ScriptedClient>> clients(workers);
    tv::FleetFactories make;
    make.clock = [](std::size_t) { return std::make_unique<tv::SimulatedClock>(); };
    make.client = [&](std::size_t w, tv::Clock& c) {
      clients[w] = std::make_unique<ScriptedClient>(svc, c);
      return std::unique_ptr<tv::LookupClient>(std::make_unique<Forwarding>(*clients[w]));
    };
    make.sink = [&](std::size_t w) {
      return std::make_unique<tv::RollingGzipSink>(dir / "out", "worker-" + std::to_string(w));
    };
    std::vector<tv::Credential> creds;
    for (std::size_t w = 0; w < workers; ++w) creds.push_back({"token-" + std::to_string(w), 5.0});
    auto report = tv::run_fleet(tv::IdStream(ids), creds, make, dir / "cp");
    std::vector<tv::TweetId> all;
    for (const auto& c : clients) {
      expect_min_gap(c->starts, 5000);
      all.insert(all.end(), c->requested.begin(), c->requested.end());
    }
    return std::pair{report, all};
  };
  support::TempDir a, b;
  auto [single, single_ids] = fleet(a.path(), 1);
  auto [many, many_ids] = fleet(b.path(), 30);
  EXPECT_TRUE(many.complete());
  EXPECT_EQ(single_ids, ids);
  std::sort(many_ids.begin(), many_ids.end());
  EXPECT_EQ(many_ids, ids);
  EXPECT_EQ(single.found, many.found);
  EXPECT_EQ(many.throttle_events, 0u);
  EXPECT_NEAR(many.wall_seconds, single.wall_seconds / 30, 5.0);

  // One credential behaves exactly like a plain run.
  support::TempDir c;
  tv::LookupService svc({}, 5.0);
  tv::SimulatedClock clock;
  tv::InProcessLookupClient client(svc, clock);
  tv::RollingGzipSink sink(c / "out", "worker-0");
  auto plain = tv::run(tv::IdStream(ids), {"token-0", 5.0}, client, sink, c / "cp.json", clock);
  EXPECT_EQ(plain.found, single.found);
  EXPECT_DOUBLE_EQ(plain.wall_seconds, single.wall_seconds);
  EXPECT_EQ(snapshot(c / "out"), snapshot(a / "out"));
}

TEST(Fleet, AbortingWorkerLeavesOthersIntact) {
  support::TempDir tmp;
  tv::LookupService svc({}, 0.001);
  tv::FleetFactories make;
  make.clock = [](std::size_t) { return std::make_unique<tv::SimulatedClock>(); };
  make.client = [&](std::size_t w, tv::Clock& c) {
    auto p = std::make_unique<ScriptedClient>(svc, c);
    if (w == 1) p->transport_failures = 1000;
    return std::unique_ptr<tv::LookupClient>(std::move(p));
  };
  make.sink = [&](std::size_t w) {
    return std::make_unique<tv::RollingGzipSink>(tmp / "out", "worker-" + std::to_string(w));
  };
  std::vector<tv::Credential> creds{{"a", 0.001}, {"b", 0.001}, {"c", 0.001}};
  auto report = tv::run_fleet(tv::IdStream(first_ids(3000)), creds, make, tmp / "cp");
  ASSERT_EQ(report.worker_errors.size(), 1u);
  EXPECT_NE(report.worker_errors[0].find("worker 1"), std::string::npos);
  EXPECT_EQ(report.ids_requested, 2000u);
  EXPECT_EQ(tv::Checkpoint::load(tv::worker_checkpoint(tmp / "cp", 0))->next_batch_index, 10u);
  EXPECT_EQ(tv::Checkpoint::load(tv::worker_checkpoint(tmp / "cp", 2))->next_batch_index, 10u);
  EXPECT_THROW(tv::run_fleet(tv::IdStream(first_ids(10)), {}, make, tmp / "cp2"), std::invalid_argument);
}
