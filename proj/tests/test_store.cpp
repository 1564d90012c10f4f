#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "support.hpp"
#include "tweetvault/store.hpp"

namespace tv = tweetvault;
namespace fs = std::filesystem;
using support::at;
using support::record;

TEST(Partition, KnownKeys) {
  EXPECT_EQ(tv::partition_key(at(2006, 7, 15, 12)), tv::PartitionKey::year2006());
  EXPECT_EQ(tv::partition_key(at(2008, 11, 4)), tv::PartitionKey::month(2008, 11));
  EXPECT_EQ(tv::partition_key(at(2009, 2, 10)), tv::PartitionKey::week2009(7));
  EXPECT_EQ(tv::partition_key(at(2009, 1, 1)), tv::PartitionKey::week2009(1));
  EXPECT_EQ(tv::partition_key(at(2009, 7, 31, 23, 59, 59) + 999), tv::PartitionKey::week2009(31));
  EXPECT_TRUE(tv::partition_key(at(2009, 8, 1)).is_quarantine());
  EXPECT_TRUE(tv::partition_key(at(2006, 2, 28, 23, 59, 59)).is_quarantine());
  EXPECT_EQ(tv::PartitionKey::month(2007, 3).name(), "2007-03");
  EXPECT_EQ(tv::PartitionKey::week2009(7).name(), "2009-W07");
  for (const auto& k : tv::all_partitions()) EXPECT_EQ(tv::PartitionKey::parse(k.name()), k);
  EXPECT_FALSE(tv::PartitionKey::parse("2009-13").has_value());
  EXPECT_FALSE(tv::PartitionKey::parse("2010-W01").has_value());
  EXPECT_EQ(tv::all_partitions().size(), 1u + 24u + 31u);
}

TEST(Partition, TotalDisjointAndOrdered) {
  const tv::ArchiveBounds b;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<tv::EpochMs> ts(b.begin, b.end - 1);
  std::vector<tv::EpochMs> samples(1'000'000);
  for (auto& t : samples) t = ts(rng);
  std::sort(samples.begin(), samples.end());
  const auto all = tv::all_partitions(b);
  tv::PartitionKey prev = tv::PartitionKey::year2006();
  for (auto t : samples) {
    const auto k = tv::partition_key(t, b);
    ASSERT_FALSE(k.is_quarantine());
    ASSERT_GE(k, prev);
    prev = k;
    const auto span = tv::partition_span(k, b);
    ASSERT_LE(span.begin, t);
    ASSERT_LT(t, span.end);
  }
  // Spans tile the bounds with no gap or overlap.
  EXPECT_EQ(tv::partition_span(all.front(), b).begin, b.begin);
  EXPECT_EQ(tv::partition_span(all.back(), b).end, b.end);
  for (std::size_t i = 1; i < all.size(); ++i)
    EXPECT_EQ(tv::partition_span(all[i - 1], b).end, tv::partition_span(all[i], b).begin);
}

TEST(Partition, RangesSelectIntersectingPartitionsOnly) {
  using K = tv::PartitionKey;
  EXPECT_EQ(tv::partitions_for_range(at(2009, 1, 5), at(2009, 1, 25)),
            (std::vector<K>{K::week2009(2), K::week2009(3), K::week2009(4)}));
  EXPECT_EQ(tv::partitions_for_range(at(2008, 6, 1), at(2008, 6, 30, 23, 59, 59)), (std::vector<K>{K::month(2008, 6)}));
  EXPECT_EQ(tv::partitions_for_range(tv::kTimeMin, tv::kTimeMax), tv::all_partitions());
  EXPECT_EQ(tv::partitions_for_range(at(2008, 12, 31), at(2009, 1, 1)),
            (std::vector<K>{K::month(2008, 12), K::week2009(1)}));
  EXPECT_TRUE(tv::partitions_for_range(at(2010, 1, 1), at(2011, 1, 1)).empty());
  EXPECT_THROW(tv::partitions_for_range(2, 1), std::invalid_argument);

  std::mt19937_64 rng(4);
  const tv::ArchiveBounds b;
  std::uniform_int_distribution<tv::EpochMs> ts(b.begin - tv::kMsPerWeek, b.end + tv::kMsPerWeek);
  for (int i = 0; i < 2000; ++i) {
    auto t0 = ts(rng), t1 = ts(rng);
    if (t0 > t1) std::swap(t0, t1);
    const auto keys = tv::partitions_for_range(t0, t1);
    for (const auto& k : tv::all_partitions()) {
      const auto s = tv::partition_span(k);
      const bool intersects = s.begin <= t1 && t0 < s.end;
      EXPECT_EQ(std::find(keys.begin(), keys.end(), k) != keys.end(), intersects);
    }
  }
}

TEST(Archive, SegmentsPerPartitionAndSequenceNumbers) {
  support::TempDir tmp;
  tv::ArchiveWriter w(tmp / "a");
  for (int i = 0; i < 10; ++i) {
    const auto ts = i < 3 ? at(2006, 5, 1 + i) : i < 7 ? at(2008, 2, 1 + i) : at(2009, 3, 2, i);
    w.append(record(1000 + i, ts, "record " + std::to_string(i)));
  }
  auto segs = w.flush();
  ASSERT_EQ(segs.size(), 3u);
  std::uint64_t total = 0;
  for (const auto& s : segs) {
    total += s.record_count;
    EXPECT_EQ(s.seq, 0u);
    EXPECT_LE(s.min_ts, s.max_ts);
  }
  EXPECT_EQ(total, 10u);
  w.append(record(2000, at(2008, 2, 20), "later"));
  auto more = w.flush();
  ASSERT_EQ(more.size(), 1u);
  EXPECT_EQ(more[0].seq, 1u);
  EXPECT_TRUE(w.flush().empty());

  // A fresh writer continues the sequence from the manifest.
  tv::ArchiveWriter again(tmp / "a");
  again.append(record(2001, at(2008, 2, 21), "again"));
  EXPECT_EQ(again.flush()[0].seq, 2u);
  tv::ArchiveReader r(tmp / "a");
  EXPECT_EQ(r.record_count(tv::PartitionKey::month(2008, 2)), 6u);
  EXPECT_EQ(r.segments(tv::PartitionKey::month(2008, 2)).size(), 3u);
}

TEST(Archive, ReadBackIsByteIdenticalInInsertionOrder) {
  support::TempDir tmp;
  std::vector<tv::DehydratedTweet> recs;
  const std::vector<std::string> texts = {"plain ascii", "emoji 😀🎉 test", "ایران آزادی #iranelection",
                                          "שלום עולם", "日本語のテキスト", "mixed é́ combining",
                                          "quote \" backslash \\ tab\t newline\\n"};
  for (std::size_t i = 0; i < 140; ++i) {
    auto r = record(5000 - i, at(2008, 7, 1) + static_cast<tv::EpochMs>(i % 13) * 3'600'000, texts[i % texts.size()]);
    if (i % 5 == 0) {
      r.in_reply_to_status_id_str = std::to_string(10 + i);
      r.in_reply_to_user_id_str = std::to_string(20 + i);
    }
    recs.push_back(r);
  }
  support::write_archive(tmp / "a", recs, 50);
  tv::ArchiveReader r(tmp / "a");
  const auto key = tv::PartitionKey::month(2008, 7);
  const auto segs = r.segments(key);
  ASSERT_EQ(segs.size(), 3u);
  std::size_t i = 0;
  for (const auto& s : segs) {
    r.read_segment(s, [&](const tv::DehydratedTweet& rec, std::string_view line) {
      ASSERT_LT(i, recs.size());
      EXPECT_EQ(rec, recs[i]);
      EXPECT_EQ(line, tv::to_json_line(recs[i]));
      ++i;
    });
  }
  EXPECT_EQ(i, recs.size());

  // Partition scans merge segments by (timestamp, id).
  std::vector<std::pair<tv::EpochMs, tv::TweetId>> seen;
  r.scan(key, [&](const tv::DehydratedTweet& d) { seen.push_back({d.timestamp, d.id()}); });
  EXPECT_EQ(seen.size(), recs.size());
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
}

TEST(Archive, ScanOfAWeekYieldsOnlyThatWeek) {
  support::TempDir tmp;
  auto recs = support::synthetic_records(3000);
  support::write_archive(tmp / "a", recs);
  tv::ArchiveReader r(tmp / "a");
  std::uint64_t total = 0;
  r.scan_all([&](const tv::DehydratedTweet&) { ++total; });
  std::uint64_t in_range = 0;
  for (const auto& d : recs) in_range += !tv::partition_key(d.timestamp).is_quarantine();
  EXPECT_EQ(total, recs.size());
  for (const auto& k : r.partitions()) {
    if (k.kind() != tv::PartitionKey::Kind::kWeek2009) continue;
    const auto span = tv::partition_span(k);
    r.scan(k, [&](const tv::DehydratedTweet& d) {
      EXPECT_GE(d.timestamp, span.begin);
      EXPECT_LT(d.timestamp, span.end);
    });
  }
  std::vector<std::string> first, second;
  r.scan_all([&](const tv::DehydratedTweet& d) { first.push_back(d.id_str); });
  r.scan_all([&](const tv::DehydratedTweet& d) { second.push_back(d.id_str); });
  EXPECT_EQ(first, second);
  EXPECT_EQ(in_range, recs.size());
}

TEST(Archive, OutOfRangeRecordsAreQuarantined) {
  support::TempDir tmp;
  tv::ArchiveWriter w(tmp / "a");
  w.append(record(1, at(2005, 12, 31), "too early"));
  w.append(record(2, at(2009, 9, 1), "too late"));
  w.append(record(3, at(2007, 1, 1), "fine"));
  w.flush();
  EXPECT_EQ(w.quarantined(), 2u);
  tv::ArchiveReader r(tmp / "a");
  EXPECT_EQ(r.partitions(), (std::vector<tv::PartitionKey>{tv::PartitionKey::month(2007, 1),
                                                            tv::PartitionKey::quarantine()}));
  EXPECT_EQ(r.record_count(tv::PartitionKey::quarantine()), 2u);
}

TEST(Archive, CorruptSegmentIsNamedAndOthersStillRead) {
  support::TempDir tmp;
  std::vector<tv::DehydratedTweet> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(record(100 + i, at(2007, 1 + i % 3, 10), "x " + std::to_string(i)));
  support::write_archive(tmp / "a", recs);
  tv::ArchiveReader r(tmp / "a");
  const auto bad = r.segments(tv::PartitionKey::month(2007, 2))[0].path;
  {
    auto bytes = tv::read_file(bad);
    bytes.resize(bytes.size() / 2);
    std::ofstream(bad, std::ios::binary | std::ios::trunc) << bytes;
  }
  try {
    r.scan(tv::PartitionKey::month(2007, 2), [](const tv::DehydratedTweet&) {});
    FAIL();
  } catch (const tv::StoreError& e) {
    EXPECT_NE(std::string(e.what()).find(bad.string()), std::string::npos) << e.what();
  }
  std::vector<std::string> errors;
  std::uint64_t n = 0;
  r.scan_all([&](const tv::DehydratedTweet&) { ++n; }, &errors);
  EXPECT_EQ(n, 67u);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("segment-000000"), std::string::npos);
  EXPECT_THROW(r.scan_all([](const tv::DehydratedTweet&) {}), tv::StoreError);
}

TEST(Archive, RecordInWrongPartitionIsDetected) {
  support::TempDir tmp;
  support::write_archive(tmp / "a", {record(1, at(2007, 5, 5), "x")});
  tv::ArchiveReader r(tmp / "a");
  const auto seg = r.segments(tv::PartitionKey::month(2007, 5))[0];
  {
    tv::GzipFileWriter w(seg.path);
    w.write_line(tv::to_json_line(record(1, at(2007, 6, 5), "x")));
    w.commit();
  }
  EXPECT_THROW(r.load_partition(tv::PartitionKey::month(2007, 5)), tv::StoreError);
}

TEST(Archive, IngestDirectoryCountsAndRejects) {
  support::TempDir tmp;
  fs::create_directories(tmp / "in");
  {
    tv::GzipFileWriter w(tmp / "in" / "worker-0-000000.ndjson.gz");
    w.write_line(tv::to_json_line(record(10, at(2007, 3, 3), "a")));
    w.write_line("garbage");
    w.write_line(tv::to_json_line(record(11, at(2004, 3, 3), "b")));
    w.write_line(tv::to_json_line(record(12, at(2009, 3, 3), "c")));
    w.commit();
  }
  tv::ArchiveWriter writer(tmp / "a");
  const auto s = tv::ingest_directory(tmp / "in", writer);
  EXPECT_EQ(s.read, 4u);
  EXPECT_EQ(s.stored, 3u);
  EXPECT_EQ(s.rejected, 1u);
  EXPECT_EQ(s.quarantined, 1u);
  EXPECT_EQ(s.segments.size(), 3u);
}
