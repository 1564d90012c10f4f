#include <gtest/gtest.h>
#include <sys/wait.h>

#include <fstream>

#include "support.hpp"

namespace tv = tweetvault;
namespace fs = std::filesystem;
using support::at;
using support::record;

namespace {

struct Outcome {
  int rc = -1;
  std::string out;
  std::string err;
};

Outcome cli(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string(TWEETVAULT_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Outcome r;
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = tv::read_file(out);
  r.err = tv::read_file(err);
  return r;
}

class Cli : public ::testing::Test {
 protected:
  Outcome run(const std::string& args) { return cli(args, dir.path()); }
  support::TempDir dir;
};

}  // namespace

TEST_F(Cli, IdsCountIsTheDeduplicatedBuiltinTotal) {
  const auto r = run("ids count");
  EXPECT_EQ(r.rc, 0) << r.err;
  EXPECT_EQ(r.out, std::to_string(tv::count(tv::RangeTable::builtin())) + "\n");
  EXPECT_EQ(r.out, "2292166146\n");
  const auto raw = run("ids count --policy raw");
  EXPECT_EQ(std::stoull(raw.out) - std::stoull(r.out), 52u);
}

TEST_F(Cli, IdsEmitHonorsShardsAndLimit) {
  const auto all = run("ids emit --limit 5");
  ASSERT_EQ(all.rc, 0) << all.err;
  std::string want;
  const auto stream = tv::enumerate(tv::RangeTable::builtin());
  for (std::uint64_t i = 0; i < 5; ++i) want += std::to_string(stream.at(i)) + "\n";
  EXPECT_EQ(all.out, want);
  const auto shard = run("ids emit --shards 4 --shard-index 3 --limit 2");
  const auto s3 = tv::shard(stream, 4)[3];
  EXPECT_EQ(shard.out, std::to_string(s3.at(0)) + "\n" + std::to_string(s3.at(1)) + "\n");
}

TEST_F(Cli, PlanReportsCollectionDays) {
  auto r = run("plan --ids 3061013977");
  EXPECT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.out.find("ids per day   1728000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("collection    1771 days"), std::string::npos) << r.out;
  r = run("plan --ids 3061013977 --workers 30 --format json");
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto j = tv::json::parse(r.out);
  EXPECT_EQ(j[0]["whole_days"], 59);
  EXPECT_EQ(j[0]["ids_per_day"], 51840000);
  r = run("plan storage --tweets 1483823453");
  EXPECT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.out.find("compressed    89.03 GB"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("decompressed  741.91 GB"), std::string::npos) << r.out;
}

TEST_F(Cli, ConfigFileSuppliesDefaults) {
  std::ofstream(dir / "tv.conf") << "# collection settings\nworkers = 30\ninterval = 5\n";
  auto r = run("--config " + (dir / "tv.conf").string() + " plan --ids 3061013977");
  EXPECT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.out.find("workers       30"), std::string::npos) << r.out;
  // Command-line options override the file.
  r = run("--config " + (dir / "tv.conf").string() + " plan --ids 3061013977 --workers 2");
  EXPECT_NE(r.out.find("workers       2\n"), std::string::npos) << r.out;
  std::ofstream(dir / "bad.conf") << "colour = blue\n";
  r = run("--config " + (dir / "bad.conf").string() + " plan");
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
  EXPECT_EQ(run("--config " + (dir / "missing.conf").string() + " plan").rc, 2);
}

TEST_F(Cli, PipelineFromSampleToSearch) {
  const auto stream = tv::enumerate(tv::RangeTable::builtin());
  {
    std::ofstream ids(dir / "ids.txt");
    for (std::uint64_t i = 0; i < 3000; ++i) ids << stream.at(stream.size() - 1 - i * 1000) << "\n";
  }
  auto r = run("mock sample --dehydrated --ids " + (dir / "ids.txt").string() + " --out " + (dir / "dehydrated").string());
  ASSERT_EQ(r.rc, 0) << r.err;
  r = run("ingest --in " + (dir / "dehydrated").string() + " --archive " + (dir / "archive").string());
  ASSERT_EQ(r.rc, 0) << r.err;

  // Searching before indexing names the missing partitions.
  r = run("search --archive " + (dir / "archive").string() + " --query the");
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.err.find("2009-W"), std::string::npos) << r.err;

  r = run("index build --archive " + (dir / "archive").string());
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_TRUE(fs::is_directory(dir / "archive.index"));

  tv::Searcher s(dir / "archive", dir / "archive.index");
  const auto want = s.execute(tv::parse_query("the OR a"), {}, 10);
  ASSERT_FALSE(want.empty());
  r = run("search --archive " + (dir / "archive").string() + " --query 'the OR a' --limit 10 --format json");
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto j = tv::json::parse(r.out);
  ASSERT_EQ(j.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(j[i]["id"], want[i].id_str);
    EXPECT_EQ(j[i]["text"], want[i].text);
  }
  r = run("search --archive " + (dir / "archive").string() + " --query 'the OR a' --count-only");
  EXPECT_EQ(r.out, std::to_string(s.execute(tv::parse_query("the OR a")).size()) + "\n");

  for (const char* cmd : {"volume --bucket month", "trend --query the", "actions --top 5", "urls", "urls --summary",
                          "archive stats"}) {
    r = run(std::string(cmd) + " --archive " + (dir / "archive").string());
    EXPECT_EQ(r.rc, 0) << cmd << ": " << r.err;
    EXPECT_FALSE(r.out.empty()) << cmd;
  }
  r = run("search --archive " + (dir / "archive").string() + " --query '\"unterminated'");
  EXPECT_EQ(r.rc, 2);
}

TEST_F(Cli, BadUsageExitsWithTwo) {
  for (const char* args : {"", "frobnicate", "plan --ids", "plan --ids lots", "ids emit --policy maybe",
                           "search --query", "volume --bucket fortnight", "search --archive x --query 'a' --format xml"})
    EXPECT_EQ(run(args).rc, 2) << args;
}

TEST_F(Cli, HelpAtEveryLevel) {
  for (const char* cmd : {"", "ids", "ids count", "ids emit", "plan", "plan storage", "mock", "mock serve", "mock sample",
                          "fetch", "fetch run", "dehydrate", "ingest", "archive", "archive stats", "index", "index build",
                          "search", "trend", "volume", "actions", "urls", "demo"}) {
    const auto r = run(std::string(cmd) + " --help");
    EXPECT_EQ(r.rc, 0) << cmd;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << cmd << ": " << r.out;
  }
}
