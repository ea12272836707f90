#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Run run(const std::string& args) {
  const fs::path tmp = fs::temp_directory_path();
  const fs::path out = tmp / "tripmine_cli_out";
  const fs::path err = tmp / "tripmine_cli_err";
  const std::string cmd = std::string("env -u TRIPMINE_CONFIG \"") + TRIPMINE_CLI + "\" " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

const std::string kFixtures = TRIPMINE_FIXTURES;

}  // namespace

TEST(Cli, GtfsLoadSummary) {
  const auto r = run("gtfs load " + kFixtures + "/gtfs_min");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("stops"), 3);
  EXPECT_EQ(j.at("routes"), 1);
  EXPECT_EQ(j.at("trips"), 1);
  EXPECT_EQ(j.at("stop_times"), 3);
}

TEST(Cli, ErrorsAreMachineReadable) {
  const auto r = run("gtfs load /nonexistent/feed");
  EXPECT_EQ(r.exit_code, 1);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j.at("code"), "MissingFile");
  EXPECT_TRUE(j.contains("message"));
  EXPECT_EQ(run("").exit_code, 1);
  EXPECT_EQ(run("pilot generate --corruption 2 --out /tmp/x").exit_code, 1);
}

TEST(Cli, IngestReports) {
  auto r = run("ingest fcd " + kFixtures + "/fcd.csv");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("rows_ok"), 4);
  r = run("ingest queries " + kFixtures + "/queries.csv");
  EXPECT_EQ(nlohmann::json::parse(r.out).at("rows_ok"), 3);
  r = run("ingest feed " + kFixtures + "/traffic.rss");
  EXPECT_EQ(nlohmann::json::parse(r.out).at("rows_ok"), 3);
  r = run("ingest segments " + kFixtures + "/segments.geojson");
  EXPECT_EQ(nlohmann::json::parse(r.out).at("rows_ok"), 2);
}

TEST(Cli, PilotGenerateIsDeterministicAndEvaluatesClean) {
  const fs::path a = fs::temp_directory_path() / "tripmine_cli_pilot_a";
  const fs::path b = fs::temp_directory_path() / "tripmine_cli_pilot_b";
  fs::remove_all(a);
  fs::remove_all(b);
  ASSERT_EQ(run("pilot generate --seed 7 --out " + a.string()).exit_code, 0);
  ASSERT_EQ(run("pilot generate --seed 7 --out " + b.string()).exit_code, 0);
  EXPECT_EQ(slurp(a / "truth.csv"), slurp(b / "truth.csv"));
  EXPECT_EQ(slurp(a / "traces.jsonl"), slurp(b / "traces.jsonl"));
  const auto r = run("pilot evaluate " + a.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "Mode      Number  Median Duration  Accuracy");
  EXPECT_NE(r.out.find("Total         58"), std::string::npos);
  EXPECT_NE(r.out.find("100%\n", r.out.find("Total")), std::string::npos);
}

TEST(Cli, StoreBackedPipelineAndReports) {
  const fs::path store = fs::temp_directory_path() / "tripmine_cli_store";
  fs::remove_all(store);
  const std::string s = "--store " + store.string() + " ";
  ASSERT_EQ(run(s + "ingest fcd --persist " + kFixtures + "/fcd.csv").exit_code, 0);
  auto r = run(s + "pipeline run");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("attempted"), 0);
  r = run(s + "report stats");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("trip_count"), 0);
  EXPECT_TRUE(fs::exists(store / "store.json"));
  EXPECT_NE(slurp(store / "store.json").find("seg42"), std::string::npos);
}
