#include "sparsecombine/cli.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sparsecombine;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "sparsecombine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Cli, StudyFullGridCsv) {
  const auto r = run({"study", "--method", "FG", "--dim", "1", "--n-min", "4", "--n-max", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 6U);
  EXPECT_EQ(rows[0], kCsvHeader);
  EXPECT_EQ(rows[1].substr(0, 9), "FG,1,4,17");
  EXPECT_NE(r.err.find("level_shift=1"), std::string::npos);
  EXPECT_NE(r.err.find("point=0.25"), std::string::npos);
}

TEST(Cli, StudyCsvAndJsonMatch) {
  const std::vector<std::string> base{"study", "--method", "HOSG", "--dim", "2", "--n-min", "2", "--n-max", "5",
                                      "--parallel", "1"};
  auto csv_args = base;
  const auto csv = run(csv_args);
  auto json_args = base;
  json_args.insert(json_args.end(), {"--format", "json"});
  const auto json = run(json_args);
  ASSERT_EQ(csv.code, 0);
  ASSERT_EQ(json.code, 0);
  const auto j = nlohmann::json::parse(json.out);
  const auto rows = lines(csv.out);
  ASSERT_EQ(rows.size() - 1, j.at("records").size());
  for (std::size_t i = 0; i < j.at("records").size(); ++i) {
    const auto fields = cli::split(rows[i + 1], ',');
    EXPECT_EQ(std::stod(fields[5]), j["records"][i]["value"].get<double>());
    EXPECT_EQ(std::stoull(fields[3]), j["records"][i]["dof_unique"].get<std::uint64_t>());
  }
  EXPECT_EQ(j["meta"]["method"], "HOSG");
}

TEST(Cli, StudyIsDeterministic) {
  const std::vector<std::string> args{"study", "--method", "SG", "--dim", "3", "--n-min", "1", "--n-max", "4",
                                      "--format", "json"};
  const auto a = nlohmann::json::parse(run(args).out);
  const auto b = nlohmann::json::parse(run(args).out);
  for (std::size_t i = 0; i < a["records"].size(); ++i) EXPECT_EQ(a["records"][i]["value"], b["records"][i]["value"]);
}

TEST(Cli, StudyBudgetExceeded) {
  const auto r = run({"study", "--method", "HOSG", "--dim", "2", "--n-min", "2", "--n-max", "12", "--budget", "20000"});
  EXPECT_EQ(r.code, 2);
  EXPECT_GT(lines(r.out).size(), 1U);  // partial records were flushed
  EXPECT_NE(r.err.find("budget"), std::string::npos);
}

TEST(Cli, StudyBudgetFromEnvironment) {
  ::setenv(cli::kBudgetEnv, "1000", 1);
  const auto r = run({"study", "--method", "FG", "--dim", "2", "--n-min", "3", "--n-max", "6"});
  ::unsetenv(cli::kBudgetEnv);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, StudyBadConfigs) {
  EXPECT_EQ(run({"study", "--method", "XX"}).code, 3);
  EXPECT_EQ(run({"study", "--method", "SG", "--n-min", "5", "--n-max", "2"}).code, 3);
  EXPECT_EQ(run({"study", "--method", "SG", "--dim", "2", "--point", "0.5"}).code, 3);
  EXPECT_EQ(run({"study", "--method", "SG", "--format", "xml"}).code, 3);
  EXPECT_EQ(run({"study", "--method", "SG", "--level-shift", "3"}).code, 3);
  EXPECT_EQ(run({"study", "--method", "SG", "--parallel", "0"}).code, 3);
  EXPECT_EQ(run({"study"}).code, 3);
  EXPECT_EQ(run({}).code, 3);
  EXPECT_EQ(run({"frobnicate"}).code, 3);
}

TEST(Cli, StudyWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "sparsecombine_cli_study.csv";
  const auto r = run({"study", "--method", "SPLIT2D", "--dim", "2", "--n-min", "3", "--n-max", "5", "--out", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::stringstream content;
  content << in.rdbuf();
  EXPECT_EQ(lines(content.str()).size(), 4U);
  std::filesystem::remove(path);
}

TEST(Cli, VerifyPasses) {
  const auto r = run({"verify", "--d-max", "3"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
  EXPECT_NE(r.out.find("cancellation_system"), std::string::npos);
}

TEST(Cli, VerifyPerturbedWeightsFail) {
  const auto r = run({"verify", "--d-max", "3", "--perturb-alpha1", "10001/10000"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("NO"), std::string::npos);
  EXPECT_EQ(run({"verify", "--d-max", "0"}).code, 3);
}

TEST(Cli, PlanStandard) {
  const auto r = run({"plan", "--dim", "2", "--n", "1", "--kind", "standard"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["coefficient_sum"], "1/1");
  ASSERT_EQ(j["terms"].size(), 5U);
  std::map<std::vector<int>, std::string> terms;
  for (const auto& t : j["terms"]) terms[t["levels"].get<std::vector<int>>()] = t["coeff"].get<std::string>();
  EXPECT_EQ(terms, (std::map<std::vector<int>, std::string>{
                       {{0, 1}, "-1/1"}, {{1, 0}, "-1/1"}, {{0, 2}, "1/1"}, {{1, 1}, "1/1"}, {{2, 0}, "1/1"}}));
}

TEST(Cli, PlanHo) {
  const auto r = run({"plan", "--dim", "1", "--n", "4", "--kind", "ho"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["terms"].size(), 2U);
  EXPECT_EQ(j["terms"][0]["coeff"], "-1/3");
  EXPECT_EQ(j["terms"][1]["coeff"], "4/3");
  EXPECT_EQ(j["coefficient_sum"], "1/1");
  EXPECT_EQ(run({"plan", "--kind", "fancy"}).code, 3);
}

TEST(Cli, SolveWritesCache) {
  const auto path = std::filesystem::temp_directory_path() / "sparsecombine_cli_grid.bin";
  const auto r = run({"solve", "--levels", "3,2", "--point", "0.25,0.5", "--out", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["nodes"], 45);
  std::ifstream in(path, std::ios::binary);
  const auto g = read_grid_function(in);
  EXPECT_EQ(g.level(), (LevelIndex{3, 2}));
  EXPECT_DOUBLE_EQ(multilinear_eval(g, Point{{0.25, 0.5}}), j["value"].get<double>());
  std::filesystem::remove(path);
  EXPECT_EQ(run({"solve", "--levels", "0,2"}).code, 3);
  EXPECT_EQ(run({"solve", "--levels", "a"}).code, 3);
}

TEST(Cli, HelpExitsCleanly) {
  const auto r = run({"study", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--method"), std::string::npos);
}
