#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(SEPCOV_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t k = fread(buf, 1, sizeof buf, p)) out.append(buf, k);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sepcov_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

TEST_F(Cli, GenerateIsDeterministicAndShaped) {
  ASSERT_EQ(run("generate --d1 3 --d2 2 --n 25 --seed 4 --out " + path("a")).code, 0);
  ASSERT_EQ(run("generate --d1 3 --d2 2 --n 25 --seed 4 --out " + path("b")).code, 0);
  const std::string a = slurp(path("a/data.csv"));
  EXPECT_EQ(a, slurp(path("b/data.csv")));
  EXPECT_EQ(slurp(path("a/truth.json")), slurp(path("b/truth.json")));
  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# sepcov-data v1", 0), 0u);
  int rows = 0;
  std::size_t commas = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  }
  EXPECT_EQ(rows, 25);
  EXPECT_EQ(commas, 5u);
}

TEST_F(Cli, FitGibbsWritesChainsAndSummary) {
  ASSERT_EQ(run("generate --d1 2 --d2 2 --n 50 --seed 1 --out " + path("g")).code, 0);
  const Result r = run("fit --data " + path("g/data.csv") +
                       " --sampler gibbs --n-burn 20 --n-samples 100 --seed 3 --out " + path("f"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string chains = slurp(path("f/chains.csv"));
  std::istringstream in(chains);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# sepcov-chains v1", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "iter,accepted,epsilon,L_used,tr1,tr2,tr_kron,logdet1,logdet2,logdet_kron,cond1,cond2");
  int rows = 0;
  while (std::getline(in, line)) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 100);
  const std::string summary = slurp(path("f/summary.json"));
  EXPECT_NE(summary.find("acceptance_rate"), std::string::npos);
  EXPECT_NE(summary.find("ess_per_it"), std::string::npos);
  EXPECT_NE(summary.find("wall_time_sec"), std::string::npos);
}

TEST_F(Cli, FitSameSeedGivesIdenticalChains) {
  ASSERT_EQ(run("generate --d1 2 --d2 3 --n 40 --seed 2 --out " + path("g")).code, 0);
  const std::string base = "fit --data " + path("g/data.csv") + " --n-adapt 40 --n-burn 10 --n-samples 30 --seed 5 --dump-factors --out ";
  ASSERT_EQ(run(base + path("x")).code, 0);
  ASSERT_EQ(run(base + path("y")).code, 0);
  EXPECT_EQ(slurp(path("x/chains.csv")), slurp(path("y/chains.csv")));
  EXPECT_EQ(slurp(path("x/factors.csv")), slurp(path("y/factors.csv")));
}

TEST_F(Cli, ConfigFileAndErrors) {
  write("ok.json", R"({"seed": 3, "d1": 2, "d2": 2, "n": 30, "sampler": "sglmc",
    "metric": {"kind": "weighted", "omega": 0.3}, "n_adapt": 30, "n_burn": 10, "n_samples": 20,
    "leapfrog": {"kind": "dynamic", "L_max": 32}, "tempering": {"chains": 3, "c1": 0.5}})");
  const Result ok = run("fit --config " + path("ok.json") + " --out " + path("o"));
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_TRUE(fs::exists(path("o/chains.csv")));

  write("unknown.json", R"({"sed": 3})");
  EXPECT_EQ(run("fit --config " + path("unknown.json") + " --out " + path("u")).code, 2);
  write("alpha.json", R"({"metric": {"kind": "regularized", "alpha": 1.0}})");
  EXPECT_EQ(run("fit --config " + path("alpha.json") + " --out " + path("u")).code, 2);
  write("broken.json", "{not json");
  EXPECT_EQ(run("fit --config " + path("broken.json") + " --out " + path("u")).code, 2);
  EXPECT_EQ(run("fit --sampler hmc --out " + path("u")).code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, DataErrors) {
  write("bad.csv", "1,2,3\n4,5\n");
  EXPECT_EQ(run("fit --data " + path("bad.csv") + " --d1 1 --d2 3 --out " + path("u")).code, 3);
  write("nan.csv", "1,2,nan,4\n");
  EXPECT_EQ(run("fit --data " + path("nan.csv") + " --d1 2 --d2 2 --out " + path("u")).code, 3);
  EXPECT_EQ(run("fit --data " + path("missing.csv") + " --out " + path("u")).code, 3);
}

TEST_F(Cli, CompareAndDiagnose) {
  ASSERT_EQ(run("generate --d1 2 --d2 2 --n 40 --seed 1 --out " + path("g")).code, 0);
  ASSERT_EQ(run("fit --data " + path("g/data.csv") + " --sampler gibbs --n-samples 300 --seed 2 --out " + path("a")).code, 0);
  ASSERT_EQ(run("fit --data " + path("g/data.csv") + " --metric product --n-adapt 100 --n-burn 50 --n-samples 300 --seed 3 --out " + path("b")).code, 0);

  const Result self = run("compare " + path("a/chains.csv") + " " + path("a/chains.csv") + " --threshold 1e-12");
  EXPECT_EQ(self.code, 0) << self.out;
  EXPECT_NE(self.out.find("\"ks\""), std::string::npos);

  const Result fail = run("compare " + path("a/chains.csv") + " " + path("b/chains.csv") + " --threshold 0 --columns tr_kron --out " + path("c"));
  EXPECT_EQ(fail.code, 4);
  EXPECT_TRUE(fs::exists(path("c/compare.json")));
  EXPECT_EQ(run("compare " + path("a/chains.csv") + " " + path("b/chains.csv") + " --columns nope").code, 2);

  ASSERT_EQ(run("diagnose " + path("a/chains.csv") + " --max-lag 20 --out " + path("d")).code, 0);
  const std::string acf = slurp(path("d/acf.csv"));
  EXPECT_EQ(acf.rfind("# sepcov-acf v1", 0), 0u);
  EXPECT_NE(acf.find("lag,tr1,tr2,tr_kron,logdet1,logdet2,logdet_kron,cond1,cond2"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("d/diagnostics.json")));
  EXPECT_EQ(run("diagnose " + path("a/chains.csv") + " --max-lag 5000 --out " + path("d")).code, 3);
}

}  // namespace
