#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(HIERFOLIO_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (std::string(HIERFOLIO_CLI_PATH).empty()) GTEST_SKIP() << "command-line tool not built";
  }
};

TEST_F(Cli, ValidateConfigReportsKeyPaths) {
  const auto bad = write_config("hierfolio_cli_bad.json", R"({"reward":{"alpha2":-1},"seeds":"3..1"})");
  const auto r = run("validate-config --config " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("reward.alpha2"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("seeds"), std::string::npos) << r.output;
  fs::remove(bad);
}

TEST_F(Cli, ValidateConfigEchoesDefaults) {
  const auto good = write_config("hierfolio_cli_good.json", R"({"seeds":"0..1"})");
  const auto r = run("validate-config --config " + good.string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("\"alpha3\": 0.5"), std::string::npos) << r.output;
  fs::remove(good);
}

TEST_F(Cli, SentimentValidate) {
  const auto ok = write_config("hierfolio_cli_sent.csv", "month,ticker,score,n_articles\n2020-03,GC=F,0.42,17\n");
  EXPECT_EQ(run("sentiment validate " + ok.string()).code, 0);
  const auto bad = write_config("hierfolio_cli_sent_bad.csv", "month,ticker,score,n_articles\n2020-03,GC=F,1.42,17\n");
  const auto r = run("sentiment validate " + bad.string());
  EXPECT_NE(r.code, 0);
  fs::remove(ok);
  fs::remove(bad);
}

TEST_F(Cli, UnknownCommandFails) { EXPECT_NE(run("frobnicate").code, 0); }
