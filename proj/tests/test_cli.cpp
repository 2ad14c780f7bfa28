#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ptss_cli.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ptss::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Scratch directory removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ptss_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path / name) << text; }
};

}  // namespace

TEST(Cli, CheckFormat) {
  auto r = cli({"check-format", corpus_path("running.ptss")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("overall: pass"), std::string::npos);
  r = cli({"check-format", corpus_path("wild_no_patience.ptss")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("g_b: violation 2b"), std::string::npos);
}

TEST(Cli, StableModel) {
  auto r = cli({"stable-model", corpus_path("negation_g.ptss"), "--root", "g"});
  EXPECT_EQ(r.code, 0);
  r = cli({"stable-model", corpus_path("two_rule_f.ptss"), "--root", "f", "--json"});
  EXPECT_EQ(r.code, 1);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_FALSE(j.at("complete").get<bool>());
  r = cli({"stable-model", corpus_path("running.ptss"), "--root", "a.delta(a.delta(a.delta(0)))", "--max-depth", "2"});
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, PtsExport) {
  TempDir dir;
  const auto target = (dir.path / "out.pts").string();
  auto r = cli({"pts", corpus_path("weak_steps.ptss"), "--root", "s0", "-o", target});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(target);
  std::stringstream s;
  s << in.rdbuf();
  EXPECT_EQ(*ptss::parse_pts(s.str()).value, corpus_pts("weak_steps.pts"));
  r = cli({"pts", corpus_path("two_rule_f.ptss"), "--root", "f"});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, Bisim) {
  auto r = cli({"bisim", corpus_path("mixed_choice.pts"), "t0", "u1", "--kind", "branching"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("t0 --tau-> {t1: 1} is not matched by u1"), std::string::npos);
  r = cli({"bisim", corpus_path("mixed_choice.pts"), "t0", "u1", "--kind", "pbranching"});
  EXPECT_EQ(r.code, 0);
  r = cli({"bisim", corpus_path("tau_class.pts"), "--kind", "branching"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("{s0, s1, s2, s3, t1, t2, t3, t4}"), std::string::npos) << r.out;
  r = cli({"bisim", corpus_path("mixed_choice.pts"), "t0", "nowhere"});
  EXPECT_EQ(r.code, 2);
  r = cli({"bisim", corpus_path("mixed_choice.pts"), "t0", "u1", "--kind", "strong"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ProbeCongruence) {
  TempDir dir;
  dir.write("pairs", "a.delta(b.delta(0)) | a.delta(tau.delta(b.delta(0)))\n");
  dir.write("contexts", "f([])\n");
  auto r = cli({"probe-congruence", corpus_path("wild_no_patience.ptss"), "--pairs", (dir.path / "pairs").string(), "--contexts",
                (dir.path / "contexts").string()});
  EXPECT_EQ(r.code, 1);
  r = cli({"probe-congruence", corpus_path("wild_patience.ptss"), "--pairs", (dir.path / "pairs").string(), "--contexts",
           (dir.path / "contexts").string()});
  EXPECT_EQ(r.code, 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"check-format", "/nonexistent/spec.ptss"}).code, 2);
}

TEST(Cli, CorpusRunOnShippedCorpus) {
  const auto r = cli({"corpus-run", PTSS_CORPUS_DIR});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("failed: 0"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, CorpusRunReportsAFlippedExpectation) {
  TempDir dir;
  std::string text = read_corpus("negation_g.ptss");
  const std::string from = "# expect: iterations | 2";
  const auto at = text.find(from);
  ASSERT_NE(at, std::string::npos);
  text.replace(at, from.size(), "# expect: iterations | 3");
  dir.write("flipped.ptss", text);
  dir.write("good.pts", read_corpus("mixed_choice.pts"));
  const auto r = cli({"corpus-run", dir.path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL flipped.ptss"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("FAIL good.pts"), std::string::npos);
}

TEST(Cli, CorpusRunEdgeCases) {
  TempDir dir;
  EXPECT_EQ(cli({"corpus-run", dir.path.string()}).code, 0);
  dir.write("bad.pts", "# expect: bisim | branching | x\nstate x\n");
  EXPECT_EQ(cli({"corpus-run", dir.path.string()}).code, 2);
}

TEST(Cli, CorpusRunIsDeterministic) {
  const auto a = cli({"corpus-run", PTSS_CORPUS_DIR, "--json"});
  const auto b = cli({"corpus-run", PTSS_CORPUS_DIR, "--json"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.code, 0);
}
