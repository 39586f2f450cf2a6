#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "invsdp/report.hpp"

namespace fs = std::filesystem;
using invsdp::Json;

namespace {

std::string bench(const std::string& name) { return std::string(INVSDP_BENCH_DIR) + "/" + name; }

struct Cli : ::testing::Test {
  fs::path dir;
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("invsdp-cli-" + std::string(info->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& args, const std::string& env = "") {
    std::string cmd = env + " '" + std::string(INVSDP_CLI) + "' " + args + " 2>" + (dir / "stderr").string();
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  std::string file(const std::string& name) const { return (dir / name).string(); }
  static std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
};

}  // namespace

TEST_F(Cli, MaskPrintsTheSolvedEquality) {
  ASSERT_EQ(run("mask " + bench("freire1.inv") + " --relax-max 3 -o " + file("m.json")), 0);
  auto j = Json::parse(slurp(file("m.json")));
  EXPECT_EQ(j["status"], "found");
  EXPECT_NE(slurp(file("m.json")).find("y == 2x + r^2 - r"), std::string::npos);
}

TEST_F(Cli, GeneratorReportsTheParameterCount) {
  ASSERT_EQ(run("gen-sumpower -k 2 -d 10 -o " + file("s.inv")), 0);
  std::string text = slurp(file("s.inv"));
  EXPECT_NE(text.find("66 template parameters"), std::string::npos);
}

TEST_F(Cli, OutputIsDeterministicUpToTimings) {
  for (int k = 0; k < 2; ++k) {
    ASSERT_EQ(run("mask " + bench("cohencu.inv") + " -o " + file("m" + std::to_string(k) + ".json")), 0);
    EXPECT_EQ(run("cluster " + bench("contract.inv") + " --degree-max 2 --seed 5 -o " +
                  file("c" + std::to_string(k) + ".json")),
              0);
  }
  for (const char* stem : {"m", "c"}) {
    auto a = invsdp::strip_timings(Json::parse(slurp(file(std::string(stem) + "0.json"))));
    auto b = invsdp::strip_timings(Json::parse(slurp(file(std::string(stem) + "1.json"))));
    EXPECT_EQ(invsdp::dump(a), invsdp::dump(b)) << stem;
  }
}

TEST_F(Cli, VerifyExitCodes) {
  {
    std::ofstream f(file("good.json"));
    f << R"({"constraints": [{"poly": "y - 2x - r^2 + r", "relation": "=="}, {"poly": "-x", "relation": "<="}]})";
  }
  {
    std::ofstream f(file("bad.json"));
    f << R"({"constraints": [{"poly": "x^2 - 0.1", "relation": "<="}]})";
  }
  EXPECT_EQ(run("verify " + bench("freire1.inv") + " " + file("good.json") + " -o " + file("v.json")), 0);
  EXPECT_EQ(Json::parse(slurp(file("v.json")))["level"], "ExactPass");
  EXPECT_EQ(run("verify " + bench("contract.inv") + " " + file("bad.json") + " -o " + file("v2.json")), 3);
  EXPECT_TRUE(Json::parse(slurp(file("v2.json"))).contains("counterexample"));
}

TEST_F(Cli, PlotWritesAnSvg) {
  ASSERT_EQ(run("cluster " + bench("contract.inv") + " --degree-max 3 -o " + file("c.json")), 0);
  ASSERT_EQ(run("plot " + file("c.json") + " --grid 64 -o " + file("c.svg")), 0);
  std::string svg = slurp(file("c.svg"));
  EXPECT_EQ(svg.rfind("<svg", 0), 0U);
  EXPECT_NE(svg.find("<path"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("mask " + file("missing.inv")), 1);
  EXPECT_EQ(run("plot " + bench("contract.inv") + " --grid 4"), 1);
  EXPECT_EQ(run("--help >/dev/null"), 0);
  {
    std::ofstream f(file("broken.inv"));
    f << "vars x; pre { x == 0; } while (x <= 0 { x := x + 1; } post { }";
  }
  EXPECT_EQ(run("mask " + file("broken.inv")), 1);
}

TEST_F(Cli, ExternalSolverMatchesEmbedded) {
  ASSERT_EQ(run("mask " + bench("freire1.inv") + " -o " + file("e.json")), 0);
  std::string env = "INVSDP_SOLVER=\"external:'" + std::string(INVSDP_CLI) + "' sdp-solve\"";
  ASSERT_EQ(run("mask " + bench("freire1.inv") + " -o " + file("x.json"), env), 0) << slurp(file("stderr"));
  auto e = Json::parse(slurp(file("e.json")));
  auto x = Json::parse(slurp(file("x.json")));
  EXPECT_EQ(e["assignment"], x["assignment"]);
  EXPECT_EQ(e["status"], "found");
  EXPECT_EQ(run("mask " + bench("freire1.inv"), "INVSDP_SOLVER=bogus"), 1);
}
