#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("meshsec-cli-" + std::to_string(::getpid()) + "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the CLI and returns its exit status; stdout goes to `stdout_file` when given.
  int run(const std::string& args, const std::string& stdout_file = "") const {
    std::string cmd = std::string("\"") + MESHSEC_CLI_PATH + "\" " + args;
    cmd += stdout_file.empty() ? " > /dev/null" : " > \"" + path(stdout_file) + "\"";
    cmd += " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  json read_json(const std::string& name) const { return json::parse(read(name)); }

  void make_ring(const std::string& prefix = "r") const {
    ASSERT_EQ(run("keygen --kind ring --n 3 --p-bits 96 --q-bits 64 --tiny --seed ring --out-prefix " + path(prefix)), 0);
  }

  std::string ring_args(const std::string& prefix = "r") const {
    return " --ring " + path(prefix + ".ring.json") + " --secrets " + path(prefix + ".secrets.json") + " --server " +
           path(prefix + ".server.json");
  }

  fs::path dir_;
};

TEST_F(Cli, KeygenIsReproducible) {
  ASSERT_EQ(run("keygen --kind user --p-bits 64 --q-bits 40 --tiny --seed a --out-prefix " + path("one")), 0);
  ASSERT_EQ(run("keygen --kind user --p-bits 64 --q-bits 40 --tiny --seed a --out-prefix " + path("two")), 0);
  EXPECT_EQ(read("one.pub.json"), read("two.pub.json"));
  EXPECT_EQ(read("one.priv.json"), read("two.priv.json"));
  ASSERT_EQ(run("keygen --kind user --p-bits 64 --q-bits 40 --tiny --seed b --out-prefix " + path("three")), 0);
  EXPECT_NE(read("one.pub.json"), read("three.pub.json"));
}

TEST_F(Cli, KeygenReportsChecksAndTinyFlag) {
  ASSERT_EQ(run("keygen --kind server --p-bits 16 --q-bits 8 --tiny --seed t --out-prefix " + path("s"), "out.json"), 0);
  auto summary = read_json("out.json");
  EXPECT_EQ(summary["seed"], "t");
  EXPECT_TRUE(summary["checks"]["groups_valid"].get<bool>());
  EXPECT_TRUE(summary["checks"]["pairs_match"].get<bool>());
  EXPECT_EQ(run("keygen --kind server --p-bits 16 --q-bits 8 --seed t --out-prefix " + path("s")), 1);
}

TEST_F(Cli, HonestExchangeAgreesOnKeys) {
  make_ring();
  ASSERT_EQ(run("exchange" + ring_args() + " --signer-index 2 --seed x --out " + path("t.json")), 0);
  auto t = read_json("t.json");
  EXPECT_TRUE(t["accepted"].get<bool>());
  EXPECT_EQ(t["server"]["session_key"], t["client"]["session_key"]);
  EXPECT_EQ(t["seed"], "x");
}

TEST_F(Cli, TamperedExchangesExitWithReject) {
  make_ring();
  for (const char* target : {"alpha", "beta", "v", "V", "R", "Y", "h"}) {
    EXPECT_EQ(run("exchange" + ring_args() + " --seed x --tamper " + target, "t.json"), 2) << target;
    EXPECT_FALSE(read_json("t.json")["accepted"].get<bool>()) << target;
  }
}

TEST_F(Cli, TranscriptReplaysThroughVerify) {
  make_ring();
  ASSERT_EQ(run("exchange" + ring_args() + " --signer-index 1 --seed y --out " + path("t.json")), 0);
  ASSERT_EQ(run("verify --ring " + path("r.ring.json") + " --server " + path("r.server.json") + " --signature " +
                    path("t.json") + " --out " + path("v.json")),
            0);
  EXPECT_EQ(read_json("v.json")["response"], read_json("t.json")["response"]);
}

TEST_F(Cli, SignThenVerify) {
  make_ring();
  ASSERT_EQ(run("sign --ring " + path("r.ring.json") + " --secrets " + path("r.secrets.json") + " --server-pub " +
                path("r.server-pub.json") + " --signer-index 0 --seed z --session-out " + path("session.json") +
                " --out " + path("sig.json")),
            0);
  EXPECT_TRUE(read_json("session.json").contains("exchange_exp"));
  EXPECT_EQ(run("verify --ring " + path("r.ring.json") + " --server " + path("r.server.json") + " --signature " +
                path("sig.json")),
            0);
  auto sig = read_json("sig.json");
  auto hex = sig["signature"].get<std::string>();
  hex.back() = hex.back() == '0' ? '1' : '0';
  sig["signature"] = hex;
  std::ofstream(path("bad.json")) << sig.dump();
  EXPECT_EQ(run("verify --ring " + path("r.ring.json") + " --server " + path("r.server.json") + " --signature " +
                path("bad.json")),
            2);
}

TEST_F(Cli, BenchFitIsExact) {
  ASSERT_EQ(run("bench-sig-size --n-list 1,2,3,5,8 --p-bits 64 --q-bits 40 --tiny", "b.json"), 0);
  auto b = read_json("b.json");
  EXPECT_EQ(b["rows"][0]["n"], 1);
  EXPECT_EQ(b["fit"]["max_abs_residual"].get<double>(), 0.0);
  EXPECT_EQ(b["reference"]["A"], 60);
}

TEST_F(Cli, KeylistLookup) {
  ASSERT_EQ(run("keylist --seed m --start-ms 1000 --cardinality 10 --timeout-ms 10 --at-ms 1025", "k.json"), 0);
  auto k = read_json("k.json");
  EXPECT_EQ(k["lookup"]["index"], 3);
  EXPECT_EQ(k["lookup"]["remaining_ms"], 5);
  EXPECT_EQ(k["keys"].size(), 10u);
  EXPECT_EQ(run("keylist --start-ms 1000 --at-ms 999"), 1);
}

TEST_F(Cli, SimulateScenarioFile) {
  ASSERT_EQ(run("simulate --print-scenario --duration-ms 4000 --out " + path("s.json")), 0);
  ASSERT_EQ(run("simulate --scenario " + path("s.json") + " --out " + path("m1.json")), 0);
  ASSERT_EQ(run("simulate --scenario " + path("s.json") + " --out " + path("m2.json")), 0);
  EXPECT_EQ(read("m1.json"), read("m2.json"));
  auto m = read_json("m1.json");
  EXPECT_EQ(m["nodes"].size(), 50u);
  EXPECT_EQ(run("simulate --scenario " + path("missing.json")), 1);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("exchange --ring x"), 1);
}

}  // namespace
