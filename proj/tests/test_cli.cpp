/*
   Copyright 2026 The reactfront Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "reactfront/cli.hpp"

using namespace reactfront;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root = fs::temp_directory_path() /
               ("reactfront_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    void TearDown() override { fs::remove_all(root); }

    std::string path(const std::string& rel) const { return (root / rel).string(); }

    std::string scenario(double T, const std::function<void(ScenarioSpec&)>& edit = {}) {
        ScenarioSpec s = load_scenario(REACTFRONT_SCENARIO_DIR "/default.json");
        s.horizon = T;
        if (edit) edit(s);
        const std::string file = path("scenario_" + std::to_string(counter++) + ".json");
        io::write_file(file, serialize_scenario(s));
        return file;
    }

    int cli(std::vector<std::string> args) {
        args.insert(args.begin(), "reactfront");
        errors.str("");
        return run(args, errors);
    }

    fs::path root;
    std::ostringstream errors;
    int counter = 0;
};

} // namespace

TEST_F(Cli, NoSubcommand) { EXPECT_EQ(cli({}), 1); }

TEST_F(Cli, FailingScenarioWritesNothing) {
    const auto sc = scenario(0.5, [](ScenarioSpec& s) { s.volatility = CoefficientFamily::constant(0.0); });
    EXPECT_EQ(cli({"simulate", "--scenario", sc, "--out", path("sim"), "--n", "10"}), 1);
    EXPECT_FALSE(fs::exists(path("sim")));
    EXPECT_NE(errors.str().find("degenerate"), std::string::npos);
}

TEST_F(Cli, MissingScenarioIsIoError) {
    EXPECT_EQ(cli({"simulate", "--scenario", path("nope.json"), "--out", path("sim")}), 3);
}

TEST_F(Cli, SimulateIsDeterministic) {
    const auto sc = scenario(0.5);
    ASSERT_EQ(cli({"simulate", "--scenario", sc, "--n", "500", "--dt", "0.01", "--seed", "4", "--out", path("a")}), 0);
    ASSERT_EQ(cli({"simulate", "--scenario", sc, "--n", "500", "--dt", "0.01", "--seed", "4", "--out", path("b")}), 0);
    const auto ma = io::load_manifest(path("a")), mb = io::load_manifest(path("b"));
    EXPECT_EQ(ma["files"], mb["files"]);
    EXPECT_TRUE(io::verify_manifest(path("a")).empty());
    EXPECT_EQ(ma["seeds"], nlohmann::json::array({4}));
    EXPECT_TRUE(ma.contains("scenario_hash"));
    const auto snaps = snapshots_from_table(path("a") + "/snapshots.csv");
    EXPECT_EQ(snaps.size(), 4u);
    const auto p = path_from_table(path("a") + "/path.csv");
    EXPECT_NEAR(p.horizon(), 0.5, 1e-12);
}

TEST_F(Cli, CompareAndHorizonMismatch) {
    const auto sc = scenario(0.5), other = scenario(0.25);
    ASSERT_EQ(cli({"simulate", "--scenario", sc, "--n", "2000", "--dt", "0.01", "--out", path("sim")}), 0);
    ASSERT_EQ(cli({"solve", "--scenario", sc, "--J", "400", "--dt-pde", "0.001", "--out", path("pde")}), 0);
    ASSERT_EQ(cli({"solve", "--scenario", other, "--J", "400", "--dt-pde", "0.001", "--out", path("pde2")}), 0);
    ASSERT_EQ(cli({"compare", "--sim", path("sim"), "--pde", path("pde"), "--out", path("cmp")}), 0);
    const auto rep = nlohmann::json::parse(io::read_file(path("cmp") + "/report.json"));
    EXPECT_EQ(rep["snapshots"].size(), 4u);
    for (const auto& s : rep["snapshots"]) EXPECT_LT(s["ks"].get<double>(), 0.1);
    EXPECT_EQ(cli({"compare", "--sim", path("sim"), "--pde", path("pde2"), "--out", path("cmp2")}), 1);
    EXPECT_FALSE(fs::exists(path("cmp2")));
    const auto m = io::load_manifest(path("pde"));
    EXPECT_DOUBLE_EQ(m["warm_start_t0"].get<double>(), 0.0);
    EXPECT_TRUE(fs::exists(path("pde") + "/density_000.csv"));
}

TEST_F(Cli, SweepContract) {
    const auto sc = scenario(0.2);
    ASSERT_EQ(cli({"sweep", "--scenario", sc, "--n", "1000,4000,16000", "--seeds", "20", "--dt", "0.01", "--J", "200",
                   "--dt-pde", "0.001", "--out", path("sw")}),
              0);
    const auto m = io::load_manifest(path("sw"));
    EXPECT_EQ(m["seeds"].size(), 20u);
    const auto rep = nlohmann::json::parse(io::read_file(path("sw") + "/report.json"));
    EXPECT_EQ(rep["cells"].size(), 60u);
    EXPECT_FALSE(rep["ks_fit"].is_null());
    EXPECT_TRUE(fs::exists(path("sw") + "/convergence.csv"));
    EXPECT_TRUE(fs::exists(path("sw") + "/cells/n16000_s20/snapshots.csv"));
    EXPECT_TRUE(fs::exists(path("sw") + "/cells/n1000_s1/path.csv"));
    std::size_t manifests = 0;
    for (const auto& e : fs::recursive_directory_iterator(path("sw")))
        if (e.path().filename() == "manifest.json") ++manifests;
    EXPECT_EQ(manifests, 1u);
    EXPECT_TRUE(io::verify_manifest(path("sw")).empty());
}

TEST_F(Cli, SweepWithOneSizeIsFlagged) {
    const auto sc = scenario(0.2);
    ASSERT_EQ(cli({"sweep", "--scenario", sc, "--n", "500", "--seeds", "2", "--dt", "0.01", "--J", "200",
                   "--dt-pde", "0.001", "--out", path("sw")}),
              0);
    const auto rep = nlohmann::json::parse(io::read_file(path("sw") + "/report.json"));
    EXPECT_TRUE(rep["ks_fit"].is_null());
    EXPECT_TRUE(rep.contains("flag"));
    EXPECT_GT(rep["mean_ks_T"][0].get<double>(), 0.0);
}

TEST(Sweep, ZeroHazardReduction) {
    ScenarioSpec s = load_scenario(REACTFRONT_SCENARIO_DIR "/default.json");
    s.horizon = 0.5;
    s.reactivity = CoefficientFamily::constant(0.0);
    SweepParams p;
    p.dt = 0.01;
    p.grid.J = 1000;
    p.grid.dt = 1e-3;
    const std::size_t n = 4000;
    const auto res = run_sweep(s, {n}, 5, p);
    for (const auto& c : res.cells) {
        EXPECT_EQ(c.sup_I, 0.0);
        EXPECT_EQ(c.sup_A, 0.0);
        EXPECT_EQ(c.martingale, 0.0);
        // sampling error plus the Euler-in-time bias of the particle step
        EXPECT_LE(c.ks, dkw_bound(n, 1e-3) + 5e-3);
    }
}

TEST_F(Cli, ReportRefusesTamperedRuns) {
    const auto sc = scenario(0.25);
    ASSERT_EQ(cli({"solve", "--scenario", sc, "--J", "200", "--dt-pde", "0.001", "--out", path("pde")}), 0);
    ASSERT_EQ(cli({"report", "--runs", path("pde"), "--out", path("rep")}), 0);
    EXPECT_NE(io::read_file(path("rep") + "/index.md").find("solve"), std::string::npos);
    io::write_file(path("pde") + "/path.csv", io::read_file(path("pde") + "/path.csv") + "9,9,9,9,9\n");
    EXPECT_EQ(cli({"report", "--runs", path("pde"), "--out", path("rep2")}), 1);
    EXPECT_NE(errors.str().find("path.csv"), std::string::npos);
}

TEST_F(Cli, VolterraRunAndAbort) {
    const auto sc = scenario(0.5);
    ASSERT_EQ(cli({"solve", "--scenario", sc, "--J", "400", "--dt-pde", "0.001", "--out", path("pde")}), 0);
    ASSERT_EQ(cli({"volterra", "--scenario", sc, "--paths", path("pde") + "/path.csv", "--grid", "M=100,zmax=8,dt=0.01",
                   "--out", path("vol")}),
              0);
    const auto m = io::load_manifest(path("vol"));
    EXPECT_GE(m["max_sweeps_used"].get<int>(), 1);
    EXPECT_EQ(cli({"volterra", "--scenario", sc, "--paths", path("pde") + "/path.csv", "--grid",
                   "M=100,zmax=8,dt=0.01,sweeps=1", "--out", path("vol2")}),
              2);
    EXPECT_EQ(cli({"volterra", "--scenario", sc, "--paths", path("pde") + "/path.csv", "--grid", "M=abc",
                   "--out", path("vol3")}),
              1);
    EXPECT_EQ(cli({"volterra", "--scenario", sc, "--paths", path("missing.csv"), "--out", path("vol4")}), 3);
}

TEST_F(Cli, Binary) {
    const auto sc = scenario(0.25);
    const std::string cmd = std::string(REACTFRONT_CLI) + " simulate --scenario " + sc + " --n 100 --dt 0.01 --out " +
                            path("bin") + " 2>/dev/null";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(fs::exists(path("bin") + "/manifest.json"));
    const std::string bad = std::string(REACTFRONT_CLI) + " frobnicate 2>/dev/null";
    EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 1);
}
