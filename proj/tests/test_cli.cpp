#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("vrjp_cli_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = dir / name;
        std::ofstream(p) << text;
        return p;
    }

    // Runs the CLI with the given arguments; stderr goes to dir/stderr.txt.
    int run(const std::string& args) const {
        const std::string cmd = std::string("\"") + VRJP_CLI_PATH + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                                "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    static std::size_t lines(const fs::path& p) {
        const std::string s = slurp(p);
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }

    std::string err() const { return slurp(dir / "stderr.txt"); }
};

}  // namespace

TEST_F(Cli, PassingCheckWritesReportAndManifest) {
    const auto cfg = write("ok.ini", "[laplace]\nn = 4000\nprobes = 2\n");
    const fs::path out = dir / "out";
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " --only laplace validate"), 0) << err();
    EXPECT_TRUE(fs::exists(out / "laplace.csv"));
    EXPECT_TRUE(fs::exists(out / "validate_report.csv"));
    const std::string manifest = slurp(out / "manifest.json");
    EXPECT_NE(manifest.find("\"config_hash\": \"fnv1a64:"), std::string::npos) << manifest;
    EXPECT_NE(manifest.find("\"pass\": true"), std::string::npos) << manifest;
    EXPECT_NE(slurp(dir / "stdout.txt").find("PASS laplace"), std::string::npos);
}

TEST_F(Cli, NonPositiveWeightIsAConfigError) {
    const auto cfg = write("bad.ini", "[marginals]\nW_grid = 1, -0.5\n");
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + (dir / "o").string() + " --only marginals validate"), 2);
    EXPECT_NE(err().find("line 2, key 'marginals.W_grid': must be positive"), std::string::npos) << err();
    const auto zero = write("zero.ini", "[simulate]\nW = 0\n");
    EXPECT_EQ(run("--config " + zero.string() + " --out " + (dir / "o").string() + " simulate"), 2);
    EXPECT_FALSE(fs::exists(dir / "o" / "trajectories.csv"));
}

TEST_F(Cli, UnknownKeysAndMembersAreRejected) {
    const auto cfg = write("unk.ini", "[laplace]\nn = 100\nbogus = 1\n");
    EXPECT_EQ(run("--config " + cfg.string() + " --only laplace validate"), 2);
    EXPECT_NE(err().find("line 3: unknown key 'laplace.bogus'"), std::string::npos) << err();
    EXPECT_EQ(run("--only nothing validate"), 2);
    EXPECT_EQ(run("--config " + (dir / "missing.ini").string() + " validate"), 2);
    EXPECT_EQ(run("validate scan"), 2);
    EXPECT_EQ(run(""), 2);
    const auto tol = write("tol.ini", "[tolerances]\nsigma = 3\n");
    EXPECT_EQ(run("--config " + tol.string() + " --only laplace validate"), 2);
    EXPECT_NE(err().find("fixed at build time"), std::string::npos) << err();
}

TEST_F(Cli, FailingCheckExitsOne) {
    // A one-draw Laplace check cannot form a confidence interval and fails.
    const auto cfg = write("one.ini", "[laplace]\nn = 1\nprobes = 1\n");
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + (dir / "o").string() + " --only laplace validate"), 1)
        << err();
    EXPECT_NE(slurp(dir / "stdout.txt").find("FAIL laplace"), std::string::npos);
}

TEST_F(Cli, ZeroHorizonGivesHeaderOnlyTrajectories) {
    const auto cfg = write("h0.ini", "[simulate]\nhorizon = 0\nreplicates = 5\n");
    const fs::path out = dir / "out";
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " simulate"), 0) << err();
    EXPECT_EQ(slurp(out / "trajectories.csv"), "replicate,event,vertex,time\n");
}

TEST_F(Cli, JumpBudgetOnAnEdge) {
    const auto g = write("edge.graph", "graph 2\nv 0 plain 0\nv 1 plain 0\nroot 0\ne 0 1 1\n");
    const auto cfg = write("sim.ini", "[simulate]\ngraph = file\ngraph_file = " + g.string() +
                                          "\njump_budget = 10\nreplicates = 3\n");
    const fs::path out = dir / "out";
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " simulate"), 0) << err();
    EXPECT_EQ(lines(out / "trajectories.csv"), 1u + 3u * 10u);
    const std::string exits = slurp(out / "exits.csv");
    std::istringstream is(exits);
    std::string line;
    std::getline(is, line);
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        EXPECT_NE(line.find(",10,"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 3);
}

TEST_F(Cli, ScanRowsFollowTheGrids) {
    const auto cfg = write("scan.ini",
                           "[scan]\nd_grid = 2, 3\nn_grid = 1, 2\nW_grid = 0.25, 0.5, 0.75, 1, 1.5, 2, 3, 4\n"
                           "replicates = 50\n");
    const fs::path out = dir / "out";
    const int code = run("--config " + cfg.string() + " --out " + out.string() + " --only phase scan");
    EXPECT_TRUE(code == 0 || code == 1) << err();
    EXPECT_EQ(lines(out / "scan.csv"), 1u + 16u);
    const std::string csv = slurp(out / "scan.csv");
    EXPECT_EQ(csv.rfind("d,family,W,slope_mean,slope_se,mean_log_psi_n1,se_log_psi_n1,mean_log_psi_n2", 0), 0u);
    EXPECT_NE(csv.find("\n3,slab,"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "scan_crossover.csv"));
}

TEST_F(Cli, SameSeedSameBytesAcrossWorkers) {
    const auto cfg = write("det.ini", "[run]\nseed = 17\n[scan]\nn_grid = 1, 2\nW_grid = 0.5, 2\nreplicates = 3000\n");
    const fs::path a = dir / "a", b = dir / "b", c = dir / "c";
    run("--config " + cfg.string() + " --out " + a.string() + " --workers 1 --only phase scan");
    run("--config " + cfg.string() + " --out " + b.string() + " --workers 4 --only phase scan");
    run("--config " + cfg.string() + " --out " + c.string() + " --workers 1 --seed 18 --only phase scan");
    ASSERT_TRUE(fs::exists(a / "scan.csv")) << err();
    EXPECT_EQ(slurp(a / "scan.csv"), slurp(b / "scan.csv"));
    EXPECT_NE(slurp(a / "scan.csv"), slurp(c / "scan.csv"));
    const std::string ma = slurp(a / "manifest.json"), mb = slurp(b / "manifest.json");
    const auto hash = [](const std::string& m) { return m.substr(m.find("fnv1a64:"), 24); };
    EXPECT_EQ(hash(ma), hash(mb));
}

TEST_F(Cli, VersionFlag) {
    EXPECT_EQ(run("--version"), 0);
    EXPECT_FALSE(slurp(dir / "stdout.txt").empty());
}
