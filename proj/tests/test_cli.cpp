#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rattle/cli.hpp"

using namespace rattle;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rattle_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override { unsetenv(cli::kOutputEnv); }
};

} // namespace

TEST_F(CliTest, DefaultsFilled) {
    const auto cfg = cli::parse_config({"solve-a"});
    EXPECT_EQ(cfg.command, "solve-a");
    EXPECT_EQ(cfg.real("c"), 0.5);
    EXPECT_EQ(cfg.real("h1"), 2.0);
    EXPECT_EQ(cfg.output_dir, fs::path(cli::kDefaultOutput));
}

TEST_F(CliTest, IniRoundTrip) {
    const fs::path dir = scratch("ini");
    auto cfg = cli::parse_config({"simulate1d", "--N", "64", "--T", "250", "--snapshots", "10,20,30", "--out", dir.string()});
    const fs::path ini = dir / "run.ini";
    std::ofstream(ini) << cli::serialize(cfg);
    const auto back = cli::parse_config({"--config", ini.string()});
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(back.reals("snapshots"), (std::vector<double>{10, 20, 30}));
}

TEST_F(CliTest, FlagsOverrideFile) {
    const fs::path dir = scratch("override");
    std::ofstream(dir / "a.ini") << "[solve-a]\nc=0.25\nh1=3\n";
    const auto cfg = cli::parse_config({"--config", (dir / "a.ini").string(), "solve-a", "--h1", "4"});
    EXPECT_EQ(cfg.real("c"), 0.25);
    EXPECT_EQ(cfg.real("h1"), 4.0);
}

TEST_F(CliTest, UnknownKeysRejected) {
    const fs::path dir = scratch("unknown");
    std::ofstream(dir / "b.ini") << "[solve-a]\nc=0.5\ncurvature=1\n";
    EXPECT_EQ(code_of([&] { cli::parse_config({"--config", (dir / "b.ini").string()}); }), "InvalidArguments");
    EXPECT_EQ(code_of([] { cli::parse_config({"solve-a", "--curvature", "1"}); }), "InvalidArguments");
    EXPECT_EQ(code_of([] { cli::parse_config({"solve-a", "--c", "abc"}); }), "InvalidArguments");
    EXPECT_EQ(code_of([] { cli::parse_config({}); }), "InvalidArguments");
}

TEST_F(CliTest, EnvironmentOverridesOutputDirectory) {
    setenv(cli::kOutputEnv, "/tmp/rattle_env_out", 1);
    const auto cfg = cli::parse_config({"solve-a", "--out", "elsewhere"});
    EXPECT_EQ(cfg.output_dir, fs::path("/tmp/rattle_env_out"));
    unsetenv(cli::kOutputEnv);
}

TEST_F(CliTest, ValidationNamesTheKey) {
    const auto cfg = cli::parse_config({"solve-a", "--h1", "0.9"});
    try {
        cli::validate(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
        EXPECT_NE(std::string(e.what()).find("'h1'"), std::string::npos);
    }
    EXPECT_THROW(cli::validate(cli::parse_config({"relay", "--in", "x.csv", "--xi0", "0"})), Error);
    EXPECT_THROW(cli::validate(cli::parse_config({"reproduce", "--figure", "fig3"})), Error);
    EXPECT_THROW(cli::validate(cli::parse_config({"simulate1d", "--N", "12.5"})), Error);
}

TEST_F(CliTest, HelpListsColumns) {
    try {
        cli::parse_config({"green", "--help"});
        FAIL();
    } catch (const cli::HelpRequested& h) {
        EXPECT_NE(std::string(h.what()).find("n,t,y,y_asymptotic,abs_err"), std::string::npos);
    }
}

TEST_F(CliTest, SolveAWritesCsvWithMetadata) {
    const fs::path dir = scratch("solve");
    std::ostringstream log;
    EXPECT_EQ(cli::run(cli::parse_config({"solve-a", "--out", dir.string()}), log), 0);
    const auto t = io::read_csv(dir / "solve_a.csv");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_NEAR(io::parse_double(t.rows[0][io::column(t, "a")]), 1.3349427634, 1e-9);
    bool has_c = false;
    for (const auto& [k, v] : t.meta) has_c |= k == "c" && v == "0.5";
    EXPECT_TRUE(has_c);
}

TEST_F(CliTest, RelayCommandMatchesLibrary) {
    const fs::path dir = scratch("relay");
    std::ofstream(dir / "in.csv") << "t,u\n0,0\n1,2\n2,-1\n3,2\n";
    std::ostringstream log;
    cli::run(cli::parse_config({"relay", "--in", (dir / "in.csv").string(), "--alpha", "0", "--out", dir.string()}), log);
    const auto t = io::read_csv(dir / "relay.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"t", "u", "v", "xi"}));
    EXPECT_EQ(t.rows.size(), 7u);
    EXPECT_EQ(t.rows[1][0], "0.5");
    EXPECT_EQ(t.rows[1][3], "-1");
}

TEST_F(CliTest, SimulateThenAnalyze) {
    const fs::path dir = scratch("pipeline");
    std::ostringstream log;
    cli::run(cli::parse_config({"simulate1d", "--N", "60", "--T", "1000", "--out", dir.string()}), log);
    cli::run(cli::parse_config({"analyze", "--in", (dir / "switches.csv").string(), "--traj",
                                (dir / "snapshots.csv").string(), "--out", dir.string()}),
             log);
    EXPECT_TRUE(fs::exists(dir / "report.txt"));
    EXPECT_TRUE(fs::exists(dir / "weak_limit.csv"));
    EXPECT_TRUE(fs::exists(dir / "profile.svg"));
    const auto q = io::read_csv(dir / "q.csv");
    EXPECT_GT(q.rows.size(), 20u);
}

TEST_F(CliTest, OutputIsDeterministic) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    std::ostringstream log;
    cli::run(cli::parse_config({"simulate2d", "--radius", "10", "--T", "20", "--out", a.string()}), log);
    cli::run(cli::parse_config({"simulate2d", "--radius", "10", "--T", "20", "--out", b.string()}), log);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const auto ta = slurp(a / "switch_map.csv"), tb = slurp(b / "switch_map.csv");
    EXPECT_EQ(ta.substr(ta.find("node,")), tb.substr(tb.find("node,")));
    EXPECT_EQ(slurp(a / "switch_map.svg"), slurp(b / "switch_map.svg"));
}
