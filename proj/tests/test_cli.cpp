#include "dgline/study.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dgline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dgline_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DGLINE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_config(const fs::path& p, const StudyConfig& c) {
    std::ofstream f(p);
    f << to_json(c).dump(2);
}

RunOptions quiet(const fs::path& dir, bool vtk = false) {
    RunOptions o;
    o.out_dir = dir;
    o.vtk = vtk;
    return o;
}

} // namespace

TEST(RunElliptic, ReferenceSetupCsvHasRegionErrors) {
    StudyConfig c = reference_study_config(1);
    c.levels = {{8, 8, 2}};
    const fs::path dir = fresh_dir("elliptic_ref");
    const StudyResult r = run_elliptic(c, quiet(dir, true));
    const auto rows = lines(slurp(dir / "errors.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], "k,nx,ny,nz,h,h_max,n_dof,iterations,h_fh_L2,err_L2_global,err_L2_C1,err_L2_C2,err_DG_C1");
    EXPECT_EQ(rows[1].rfind("1,8,8,2,", 0), 0u);
    ASSERT_EQ(r.levels.size(), 1u);
    const auto& e = r.levels[0].errors;
    ASSERT_EQ(e.size(), 4u);
    EXPECT_GT(e[0], e[1]);
    EXPECT_GT(e[0], e[2]);
    EXPECT_TRUE(fs::exists(dir / "solution_8x8x2.vtk"));

    const auto meta = nlohmann::json::parse(slurp(dir / "metadata.json"));
    EXPECT_EQ(parse_config(meta["config"]), c);
    EXPECT_EQ(meta["levels"][0]["n_dof"], 4 * 6 * 8 * 8 * 2);
    EXPECT_TRUE(meta["levels"][0].contains("solve_seconds"));
}

TEST(RunElliptic, ZeroSourceWithoutExactSolution) {
    StudyConfig c;
    c.source = {"constant", 0.0, ""};
    c.levels = {{2, 2, 1}};
    const fs::path dir = fresh_dir("elliptic_zero");
    const StudyResult r = run_elliptic(c, quiet(dir));
    EXPECT_TRUE(r.error_columns.empty());
    const auto rows = lines(slurp(dir / "errors.csv"));
    EXPECT_EQ(rows[0], "k,nx,ny,nz,h,h_max,n_dof,iterations,h_fh_L2");
    EXPECT_EQ(r.levels[0].iterations, 0);
    EXPECT_EQ(r.levels[0].h_fh, 0.0);
}

TEST(RunElliptic, SineCurveSmoke) {
    const fs::path dir = fresh_dir("sine");
    ASSERT_EQ(run_cli("--out-dir " + dir.string() + " solve-elliptic " + DGLINE_CONFIG_DIR + "/sine_curve.json"), 0);
    EXPECT_TRUE(fs::exists(dir / "solution_8x8x2.vtk"));
    const auto rows = lines(slurp(dir / "errors.csv"));
    EXPECT_EQ(rows[0].find("err_"), std::string::npos);
    const std::string vtk = slurp(dir / "solution_8x8x2.vtk");
    EXPECT_EQ(vtk.rfind("# vtk DataFile Version 3.0", 0), 0u);
    EXPECT_NE(vtk.find("POINT_DATA"), std::string::npos);
}

TEST(RunElliptic, DeterministicCsv) {
    StudyConfig c = reference_study_config(2);
    c.levels = {{4, 4, 1}, {8, 8, 2}};
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    const unsigned saved = thread_count();
    set_thread_count(1);
    run_study(c, quiet(a));
    set_thread_count(4);
    run_study(c, quiet(b));
    set_thread_count(saved);
    EXPECT_EQ(slurp(a / "study.csv"), slurp(b / "study.csv"));
    EXPECT_EQ(slurp(a / "rates.txt"), slurp(b / "rates.txt"));
}

TEST(RunStudy, RatesAndAssertions) {
    StudyConfig c = reference_study_config(1);
    c.levels = {{4, 4, 1}, {8, 8, 2}};
    c.rate_assertions = {{"err_L2_C1", 1.0, 3.0}};
    const fs::path dir = fresh_dir("study_ok");
    const StudyResult ok = run_study(c, quiet(dir));
    EXPECT_TRUE(ok.ok());
    ASSERT_EQ(ok.rates.size(), 4u);
    const std::vector<double> expect = convergence_rates({ok.levels[0].errors[1], ok.levels[1].errors[1]},
                                                         {ok.levels[0].h, ok.levels[1].h});
    EXPECT_DOUBLE_EQ(ok.rates[1][0], expect[0]);
    const auto rows = lines(slurp(dir / "study.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_NE(rows[0].find("rate_L2_C1"), std::string::npos);
    EXPECT_NE(slurp(dir / "rates.txt").find("err_L2_C1"), std::string::npos);

    c.rate_assertions = {{"err_L2_C1", 5.0, 6.0}};
    EXPECT_FALSE(run_study(c, quiet(fresh_dir("study_fail"))).ok());
    c.rate_assertions = {{"err_L2_nowhere", 0.0, 1.0}};
    EXPECT_THROW(run_study(c, quiet(fresh_dir("study_bad"))), InvalidArgument);
}

TEST(RunStudy, RejectsNonDecreasingLevels) {
    StudyConfig c = reference_study_config(1);
    c.levels = {{4, 4, 1}, {4, 4, 1}};
    EXPECT_THROW(run_study(c, quiet(fresh_dir("study_same"))), InvalidArgument);
    c.levels = {{4, 4, 1}};
    EXPECT_THROW(run_study(c, quiet(fresh_dir("study_one"))), InvalidArgument);
}

TEST(RunStudy, CliExitCodeReflectsAssertions) {
    StudyConfig c = reference_study_config(1);
    c.levels = {{4, 4, 1}, {8, 8, 2}};
    const fs::path dir = fresh_dir("cli_study");
    c.rate_assertions = {{"err_L2_global", -10.0, 10.0}};
    write_config(dir / "pass.json", c);
    c.rate_assertions = {{"err_L2_global", 9.0, 10.0}};
    write_config(dir / "fail.json", c);
    EXPECT_EQ(run_cli("--no-vtk --threads 2 --out-dir " + (dir / "p").string() + " study " + (dir / "pass.json").string()), 0);
    EXPECT_EQ(run_cli("--no-vtk --out-dir " + (dir / "f").string() + " study " + (dir / "fail.json").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "p" / "solution_4x4x1.vtk"));
    std::ofstream(dir / "broken.json") << "{\n \"levels\": [[2,2,1]],\n \"typo\": 1\n}";
    EXPECT_EQ(run_cli("--out-dir " + (dir / "b").string() + " study " + (dir / "broken.json").string()), 1);
    EXPECT_NE(run_cli("frobnicate x.json"), 0);
}

TEST(RunParabolic, ZeroDataGivesZeroOutput) {
    StudyConfig c;
    c.mode = "parabolic";
    c.source = {"constant", 0.0, ""};
    c.levels = {{2, 2, 1}};
    c.parabolic.T = 0.1;
    c.parabolic.steps = 4;
    c.parabolic.snapshot_every = 2;
    const fs::path dir = fresh_dir("parabolic_zero");
    const ParabolicResult r = run_parabolic(c, quiet(dir, true));
    ASSERT_EQ(r.levels.size(), 1u);
    for (const auto& st : r.levels[0].stats) {
        EXPECT_EQ(st.l2, 0.0);
        EXPECT_EQ(st.dg, 0.0);
    }
    EXPECT_TRUE(fs::exists(dir / "snapshot_2x2x1_2.vtk"));
    EXPECT_TRUE(fs::exists(dir / "snapshot_2x2x1_4.vtk"));
    const auto rows = lines(slurp(dir / "parabolic_2x2x1.csv"));
    EXPECT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0], "n,t,l2,dg,accumulator,data,stability_ratio,iterations");
}

TEST(RunParabolic, SteadyStateAgreesWithElliptic) {
    const fs::path dir = fresh_dir("steady");
    EXPECT_EQ(run_cli("--no-vtk --out-dir " + dir.string() + " solve-parabolic " + DGLINE_CONFIG_DIR + "/steady_state.json"), 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "metadata.json"));
    EXPECT_LT(meta["levels"][0]["steady_state_relative_diff"].get<double>(), 1e-6);

    StudyConfig c = parse_config_file(std::string(DGLINE_CONFIG_DIR) + "/steady_state.json");
    c.parabolic.T = 0.01;
    c.parabolic.steps = 2;
    const ParabolicResult early = run_parabolic(c, quiet(fresh_dir("steady_early")));
    EXPECT_FALSE(early.ok());
}

TEST(RunParabolic, RequiresParabolicMode) {
    EXPECT_THROW(run_parabolic(StudyConfig{}, quiet(fresh_dir("mode"))), InvalidArgument);
}
