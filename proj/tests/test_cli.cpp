#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#ifndef CALIBREX_CLI_PATH
#define CALIBREX_CLI_PATH "calibrex"
#endif

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string("CALIBREX_LOG=error ") + CALIBREX_CLI_PATH + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CmdResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "calibrex_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
    const fs::path dir = fs::temp_directory_path() / "calibrex_cli_tests";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << body;
    return path.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kTinyConfig = R"({
  "seed": 21, "trials": 2, "batch_size": 2, "pool_size": 100,
  "simulator": {"kind": "builtin", "name": "quad2"}
})";

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("a missing config file exits 2 and names the path") {
    const auto out = fresh_dir("missing");
    const auto res = run_cli("calibrate --config /no/such/config.json --out " + out.string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("/no/such/config.json") != std::string::npos);
}

TEST_CASE("a malformed config exits 2") {
    const auto cfg = write_config("bad.json", R"({"simulator": {"kind": "builtin", "name": "quad2"}, "trials": 0})");
    const auto res = run_cli("calibrate --config " + cfg + " --out " + fresh_dir("bad").string());
    CHECK(res.exit_code == 2);
}

TEST_CASE("a toy run produces the four output files") {
    const auto cfg = write_config("tiny.json", kTinyConfig);
    const auto out = fresh_dir("toy");
    const auto res = run_cli("calibrate --config " + cfg + " --out " + out.string());
    CHECK(res.exit_code == 0);
    for (const char* f : {"trace.csv", "curve.csv", "report.json", "state.json"})
        CHECK(fs::exists(out / f));
    // schema-stable headers
    std::ifstream trace(out / "trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header.rfind("iteration,id,loss,wall_time_s,clamped,theta_0", 0) == 0);
}

TEST_CASE("the same seed twice gives byte-identical curves") {
    const auto cfg = write_config("tiny.json", kTinyConfig);
    const auto out1 = fresh_dir("det1");
    const auto out2 = fresh_dir("det2");
    CHECK(run_cli("calibrate --config " + cfg + " --out " + out1.string()).exit_code == 0);
    CHECK(run_cli("calibrate --config " + cfg + " --out " + out2.string()).exit_code == 0);
    CHECK(slurp(out1 / "curve.csv") == slurp(out2 / "curve.csv"));
}

TEST_CASE("completed runs are not overwritten without --force") {
    const auto cfg = write_config("tiny.json", kTinyConfig);
    const auto out = fresh_dir("protected");
    CHECK(run_cli("calibrate --config " + cfg + " --out " + out.string()).exit_code == 0);
    const auto res = run_cli("calibrate --config " + cfg + " --out " + out.string());
    CHECK(res.exit_code == 2);
    CHECK(run_cli("calibrate --config " + cfg + " --out " + out.string() + " --force").exit_code == 0);
}

TEST_CASE("interrupt and resume match an uninterrupted run byte for byte") {
    const auto cfg = write_config("resume.json", R"({
      "seed": 33, "trials": 4, "batch_size": 2, "pool_size": 100,
      "simulator": {"kind": "builtin", "name": "quad2"}})");
    const auto full = fresh_dir("full");
    const auto part = fresh_dir("part");
    CHECK(run_cli("calibrate --config " + cfg + " --out " + full.string()).exit_code == 0);
    CHECK(run_cli("calibrate --config " + cfg + " --out " + part.string() + " --stop-after 2").exit_code == 0);
    CHECK(run_cli("calibrate --out " + part.string() + " --resume").exit_code == 0);
    CHECK(slurp(full / "curve.csv") == slurp(part / "curve.csv"));
}

TEST_CASE("CLI overrides reach the resolved config echo") {
    const auto cfg = write_config("tiny.json", kTinyConfig);
    const auto out = fresh_dir("override");
    const auto res =
        run_cli("calibrate --config " + cfg + " --out " + out.string() + " --seed 99 --trials 1 --acq pi");
    CHECK(res.exit_code == 0);
    const std::string report = slurp(out / "report.json");
    CHECK(report.find("\"seed\": 99") != std::string::npos);
    CHECK(report.find("\"trials\": 1") != std::string::npos);
    CHECK(report.find("\"family\": \"pi\"") != std::string::npos);
}

TEST_CASE("subspace finds the ridge direction and emits the spectrum") {
    const auto cfg = write_config("ridge.json", R"({
      "seed": 5, "trials": 2, "initial_design": 90,
      "simulator": {"kind": "builtin", "name": "linear_active"}})");
    const auto out = fresh_dir("subspace");
    const auto res = run_cli("subspace --config " + cfg + " --out " + out.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("active dimension: 1") != std::string::npos);
    REQUIRE(fs::exists(out / "eigvals.csv"));
    std::ifstream ev(out / "eigvals.csv");
    std::string header;
    std::getline(ev, header);
    CHECK(header == "index,eigenvalue");
    int lines = 0;
    for (std::string line; std::getline(ev, line);) ++lines;
    CHECK(lines == 9);
}

TEST_CASE("malformed bounds in a subspace config exit 2") {
    const auto cfg = write_config("badbounds.json", R"({
      "simulator": {"kind": "external", "command": "true", "dim": 2,
                    "lower": [1, 1], "upper": [0, 0], "output_length": 1, "observed": [0]}})");
    const auto res = run_cli("subspace --config " + cfg + " --out " + fresh_dir("badbounds").string());
    CHECK(res.exit_code == 2);
}

TEST_CASE("compare runs the variant matrix over the shared seeds") {
    const auto cfg = write_config("cmp.json", R"({
      "trials": 2, "batch_size": 2, "pool_size": 80,
      "simulator": {"kind": "builtin", "name": "quad2"},
      "compare": {"seeds": [1, 2],
                  "configs": [{"name": "ei", "acquisition": {"family": "ei"}},
                              {"name": "ucb", "acquisition": {"family": "ucb"}}]}})");
    const auto out = fresh_dir("cmp");
    const auto res = run_cli("compare --config " + cfg + " --out " + out.string() + " --jobs 2");
    CHECK(res.exit_code == 0);
    REQUIRE(fs::exists(out / "compare.csv"));
    REQUIRE(fs::exists(out / "summary.csv"));

    // shape: 2 configs x 2 seeds x 3 curve rows (iterations 0..2), plus header
    std::ifstream in(out / "compare.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "config,seed,iteration,min_loss");
    int rows = 0;
    std::map<std::pair<std::string, int>, std::vector<double>> cells;
    for (std::string line; std::getline(in, line);) {
        ++rows;
        std::stringstream ss(line);
        std::string config, seed, iter, loss;
        std::getline(ss, config, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, iter, ',');
        std::getline(ss, loss, ',');
        cells[{config, std::stoi(iter)}].push_back(std::stod(loss));
    }
    CHECK(rows == 2 * 2 * 3);

    // spreadsheet oracle: recompute medians from compare.csv and check summary
    std::map<std::pair<std::string, int>, double> medians;
    for (auto& [key, vals] : cells) {
        std::sort(vals.begin(), vals.end());
        medians[key] = vals.size() % 2 ? vals[vals.size() / 2]
                                       : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
    }
    std::ifstream sum(out / "summary.csv");
    std::getline(sum, header);
    CHECK(header == "config,iteration,median_min_loss");
    int checked = 0;
    for (std::string line; std::getline(sum, line);) {
        std::stringstream ss(line);
        std::string config, iter, med;
        std::getline(ss, config, ',');
        std::getline(ss, iter, ',');
        std::getline(ss, med, ',');
        CHECK(std::stod(med) == doctest::Approx(medians.at({config, std::stoi(iter)})).epsilon(1e-12));
        ++checked;
    }
    CHECK(checked == 2 * 3);
}

TEST_CASE("a single-variant compare degenerates to one calibration per seed") {
    const auto cfg = write_config("cmp1.json", R"({
      "seed": 44, "trials": 2, "batch_size": 2, "pool_size": 80,
      "simulator": {"kind": "builtin", "name": "quad2"},
      "compare": {"seeds": [44], "configs": [{"name": "only"}]}})");
    const auto out = fresh_dir("cmp1");
    CHECK(run_cli("compare --config " + cfg + " --out " + out.string()).exit_code == 0);

    // the curve in compare.csv must match a plain calibrate run with that seed
    const auto cal_cfg = write_config("cmp1_cal.json", R"({
      "seed": 44, "trials": 2, "batch_size": 2, "pool_size": 80,
      "simulator": {"kind": "builtin", "name": "quad2"}})");
    const auto cal_out = fresh_dir("cmp1_cal");
    CHECK(run_cli("calibrate --config " + cal_cfg + " --out " + cal_out.string()).exit_code == 0);

    std::ifstream curve(cal_out / "curve.csv");
    std::string header;
    std::getline(curve, header);
    std::vector<std::string> expect;
    for (std::string line; std::getline(curve, line);) expect.push_back(line);

    std::ifstream cmp(out / "compare.csv");
    std::getline(cmp, header);
    int i = 0;
    for (std::string line; std::getline(cmp, line); ++i) {
        // rows are "only,44," + the calibrate curve row
        REQUIRE(line.rfind("only,44,", 0) == 0);
        CHECK(line.substr(8) == expect[static_cast<std::size_t>(i)]);
    }
    CHECK(i == static_cast<int>(expect.size()));
}

TEST_SUITE_END();
