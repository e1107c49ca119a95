#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "pcqm/estimators.hpp"
#include "pcqm/sample.hpp"
#include "pcqm/text.hpp"

using namespace pcqm;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(PCQM_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

std::string sample_csv_path() {
    const std::string path = "/tmp/pcqm_cli_sample.csv";
    text::write_file(path,
                     "point_id,sector_id,distance,censored\n"
                     "1,1,1.5,0\n1,2,2.5,0\n1,3,,1\n1,4,4.0,0\n"
                     "2,1,0.5,0\n2,2,,1\n2,3,3.25,0\n2,4,6.5,0\n");
    return path;
}

double table_value(const std::string& output, const std::string& estimator, int column) {
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(estimator + ",", 0) == 0) {
            auto fields = text::split_csv(line);
            return text::parse_double(fields[column], "cli table");
        }
    }
    FAIL("estimator row not found: " << estimator << "\n" << output);
    return 0.0;
}

}  // namespace

TEST_CASE("cli estimate matches the library") {
    auto path = sample_csv_path();
    auto res = run_cli("estimate --input " + path + " --estimator pollard-censored --q 4 --ell 1 --radius 10");
    CHECK(res.exit_code == 0);
    auto s = sample::load_csv(path, 4, 1, 10.0);
    const double expected = estimators::pollard_censored(s).lambda_hat;
    CHECK_THAT(table_value(res.output, "pollard-censored", 1), WithinRel(expected, 1e-12));
}

TEST_CASE("cli estimate all runs the seven censored estimators") {
    auto res = run_cli("estimate --input " + sample_csv_path() + " --estimator all --q 4 --ell 1 --radius 10");
    CHECK(res.exit_code == 0);
    int rows = 0;
    std::istringstream in(res.output);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line.find("estimator,") != 0) ++rows;
    CHECK(rows == 7);
    // morisita-censored is undefined at ell=1 and appears as an invalid row
    CHECK_THAT(res.output, ContainsSubstring("morisita-censored,"));
}

TEST_CASE("cli estimate exit codes") {
    auto res = run_cli("estimate --input " + sample_csv_path() + " --estimator morisita-censored --q 4 --ell 1 --radius 10");
    CHECK(res.exit_code == 2);

    text::write_file("/tmp/pcqm_cli_bad.csv", "nope\n");
    auto bad = run_cli("estimate --input /tmp/pcqm_cli_bad.csv --estimator pollard --q 4 --ell 1");
    CHECK(bad.exit_code == 1);

    text::write_file("/tmp/pcqm_cli_allcens.csv",
                     "point_id,sector_id,distance,censored\n1,1,,1\n1,2,,1\n1,3,,1\n1,4,,1\n");
    auto allc = run_cli("estimate --input /tmp/pcqm_cli_allcens.csv --estimator pollard-censored --q 4 --ell 1 --radius 10");
    CHECK(allc.exit_code == 1);
}

TEST_CASE("cli simulate is reproducible and validates its config") {
    const std::string cfg = R"({
        "process": {"type": "csr", "lambda": 0.02},
        "window": {"x_min": 0, "y_min": 0, "x_max": 150, "y_max": 150},
        "design": {"n": 25, "q": 4, "ell": 1, "C": 10},
        "seed": 7
    })";
    text::write_file("/tmp/pcqm_cli_sim.json", cfg);
    fs::remove_all("/tmp/pcqm_cli_out1");
    fs::remove_all("/tmp/pcqm_cli_out2");
    auto r1 = run_cli("simulate --config /tmp/pcqm_cli_sim.json --out /tmp/pcqm_cli_out1");
    auto r2 = run_cli("simulate --config /tmp/pcqm_cli_sim.json --out /tmp/pcqm_cli_out2");
    CHECK(r1.exit_code == 0);
    CHECK(r2.exit_code == 0);
    for (const std::string name : {"pattern.csv", "sample.csv", "window.json", "manifest.json"}) {
        auto a = text::read_lines("/tmp/pcqm_cli_out1/" + name);
        auto b = text::read_lines("/tmp/pcqm_cli_out2/" + name);
        CHECK(a == b);
    }

    // thomas manifest records the nominal intensity kappa * mu
    const std::string tcfg = R"({
        "process": {"type": "thomas", "kappa": 0.01, "mu": 5, "sigma": 2.0},
        "window": {"x_min": 0, "y_min": 0, "x_max": 150, "y_max": 150},
        "design": {"n": 25, "q": 4, "ell": 1, "C": 10},
        "seed": 7
    })";
    text::write_file("/tmp/pcqm_cli_sim_t.json", tcfg);
    auto rt = run_cli("simulate --config /tmp/pcqm_cli_sim_t.json --out /tmp/pcqm_cli_out_t");
    CHECK(rt.exit_code == 0);
    std::ifstream mf("/tmp/pcqm_cli_out_t/manifest.json");
    nlohmann::json manifest;
    mf >> manifest;
    CHECK_THAT(manifest.at("nominal_intensity").get<double>(), WithinRel(0.05, 1e-12));

    // a window smaller than twice the buffer cannot host any focal points
    const std::string bad = R"({
        "process": {"type": "csr", "lambda": 0.02},
        "window": {"x_min": 0, "y_min": 0, "x_max": 15, "y_max": 15},
        "design": {"n": 25, "q": 4, "ell": 1, "C": 10},
        "seed": 7
    })";
    text::write_file("/tmp/pcqm_cli_sim_bad.json", bad);
    CHECK(run_cli("simulate --config /tmp/pcqm_cli_sim_bad.json --out /tmp/pcqm_cli_out_bad").exit_code == 1);

    // seed is mandatory
    const std::string noseed = R"({
        "process": {"type": "csr", "lambda": 0.02},
        "window": {"x_min": 0, "y_min": 0, "x_max": 150, "y_max": 150},
        "design": {"n": 25, "q": 4, "ell": 1, "C": 10}
    })";
    text::write_file("/tmp/pcqm_cli_sim_noseed.json", noseed);
    CHECK(run_cli("simulate --config /tmp/pcqm_cli_sim_noseed.json --out /tmp/pcqm_cli_out_ns").exit_code == 1);
}

TEST_CASE("cli benchmark dry run and outputs") {
    const std::string cfg = R"({
        "master_seed": 11,
        "scenarios": [{
            "id": "cli_check",
            "process": {"type": "csr", "lambda": 0.05},
            "window": {"x_min": 0, "y_min": 0, "x_max": 200, "y_max": 200},
            "design": {"n": 30, "q": 4, "ell": 1, "C": 10},
            "n_patterns": 1,
            "n_designs": 3,
            "estimators": ["cottam-censored", "pollard-censored"]
        }]
    })";
    text::write_file("/tmp/pcqm_cli_bench.json", cfg);

    fs::remove_all("/tmp/pcqm_cli_bench_dry");
    auto dry = run_cli("benchmark --config /tmp/pcqm_cli_bench.json --dry-run --out /tmp/pcqm_cli_bench_dry");
    CHECK(dry.exit_code == 0);
    CHECK_THAT(dry.output, ContainsSubstring("3 sampling cells"));
    CHECK_FALSE(fs::exists("/tmp/pcqm_cli_bench_dry"));

    fs::remove_all("/tmp/pcqm_cli_bench_out");
    auto full = run_cli("benchmark --config /tmp/pcqm_cli_bench.json --out /tmp/pcqm_cli_bench_out --threads 2");
    CHECK(full.exit_code == 0);
    CHECK(fs::exists("/tmp/pcqm_cli_bench_out/cli_check_summary.csv"));
    CHECK(fs::exists("/tmp/pcqm_cli_bench_out/replicates.csv"));
    CHECK(fs::exists("/tmp/pcqm_cli_bench_out/manifest.json"));

    // re-running from the manifest reproduces the outputs byte for byte
    fs::remove_all("/tmp/pcqm_cli_bench_out2");
    auto rerun = run_cli("benchmark --config /tmp/pcqm_cli_bench_out/manifest.json --out /tmp/pcqm_cli_bench_out2");
    CHECK(rerun.exit_code == 0);
    for (const std::string name : {"cli_check_summary.csv", "replicates.csv"}) {
        CHECK(text::read_lines("/tmp/pcqm_cli_bench_out/" + name) ==
              text::read_lines("/tmp/pcqm_cli_bench_out2/" + name));
    }
}

TEST_CASE("cli diagnose") {
    auto zero = run_cli("diagnose --ell 1 --q 4 --lambda 0.05 --k 2 --radius 10 --u 0");
    CHECK(zero.exit_code == 0);
    CHECK_THAT(table_value(zero.output, "1,4", 6 - 0), WithinRel(0.0, 1e-12));  // delta1 column

    auto skip = run_cli("diagnose --ell 1 --q 4 --lambda 0.05 --k 0.8 --radius 10 --u 1");
    CHECK(skip.exit_code == 0);
    CHECK_THAT(skip.output, ContainsSubstring("requires k>1"));

    auto grid = run_cli("diagnose --grid");
    CHECK(grid.exit_code == 0);
    CHECK_THAT(grid.output, ContainsSubstring("adjusted-dominates"));
    CHECK(grid.output.find("no-dominance") == std::string::npos);

    // survival underflow deep in the tail surfaces as a numeric failure
    auto numeric = run_cli("diagnose --ell 1 --q 4 --lambda 0.05 --k 2 --radius 1000 --u 1");
    CHECK(numeric.exit_code == 3);
}
