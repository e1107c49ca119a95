#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pcqm/config.hpp"
#include "pcqm/evaluate.hpp"

using namespace pcqm;
using namespace pcqm::evaluate;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("relative metrics on small inputs") {
    CHECK(r_bias({0.05, 0.05}, 0.05) == 0.0);
    CHECK_THAT(r_bias({0.9, 1.1}, 1.0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(r_bias({1.2}, 1.0), WithinRel(0.2, 1e-12));

    CHECK(r_rmse({0.05, 0.05}, 0.05) == 0.0);
    CHECK_THAT(r_rmse({0.9, 1.1}, 1.0), WithinRel(0.1, 1e-12));
    CHECK_THAT(r_rmse({1.2}, 1.0), WithinRel(0.2, 1e-12));

    CHECK(r_sd({2.0, 2.0}, 2.0) == 0.0);
    CHECK_THAT(r_sd({0.9, 1.1}, 1.0), WithinRel(0.1 * std::sqrt(2.0), 1e-12));
    // translation invariance
    CHECK_THAT(r_sd({1.13, 1.33}, 1.0), WithinRel(r_sd({0.9, 1.1}, 1.0), 1e-12));

    CHECK_THROWS_AS(r_bias({}, 1.0), std::domain_error);
    CHECK_THROWS_AS(r_sd({1.0}, 1.0), std::domain_error);
}

TEST_CASE("bias-variance identity for the metric trio") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs(3 + trial);
        for (auto& x : xs) x = u(eng);
        const double n = static_cast<double>(xs.size());
        const double lhs = std::pow(r_rmse(xs, 1.0), 2);
        const double rhs = std::pow(r_bias(xs, 1.0), 2) + std::pow(r_sd(xs, 1.0), 2) * (n - 1.0) / n;
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-12));
    }
}

namespace {

BenchmarkConfig small_config() {
    BenchmarkConfig cfg;
    cfg.master_seed = 2024;
    ScenarioConfig sc;
    sc.id = "unit_csr";
    sc.process.kind = ProcessKind::csr;
    sc.process.lambda = 0.05;
    sc.window = {0, 0, 200, 200};
    sc.design.n = 40;
    sc.design.q = 4;
    sc.design.ell = 1;
    sc.design.C = 10.0;
    sc.n_patterns = 2;
    sc.n_designs = 6;
    sc.estimator_ids = {EstimatorId::dahdouh_koedam, EstimatorId::cottam_censored, EstimatorId::pollard_censored};
    cfg.scenarios.push_back(sc);
    return cfg;
}

}  // namespace

TEST_CASE("benchmark output is independent of the thread count") {
    auto cfg = small_config();
    auto serial = run_benchmark(cfg, 1);
    auto parallel = run_benchmark(cfg, 8);
    CHECK(summary_csv(serial.summaries) == summary_csv(parallel.summaries));
    CHECK(replicates_csv(serial.replicates) == replicates_csv(parallel.replicates));
}

TEST_CASE("benchmark rows satisfy the bias-variance identity") {
    auto result = run_benchmark(small_config(), 2);
    REQUIRE_FALSE(result.summaries.empty());
    for (const auto& row : result.summaries) {
        if (row.n_valid < 2) continue;
        const double n = row.n_valid;
        CHECK_THAT(row.r_rmse * row.r_rmse,
                   WithinAbs(row.r_bias * row.r_bias + row.r_sd * row.r_sd * (n - 1.0) / n, 1e-12));
    }
    // per-pattern rows plus one pooled row per estimator
    int pooled = 0, per_pattern = 0;
    for (const auto& row : result.summaries) (row.pattern_id == "pooled" ? pooled : per_pattern)++;
    CHECK(pooled == 3);
    CHECK(per_pattern == 6);
}

TEST_CASE("censored rate in benchmark rows matches the poisson tail") {
    auto cfg = small_config();
    cfg.scenarios[0].n_designs = 20;
    auto result = run_benchmark(cfg, 2);
    const double p0 = std::exp(-model::pi * 0.05 * 100.0 / 4.0);
    for (const auto& row : result.summaries) {
        if (row.pattern_id != "pooled") continue;
        const double cells = 2.0 * 20.0 * 40.0 * 4.0;
        const double se = std::sqrt(p0 * (1.0 - p0) / cells);
        CHECK_THAT(row.mean_censored_rate, WithinAbs(p0, 4.0 * se));
    }
}

TEST_CASE("not-applicable estimators appear as fully invalid rows") {
    auto cfg = small_config();
    cfg.scenarios[0].design.ell = 2;
    cfg.scenarios[0].estimator_ids = {EstimatorId::dahdouh_koedam};
    auto result = run_benchmark(cfg, 1);
    for (const auto& row : result.summaries) {
        CHECK(row.n_valid == 0);
        CHECK(row.n_invalid > 0);
        CHECK(std::isnan(row.r_bias));
    }
}

TEST_CASE("stem-map scenarios make one pattern per abundant species") {
    // synthetic two-species map: one abundant, one rare
    ingest::StemMap map;
    map.window = {0, 0, 220, 220};
    auto big = simulate::gen_poisson(0.03, map.window, 11ULL);
    for (const auto& p : big.points) map.records.push_back({"major", p.x, p.y});
    auto small = simulate::gen_poisson(0.001, map.window, 12ULL);
    for (const auto& p : small.points) map.records.push_back({"minor", p.x, p.y});
    text::write_file("/tmp/pcqm_eval_stems.csv", ingest::stem_map_to_csv(map));
    text::write_file("/tmp/pcqm_eval_window.json", simulate::window_to_json(map.window).dump());

    BenchmarkConfig cfg;
    cfg.master_seed = 99;
    ScenarioConfig sc;
    sc.id = "unit_stem";
    sc.process.kind = ProcessKind::stem_map;
    sc.process.stem_path = "/tmp/pcqm_eval_stems.csv";
    sc.process.window_path = "/tmp/pcqm_eval_window.json";
    sc.process.min_count = 500;
    sc.design.n = 30;
    sc.design.q = 4;
    sc.design.ell = 1;
    sc.design.C = 10.0;
    sc.n_designs = 4;
    sc.estimator_ids = {EstimatorId::pollard_censored};
    cfg.scenarios.push_back(sc);

    auto result = run_benchmark(cfg, 1);
    std::vector<std::string> patterns;
    for (const auto& row : result.summaries)
        if (row.pattern_id != "pooled") patterns.push_back(row.pattern_id);
    REQUIRE(patterns.size() == 1);
    CHECK(patterns[0] == "major");
    CHECK_THAT(result.summaries[0].lambda_true, WithinRel(big.points.size() / map.window.area(), 1e-12));
}

TEST_CASE("config json round trip and sweep expansion") {
    const std::string raw = R"({
        "master_seed": 7,
        "scenarios": [{
            "id": "sweep",
            "process": {"type": "thomas", "kappa": 0.01, "mu": 5, "sigma": [1.0, 3.0]},
            "window": {"x_min": 0, "y_min": 0, "x_max": 300, "y_max": 300},
            "design": {"n": 20, "q": 4, "ell": [1, 2], "C": 10},
            "n_patterns": 1,
            "n_designs": 2,
            "estimators": ["pollard-censored", "nbd-mle-censored"]
        }]
    })";
    auto cfg = config::parse_benchmark(nlohmann::json::parse(raw));
    REQUIRE(cfg.scenarios.size() == 4);
    CHECK(cfg.scenarios[0].id == "sweep_s1_l1");
    CHECK(cfg.scenarios[3].id == "sweep_s3_l2");
    CHECK(cfg.scenarios[1].design.ell == 2);
    CHECK(cfg.scenarios[2].process.sigma == 3.0);

    // the manifest re-parses to the identical expanded configuration
    auto manifest = config::benchmark_manifest(cfg);
    auto cfg2 = config::parse_benchmark(manifest);
    REQUIRE(cfg2.scenarios.size() == cfg.scenarios.size());
    CHECK(config::benchmark_manifest(cfg2) == manifest);

    CHECK_THROWS_AS(config::parse_benchmark(nlohmann::json::parse(R"({"scenarios": []})")), config_error);
}

TEST_CASE("estimator list shorthand") {
    auto ids = config::detail::parse_estimators(nlohmann::json("censored-all"), "x");
    CHECK(ids.size() == 7);
    CHECK_THROWS_AS(config::detail::parse_estimators(nlohmann::json("everything"), "x"), config_error);
    CHECK_THROWS_AS(config::detail::parse_estimators(nlohmann::json::array(), "x"), config_error);
}
