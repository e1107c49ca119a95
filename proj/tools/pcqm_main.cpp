// Command-line front end: simulate point patterns, run estimators on distance
// files, reproduce benchmark grids, and print censoring-bias diagnostics.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcqm/pcqm.hpp"

namespace fs = std::filesystem;
using namespace pcqm;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_not_applicable = 2;
constexpr int exit_numeric = 3;

std::string estimate_row(const estimators::DensityEstimate& e) {
    std::string row = estimators::estimator_name(e.id);
    row += ',';
    row += text::format_double(e.lambda_hat);
    row += ',';
    if (e.k_hat) row += text::format_double(*e.k_hat);
    row += ',';
    row += e.valid ? "1" : "0";
    row += ',';
    for (std::size_t i = 0; i < e.warnings.size(); ++i) {
        if (i) row += "; ";
        row += e.warnings[i];
    }
    return row;
}

int cmd_estimate(const std::string& input, const std::string& estimator, int q, int ell, double radius,
                 const std::string& out_path) {
    auto s = sample::load_csv(input, q, ell, radius);
    std::vector<estimators::EstimatorId> ids;
    bool run_all = estimator == "all";
    if (run_all) {
        ids = estimators::censored_estimator_set();
    } else {
        auto id = estimators::estimator_from_name(estimator);
        if (!id) throw config_error("unknown estimator '" + estimator + "'");
        ids.push_back(*id);
    }

    std::string table = "estimator,lambda_hat,k_hat,valid,warnings\n";
    for (auto id : ids) {
        try {
            table += estimate_row(estimators::apply_estimator(id, s));
        } catch (const not_applicable_error& e) {
            if (!run_all) throw;
            estimators::DensityEstimate inv;
            inv.id = id;
            inv.valid = false;
            inv.warnings.push_back(e.what());
            table += estimate_row(inv);
        }
        table += '\n';
    }
    std::cout << table;
    if (!out_path.empty()) text::write_file(out_path, table);
    return exit_ok;
}

simulate::SurveyDesign design_from_json(const nlohmann::json& j) {
    return config::detail::parse_design(j, "simulate config");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed_flag) {
    auto j = config::load_json(config_path);
    if (!j.contains("process") || !j.contains("window") || !j.contains("design"))
        throw config_error("simulate config: needs 'process', 'window', and 'design'");
    auto window = config::detail::parse_window(j.at("window"), "simulate config");
    auto design = design_from_json(j.at("design"));
    auto process = config::detail::parse_process(j.at("process"), "simulate config");

    std::uint64_t seed;
    if (seed_flag)
        seed = *seed_flag;
    else if (j.contains("seed") && j.at("seed").is_number())
        seed = j.at("seed").get<std::uint64_t>();
    else
        throw config_error("simulate config: a seed is mandatory (config field or --seed)");

    simulate::PointPattern pattern;
    double nominal = std::numeric_limits<double>::quiet_NaN();
    switch (process.kind) {
        case evaluate::ProcessKind::csr:
            pattern = simulate::gen_poisson(process.lambda, window, seed);
            nominal = process.lambda;
            break;
        case evaluate::ProcessKind::thomas:
            pattern = simulate::gen_thomas(process.kappa, process.mu, process.sigma, window, seed);
            nominal = process.kappa * process.mu;
            break;
        case evaluate::ProcessKind::stem_map:
            throw config_error("simulate: stem_map input is for the benchmark command");
    }
    auto focals = simulate::lhs_focal_points(design, window, rng::derive_seed(seed, {1}));
    auto s = simulate::pcqm_sample(pattern, focals, design);

    fs::create_directories(out_dir);
    text::write_file((fs::path(out_dir) / "pattern.csv").string(), simulate::pattern_to_csv(pattern));
    text::write_file((fs::path(out_dir) / "window.json").string(), simulate::window_to_json(window).dump(2) + "\n");
    text::write_file((fs::path(out_dir) / "sample.csv").string(), sample::to_csv(s));

    nlohmann::json manifest{{"command", "simulate"},
                            {"seed", seed},
                            {"process", j.at("process")},
                            {"window", simulate::window_to_json(window)},
                            {"design",
                             {{"n", design.n}, {"q", design.q}, {"ell", design.ell}, {"C", design.C},
                              {"buffer", design.effective_buffer()}}},
                            {"nominal_intensity", nominal},
                            {"realized_points", pattern.points.size()},
                            {"censored_fraction", s.censored_fraction()}};
    text::write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "simulate: wrote pattern.csv (" << pattern.points.size() << " points), sample.csv (n0="
              << s.censored_count() << "/" << s.cell_count() << ") to " << out_dir << "\n";
    return exit_ok;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed_flag,
                  int threads, bool dry_run) {
    auto j = config::load_json(config_path);
    if (seed_flag) j["master_seed"] = *seed_flag;
    auto cfg = config::parse_benchmark(j);

    if (dry_run) {
        long cells = evaluate::plan_cell_count(cfg);
        std::cout << "dry-run: " << cfg.scenarios.size() << " scenarios, " << cells << " sampling cells, nothing written\n";
        return exit_ok;
    }

    auto result = evaluate::run_benchmark(cfg, threads);

    fs::create_directories(out_dir);
    for (const auto& sc : cfg.scenarios) {
        std::vector<evaluate::MetricsSummary> rows;
        for (const auto& r : result.summaries)
            if (r.scenario_id == sc.id) rows.push_back(r);
        text::write_file((fs::path(out_dir) / (sc.id + "_summary.csv")).string(), evaluate::summary_csv(rows));
    }
    text::write_file((fs::path(out_dir) / "replicates.csv").string(), evaluate::replicates_csv(result.replicates));
    text::write_file((fs::path(out_dir) / "manifest.json").string(), config::benchmark_manifest(cfg).dump(2) + "\n");
    std::cout << "benchmark: " << cfg.scenarios.size() << " scenarios done, outputs in " << out_dir << "\n";
    return exit_ok;
}

struct DiagnoseCell {
    int ell, q;
    double lambda, k, C, u;
};

std::string diagnose_row(const DiagnoseCell& c) {
    std::string row = std::to_string(c.ell) + ',' + std::to_string(c.q) + ',' + text::format_double(c.lambda) + ',' +
                      text::format_double(c.k) + ',' + text::format_double(c.C) + ',' + text::format_double(c.u) + ',';
    if (!(c.k > 1.0)) return row + ",,,skipped: second-moment limit requires k>1";
    if (!(c.k > 0.5 * c.u)) return row + ",,,skipped: moment requires k>u/2";
    const double d1 = model::delta1(c.ell, c.u, c.lambda, c.q, c.C);
    const model::NbdModel m(c.lambda, c.k, c.q, c.ell);
    auto [bias_mu, bias_adj] = model::asymptotic_bias_pair(m, c.u, c.C);
    const bool dominates = std::fabs(bias_adj) < std::fabs(bias_mu);
    row += text::format_double(d1);
    row += ',';
    row += text::format_double(bias_mu);
    row += ',';
    row += text::format_double(bias_adj);
    row += ',';
    row += dominates ? "adjusted-dominates" : "no-dominance";
    return row;
}

int cmd_diagnose(bool grid, const DiagnoseCell& single, const std::string& out_path) {
    std::string table = "ell,q,lambda,k,C,u,delta1,bias_mu,bias_adjusted,verdict\n";
    if (grid) {
        for (int ell : {1, 2, 3})
            for (double lambda : {0.011, 0.051})
                for (double k : {1.5, 2.0, 5.0, 10.0})
                    for (double C : {5.0, 10.0, 20.0})
                        for (double u : {-1.0, 1.0, 2.0})
                            table += diagnose_row({ell, 4, lambda, k, C, u}) + "\n";
    } else {
        table += diagnose_row(single) + "\n";
    }
    std::cout << table;
    if (!out_path.empty()) text::write_file(out_path, table);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density estimation for right-censored point-centered-quarter distance sampling"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "Run estimators on a distance-sample CSV");
    std::string est_input, est_name = "all", est_out;
    int est_q = 4, est_ell = 1;
    double est_radius = std::numeric_limits<double>::infinity();
    est->add_option("--input", est_input, "distance sample CSV")->required();
    est->add_option("--estimator", est_name, "estimator name or 'all' (the censored set)");
    est->add_option("--q", est_q, "sectors per point");
    est->add_option("--ell", est_ell, "neighbor order");
    est->add_option("--radius", est_radius, "censoring radius C (omit for complete data)");
    est->add_option("--out", est_out, "also write the table to this CSV");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a pattern and a PCQM sample from a config");
    std::string sim_config, sim_out = "pcqm_out";
    std::optional<std::uint64_t> sim_seed;
    sim->add_option("--config", sim_config, "simulation config JSON")->required();
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--seed", sim_seed, "override the config seed");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Run a benchmark grid from a config");
    std::string bench_config, bench_out = "pcqm_out";
    std::optional<std::uint64_t> bench_seed;
    int bench_threads = 1;
    bool bench_dry = false;
    bench->add_option("--config", bench_config, "benchmark config JSON")->required();
    bench->add_option("--out", bench_out, "output directory");
    bench->add_option("--seed", bench_seed, "override master_seed");
    bench->add_option("--threads", bench_threads, "worker threads for replicate cells");
    bench->add_flag("--dry-run", bench_dry, "validate the config and print the cell count only");

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Censoring-bias diagnostics for the moment adjustments");
    bool diag_grid = false;
    DiagnoseCell cell{1, 4, 0.05, 2.0, 10.0, 2.0};
    std::string diag_out;
    diag->add_flag("--grid", diag_grid, "run the bundled diagnostic grid");
    diag->add_option("--ell", cell.ell, "neighbor order");
    diag->add_option("--q", cell.q, "sectors per point");
    diag->add_option("--lambda", cell.lambda, "density");
    diag->add_option("--k", cell.k, "aggregation parameter");
    diag->add_option("--radius", cell.C, "censoring radius C");
    diag->add_option("--u", cell.u, "moment order");
    diag->add_option("--out", diag_out, "also write the table to this CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (est->parsed()) return cmd_estimate(est_input, est_name, est_q, est_ell, est_radius, est_out);
        if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
        if (bench->parsed()) return cmd_benchmark(bench_config, bench_out, bench_seed, bench_threads, bench_dry);
        if (diag->parsed()) return cmd_diagnose(diag_grid, cell, diag_out);
    } catch (const not_applicable_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_not_applicable;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const optimization_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const all_censored_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return exit_config;
}
