#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pcqm/errors.hpp"
#include "pcqm/estimators.hpp"
#include "pcqm/ingest.hpp"
#include "pcqm/rng.hpp"
#include "pcqm/simulate.hpp"

namespace pcqm::evaluate {

using estimators::EstimatorId;
using simulate::PointPattern;
using simulate::StudyWindow;
using simulate::SurveyDesign;

// ---------------------------------------------------------------------------
// Relative performance metrics
// ---------------------------------------------------------------------------

inline double r_bias(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw std::domain_error("r_bias: need at least one estimate");
    if (!(truth > 0.0)) throw std::domain_error("r_bias: truth must be positive");
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= estimates.size();
    return (mean - truth) / truth;
}

inline double r_rmse(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw std::domain_error("r_rmse: need at least one estimate");
    if (!(truth > 0.0)) throw std::domain_error("r_rmse: truth must be positive");
    double acc = 0.0;
    for (double e : estimates) acc += (e - truth) * (e - truth);
    return std::sqrt(acc / estimates.size()) / truth;
}

/// Sample standard deviation (divisor count-1) over the truth.
inline double r_sd(const std::vector<double>& estimates, double truth) {
    if (estimates.size() < 2) throw std::domain_error("r_sd: need at least two estimates");
    if (!(truth > 0.0)) throw std::domain_error("r_sd: truth must be positive");
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= estimates.size();
    double acc = 0.0;
    for (double e : estimates) acc += (e - mean) * (e - mean);
    return std::sqrt(acc / (estimates.size() - 1.0)) / truth;
}

// ---------------------------------------------------------------------------
// Benchmark configuration
// ---------------------------------------------------------------------------

enum class ProcessKind { csr, thomas, stem_map };

struct ProcessSpec {
    ProcessKind kind = ProcessKind::csr;
    double lambda = 0.0;                       // csr
    double kappa = 0.0, mu = 0.0, sigma = 0.0; // thomas
    std::string stem_path, window_path;        // stem_map
    std::string species;                       // stem_map: empty = all abundant species
    int min_count = 500;

    /// Nominal process intensity, where one is defined.
    double nominal_intensity() const {
        switch (kind) {
            case ProcessKind::csr: return lambda;
            case ProcessKind::thomas: return kappa * mu;
            case ProcessKind::stem_map: return std::numeric_limits<double>::quiet_NaN();
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
};

struct ScenarioConfig {
    std::string id;
    ProcessSpec process;
    StudyWindow window;  // unused for stem_map (census window comes from the descriptor)
    SurveyDesign design;
    int n_patterns = 1;
    int n_designs = 1;
    std::vector<EstimatorId> estimator_ids;

    void validate() const {
        if (id.empty()) throw config_error("scenario: id must be nonempty");
        if (n_patterns < 1 || n_designs < 1) throw config_error("scenario " + id + ": replicate counts must be >= 1");
        if (estimator_ids.empty()) throw config_error("scenario " + id + ": estimator list must be nonempty");
        design.validate();
        switch (process.kind) {
            case ProcessKind::csr:
                if (!(process.lambda > 0.0)) throw config_error("scenario " + id + ": lambda must be positive");
                window.validate();
                window.shrunk(design.effective_buffer());
                break;
            case ProcessKind::thomas:
                if (!(process.kappa > 0.0) || !(process.mu > 0.0) || !(process.sigma > 0.0))
                    throw config_error("scenario " + id + ": kappa, mu, sigma must be positive");
                window.validate();
                window.shrunk(design.effective_buffer());
                break;
            case ProcessKind::stem_map:
                if (process.stem_path.empty() || process.window_path.empty())
                    throw config_error("scenario " + id + ": stem_map needs stem_path and window_path");
                if (process.min_count < 1) throw config_error("scenario " + id + ": min_count must be >= 1");
                break;
        }
    }
};

struct BenchmarkConfig {
    std::uint64_t master_seed = 0;
    std::vector<ScenarioConfig> scenarios;

    void validate() const {
        if (scenarios.empty()) throw config_error("benchmark config: no scenarios");
        std::map<std::string, int> ids;
        for (const auto& s : scenarios) {
            s.validate();
            if (++ids[s.id] > 1) throw config_error("benchmark config: duplicate scenario id " + s.id);
        }
    }
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ReplicateRecord {
    std::string scenario_id;
    std::string pattern_id;
    EstimatorId est{};
    int replicate = 0;
    double lambda_true = 0.0;
    double lambda_hat = std::numeric_limits<double>::quiet_NaN();
    double k_hat = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    double censored_rate = 0.0;
};

struct MetricsSummary {
    std::string scenario_id;
    std::string pattern_id;  // "pooled" rows aggregate every pattern of the scenario
    EstimatorId est{};
    double lambda_true = 0.0;
    double lambda_nominal = std::numeric_limits<double>::quiet_NaN();
    double r_bias = std::numeric_limits<double>::quiet_NaN();
    double r_rmse = std::numeric_limits<double>::quiet_NaN();
    double r_sd = std::numeric_limits<double>::quiet_NaN();
    double mean_censored_rate = 0.0;
    int n_valid = 0;
    int n_invalid = 0;
};

struct BenchmarkResult {
    std::vector<MetricsSummary> summaries;
    std::vector<ReplicateRecord> replicates;
};

namespace detail {

struct PatternInstance {
    std::string id;
    PointPattern pattern;
    double lambda_true = 0.0;  // realized count / area
};

inline std::string pattern_label(int index) {
    std::string s = std::to_string(index + 1);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return "p" + s;
}

inline std::vector<PatternInstance> build_patterns(const ScenarioConfig& sc, std::uint64_t master_seed) {
    std::vector<PatternInstance> out;
    const std::uint64_t sid = rng::fnv1a(sc.id);
    switch (sc.process.kind) {
        case ProcessKind::csr:
            for (int p = 0; p < sc.n_patterns; ++p) {
                auto eng = rng::make_engine(master_seed, {sid, 1, static_cast<std::uint64_t>(p)});
                PointPattern pat = simulate::gen_poisson(sc.process.lambda, sc.window, eng);
                double truth = pat.realized_density();
                out.push_back({pattern_label(p), std::move(pat), truth});
            }
            break;
        case ProcessKind::thomas:
            for (int p = 0; p < sc.n_patterns; ++p) {
                auto eng = rng::make_engine(master_seed, {sid, 1, static_cast<std::uint64_t>(p)});
                PointPattern pat = simulate::gen_thomas(sc.process.kappa, sc.process.mu, sc.process.sigma, sc.window, eng);
                double truth = pat.realized_density();
                out.push_back({pattern_label(p), std::move(pat), truth});
            }
            break;
        case ProcessKind::stem_map: {
            StudyWindow win = simulate::load_window(sc.process.window_path);
            ingest::StemMap map = ingest::load_stem_map(sc.process.stem_path, win);
            std::vector<std::string> species;
            if (!sc.process.species.empty())
                species.push_back(sc.process.species);
            else
                species = ingest::filter_abundant(map, sc.process.min_count);
            if (species.empty()) throw config_error("scenario " + sc.id + ": no species passes the abundance filter");
            for (const auto& code : species) {
                PointPattern pat = ingest::species_pattern(map, code);
                // the census window must leave room for the buffered design
                simulate::StudyWindow check = pat.window;
                check.shrunk(sc.design.effective_buffer());
                double truth = ingest::true_density(pat);
                out.push_back({code, std::move(pat), truth});
            }
            break;
        }
    }
    return out;
}

struct CellOutput {
    double censored_rate = 0.0;
    struct Entry {
        double lambda_hat = std::numeric_limits<double>::quiet_NaN();
        double k_hat = std::numeric_limits<double>::quiet_NaN();
        bool valid = false;
    };
    std::vector<Entry> entries;  // aligned with scenario estimator list
};

inline CellOutput run_cell(const ScenarioConfig& sc, const PatternInstance& pat, int design_index,
                           std::uint64_t master_seed) {
    const std::uint64_t sid = rng::fnv1a(sc.id);
    const std::uint64_t pid = rng::fnv1a(pat.id);
    auto eng = rng::make_engine(master_seed, {sid, 2, pid, static_cast<std::uint64_t>(design_index)});
    auto focals = simulate::lhs_focal_points(sc.design, pat.pattern.window, eng);
    auto s = simulate::pcqm_sample(pat.pattern, focals, sc.design);

    CellOutput out;
    out.censored_rate = s.censored_fraction();
    out.entries.resize(sc.estimator_ids.size());
    for (std::size_t e = 0; e < sc.estimator_ids.size(); ++e) {
        auto& entry = out.entries[e];
        try {
            auto est = estimators::apply_estimator(sc.estimator_ids[e], s);
            entry.lambda_hat = est.lambda_hat;
            entry.k_hat = est.k_hat ? *est.k_hat : std::numeric_limits<double>::quiet_NaN();
            entry.valid = est.valid && std::isfinite(est.lambda_hat) && est.lambda_hat > 0.0;
        } catch (const not_applicable_error&) {
        } catch (const all_censored_error&) {
        } catch (const degenerate_sample_error&) {
        } catch (const std::domain_error&) {
        } catch (const numeric_error&) {
        } catch (const optimization_error&) {
        }
        // invalid entries keep NaN estimates and count into n_invalid
    }
    return out;
}

}  // namespace detail

/// Number of (pattern x design) sampling cells the configuration expands to.
/// Loads stem maps to resolve species lists, so configuration problems surface
/// here before any estimation work starts.
inline long plan_cell_count(const BenchmarkConfig& cfg) {
    cfg.validate();
    long cells = 0;
    for (const auto& sc : cfg.scenarios) {
        auto patterns = detail::build_patterns(sc, cfg.master_seed);
        cells += static_cast<long>(patterns.size()) * sc.n_designs;
    }
    return cells;
}

/// Run the full benchmark grid. Replicate cells are independent and may be
/// executed on several threads; per-cell RNG streams are derived from
/// (master_seed, scenario, pattern, design), so results are identical for any
/// thread count and are merged in deterministic cell order.
inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, int threads = 1) {
    cfg.validate();
    threads = std::max(1, threads);

    BenchmarkResult result;
    for (const auto& sc : cfg.scenarios) {
        auto patterns = detail::build_patterns(sc, cfg.master_seed);

        struct Cell {
            int pattern_index;
            int design_index;
        };
        std::vector<Cell> cells;
        cells.reserve(patterns.size() * sc.n_designs);
        for (std::size_t p = 0; p < patterns.size(); ++p)
            for (int d = 0; d < sc.n_designs; ++d) cells.push_back({static_cast<int>(p), d});

        std::vector<detail::CellOutput> outputs(cells.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                try {
                    outputs[i] = detail::run_cell(sc, patterns[cells[i].pattern_index], cells[i].design_index,
                                                  cfg.master_seed);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (failure) std::rethrow_exception(failure);

        // long-format records, in deterministic cell order
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& pat = patterns[cells[i].pattern_index];
            const auto& out = outputs[i];
            for (std::size_t e = 0; e < sc.estimator_ids.size(); ++e) {
                ReplicateRecord rec;
                rec.scenario_id = sc.id;
                rec.pattern_id = pat.id;
                rec.est = sc.estimator_ids[e];
                rec.replicate = cells[i].design_index + 1;
                rec.lambda_true = pat.lambda_true;
                rec.lambda_hat = out.entries[e].lambda_hat;
                rec.k_hat = out.entries[e].k_hat;
                rec.valid = out.entries[e].valid;
                rec.censored_rate = out.censored_rate;
                result.replicates.push_back(std::move(rec));
            }
        }

        // summaries: one row per estimator per pattern, plus a pooled row that
        // aggregates relative errors across patterns
        const double nominal = sc.process.nominal_intensity();
        for (std::size_t e = 0; e < sc.estimator_ids.size(); ++e) {
            std::vector<double> pooled_ratios;
            double pooled_rate = 0.0, pooled_truth = 0.0;
            int pooled_invalid = 0;
            long pooled_cells = 0;
            for (std::size_t p = 0; p < patterns.size(); ++p) {
                std::vector<double> valid_estimates;
                double rate_sum = 0.0;
                int invalid = 0, cell_count = 0;
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    if (cells[i].pattern_index != static_cast<int>(p)) continue;
                    ++cell_count;
                    rate_sum += outputs[i].censored_rate;
                    const auto& entry = outputs[i].entries[e];
                    if (entry.valid) {
                        valid_estimates.push_back(entry.lambda_hat);
                        pooled_ratios.push_back(entry.lambda_hat / patterns[p].lambda_true);
                    } else {
                        ++invalid;
                    }
                }
                MetricsSummary row;
                row.scenario_id = sc.id;
                row.pattern_id = patterns[p].id;
                row.est = sc.estimator_ids[e];
                row.lambda_true = patterns[p].lambda_true;
                row.lambda_nominal = nominal;
                row.mean_censored_rate = rate_sum / std::max(1, cell_count);
                row.n_valid = static_cast<int>(valid_estimates.size());
                row.n_invalid = invalid;
                if (!valid_estimates.empty()) {
                    row.r_bias = r_bias(valid_estimates, patterns[p].lambda_true);
                    row.r_rmse = r_rmse(valid_estimates, patterns[p].lambda_true);
                    if (valid_estimates.size() >= 2) row.r_sd = r_sd(valid_estimates, patterns[p].lambda_true);
                }
                result.summaries.push_back(std::move(row));

                pooled_rate += rate_sum;
                pooled_truth += patterns[p].lambda_true;
                pooled_invalid += invalid;
                pooled_cells += cell_count;
            }
            MetricsSummary pooled;
            pooled.scenario_id = sc.id;
            pooled.pattern_id = "pooled";
            pooled.est = sc.estimator_ids[e];
            pooled.lambda_true = pooled_truth / patterns.size();
            pooled.lambda_nominal = nominal;
            pooled.mean_censored_rate = pooled_rate / std::max<long>(1, pooled_cells);
            pooled.n_valid = static_cast<int>(pooled_ratios.size());
            pooled.n_invalid = pooled_invalid;
            if (!pooled_ratios.empty()) {
                pooled.r_bias = r_bias(pooled_ratios, 1.0);
                pooled.r_rmse = r_rmse(pooled_ratios, 1.0);
                if (pooled_ratios.size() >= 2) pooled.r_sd = r_sd(pooled_ratios, 1.0);
            }
            result.summaries.push_back(std::move(pooled));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

inline std::string summary_csv(const std::vector<MetricsSummary>& rows) {
    std::string out =
        "scenario_id,pattern_id,estimator,lambda_true,r_bias,r_rmse,r_sd,mean_censored_rate,n_valid,n_invalid,"
        "lambda_nominal\n";
    for (const auto& r : rows) {
        out += r.scenario_id;
        out += ',';
        out += r.pattern_id;
        out += ',';
        out += estimators::estimator_name(r.est);
        out += ',';
        out += text::format_double(r.lambda_true);
        out += ',';
        out += text::format_double(r.r_bias);
        out += ',';
        out += text::format_double(r.r_rmse);
        out += ',';
        out += text::format_double(r.r_sd);
        out += ',';
        out += text::format_double(r.mean_censored_rate);
        out += ',';
        out += std::to_string(r.n_valid);
        out += ',';
        out += std::to_string(r.n_invalid);
        out += ',';
        out += text::format_double(r.lambda_nominal);
        out += '\n';
    }
    return out;
}

inline std::string replicates_csv(const std::vector<ReplicateRecord>& rows) {
    std::string out = "scenario_id,pattern_id,estimator,replicate,lambda_true,lambda_hat,k_hat,valid,censored_rate\n";
    for (const auto& r : rows) {
        out += r.scenario_id;
        out += ',';
        out += r.pattern_id;
        out += ',';
        out += estimators::estimator_name(r.est);
        out += ',';
        out += std::to_string(r.replicate);
        out += ',';
        out += text::format_double(r.lambda_true);
        out += ',';
        if (!std::isnan(r.lambda_hat)) out += text::format_double(r.lambda_hat);
        out += ',';
        if (!std::isnan(r.k_hat)) out += text::format_double(r.k_hat);
        out += ',';
        out += r.valid ? "1" : "0";
        out += ',';
        out += text::format_double(r.censored_rate);
        out += '\n';
    }
    return out;
}

}  // namespace pcqm::evaluate
