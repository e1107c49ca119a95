#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcqm/errors.hpp"
#include "pcqm/evaluate.hpp"
#include "pcqm/text.hpp"

namespace pcqm::config {

using nlohmann::json;

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw config_error(path + ": " + e.what());
    }
}

namespace detail {

inline double need_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) throw config_error(where + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

inline std::string need_string(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string()) throw config_error(where + ": missing string field '" + key + "'");
    return j.at(key).get<std::string>();
}

inline std::vector<estimators::EstimatorId> parse_estimators(const json& j, const std::string& where) {
    std::vector<estimators::EstimatorId> out;
    if (j.is_string()) {
        if (j.get<std::string>() == "censored-all") return estimators::censored_estimator_set();
        throw config_error(where + ": estimators must be a list of names or \"censored-all\"");
    }
    if (!j.is_array() || j.empty()) throw config_error(where + ": estimators must be a nonempty list");
    for (const auto& item : j) {
        if (!item.is_string()) throw config_error(where + ": estimator names must be strings");
        auto id = estimators::estimator_from_name(item.get<std::string>());
        if (!id) throw config_error(where + ": unknown estimator '" + item.get<std::string>() + "'");
        out.push_back(*id);
    }
    return out;
}

inline simulate::StudyWindow parse_window(const json& j, const std::string& where) {
    simulate::StudyWindow w;
    w.x_min = need_number(j, "x_min", where);
    w.y_min = need_number(j, "y_min", where);
    w.x_max = need_number(j, "x_max", where);
    w.y_max = need_number(j, "y_max", where);
    w.validate();
    return w;
}

inline simulate::SurveyDesign parse_design(const json& j, const std::string& where, int ell_override = 0) {
    simulate::SurveyDesign d;
    d.n = static_cast<int>(need_number(j, "n", where));
    d.q = static_cast<int>(need_number(j, "q", where));
    d.ell = ell_override > 0 ? ell_override : static_cast<int>(need_number(j, "ell", where));
    d.C = need_number(j, "C", where);
    if (j.contains("buffer")) d.buffer = need_number(j, "buffer", where);
    d.validate();
    return d;
}

inline evaluate::ProcessSpec parse_process(const json& j, const std::string& where, double sigma_override = 0.0) {
    evaluate::ProcessSpec p;
    const std::string type = need_string(j, "type", where);
    if (type == "csr") {
        p.kind = evaluate::ProcessKind::csr;
        p.lambda = need_number(j, "lambda", where);
    } else if (type == "thomas") {
        p.kind = evaluate::ProcessKind::thomas;
        p.kappa = need_number(j, "kappa", where);
        p.mu = need_number(j, "mu", where);
        p.sigma = sigma_override > 0.0 ? sigma_override : need_number(j, "sigma", where);
    } else if (type == "stem_map") {
        p.kind = evaluate::ProcessKind::stem_map;
        p.stem_path = need_string(j, "stem_path", where);
        p.window_path = need_string(j, "window_path", where);
        if (j.contains("species")) p.species = need_string(j, "species", where);
        if (j.contains("min_count")) p.min_count = static_cast<int>(need_number(j, "min_count", where));
    } else {
        throw config_error(where + ": unknown process type '" + type + "'");
    }
    return p;
}

}  // namespace detail

/// Parse one scenario object. `sigma` (in the process block) and `ell` (in the
/// design block) may be arrays; the scenario is then expanded over their cross
/// product with `_s<sigma>` / `_l<ell>` id suffixes.
inline std::vector<evaluate::ScenarioConfig> parse_scenario(const json& j) {
    const std::string id = detail::need_string(j, "id", "scenario");
    const std::string where = "scenario " + id;
    if (!j.contains("process") || !j.contains("design"))
        throw config_error(where + ": needs 'process' and 'design' blocks");

    std::vector<double> sigmas;
    if (j.at("process").contains("sigma") && j.at("process").at("sigma").is_array())
        for (const auto& s : j.at("process").at("sigma")) sigmas.push_back(s.get<double>());
    std::vector<int> ells;
    if (j.at("design").contains("ell") && j.at("design").at("ell").is_array())
        for (const auto& e : j.at("design").at("ell")) ells.push_back(e.get<int>());

    auto build = [&](double sigma, int ell, const std::string& suffix) {
        evaluate::ScenarioConfig sc;
        sc.id = id + suffix;
        sc.process = detail::parse_process(j.at("process"), where, sigma);
        if (j.contains("window")) sc.window = detail::parse_window(j.at("window"), where);
        sc.design = detail::parse_design(j.at("design"), where, ell);
        sc.n_patterns = static_cast<int>(detail::need_number(j, "n_patterns", where));
        sc.n_designs = static_cast<int>(detail::need_number(j, "n_designs", where));
        if (!j.contains("estimators")) throw config_error(where + ": missing estimator list");
        sc.estimator_ids = detail::parse_estimators(j.at("estimators"), where);
        return sc;
    };

    std::vector<evaluate::ScenarioConfig> out;
    if (sigmas.empty() && ells.empty()) {
        out.push_back(build(0.0, 0, ""));
        return out;
    }
    if (sigmas.empty()) sigmas.push_back(0.0);
    if (ells.empty()) ells.push_back(0);
    for (double s : sigmas) {
        for (int e : ells) {
            std::string suffix;
            if (s > 0.0) suffix += "_s" + text::format_double(s);
            if (e > 0) suffix += "_l" + std::to_string(e);
            out.push_back(build(s, e, suffix));
        }
    }
    return out;
}

inline evaluate::BenchmarkConfig parse_benchmark(const json& j) {
    evaluate::BenchmarkConfig cfg;
    if (!j.contains("master_seed") || !j.at("master_seed").is_number())
        throw config_error("benchmark config: missing numeric 'master_seed'");
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (!j.contains("scenarios") || !j.at("scenarios").is_array())
        throw config_error("benchmark config: missing 'scenarios' array");
    for (const auto& s : j.at("scenarios")) {
        auto expanded = parse_scenario(s);
        cfg.scenarios.insert(cfg.scenarios.end(), expanded.begin(), expanded.end());
    }
    cfg.validate();
    return cfg;
}

/// Normalized (sweeps expanded, defaults resolved) config: re-running this
/// manifest reproduces the run byte for byte.
inline json benchmark_manifest(const evaluate::BenchmarkConfig& cfg) {
    json scenarios = json::array();
    for (const auto& sc : cfg.scenarios) {
        json p;
        switch (sc.process.kind) {
            case evaluate::ProcessKind::csr:
                p = {{"type", "csr"}, {"lambda", sc.process.lambda}};
                break;
            case evaluate::ProcessKind::thomas:
                p = {{"type", "thomas"}, {"kappa", sc.process.kappa}, {"mu", sc.process.mu}, {"sigma", sc.process.sigma}};
                break;
            case evaluate::ProcessKind::stem_map:
                p = {{"type", "stem_map"},
                     {"stem_path", sc.process.stem_path},
                     {"window_path", sc.process.window_path},
                     {"min_count", sc.process.min_count}};
                if (!sc.process.species.empty()) p["species"] = sc.process.species;
                break;
        }
        json names = json::array();
        for (auto id : sc.estimator_ids) names.push_back(estimators::estimator_name(id));
        json s{{"id", sc.id},
               {"process", p},
               {"design",
                {{"n", sc.design.n}, {"q", sc.design.q}, {"ell", sc.design.ell}, {"C", sc.design.C},
                 {"buffer", sc.design.effective_buffer()}}},
               {"n_patterns", sc.n_patterns},
               {"n_designs", sc.n_designs},
               {"estimators", names}};
        if (sc.process.kind != evaluate::ProcessKind::stem_map) s["window"] = simulate::window_to_json(sc.window);
        scenarios.push_back(std::move(s));
    }
    return json{{"master_seed", cfg.master_seed}, {"scenarios", std::move(scenarios)}};
}

}  // namespace pcqm::config
