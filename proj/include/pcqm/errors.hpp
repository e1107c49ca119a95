#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pcqm {

/// Numerical routine failed to converge or lost precision.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The requested estimator is not defined for the given design (e.g. ell=1).
class not_applicable_error : public std::runtime_error {
public:
    explicit not_applicable_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every sector of the sample is censored; no estimator is defined.
class all_censored_error : public std::runtime_error {
public:
    explicit all_censored_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The sample is algebraically degenerate for the requested statistic.
class degenerate_sample_error : public std::runtime_error {
public:
    explicit degenerate_sample_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad run configuration or unusable input file.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Optimizer did not converge; carries the best point seen so far.
class optimization_error : public std::runtime_error {
public:
    optimization_error(const std::string& msg, std::vector<double> best_arg, double best_value)
        : std::runtime_error(msg), best_argmax(std::move(best_arg)), best_value(best_value) {}

    std::vector<double> best_argmax;
    double best_value;
};

}  // namespace pcqm
