#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pcqm/errors.hpp"
#include "pcqm/model.hpp"
#include "pcqm/optimize.hpp"
#include "pcqm/sample.hpp"
#include "pcqm/specfun.hpp"

namespace pcqm::estimators {

using model::pi;
using sample::DistanceSample;

enum class EstimatorId {
    cottam,
    pollard,
    csr_mle,
    morisita_m1,
    morisita_m2,
    shen,
    shen_k,
    nbd_mle,
    warde_petran,
    dahdouh_koedam,
    cottam_censored,
    pollard_censored,
    csr_mle_censored,
    shen_censored,
    morisita_censored,
    nbd_mle_censored,
};

inline const char* estimator_name(EstimatorId id) {
    switch (id) {
        case EstimatorId::cottam: return "cottam";
        case EstimatorId::pollard: return "pollard";
        case EstimatorId::csr_mle: return "csr-mle";
        case EstimatorId::morisita_m1: return "morisita-m1";
        case EstimatorId::morisita_m2: return "morisita-m2";
        case EstimatorId::shen: return "shen";
        case EstimatorId::shen_k: return "shen-k";
        case EstimatorId::nbd_mle: return "nbd-mle";
        case EstimatorId::warde_petran: return "warde-petran";
        case EstimatorId::dahdouh_koedam: return "dahdouh-koedam";
        case EstimatorId::cottam_censored: return "cottam-censored";
        case EstimatorId::pollard_censored: return "pollard-censored";
        case EstimatorId::csr_mle_censored: return "csr-mle-censored";
        case EstimatorId::shen_censored: return "shen-censored";
        case EstimatorId::morisita_censored: return "morisita-censored";
        case EstimatorId::nbd_mle_censored: return "nbd-mle-censored";
    }
    return "?";
}

inline std::optional<EstimatorId> estimator_from_name(const std::string& name) {
    static const EstimatorId all[] = {
        EstimatorId::cottam,          EstimatorId::pollard,          EstimatorId::csr_mle,
        EstimatorId::morisita_m1,     EstimatorId::morisita_m2,      EstimatorId::shen,
        EstimatorId::shen_k,          EstimatorId::nbd_mle,          EstimatorId::warde_petran,
        EstimatorId::dahdouh_koedam,  EstimatorId::cottam_censored,  EstimatorId::pollard_censored,
        EstimatorId::csr_mle_censored, EstimatorId::shen_censored,   EstimatorId::morisita_censored,
        EstimatorId::nbd_mle_censored};
    for (EstimatorId id : all)
        if (name == estimator_name(id)) return id;
    return std::nullopt;
}

/// The seven estimators defined for right-censored samples.
inline std::vector<EstimatorId> censored_estimator_set() {
    return {EstimatorId::dahdouh_koedam,    EstimatorId::cottam_censored, EstimatorId::pollard_censored,
            EstimatorId::csr_mle_censored,  EstimatorId::morisita_censored, EstimatorId::shen_censored,
            EstimatorId::nbd_mle_censored};
}

struct DensityEstimate {
    double lambda_hat = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> k_hat;  // +infinity marks a CSR-consistent fit
    EstimatorId id{};
    bool valid = true;
    std::vector<std::string> warnings;
};

enum class AdjustmentMethod { poisson_correction, nbd_imputation };

/// A censoring-adjusted sample moment of order u.
struct AdjustedMoment {
    double u = 0.0;
    double value = 0.0;
    AdjustmentMethod method{};
    double lambda_init = std::numeric_limits<double>::quiet_NaN();  // nbd_imputation only
};

namespace detail {

inline void require_complete(const DistanceSample& s, const char* who) {
    if (s.censored_count() != 0)
        throw std::domain_error(std::string(who) + ": requires complete data (no censored sectors)");
}

inline void require_some_observed(const DistanceSample& s, const char* who) {
    if (s.censored_count() == s.cell_count())
        throw all_censored_error(std::string(who) + ": every sector is censored");
}

inline DensityEstimate make(EstimatorId id, double lambda) {
    DensityEstimate e;
    e.id = id;
    e.lambda_hat = lambda;
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        e.valid = false;
        e.warnings.push_back("non-positive or non-finite density estimate");
    }
    return e;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Complete-data estimators
// ---------------------------------------------------------------------------

/// Mean-distance estimator: q*ell / (4 * mean(r)^2).
inline DensityEstimate cottam(const DistanceSample& s) {
    detail::require_complete(s, "cottam");
    const double mean = s.observed_power_sum(1.0) / s.cell_count();
    return detail::make(EstimatorId::cottam, s.q() * s.ell() / (4.0 * mean * mean));
}

/// Second-moment estimator: q(nq*ell - 1) / (pi * sum r^2).
inline DensityEstimate pollard(const DistanceSample& s) {
    detail::require_complete(s, "pollard");
    const long long nql = static_cast<long long>(s.cell_count()) * s.ell();
    if (nql <= 1) throw degenerate_sample_error("pollard: requires nq*ell > 1");
    return detail::make(EstimatorId::pollard, s.q() * (nql - 1.0) / (pi * s.observed_power_sum(2.0)));
}

/// Maximum-likelihood estimator under CSR: nq^2*ell / (pi * sum r^2).
inline DensityEstimate csr_mle_complete(const DistanceSample& s) {
    detail::require_complete(s, "csr_mle_complete");
    const double nq = s.cell_count();
    return detail::make(EstimatorId::csr_mle, nq * s.q() * s.ell() / (pi * s.observed_power_sum(2.0)));
}

/// Inverse-square-distance estimator; defined only for ell > 1.
inline DensityEstimate morisita_m1(const DistanceSample& s) {
    detail::require_complete(s, "morisita_m1");
    if (s.ell() <= 1) throw not_applicable_error("morisita_m1: requires ell > 1");
    return detail::make(EstimatorId::morisita_m1, (s.ell() - 1.0) / (pi * s.n()) * s.observed_power_sum(-2.0));
}

/// Per-point harmonic estimator over sector sums of r^2.
inline DensityEstimate morisita_m2(const DistanceSample& s) {
    detail::require_complete(s, "morisita_m2");
    const long long lq = static_cast<long long>(s.ell()) * s.q();
    if (lq <= 1) throw degenerate_sample_error("morisita_m2: requires ell*q > 1");
    double acc = 0.0;
    for (int i = 0; i < s.n(); ++i) {
        double sq = 0.0;
        for (int j = 0; j < s.q(); ++j) {
            const double r = s.cell(i, j).distance;
            sq += r * r;
        }
        if (!(sq > 0.0)) throw std::domain_error("morisita_m2: zero sector distances at a focal point");
        acc += s.q() / sq;
    }
    return detail::make(EstimatorId::morisita_m2, (lq - 1.0) / (pi * s.n()) * acc);
}

/// Moment-combination estimator under the NBD model. A non-positive value is
/// flagged invalid rather than clamped.
inline DensityEstimate shen(const DistanceSample& s) {
    detail::require_complete(s, "shen");
    const double sum_r = s.observed_power_sum(1.0);
    const double sum_inv = s.observed_power_sum(-1.0);
    const double sum_r2 = s.observed_power_sum(2.0);
    const double nq = s.cell_count();
    const double lambda =
        s.q() * (2.0 * s.ell() - 1.0) * sum_inv / (pi * sum_r) - nq * s.q() * s.ell() / (pi * sum_r2);
    DensityEstimate e = detail::make(EstimatorId::shen, lambda);
    if (!e.valid) e.warnings.push_back("aggregation signal too weak for the moment combination");
    return e;
}

/// Companion aggregation-parameter estimator from the same moment system;
/// also reports the paired density estimate.
inline DensityEstimate shen_k(const DistanceSample& s) {
    detail::require_complete(s, "shen_k");
    const double sum_r = s.observed_power_sum(1.0);
    const double sum_inv = s.observed_power_sum(-1.0);
    const double sum_r2 = s.observed_power_sum(2.0);
    const double nq = s.cell_count();
    const double den = sum_inv * sum_r2 * (1.0 - 2.0 * s.ell()) / nq + sum_r * s.ell();
    if (den == 0.0) throw degenerate_sample_error("shen_k: moment system is singular for this sample");
    const double k = 1.0 - sum_r * s.ell() / den;
    DensityEstimate e = shen(s);
    e.id = EstimatorId::shen_k;
    e.k_hat = k;
    if (!(k > 0.0) || !std::isfinite(k)) {
        e.valid = false;
        e.warnings.push_back("aggregation estimate outside (0, inf)");
    }
    return e;
}

// ---------------------------------------------------------------------------
// Censoring-adjusted moments
// ---------------------------------------------------------------------------

/// Poisson-corrected unconditional moment M_u: the observed power sum rescaled
/// by Gamma(ell+u/2)/gamma(ell+u/2, m_C) with m_C matched to the censored
/// fraction. Reduces to the plain sample moment when nothing is censored.
inline AdjustedMoment adjusted_moment_poisson(const DistanceSample& s, double u) {
    detail::require_some_observed(s, "adjusted_moment_poisson");
    const double alpha = s.ell() + 0.5 * u;
    if (!(alpha > 0.0)) throw std::domain_error("adjusted_moment_poisson: requires u > -2*ell");
    AdjustedMoment m;
    m.u = u;
    m.method = AdjustmentMethod::poisson_correction;
    if (u == 0.0) {
        m.value = 1.0;  // exact by the defining equation of m_C
        return m;
    }
    const double raw = s.observed_power_sum(u) / s.cell_count();
    if (s.censored_count() == 0) {
        m.value = raw;
        return m;
    }
    const double mc = specfun::solve_m_c(s.ell(), s.censored_fraction());
    m.value = raw / specfun::reg_lower_gamma(alpha, mc);
    return m;
}

/// Imputation-based moment: censored sectors contribute the CSR conditional
/// expectation E[R^u | R > C] evaluated at a pilot density.
inline AdjustedMoment adjusted_moment_nbd(const DistanceSample& s, double u, double lambda_init) {
    detail::require_some_observed(s, "adjusted_moment_nbd");
    if (!(lambda_init > 0.0)) throw std::domain_error("adjusted_moment_nbd: lambda_init must be positive");
    AdjustedMoment m;
    m.u = u;
    m.method = AdjustmentMethod::nbd_imputation;
    m.lambda_init = lambda_init;
    double total = s.observed_power_sum(u);
    if (s.censored_count() > 0) {
        const model::CsrModel pilot(lambda_init, s.q(), s.ell());
        total += s.censored_count() * model::csr_truncated_moment_upper(pilot, u, s.censor_radius());
    }
    m.value = total / s.cell_count();
    return m;
}

// ---------------------------------------------------------------------------
// Censored-data estimators
// ---------------------------------------------------------------------------

/// Censored-proportion correction of the mean-distance estimator (ell = 1).
inline DensityEstimate warde_petran(const DistanceSample& s) {
    if (s.ell() != 1) throw not_applicable_error("warde_petran: defined only for ell = 1");
    detail::require_some_observed(s, "warde_petran");
    const double p0 = s.censored_fraction();
    if (s.censored_count() == 0) {
        DensityEstimate e = cottam(s);
        e.id = EstimatorId::warde_petran;
        return e;
    }
    const double mean = s.observed_power_sum(1.0) / s.observed_count();
    const double g = specfun::lower_inc_gamma(1.5, -std::log(p0));
    const double lambda = s.q() / (pi * mean * mean) * g * g / ((1.0 - p0) * (1.0 - p0));
    return detail::make(EstimatorId::warde_petran, lambda);
}

/// Empirical (1 - p0) shrinkage of the mean-distance estimator (ell = 1).
inline DensityEstimate dahdouh_koedam(const DistanceSample& s) {
    if (s.ell() != 1) throw not_applicable_error("dahdouh_koedam: defined only for ell = 1");
    detail::require_some_observed(s, "dahdouh_koedam");
    const double mean = s.observed_power_sum(1.0) / s.observed_count();
    const double lambda = s.q() * (1.0 - s.censored_fraction()) / (4.0 * mean * mean);
    return detail::make(EstimatorId::dahdouh_koedam, lambda);
}

/// Mean-distance estimator on the Poisson-corrected first moment.
inline DensityEstimate cottam_censored(const DistanceSample& s) {
    detail::require_some_observed(s, "cottam_censored");
    const double m1 = adjusted_moment_poisson(s, 1.0).value;
    return detail::make(EstimatorId::cottam_censored, s.q() * s.ell() / (4.0 * m1 * m1));
}

/// Second-moment estimator on the Poisson-corrected second moment.
inline DensityEstimate pollard_censored(const DistanceSample& s) {
    detail::require_some_observed(s, "pollard_censored");
    const long long nql = static_cast<long long>(s.cell_count()) * s.ell();
    if (nql <= 1) throw degenerate_sample_error("pollard_censored: requires nq*ell > 1");
    const double m2 = adjusted_moment_poisson(s, 2.0).value;
    return detail::make(EstimatorId::pollard_censored, (nql - 1.0) / (pi * s.n() * m2));
}

/// Log-likelihood of a censored sample under CSR, as a function of lambda.
/// Exposed so the numeric optimizer path can be exercised directly.
class CsrCensoredLoglik {
public:
    explicit CsrCensoredLoglik(const DistanceSample& s)
        : q_(s.q()), ell_(s.ell()), C_(s.censor_radius()), n_obs_(s.observed_count()), n0_(s.censored_count()) {
        for (const auto& c : s.cells()) {
            if (c.censored) continue;
            sum_log_r_ += std::log(c.distance);
            sum_r2_ += c.distance * c.distance;
        }
    }

    double operator()(double lambda) const {
        if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
        const double a = pi * lambda / q_;
        double ll = n_obs_ * (std::log(2.0) + ell_ * std::log(a) - specfun::ln_gamma(ell_)) +
                    (2.0 * ell_ - 1.0) * sum_log_r_ - a * sum_r2_;
        if (n0_ > 0) ll += n0_ * specfun::ln_reg_upper_gamma(ell_, a * C_ * C_);
        return ll;
    }

private:
    double q_, ell_, C_;
    int n_obs_, n0_;
    double sum_log_r_ = 0.0, sum_r2_ = 0.0;
};

/// Censored CSR maximum-likelihood estimator. Closed form for ell = 1;
/// golden-section ascent in log-density for higher orders.
inline DensityEstimate csr_mle_censored(const DistanceSample& s) {
    const int n0 = s.censored_count();
    const int nq = s.cell_count();
    if (n0 == nq) {
        if (s.ell() == 1) {
            DensityEstimate e;
            e.id = EstimatorId::csr_mle_censored;
            e.lambda_hat = 0.0;
            e.valid = false;
            e.warnings.push_back("all sectors censored; likelihood maximized at zero density");
            return e;
        }
        throw all_censored_error("csr_mle_censored: every sector is censored");
    }
    if (n0 == 0) {
        // no censored term in the likelihood: the complete-data solution is exact
        DensityEstimate e = csr_mle_complete(s);
        e.id = EstimatorId::csr_mle_censored;
        return e;
    }
    if (s.ell() == 1) {
        const double C = s.censor_radius();
        const double lambda = s.q() * (nq - n0) / (pi * (s.observed_power_sum(2.0) + n0 * C * C));
        return detail::make(EstimatorId::csr_mle_censored, lambda);
    }
    const double lambda_init = pollard_censored(s).lambda_hat;
    const CsrCensoredLoglik loglik(s);
    auto res = optimize::maximize_1d([&](double t) { return loglik(std::exp(t)); },
                                     std::log(lambda_init) - std::log(100.0),
                                     std::log(lambda_init) + std::log(100.0));
    return detail::make(EstimatorId::csr_mle_censored, std::exp(res.argmax[0]));
}

/// Censored extension of the NBD moment estimator via imputed moments.
inline DensityEstimate shen_censored(const DistanceSample& s,
                                     std::optional<double> lambda_init = std::nullopt) {
    detail::require_some_observed(s, "shen_censored");
    const double li = lambda_init ? *lambda_init : pollard_censored(s).lambda_hat;
    const double e_inv = adjusted_moment_nbd(s, -1.0, li).value;
    const double e_1 = adjusted_moment_nbd(s, 1.0, li).value;
    const double e_2 = adjusted_moment_nbd(s, 2.0, li).value;
    const double lambda =
        s.q() * (2.0 * s.ell() - 1.0) * e_inv / (pi * e_1) - s.q() * s.ell() / (pi * e_2);
    DensityEstimate e = detail::make(EstimatorId::shen_censored, lambda);
    if (!e.valid) e.warnings.push_back("aggregation signal too weak for the moment combination");
    return e;
}

/// Censored extension of the inverse-square-distance estimator (ell > 1).
inline DensityEstimate morisita_censored(const DistanceSample& s,
                                         std::optional<double> lambda_init = std::nullopt) {
    if (s.ell() <= 1) throw not_applicable_error("morisita_censored: requires ell > 1");
    detail::require_some_observed(s, "morisita_censored");
    const double li = lambda_init ? *lambda_init : pollard_censored(s).lambda_hat;
    const double e_inv2 = adjusted_moment_nbd(s, -2.0, li).value;
    return detail::make(EstimatorId::morisita_censored, s.q() * (s.ell() - 1.0) / pi * e_inv2);
}

/// Log-likelihood of a censored sample under the NBD model in (lambda, k).
class NbdCensoredLoglik {
public:
    explicit NbdCensoredLoglik(const DistanceSample& s)
        : q_(s.q()), ell_(s.ell()), C_(s.censor_radius()), n_obs_(s.observed_count()), n0_(s.censored_count()) {
        r2_.reserve(n_obs_);
        for (const auto& c : s.cells()) {
            if (c.censored) continue;
            r2_.push_back(c.distance * c.distance);
            sum_log_r_ += std::log(c.distance);
        }
    }

    double operator()(double lambda, double k) const {
        if (!(lambda > 0.0) || !(k > 0.0)) return -std::numeric_limits<double>::infinity();
        const double a = pi * lambda / q_;
        double ll = n_obs_ * (std::log(2.0) + ell_ * (std::log(a) - std::log(k)) +
                              specfun::ln_gamma_ratio(k, static_cast<int>(ell_)) - specfun::ln_gamma(ell_)) +
                    (2.0 * ell_ - 1.0) * sum_log_r_;
        double tail = 0.0;
        for (double r2 : r2_) tail += std::log1p(a * r2 / k);
        ll -= (ell_ + k) * tail;
        if (n0_ > 0) {
            const model::NbdModel m(lambda, k, static_cast<int>(q_), static_cast<int>(ell_));
            ll += n0_ * model::nbd_log_survival(m, C_);
        }
        return ll;
    }

private:
    double q_, ell_, C_;
    int n_obs_, n0_;
    std::vector<double> r2_;
    double sum_log_r_ = 0.0;
};

namespace detail {

// Above this the likelihood is flat in k and the fit is reported as
// CSR-consistent (k = +inf sentinel with the censored CSR MLE density).
inline constexpr double k_csr_limit = 1e6;

inline DensityEstimate nbd_mle_impl(const DistanceSample& s, EstimatorId id) {
    require_some_observed(s, "nbd_mle");
    const double lambda_init = pollard_censored(s).lambda_hat;
    double k_init = 2.0;
    if (s.censored_count() == 0) {
        try {
            DensityEstimate ks = shen_k(s);
            if (ks.valid) k_init = std::max(*ks.k_hat, 0.5);
        } catch (const degenerate_sample_error&) {
        }
    }

    const NbdCensoredLoglik loglik(s);
    std::vector<double> arg;
    bool csr_limit_hit = false;
    try {
        auto res = optimize::maximize_2d([&](double t, double p) { return loglik(std::exp(t), std::exp(p)); },
                                         std::log(lambda_init), std::log(k_init));
        arg = res.argmax;
    } catch (const optimization_error& err) {
        if (err.best_argmax.size() == 2 && std::exp(err.best_argmax[1]) > k_csr_limit) {
            arg = err.best_argmax;
            csr_limit_hit = true;
        } else {
            throw;
        }
    }
    const double k_hat = std::exp(arg[1]);
    if (csr_limit_hit || k_hat > k_csr_limit) {
        DensityEstimate e = csr_mle_censored(s);
        e.id = id;
        e.k_hat = std::numeric_limits<double>::infinity();
        e.warnings.push_back("likelihood flat in k; reporting the CSR-consistent fit");
        return e;
    }
    DensityEstimate e = make(id, std::exp(arg[0]));
    e.k_hat = k_hat;
    return e;
}

}  // namespace detail

/// Joint (lambda, k) maximum likelihood on complete data.
inline DensityEstimate nbd_mle_complete(const DistanceSample& s) {
    detail::require_complete(s, "nbd_mle_complete");
    return detail::nbd_mle_impl(s, EstimatorId::nbd_mle);
}

/// Joint (lambda, k) maximum likelihood with right-censored sectors.
inline DensityEstimate nbd_mle_censored(const DistanceSample& s) {
    return detail::nbd_mle_impl(s, EstimatorId::nbd_mle_censored);
}

/// Dispatch by estimator id, using default pilot densities where one is
/// needed. The CLI and the benchmark harness both route through here.
inline DensityEstimate apply_estimator(EstimatorId id, const DistanceSample& s) {
    switch (id) {
        case EstimatorId::cottam: return cottam(s);
        case EstimatorId::pollard: return pollard(s);
        case EstimatorId::csr_mle: return csr_mle_complete(s);
        case EstimatorId::morisita_m1: return morisita_m1(s);
        case EstimatorId::morisita_m2: return morisita_m2(s);
        case EstimatorId::shen: return shen(s);
        case EstimatorId::shen_k: return shen_k(s);
        case EstimatorId::nbd_mle: return nbd_mle_complete(s);
        case EstimatorId::warde_petran: return warde_petran(s);
        case EstimatorId::dahdouh_koedam: return dahdouh_koedam(s);
        case EstimatorId::cottam_censored: return cottam_censored(s);
        case EstimatorId::pollard_censored: return pollard_censored(s);
        case EstimatorId::csr_mle_censored: return csr_mle_censored(s);
        case EstimatorId::shen_censored: return shen_censored(s);
        case EstimatorId::morisita_censored: return morisita_censored(s);
        case EstimatorId::nbd_mle_censored: return nbd_mle_censored(s);
    }
    throw std::logic_error("apply_estimator: unknown estimator id");
}

}  // namespace pcqm::estimators
