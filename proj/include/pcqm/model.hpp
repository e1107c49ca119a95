#pragma once

#include <cmath>
#include <utility>

#include "pcqm/errors.hpp"
#include "pcqm/specfun.hpp"

namespace pcqm::model {

inline constexpr double pi = 3.14159265358979323846;

/// Homogeneous Poisson field seen through a q-sector, ell-th-neighbor design.
struct CsrModel {
    double lambda;  // individuals per unit area
    int q;          // sectors per sampling point
    int ell;        // neighbor order within a sector

    CsrModel(double lambda, int q, int ell) : lambda(lambda), q(q), ell(ell) {
        if (!(lambda > 0.0)) throw std::domain_error("CsrModel: lambda must be positive");
        if (q < 1) throw std::domain_error("CsrModel: q must be >= 1");
        if (ell < 1) throw std::domain_error("CsrModel: ell must be >= 1");
    }

    /// Sector intensity scale a = pi*lambda/q; sector count in radius r is
    /// Poisson with mean a*r^2.
    double sector_rate() const { return pi * lambda / q; }
};

/// Negative-binomial counts; k is the aggregation parameter (k -> inf is CSR).
struct NbdModel {
    double lambda;
    double k;
    int q;
    int ell;

    NbdModel(double lambda, double k, int q, int ell) : lambda(lambda), k(k), q(q), ell(ell) {
        if (!(lambda > 0.0)) throw std::domain_error("NbdModel: lambda must be positive");
        if (!(k > 0.0)) throw std::domain_error("NbdModel: k must be positive");
        if (q < 1) throw std::domain_error("NbdModel: q must be >= 1");
        if (ell < 1) throw std::domain_error("NbdModel: ell must be >= 1");
    }

    double sector_rate() const { return pi * lambda / q; }
};

// ---------------------------------------------------------------------------
// CSR distance distribution
// ---------------------------------------------------------------------------

inline double csr_log_pdf(const CsrModel& m, double r) {
    if (!(r > 0.0)) throw std::domain_error("csr_pdf: r must be positive");
    const double a = m.sector_rate();
    return std::log(2.0) + m.ell * std::log(a) + (2.0 * m.ell - 1.0) * std::log(r) - a * r * r -
           specfun::ln_gamma(static_cast<double>(m.ell));
}

inline double csr_pdf(const CsrModel& m, double r) { return std::exp(csr_log_pdf(m, r)); }

inline double csr_cdf(const CsrModel& m, double r) {
    if (!(r >= 0.0)) throw std::domain_error("csr_cdf: r must be nonnegative");
    if (r == 0.0) return 0.0;
    return specfun::reg_lower_gamma(static_cast<double>(m.ell), m.sector_rate() * r * r);
}

/// E[R^u] = (q/(pi lambda))^{u/2} Gamma(ell + u/2) / Gamma(ell), u > -2 ell.
inline double csr_moment(const CsrModel& m, double u) {
    const double alpha = m.ell + 0.5 * u;
    if (!(alpha > 0.0)) throw std::domain_error("csr_moment: requires u > -2*ell");
    const double a = m.sector_rate();
    return std::exp(-0.5 * u * std::log(a) + specfun::ln_gamma(alpha) - specfun::ln_gamma(static_cast<double>(m.ell)));
}

/// E[R^u | R > C]: ratio of upper incomplete gammas at T = a C^2.
inline double csr_truncated_moment_upper(const CsrModel& m, double u, double C) {
    if (!(C > 0.0)) throw std::domain_error("csr_truncated_moment_upper: C must be positive");
    const double a = m.sector_rate();
    const double T = a * C * C;
    const double ell = static_cast<double>(m.ell);
    const double alpha = ell + 0.5 * u;
    if (!(alpha > 0.0)) throw std::domain_error("csr_truncated_moment_upper: requires u > -2*ell");
    const double ln_den = specfun::ln_reg_upper_gamma(ell, T) + specfun::ln_gamma(ell);
    if (ln_den < -690.0) throw numeric_error("csr_truncated_moment_upper: survival probability underflows");
    const double ln_num = specfun::ln_reg_upper_gamma(alpha, T) + specfun::ln_gamma(alpha);
    return std::exp(-0.5 * u * std::log(a) + ln_num - ln_den);
}

/// E[R^u | R <= C]: ratio of lower incomplete gammas at m_C = a C^2.
inline double csr_truncated_moment_lower(const CsrModel& m, double u, double C) {
    if (!(C > 0.0)) throw std::domain_error("csr_truncated_moment_lower: C must be positive");
    const double a = m.sector_rate();
    const double ell = static_cast<double>(m.ell);
    const double alpha = ell + 0.5 * u;
    if (!(alpha > 0.0)) throw std::domain_error("csr_truncated_moment_lower: requires u > -2*ell");
    if (std::isinf(C)) return csr_moment(m, u);
    const double mc = a * C * C;
    const double den = specfun::reg_lower_gamma(ell, mc);
    if (den <= 0.0) throw numeric_error("csr_truncated_moment_lower: P(R <= C) is zero");
    const double num = specfun::reg_lower_gamma(alpha, mc);
    return std::exp(-0.5 * u * std::log(a) + specfun::ln_gamma(alpha) - specfun::ln_gamma(ell)) * num / den;
}

// ---------------------------------------------------------------------------
// NBD distance distribution
// ---------------------------------------------------------------------------

inline double nbd_log_pdf(const NbdModel& m, double r) {
    if (!(r > 0.0)) throw std::domain_error("nbd_pdf: r must be positive");
    const double a = m.sector_rate();
    // Gamma(ell + k)/Gamma(k) via the exact product: ell is an integer, so no
    // cancellation even for huge k.
    return std::log(2.0) + m.ell * (std::log(a) - std::log(m.k)) + (2.0 * m.ell - 1.0) * std::log(r) +
           specfun::ln_gamma_ratio(m.k, m.ell) - specfun::ln_gamma(static_cast<double>(m.ell)) -
           (m.ell + m.k) * std::log1p(a * r * r / m.k);
}

inline double nbd_pdf(const NbdModel& m, double r) { return std::exp(nbd_log_pdf(m, r)); }

inline double nbd_beta_w(const NbdModel& m, double r) {
    const double t = m.sector_rate() * r * r;
    return t / (t + m.k);
}

inline double nbd_cdf(const NbdModel& m, double r) {
    if (!(r >= 0.0)) throw std::domain_error("nbd_cdf: r must be nonnegative");
    if (r == 0.0) return 0.0;
    return specfun::reg_inc_beta(nbd_beta_w(m, r), static_cast<double>(m.ell), m.k);
}

/// ln P(R > C). The sector count is negative binomial, so the survival is the
/// probability of fewer than ell individuals in the sector: a short log-sum
/// over the NB pmf. Exact for any k, including the CSR limit.
inline double nbd_log_survival(const NbdModel& m, double C) {
    const double t = m.sector_rate() * C * C;
    const double w = t / (t + m.k);                 // NB success probability
    const double ln_w = std::log(w);
    const double ln_1mw = std::log1p(-w);           // = log(k/(t+k))
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(m.ell);
    for (int j = 0; j < m.ell; ++j) {
        double lt = specfun::ln_gamma_ratio(m.k, j) - specfun::ln_gamma(j + 1.0) + m.k * ln_1mw + j * ln_w;
        terms[j] = lt;
        if (lt > max_term) max_term = lt;
    }
    double s = 0.0;
    for (double lt : terms) s += std::exp(lt - max_term);
    return max_term + std::log(s);
}

inline double nbd_survival(const NbdModel& m, double C) { return std::exp(nbd_log_survival(m, C)); }

/// E[R^u] = (kq/(pi lambda))^{u/2} Gamma(ell+u/2) Gamma(k-u/2) / (Gamma(ell) Gamma(k)),
/// valid for -2 ell < u < 2 k.
inline double nbd_moment(const NbdModel& m, double u) {
    const double alpha = m.ell + 0.5 * u;
    const double beta = m.k - 0.5 * u;
    if (!(alpha > 0.0 && beta > 0.0)) throw std::domain_error("nbd_moment: requires -2*ell < u < 2*k");
    const double a = m.sector_rate();
    return std::exp(0.5 * u * (std::log(m.k) - std::log(a)) + specfun::ln_gamma(alpha) + specfun::ln_gamma(beta) -
                    specfun::ln_gamma(static_cast<double>(m.ell)) - specfun::ln_gamma(m.k));
}

/// Exact truncated moment E[R^u | R > C] under the NBD model: the complete
/// moment times a ratio of incomplete-beta tail masses.
inline double nbd_truncated_moment_upper(const NbdModel& m, double u, double C) {
    if (!(C >= 0.0)) throw std::domain_error("nbd_truncated_moment_upper: C must be nonnegative");
    if (!(m.k > 0.5 * u)) throw std::domain_error("nbd_truncated_moment_upper: requires k > u/2");
    if (C == 0.0) return nbd_moment(m, u);
    const double w = nbd_beta_w(m, C);
    const double den = specfun::reg_inc_beta_comp(w, static_cast<double>(m.ell), m.k);
    if (den < 1e-300) throw numeric_error("nbd_truncated_moment_upper: survival probability underflows");
    const double num = specfun::reg_inc_beta_comp(w, m.ell + 0.5 * u, m.k - 0.5 * u);
    return nbd_moment(m, u) * num / den;
}

/// E[R^u | R <= C] under the NBD model (companion to the tail moment).
inline double nbd_truncated_moment_lower(const NbdModel& m, double u, double C) {
    if (!(C > 0.0)) throw std::domain_error("nbd_truncated_moment_lower: C must be positive");
    if (!(m.k > 0.5 * u)) throw std::domain_error("nbd_truncated_moment_lower: requires k > u/2");
    const double w = nbd_beta_w(m, C);
    const double den = specfun::reg_inc_beta(w, static_cast<double>(m.ell), m.k);
    if (den <= 0.0) throw numeric_error("nbd_truncated_moment_lower: P(R <= C) is zero");
    const double num = specfun::reg_inc_beta(w, m.ell + 0.5 * u, m.k - 0.5 * u);
    return nbd_moment(m, u) * num / den;
}

// ---------------------------------------------------------------------------
// Bias diagnostics for the CSR-based imputation of censored NBD moments
// ---------------------------------------------------------------------------

/// First-order coefficient in the 1/k expansion of E[R^u | R > C] around its
/// CSR limit: E_nbd = E_csr + delta1/k + O(1/k^2).
inline double delta1(int ell, double u, double lambda, int q, double C) {
    if (ell < 1 || q < 1) throw std::domain_error("delta1: ell and q must be >= 1");
    if (!(lambda > 0.0) || !(C > 0.0)) throw std::domain_error("delta1: lambda and C must be positive");
    const double a = pi * lambda / q;
    const double T = a * C * C;
    const double alpha = ell + 0.5 * u;
    if (!(alpha > 0.0)) throw std::domain_error("delta1: requires u > -2*ell");
    auto upper = [&](double s) { return specfun::reg_upper_gamma(s, T) * std::exp(specfun::ln_gamma(s)); };
    const double ge = upper(static_cast<double>(ell));
    const double num = -ell * upper(alpha + 1.0) * ge + 0.5 * upper(alpha + 2.0) * ge +
                       ell * upper(alpha) * upper(ell + 1.0) - 0.5 * upper(alpha) * upper(ell + 2.0);
    return std::exp(-0.5 * u * std::log(a)) * num / (ge * ge);
}

/// Asymptotic (n -> inf) biases of the two censoring-adjusted moments against
/// the true NBD moment: first the Poisson-corrected M_u, then the
/// imputation-based adjusted moment seeded by the censored Pollard density.
inline std::pair<double, double> asymptotic_bias_pair(const NbdModel& m, double u, double C) {
    if (!(m.k > 0.5 * u)) throw std::domain_error("asymptotic_bias_pair: requires k > u/2");
    if (!(m.k > 1.0)) throw std::domain_error("asymptotic_bias_pair: requires k > 1 (second-moment limit)");
    if (!(C > 0.0)) throw std::domain_error("asymptotic_bias_pair: C must be positive");

    const double mu_true = nbd_moment(m, u);
    const double p0 = nbd_survival(m, C);
    if (p0 <= 0.0) return {0.0, 0.0};  // no censoring in the limit: both adjustments are exact

    const double e_low_u = nbd_truncated_moment_lower(m, u, C);
    const double e_low_2 = nbd_truncated_moment_lower(m, 2.0, C);

    const double mc = specfun::solve_m_c(m.ell, p0);
    auto poisson_adjust = [&](double order, double conditional) {
        const double alpha = m.ell + 0.5 * order;
        return conditional * (1.0 - p0) / specfun::reg_lower_gamma(alpha, mc);
    };
    const double mu_limit = poisson_adjust(u, e_low_u);
    const double m2_limit = poisson_adjust(2.0, e_low_2);

    const double lambda_init = m.ell * m.q / (pi * m2_limit);
    const CsrModel csr_init(lambda_init, m.q, m.ell);
    const double adjusted_limit = (1.0 - p0) * e_low_u + p0 * csr_truncated_moment_upper(csr_init, u, C);

    return {mu_limit - mu_true, adjusted_limit - mu_true};
}

}  // namespace pcqm::model
