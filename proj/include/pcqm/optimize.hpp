#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pcqm/errors.hpp"

namespace pcqm::optimize {

struct OptimResult {
    std::vector<double> argmax;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline bool usable(double v) { return std::isfinite(v) || v == -std::numeric_limits<double>::infinity(); }

// Central-difference Newton polish. Drives the finite-difference gradient of a
// smooth unimodal objective toward zero; each step is accepted only if it does
// not lower the objective, so a flat or ill-conditioned surface degrades to a
// no-op instead of a failure.
template <typename F>
void newton_polish(const F& f, std::vector<double>& x, double& fx, int dims, int max_steps = 12) {
    const double h = 1e-5;
    for (int step = 0; step < max_steps; ++step) {
        std::vector<double> grad(dims);
        std::vector<double> diag(dims);
        std::vector<double> xt = x;
        for (int i = 0; i < dims; ++i) {
            xt[i] = x[i] + h;
            double fp = f(xt);
            xt[i] = x[i] - h;
            double fm = f(xt);
            xt[i] = x[i];
            if (!std::isfinite(fp) || !std::isfinite(fm)) return;
            grad[i] = (fp - fm) / (2.0 * h);
            diag[i] = (fp - 2.0 * fx + fm) / (h * h);
        }
        std::vector<double> delta(dims);
        if (dims == 1) {
            if (!(diag[0] < 0.0)) return;
            delta[0] = -grad[0] / diag[0];
        } else {
            // 2-D Newton step with the cross term.
            xt = x;
            xt[0] += h;
            xt[1] += h;
            double fpp = f(xt);
            xt[0] -= 2.0 * h;
            double fmp = f(xt);
            xt[1] -= 2.0 * h;
            double fmm = f(xt);
            xt[0] += 2.0 * h;
            double fpm = f(xt);
            if (!std::isfinite(fpp) || !std::isfinite(fmp) || !std::isfinite(fmm) || !std::isfinite(fpm)) return;
            double cross = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            double det = diag[0] * diag[1] - cross * cross;
            // require a negative-definite Hessian (interior maximum)
            if (!(diag[0] < 0.0) || !(det > 0.0)) return;
            delta[0] = -(diag[1] * grad[0] - cross * grad[1]) / det;
            delta[1] = -(diag[0] * grad[1] - cross * grad[0]) / det;
        }
        double norm = 0.0;
        for (double d : delta) norm = std::max(norm, std::fabs(d));
        if (norm > 1.0) return;  // step too large to trust this quadratic model
        std::vector<double> xn = x;
        for (int i = 0; i < dims; ++i) xn[i] += delta[i];
        double fn = f(xn);
        if (!std::isfinite(fn) || fn < fx - 1e-9 * (std::fabs(fx) + 1.0)) return;
        x = xn;
        fx = std::max(fn, fx);
        if (norm < 1e-12) return;
    }
}

}  // namespace detail

/// Golden-section ascent of a unimodal objective on [lo, hi]. The bracket is
/// probed first; if the best probe sits on an edge the bracket is expanded a
/// few times before the section search starts. Converges to a relative
/// interval width of `tol`, then takes guarded Newton steps to sharpen the
/// stationary point.
inline OptimResult maximize_1d(const std::function<double(double)>& objective, double lo, double hi,
                               double tol = 1e-10, int max_iter = 500) {
    if (!(lo < hi)) throw std::invalid_argument("maximize_1d: bracket must satisfy lo < hi");

    auto f = [&](double x) {
        double v = objective(x);
        return detail::usable(v) ? v : -std::numeric_limits<double>::infinity();
    };

    // probe grid: locate a usable region and detect edge maxima
    const int probes = 33;
    int expansions = 0;
    double best_x = lo, best_v = -std::numeric_limits<double>::infinity();
    while (true) {
        best_v = -std::numeric_limits<double>::infinity();
        int best_i = 0;
        for (int i = 0; i < probes; ++i) {
            double x = lo + (hi - lo) * i / (probes - 1.0);
            double v = f(x);
            if (v > best_v) {
                best_v = v;
                best_x = x;
                best_i = i;
            }
        }
        if (!std::isfinite(best_v))
            throw optimization_error("maximize_1d: objective not finite anywhere on probe grid", {best_x}, best_v);
        if (best_i == 0 && expansions < 60) {
            double w = hi - lo;
            lo -= w;
            ++expansions;
            continue;
        }
        if (best_i == probes - 1 && expansions < 60) {
            double w = hi - lo;
            hi += w;
            ++expansions;
            continue;
        }
        break;
    }

    const double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    int it = 0;
    for (; it < max_iter; ++it) {
        if ((b - a) <= tol * (std::fabs(a) + std::fabs(b) + 1e-30)) break;
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    std::vector<double> x{fc > fd ? c : d};
    double fx = std::max(fc, fd);
    if (std::isfinite(fx)) {
        auto fv = [&](const std::vector<double>& p) { return f(p[0]); };
        detail::newton_polish(fv, x, fx, 1);
    }

    OptimResult res;
    res.argmax = x;
    res.value = fx;
    res.iterations = it;
    res.converged = it < max_iter && std::isfinite(fx);
    if (!res.converged && !std::isfinite(fx))
        throw optimization_error("maximize_1d: no finite objective value found", res.argmax, res.value);
    return res;
}

namespace detail {

struct Simplex2D {
    std::array<std::array<double, 2>, 3> v;
    std::array<double, 3> fv;
};

template <typename F>
OptimResult nelder_mead_2d(const F& f, std::array<double, 2> start, double step, double tol, int max_iter) {
    Simplex2D s;
    s.v[0] = start;
    s.v[1] = {start[0] + step, start[1]};
    s.v[2] = {start[0], start[1] + step};
    for (int i = 0; i < 3; ++i) s.fv[i] = f(s.v[i]);

    auto order = [&]() {
        // indices sorted best..worst by value (maximization)
        std::array<int, 3> idx{0, 1, 2};
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s.fv[a] > s.fv[b]; });
        return idx;
    };

    OptimResult res;
    int it = 0;
    for (; it < max_iter; ++it) {
        auto idx = order();
        double fbest = s.fv[idx[0]], fworst = s.fv[idx[2]];
        double spread = std::fabs(fbest - fworst);
        double scale = std::fabs(fbest) + std::fabs(fworst) + 1e-30;
        double diam = 0.0;
        for (int i = 1; i < 3; ++i)
            diam = std::max(diam, std::hypot(s.v[idx[i]][0] - s.v[idx[0]][0], s.v[idx[i]][1] - s.v[idx[0]][1]));
        if (std::isfinite(fbest) && (spread <= tol * scale || diam <= tol * (1.0 + std::fabs(s.v[idx[0]][0]) + std::fabs(s.v[idx[0]][1])))) {
            res.converged = true;
            break;
        }

        const auto& xb = s.v[idx[0]];
        const auto& xn = s.v[idx[1]];
        auto& xw = s.v[idx[2]];
        std::array<double, 2> centroid{0.5 * (xb[0] + xn[0]), 0.5 * (xb[1] + xn[1])};
        auto blend = [&](double t) {
            return std::array<double, 2>{centroid[0] + t * (xw[0] - centroid[0]), centroid[1] + t * (xw[1] - centroid[1])};
        };

        auto xr = blend(-1.0);
        double fr = f(xr);
        if (fr > s.fv[idx[0]]) {
            auto xe = blend(-2.0);
            double fe = f(xe);
            if (fe > fr) {
                xw = xe;
                s.fv[idx[2]] = fe;
            } else {
                xw = xr;
                s.fv[idx[2]] = fr;
            }
        } else if (fr > s.fv[idx[1]]) {
            xw = xr;
            s.fv[idx[2]] = fr;
        } else {
            auto xc = blend(fr > s.fv[idx[2]] ? -0.5 : 0.5);
            double fc = f(xc);
            if (fc > std::max(fr, s.fv[idx[2]])) {
                xw = xc;
                s.fv[idx[2]] = fc;
            } else {
                // shrink toward the best vertex
                for (int i = 1; i < 3; ++i) {
                    auto& vi = s.v[idx[i]];
                    vi = {xb[0] + 0.5 * (vi[0] - xb[0]), xb[1] + 0.5 * (vi[1] - xb[1])};
                    s.fv[idx[i]] = f(vi);
                }
            }
        }
    }
    auto idx = order();
    res.argmax = {s.v[idx[0]][0], s.v[idx[0]][1]};
    res.value = s.fv[idx[0]];
    res.iterations = it;
    return res;
}

}  // namespace detail

/// Nelder-Mead ascent in two coordinates, restarted from a fixed sequence of
/// perturbations around the incumbent, followed by a guarded Newton polish.
inline OptimResult maximize_2d(const std::function<double(double, double)>& objective, double x0, double y0,
                               double tol = 1e-10, int max_iter = 2000) {
    auto f = [&](const std::array<double, 2>& p) {
        double v = objective(p[0], p[1]);
        return detail::usable(v) ? v : -std::numeric_limits<double>::infinity();
    };
    if (!std::isfinite(f({x0, y0})))
        throw optimization_error("maximize_2d: objective not finite at start", {x0, y0}, 0.0);

    static constexpr std::array<std::array<double, 2>, 3> restart_shift{{{0.5, -0.5}, {-0.5, 0.5}, {1.0, 1.0}}};

    OptimResult best;
    best.value = -std::numeric_limits<double>::infinity();
    int total_iters = 0;
    bool any_converged = false;
    std::array<double, 2> origin{x0, y0};
    for (int run = 0; run < 4; ++run) {
        std::array<double, 2> start = origin;
        if (run > 0) {
            start = {best.argmax[0] + restart_shift[run - 1][0], best.argmax[1] + restart_shift[run - 1][1]};
            if (!std::isfinite(f(start))) continue;
        }
        OptimResult r = detail::nelder_mead_2d(f, start, 0.25, tol, max_iter);
        total_iters += r.iterations;
        any_converged = any_converged || r.converged;
        if (r.value > best.value || best.argmax.empty()) {
            bool keep_converged = best.converged;
            best = r;
            best.converged = r.converged || keep_converged;
        }
    }
    if (!any_converged)
        throw optimization_error("maximize_2d: no restart converged", best.argmax, best.value);

    std::vector<double> x{best.argmax[0], best.argmax[1]};
    double fx = best.value;
    auto fv = [&](const std::vector<double>& p) { return f({p[0], p[1]}); };
    detail::newton_polish(fv, x, fx, 2);

    OptimResult res;
    res.argmax = x;
    res.value = fx;
    res.iterations = total_iters;
    res.converged = true;
    return res;
}

}  // namespace pcqm::optimize
