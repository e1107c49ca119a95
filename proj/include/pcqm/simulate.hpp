#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcqm/errors.hpp"
#include "pcqm/model.hpp"
#include "pcqm/rng.hpp"
#include "pcqm/sample.hpp"
#include "pcqm/text.hpp"

namespace pcqm::simulate {

struct StudyWindow {
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }

    void validate() const {
        if (!(x_max > x_min) || !(y_max > y_min)) throw config_error("StudyWindow: max bounds must exceed min bounds");
    }

    StudyWindow expanded(double margin) const { return {x_min - margin, y_min - margin, x_max + margin, y_max + margin}; }

    StudyWindow shrunk(double margin) const {
        StudyWindow w{x_min + margin, y_min + margin, x_max - margin, y_max - margin};
        if (!(w.x_max > w.x_min) || !(w.y_max > w.y_min))
            throw config_error("StudyWindow: buffer leaves an empty sampling region");
        return w;
    }
};

struct Point {
    double x = 0.0, y = 0.0;
};

struct PointPattern {
    std::vector<Point> points;
    StudyWindow window;

    PointPattern() = default;
    PointPattern(std::vector<Point> pts, StudyWindow win) : points(std::move(pts)), window(win) {
        window.validate();
        for (const auto& p : points)
            if (!window.contains(p.x, p.y)) throw config_error("PointPattern: point outside study window");
    }

    double realized_density() const { return points.size() / window.area(); }
};

/// PCQM sampling configuration. buffer defaults to C + 0.1 when NaN.
struct SurveyDesign {
    int n = 120;
    int q = 4;
    int ell = 1;
    double C = 10.0;
    double buffer = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;

    double effective_buffer() const { return std::isnan(buffer) ? C + 0.1 : buffer; }

    void validate() const {
        if (n < 1) throw config_error("SurveyDesign: n must be >= 1");
        if (q < 1) throw config_error("SurveyDesign: q must be >= 1");
        if (ell < 1) throw config_error("SurveyDesign: ell must be >= 1");
        if (!(C > 0.0)) throw config_error("SurveyDesign: C must be positive");
    }
};

// ---------------------------------------------------------------------------
// Point-process generators
// ---------------------------------------------------------------------------

inline PointPattern gen_poisson(double lambda, const StudyWindow& window, std::mt19937_64& eng) {
    if (!(lambda > 0.0)) throw std::domain_error("gen_poisson: lambda must be positive");
    window.validate();
    std::poisson_distribution<long> count_dist(lambda * window.area());
    const long count = count_dist(eng);
    std::uniform_real_distribution<double> ux(window.x_min, window.x_max), uy(window.y_min, window.y_max);
    std::vector<Point> pts;
    pts.reserve(count);
    for (long i = 0; i < count; ++i) pts.push_back({ux(eng), uy(eng)});
    return PointPattern(std::move(pts), window);
}

inline PointPattern gen_poisson(double lambda, const StudyWindow& window, std::uint64_t seed) {
    auto eng = rng::make_engine(seed, {0x706f6973ULL});
    return gen_poisson(lambda, window, eng);
}

/// Thomas cluster process: Poisson parents on the window expanded by 4*sigma
/// (so offspring drifting in across the boundary are represented), each with a
/// Poisson(mu) brood displaced by an isotropic Gaussian of scale sigma. Only
/// offspring landing inside the original window are kept.
inline PointPattern gen_thomas(double kappa, double mu, double sigma, const StudyWindow& window,
                               std::mt19937_64& eng) {
    if (!(kappa > 0.0) || !(mu > 0.0) || !(sigma > 0.0))
        throw std::domain_error("gen_thomas: kappa, mu, sigma must be positive");
    window.validate();
    const StudyWindow parent_win = window.expanded(4.0 * sigma);
    std::poisson_distribution<long> parent_count(kappa * parent_win.area());
    std::uniform_real_distribution<double> ux(parent_win.x_min, parent_win.x_max),
        uy(parent_win.y_min, parent_win.y_max);
    std::poisson_distribution<long> brood(mu);
    std::normal_distribution<double> offset(0.0, sigma);
    const long parents = parent_count(eng);
    std::vector<Point> pts;
    for (long i = 0; i < parents; ++i) {
        const double px = ux(eng), py = uy(eng);
        const long kids = brood(eng);
        for (long j = 0; j < kids; ++j) {
            const double x = px + offset(eng), y = py + offset(eng);
            if (window.contains(x, y)) pts.push_back({x, y});
        }
    }
    return PointPattern(std::move(pts), window);
}

inline PointPattern gen_thomas(double kappa, double mu, double sigma, const StudyWindow& window,
                               std::uint64_t seed) {
    auto eng = rng::make_engine(seed, {0x74686f6dULL});
    return gen_thomas(kappa, mu, sigma, window, eng);
}

// ---------------------------------------------------------------------------
// Survey geometry
// ---------------------------------------------------------------------------

/// Latin hypercube focal points inside the buffered window: each axis is cut
/// into n equal strata, the strata are paired by independent random
/// permutations, and each point is placed uniformly within its cell.
inline std::vector<Point> lhs_focal_points(const SurveyDesign& design, const StudyWindow& window,
                                           std::mt19937_64& eng) {
    design.validate();
    const StudyWindow inner = window.shrunk(design.effective_buffer());
    const int n = design.n;
    std::vector<int> sx(n), sy(n);
    for (int i = 0; i < n; ++i) sx[i] = sy[i] = i;
    std::shuffle(sx.begin(), sx.end(), eng);
    std::shuffle(sy.begin(), sy.end(), eng);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double wx = inner.width() / n, wy = inner.height() / n;
    std::vector<Point> pts(n);
    for (int i = 0; i < n; ++i) {
        pts[i].x = inner.x_min + (sx[i] + u01(eng)) * wx;
        pts[i].y = inner.y_min + (sy[i] + u01(eng)) * wy;
    }
    return pts;
}

inline std::vector<Point> lhs_focal_points(const SurveyDesign& design, const StudyWindow& window,
                                           std::uint64_t seed) {
    auto eng = rng::make_engine(seed, {0x6c6873ULL});
    return lhs_focal_points(design, window, eng);
}

namespace detail {

// Uniform-grid spatial index with cell size equal to the search radius, so a
// disc query touches at most a 3x3 block of cells.
class GridIndex {
public:
    GridIndex(const PointPattern& pattern, double cell_size) : pts_(pattern.points), cell_(cell_size) {
        const auto& w = pattern.window;
        x0_ = w.x_min;
        y0_ = w.y_min;
        nx_ = std::max(1, static_cast<int>(std::ceil(w.width() / cell_)));
        ny_ = std::max(1, static_cast<int>(std::ceil(w.height() / cell_)));
        bins_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (std::size_t i = 0; i < pts_.size(); ++i) bins_[bin_of(pts_[i].x, pts_[i].y)].push_back(static_cast<int>(i));
    }

    template <typename Fn>
    void for_points_in_disc(double x, double y, double radius, Fn&& fn) const {
        const double r2 = radius * radius;
        const int ix_lo = clamp_x(static_cast<int>(std::floor((x - radius - x0_) / cell_)));
        const int ix_hi = clamp_x(static_cast<int>(std::floor((x + radius - x0_) / cell_)));
        const int iy_lo = clamp_y(static_cast<int>(std::floor((y - radius - y0_) / cell_)));
        const int iy_hi = clamp_y(static_cast<int>(std::floor((y + radius - y0_) / cell_)));
        for (int iy = iy_lo; iy <= iy_hi; ++iy) {
            for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                for (int idx : bins_[static_cast<std::size_t>(iy) * nx_ + ix]) {
                    const double dx = pts_[idx].x - x, dy = pts_[idx].y - y;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 <= r2) fn(idx, dx, dy, d2);
                }
            }
        }
    }

private:
    int clamp_x(int i) const { return std::min(std::max(i, 0), nx_ - 1); }
    int clamp_y(int i) const { return std::min(std::max(i, 0), ny_ - 1); }
    std::size_t bin_of(double x, double y) const {
        return static_cast<std::size_t>(clamp_y(static_cast<int>((y - y0_) / cell_))) * nx_ +
               clamp_x(static_cast<int>((x - x0_) / cell_));
    }

    const std::vector<Point>& pts_;
    double cell_, x0_ = 0.0, y0_ = 0.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> bins_;
};

}  // namespace detail

inline constexpr double two_pi = 2.0 * model::pi;

/// Sector of the direction (dx, dy): half-open wedges of angle 2*pi/q counted
/// counterclockwise from the positive x-axis.
inline int sector_of(double dx, double dy, int q) {
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += two_pi;
    int s = static_cast<int>(theta * q / two_pi);
    return std::min(s, q - 1);
}

/// Record, for every focal point and sector, the distance to the ell-th
/// nearest pattern point in that sector, censoring sectors holding fewer than
/// ell points within radius C. A distance of exactly C counts as observed.
inline sample::DistanceSample pcqm_sample(const PointPattern& pattern, const std::vector<Point>& focals,
                                          const SurveyDesign& design) {
    design.validate();
    const StudyWindow inner = pattern.window.shrunk(design.effective_buffer());
    for (const auto& f : focals)
        if (!inner.contains(f.x, f.y)) throw config_error("pcqm_sample: focal point outside buffered window");
    if (static_cast<int>(focals.size()) != design.n)
        throw config_error("pcqm_sample: focal count does not match the design");

    const detail::GridIndex index(pattern, design.C);
    const int q = design.q, ell = design.ell;
    std::vector<sample::SectorObs> cells;
    cells.reserve(static_cast<std::size_t>(design.n) * q);
    std::vector<std::vector<std::pair<double, int>>> sector_hits(q);
    for (const auto& f : focals) {
        for (auto& hits : sector_hits) hits.clear();
        index.for_points_in_disc(f.x, f.y, design.C, [&](int idx, double dx, double dy, double d2) {
            if (d2 == 0.0) return;  // coincident point: no direction, no distance
            sector_hits[sector_of(dx, dy, q)].emplace_back(d2, idx);
        });
        for (int j = 0; j < q; ++j) {
            auto& hits = sector_hits[j];
            if (static_cast<int>(hits.size()) < ell) {
                cells.push_back(sample::SectorObs::censored_marker());
                continue;
            }
            std::nth_element(hits.begin(), hits.begin() + (ell - 1), hits.end());
            cells.push_back(sample::SectorObs::observed(std::sqrt(hits[ell - 1].first)));
        }
    }
    return sample::DistanceSample(design.n, q, ell, design.C, std::move(cells));
}

// ---------------------------------------------------------------------------
// Synthetic NBD distance sampler (oracle for likelihood checks)
// ---------------------------------------------------------------------------

/// i.i.d. draws of the sector distance under the NBD model, via
/// W ~ Beta(ell, k) sampled as a gamma ratio and r = sqrt(kqW / (pi lambda (1-W))).
inline std::vector<double> sample_nbd_distances(const model::NbdModel& m, int count, std::mt19937_64& eng) {
    if (count < 1) throw std::domain_error("sample_nbd_distances: count must be >= 1");
    std::gamma_distribution<double> gx(static_cast<double>(m.ell), 1.0);
    std::gamma_distribution<double> gy(m.k, 1.0);
    std::vector<double> out;
    out.reserve(count);
    const double scale = m.k * m.q / (model::pi * m.lambda);
    for (int i = 0; i < count; ++i) {
        const double x = gx(eng), y = gy(eng);
        const double w = x / (x + y);
        out.push_back(std::sqrt(scale * w / (1.0 - w)));
    }
    return out;
}

inline std::vector<double> sample_nbd_distances(const model::NbdModel& m, int count, std::uint64_t seed) {
    auto eng = rng::make_engine(seed, {0x6e6264ULL});
    return sample_nbd_distances(m, count, eng);
}

// ---------------------------------------------------------------------------
// Pattern serialization: CSV of coordinates plus a JSON window descriptor
// ---------------------------------------------------------------------------

inline std::string pattern_to_csv(const PointPattern& p) {
    std::string out = "x,y\n";
    for (const auto& pt : p.points) {
        out += text::format_double(pt.x);
        out += ',';
        out += text::format_double(pt.y);
        out += '\n';
    }
    return out;
}

inline nlohmann::json window_to_json(const StudyWindow& w) {
    return nlohmann::json{{"x_min", w.x_min}, {"y_min", w.y_min}, {"x_max", w.x_max}, {"y_max", w.y_max}};
}

inline StudyWindow window_from_json(const nlohmann::json& j) {
    StudyWindow w;
    try {
        w.x_min = j.at("x_min").get<double>();
        w.y_min = j.at("y_min").get<double>();
        w.x_max = j.at("x_max").get<double>();
        w.y_max = j.at("y_max").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("window descriptor: ") + e.what());
    }
    w.validate();
    return w;
}

inline StudyWindow load_window(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open window descriptor: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("window descriptor " + path + ": " + e.what());
    }
    return window_from_json(j);
}

inline PointPattern load_pattern(const std::string& csv_path, const StudyWindow& window) {
    auto lines = text::read_lines(csv_path);
    if (lines.empty()) throw config_error(csv_path + ": empty file");
    auto header = text::split_csv(lines[0]);
    if (header.size() != 2 || header[0] != "x" || header[1] != "y")
        throw config_error(csv_path + ": expected header x,y");
    std::vector<Point> pts;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        auto f = text::split_csv(lines[i]);
        const std::string where = csv_path + " line " + std::to_string(i + 1);
        if (f.size() != 2) throw config_error(where + ": expected 2 fields");
        pts.push_back({text::parse_double(f[0], where), text::parse_double(f[1], where)});
    }
    return PointPattern(std::move(pts), window);
}

}  // namespace pcqm::simulate
