#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pcqm/errors.hpp"
#include "pcqm/text.hpp"

namespace pcqm::sample {

/// One sector observation: either a distance in (0, C] or a censored marker.
struct SectorObs {
    double distance = 0.0;
    bool censored = false;

    static SectorObs observed(double r) { return {r, false}; }
    static SectorObs censored_marker() { return {std::numeric_limits<double>::quiet_NaN(), true}; }
};

/// The n x q grid of sector observations from one survey, together with the
/// design parameters needed to interpret it. C may be +infinity for complete
/// (uncensored) data.
class DistanceSample {
public:
    DistanceSample(int n, int q, int ell, double C, std::vector<SectorObs> cells)
        : n_(n), q_(q), ell_(ell), C_(C), cells_(std::move(cells)) {
        if (n_ < 1 || q_ < 1 || ell_ < 1) throw std::domain_error("DistanceSample: n, q, ell must be >= 1");
        if (!(C_ > 0.0)) throw std::domain_error("DistanceSample: C must be positive (may be +inf)");
        if (cells_.size() != static_cast<std::size_t>(n_) * q_)
            throw std::domain_error("DistanceSample: cell grid must have n*q entries");
        n0_ = 0;
        for (const auto& c : cells_) {
            if (c.censored) {
                if (std::isinf(C_)) throw std::domain_error("DistanceSample: censored cells require a finite radius");
                ++n0_;
            } else {
                if (!(c.distance > 0.0)) throw std::domain_error("DistanceSample: observed distances must be positive");
                if (c.distance > C_) throw std::domain_error("DistanceSample: observed distance exceeds censoring radius");
            }
        }
    }

    int n() const { return n_; }
    int q() const { return q_; }
    int ell() const { return ell_; }
    double censor_radius() const { return C_; }
    int cell_count() const { return n_ * q_; }
    int censored_count() const { return n0_; }
    int observed_count() const { return n_ * q_ - n0_; }
    double censored_fraction() const { return static_cast<double>(n0_) / cell_count(); }

    const SectorObs& cell(int point, int sector) const { return cells_[static_cast<std::size_t>(point) * q_ + sector]; }
    const std::vector<SectorObs>& cells() const { return cells_; }

    std::vector<double> observed_distances() const {
        std::vector<double> out;
        out.reserve(observed_count());
        for (const auto& c : cells_)
            if (!c.censored) out.push_back(c.distance);
        return out;
    }

    /// Sum of r^u over observed distances.
    double observed_power_sum(double u) const {
        double s = 0.0;
        for (const auto& c : cells_)
            if (!c.censored) s += std::pow(c.distance, u);
        return s;
    }

    /// Sample with all distances and the radius scaled by `factor`.
    DistanceSample scaled(double factor) const {
        if (!(factor > 0.0)) throw std::domain_error("DistanceSample::scaled: factor must be positive");
        std::vector<SectorObs> cells = cells_;
        for (auto& c : cells)
            if (!c.censored) c.distance *= factor;
        return DistanceSample(n_, q_, ell_, C_ * factor, cells);
    }

private:
    int n_, q_, ell_;
    double C_;
    int n0_ = 0;
    std::vector<SectorObs> cells_;
};

/// CSV layout: header `point_id,sector_id,distance,censored`; ids are 1-based;
/// distance is left empty on censored rows.
inline std::string to_csv(const DistanceSample& s) {
    std::ostringstream out;
    out << "point_id,sector_id,distance,censored\n";
    for (int i = 0; i < s.n(); ++i) {
        for (int j = 0; j < s.q(); ++j) {
            const auto& c = s.cell(i, j);
            out << (i + 1) << ',' << (j + 1) << ',';
            if (!c.censored) out << text::format_double(c.distance);
            out << ',' << (c.censored ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

inline DistanceSample from_csv_lines(const std::vector<std::string>& lines, int q, int ell, double C,
                                     const std::string& context) {
    if (lines.empty()) throw config_error(context + ": empty file");
    auto header = text::split_csv(lines[0]);
    if (header.size() != 4 || header[0] != "point_id" || header[1] != "sector_id" || header[2] != "distance" ||
        header[3] != "censored")
        throw config_error(context + ": expected header point_id,sector_id,distance,censored");

    struct Row {
        long point, sector;
        SectorObs obs;
    };
    std::vector<Row> rows;
    long max_point = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (text::trim(lines[li]).empty()) continue;
        auto fields = text::split_csv(lines[li]);
        const std::string where = context + " line " + std::to_string(li + 1);
        if (fields.size() != 4) throw config_error(where + ": expected 4 fields");
        long point = text::parse_long(fields[0], where);
        long sector = text::parse_long(fields[1], where);
        long censored = text::parse_long(fields[3], where);
        if (point < 1 || sector < 1 || sector > q) throw config_error(where + ": point/sector id out of range");
        if (censored != 0 && censored != 1) throw config_error(where + ": censored flag must be 0 or 1");
        SectorObs obs;
        if (censored == 1) {
            if (!fields[2].empty()) throw config_error(where + ": censored row must have empty distance");
            obs = SectorObs::censored_marker();
        } else {
            obs = SectorObs::observed(text::parse_double(fields[2], where));
        }
        max_point = std::max(max_point, point);
        rows.push_back({point, sector, obs});
    }
    if (rows.empty()) throw config_error(context + ": no data rows");

    const long n = max_point;
    std::vector<SectorObs> cells(static_cast<std::size_t>(n) * q);
    std::vector<bool> seen(cells.size(), false);
    for (const auto& r : rows) {
        std::size_t idx = static_cast<std::size_t>(r.point - 1) * q + (r.sector - 1);
        if (seen[idx]) throw config_error(context + ": duplicate cell (" + std::to_string(r.point) + "," +
                                          std::to_string(r.sector) + ")");
        seen[idx] = true;
        cells[idx] = r.obs;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw config_error(context + ": missing cell for point " + std::to_string(i / q + 1) + ", sector " +
                               std::to_string(i % q + 1));
    return DistanceSample(static_cast<int>(n), q, ell, C, std::move(cells));
}

inline DistanceSample load_csv(const std::string& path, int q, int ell, double C) {
    return from_csv_lines(text::read_lines(path), q, ell, C, path);
}

}  // namespace pcqm::sample
