#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "pcqm/errors.hpp"
#include "pcqm/simulate.hpp"
#include "pcqm/text.hpp"

namespace pcqm::ingest {

using simulate::PointPattern;
using simulate::StudyWindow;

struct StemRecord {
    std::string species;
    double x = 0.0, y = 0.0;
};

/// Fully censused stem map: every individual's species code and coordinates,
/// with the census window supplied by descriptor (never inferred from the
/// data extent, so densities use the design area).
struct StemMap {
    std::vector<StemRecord> records;
    StudyWindow window;
};

/// Load a `species,x,y` CSV against a known window. In strict mode any
/// malformed or out-of-window row aborts with its line number; in lenient
/// mode such rows are dropped and counted into `warnings`.
inline StemMap load_stem_map(const std::string& path, const StudyWindow& window, bool strict = true,
                             std::vector<std::string>* warnings = nullptr) {
    window.validate();
    auto lines = text::read_lines(path);
    if (lines.empty()) throw config_error(path + ": empty file");
    auto header = text::split_csv(lines[0]);
    if (header.size() != 3 || header[0] != "species" || header[1] != "x" || header[2] != "y")
        throw config_error(path + ": expected header species,x,y");

    StemMap map;
    map.window = window;
    int dropped = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const std::string where = path + " line " + std::to_string(i + 1);
        try {
            auto f = text::split_csv(lines[i]);
            if (f.size() != 3) throw config_error(where + ": expected 3 fields");
            StemRecord rec;
            rec.species = std::string(f[0]);
            if (rec.species.empty()) throw config_error(where + ": empty species code");
            rec.x = text::parse_double(f[1], where);
            rec.y = text::parse_double(f[2], where);
            if (!window.contains(rec.x, rec.y)) throw config_error(where + ": coordinates outside the census window");
            map.records.push_back(std::move(rec));
        } catch (const config_error&) {
            if (strict) throw;
            ++dropped;
        }
    }
    if (warnings) {
        if (dropped > 0) warnings->push_back("dropped " + std::to_string(dropped) + " malformed rows");
        if (map.records.empty()) warnings->push_back(path + ": no stem records");
    }
    return map;
}

inline std::string stem_map_to_csv(const StemMap& m) {
    std::string out = "species,x,y\n";
    for (const auto& r : m.records) {
        out += r.species;
        out += ',';
        out += text::format_double(r.x);
        out += ',';
        out += text::format_double(r.y);
        out += '\n';
    }
    return out;
}

inline std::map<std::string, int> species_counts(const StemMap& m) {
    std::map<std::string, int> counts;
    for (const auto& r : m.records) ++counts[r.species];
    return counts;
}

/// Species codes with at least `min_count` individuals, sorted by code.
inline std::vector<std::string> filter_abundant(const StemMap& m, int min_count) {
    if (min_count < 1) throw std::domain_error("filter_abundant: min_count must be >= 1");
    std::vector<std::string> out;
    for (const auto& [code, count] : species_counts(m))
        if (count >= min_count) out.push_back(code);
    return out;
}

inline PointPattern species_pattern(const StemMap& m, const std::string& code) {
    std::vector<simulate::Point> pts;
    for (const auto& r : m.records)
        if (r.species == code) pts.push_back({r.x, r.y});
    if (pts.empty()) throw config_error("species_pattern: unknown species code '" + code + "'");
    return PointPattern(std::move(pts), m.window);
}

/// Census truth: total stems divided by the window area.
inline double true_density(const PointPattern& p) { return p.realized_density(); }

}  // namespace pcqm::ingest
