#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "srus/errors.hpp"
#include "srus/localize.hpp"
#include "srus/synth.hpp"
#include "srus/track.hpp"

namespace srus {

namespace detail {

// Shortest representation that still round-trips a double exactly.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char s[32];
            std::snprintf(s, sizeof s, "%.*g", prec, v);
            std::sscanf(s, "%lf", &back);
            if (back == v) return s;
        }
    }
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    return out;
}

} // namespace detail

inline std::string peaks_csv(const std::vector<Localization>& locs) {
    std::ostringstream os;
    os << "frame,y_m,x_m,amplitude,area_wl2,orientation_rad\n";
    for (const auto& l : locs)
        os << l.frame_index << ',' << detail::fmt_double(l.y) << ','
           << detail::fmt_double(l.x) << ',' << detail::fmt_double(l.amplitude) << ','
           << detail::fmt_double(l.area_wl2) << ','
           << detail::fmt_double(l.orientation_rad) << '\n';
    return os.str();
}

inline void write_peaks_csv(const std::vector<Localization>& locs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << peaks_csv(locs);
    if (!out) throw DataError("write failed: " + path);
}

inline std::vector<Localization> read_peaks_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("frame,y_m,x_m", 0) != 0)
        throw DataError(path + ": missing peaks CSV header");
    std::vector<Localization> locs;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 6)
            throw DataError(path + ": bad field count on line " + std::to_string(lineno));
        try {
            Localization l;
            l.frame_index = std::stoi(f[0]);
            l.y = std::stod(f[1]);
            l.x = std::stod(f[2]);
            l.amplitude = std::stod(f[3]);
            l.area_wl2 = std::stod(f[4]);
            l.orientation_rad = std::stod(f[5]);
            locs.push_back(l);
        } catch (const std::exception&) {
            throw DataError(path + ": unparsable value on line " + std::to_string(lineno));
        }
    }
    return locs;
}

inline void write_velocities_csv(const std::vector<VelocityVector>& vels,
                                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "frame,y_m,x_m,vy_mps,vx_mps\n";
    for (const auto& v : vels)
        out << v.frame_index << ',' << detail::fmt_double(v.y) << ','
            << detail::fmt_double(v.x) << ',' << detail::fmt_double(v.vy) << ','
            << detail::fmt_double(v.vx) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

inline void write_profile_csv(const std::vector<std::pair<double, double>>& profile,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "distance_m,intensity\n";
    for (const auto& [d, v] : profile)
        out << detail::fmt_double(d) << ',' << detail::fmt_double(v) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

inline void write_truth_csv(const GroundTruth& truth, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "frame,y_m,x_m,amplitude,vessel,vy_mps,vx_mps\n";
    for (const auto& frame : truth.per_frame)
        for (const auto& b : frame)
            out << b.frame << ',' << detail::fmt_double(b.y) << ','
                << detail::fmt_double(b.x) << ',' << detail::fmt_double(b.amplitude) << ','
                << b.vessel << ',' << detail::fmt_double(b.vy) << ','
                << detail::fmt_double(b.vx) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

} // namespace srus
