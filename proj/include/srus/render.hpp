#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <utility>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"
#include "srus/localize.hpp"

namespace srus {

// Accumulated localization density map on a fine grid.
struct SRImage {
    GridGeometry geom;
    std::vector<double> data;
    long n_localizations = 0;

    double at(int i, int j) const { return data[static_cast<long>(i) * geom.nx + j]; }
};

// Sums a unit-peak isotropic Gaussian (truncated at 4 sigma) at every
// localization. sigma <= 0 selects the default wavelength/8.
inline SRImage accumulate_sr(const std::vector<Localization>& locs,
                             const GridGeometry& geom, double sigma = 0.0) {
    check_geometry(geom);
    if (sigma <= 0.0) sigma = geom.wavelength / 8.0;
    SRImage img{geom, std::vector<double>(geom.npixels(), 0.0), 0};
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const int ry = static_cast<int>(std::ceil(4.0 * sigma / geom.dy));
    const int rx = static_cast<int>(std::ceil(4.0 * sigma / geom.dx));
    std::vector<double> wy(2 * ry + 1), wx(2 * rx + 1);
    for (const auto& loc : locs) {
        int ci = static_cast<int>(std::lround(loc.y / geom.dy));
        int cj = static_cast<int>(std::lround(loc.x / geom.dx));
        for (int d = -ry; d <= ry; ++d) {
            double gy = (ci + d) * geom.dy - loc.y;
            wy[d + ry] = std::abs(gy) <= 4.0 * sigma ? std::exp(-gy * gy * inv2s2) : 0.0;
        }
        for (int d = -rx; d <= rx; ++d) {
            double gx = (cj + d) * geom.dx - loc.x;
            wx[d + rx] = std::abs(gx) <= 4.0 * sigma ? std::exp(-gx * gx * inv2s2) : 0.0;
        }
        for (int d = -ry; d <= ry; ++d) {
            int i = ci + d;
            if (i < 0 || i >= geom.ny || wy[d + ry] == 0.0) continue;
            double* row = img.data.data() + static_cast<long>(i) * geom.nx;
            for (int e = -rx; e <= rx; ++e) {
                int j = cj + e;
                if (j < 0 || j >= geom.nx || wx[e + rx] == 0.0) continue;
                row[j] += wy[d + ry] * wx[e + rx];
            }
        }
        ++img.n_localizations;
    }
    return img;
}

// Per-pixel temporal maximum over the stack.
inline Frame max_intensity_projection(const FrameStack& s) {
    check_stack(s);
    Frame out{s.geom, s.frames.front()};
    for (int t = 1; t < s.nframes(); ++t)
        for (size_t k = 0; k < out.data.size(); ++k)
            out.data[k] = std::max(out.data[k], s.frames[t][k]);
    return out;
}

// Bilinear samples along the segment p0 -> p1 (positions in meters), n evenly
// spaced points including both endpoints. Returns (distance from p0, value).
template <class Image>
std::vector<std::pair<double, double>> line_profile(const Image& img, double y0, double x0,
                                                    double y1, double x1, int n) {
    if (n < 2) throw ConfigError("line_profile: need at least 2 samples");
    const GridGeometry& g = img.geom;
    auto inside = [&](double y, double x) {
        return y >= 0.0 && y <= g.extent_y() && x >= 0.0 && x <= g.extent_x();
    };
    if (!inside(y0, x0) || !inside(y1, x1))
        throw ConfigError("line_profile: endpoints must lie inside the image");
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    const double len = std::hypot(y1 - y0, x1 - x0);
    for (int k = 0; k < n; ++k) {
        double t = static_cast<double>(k) / (n - 1);
        double y = y0 + t * (y1 - y0);
        double x = x0 + t * (x1 - x0);
        out.emplace_back(t * len, sample_bilinear(img.data, g, y, x));
    }
    return out;
}

// 16-bit binary PGM (P5), max-scaled; values are written big-endian per the
// format. Returns the (min, max) used for scaling so the caller can emit the
// JSON sidecar.
template <class Image>
std::pair<double, double> write_pgm16(const Image& img, const std::string& path) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "P5\n" << img.geom.nx << " " << img.geom.ny << "\n65535\n";
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    std::vector<unsigned char> row(static_cast<size_t>(img.geom.nx) * 2);
    for (int i = 0; i < img.geom.ny; ++i) {
        for (int j = 0; j < img.geom.nx; ++j) {
            double v = img.data[static_cast<long>(i) * img.geom.nx + j];
            auto q = static_cast<std::uint16_t>(std::lround((v - lo) * scale));
            row[2 * j] = static_cast<unsigned char>(q >> 8);
            row[2 * j + 1] = static_cast<unsigned char>(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw DataError("write failed: " + path);
    return {lo, hi};
}

} // namespace srus
