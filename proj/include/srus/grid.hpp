#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "srus/errors.hpp"

namespace srus {

// Physical layout of one image plane plus acquisition timing. Pixel (i, j) is
// centered at (i*dy, j*dx) meters, origin at the first pixel center. dy/dx may
// differ (axial vs transverse pitch).
struct GridGeometry {
    int ny = 1;
    int nx = 1;
    double dy = 60e-6;         // axial pitch [m]
    double dx = 30e-6;         // transverse pitch [m]
    double dt = 2e-3;          // inter-frame interval [s]
    double wavelength = 60e-6; // [m]

    long npixels() const { return static_cast<long>(ny) * nx; }
    double extent_y() const { return (ny - 1) * dy; }
    double extent_x() const { return (nx - 1) * dx; }
    bool operator==(const GridGeometry&) const = default;
};

inline void check_geometry(const GridGeometry& g) {
    if (g.ny < 1 || g.nx < 1)
        throw ConfigError("geometry: ny and nx must be >= 1");
    if (!(g.dy > 0) || !(g.dx > 0) || !(g.dt > 0) || !(g.wavelength > 0))
        throw ConfigError("geometry: dy, dx, dt and wavelength must be positive");
}

// A single real-valued intensity plane.
struct Frame {
    GridGeometry geom;
    std::vector<double> data; // ny*nx, row-major

    double at(int i, int j) const { return data[static_cast<long>(i) * geom.nx + j]; }
    double& at(int i, int j) { return data[static_cast<long>(i) * geom.nx + j]; }
};

inline Frame make_frame(const GridGeometry& g, std::vector<double> values) {
    check_geometry(g);
    if (static_cast<long>(values.size()) != g.npixels())
        throw ConfigError("frame: data length does not match ny*nx");
    return Frame{g, std::move(values)};
}

inline Frame zero_frame(const GridGeometry& g) {
    check_geometry(g);
    return Frame{g, std::vector<double>(g.npixels(), 0.0)};
}

// Time-ordered stack of planes sharing one geometry.
struct FrameStack {
    GridGeometry geom;
    std::vector<std::vector<double>> frames; // each ny*nx, row-major

    int nframes() const { return static_cast<int>(frames.size()); }
    Frame frame(int t) const { return Frame{geom, frames[t]}; }
};

inline void check_stack(const FrameStack& s) {
    check_geometry(s.geom);
    if (s.nframes() < 1) throw DataError("stack: needs at least one frame");
    for (const auto& f : s.frames)
        if (static_cast<long>(f.size()) != s.geom.npixels())
            throw DataError("stack: frame size does not match geometry");
}

inline std::pair<double, double> stack_min_max(const FrameStack& s) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& f : s.frames)
        for (double v : f) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    return {lo, hi};
}

inline double stack_mean(const FrameStack& s) {
    double sum = 0.0;
    long n = 0;
    for (const auto& f : s.frames) {
        for (double v : f) sum += v;
        n += static_cast<long>(f.size());
    }
    return sum / static_cast<double>(n);
}

// Affine map of the whole stack onto [0, 1]. One global min/max for all
// frames, so offsets and thresholds stay comparable across frames.
inline FrameStack normalize_stack(const FrameStack& s) {
    check_stack(s);
    auto [lo, hi] = stack_min_max(s);
    if (!(hi > lo))
        throw DataError("normalize: constant stack, normalization undefined");
    double scale = 1.0 / (hi - lo);
    FrameStack out{s.geom, s.frames};
    for (auto& f : out.frames)
        for (double& v : f) v = (v - lo) * scale;
    return out;
}

// ---------------------------------------------------------------------------
// Vessel mask with exact Euclidean distance field.

struct VesselMask {
    GridGeometry geom;
    std::vector<std::uint8_t> bits; // ny*nx, 0/1
    std::vector<double> distance;   // meters to nearest true pixel, 0 inside
};

namespace detail {

// Large finite stand-in for "no source here": infinities would make the
// parabola intersections NaN.
constexpr double kDtFar = 1e30;

// 1D squared-distance transform (Felzenszwalb & Huttenlocher lower envelope).
// f and out are in squared index units; the caller scales by pitch^2.
inline void dt1d(const std::vector<double>& f, std::vector<double>& out,
                 std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    v.resize(n);
    z.resize(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + static_cast<double>(q) * q) -
                    (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                   (2.0 * (q - v[k]));
        while (s <= z[k]) {
            --k;
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * (q - v[k]));
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double d = static_cast<double>(q) - v[k];
        out[q] = d * d + f[v[k]];
    }
}

} // namespace detail

// Builds the mask and its exact (anisotropic) Euclidean distance field.
inline VesselMask mask_from_image(std::vector<std::uint8_t> bits, const GridGeometry& geom) {
    check_geometry(geom);
    if (static_cast<long>(bits.size()) != geom.npixels())
        throw ConfigError("mask: bit plane size does not match geometry");
    bool any = false;
    for (auto b : bits)
        if (b) { any = true; break; }
    if (!any) throw DataError("mask: empty mask, distance field undefined");

    const int ny = geom.ny, nx = geom.nx;
    std::vector<double> sq(geom.npixels());

    // Pass 1: along x, in units of dx^2.
    {
        std::vector<double> f(nx), out(nx), z;
        std::vector<int> v;
        for (int i = 0; i < ny; ++i) {
            for (int j = 0; j < nx; ++j)
                f[j] = bits[static_cast<long>(i) * nx + j] ? 0.0 : detail::kDtFar;
            detail::dt1d(f, out, v, z);
            for (int j = 0; j < nx; ++j)
                sq[static_cast<long>(i) * nx + j] = out[j] * geom.dx * geom.dx;
        }
    }
    // Pass 2: along y. Convert to units of dy^2, transform, convert back.
    {
        const double dy2 = geom.dy * geom.dy;
        std::vector<double> f(ny), out(ny), z;
        std::vector<int> v;
        for (int j = 0; j < nx; ++j) {
            for (int i = 0; i < ny; ++i)
                f[i] = sq[static_cast<long>(i) * nx + j] / dy2;
            detail::dt1d(f, out, v, z);
            for (int i = 0; i < ny; ++i)
                sq[static_cast<long>(i) * nx + j] = out[i] * dy2;
        }
    }
    std::vector<double> dist(sq.size());
    for (size_t i = 0; i < sq.size(); ++i) dist[i] = std::sqrt(sq[i]);
    // The transform leaves exact zeros on true pixels.
    return VesselMask{geom, std::move(bits), std::move(dist)};
}

// Bilinear sample of a row-major plane at physical position (y, x) meters.
// Coordinates are clamped to the grid.
inline double sample_bilinear(const std::vector<double>& data, const GridGeometry& g,
                              double y, double x) {
    double fi = std::clamp(y / g.dy, 0.0, static_cast<double>(g.ny - 1));
    double fj = std::clamp(x / g.dx, 0.0, static_cast<double>(g.nx - 1));
    int i0 = std::min(static_cast<int>(fi), g.ny - 2 >= 0 ? g.ny - 2 : 0);
    int j0 = std::min(static_cast<int>(fj), g.nx - 2 >= 0 ? g.nx - 2 : 0);
    if (g.ny == 1) i0 = 0;
    if (g.nx == 1) j0 = 0;
    double ti = fi - i0, tj = fj - j0;
    int i1 = std::min(i0 + 1, g.ny - 1);
    int j1 = std::min(j0 + 1, g.nx - 1);
    double v00 = data[static_cast<long>(i0) * g.nx + j0];
    double v01 = data[static_cast<long>(i0) * g.nx + j1];
    double v10 = data[static_cast<long>(i1) * g.nx + j0];
    double v11 = data[static_cast<long>(i1) * g.nx + j1];
    return (1 - ti) * ((1 - tj) * v00 + tj * v01) + ti * ((1 - tj) * v10 + tj * v11);
}

} // namespace srus
