#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"

namespace srus {

enum class InterpMethod { Nearest, Bilinear, Bicubic };

inline InterpMethod interp_method_from_string(const std::string& s) {
    if (s == "nearest") return InterpMethod::Nearest;
    if (s == "bilinear") return InterpMethod::Bilinear;
    if (s == "bicubic") return InterpMethod::Bicubic;
    throw ConfigError("unknown interpolation method: " + s);
}

inline const char* to_string(InterpMethod m) {
    switch (m) {
        case InterpMethod::Nearest: return "nearest";
        case InterpMethod::Bilinear: return "bilinear";
        default: return "bicubic";
    }
}

struct PreprocessConfig {
    int factor_y = 12;
    int factor_x = 12;
    InterpMethod method = InterpMethod::Bicubic;
    double smooth_sigma = 30e-6; // meters

    void validate() const {
        if (factor_y < 1 || factor_x < 1)
            throw ConfigError("preprocess: interpolation factors must be >= 1");
        if (!(smooth_sigma >= 0))
            throw ConfigError("preprocess: smoothing sigma must be >= 0");
    }
};

namespace detail {

// Sample with odd (linear-extrapolating) reflection about the border values,
// so affine images are reproduced exactly out to the extrapolated tail.
inline double reflect_fetch(const std::vector<double>& v, int n, int i) {
    if (i >= 0 && i < n) return v[i];
    if (n == 1) return v[0];
    if (i < 0) return 2.0 * v[0] - reflect_fetch(v, n, -i);
    return 2.0 * v[n - 1] - reflect_fetch(v, n, 2 * (n - 1) - i);
}

// Keys cubic convolution kernel, a = -0.5.
inline void cubic_weights(double t, double w[4]) {
    constexpr double a = -0.5;
    double t2 = t * t, t3 = t2 * t;
    w[0] = a * (t3 - 2.0 * t2 + t);
    w[1] = (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0;
    w[2] = -(a + 2.0) * t3 + (2.0 * a + 3.0) * t2 - a * t;
    w[3] = a * (t2 - t3);
}

struct Tap1D {
    int base;      // leftmost source index used (may be out of range)
    double w[4];   // cubic weights; bilinear uses w[1], w[2]; nearest w[1]
};

// Output index o maps to source coordinate o / factor, so source samples are
// hit exactly at aligned output indices.
inline std::vector<Tap1D> make_taps(int n_out, int factor, InterpMethod m) {
    std::vector<Tap1D> taps(n_out);
    for (int o = 0; o < n_out; ++o) {
        double s = static_cast<double>(o) / factor;
        int i0 = static_cast<int>(std::floor(s));
        double t = s - i0;
        Tap1D& tp = taps[o];
        switch (m) {
            case InterpMethod::Nearest:
                tp.base = (t < 0.5) ? i0 : i0 + 1;
                break;
            case InterpMethod::Bilinear:
                tp.base = i0;
                tp.w[1] = 1.0 - t;
                tp.w[2] = t;
                break;
            case InterpMethod::Bicubic:
                tp.base = i0 - 1;
                cubic_weights(t, tp.w);
                break;
        }
    }
    return taps;
}

inline double apply_tap(const std::vector<double>& v, int n, const Tap1D& tp, InterpMethod m) {
    switch (m) {
        case InterpMethod::Nearest:
            return v[std::clamp(tp.base, 0, n - 1)];
        case InterpMethod::Bilinear:
            return tp.w[1] * reflect_fetch(v, n, tp.base) +
                   tp.w[2] * reflect_fetch(v, n, tp.base + 1);
        default:
            return tp.w[0] * reflect_fetch(v, n, tp.base) +
                   tp.w[1] * reflect_fetch(v, n, tp.base + 1) +
                   tp.w[2] * reflect_fetch(v, n, tp.base + 2) +
                   tp.w[3] * reflect_fetch(v, n, tp.base + 3);
    }
}

} // namespace detail

// Separable upsampling by integer factors. Output is (ny*fy) x (nx*fx) with
// the pitch divided accordingly; source values are reproduced at aligned
// output grid points.
inline Frame interpolate(const Frame& in, int factor_y, int factor_x,
                         InterpMethod method = InterpMethod::Bicubic) {
    if (factor_y < 1 || factor_x < 1)
        throw ConfigError("interpolate: factors must be >= 1");
    const int ny = in.geom.ny, nx = in.geom.nx;
    const int NY = ny * factor_y, NX = nx * factor_x;

    auto xt = detail::make_taps(NX, factor_x, method);
    auto yt = detail::make_taps(NY, factor_y, method);

    // Pass 1: rows, ny x NX.
    std::vector<double> mid(static_cast<long>(ny) * NX);
    std::vector<double> row(nx);
    for (int i = 0; i < ny; ++i) {
        std::copy_n(in.data.begin() + static_cast<long>(i) * nx, nx, row.begin());
        for (int o = 0; o < NX; ++o)
            mid[static_cast<long>(i) * NX + o] = detail::apply_tap(row, nx, xt[o], method);
    }
    // Pass 2: columns, NY x NX.
    GridGeometry g = in.geom;
    g.ny = NY;
    g.nx = NX;
    g.dy = in.geom.dy / factor_y;
    g.dx = in.geom.dx / factor_x;
    Frame out{g, std::vector<double>(static_cast<long>(NY) * NX)};
    std::vector<double> col(ny);
    for (int j = 0; j < NX; ++j) {
        for (int i = 0; i < ny; ++i) col[i] = mid[static_cast<long>(i) * NX + j];
        for (int o = 0; o < NY; ++o)
            out.data[static_cast<long>(o) * NX + j] = detail::apply_tap(col, ny, yt[o], method);
    }
    return out;
}

// Separable Gaussian blur with a physical sigma. Per-axis pixel sigmas are
// sigma/dy and sigma/dx so the blur stays isotropic in space on anisotropic
// grids. Kernel truncated at 3 sigma and renormalized; replicated edges;
// sigma 0 is the identity.
inline Frame gaussian_smooth(const Frame& in, double sigma_m) {
    if (!(sigma_m >= 0)) throw ConfigError("gaussian_smooth: sigma must be >= 0");
    if (sigma_m == 0.0) return in;

    auto kernel_for = [](double sigma_px) {
        int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_px)));
        std::vector<double> k(2 * radius + 1);
        double sum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            double v = std::exp(-0.5 * (i / sigma_px) * (i / sigma_px));
            k[i + radius] = v;
            sum += v;
        }
        for (double& v : k) v /= sum;
        return k;
    };
    auto convolve_line = [](const std::vector<double>& src, std::vector<double>& dst,
                            const std::vector<double>& k) {
        const int n = static_cast<int>(src.size());
        const int radius = static_cast<int>(k.size() / 2);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d)
                acc += k[d + radius] * src[std::clamp(i + d, 0, n - 1)];
            dst[i] = acc;
        }
    };

    const int ny = in.geom.ny, nx = in.geom.nx;
    std::vector<double> ky = kernel_for(sigma_m / in.geom.dy);
    std::vector<double> kx = kernel_for(sigma_m / in.geom.dx);

    Frame out = in;
    std::vector<double> line(std::max(ny, nx)), res(std::max(ny, nx));
    for (int i = 0; i < ny; ++i) {
        line.assign(out.data.begin() + static_cast<long>(i) * nx,
                    out.data.begin() + static_cast<long>(i + 1) * nx);
        res.resize(nx);
        convolve_line(line, res, kx);
        std::copy_n(res.begin(), nx, out.data.begin() + static_cast<long>(i) * nx);
    }
    for (int j = 0; j < nx; ++j) {
        line.resize(ny);
        for (int i = 0; i < ny; ++i) line[i] = out.data[static_cast<long>(i) * nx + j];
        res.resize(ny);
        convolve_line(line, res, ky);
        for (int i = 0; i < ny; ++i) out.data[static_cast<long>(i) * nx + j] = res[i];
    }
    return out;
}

} // namespace srus
