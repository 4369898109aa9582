#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"
#include "srus/rng.hpp"

namespace srus {

// One straight vessel segment. Bubbles spawn at the p0 end, advect toward p1
// at flow_speed, and despawn past the far end. flow_speed 0 degenerates to
// static one-frame bubbles scattered uniformly along the axis.
struct VesselSpec {
    double y0 = 0.0, x0 = 0.0; // inlet [m]
    double y1 = 0.0, x1 = 0.0; // outlet [m]
    double diameter = 100e-6;  // [m]
    double flow_speed = 10e-3; // [m/s]
    double bubbles_per_frame = 1.0; // Poisson mean of new arrivals per frame
    double amp_lo = 0.1, amp_hi = 1.0;
};

struct PhantomSpec {
    GridGeometry geometry;
    std::vector<VesselSpec> vessels;
    double psf_sigma = 30e-6;       // bubble image sigma [m]
    double clutter_amplitude = 0.0; // static low-frequency field peak
    double clutter_drift = 0.0;     // optional slow temporal modulation
    double noise_rel = 0.0;         // Gaussian noise, fraction of mean intensity
    int nframes = 1;
    int warmup_frames = 0; // simulated but not recorded; fills vessels before t=0
    std::uint64_t seed = 1;
    int mask_factor_y = 12; // vessel mask grid refinement per axis
    int mask_factor_x = 12;
    bool elongated_psf = false; // PSF-model mismatch option for robustness tests
};

struct TrueBubble {
    int frame = 0;
    double y = 0.0, x = 0.0; // [m]
    double amplitude = 0.0;
    int vessel = 0;
    double vy = 0.0, vx = 0.0; // [m/s]
};

struct GroundTruth {
    std::vector<std::vector<TrueBubble>> per_frame;
    std::optional<VesselMask> mask; // absent for vessel-free phantoms

    std::vector<TrueBubble> all() const {
        std::vector<TrueBubble> out;
        for (const auto& f : per_frame) out.insert(out.end(), f.begin(), f.end());
        return out;
    }
};

namespace detail {

inline double point_segment_distance(double py, double px, const VesselSpec& v) {
    double sy = v.y1 - v.y0, sx = v.x1 - v.x0;
    double len2 = sy * sy + sx * sx;
    double t = len2 > 0 ? ((py - v.y0) * sy + (px - v.x0) * sx) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(py - (v.y0 + t * sy), px - (v.x0 + t * sx));
}

inline void add_gaussian(std::vector<double>& data, const GridGeometry& g, double cy,
                         double cx, double amp, double sig_y, double sig_x) {
    const int ri = static_cast<int>(std::ceil(4.0 * sig_y / g.dy));
    const int rj = static_cast<int>(std::ceil(4.0 * sig_x / g.dx));
    const int ci = static_cast<int>(std::lround(cy / g.dy));
    const int cj = static_cast<int>(std::lround(cx / g.dx));
    for (int i = std::max(0, ci - ri); i <= std::min(g.ny - 1, ci + ri); ++i) {
        double gy = (i * g.dy - cy) / sig_y;
        double ey = std::exp(-0.5 * gy * gy);
        double* row = data.data() + static_cast<long>(i) * g.nx;
        for (int j = std::max(0, cj - rj); j <= std::min(g.nx - 1, cj + rj); ++j) {
            double gx = (j * g.dx - cx) / sig_x;
            row[j] += amp * ey * std::exp(-0.5 * gx * gx);
        }
    }
}

// Smooth positive random field in [0, amplitude]: coarse white noise,
// bilinearly upsampled.
inline std::vector<double> clutter_field(const GridGeometry& g, double amplitude, Rng& rng) {
    const int cy = std::max(2, g.ny / 8), cx = std::max(2, g.nx / 8);
    std::vector<double> coarse(static_cast<long>(cy) * cx);
    for (double& v : coarse) v = rng.uniform();
    std::vector<double> out(g.npixels());
    for (int i = 0; i < g.ny; ++i) {
        double fy = (g.ny > 1) ? static_cast<double>(i) * (cy - 1) / (g.ny - 1) : 0.0;
        int i0 = std::min(static_cast<int>(fy), cy - 2);
        double ty = fy - i0;
        for (int j = 0; j < g.nx; ++j) {
            double fx = (g.nx > 1) ? static_cast<double>(j) * (cx - 1) / (g.nx - 1) : 0.0;
            int j0 = std::min(static_cast<int>(fx), cx - 2);
            double tx = fx - j0;
            double v00 = coarse[static_cast<long>(i0) * cx + j0];
            double v01 = coarse[static_cast<long>(i0) * cx + j0 + 1];
            double v10 = coarse[static_cast<long>(i0 + 1) * cx + j0];
            double v11 = coarse[static_cast<long>(i0 + 1) * cx + j0 + 1];
            out[static_cast<long>(i) * g.nx + j] =
                amplitude * ((1 - ty) * ((1 - tx) * v00 + tx * v01) +
                             ty * ((1 - tx) * v10 + tx * v11));
        }
    }
    return out;
}

} // namespace detail

// Deterministic synthetic CEUS phantom: static clutter + flowing bubble
// Gaussians + optional noise, with full per-frame ground truth and a vessel
// mask on a refined grid. All samples are rounded through float32 so the
// stack round-trips the FST format bit-exactly.
inline std::pair<FrameStack, GroundTruth> generate_phantom(const PhantomSpec& spec) {
    check_geometry(spec.geometry);
    if (spec.nframes < 1) throw ConfigError("phantom: nframes must be >= 1");
    if (spec.warmup_frames < 0) throw ConfigError("phantom: warmup_frames must be >= 0");
    if (!(spec.psf_sigma > 0)) throw ConfigError("phantom: psf_sigma must be > 0");
    if (spec.mask_factor_y < 1 || spec.mask_factor_x < 1)
        throw ConfigError("phantom: mask factors must be >= 1");
    if (!(spec.clutter_amplitude >= 0) || !(spec.noise_rel >= 0))
        throw ConfigError("phantom: clutter and noise amplitudes must be >= 0");

    const GridGeometry& g = spec.geometry;
    GridGeometry mg = g;
    mg.ny = g.ny * spec.mask_factor_y;
    mg.nx = g.nx * spec.mask_factor_x;
    mg.dy = g.dy / spec.mask_factor_y;
    mg.dx = g.dx / spec.mask_factor_x;

    // Spawn inset: ground-truth positions stay far enough inside the vessel
    // that the bilinearly sampled mask distance is exactly zero there.
    const double margin = 1.25 * std::hypot(mg.dy, mg.dx);

    for (size_t vi = 0; vi < spec.vessels.size(); ++vi) {
        const auto& v = spec.vessels[vi];
        if (!(v.diameter > 2.5 * std::hypot(mg.dy, mg.dx)))
            throw ConfigError("phantom: vessel " + std::to_string(vi) +
                              " too narrow for the mask grid resolution");
        if (!(v.amp_lo > 0) || v.amp_hi < v.amp_lo)
            throw ConfigError("phantom: vessel amplitude range must be positive");
        if (!(v.bubbles_per_frame >= 0) || !(v.flow_speed >= 0))
            throw ConfigError("phantom: rates and speeds must be >= 0");
        const double r = 0.5 * v.diameter;
        for (auto [py, px] : {std::pair{v.y0, v.x0}, std::pair{v.y1, v.x1}}) {
            if (py - r < 0 || py + r > g.extent_y() || px - r < 0 || px + r > g.extent_x())
                throw ConfigError("phantom: vessel " + std::to_string(vi) +
                                  " extends outside the frame");
        }
    }

    Rng rng(spec.seed);

    std::vector<double> clutter;
    if (spec.clutter_amplitude > 0)
        clutter = detail::clutter_field(g, spec.clutter_amplitude, rng);

    struct Bubble {
        int vessel;
        double s;      // along-axis position [m]
        double t_off;  // transverse offset [m]
        double amp;
        bool one_shot; // zero-flow bubbles last a single frame
    };
    std::vector<Bubble> active;

    FrameStack stack;
    stack.geom = g;
    stack.frames.reserve(spec.nframes);
    GroundTruth truth;
    truth.per_frame.resize(spec.nframes);

    const double sig_y = spec.elongated_psf ? 1.5 * spec.psf_sigma : spec.psf_sigma;
    const double sig_x = spec.elongated_psf ? spec.psf_sigma / 1.5 : spec.psf_sigma;

    for (int f = -spec.warmup_frames; f < spec.nframes; ++f) {
        // Advance, cull, then spawn.
        for (auto& b : active)
            b.s += spec.vessels[b.vessel].flow_speed * g.dt;
        std::erase_if(active, [&](const Bubble& b) {
            const auto& v = spec.vessels[b.vessel];
            double len = std::hypot(v.y1 - v.y0, v.x1 - v.x0);
            return b.one_shot || b.s > len - margin;
        });
        for (int vi = 0; vi < static_cast<int>(spec.vessels.size()); ++vi) {
            const auto& v = spec.vessels[vi];
            int n_new = rng.poisson(v.bubbles_per_frame);
            double len = std::hypot(v.y1 - v.y0, v.x1 - v.x0);
            for (int k = 0; k < n_new; ++k) {
                Bubble b;
                b.vessel = vi;
                b.t_off = rng.uniform(-(0.5 * v.diameter - margin), 0.5 * v.diameter - margin);
                b.amp = rng.uniform(v.amp_lo, v.amp_hi);
                if (v.flow_speed > 0) {
                    b.s = margin + rng.uniform() * v.flow_speed * g.dt;
                    b.one_shot = false;
                } else {
                    b.s = rng.uniform(margin, std::max(margin, len - margin));
                    b.one_shot = true;
                }
                if (b.s <= len - margin) active.push_back(b);
            }
        }
        if (f < 0) continue; // warm-up: populate the vessels, record nothing

        std::vector<double> plane(g.npixels(), 0.0);
        if (!clutter.empty()) {
            double env = 1.0 + spec.clutter_drift *
                                   std::sin(2.0 * std::numbers::pi * f / spec.nframes);
            for (long k = 0; k < g.npixels(); ++k) plane[k] = clutter[k] * env;
        }
        for (const auto& b : active) {
            const auto& v = spec.vessels[b.vessel];
            double len = std::hypot(v.y1 - v.y0, v.x1 - v.x0);
            double uy = (v.y1 - v.y0) / len, ux = (v.x1 - v.x0) / len;
            double py = v.y0 + uy * b.s - ux * b.t_off;
            double px = v.x0 + ux * b.s + uy * b.t_off;
            detail::add_gaussian(plane, g, py, px, b.amp, sig_y, sig_x);
            truth.per_frame[f].push_back({f, py, px, b.amp, b.vessel,
                                          uy * v.flow_speed, ux * v.flow_speed});
        }
        stack.frames.push_back(std::move(plane));
    }

    if (spec.noise_rel > 0) {
        double sd = spec.noise_rel * stack_mean(stack);
        for (auto& plane : stack.frames)
            for (double& v : plane) v = std::max(0.0, v + sd * rng.gauss());
    }

    // Pin every sample to float32 so FST round-trips reproduce the stack.
    for (auto& plane : stack.frames)
        for (double& v : plane) v = static_cast<double>(static_cast<float>(v));

    if (!spec.vessels.empty()) {
        std::vector<std::uint8_t> bits(mg.npixels(), 0);
        for (int i = 0; i < mg.ny; ++i)
            for (int j = 0; j < mg.nx; ++j) {
                double py = i * mg.dy, px = j * mg.dx;
                for (const auto& v : spec.vessels)
                    if (detail::point_segment_distance(py, px, v) <= 0.5 * v.diameter) {
                        bits[static_cast<long>(i) * mg.nx + j] = 1;
                        break;
                    }
            }
        truth.mask = mask_from_image(std::move(bits), mg);
    }
    return {std::move(stack), std::move(truth)};
}

} // namespace srus
