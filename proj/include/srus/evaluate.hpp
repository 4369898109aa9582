#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"
#include "srus/localize.hpp"
#include "srus/rng.hpp"

namespace srus {

struct CnrValue {
    double linear = 0.0;
    double db = -std::numeric_limits<double>::infinity(); // sentinel for linear <= 0
};

// Contrast-to-noise ratio of a region against a background pixel set:
// (mean ROI - mean bg) / std bg, and its 20*log10 dB form.
template <class Image>
CnrValue cnr(const Image& img, const std::vector<long>& roi, const std::vector<long>& bg) {
    if (roi.empty()) throw ConfigError("cnr: empty ROI");
    if (bg.size() < 2) throw ConfigError("cnr: background needs at least 2 pixels");
    double roi_mean = 0.0;
    for (long p : roi) roi_mean += img.data[p];
    roi_mean /= static_cast<double>(roi.size());

    double bg_mean = 0.0;
    for (long p : bg) bg_mean += img.data[p];
    bg_mean /= static_cast<double>(bg.size());
    double var = 0.0;
    for (long p : bg) {
        double d = img.data[p] - bg_mean;
        var += d * d;
    }
    var /= static_cast<double>(bg.size());
    double sd = std::sqrt(var);
    if (!(sd > 0.0)) throw DataError("cnr: degenerate background (zero variance)");

    CnrValue v;
    v.linear = (roi_mean - bg_mean) / sd;
    if (v.linear > 0.0) v.db = 20.0 * std::log10(v.linear);
    return v;
}

// Rectangle of pixel indices [r0, r1] x [c0, c1], inclusive, for ROI specs.
inline std::vector<long> rect_pixels(const GridGeometry& g, int r0, int c0, int r1, int c1) {
    if (r0 < 0 || c0 < 0 || r1 >= g.ny || c1 >= g.nx || r0 > r1 || c0 > c1)
        throw ConfigError("rect_pixels: rectangle out of bounds");
    std::vector<long> px;
    px.reserve(static_cast<size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
    for (int i = r0; i <= r1; ++i)
        for (int j = c0; j <= c1; ++j) px.push_back(static_cast<long>(i) * g.nx + j);
    return px;
}

struct AccuracyReport {
    long n_total = 0;
    std::vector<double> tolerances;       // meters, as supplied
    std::vector<long> n_within;           // per tolerance
    std::vector<double> fraction_within;  // NaN when n_total == 0
    bool defined = false;                 // false when there were no localizations
};

// Scores localizations against the vessel mask: a point is within tolerance
// delta iff the bilinearly sampled distance field is <= delta. delta = 0
// means strictly inside the mask support.
inline AccuracyReport in_vessel_fraction(const std::vector<Localization>& locs,
                                         const VesselMask& mask,
                                         const std::vector<double>& tolerances) {
    for (double t : tolerances)
        if (!(t >= 0)) throw ConfigError("in_vessel_fraction: tolerances must be >= 0");
    AccuracyReport rep;
    rep.tolerances = tolerances;
    rep.n_total = static_cast<long>(locs.size());
    rep.n_within.assign(tolerances.size(), 0);
    rep.fraction_within.assign(tolerances.size(),
                               std::numeric_limits<double>::quiet_NaN());
    for (const auto& loc : locs) {
        double d = sample_bilinear(mask.distance, mask.geom, loc.y, loc.x);
        for (size_t k = 0; k < tolerances.size(); ++k)
            if (d <= tolerances[k]) ++rep.n_within[k];
    }
    if (rep.n_total > 0) {
        rep.defined = true;
        for (size_t k = 0; k < tolerances.size(); ++k)
            rep.fraction_within[k] =
                static_cast<double>(rep.n_within[k]) / static_cast<double>(rep.n_total);
    }
    return rep;
}

// Theoretical maximum number of resolvable point sources: mask area divided
// by one square wavelength.
inline double upper_bound(const VesselMask& mask, double wavelength) {
    if (!(wavelength > 0)) throw ConfigError("upper_bound: wavelength must be > 0");
    long count = 0;
    for (auto b : mask.bits) count += b ? 1 : 0;
    if (count == 0) throw DataError("upper_bound: empty mask");
    return static_cast<double>(count) * mask.geom.dy * mask.geom.dx /
           (wavelength * wavelength);
}

// Adds zero-mean Gaussian noise with standard deviation amplitude_rel times
// the mean stack intensity, clipped at 0. Deterministic for a given seed;
// amplitude 0 returns the input unchanged.
inline FrameStack add_noise(const FrameStack& s, double amplitude_rel, std::uint64_t seed) {
    if (!(amplitude_rel >= 0)) throw ConfigError("add_noise: amplitude must be >= 0");
    check_stack(s);
    FrameStack out{s.geom, s.frames};
    if (amplitude_rel == 0.0) return out;
    const double sd = amplitude_rel * stack_mean(s);
    Rng rng(seed);
    for (auto& f : out.frames)
        for (double& v : f) v = std::max(0.0, v + sd * rng.gauss());
    return out;
}

} // namespace srus
