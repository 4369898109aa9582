#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"
#include "srus/morphology.hpp"

namespace srus {

// A connected set of dome pixels with its summary statistics. Pixel indices
// refer to the (interpolated) grid the dome was computed on.
struct PeakRegion {
    std::vector<long> pixels; // linear indices, sorted ascending
    int area_px = 0;
    double area_wl2 = 0.0;        // area * dy * dx / wavelength^2
    double peak_value = 0.0;      // max dome value inside the region
    double centroid_y = 0.0;      // meters, intensity-weighted
    double centroid_x = 0.0;
    double orientation_rad = 0.0; // principal axis vs +x, in (-pi/2, pi/2]
    int min_row = 0, min_col = 0;
    int bbox_r0 = 0, bbox_r1 = 0, bbox_c0 = 0, bbox_c1 = 0; // inclusive
};

struct Localization {
    int frame_index = 0;
    double y = 0.0, x = 0.0; // meters
    double amplitude = 0.0;  // dome (or thresholded-frame) peak value
    double area_wl2 = 0.0;
    double orientation_rad = 0.0;
};

struct LocalizeConfig {
    double h = 0.05;
    MarkerMode mode = MarkerMode::Subtractive;
    double retention_fraction = 0.10; // keep peaks within this fraction of the max
    double region_floor = 0.5;        // zero dome values below floor*h before labeling
    double psf_sigma = 30e-6;         // meters
    double baseline_threshold = 0.90; // non-MR comparison method
    int connectivity = 8;

    void validate() const {
        auto in01 = [](double v) { return v > 0.0 && v < 1.0; };
        if (!in01(h)) throw ConfigError("localize: h must lie in (0, 1)");
        if (!in01(retention_fraction))
            throw ConfigError("localize: retention_fraction must lie in (0, 1)");
        if (!in01(region_floor))
            throw ConfigError("localize: region_floor must lie in (0, 1)");
        if (!in01(baseline_threshold))
            throw ConfigError("localize: baseline_threshold must lie in (0, 1)");
        if (!(psf_sigma > 0)) throw ConfigError("localize: psf_sigma must be > 0");
        if (connectivity != 4 && connectivity != 8)
            throw ConfigError("localize: connectivity must be 4 or 8");
    }
};

namespace detail {

// Connected components of {weights >= floor}, with statistics taken from the
// weight image. Regions come out ordered by (min row, min col).
inline std::vector<PeakRegion> label_regions(const std::vector<double>& weights,
                                             const GridGeometry& g, double floor,
                                             int connectivity) {
    const int ny = g.ny, nx = g.nx;
    std::vector<std::uint8_t> seen(weights.size(), 0);
    std::vector<PeakRegion> regions;
    std::vector<long> stack;

    const int n_neigh = connectivity == 4 ? 4 : 8;
    static const int dy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static const int dx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dy4[4] = {-1, 0, 0, 1};
    static const int dx4[4] = {0, -1, 1, 0};
    const int* ddy = connectivity == 4 ? dy4 : dy8;
    const int* ddx = connectivity == 4 ? dx4 : dx8;

    for (long start = 0; start < static_cast<long>(weights.size()); ++start) {
        if (seen[start] || weights[start] < floor) continue;
        PeakRegion r;
        stack.clear();
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            long p = stack.back();
            stack.pop_back();
            r.pixels.push_back(p);
            int i = static_cast<int>(p / nx), j = static_cast<int>(p % nx);
            for (int d = 0; d < n_neigh; ++d) {
                int qi = i + ddy[d], qj = j + ddx[d];
                if (qi < 0 || qi >= ny || qj < 0 || qj >= nx) continue;
                long q = static_cast<long>(qi) * nx + qj;
                if (!seen[q] && weights[q] >= floor) {
                    seen[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        std::sort(r.pixels.begin(), r.pixels.end());
        r.area_px = static_cast<int>(r.pixels.size());
        r.area_wl2 = r.area_px * g.dy * g.dx / (g.wavelength * g.wavelength);

        double wsum = 0.0, cy = 0.0, cx = 0.0;
        r.min_row = ny;
        r.min_col = nx;
        r.bbox_r0 = ny;
        r.bbox_c0 = nx;
        r.bbox_r1 = 0;
        r.bbox_c1 = 0;
        for (long p : r.pixels) {
            int i = static_cast<int>(p / nx), j = static_cast<int>(p % nx);
            double w = weights[p];
            r.peak_value = std::max(r.peak_value, w);
            wsum += w;
            cy += w * i * g.dy;
            cx += w * j * g.dx;
            r.min_row = std::min(r.min_row, i);
            r.min_col = std::min(r.min_col, j);
            r.bbox_r0 = std::min(r.bbox_r0, i);
            r.bbox_r1 = std::max(r.bbox_r1, i);
            r.bbox_c0 = std::min(r.bbox_c0, j);
            r.bbox_c1 = std::max(r.bbox_c1, j);
        }
        r.centroid_y = cy / wsum;
        r.centroid_x = cx / wsum;

        // Orientation from second central moments of the weighted pixels.
        double m20 = 0.0, m02 = 0.0, m11 = 0.0;
        for (long p : r.pixels) {
            int i = static_cast<int>(p / nx), j = static_cast<int>(p % nx);
            double w = weights[p];
            double ddyv = i * g.dy - r.centroid_y;
            double ddxv = j * g.dx - r.centroid_x;
            m20 += w * ddxv * ddxv;
            m02 += w * ddyv * ddyv;
            m11 += w * ddxv * ddyv;
        }
        r.orientation_rad = (m11 == 0.0 && m20 == m02)
                                ? 0.0
                                : 0.5 * std::atan2(2.0 * m11, m20 - m02);
        regions.push_back(std::move(r));
    }
    std::sort(regions.begin(), regions.end(), [](const PeakRegion& a, const PeakRegion& b) {
        if (a.min_row != b.min_row) return a.min_row < b.min_row;
        return a.min_col < b.min_col;
    });
    return regions;
}

inline std::vector<double> gaussian_kernel_px(double sigma_px) {
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
}

// Three-point parabolic refinement around a discrete argmax; the offset is
// clamped to half a pixel.
inline double parabolic_offset(double fm, double f0, double fp) {
    double denom = fm - 2.0 * f0 + fp;
    if (denom >= 0.0) return 0.0; // flat or non-concave sample triple
    double off = 0.5 * (fm - fp) / denom;
    return std::clamp(off, -0.5, 0.5);
}

} // namespace detail

// Segments a dome image into peak regions: dome values below
// region_floor * h are zeroed, the remaining support is component-labeled.
inline std::vector<PeakRegion> segment_regions(const DomeImage& dome,
                                               const LocalizeConfig& cfg) {
    cfg.validate();
    return detail::label_regions(dome.data, dome.geom, cfg.region_floor * dome.h,
                                 cfg.connectivity);
}

// Keeps only regions whose peak is within retention_fraction of the frame's
// strongest region peak.
inline std::vector<PeakRegion> retain_peaks(const std::vector<PeakRegion>& regions,
                                            const LocalizeConfig& cfg) {
    if (regions.empty()) return {};
    double m = 0.0;
    for (const auto& r : regions) m = std::max(m, r.peak_value);
    std::vector<PeakRegion> kept;
    for (const auto& r : regions)
        if (r.peak_value >= (1.0 - cfg.retention_fraction) * m) kept.push_back(r);
    return kept;
}

// Super-localizes one region: crop the frame around the region's bounding box
// (padded by 3 sigma, clamped at borders), convolve with the Gaussian PSF
// model (zero padding outside the crop), take the argmax, and refine per axis
// with a parabolic fit.
inline Localization superlocalize(const PeakRegion& region, const Frame& frame,
                                  const LocalizeConfig& cfg) {
    cfg.validate();
    if (region.area_px < 1) throw ConfigError("superlocalize: empty region");

    const GridGeometry& g = frame.geom;
    Localization loc;
    loc.amplitude = region.peak_value;
    loc.area_wl2 = region.area_wl2;
    loc.orientation_rad = region.orientation_rad;

    if (region.area_px == 1) {
        long p = region.pixels.front();
        loc.y = static_cast<double>(p / g.nx) * g.dy;
        loc.x = static_cast<double>(p % g.nx) * g.dx;
        return loc;
    }

    const int pad_y = static_cast<int>(std::ceil(3.0 * cfg.psf_sigma / g.dy));
    const int pad_x = static_cast<int>(std::ceil(3.0 * cfg.psf_sigma / g.dx));
    const int r0 = std::max(0, region.bbox_r0 - pad_y);
    const int r1 = std::min(g.ny - 1, region.bbox_r1 + pad_y);
    const int c0 = std::max(0, region.bbox_c0 - pad_x);
    const int c1 = std::min(g.nx - 1, region.bbox_c1 + pad_x);
    const int ch = r1 - r0 + 1, cw = c1 - c0 + 1;

    std::vector<double> crop(static_cast<long>(ch) * cw);
    for (int i = 0; i < ch; ++i)
        for (int j = 0; j < cw; ++j)
            crop[static_cast<long>(i) * cw + j] = frame.at(r0 + i, c0 + j);

    auto ky = detail::gaussian_kernel_px(cfg.psf_sigma / g.dy);
    auto kx = detail::gaussian_kernel_px(cfg.psf_sigma / g.dx);
    const int ry = static_cast<int>(ky.size() / 2), rx = static_cast<int>(kx.size() / 2);

    std::vector<double> tmp(crop.size()), conv(crop.size());
    for (int i = 0; i < ch; ++i)
        for (int j = 0; j < cw; ++j) {
            double acc = 0.0;
            for (int d = -rx; d <= rx; ++d) {
                int jj = j + d;
                if (jj < 0 || jj >= cw) continue;
                acc += kx[d + rx] * crop[static_cast<long>(i) * cw + jj];
            }
            tmp[static_cast<long>(i) * cw + j] = acc;
        }
    for (int i = 0; i < ch; ++i)
        for (int j = 0; j < cw; ++j) {
            double acc = 0.0;
            for (int d = -ry; d <= ry; ++d) {
                int ii = i + d;
                if (ii < 0 || ii >= ch) continue;
                acc += ky[d + ry] * tmp[static_cast<long>(ii) * cw + j];
            }
            conv[static_cast<long>(i) * cw + j] = acc;
        }

    long best = 0;
    for (long k = 1; k < static_cast<long>(conv.size()); ++k)
        if (conv[k] > conv[best]) best = k;

    // A plateaued convolution (e.g. a constant region wider than the kernel)
    // has an exactly tied argmax set; its centroid is the peak.
    long n_ties = 0;
    double tie_i = 0.0, tie_j = 0.0;
    for (long k = 0; k < static_cast<long>(conv.size()); ++k)
        if (conv[k] == conv[best]) {
            ++n_ties;
            tie_i += static_cast<double>(k / cw);
            tie_j += static_cast<double>(k % cw);
        }
    if (n_ties > 1) {
        loc.y = (r0 + tie_i / n_ties) * g.dy;
        loc.x = (c0 + tie_j / n_ties) * g.dx;
        return loc;
    }
    int bi = static_cast<int>(best / cw), bj = static_cast<int>(best % cw);

    double off_y = 0.0, off_x = 0.0;
    if (bi > 0 && bi < ch - 1)
        off_y = detail::parabolic_offset(conv[static_cast<long>(bi - 1) * cw + bj],
                                         conv[best], conv[static_cast<long>(bi + 1) * cw + bj]);
    if (bj > 0 && bj < cw - 1)
        off_x = detail::parabolic_offset(conv[best - 1], conv[best], conv[best + 1]);

    loc.y = (r0 + bi + off_y) * g.dy;
    loc.x = (c0 + bj + off_x) * g.dx;
    return loc;
}

// Full per-frame chain: clamp to [0,1], dome extraction, segmentation,
// retention, super-localization. Input should be the normalized, filtered,
// preprocessed frame; clamping guards against interpolation overshoot and
// filter residuals outside [0, 1].
inline std::vector<Localization> localize_frame(const Frame& frame,
                                                const LocalizeConfig& cfg) {
    cfg.validate();
    Frame clamped = frame;
    for (double& v : clamped.data) v = std::clamp(v, 0.0, 1.0);
    DomeImage dome = hdome(clamped, cfg.h, cfg.mode,
                           StructuringElement::flat(cfg.connectivity));
    auto regions = retain_peaks(segment_regions(dome, cfg), cfg);
    std::vector<Localization> out;
    out.reserve(regions.size());
    for (const auto& r : regions) out.push_back(superlocalize(r, clamped, cfg));
    return out;
}

// Non-MR comparison method: binarize at baseline_threshold * max, label the
// surviving support, and super-localize each component against the frame.
inline std::vector<Localization> threshold_baseline(const Frame& frame,
                                                    const LocalizeConfig& cfg) {
    cfg.validate();
    double m = -std::numeric_limits<double>::infinity();
    for (double v : frame.data) m = std::max(m, v);
    std::vector<double> kept(frame.data.size(), 0.0);
    if (m > 0) {
        double thr = cfg.baseline_threshold * m;
        for (size_t k = 0; k < frame.data.size(); ++k)
            if (frame.data[k] >= thr) kept[k] = frame.data[k];
    }
    // Positive support only; a blank frame yields no regions.
    auto regions = detail::label_regions(kept, frame.geom,
                                         std::numeric_limits<double>::min(),
                                         cfg.connectivity);
    std::vector<Localization> out;
    out.reserve(regions.size());
    for (const auto& r : regions) out.push_back(superlocalize(r, frame, cfg));
    return out;
}

} // namespace srus
