#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"

namespace srus {

// 3x3 structuring element with additive weights. Flat (all-zero weights)
// 8-connected is the default; 4-connected drops the diagonals.
struct StructuringElement {
    struct Offset {
        int dy;
        int dx;
        double w;
    };
    std::vector<Offset> offsets; // includes the origin

    static StructuringElement flat8() {
        StructuringElement s;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                s.offsets.push_back({dy, dx, 0.0});
        return s;
    }
    static StructuringElement flat4() {
        StructuringElement s;
        s.offsets = {{0, 0, 0.0}, {-1, 0, 0.0}, {1, 0, 0.0}, {0, -1, 0.0}, {0, 1, 0.0}};
        return s;
    }
    static StructuringElement flat(int connectivity) {
        if (connectivity == 4) return flat4();
        if (connectivity == 8) return flat8();
        throw ConfigError("structuring element: connectivity must be 4 or 8");
    }
};

namespace detail {

inline double check_element(const StructuringElement& s) {
    for (const auto& o : s.offsets) {
        if (std::abs(o.dy) > 1 || std::abs(o.dx) > 1)
            throw ConfigError("structuring element: offsets must lie in the 3x3 window");
        if (!std::isfinite(o.w))
            throw ConfigError("structuring element: weights must be finite");
    }
    for (const auto& o : s.offsets)
        if (o.dy == 0 && o.dx == 0) return o.w;
    throw ConfigError("structuring element: must contain the origin");
}

// Reconstruction iterates geodesic dilation to a fixed point; a nonzero
// origin weight either breaks monotonicity (negative) or forces the trivial
// fixed point at the mask (positive), so it is rejected up front.
inline void check_reconstruction_element(const StructuringElement& s) {
    if (check_element(s) != 0.0)
        throw ConfigError("reconstruction: origin weight must be 0");
}

inline void check_same_shape(const Frame& a, const Frame& b, const char* what) {
    if (!(a.geom == b.geom))
        throw ConfigError(std::string(what) + ": frames must share one geometry");
}

inline void check_marker_below_mask(const Frame& marker, const Frame& mask) {
    for (size_t k = 0; k < marker.data.size(); ++k)
        if (marker.data[k] > mask.data[k]) {
            std::ostringstream os;
            os << "marker exceeds mask at pixel " << k / mask.geom.nx << ","
               << k % mask.geom.nx << " (" << marker.data[k] << " > " << mask.data[k] << ")";
            throw ConfigError(os.str());
        }
}

} // namespace detail

// Grayscale dilation: out(r) = max over offsets o of I(r-o) + w(o).
// Out-of-domain neighbors are ignored (-inf padding).
inline Frame dilate(const Frame& img, const StructuringElement& s) {
    detail::check_element(s);
    const int ny = img.geom.ny, nx = img.geom.nx;
    Frame out = img;
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nx; ++j) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& o : s.offsets) {
                int si = i - o.dy, sj = j - o.dx;
                if (si < 0 || si >= ny || sj < 0 || sj >= nx) continue;
                best = std::max(best, img.at(si, sj) + o.w);
            }
            out.at(i, j) = best;
        }
    return out;
}

// Geodesic dilation: dilate the marker, then clip by the mask pointwise.
inline Frame geodesic_dilate(const Frame& marker, const Frame& mask,
                             const StructuringElement& s) {
    detail::check_same_shape(marker, mask, "geodesic dilation");
    detail::check_marker_below_mask(marker, mask);
    Frame out = dilate(marker, s);
    for (size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = std::min(out.data[k], mask.data[k]);
    return out;
}

// Reconstruction by iteration: repeat geodesic dilation until the image stops
// changing. The sequence is pointwise nondecreasing and bounded by the mask,
// and the equality test is exact, so termination is guaranteed.
inline Frame reconstruct_naive(const Frame& mask, const Frame& marker,
                               const StructuringElement& s) {
    detail::check_same_shape(marker, mask, "reconstruction");
    detail::check_reconstruction_element(s);
    detail::check_marker_below_mask(marker, mask);
    Frame cur = marker;
    for (;;) {
        Frame next = geodesic_dilate(cur, mask, s);
        if (next.data == cur.data) return next;
        cur = std::move(next);
    }
}

// Hybrid reconstruction: one raster sweep propagating from already-visited
// neighbors, one anti-raster sweep that also enqueues still-unstable pixels,
// then FIFO propagation to the fixed point. Output matches reconstruct_naive
// bit for bit.
inline Frame reconstruct_fast(const Frame& mask, const Frame& marker,
                              const StructuringElement& s) {
    detail::check_same_shape(marker, mask, "reconstruction");
    detail::check_reconstruction_element(s);
    detail::check_marker_below_mask(marker, mask);

    const int ny = mask.geom.ny, nx = mask.geom.nx;
    Frame out = marker;
    const std::vector<double>& bound = mask.data;
    std::vector<double>& val = out.data;

    // Offsets are interpreted as in dilate(): pixel r receives val(r-o)+w(o).
    // "causal" offsets point at pixels already visited in the raster sweep.
    std::vector<StructuringElement::Offset> causal, anticausal;
    for (const auto& o : s.offsets) {
        if (o.dy > 0 || (o.dy == 0 && o.dx > 0)) causal.push_back(o);
        else if (o.dy < 0 || (o.dy == 0 && o.dx < 0)) anticausal.push_back(o);
    }

    auto idx = [nx](int i, int j) { return static_cast<long>(i) * nx + j; };

    // Raster sweep.
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nx; ++j) {
            double v = val[idx(i, j)];
            for (const auto& o : causal) {
                int si = i - o.dy, sj = j - o.dx;
                if (si < 0 || si >= ny || sj < 0 || sj >= nx) continue;
                v = std::max(v, val[idx(si, sj)] + o.w);
            }
            val[idx(i, j)] = std::min(v, bound[idx(i, j)]);
        }

    // Anti-raster sweep; enqueue pixels whose successors could still rise.
    std::queue<long> fifo;
    for (int i = ny - 1; i >= 0; --i)
        for (int j = nx - 1; j >= 0; --j) {
            double v = val[idx(i, j)];
            for (const auto& o : anticausal) {
                int si = i - o.dy, sj = j - o.dx;
                if (si < 0 || si >= ny || sj < 0 || sj >= nx) continue;
                v = std::max(v, val[idx(si, sj)] + o.w);
            }
            v = std::min(v, bound[idx(i, j)]);
            val[idx(i, j)] = v;
            // Seed the queue if some already-scanned successor q = r + o is
            // still below what r can push into it (weight w(o), as in the
            // dilation at q).
            for (const auto& o : causal) {
                int qi = i + o.dy, qj = j + o.dx;
                if (qi < 0 || qi >= ny || qj < 0 || qj >= nx) continue;
                long q = idx(qi, qj);
                if (val[q] < std::min(v + o.w, bound[q])) {
                    fifo.push(idx(i, j));
                    break;
                }
            }
        }

    // Queue propagation. Popping r pushes every neighbor q = r + o that the
    // dilation from r (weight w(o)) can still raise.
    while (!fifo.empty()) {
        long p = fifo.front();
        fifo.pop();
        int i = static_cast<int>(p / nx), j = static_cast<int>(p % nx);
        double v = val[p];
        for (const auto& o : s.offsets) {
            if (o.dy == 0 && o.dx == 0) continue;
            int qi = i + o.dy, qj = j + o.dx;
            if (qi < 0 || qi >= ny || qj < 0 || qj >= nx) continue;
            long q = idx(qi, qj);
            double cand = std::min(v + o.w, bound[q]);
            if (cand > val[q]) {
                val[q] = cand;
                fifo.push(q);
            }
        }
    }
    return out;
}

// How the marker is derived from the image for dome extraction.
enum class MarkerMode {
    Subtractive,   // J = max(I - h, 0); dome heights ~ h regardless of peak value
    Multiplicative // J = (1 - h) * I;   dome heights scale with local intensity
};

// Peak-region image P = I - reconstruct(I, J).
struct DomeImage {
    GridGeometry geom;
    std::vector<double> data;
    double h = 0.0;
    MarkerMode mode = MarkerMode::Subtractive;
};

// Extracts regional maxima as domes of height up to h (Subtractive) or up to
// h*I (Multiplicative). Expects the input scaled to [0, 1].
inline DomeImage hdome(const Frame& img, double h, MarkerMode mode,
                       const StructuringElement& s = StructuringElement::flat8()) {
    if (!(h > 0.0) || !(h < 1.0))
        throw ConfigError("hdome: offset h must lie in (0, 1)");
    Frame marker = img;
    if (mode == MarkerMode::Subtractive) {
        for (double& v : marker.data) v = std::max(v - h, 0.0);
    } else {
        for (double& v : marker.data) v *= (1.0 - h);
    }
    Frame rec = reconstruct_fast(img, marker, s);
    DomeImage dome{img.geom, std::vector<double>(img.data.size()), h, mode};
    for (size_t k = 0; k < dome.data.size(); ++k)
        dome.data[k] = img.data[k] - rec.data[k];
    return dome;
}

} // namespace srus
