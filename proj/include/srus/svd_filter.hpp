#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"

namespace srus {

struct SvdFilterConfig {
    double rel_threshold = 0.10; // fraction of the largest singular value
    bool drop_smallest = true;   // also remove the last (noise) component

    // The comparison is strict, so sigma_1 itself is always removed for any
    // threshold below 1. The closed endpoint 1 disables the relative cut.
    void validate() const {
        if (!(rel_threshold > 0.0) || !(rel_threshold <= 1.0))
            throw ConfigError("svd filter: rel_threshold must lie in (0, 1]");
    }
};

// Space-time (Casorati) arrangement of a stack: column t is frame t flattened
// row-major. Stored column-major, so the columns are the frame planes.
struct Casorati {
    long npixels = 0;
    int nframes = 0;
    std::vector<double> values; // npixels * nframes, column-major

    double* col(int t) { return values.data() + static_cast<long>(t) * npixels; }
    const double* col(int t) const { return values.data() + static_cast<long>(t) * npixels; }
};

inline Casorati casorati(const FrameStack& s) {
    check_stack(s);
    if (s.nframes() < 2)
        throw ConfigError("casorati: need at least 2 frames for a space-time matrix");
    Casorati m;
    m.npixels = s.geom.npixels();
    m.nframes = s.nframes();
    m.values.resize(m.npixels * m.nframes);
    for (int t = 0; t < m.nframes; ++t)
        std::copy(s.frames[t].begin(), s.frames[t].end(), m.col(t));
    return m;
}

inline FrameStack stack_from_casorati(const Casorati& m, const GridGeometry& geom) {
    if (geom.npixels() != m.npixels)
        throw ConfigError("casorati: geometry does not match matrix rows");
    FrameStack s;
    s.geom = geom;
    s.frames.resize(m.nframes);
    for (int t = 0; t < m.nframes; ++t)
        s.frames[t].assign(m.col(t), m.col(t) + m.npixels);
    return s;
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric n x n matrix (row-major).
// On return a holds the eigenvalues on its diagonal and v the eigenvectors
// (columns). Deterministic; throws if the sweep limit is hit.
inline void jacobi_eigen_symmetric(std::vector<double>& a, std::vector<double>& v, int n) {
    v.assign(static_cast<long>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<long>(i) * n + i] = 1.0;
    if (n == 1) return;

    auto at = [&](std::vector<double>& m, int i, int j) -> double& {
        return m[static_cast<long>(i) * n + j];
    };

    double norm = 0.0;
    for (long k = 0; k < static_cast<long>(n) * n; ++k) norm += a[k] * a[k];
    norm = std::sqrt(norm);
    if (norm == 0.0) return;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += 2.0 * at(a, i, j) * at(a, i, j);
        if (std::sqrt(off) <= 1e-14 * norm) return;

        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = at(a, p, q);
                if (apq == 0.0) continue;
                double app = at(a, p, p), aqq = at(a, q, q);
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) /
                           (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(a, k, p), akq = at(a, k, q);
                    at(a, k, p) = c * akp - s * akq;
                    at(a, k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(a, p, k), aqk = at(a, q, k);
                    at(a, p, k) = c * apk - s * aqk;
                    at(a, q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = at(v, k, p), vkq = at(v, k, q);
                    at(v, k, p) = c * vkp - s * vkq;
                    at(v, k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::ostringstream os;
    os << "jacobi eigensolver did not converge in " << max_sweeps
       << " sweeps (n=" << n << ", frobenius=" << norm << ")";
    throw NumericError(os.str());
}

} // namespace detail

// Per-run diagnostics for inspection and reporting.
struct SvdFilterInfo {
    std::vector<double> singular_values; // descending
    std::vector<int> removed;            // indices into singular_values
};

// Spatiotemporal SVD clutter filter. Works through the nframes x nframes Gram
// matrix (nframes << npixels), removes every singular value sigma_i with
// sigma_i > rel_threshold * sigma_1 plus optionally the smallest one, and
// subtracts the removed components: out = X - sum_i (X v_i) v_i^T, which is
// the reconstruction from the retained values.
inline FrameStack svd_clutter_filter(const FrameStack& s, const SvdFilterConfig& cfg,
                                     SvdFilterInfo* info = nullptr) {
    cfg.validate();
    check_stack(s);
    if (s.nframes() < 2)
        throw ConfigError("svd filter: need at least 2 frames");
    for (const auto& f : s.frames)
        for (double v : f)
            if (!std::isfinite(v)) throw DataError("svd filter: non-finite input value");

    const int n = s.nframes();
    const long npx = s.geom.npixels();

    // Gram matrix G = X^T X.
    std::vector<double> gram(static_cast<long>(n) * n);
    for (int a = 0; a < n; ++a) {
        const double* fa = s.frames[a].data();
        for (int b = a; b < n; ++b) {
            const double* fb = s.frames[b].data();
            double dot = 0.0;
            for (long k = 0; k < npx; ++k) dot += fa[k] * fb[k];
            gram[static_cast<long>(a) * n + b] = dot;
            gram[static_cast<long>(b) * n + a] = dot;
        }
    }

    std::vector<double> vecs;
    detail::jacobi_eigen_symmetric(gram, vecs, n);

    // Sort eigenpairs by eigenvalue, descending; clamp round-off negatives.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = gram[static_cast<long>(i) * n + i];
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return eig[a] > eig[b]; });

    std::vector<double> sigma(n);
    for (int r = 0; r < n; ++r) sigma[r] = std::sqrt(std::max(eig[order[r]], 0.0));

    std::vector<int> removed;
    for (int r = 0; r < n; ++r)
        if (sigma[r] > cfg.rel_threshold * sigma[0]) removed.push_back(r);
    if (cfg.drop_smallest) {
        if (removed.empty() || removed.back() != n - 1) removed.push_back(n - 1);
    }
    if (info) {
        info->singular_values = sigma;
        info->removed = removed;
    }

    // out = X - sum over removed of (X v) v^T.
    FrameStack out{s.geom, s.frames};
    std::vector<double> xv(npx);
    for (int r : removed) {
        const int col = order[r];
        std::fill(xv.begin(), xv.end(), 0.0);
        for (int t = 0; t < n; ++t) {
            double w = vecs[static_cast<long>(t) * n + col];
            if (w == 0.0) continue;
            const double* ft = s.frames[t].data();
            for (long k = 0; k < npx; ++k) xv[k] += w * ft[k];
        }
        for (int t = 0; t < n; ++t) {
            double w = vecs[static_cast<long>(t) * n + col];
            if (w == 0.0) continue;
            double* ot = out.frames[t].data();
            for (long k = 0; k < npx; ++k) ot[k] -= w * xv[k];
        }
    }
    return out;
}

} // namespace srus
