#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "srus/errors.hpp"
#include "srus/localize.hpp"

namespace srus {

struct VelocityVector {
    double y = 0.0, x = 0.0;   // pair midpoint [m]
    double vy = 0.0, vx = 0.0; // [m/s]
    int frame_index = 0;       // earlier frame of the pair
    double pair_distance = 0.0;

    double speed() const { return std::hypot(vy, vx); }
};

// Greedy globally-shortest-first pairing between two consecutive frames'
// localizations. A candidate pair is accepted if neither endpoint is taken
// and the displacement is within max_disp.
inline std::vector<VelocityVector> nn_pair_velocities(const std::vector<Localization>& a,
                                                      const std::vector<Localization>& b,
                                                      double dt, double max_disp) {
    if (!(dt > 0)) throw ConfigError("nn_pair_velocities: dt must be > 0");
    if (!(max_disp > 0)) throw ConfigError("nn_pair_velocities: max_disp must be > 0");

    struct Cand {
        double d;
        int i, j;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < static_cast<int>(a.size()); ++i)
        for (int j = 0; j < static_cast<int>(b.size()); ++j) {
            double d = std::hypot(b[j].y - a[i].y, b[j].x - a[i].x);
            if (d <= max_disp) cands.push_back({d, i, j});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& p, const Cand& q) {
        if (p.d != q.d) return p.d < q.d;
        if (p.i != q.i) return p.i < q.i;
        return p.j < q.j;
    });

    std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
    std::vector<VelocityVector> out;
    for (const auto& c : cands) {
        if (used_a[c.i] || used_b[c.j]) continue;
        used_a[c.i] = 1;
        used_b[c.j] = 1;
        VelocityVector v;
        v.y = 0.5 * (a[c.i].y + b[c.j].y);
        v.x = 0.5 * (a[c.i].x + b[c.j].x);
        v.vy = (b[c.j].y - a[c.i].y) / dt;
        v.vx = (b[c.j].x - a[c.i].x) / dt;
        v.frame_index = a[c.i].frame_index;
        v.pair_distance = c.d;
        out.push_back(v);
    }
    return out;
}

} // namespace srus
