#include <catch2/catch.hpp>

#include <cmath>

#include "srus/evaluate.hpp"
#include "srus/grid.hpp"
#include "srus/rng.hpp"

using namespace srus;

namespace {
GridGeometry geom(int ny, int nx) { return GridGeometry{ny, nx, 10e-6, 10e-6, 2e-3, 60e-6}; }

Localization at(double y, double x) {
    Localization l;
    l.y = y;
    l.x = x;
    return l;
}
} // namespace

TEST_CASE("cnr formula", "[evaluate]") {
    GridGeometry g = geom(4, 4);
    Frame f = zero_frame(g);
    // background: two pixels with mean 1 and population sd 1
    f.at(0, 0) = 0.0;
    f.at(0, 1) = 2.0;
    std::vector<long> bg = {0, 1};

    SECTION("roi mean equal to bg mean gives 0 linear and -inf dB") {
        f.at(2, 2) = 1.0;
        auto v = cnr(f, {2 * 4 + 2}, bg);
        CHECK(v.linear == 0.0);
        CHECK(std::isinf(v.db));
        CHECK(v.db < 0);
    }
    SECTION("one sd above background is 0 dB") {
        f.at(2, 2) = 2.0;
        auto v = cnr(f, {2 * 4 + 2}, bg);
        CHECK(v.linear == Approx(1.0));
        CHECK(v.db == Approx(0.0).margin(1e-12));
    }
    SECTION("hand-computed formula on random data") {
        Rng rng(3);
        Frame r = zero_frame(geom(8, 8));
        for (double& v : r.data) v = rng.uniform();
        auto roi = rect_pixels(r.geom, 1, 1, 3, 3);
        auto bgr = rect_pixels(r.geom, 5, 5, 7, 7);
        auto v = cnr(r, roi, bgr);
        double rm = 0, bm = 0, bv = 0;
        for (long p : roi) rm += r.data[p];
        rm /= static_cast<double>(roi.size());
        for (long p : bgr) bm += r.data[p];
        bm /= static_cast<double>(bgr.size());
        for (long p : bgr) bv += (r.data[p] - bm) * (r.data[p] - bm);
        bv /= static_cast<double>(bgr.size());
        REQUIRE(v.linear == Approx((rm - bm) / std::sqrt(bv)).margin(1e-9));
    }
    SECTION("degenerate background is an error") {
        Frame c = zero_frame(g);
        CHECK_THROWS_AS(cnr(c, {0}, {1, 2, 3}), DataError);
        CHECK_THROWS_AS(cnr(c, {0}, {1}), ConfigError); // too few pixels
    }
}

TEST_CASE("in_vessel_fraction distances and tolerances", "[evaluate]") {
    GridGeometry g = geom(32, 32);
    std::vector<std::uint8_t> bits(g.npixels(), 0);
    // vertical strip of true pixels, columns 10..12
    for (int i = 0; i < 32; ++i)
        for (int j = 10; j <= 12; ++j) bits[static_cast<long>(i) * 32 + j] = 1;
    VesselMask mask = mask_from_image(bits, g);

    SECTION("point on a true pixel is within at delta 0") {
        auto rep = in_vessel_fraction({at(5 * g.dy, 11 * g.dx)}, mask, {0.0});
        CHECK(rep.n_within[0] == 1);
        CHECK(rep.fraction_within[0] == 1.0);
    }
    SECTION("point 15 um outside needs a 20 um tolerance") {
        // column 12 is the last true column; 1.5 pixels right of it
        auto rep = in_vessel_fraction({at(5 * g.dy, 13.5 * g.dx)}, mask, {0.0, 20e-6});
        CHECK(rep.n_within[0] == 0);
        CHECK(rep.n_within[1] == 1);
    }
    SECTION("fractions are monotone in the tolerance") {
        Rng rng(7);
        std::vector<Localization> locs;
        for (int k = 0; k < 50; ++k)
            locs.push_back(at(rng.uniform(0, g.extent_y()), rng.uniform(0, g.extent_x())));
        auto rep = in_vessel_fraction(locs, mask, {0.0, 10e-6, 20e-6, 50e-6, 1.0});
        REQUIRE(rep.defined);
        for (size_t k = 1; k < rep.fraction_within.size(); ++k)
            REQUIRE(rep.fraction_within[k] >= rep.fraction_within[k - 1]);
        CHECK(rep.fraction_within.back() == 1.0); // delta = infinity in practice
    }
    SECTION("empty localization list is flagged undefined") {
        auto rep = in_vessel_fraction({}, mask, {0.0});
        CHECK(rep.n_total == 0);
        CHECK_FALSE(rep.defined);
        CHECK(std::isnan(rep.fraction_within[0]));
    }
}

TEST_CASE("upper bound on localizable bubbles", "[evaluate]") {
    SECTION("a mask of exactly 100 square wavelengths") {
        // 10 um pixels, wavelength 10 um -> each pixel is 1 wl^2
        GridGeometry g{10, 10, 10e-6, 10e-6, 2e-3, 10e-6};
        VesselMask m = mask_from_image(std::vector<std::uint8_t>(100, 1), g);
        CHECK(upper_bound(m, g.wavelength) == Approx(100.0));
    }
    SECTION("whole-frame mask at the acquisition geometry") {
        GridGeometry g{312, 180, 60e-6, 30e-6, 2e-3, 60e-6};
        VesselMask m = mask_from_image(std::vector<std::uint8_t>(g.npixels(), 1), g);
        CHECK(upper_bound(m, g.wavelength) == Approx(28080.0));
    }
    SECTION("counting oracle and 1/wavelength^2 scaling") {
        Rng rng(11);
        GridGeometry g = geom(16, 16);
        std::vector<std::uint8_t> bits(g.npixels(), 0);
        long n = 0;
        for (auto& b : bits)
            if (rng.uniform() < 0.3) {
                b = 1;
                ++n;
            }
        if (n == 0) {
            bits[0] = 1;
            n = 1;
        }
        VesselMask m = mask_from_image(bits, g);
        CHECK(upper_bound(m, g.wavelength) ==
              Approx(static_cast<double>(n) * g.dy * g.dx / (g.wavelength * g.wavelength)));
        CHECK(upper_bound(m, 2.0 * g.wavelength) ==
              Approx(0.25 * upper_bound(m, g.wavelength)));
    }
}

TEST_CASE("add_noise determinism and statistics", "[evaluate]") {
    FrameStack s;
    s.geom = geom(100, 100);
    s.frames = {std::vector<double>(10000, 1.0), std::vector<double>(10000, 1.0)};

    SECTION("amplitude 0 is the identity") {
        CHECK(add_noise(s, 0.0, 5).frames == s.frames);
    }
    SECTION("same seed gives identical stacks") {
        FrameStack a = add_noise(s, 0.5, 99);
        FrameStack b = add_noise(s, 0.5, 99);
        CHECK(a.frames == b.frames);
        FrameStack c = add_noise(s, 0.5, 100);
        CHECK(a.frames != c.frames);
    }
    SECTION("values are clipped at zero") {
        FrameStack n = add_noise(s, 2.0, 1);
        for (const auto& f : n.frames)
            for (double v : f) REQUIRE(v >= 0.0);
    }
    SECTION("empirical sigma within 5% at amplitude 1") {
        // E[e^2 | e > 0] = sigma^2 for centered Gaussians, so estimating from
        // the positive deviations sidesteps the clipping at zero.
        FrameStack n = add_noise(s, 1.0, 42);
        double sum2 = 0.0;
        long cnt = 0;
        for (const auto& f : n.frames)
            for (double v : f)
                if (v > 1.0) {
                    sum2 += (v - 1.0) * (v - 1.0);
                    ++cnt;
                }
        REQUIRE(cnt > 5000);
        double sigma_hat = std::sqrt(sum2 / static_cast<double>(cnt));
        CHECK(sigma_hat == Approx(1.0).epsilon(0.05));
    }
}
