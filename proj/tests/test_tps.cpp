#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tryon/tps.hpp"

using namespace tryon;

namespace {

/// Lattice pixel positions are integers when (k-1) divides (W-1) and (H-1);
/// 33x29 with k=5 keeps the control points exactly on pixels.
constexpr int kW = 33;
constexpr int kH = 29;

TpsParams random_params(std::mt19937& rng, int k = 5, double amp = 0.3) {
    TpsParams p = TpsParams::zeros(k);
    std::uniform_real_distribution<double> d(-amp, amp);
    for (auto& v : p.dx) v = d(rng);
    for (auto& v : p.dy) v = d(rng);
    return p;
}

WarpGrid uniform_grid(int w, int h, double spacing, double offset_x = 0.0,
                      double offset_y = 0.0) {
    WarpGrid g(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            g.gx[g.idx(x, y)] = offset_x + spacing * x;
            g.gy[g.idx(x, y)] = offset_y + spacing * y;
        }
    return g;
}

/// Straight transcription of the distance-consistency formula, kept
/// independent of the library implementation.
double gic_reference(const WarpGrid& g, int stride) {
    const int nx = (g.width - 1) / stride + 1;
    const int ny = (g.height - 1) / stride + 1;
    auto X = [&](int a, int b) { return g.gx[g.idx(a * stride, b * stride)]; };
    auto Y = [&](int a, int b) { return g.gy[g.idx(a * stride, b * stride)]; };
    double total = 0.0;
    for (int b = 1; b < ny - 1; ++b)
        for (int a = 1; a < nx - 1; ++a) {
            const double dr = std::sqrt(std::pow(X(a + 1, b) - X(a, b), 2) +
                                        std::pow(Y(a + 1, b) - Y(a, b), 2));
            const double dl = std::sqrt(std::pow(X(a - 1, b) - X(a, b), 2) +
                                        std::pow(Y(a - 1, b) - Y(a, b), 2));
            const double dd = std::sqrt(std::pow(X(a, b + 1) - X(a, b), 2) +
                                        std::pow(Y(a, b + 1) - Y(a, b), 2));
            const double du = std::sqrt(std::pow(X(a, b - 1) - X(a, b), 2) +
                                        std::pow(Y(a, b - 1) - Y(a, b), 2));
            total += std::abs(dr - dl) + std::abs(dd - du);
        }
    return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// tps_grid
// ---------------------------------------------------------------------------

TEST_CASE("zero displacements give the identity grid") {
    const WarpGrid g = tps_grid(TpsParams::zeros(5), kW, kH);
    for (int y = 0; y < kH; ++y)
        for (int x = 0; x < kW; ++x) {
            CHECK(g.gx[g.idx(x, y)] == Catch::Approx(x).margin(1e-9));
            CHECK(g.gy[g.idx(x, y)] == Catch::Approx(y).margin(1e-9));
        }
}

TEST_CASE("uniform displacement is a pure translation of half the extent") {
    TpsParams p = TpsParams::zeros(5);
    const double d = 0.25;
    for (auto& v : p.dx) v = d;
    const WarpGrid g = tps_grid(p, kW, kH);
    for (int y = 0; y < kH; ++y)
        for (int x = 0; x < kW; ++x) {
            CHECK(g.gx[g.idx(x, y)] ==
                  Catch::Approx(x + d * (kW - 1) / 2.0).margin(1e-9));
            CHECK(g.gy[g.idx(x, y)] == Catch::Approx(y).margin(1e-9));
        }
}

TEST_CASE("the interpolant passes through a single displaced control point") {
    TpsParams p = TpsParams::zeros(5);
    p.dx[2 * 5 + 1] = 0.2;  // row 2, col 1
    const WarpGrid g = tps_grid(p, kW, kH);
    const int px = 1 * (kW - 1) / 4;  // lattice col 1
    const int py = 2 * (kH - 1) / 4;  // lattice row 2
    CHECK(g.gx[g.idx(px, py)] == Catch::Approx(px + 0.2 * (kW - 1) / 2.0).margin(1e-9));
    CHECK(g.gy[g.idx(px, py)] == Catch::Approx(py).margin(1e-9));
}

TEST_CASE("grid interpolates every control displacement on random draws") {
    std::mt19937 rng(211);
    for (int trial = 0; trial < 20; ++trial) {
        const TpsParams p = random_params(rng);
        const WarpGrid g = tps_grid(p, kW, kH);
        for (int row = 0; row < 5; ++row)
            for (int col = 0; col < 5; ++col) {
                const int px = col * (kW - 1) / 4;
                const int py = row * (kH - 1) / 4;
                const double ex = px + p.dx[row * 5 + col] * (kW - 1) / 2.0;
                const double ey = py + p.dy[row * 5 + col] * (kH - 1) / 2.0;
                const double tol_x = 1e-9 * std::max(1.0, std::abs(ex));
                const double tol_y = 1e-9 * std::max(1.0, std::abs(ey));
                CHECK(std::abs(g.gx[g.idx(px, py)] - ex) <= tol_x);
                CHECK(std::abs(g.gy[g.idx(px, py)] - ey) <= tol_y);
            }
    }
}

TEST_CASE("tps_grid validates its parameters") {
    TpsParams bad = TpsParams::zeros(5);
    bad.dx[0] = std::nan("");
    CHECK_THROWS_AS(tps_grid(bad, 8, 8), RangeError);

    TpsParams oob = TpsParams::zeros(5);
    oob.dx[0] = 5.0;  // beyond the default clamp of 2
    CHECK_THROWS_AS(tps_grid(oob, 8, 8), RangeError);

    TpsParams short_arrays;
    short_arrays.grid_k = 5;
    CHECK_THROWS_AS(tps_grid(short_arrays, 8, 8), RangeError);
}

// ---------------------------------------------------------------------------
// warp_image
// ---------------------------------------------------------------------------

TEST_CASE("identity grid warps to a bit-identical image") {
    std::mt19937 rng(223);
    ImageBuffer img(31, 23, 3);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xFF);
    const WarpGrid g = tps_grid(TpsParams::zeros(5), 31, 23);
    CHECK(warp_image(img, g, 0).data == img.data);
}

TEST_CASE("integer translation grid shifts columns and fills the gap") {
    ImageBuffer img(8, 3, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 8; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 * x + y);

    WarpGrid g(8, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 8; ++x) {
            g.gx[g.idx(x, y)] = x - 2.0;  // sample two columns to the left
            g.gy[g.idx(x, y)] = y;
        }
    const ImageBuffer out = warp_image(img, g, 7);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 8; ++x) {
            if (x < 2)
                CHECK(out.at(x, y) == 7);
            else
                CHECK(out.at(x, y) == img.at(x - 2, y));
        }
}

TEST_CASE("half-pixel translation blends neighbors") {
    FloatImage two(2, 1, 1);
    two.at(0, 0) = 0.0;
    two.at(1, 0) = 1.0;
    WarpGrid g(2, 1);
    g.gx[0] = 0.5;
    g.gy[0] = 0.0;
    g.gx[1] = 1.5;  // half outside: blends with fill
    g.gy[1] = 0.0;
    const FloatImage out = warp_image(two, g, 0.0);
    CHECK(out.at(0, 0) == Catch::Approx(0.5));  // (0 + 255)/2 in byte terms = 127.5
    CHECK(out.at(1, 0) == Catch::Approx(0.5));  // blend of 1.0 and the 0 fill

    ImageBuffer bytes(2, 1, 1);
    bytes.at(0, 0) = 0;
    bytes.at(1, 0) = 255;
    CHECK(static_cast<int>(warp_image(bytes, g, 0).at(0, 0)) == 128);  // round(127.5)
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

TEST_CASE("l1_loss arithmetic") {
    FloatImage a(4, 2, 1, 0.0), b(4, 2, 1, 0.0);
    CHECK(l1_loss(a, b) == 0.0);

    FloatImage ones(4, 2, 1, 1.0);
    CHECK(l1_loss(ones, a) == 1.0);

    FloatImage half(4, 2, 1, 0.0);
    for (int x = 0; x < 4; ++x) half.at(x, 0) = 0.5;  // half the pixels differ by 0.5
    CHECK(l1_loss(half, a) == Catch::Approx(0.25));

    ImageBuffer ba(2, 2, 1, 255), bb(2, 2, 1, 0);
    CHECK(l1_loss(ba, bb) == Catch::Approx(1.0));
    CHECK(l1_loss(ba, ba) == 0.0);

    FloatImage mism(3, 2, 1);
    CHECK_THROWS_AS(l1_loss(a, mism), DimensionError);
}

TEST_CASE("gic_loss vanishes on uniform grids of any spacing") {
    CHECK(gic_loss(uniform_grid(17, 13, 1.0), 4) == 0.0);
    CHECK(gic_loss(uniform_grid(17, 13, 2.0), 4) == 0.0);
    // dyadic spacing keeps the grid values exact, so the zero is exact too
    CHECK(gic_loss(uniform_grid(17, 13, 0.375, 5.0, -3.0), 4) == 0.0);
}

TEST_CASE("gic_loss is invariant under grid translation") {
    std::mt19937 rng(227);
    WarpGrid g = uniform_grid(17, 13, 1.0);
    std::uniform_real_distribution<double> d(-0.4, 0.4);
    for (auto& v : g.gx) v += d(rng);
    for (auto& v : g.gy) v += d(rng);

    WarpGrid t = g;
    for (auto& v : t.gx) v += 123.25;
    for (auto& v : t.gy) v -= 55.5;
    CHECK(gic_loss(g, 4) == Catch::Approx(gic_loss(t, 4)).epsilon(1e-12));
}

TEST_CASE("one displaced interior point matches the brute-force formula") {
    WarpGrid g = uniform_grid(17, 13, 1.0);
    g.gx[g.idx(8, 4)] += 0.6;  // lattice point (2,1) at stride 4
    const double loss = gic_loss(g, 4);
    CHECK(loss > 0.0);
    CHECK(loss == Catch::Approx(gic_reference(g, 4)).margin(1e-12));
}

TEST_CASE("gic_loss matches the reference on random perturbed grids") {
    std::mt19937 rng(229);
    std::uniform_real_distribution<double> d(-0.45, 0.45);
    for (int trial = 0; trial < 50; ++trial) {
        WarpGrid g = uniform_grid(21, 17, 1.0);
        for (auto& v : g.gx) v += d(rng);
        for (auto& v : g.gy) v += d(rng);
        const int stride = 1 + static_cast<int>(rng() % 5);
        if ((20 / stride + 1) < 3 || (16 / stride + 1) < 3) continue;
        CHECK(gic_loss(g, stride) ==
              Catch::Approx(gic_reference(g, stride)).margin(1e-9));
    }
}

TEST_CASE("gic_loss requires a 3x3 lattice") {
    CHECK_THROWS_AS(gic_loss(uniform_grid(4, 4, 1.0), 2), DimensionError);
    CHECK_THROWS_AS(gic_loss(uniform_grid(9, 9, 1.0), 0), RangeError);
}

TEST_CASE("printed regularizer differs from the distance form on the identity") {
    const WarpGrid id = uniform_grid(17, 13, 1.0);
    CHECK(gic_loss(id, 4) == 0.0);
    CHECK(gic_loss_printed(id, 4) > 0.0);  // first differences never vanish
}

// ---------------------------------------------------------------------------
// gmm_objective
// ---------------------------------------------------------------------------

TEST_CASE("objective is zero for the identity fit") {
    std::mt19937 rng(233);
    FloatImage img(21, 17, 1);
    for (auto& v : img.data) v = (rng() & 0xFF) / 255.0;
    GmmConfig cfg;
    CHECK(gmm_objective(TpsParams::zeros(5), img, img, cfg) ==
          Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("lambda_reg = 0 isolates the L1 term") {
    std::mt19937 rng(239);
    FloatImage a(21, 17, 1), b(21, 17, 1);
    for (auto& v : a.data) v = (rng() & 0xFF) / 255.0;
    for (auto& v : b.data) v = (rng() & 0xFF) / 255.0;

    GmmConfig cfg;
    cfg.lambda_reg = 0.0;
    cfg.lambda_l1 = 2.0;
    const TpsParams p = random_params(rng, 5, 0.1);
    const WarpGrid g = tps_grid(p, 21, 17);
    const double expected = 2.0 * l1_loss(warp_image(a, g, cfg.warp_fill), b);
    CHECK(gmm_objective(p, a, b, cfg) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective equals its term-by-term recomputation") {
    std::mt19937 rng(241);
    FloatImage a(21, 17, 3), b(21, 17, 3);
    for (auto& v : a.data) v = (rng() & 0xFF) / 255.0;
    for (auto& v : b.data) v = (rng() & 0xFF) / 255.0;

    GmmConfig cfg;
    cfg.lambda_l1 = 0.8;
    cfg.lambda_reg = 0.6;
    for (int trial = 0; trial < 5; ++trial) {
        const TpsParams p = random_params(rng, 5, 0.15);
        const WarpGrid g = tps_grid(p, 21, 17);
        const int stride = cfg.stride_for(21, 17, p.grid_k);
        const double expected = cfg.lambda_l1 * l1_loss(warp_image(a, g, cfg.warp_fill), b) +
                                cfg.lambda_reg * gic_loss(g, stride);
        CHECK(gmm_objective(p, a, b, cfg) == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("printed form is selectable through the config") {
    std::mt19937 rng(251);
    FloatImage a(21, 17, 1), b(21, 17, 1);
    for (auto& v : a.data) v = (rng() & 0xFF) / 255.0;
    for (auto& v : b.data) v = (rng() & 0xFF) / 255.0;

    GmmConfig printed;
    printed.gic_form = GicForm::printed;
    printed.lambda_l1 = 0.0;
    const TpsParams zero = TpsParams::zeros(5);
    CHECK(gmm_objective(zero, a, b, printed) > 0.0);

    GmmConfig distance;
    distance.lambda_l1 = 0.0;
    CHECK(gmm_objective(zero, a, b, distance) == Catch::Approx(0.0).margin(1e-9));
}

// ---------------------------------------------------------------------------
// correlate_features
// ---------------------------------------------------------------------------

TEST_CASE("self correlation of unit vectors is 1 at the matching position") {
    FeatureGrid g(2, 2, 3);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) g.at(y, x, (y * 2 + x) % 3) = 1.0;
    const FeatureGrid corr = correlate_features(g, g);
    REQUIRE(corr.d == 4);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            CHECK(corr.at(y, x, y * 2 + x) == Catch::Approx(1.0));
}

TEST_CASE("orthogonal feature vectors correlate to zero") {
    FeatureGrid a(1, 2, 2), b(1, 2, 2);
    a.at(0, 0, 0) = 3.0;  // e_x scaled
    a.at(0, 1, 0) = 1.0;
    b.at(0, 0, 1) = 5.0;  // e_y scaled
    b.at(0, 1, 1) = 1.0;
    const FeatureGrid corr = correlate_features(a, b);
    CHECK(corr.at(0, 0, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(corr.at(0, 1, 1) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("two-position correlation matches hand arithmetic") {
    // a0 = (1,0), a1 = (1,1)/sqrt2 after normalization; b0 = (0,2), b1 = (2,0)
    FeatureGrid a(1, 2, 2), b(1, 2, 2);
    a.at(0, 0, 0) = 1.0;
    a.at(0, 1, 0) = 1.0;
    a.at(0, 1, 1) = 1.0;
    b.at(0, 0, 1) = 2.0;
    b.at(0, 1, 0) = 2.0;
    const FeatureGrid corr = correlate_features(a, b);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(corr.at(0, 0, 0) == Catch::Approx(0.0).margin(1e-15));  // (1,0)·(0,1)
    CHECK(corr.at(0, 0, 1) == Catch::Approx(1.0));                // (1,0)·(1,0)
    CHECK(corr.at(0, 1, 0) == Catch::Approx(s));                  // (s,s)·(0,1)
    CHECK(corr.at(0, 1, 1) == Catch::Approx(s));                  // (s,s)·(1,0)
}

TEST_CASE("zero feature vectors stay zero instead of dividing by zero") {
    FeatureGrid a(1, 2, 2), b(1, 2, 2);
    b.at(0, 0, 0) = 1.0;
    b.at(0, 1, 0) = 1.0;
    const FeatureGrid corr = correlate_features(a, b);  // a is all-zero
    CHECK(corr.at(0, 0, 0) == 0.0);
    CHECK(corr.at(0, 0, 1) == 0.0);
}

TEST_CASE("correlate_features validates shapes") {
    FeatureGrid a(2, 2, 3), b(2, 3, 3);
    CHECK_THROWS_AS(correlate_features(a, b), DimensionError);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

TEST_CASE("tps params text round trip is exact") {
    std::mt19937 rng(257);
    for (int trial = 0; trial < 10; ++trial) {
        const TpsParams p = random_params(rng, 4, 0.7);
        const TpsParams back = tps_params_from_text(to_text(p));
        CHECK(back.grid_k == p.grid_k);
        CHECK(back.dx == p.dx);
        CHECK(back.dy == p.dy);
    }
}

TEST_CASE("tps params text parser rejects malformed input") {
    CHECK_THROWS_AS(tps_params_from_text("grid_k 5\ndx 1 2"), SchemaError);
    CHECK_THROWS_AS(tps_params_from_text("k 5"), SchemaError);
    CHECK_THROWS_AS(tps_params_from_text(""), SchemaError);
}
