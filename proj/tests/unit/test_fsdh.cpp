#include "doctest.h"

#include "times2d/fsdh.hpp"
#include "times2d/model.hpp"
#include "times2d/ops.hpp"
#include "../support/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace times2d;

#ifndef TIMES2D_SOURCE_DIR
#define TIMES2D_SOURCE_DIR "."
#endif

namespace {

Tensor<double> series_tensor(const std::vector<double>& s) {
    return Tensor<double>::from_data({1, s.size(), 1}, s);
}

/// Dyadic lattice values (multiples of 1/8): the exactness identities below
/// hold bitwise in floating point only when every intermediate is exact.
std::vector<double> lattice_vector(times2d::Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(static_cast<int>(rng.index(1024)) - 512) / 8.0;
    return v;
}

ModelConfig fsdh_config(std::size_t S, std::size_t P, std::size_t N) {
    ModelConfig cfg;
    cfg.seq_len = S;
    cfg.pred_len = P;
    cfg.n_vars = N;
    cfg.top_k = 1;
    cfg.d_model = 4;
    cfg.d_ff = 8;
    cfg.heads = 2;
    cfg.conv_channels = 2;
    cfg.heatmap_channels = 2;
    cfg.dropout = 0.0;
    cfg.seed = 9;
    return cfg;
}

} // namespace

TEST_CASE("first_difference: constant, ramp, telescoping reconstruction") {
    auto flat = first_difference(Tensor<double>::full({1, 6, 1}, 4.2));
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat.data()[i] == 0.0);

    auto ramp = first_difference(series_tensor({0, 1, 2, 3}));
    const std::vector<double> expect = {0, 1, 1, 1};
    for (std::size_t i = 0; i < 4; ++i) CHECK(ramp.data()[i] == expect[i]);

    Rng rng(91);
    auto x = oracles::random_vector(rng, 20);
    auto d = first_difference(series_tensor(x));
    // cumulative sum starting from x[0] reconstructs x exactly
    double acc = x[0];
    CHECK(d.data()[0] == 0.0);
    for (std::size_t t = 1; t < 20; ++t) {
        acc += d.data()[t];
        CHECK(acc == x[t]);
    }

    CHECK_THROWS_AS(first_difference(Tensor<double>::zeros({1, 1, 1})), DataError);
}

TEST_CASE("second_difference: linear, parabola, composition identity") {
    auto lin = second_difference(first_difference(series_tensor({1, 3, 5, 7, 9})));
    // the two pad positions aside, a linear ramp has zero curvature
    for (std::size_t t = 2; t < 5; ++t) CHECK(lin.data()[t] == 0.0);

    auto para = second_difference(first_difference(series_tensor({0, 1, 4, 9, 16})));
    for (std::size_t t = 2; t < 5; ++t) CHECK(para.data()[t] == 2.0);

    Rng rng(92);
    auto x = series_tensor(oracles::random_vector(rng, 15));
    auto once = second_difference(first_difference(x));
    auto twice = first_difference(first_difference(x));
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once.data()[i] == twice.data()[i]);
}

TEST_CASE("difference properties: shift invariance and exact linearity") {
    Rng rng(93);
    auto xv = lattice_vector(rng, 12);
    auto yv = lattice_vector(rng, 12);

    auto shifted = xv;
    for (double& v : shifted) v += 17.25;
    auto d0 = first_difference(series_tensor(xv));
    auto d1 = first_difference(series_tensor(shifted));
    for (std::size_t i = 0; i < d0.size(); ++i) CHECK(d0.data()[i] == d1.data()[i]);

    // first_difference(a*x + b*y) == a*D1(x) + b*D1(y), exactly
    const double a = 2.5, b = -1.25;
    std::vector<double> combo(12);
    for (std::size_t i = 0; i < 12; ++i) combo[i] = a * xv[i] + b * yv[i];
    auto dc = first_difference(series_tensor(combo));
    auto dx = first_difference(series_tensor(xv));
    auto dy = first_difference(series_tensor(yv));
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(dc.data()[i] == a * dx.data()[i] + b * dy.data()[i]);
}

TEST_CASE("build_heatmap: stacking, slicing back, padding invariants") {
    auto zero = build_heatmap(Tensor<double>::zeros({2, 5, 3}), Tensor<double>::zeros({2, 5, 3}));
    CHECK(zero.shape() == Shape{2, 3, 2, 5});
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero.data()[i] == 0.0);

    Rng rng(94);
    auto x = series_tensor(oracles::random_vector(rng, 10));
    auto d1 = first_difference(x);
    auto d2 = second_difference(d1);
    auto heat = build_heatmap(d1, d2);
    REQUIRE(heat.shape() == Shape{1, 1, 2, 10});
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(heat.at({0, 0, 0, t}) == d1.at({0, t, 0}));
        CHECK(heat.at({0, 0, 1, t}) == d2.at({0, t, 0}));
    }
    // front-pad invariants
    CHECK(heat.at({0, 0, 0, 0}) == 0.0);
    CHECK(heat.at({0, 0, 1, 0}) == 0.0);

    CHECK_THROWS_AS(build_heatmap(Tensor<double>::zeros({1, 4, 1}),
                                  Tensor<double>::zeros({1, 5, 1})),
                    ShapeError);
}

TEST_CASE("fsdh_forward: zero input with zero bias gives zero output") {
    auto cfg = fsdh_config(12, 3, 2);
    ParamStore<double> store(cfg.seed);
    FsdhBlock<double> fsdh(cfg, store);
    auto out = fsdh.forward(Tensor<double>::zeros({2, 12, 2}));
    CHECK(out.shape() == Shape{2, 3, 2});
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("fsdh_forward: shape contract over randomized shapes") {
    Rng rng(95);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t S = 4 + rng.index(30), P = 1 + rng.index(8), N = 1 + rng.index(3);
        const std::size_t B = 1 + rng.index(3);
        auto cfg = fsdh_config(S, P, N);
        ParamStore<double> store(cfg.seed);
        FsdhBlock<double> fsdh(cfg, store);
        auto x = Tensor<double>::from_data({B, S, N}, oracles::random_vector(rng, B * S * N));
        CHECK(fsdh.forward(x).shape() == Shape{B, P, N});
    }
}

TEST_CASE("fsdh_forward: translation covariance of the pre-head features") {
    // adding a constant leaves the heatmap, hence the whole output, unchanged
    auto cfg = fsdh_config(14, 4, 1);
    ParamStore<double> store(cfg.seed);
    FsdhBlock<double> fsdh(cfg, store);
    Rng rng(96);
    auto base = lattice_vector(rng, 14);
    auto shifted = base;
    for (double& v : shifted) v += 123.5;
    auto out1 = fsdh.forward(series_tensor(base));
    auto out2 = fsdh.forward(series_tensor(shifted));
    for (std::size_t i = 0; i < out1.size(); ++i) CHECK(out1.data()[i] == out2.data()[i]);
}

TEST_CASE("fsdh_forward: all parameters pass the finite-difference oracle (B=1,S=12,N=1)") {
    auto cfg = fsdh_config(12, 3, 1);
    ParamStore<double> store(cfg.seed);
    FsdhBlock<double> fsdh(cfg, store);
    Rng rng(97);
    auto x = series_tensor(oracles::random_vector(rng, 12));
    auto target = Tensor<double>::from_data({1, 3, 1}, oracles::random_vector(rng, 3));
    auto f = std::function<Tensor<double>(const Tensor<double>&)>([&](const Tensor<double>&) {
        auto d = sub(fsdh.forward(x), target);
        return mean(mul(d, d));
    });
    for (auto& [name, param] : store.entries()) {
        const double err = finite_diff_check<double>(f, param, 1e-5);
        INFO("param = " << name);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("export_heatmap: zero heatmap as CSV and PGM") {
    auto zero = Tensor<double>::zeros({1, 1, 2, 4});
    export_heatmap(zero, "/tmp/t2d_zero_heat.csv", HeatmapFormat::Csv);
    auto parsed = parse_heatmap_csv("/tmp/t2d_zero_heat.csv");
    REQUIRE(parsed.shape() == Shape{1, 1, 2, 4});
    for (std::size_t i = 0; i < parsed.size(); ++i) CHECK(parsed.data()[i] == 0.0);

    export_heatmap(zero, "/tmp/t2d_zero_heat.pgm", HeatmapFormat::Pgm);
    std::ifstream pgm("/tmp/t2d_zero_heat_b0_v0.pgm");
    REQUIRE(pgm.good());
    std::string magic;
    pgm >> magic;
    CHECK(magic == "P2");
    std::size_t w, h;
    int maxval;
    pgm >> w >> h >> maxval;
    CHECK(w == 4);
    CHECK(h == 2);
    CHECK(maxval == 255);
    int px, count = 0;
    while (pgm >> px) {
        CHECK(px == 0); // uniform gray for a constant field
        ++count;
    }
    CHECK(count == 8);
}

TEST_CASE("export_heatmap: CSV roundtrip recovers values exactly") {
    Rng rng(98);
    auto x = Tensor<double>::from_data({2, 2, 10, 1}, oracles::random_vector(rng, 40));
    auto heat = build_heatmap(first_difference(reshape(x, {2, 10, 2})),
                              second_difference(first_difference(reshape(x, {2, 10, 2}))));
    export_heatmap(heat, "/tmp/t2d_rt_heat.csv", HeatmapFormat::Csv);
    auto parsed = parse_heatmap_csv("/tmp/t2d_rt_heat.csv");
    REQUIRE(parsed.shape() == heat.shape());
    for (std::size_t i = 0; i < heat.size(); ++i) CHECK(parsed.data()[i] == heat.data()[i]);

    CHECK_THROWS_AS(export_heatmap(heat, "/nonexistent_dir/x.csv", HeatmapFormat::Csv), DataError);
}

TEST_CASE("export_heatmap: length-96 seeded signal matches the golden fixture") {
    // sin(2*pi*t/24) sampled at S=96, exported by this operation at the
    // first verified build and committed as a regression fixture.
    std::vector<double> sig(96);
    for (std::size_t t = 0; t < 96; ++t)
        sig[t] = std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(t) / 24.0);
    auto x = series_tensor(sig);
    auto d1 = first_difference(x);
    auto heat = build_heatmap(d1, second_difference(d1));

    // sign bands alternate with the underlying tone
    int sign_changes = 0;
    for (std::size_t t = 2; t < 96; ++t)
        if ((heat.at({0, 0, 0, t}) > 0) != (heat.at({0, 0, 0, t - 1}) > 0)) ++sign_changes;
    CHECK(sign_changes >= 6);

    const std::string golden = std::string(TIMES2D_SOURCE_DIR) + "/tests/data/heatmap_sine96.csv";
    std::ifstream exists(golden);
    if (!exists.good()) {
        // first verified build: write the fixture (committed to the repo)
        export_heatmap(heat, golden, HeatmapFormat::Csv);
    }
    auto expected = parse_heatmap_csv(golden);
    REQUIRE(expected.shape() == heat.shape());
    for (std::size_t i = 0; i < heat.size(); ++i) CHECK(heat.data()[i] == expected.data()[i]);
}
