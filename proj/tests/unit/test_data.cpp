#include "doctest.h"

#include "times2d/data.hpp"
#include "times2d/errors.hpp"
#include "times2d/rng.hpp"
#include "../support/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

using namespace times2d;

#ifndef TIMES2D_SOURCE_DIR
#define TIMES2D_SOURCE_DIR "."
#endif

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

RawSeries drifting_series(std::size_t T, std::size_t N) {
    RawSeries raw;
    raw.rows = T;
    raw.cols = N;
    for (std::size_t c = 0; c < N; ++c) raw.column_names.push_back("v" + std::to_string(c));
    raw.values.resize(T * N);
    Rng rng(71);
    for (std::size_t r = 0; r < T; ++r)
        for (std::size_t c = 0; c < N; ++c)
            raw.values[r * N + c] = 0.05 * static_cast<double>(r) + rng.uniform(-0.5, 0.5);
    return raw;
}

} // namespace

TEST_CASE("load_csv: minimal date,value file") {
    auto path = write_temp("t2d_min.csv",
                           "date,value\n2020-01-01,1.5\n2020-01-02,2\n2020-01-03,3\n"
                           "2020-01-04,4\n2020-01-05,5\n2020-01-06,6\n2020-01-07,7\n"
                           "2020-01-08,8\n2020-01-09,9\n2020-01-10,10\n");
    auto raw = load_csv(path);
    CHECK(raw.rows == 10);
    CHECK(raw.cols == 1);
    CHECK(raw.column_names[0] == "value");
    CHECK(raw.timestamps.size() == 10);
    CHECK(raw.at(0, 0) == 1.5);
    CHECK(raw.at(9, 0) == 10.0);
}

TEST_CASE("load_csv: headerless numeric file") {
    auto path = write_temp("t2d_nohdr.csv", "1,2\n3,4\n5,6\n");
    auto raw = load_csv(path);
    CHECK(raw.rows == 3);
    CHECK(raw.cols == 2);
    CHECK(raw.column_names[0] == "var0");
    CHECK(raw.timestamps.empty());
}

TEST_CASE("load_csv: error cases name the line") {
    auto blank = write_temp("t2d_blank.csv", "a,b\n1,2\n3,\n5,6\n");
    CHECK_THROWS_WITH_AS(load_csv(blank), doctest::Contains("line 3"), DataError);

    LoadOptions fill;
    fill.fill_forward = true;
    auto raw = load_csv(blank, fill);
    CHECK(raw.at(1, 1) == 2.0); // forward-filled from row above

    auto ragged = write_temp("t2d_ragged.csv", "a,b\n1,2\n1,2,3\n");
    CHECK_THROWS_WITH_AS(load_csv(ragged), doctest::Contains("line 3"), DataError);

    auto garbage = write_temp("t2d_garbage.csv", "a,b\n1,2\n1,zap\n");
    CHECK_THROWS_WITH_AS(load_csv(garbage), doctest::Contains("line 3"), DataError);

    auto empty = write_temp("t2d_empty.csv", "");
    CHECK_THROWS_AS(load_csv(empty), DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv"), DataError);
}

TEST_CASE("load_csv: ETTh1-shaped fixture loads with N=7 and exact cells") {
    auto raw = load_csv(std::string(TIMES2D_SOURCE_DIR) + "/data/fixtures/etth1_sample.csv");
    CHECK(raw.rows == 60);
    CHECK(raw.cols == 7);
    CHECK(raw.column_names[0] == "HUFL");
    CHECK(raw.column_names[6] == "OT");
    // cells carry ((r*7 + c*13) % 100) / 8, exactly representable
    for (std::size_t r : {0u, 17u, 59u})
        for (std::size_t c : {0u, 3u, 6u})
            CHECK(raw.at(r, c) == static_cast<double>((r * 7 + c * 13) % 100) / 8.0);
    CHECK(raw.timestamps[0] == "2016-07-01 00:00:00");
}

TEST_CASE("split_normalize: train stats, inverse, and drift behavior") {
    auto raw = drifting_series(200, 3);
    auto splits = split_normalize(raw, {0.7, 0.1, 0.2});
    CHECK(splits.train.rows == 140);
    CHECK(splits.val.rows == 20);
    CHECK(splits.test.rows == 40);

    for (std::size_t c = 0; c < 3; ++c) {
        double mu = 0.0, var = 0.0;
        for (std::size_t r = 0; r < splits.train.rows; ++r) mu += splits.train.at(r, c);
        mu /= static_cast<double>(splits.train.rows);
        for (std::size_t r = 0; r < splits.train.rows; ++r) {
            const double d = splits.train.at(r, c) - mu;
            var += d * d;
        }
        var /= static_cast<double>(splits.train.rows);
        CHECK(std::abs(mu) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-9);

        // under train-only stats a drifting test split cannot be centered
        double test_mu = 0.0;
        for (std::size_t r = 0; r < splits.test.rows; ++r) test_mu += splits.test.at(r, c);
        test_mu /= static_cast<double>(splits.test.rows);
        CHECK(std::abs(test_mu) > 0.5);
    }

    // denormalize(normalize(x)) == x
    for (std::size_t r : {0u, 57u, 139u})
        for (std::size_t c = 0; c < 3; ++c) {
            const double roundtrip =
                denormalize_value(splits.stats, c, splits.train.at(r, c));
            CHECK(roundtrip == doctest::Approx(raw.at(r, c)).epsilon(1e-12));
        }
}

TEST_CASE("split_normalize: no leakage from val/test into stats") {
    auto raw = drifting_series(200, 2);
    auto base = split_normalize(raw, {0.7, 0.1, 0.2});
    auto perturbed = raw;
    for (std::size_t r = 150; r < 200; ++r)
        for (std::size_t c = 0; c < 2; ++c) perturbed.values[r * 2 + c] += 1000.0;
    auto after = split_normalize(perturbed, {0.7, 0.1, 0.2});
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(base.stats.mean[c] == after.stats.mean[c]);
        CHECK(base.stats.stddev[c] == after.stats.stddev[c]);
    }
}

TEST_CASE("split_normalize: constant column floors std with a warning") {
    RawSeries raw;
    raw.rows = 50;
    raw.cols = 1;
    raw.column_names = {"flat"};
    raw.values.assign(50, 7.0);
    auto splits = split_normalize(raw, {0.7, 0.1, 0.2});
    CHECK(splits.stats.stddev[0] == 1e-8);
}

TEST_CASE("split_normalize: parameter errors") {
    auto raw = drifting_series(30, 1);
    CHECK_THROWS_AS(split_normalize(raw, {0.5, 0.5}), ConfigError);      // wrong arity
    CHECK_THROWS_AS(split_normalize(raw, {0.6, 0.2, 0.1}), ConfigError); // sum != 1
    RawSeries tiny = raw;
    tiny.rows = 3;
    tiny.values.resize(3);
    CHECK_THROWS_AS(split_normalize(tiny, {0.7, 0.1, 0.2}), ConfigError); // splits collapse
}

TEST_CASE("make_windows: counting, disjointness, slice equality") {
    auto ws = make_windows(10, 3, 2, 1);
    CHECK(ws.size() == 6);

    auto disjoint = make_windows(20, 3, 2, 5);
    std::set<std::size_t> used;
    for (std::size_t s : disjoint.starts)
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(used.count(s + i) == 0);
            used.insert(s + i);
        }

    CHECK_THROWS_AS(make_windows(4, 3, 2, 1), ConfigError);

    // every emitted (input, target) pair equals a direct slice of the source
    SplitSeries series;
    series.rows = 23;
    series.cols = 2;
    Rng rng(72);
    series.values = oracles::random_vector(rng, 46);
    auto all = make_windows(series.rows, 4, 3, 2);
    std::vector<std::size_t> which(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) which[i] = i;
    auto [x, y] = gather_batch<double>(series, all, which);
    for (std::size_t b = 0; b < all.size(); ++b) {
        const std::size_t start = all.starts[b];
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(x.at({b, t, c}) == series.at(start + t, c));
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(y.at({b, t, c}) == series.at(start + 4 + t, c));
    }
}

TEST_CASE("batch_schedule: remainder batch, determinism, exact coverage") {
    auto batches = batch_schedule(10, 4, false, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);

    auto a = batch_schedule(50, 8, true, 1234);
    auto b = batch_schedule(50, 8, true, 1234);
    CHECK(a == b);
    auto c = batch_schedule(50, 8, true, 999);
    CHECK(a != c);

    // union of emitted windows equals the window set exactly once
    std::multiset<std::size_t> seen;
    for (const auto& batch : a)
        for (std::size_t idx : batch) seen.insert(idx);
    CHECK(seen.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(seen.count(i) == 1);
}
