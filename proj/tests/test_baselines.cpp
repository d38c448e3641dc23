#include <doctest.h>

#include <cmath>
#include <random>

#include "driftmap/baselines.hpp"
#include "driftmap/errors.hpp"
#include "driftmap/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace driftmap;

TEST_CASE("static k-means separates nine blobs") {
    const auto blobs = testsupport::make_blobs(9, 40, 16, 0.2, 10.0, 21);
    const auto view = static_kmeans(blobs.points, 9, 3);
    CHECK(oracle::adjusted_rand(view.assignments, blobs.labels) == 1.0);
    const auto one = static_kmeans(blobs.points, 1, 3);
    for (auto a : one.assignments) CHECK(a == 0);
    CHECK_THROWS_AS(static_kmeans(Matrix::from_rows({{1}, {2}}), 3, 0), InvalidArgumentError);
}

TEST_CASE("mixture of N(0,1) and N(10,1)") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix pts(1000, 1);
    for (std::size_t i = 0; i < 1000; ++i) pts(i, 0) = g(rng) + (i < 500 ? 0.0 : 10.0);
    GmmConfig cfg;
    cfg.k = 2;
    cfg.seed = 1;
    const auto res = gaussian_mixture(pts, cfg);
    const double lo = std::min(res.means(0, 0), res.means(1, 0));
    const double hi = std::max(res.means(0, 0), res.means(1, 0));
    CHECK(std::abs(lo) < 0.2);
    CHECK(std::abs(hi - 10.0) < 0.2);
    for (std::size_t i = 0; i < 1000; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < 2; ++j) s += res.responsibilities(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single point mixture sits on the variance floor") {
    GmmConfig cfg;
    cfg.k = 1;
    cfg.reg = 1e-6;
    const auto res = gaussian_mixture(Matrix::from_rows({{3, -1}}), cfg);
    CHECK(res.means.row_vector(0) == Vector{3, -1});
    CHECK(res.variances(0, 0) == 1e-6);
    CHECK(res.variances(0, 1) == 1e-6);
    CHECK_THROWS_AS(gaussian_mixture(Matrix::from_rows({{3, -1}}), GmmConfig{2}), InvalidArgumentError);
    cfg.reg = 0;
    CHECK_THROWS_AS(gaussian_mixture(Matrix::from_rows({{3, -1}}), cfg), InvalidArgumentError);
}

TEST_CASE("EM log-likelihood never decreases") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const Matrix pts = testsupport::random_matrix(60 + rng() % 100, 1 + rng() % 5, seed + 77);
        GmmConfig cfg;
        cfg.k = 1 + rng() % 5;
        cfg.seed = seed;
        cfg.tolerance = 0.0;
        cfg.max_iterations = 60;
        const auto res = gaussian_mixture(pts, cfg);
        for (std::size_t i = 1; i < res.log_likelihood_trace.size(); ++i) {
            const double prev = res.log_likelihood_trace[i - 1];
            CHECK(res.log_likelihood_trace[i] >= prev - 1e-9 * std::abs(prev));
        }
    }
}

TEST_CASE("mean shift finds two modes with bandwidth 2") {
    const auto blobs = testsupport::make_blobs(2, 60, 2, 0.3, 10.0, 31);
    MeanShiftConfig cfg;
    cfg.bandwidth = 2.0;
    const auto res = mean_shift(blobs.points, cfg);
    REQUIRE(res.modes.rows() == 2);
    CHECK(oracle::adjusted_rand(res.view.assignments, blobs.labels) == 1.0);
    for (std::size_t m = 0; m < 2; ++m) {
        double best = 1e300;
        for (std::size_t b = 0; b < 2; ++b) {
            const double d = std::hypot(res.modes(m, 0) - blobs.means(b, 0), res.modes(m, 1) - blobs.means(b, 1));
            best = std::min(best, d);
        }
        CHECK(best < 0.3);
    }
}

TEST_CASE("mean shift degenerate cases") {
    const auto blobs = testsupport::make_blobs(2, 30, 2, 0.3, 10.0, 32);
    MeanShiftConfig wide;
    wide.bandwidth = 100.0;
    const auto res = mean_shift(blobs.points, wide);
    CHECK(res.modes.rows() == 1);
    const auto single = mean_shift(Matrix::from_rows({{4, 2}}), MeanShiftConfig{1.0});
    CHECK(single.modes == Matrix::from_rows({{4, 2}}));
    CHECK_THROWS_AS(mean_shift(blobs.points, MeanShiftConfig{0.0}), InvalidArgumentError);
    CHECK_THROWS_AS(mean_shift(blobs.points, MeanShiftConfig{-1.0}), InvalidArgumentError);
}

TEST_CASE("mode count does not grow with bandwidth") {
    const auto blobs = testsupport::make_blobs(4, 25, 2, 0.6, 6.0, 33);
    std::size_t prev = blobs.points.rows() + 1;
    for (double h : {0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 9.0, 15.0, 30.0}) {
        const auto res = mean_shift(blobs.points, MeanShiftConfig{h});
        CHECK(res.modes.rows() <= prev);
        prev = res.modes.rows();
    }
    CHECK(prev == 1);
}

TEST_CASE("method names") {
    CHECK(parse_method("kmeans") == BaselineMethod::kmeans);
    CHECK(parse_method("gmm") == BaselineMethod::gmm);
    CHECK(parse_method("meanshift") == BaselineMethod::meanshift);
    CHECK(method_name(BaselineMethod::gmm) == "gmm");
    CHECK_THROWS_AS(parse_method("birch"), InvalidArgumentError);
}

TEST_CASE("comparison over nine blobs") {
    const auto blobs = testsupport::make_blobs(9, 30, 16, 0.3, 10.0, 34);
    std::vector<std::string> labels;
    for (auto l : blobs.labels) labels.push_back("C" + std::to_string(l));
    CompareOptions opts;
    opts.k = 9;
    opts.meanshift.bandwidth = 3.0;
    opts.coverage_labels = {"C2", "C7", "absent"};
    const ExternalClustering engine{"engine", blobs.labels, 9};
    const auto rep = compare_report(blobs.points, &labels, engine, opts);
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.labels_available);
    CHECK(rep.rows[0].method == "engine");
    CHECK(rep.rows[0].clusters == 9);
    for (const auto& row : rep.rows) {
        CHECK(!row.error);
        REQUIRE(row.coverage.size() == 3);
        CHECK(row.coverage[0]);
        CHECK(!row.coverage[2]);
    }
    CHECK(rep.rows[0].coverage[1]->fraction == 1.0);
    const auto again = compare_report(blobs.points, &labels, engine, opts);
    for (std::size_t r = 0; r < rep.rows.size(); ++r) {
        CHECK(rep.rows[r].dbi == again.rows[r].dbi);
        CHECK(rep.rows[r].chi == again.rows[r].chi);
    }
}

TEST_CASE("comparison without labels, and with a failing method") {
    const auto blobs = testsupport::make_blobs(2, 10, 3, 0.3, 10.0, 35);
    CompareOptions opts;
    opts.k = 50;  // more clusters than points for k-means and GMM
    opts.meanshift.bandwidth = 2.0;
    opts.coverage_labels = {"C1"};
    const auto rep = compare_report(blobs.points, nullptr, std::nullopt, opts);
    REQUIRE(rep.rows.size() == 3);
    CHECK(!rep.labels_available);
    CHECK(rep.rows[0].error);
    CHECK(rep.rows[1].error);
    CHECK(!rep.rows[2].error);
    CHECK(rep.rows[2].clusters == 2);
    CHECK(rep.rows[2].coverage.empty());
}

TEST_CASE("median heuristic") {
    const Matrix pts = Matrix::from_rows({{0}, {1}, {3}});
    CHECK(median_heuristic_bandwidth(pts) == 2.0);
    CHECK_THROWS_AS(median_heuristic_bandwidth(Matrix::from_rows({{0}})), InvalidArgumentError);
}
