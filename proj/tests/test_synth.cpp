#include <doctest.h>

#include <cmath>
#include <random>

#include "driftmap/errors.hpp"
#include "driftmap/synth.hpp"
#include "oracles.hpp"

using namespace driftmap;

namespace {

Vector axis(std::size_t dim, std::size_t j, double len) {
    Vector v(dim, 0.0);
    v[j] = len;
    return v;
}

DriftScenario two_blobs(std::size_t n_batches = 5, std::uint64_t seed = 1) {
    DriftScenario sc;
    sc.dim = 4;
    sc.batch_size = 400;
    sc.n_batches = n_batches;
    sc.seed = seed;
    sc.initial = {{"A", axis(4, 0, 10), 1.0, 1.0}, {"B", axis(4, 1, 10), 1.0, 1.0}};
    return sc;
}

std::map<std::string, std::size_t> label_counts(const SyntheticStream& s, std::size_t batch) {
    std::map<std::string, std::size_t> out;
    for (const auto& r : s.batches[batch - 1].records) ++out[s.truth.at(r.id)];
    return out;
}

bool within_5_sigma(std::size_t count, std::size_t n, double p) {
    const double sd = std::sqrt(static_cast<double>(n) * p * (1 - p));
    return std::abs(static_cast<double>(count) - static_cast<double>(n) * p) <= 5 * sd;
}

}  // namespace

TEST_CASE("stationary scenario draws from the same mixture") {
    const auto sc = two_blobs();
    const auto s = generate(sc);
    REQUIRE(s.batches.size() == 5);
    for (std::size_t t = 1; t <= 5; ++t) {
        CHECK(s.batches[t - 1].index == t);
        CHECK(s.components[t - 1].size() == 2);
        const auto counts = label_counts(s, t);
        CHECK(counts.size() == 2);
        CHECK(within_5_sigma(counts.at("A"), 400, 0.5));
    }
    CHECK(s.truth.size() == 2000);
    CHECK(s.batches[2].records[7].id == "b3-7");
    CHECK(s.batches[2].records[7].timestamp == 3 * 3600);
}

TEST_CASE("generation is deterministic per seed") {
    const auto a = generate(two_blobs(3, 9));
    const auto b = generate(two_blobs(3, 9));
    const auto c = generate(two_blobs(3, 10));
    CHECK(a.batches[2].records == b.batches[2].records);
    CHECK(a.truth == b.truth);
    CHECK(a.batches[2].records != c.batches[2].records);
}

TEST_CASE("emergence at batch 3 with weight 0.3") {
    auto sc = two_blobs(6);
    sc.events.push_back({3, EmergeEvent{{"N", axis(4, 2, 10), 1.0, 0.3}}});
    const auto s = generate(sc);
    CHECK(label_counts(s, 2).count("N") == 0);
    for (std::size_t t = 3; t <= 6; ++t) {
        const auto counts = label_counts(s, t);
        CHECK(within_5_sigma(counts.at("N"), 400, 0.3));
        CHECK(within_5_sigma(counts.at("A"), 400, 0.35));
    }
    double total = 0;
    for (const auto& c : s.components[3]) total += c.weight;
    CHECK(s.components[3].back().weight / total == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("split of A at batch 4 with fraction 0.4") {
    auto sc = two_blobs(6);
    sc.events.push_back({4, SplitEvent{"A", "A2", axis(4, 3, 8), 0.4}});
    const auto s = generate(sc);
    CHECK(label_counts(s, 3).count("A2") == 0);
    std::size_t a = 0, a2 = 0;
    for (std::size_t t = 4; t <= 6; ++t) {
        const auto counts = label_counts(s, t);
        CHECK(counts.at("A") > 0);
        CHECK(counts.at("A2") > 0);
        a += counts.at("A");
        a2 += counts.at("A2");
    }
    CHECK(within_5_sigma(a2, a + a2, 0.4));
    const auto& child = s.components[3].back();
    CHECK(child.mean == Vector{10, 0, 0, 8});
}

TEST_CASE("scenario validation") {
    auto sc = two_blobs();
    sc.events.push_back({1, EmergeEvent{{"N", axis(4, 2, 10), 1.0, 0.3}}});
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
    sc.events = {{9, EmergeEvent{{"N", axis(4, 2, 10), 1.0, 0.3}}}};
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
    sc.events = {{3, EmergeEvent{{"N", axis(4, 0, 12), 1.0, 0.3}}}};  // 2 sigma from A
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
    sc.events = {{3, SplitEvent{"A", "A2", axis(4, 3, 8), 1.0}}};
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
    sc.events = {{3, SplitEvent{"Q", "A2", axis(4, 3, 8), 0.5}}};
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
    sc.events = {{3, SplitEvent{"A", "B", axis(4, 3, 8), 0.5}}};
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
    sc = two_blobs();
    sc.initial[1].sigma = 0;
    CHECK_THROWS_AS(sc.validate(), InvalidArgumentError);
}

TEST_CASE("scenario JSON round trip and schema errors") {
    auto sc = two_blobs(6, 77);
    sc.events.push_back({3, EmergeEvent{{"N", axis(4, 2, 10), 1.5, 0.3}}});
    sc.events.push_back({4, SplitEvent{"A", "A2", axis(4, 3, 9), 0.4}});
    const auto back = scenario_from_json(scenario_to_json(sc));
    CHECK(back.seed == 77);
    CHECK(back.events.size() == 2);
    CHECK(generate(back).batches[5].records == generate(sc).batches[5].records);
    CHECK_THROWS_AS(scenario_from_json("{\"dim\": 4}"), InvalidArgumentError);
    CHECK_THROWS_AS(scenario_from_json("not json"), InvalidArgumentError);
    CHECK_THROWS_AS(scenario_from_json(R"({"dim":1,"batch_size":10,"n_batches":3,
        "initial":[{"label":"A","mean":[0]}],"events":[{"at_batch":2,"kind":"merge"}]})"),
                    InvalidArgumentError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
}

TEST_CASE("adjusted Rand index") {
    const std::vector<std::size_t> a{0, 0, 1, 1, 2, 2};
    const std::vector<std::size_t> relabelled{5, 5, 3, 3, 9, 9};
    CHECK(adjusted_rand_index(a, a) == 1.0);
    CHECK(adjusted_rand_index(a, relabelled) == 1.0);
    CHECK_THROWS_AS(adjusted_rand_index(a, std::vector<std::size_t>{1, 2}), InvalidArgumentError);
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> x(200), y(200);
        for (auto& v : x) v = rng() % 4;
        for (auto& v : y) v = rng() % 5;
        const double ari = adjusted_rand_index(x, y);
        CHECK(std::abs(ari - oracle::adjusted_rand(x, y)) <= 1e-12);
        CHECK(std::abs(ari) <= 0.1);
        mean += ari / 20;
    }
    CHECK(std::abs(mean) < 0.02);
}

TEST_CASE("evaluate_run with perfect detection") {
    auto sc = two_blobs(3);
    sc.batch_size = 20;
    sc.events.push_back({3, EmergeEvent{{"N", axis(4, 2, 10), 1.0, 0.3}}});
    const auto s = generate(sc);

    // A hand-built run that labels every record by its ground truth.
    ConceptModel model;
    model.params.k0 = 2;
    model.dim = 4;
    model.centroids = Matrix::from_rows({axis(4, 0, 10), axis(4, 1, 10), axis(4, 2, 10)});
    model.lineage = {{std::nullopt, 0, 1}, {std::nullopt, 1, 1}, {0, 2, 3}};
    const std::map<std::string, std::size_t> id_of{{"A", 0}, {"B", 1}, {"N", 2}};
    std::vector<BatchOutcome> outcomes;
    for (const auto& b : s.batches) {
        BatchOutcome o;
        o.batch = b.index;
        o.k_before = 2;
        o.k_after = b.index < 3 ? 2 : 3;
        o.centroids_at_entry = Matrix::from_rows({axis(4, 0, 10), axis(4, 1, 10)});
        for (const auto& r : b.records) {
            model.history_ids.push_back(r.id);
            model.history_points.append_row(r.vector);
            model.history_assignments.push_back(id_of.at(s.truth.at(r.id)));
            model.history_batches.push_back(b.index);
            o.assignments.emplace_back(r.id, id_of.at(s.truth.at(r.id)));
        }
        outcomes.push_back(o);
    }
    const auto ev = evaluate_run(outcomes, model, sc, s);
    CHECK(ev.ari == 1.0);
    CHECK(ev.coverage.at("N").fraction == 1.0);
    REQUIRE(ev.events.size() == 1);
    CHECK(ev.events[0].latency == 0u);
    CHECK(ev.events[0].concept_id == 2u);
    CHECK(ev.events[0].recorded_root == 0u);
}

TEST_CASE("synthetic posts carry label vocabulary") {
    auto sc = two_blobs(2);
    sc.batch_size = 10;
    const auto s = generate(sc);
    const auto posts = synthetic_posts(s, 3);
    REQUIRE(posts.size() == 20);
    for (const auto& p : posts) {
        CHECK(p.label == s.truth.at(p.id));
        CHECK(!p.text.empty());
    }
    CHECK(synthetic_posts(s, 3)[4].text == posts[4].text);
}
