#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "driftmap/cli.hpp"
#include "driftmap/engine.hpp"
#include "driftmap/snapshot.hpp"
#include "driftmap/synth.hpp"
#include "driftmap/vector_io.hpp"
#include "support.hpp"

using namespace driftmap;
using nlohmann::json;
using testsupport::TempDir;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "driftmap");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

std::string two_event_scenario(std::uint64_t seed, std::size_t n_batches = 5) {
    return R"({"dim": 4, "batch_size": 200, "n_batches": )" + std::to_string(n_batches) +
           R"(, "seed": )" + std::to_string(seed) + R"(,
  "initial": [{"label": "A", "mean": [10, 0, 0, 0], "sigma": 1},
              {"label": "B", "mean": [0, 10, 0, 0], "sigma": 1}],
  "events": [{"at_batch": 3, "kind": "emerge", "blob": {"label": "N", "mean": [0, 0, 10, 0], "sigma": 1, "weight": 0.3}},
             {"at_batch": 4, "kind": "split", "parent": "A", "label": "A2", "offset": [0, 0, 0, 8], "fraction": 0.4}]})";
}

struct Synth {
    std::filesystem::path embeddings, posts;
};

Synth synth(const TempDir& dir, const std::string& scenario_text, const std::string& tag = "s") {
    testsupport::spit(dir / (tag + ".json"), scenario_text);
    Synth s{dir / (tag + ".jsonl"), dir / (tag + "-posts.jsonl")};
    const auto r = cli({"synth", "--scenario", (dir / (tag + ".json")).string(), "--embeddings-out",
                        s.embeddings.string(), "--posts-out", s.posts.string()});
    REQUIRE(r.code == 0);
    return s;
}

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({}).code == kExitConfigError);
    CHECK(cli({"frobnicate"}).code == kExitConfigError);
    CHECK(cli({"run", "--embeddings", "x"}).code == kExitConfigError);
    CHECK(cli({"synth", "--scenario", "s", "--embeddings-out", "e", "--posts-out", "p", "--format", "xml"}).code ==
          kExitConfigError);
}

TEST_CASE("synth writes label counts that follow the weights") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(4));
    const auto posts = read_posts(s.posts);
    CHECK(posts.size() == 1000);
    CHECK(read_embeddings(s.embeddings).records.size() == 1000);
    std::map<std::string, std::size_t> counts;
    for (const auto& p : posts)
        if (p.timestamp == 5 * 3600) ++counts[*p.label];
    // batch 5 mixture: N 0.3, B 0.35, A 0.21, A2 0.14
    auto near = [](std::size_t c, double p) {
        const double sd = std::sqrt(200 * p * (1 - p));
        return std::abs(static_cast<double>(c) - 200 * p) <= 5 * sd;
    };
    CHECK(near(counts["N"], 0.3));
    CHECK(near(counts["B"], 0.35));
    CHECK(near(counts["A"], 0.21));
    CHECK(near(counts["A2"], 0.14));
}

TEST_CASE("synth is repeatable and rejects bad schemas") {
    TempDir dir("cli");
    const auto a = synth(dir, two_event_scenario(4), "a");
    const auto b = synth(dir, two_event_scenario(4), "b");
    CHECK(testsupport::slurp(a.embeddings) == testsupport::slurp(b.embeddings));
    CHECK(testsupport::slurp(a.posts) == testsupport::slurp(b.posts));

    testsupport::spit(dir / "bad.json", R"({"dim": 4, "initial": []})");
    const auto r = cli({"synth", "--scenario", (dir / "bad.json").string(), "--embeddings-out",
                        (dir / "x").string(), "--posts-out", (dir / "y").string()});
    CHECK(r.code == kExitConfigError);
    CHECK(!r.err.empty());

    const auto bin = cli({"synth", "--scenario", (dir / "a.json").string(), "--embeddings-out",
                          (dir / "a.bin").string(), "--posts-out", (dir / "p.jsonl").string(), "--format", "binary"});
    CHECK(bin.code == 0);
    CHECK(read_embeddings(dir / "a.bin").records.size() == 1000);
}

TEST_CASE("run writes a snapshot and one outcome line per batch") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(5));
    const auto r = cli({"run", "--embeddings", s.embeddings.string(), "--batch-size", "200", "--snapshot-out",
                        (dir / "m.dmap.json").string(), "--outcomes", (dir / "o.jsonl").string()});
    REQUIRE(r.code == 0);
    const auto log = lines(testsupport::slurp(dir / "o.jsonl"));
    REQUIRE(log.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(json::parse(log[i]).at("batch") == i + 1);
    const auto model = load_model(dir / "m.dmap.json");
    CHECK(model.batch_counter == 5);
    CHECK(model.history_ids.size() == 1000);
}

TEST_CASE("resume appends exactly the new batches") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(6));
    const auto all = read_embeddings(s.embeddings);
    std::vector<EmbeddingRecord> head(all.records.begin(), all.records.begin() + 800);
    write_embeddings(head, dir / "head.jsonl", EmbeddingFormat::jsonl);

    const std::string full_snap = (dir / "full.dmap.json").string();
    REQUIRE(cli({"run", "--embeddings", s.embeddings.string(), "--batch-size", "200", "--seed", "3",
                 "--snapshot-out", full_snap, "--outcomes", (dir / "full.jsonl").string()})
                .code == 0);
    REQUIRE(cli({"run", "--embeddings", (dir / "head.jsonl").string(), "--batch-size", "200", "--seed", "3",
                 "--snapshot-out", (dir / "head.dmap.json").string(), "--outcomes", (dir / "part.jsonl").string()})
                .code == 0);
    CHECK(lines(testsupport::slurp(dir / "part.jsonl")).size() == 4);
    REQUIRE(cli({"run", "--embeddings", s.embeddings.string(), "--batch-size", "200", "--seed", "3",
                 "--snapshot-in", (dir / "head.dmap.json").string(), "--snapshot-out",
                 (dir / "resumed.dmap.json").string(), "--outcomes", (dir / "part.jsonl").string()})
                .code == 0);
    CHECK(lines(testsupport::slurp(dir / "part.jsonl")).size() == 5);
    CHECK(testsupport::slurp(dir / "part.jsonl") == testsupport::slurp(dir / "full.jsonl"));
    CHECK(testsupport::slurp(dir / "resumed.dmap.json") == testsupport::slurp(full_snap));
}

TEST_CASE("run failures map to exit codes") {
    TempDir dir("cli");
    const auto missing = cli({"run", "--embeddings", (dir / "nope.jsonl").string(), "--snapshot-out",
                              (dir / "m.json").string(), "--outcomes", (dir / "o.jsonl").string()});
    CHECK(missing.code == kExitFormatError);
    CHECK(!missing.err.empty());
    const auto s = synth(dir, two_event_scenario(7));
    const auto bad_param = cli({"run", "--embeddings", s.embeddings.string(), "--lo", "70", "--snapshot-out",
                                (dir / "m.json").string(), "--outcomes", (dir / "o.jsonl").string()});
    CHECK(bad_param.code == kExitConfigError);
    const auto bad_window = cli({"run", "--embeddings", s.embeddings.string(), "--window", "0",
                                 "--snapshot-out", (dir / "m.json").string(), "--outcomes",
                                 (dir / "o.jsonl").string()});
    CHECK(bad_window.code == kExitConfigError);
}

TEST_CASE("window batching uses post timestamps") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(8, 4));
    // strip timestamps from the embeddings so they must come from the posts
    auto ds = read_embeddings(s.embeddings);
    for (auto& r : ds.records) r.timestamp.reset();
    write_embeddings(ds.records, dir / "bare.jsonl", EmbeddingFormat::jsonl);
    const auto r = cli({"run", "--embeddings", (dir / "bare.jsonl").string(), "--posts", s.posts.string(),
                        "--window", "3600", "--snapshot-out", (dir / "m.json").string(), "--outcomes",
                        (dir / "o.jsonl").string()});
    REQUIRE(r.code == 0);
    CHECK(lines(testsupport::slurp(dir / "o.jsonl")).size() == 4);
    const auto no_ts = cli({"run", "--embeddings", (dir / "bare.jsonl").string(), "--window", "3600",
                            "--snapshot-out", (dir / "m.json").string(), "--outcomes", (dir / "o.jsonl").string()});
    CHECK(no_ts.code == kExitFormatError);
}

TEST_CASE("config file from the environment, flags win") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(9, 4));
    testsupport::spit(dir / "cfg.toml", "[run]\nbatch-size = 100\nseed = 5\n");
    ::setenv("DRIFTMAP_CONFIG", (dir / "cfg.toml").c_str(), 1);
    const auto r = cli({"run", "--embeddings", s.embeddings.string(), "--snapshot-out",
                        (dir / "m.json").string(), "--outcomes", (dir / "o.jsonl").string()});
    const auto r2 = cli({"run", "--embeddings", s.embeddings.string(), "--batch-size", "400", "--snapshot-out",
                         (dir / "m2.json").string(), "--outcomes", (dir / "o2.jsonl").string()});
    ::unsetenv("DRIFTMAP_CONFIG");
    REQUIRE(r.code == 0);
    REQUIRE(r2.code == 0);
    CHECK(lines(testsupport::slurp(dir / "o.jsonl")).size() == 8);
    CHECK(load_model(dir / "m.json").params.seed == 5);
    CHECK(lines(testsupport::slurp(dir / "o2.jsonl")).size() == 2);
}

TEST_CASE("report without posts marks terms skipped") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(10, 4));
    REQUIRE(cli({"run", "--embeddings", s.embeddings.string(), "--batch-size", "200", "--snapshot-out",
                 (dir / "m.json").string(), "--outcomes", (dir / "o.jsonl").string()})
                .code == 0);
    const auto r = cli({"report", "--snapshot-in", (dir / "m.json").string(), "--coverage-label", "N", "--out",
                        (dir / "rep").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Trending terms: skipped") != std::string::npos);
    const auto j = json::parse(testsupport::slurp(dir / "rep" / "report.json"));
    CHECK(j.at("terms") == "skipped");
    CHECK(j.at("metrics").at("rows")[0].at("coverage").at("N") == "not-applicable");
    CHECK(std::filesystem::exists(dir / "rep" / "report.txt"));
}

TEST_CASE("report with posts, titles, coverage and projection") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(11, 4));
    REQUIRE(cli({"run", "--embeddings", s.embeddings.string(), "--batch-size", "200", "--snapshot-out",
                 (dir / "m.json").string(), "--outcomes", (dir / "o.jsonl").string()})
                .code == 0);
    testsupport::spit(dir / "titles.json", R"({"https://x.y": "some page"})");
    const auto r = cli({"report", "--snapshot-in", (dir / "m.json").string(), "--posts", s.posts.string(),
                        "--titles", (dir / "titles.json").string(), "--coverage-label", "N",
                        "--coverage-label", "ZZZ", "--top-terms", "3", "--project", "--out",
                        (dir / "rep").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Unigrams") != std::string::npos);
    CHECK(r.out.find("Bigrams/Trigrams") != std::string::npos);
    const auto j = json::parse(testsupport::slurp(dir / "rep" / "report.json"));
    const auto& cov = j.at("metrics").at("rows")[0].at("coverage");
    CHECK(cov.at("N").at("fraction").get<double>() > 0.0);
    CHECK(cov.at("ZZZ") == "not-applicable");
    CHECK(j.at("terms").size() == j.at("concepts"));
    const auto csv = lines(testsupport::slurp(dir / "rep" / "projection.csv"));
    CHECK(csv.front() == "x,y,concept");
    CHECK(csv.size() == 801);

    const auto missing = cli({"report", "--snapshot-in", (dir / "m.json").string(), "--posts",
                              (dir / "absent.jsonl").string(), "--out", (dir / "rep2").string()});
    CHECK(missing.code == kExitFormatError);
}

TEST_CASE("report on a nine-concept snapshot") {
    TempDir dir("cli");
    ConceptModel m;
    m.dim = 2;
    m.params.k0 = 2;
    for (std::size_t c = 0; c < 9; ++c) {
        m.centroids.append_row(Vector{10.0 * static_cast<double>(c), 0.0});
        m.lineage.push_back({c < 2 ? std::nullopt : std::optional<std::size_t>(c / 2), c, c < 2 ? 1 : c});
        for (int i = 0; i < 3; ++i) {
            m.history_ids.push_back("r" + std::to_string(c) + "-" + std::to_string(i));
            m.history_points.append_row(Vector{10.0 * static_cast<double>(c) + i, static_cast<double>(i)});
            m.history_assignments.push_back(c);
            m.history_batches.push_back(1);
        }
    }
    m.batch_counter = 8;
    save_model(m, dir / "m9.json");
    std::vector<PostRecord> posts;
    for (std::size_t i = 0; i < m.history_ids.size(); ++i)
        posts.push_back({m.history_ids[i], std::nullopt, "topic" + std::to_string(i / 3) + " shared words", std::nullopt});
    write_posts(posts, dir / "p.jsonl");
    const auto r = cli({"report", "--snapshot-in", (dir / "m9.json").string(), "--posts", (dir / "p.jsonl").string(),
                        "--out", (dir / "rep").string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(testsupport::slurp(dir / "rep" / "report.json"));
    CHECK(j.at("terms").size() == 9);
    CHECK(j.at("lineage").size() == 9 - 2);
    CHECK(r.out.find("4 -> 8 @ 8") != std::string::npos);
}

TEST_CASE("eval compares the engine with the baselines") {
    TempDir dir("cli");
    const auto s = synth(dir, two_event_scenario(12, 4));
    const auto r = cli({"eval", "--embeddings", s.embeddings.string(), "--posts", s.posts.string(), "--batch-size",
                        "200", "--k", "4", "--method", "kmeans", "--method", "gmm", "--coverage-label", "N",
                        "--out", (dir / "ev").string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(testsupport::slurp(dir / "ev" / "comparison.json"));
    REQUIRE(j.at("rows").size() == 3);
    CHECK(j.at("rows")[0].at("method") == "engine");
    CHECK(j.at("rows")[1].at("clusters") == 4);
    CHECK(j.at("rows")[1].at("coverage").at("N").at("fraction").get<double>() > 0.9);

    const auto unlabeled = cli({"eval", "--embeddings", s.embeddings.string(), "--batch-size", "200",
                                "--method", "kmeans", "--k", "4", "--coverage-label", "N"});
    REQUIRE(unlabeled.code == 0);
    CHECK(unlabeled.out.find("Not Applicable") != std::string::npos);

    const auto bad = cli({"eval", "--embeddings", s.embeddings.string(), "--method", "birch"});
    CHECK(bad.code == kExitConfigError);
}

TEST_CASE("eval on a nine-concept stream reports nine engine clusters") {
    TempDir dir("cli");
    json sc = {{"dim", 16}, {"batch_size", 500}, {"n_batches", 10}, {"seed", 21}};
    auto mean = [](std::size_t axis) {
        std::vector<double> v(16, 0.0);
        v[axis] = 12.0;
        return v;
    };
    sc["initial"] = {{{"label", "C0"}, {"mean", mean(0)}, {"sigma", 1.0}},
                     {{"label", "C1"}, {"mean", mean(1)}, {"sigma", 1.0}}};
    sc["events"] = json::array();
    for (std::size_t e = 0; e < 7; ++e) {
        const double share = 1.0 / static_cast<double>(3 + e);
        sc["events"].push_back({{"at_batch", 2 + e},
                                {"kind", "emerge"},
                                {"blob", {{"label", "C" + std::to_string(2 + e)}, {"mean", mean(2 + e)}, {"sigma", 1.0}, {"weight", share}}}});
    }
    const auto s = synth(dir, sc.dump());
    const auto r = cli({"eval", "--embeddings", s.embeddings.string(), "--posts", s.posts.string(), "--batch-size",
                        "500", "--method", "kmeans", "--k", "9", "--out", (dir / "ev").string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(testsupport::slurp(dir / "ev" / "comparison.json"));
    CHECK(j.at("rows")[0].at("clusters") == 9);
    CHECK(j.at("rows")[1].at("clusters") == 9);
}
