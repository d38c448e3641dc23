#include "driftmap/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftmap/baselines.hpp"
#include "driftmap/engine.hpp"
#include "driftmap/errors.hpp"
#include "driftmap/report.hpp"
#include "driftmap/snapshot.hpp"
#include "driftmap/synth.hpp"
#include "driftmap/terms.hpp"
#include "driftmap/vector_io.hpp"

namespace driftmap {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct EngineFlags {
    std::size_t k0 = 2;
    double lo = 40.0;
    double hi = 60.0;
    double lambda = 0.25;
    double delta = 0.15;
    bool no_purview_filter = false;
    std::uint64_t seed = 0;

    EngineParams params() const {
        EngineParams p;
        p.k0 = k0;
        p.lo = lo;
        p.hi = hi;
        p.lambda = lambda;
        p.delta_frac = delta;
        p.purview_filter = !no_purview_filter;
        p.seed = seed;
        p.validate();
        return p;
    }
};

struct BatchingFlags {
    std::int64_t batch_size = 100;
    std::optional<std::int64_t> window;

    Batching batching() const {
        if (window) return {BatchingMode::timestamp_window, *window};
        return {BatchingMode::fixed_size, batch_size};
    }
};

void add_engine_flags(CLI::App* cmd, EngineFlags& f) {
    cmd->add_option("--k0", f.k0, "initial concept count")->capture_default_str();
    cmd->add_option("--lo", f.lo, "lower distance percentile")->capture_default_str();
    cmd->add_option("--hi", f.hi, "upper distance percentile")->capture_default_str();
    cmd->add_option("--lambda", f.lambda, "window widening multiplier")->capture_default_str();
    cmd->add_option("--delta", f.delta, "split threshold, fraction of batch size")->capture_default_str();
    cmd->add_flag("--no-purview-filter", f.no_purview_filter,
                  "test every batch record against every concept window");
    cmd->add_option("--seed", f.seed, "random seed")->capture_default_str();
}

void add_batching_flags(CLI::App* cmd, BatchingFlags& f) {
    cmd->add_option("--batch-size", f.batch_size, "records per batch")->capture_default_str();
    cmd->add_option("--window", f.window, "batch by timestamp windows of this many seconds");
}

// Batch boundaries come from the full dataset so a resumed run sees the same windows.
std::vector<Batch> load_stream(const Dataset& ds, const std::optional<std::vector<PostRecord>>& posts,
                               const Batching& batching, const std::set<std::string>& skip = {}) {
    std::vector<EmbeddingRecord> records = ds.records;
    if (posts) attach_timestamps(records, *posts);
    std::vector<Batch> out;
    for (auto& b : batch_stream(records, batching)) {
        std::erase_if(b.records, [&](const EmbeddingRecord& r) { return skip.count(r.id) > 0; });
        if (b.records.empty()) continue;
        b.index = out.size() + 1;
        out.push_back(std::move(b));
    }
    return out;
}

std::map<std::string, const PostRecord*> posts_by_id(const std::vector<PostRecord>& posts) {
    std::map<std::string, const PostRecord*> out;
    for (const auto& p : posts) out.emplace(p.id, &p);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
}

TitleMap load_titles(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open title map " + path.string());
    try {
        return json::parse(in).get<TitleMap>();
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
    std::string embeddings, posts, snapshot_in, snapshot_out, outcomes;
    bool inline_history = false;
    EngineFlags engine;
    BatchingFlags batching;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
    const EngineParams params = a.engine.params();
    const Batching batching = a.batching.batching();
    const Dataset ds = read_embeddings(a.embeddings);
    std::optional<std::vector<PostRecord>> posts;
    if (!a.posts.empty()) posts = read_posts(a.posts);

    std::optional<ConceptModel> model;
    std::set<std::string> seen;
    if (!a.snapshot_in.empty()) {
        model = load_model(a.snapshot_in, &ds);
        seen.insert(model->history_ids.begin(), model->history_ids.end());
    }
    const auto batches = load_stream(ds, posts, batching, seen);

    std::ofstream log(a.outcomes, model ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("cannot open outcome log " + a.outcomes);

    std::size_t splits = 0;
    for (const auto& b : batches) {
        BatchOutcome o;
        if (!model) {
            model = init_model(b, params);
            o = initial_outcome(*model, b);
        } else {
            o = process_batch(*model, b);
        }
        splits += o.splits.size();
        log << outcome_to_json(o).dump() << '\n';
    }
    if (!model) throw EmptyDatasetError("no records to process");

    SnapshotOptions opts;
    if (a.inline_history) {
        opts.storage = HistoryStorage::inline_vectors;
    } else {
        opts.storage = HistoryStorage::reference;
        opts.dataset = fs::absolute(a.embeddings);
    }
    save_model(*model, a.snapshot_out, opts);
    out << "processed " << batches.size() << " batches; k=" << model->k() << "; splits=" << splits
        << "; snapshot " << a.snapshot_out << '\n';
    return kExitOk;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
    std::string snapshot_in, embeddings, posts, titles, out_dir = ".";
    std::size_t top_terms = 10;
    std::vector<std::string> coverage_labels;
    bool project = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::optional<Dataset> ds;
    if (!a.embeddings.empty()) ds = read_embeddings(a.embeddings);
    const ConceptModel model = load_model(a.snapshot_in, ds ? &*ds : nullptr);
    fs::create_directories(a.out_dir);

    std::optional<std::vector<PostRecord>> posts;
    if (!a.posts.empty()) {
        if (!fs::exists(a.posts)) throw IoError("posts file " + a.posts + " does not exist");
        posts = read_posts(a.posts);
    }

    // Quality table for the engine's clustering of everything it has seen.
    std::vector<std::string> labels;
    bool have_labels = false;
    if (posts) {
        const auto by_id = posts_by_id(*posts);
        have_labels = true;
        for (const auto& id : model.history_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end() || !it->second->label) {
                have_labels = false;
                break;
            }
            labels.push_back(*it->second->label);
        }
    }
    const ClusteringView view{model.history_points, model.history_assignments, model.k()};
    ComparisonReport table;
    table.coverage_labels = a.coverage_labels;
    table.labels_available = have_labels;
    table.rows.push_back(score_clustering("engine", view, have_labels ? &labels : nullptr, a.coverage_labels));

    json doc = {{"concepts", model.k()},
                {"batches", model.batch_counter},
                {"records", model.history_ids.size()},
                {"metrics", comparison_to_json(table)},
                {"lineage", json::array()}};
    for (const auto& e : model.lineage) {
        if (e.root) doc["lineage"].push_back({{"root", *e.root}, {"child", e.child}, {"batch", e.created_at_batch}});
    }

    std::ostringstream text;
    text << "Concepts: " << model.k() << "  batches: " << model.batch_counter
         << "  records: " << model.history_ids.size() << "\n\n";
    text << render_comparison_text(table) << '\n';
    text << "Lineage (root -> child @ batch):\n";
    for (const auto& edge : lineage_edges(model)) text << "  " << edge << '\n';
    text << '\n';

    if (posts) {
        const TitleMap titles = a.titles.empty() ? TitleMap{} : load_titles(a.titles);
        const auto by_id = posts_by_id(*posts);
        std::map<std::size_t, std::vector<CleanText>> grouped;
        for (std::size_t c = 0; c < model.k(); ++c) grouped[c];
        for (std::size_t i = 0; i < model.history_ids.size(); ++i) {
            auto it = by_id.find(model.history_ids[i]);
            if (it == by_id.end()) continue;
            grouped[model.history_assignments[i]].push_back(preprocess(it->second->text, titles, it->first));
        }
        std::vector<ConceptTerms> terms;
        try {
            const auto index = tfidf_by_concept(grouped);
            for (std::size_t c = 0; c < model.k(); ++c) terms.push_back(top_terms(index, c, a.top_terms));
            text << "Trending terms per concept:\n" << render_terms_text(terms);
            doc["terms"] = terms_to_json(terms);
        } catch (const InvalidArgumentError& e) {
            text << "Trending terms: skipped (" << e.what() << ")\n";
            doc["terms"] = "skipped";
        }
    } else {
        text << "Trending terms: skipped (no posts file)\n";
        doc["terms"] = "skipped";
    }

    if (a.project) {
        const Matrix proj = pca_project(model.history_points, std::min<std::size_t>(2, model.dim));
        std::ofstream csv(fs::path(a.out_dir) / "projection.csv", std::ios::trunc);
        if (!csv) throw IoError("cannot write projection.csv");
        csv << "x,y,concept\n";
        csv.precision(17);
        for (std::size_t i = 0; i < proj.rows(); ++i) {
            csv << proj(i, 0) << ',' << (proj.cols() > 1 ? proj(i, 1) : 0.0) << ','
                << model.history_assignments[i] << '\n';
        }
        doc["projection"] = (fs::path(a.out_dir) / "projection.csv").string();
    }

    write_text(fs::path(a.out_dir) / "report.txt", text.str());
    write_text(fs::path(a.out_dir) / "report.json", doc.dump(2) + "\n");
    out << text.str();
    return kExitOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string scenario, embeddings_out, posts_out, format = "jsonl";
    std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    DriftScenario sc = load_scenario(a.scenario);
    if (a.seed) sc.seed = *a.seed;
    const auto stream = generate(sc);
    std::vector<EmbeddingRecord> records;
    for (const auto& b : stream.batches) records.insert(records.end(), b.records.begin(), b.records.end());
    write_embeddings(records, a.embeddings_out,
                     a.format == "binary" ? EmbeddingFormat::binary : EmbeddingFormat::jsonl);
    write_posts(synthetic_posts(stream, sc.seed), a.posts_out);
    out << "wrote " << records.size() << " records in " << stream.batches.size() << " batches\n";
    return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string embeddings, posts, out_dir;
    std::vector<std::string> methods;
    std::vector<std::string> coverage_labels;
    std::size_t k = 9;
    std::optional<double> bandwidth;
    EngineFlags engine;
    BatchingFlags batching;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    CompareOptions opts;
    if (!a.methods.empty()) {
        opts.methods.clear();
        for (const auto& m : a.methods) opts.methods.push_back(parse_method(m));
    }
    const EngineParams params = a.engine.params();
    const Dataset ds = read_embeddings(a.embeddings);
    std::optional<std::vector<PostRecord>> posts;
    if (!a.posts.empty()) posts = read_posts(a.posts);

    const auto batches = load_stream(ds, posts, a.batching.batching());
    const auto run = run_stream(batches, params);

    std::vector<std::string> labels;
    bool have_labels = false;
    if (posts) {
        const auto by_id = posts_by_id(*posts);
        have_labels = true;
        for (const auto& id : run.model.history_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end() || !it->second->label) {
                have_labels = false;
                break;
            }
            labels.push_back(*it->second->label);
        }
    }

    opts.k = a.k;
    opts.seed = params.seed;
    opts.coverage_labels = a.coverage_labels;
    if (a.bandwidth) {
        opts.meanshift.bandwidth = *a.bandwidth;
    } else {
        const std::size_t sample = std::min<std::size_t>(run.model.history_points.rows(), 2000);
        std::vector<std::size_t> rows(sample);
        for (std::size_t i = 0; i < sample; ++i) rows[i] = i;
        opts.meanshift.bandwidth = median_heuristic_bandwidth(run.model.history_points.select_rows(rows));
    }
    const ExternalClustering engine{"engine", run.model.history_assignments, run.model.k()};
    const auto report = compare_report(run.model.history_points, have_labels ? &labels : nullptr, engine, opts);

    const std::string text = render_comparison_text(report);
    out << text;
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        write_text(fs::path(a.out_dir) / "comparison.txt", text);
        write_text(fs::path(a.out_dir) / "comparison.json", comparison_to_json(report).dump(2) + "\n");
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"driftmap: online concept discovery over embedding streams"};
    app.set_config("--config", "", "TOML/INI config file; flags override it")->envname("DRIFTMAP_CONFIG");
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "stream embeddings through the concept engine");
    run_cmd->add_option("--embeddings", run.embeddings, "embedding file (JSONL or binary)")->required();
    run_cmd->add_option("--posts", run.posts, "posts JSONL (timestamps for --window)");
    run_cmd->add_option("--snapshot-in", run.snapshot_in, "resume from this snapshot");
    run_cmd->add_option("--snapshot-out", run.snapshot_out, "snapshot to write")->required();
    run_cmd->add_option("--outcomes", run.outcomes, "per-batch outcome log (JSONL)")->required();
    run_cmd->add_flag("--inline-history", run.inline_history, "store history vectors inside the snapshot");
    add_engine_flags(run_cmd, run.engine);
    add_batching_flags(run_cmd, run.batching);

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "metrics, lineage and term report for a snapshot");
    report_cmd->add_option("--snapshot-in", report.snapshot_in, "snapshot to report on")->required();
    report_cmd->add_option("--embeddings", report.embeddings, "dataset for reference-mode snapshots");
    report_cmd->add_option("--posts", report.posts, "posts JSONL (texts and labels)");
    report_cmd->add_option("--titles", report.titles, "JSON object mapping links to page titles");
    report_cmd->add_option("--top-terms", report.top_terms, "terms per n-gram size")->capture_default_str();
    report_cmd->add_option("--coverage-label", report.coverage_labels, "label to report coverage for");
    report_cmd->add_flag("--project", report.project, "write a 2-D PCA projection CSV");
    report_cmd->add_option("--out", report.out_dir, "output directory")->capture_default_str();

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic drift stream");
    synth_cmd->add_option("--scenario", synth.scenario, "scenario JSON")->required();
    synth_cmd->add_option("--embeddings-out", synth.embeddings_out, "embedding file to write")->required();
    synth_cmd->add_option("--posts-out", synth.posts_out, "posts/labels JSONL to write")->required();
    synth_cmd->add_option("--format", synth.format, "jsonl or binary")
        ->check(CLI::IsMember({"jsonl", "binary"}))
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "override the scenario seed");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "compare the engine with static baselines");
    eval_cmd->add_option("--embeddings", eval.embeddings, "embedding file")->required();
    eval_cmd->add_option("--posts", eval.posts, "posts JSONL with labels");
    eval_cmd->add_option("--method", eval.methods, "kmeans, gmm or meanshift (repeatable)");
    eval_cmd->add_option("--k", eval.k, "clusters for kmeans and gmm")->capture_default_str();
    eval_cmd->add_option("--bandwidth", eval.bandwidth, "mean-shift bandwidth (default: median heuristic)");
    eval_cmd->add_option("--coverage-label", eval.coverage_labels, "label to report coverage for");
    eval_cmd->add_option("--out", eval.out_dir, "directory for comparison.txt/json");
    add_engine_flags(eval_cmd, eval.engine);
    add_batching_flags(eval_cmd, eval.batching);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run, out);
        if (report_cmd->parsed()) return cmd_report(report, out);
        if (synth_cmd->parsed()) return cmd_synth(synth, out);
        if (eval_cmd->parsed()) return cmd_eval(eval, out);
    } catch (const InvalidArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFormatError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFormatError;
    }
    return kExitConfigError;
}

}  // namespace driftmap
