#include "driftmap/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

void require_dim(const ConceptModel& model, std::size_t dim) {
    if (dim != model.dim) {
        throw DimensionMismatchError("batch dimension " + std::to_string(dim) +
                                     " does not match model dimension " + std::to_string(model.dim));
    }
}

bool has_two_distinct_rows(const Matrix& points) {
    for (std::size_t i = 1; i < points.rows(); ++i) {
        if (squared_distance(points.row(0), points.row(i)) > 0.0) return true;
    }
    return false;
}

}  // namespace

void EngineParams::validate() const {
    if (k0 < 1) throw InvalidArgumentError("k0 must be >= 1");
    if (!(lo >= 0.0 && lo < hi && hi <= 100.0)) {
        throw InvalidArgumentError("percentiles must satisfy 0 <= lo < hi <= 100");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgumentError("lambda must be >= 0");
    if (!(delta_frac > 0.0 && delta_frac < 1.0)) {
        throw InvalidArgumentError("delta must lie strictly between 0 and 1");
    }
}

void ConceptModel::validate() const {
    params.validate();
    if (dim == 0) throw FormatError("model dimension is zero");
    if (centroids.cols() != dim) throw FormatError("centroid width does not match model dimension");
    if (lineage.size() != k()) throw FormatError("lineage length differs from concept count");
    if (k() < params.k0) throw FormatError("concept count below k0");
    for (std::size_t i = 0; i < lineage.size(); ++i) {
        const auto& e = lineage[i];
        if (e.child != i) throw FormatError("lineage entry " + std::to_string(i) + " has wrong child id");
        if (i < params.k0 && e.root) throw FormatError("initial concept with a root");
        if (i >= params.k0 && (!e.root || *e.root >= i)) {
            throw FormatError("concept " + std::to_string(i) + " lacks an earlier root");
        }
    }
    const std::size_t n = history_ids.size();
    if (history_points.rows() != n || history_assignments.size() != n || history_batches.size() != n) {
        throw FormatError("history columns have different lengths");
    }
    if (n > 0 && history_points.cols() != dim) throw FormatError("history width does not match model");
    for (std::size_t a : history_assignments) {
        if (a >= k()) throw FormatError("history record assigned to a missing concept");
    }
}

ConceptModel init_model(const Batch& first_batch, const EngineParams& params) {
    params.validate();
    if (first_batch.size() < params.k0) {
        throw InvalidArgumentError("first batch has " + std::to_string(first_batch.size()) +
                                   " records, fewer than k0=" + std::to_string(params.k0));
    }
    ConceptModel model;
    model.params = params;
    model.history_points = first_batch.points();
    model.dim = model.history_points.cols();

    KMeansConfig cfg;
    cfg.k = params.k0;
    cfg.seed = params.seed;
    auto fit = kmeans_fit(model.history_points, cfg);

    model.centroids = std::move(fit.centroids);
    for (std::size_t c = 0; c < params.k0; ++c) model.lineage.push_back({std::nullopt, c, 1});
    for (const auto& r : first_batch.records) {
        model.history_ids.push_back(r.id);
        model.history_batches.push_back(1);
    }
    model.history_assignments = std::move(fit.assignments);
    model.batch_counter = 1;
    return model;
}

BatchOutcome initial_outcome(const ConceptModel& model, const Batch& first_batch) {
    BatchOutcome out;
    out.batch = 1;
    out.batch_size = first_batch.size();
    out.k_after = model.k();
    out.assignments = assign(model, first_batch.records);
    return out;
}

OutlierReport detect_outliers(const ConceptModel& model, const Matrix& batch_points,
                              std::size_t concept_id) {
    if (concept_id >= model.k()) {
        throw InvalidArgumentError("concept " + std::to_string(concept_id) + " does not exist (k=" +
                                   std::to_string(model.k()) + ")");
    }
    if (batch_points.empty()) throw InvalidArgumentError("outlier detection on an empty batch");
    require_dim(model, batch_points.cols());

    const auto& p = model.params;
    OutlierReport rep;
    rep.concept_id = concept_id;
    const auto centroid = model.centroids.row(concept_id);
    rep.distances.reserve(batch_points.rows());
    for (std::size_t i = 0; i < batch_points.rows(); ++i) {
        rep.distances.push_back(euclidean_distance(batch_points.row(i), centroid));
    }
    rep.l = percentile(rep.distances, p.lo);
    rep.u = percentile(rep.distances, p.hi);
    rep.lower = rep.l - p.lambda * (rep.u - rep.l);
    rep.upper = rep.u + p.lambda * (rep.u - rep.l);

    for (std::size_t i = 0; i < batch_points.rows(); ++i) {
        const bool in_purview =
            !p.purview_filter || nearest_centroid(batch_points.row(i), model.centroids) == concept_id;
        if (!in_purview) continue;
        ++rep.purview_size;
        const double d = rep.distances[i];
        if (d < rep.lower || d > rep.upper) rep.outliers.push_back(i);
    }
    return rep;
}

LineageEntry local_split(ConceptModel& model, std::size_t concept_id, const Matrix& batch_points,
                         std::span<const std::size_t> outliers, std::size_t batch_index) {
    if (concept_id >= model.k()) {
        throw InvalidArgumentError("concept " + std::to_string(concept_id) + " does not exist");
    }
    require_dim(model, batch_points.cols());

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < model.history_assignments.size(); ++i) {
        if (model.history_assignments[i] == concept_id) members.push_back(i);
    }
    Matrix pool = model.history_points.select_rows(members);
    pool.append_rows(batch_points.select_rows(outliers));
    if (pool.rows() < 2 || !has_two_distinct_rows(pool)) {
        throw InvalidArgumentError("cannot split concept " + std::to_string(concept_id) +
                                   ": fewer than 2 distinct points");
    }

    // Bisecting start: one seed on the old centroid, one on the pooled point
    // farthest from it.
    const Vector old_centroid = model.centroids.row_vector(concept_id);
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < pool.rows(); ++i) {
        const double d = squared_distance(pool.row(i), old_centroid);
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    KMeansConfig cfg;
    cfg.k = 2;
    cfg.seed = model.params.seed;
    cfg.init = KMeansInit::provided_centroids;
    cfg.initial_centroids = Matrix(0, model.dim);
    cfg.initial_centroids.append_row(old_centroid);
    cfg.initial_centroids.append_row(pool.row(far));
    const auto fit = kmeans_fit(pool, cfg);

    const double d0 = squared_distance(fit.centroids.row(0), old_centroid);
    const double d1 = squared_distance(fit.centroids.row(1), old_centroid);
    const std::size_t keep = d1 < d0 ? 1 : 0;
    const std::size_t child = model.k();

    auto kept = fit.centroids.row(keep);
    std::copy(kept.begin(), kept.end(), model.centroids.row(concept_id).begin());
    model.centroids.append_row(fit.centroids.row(1 - keep));
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (fit.assignments[m] != keep) model.history_assignments[members[m]] = child;
    }
    LineageEntry entry{concept_id, child, batch_index};
    model.lineage.push_back(entry);
    return entry;
}

GlobalAdjustStats global_adjust(ConceptModel& model) {
    KMeansConfig cfg;
    cfg.k = model.k();
    cfg.seed = model.params.seed;
    cfg.init = KMeansInit::provided_centroids;
    cfg.initial_centroids = model.centroids;
    auto fit = kmeans_fit(model.history_points, cfg);

    GlobalAdjustStats stats;
    stats.iterations = fit.iterations;
    for (std::size_t i = 0; i < fit.assignments.size(); ++i) {
        if (fit.assignments[i] != model.history_assignments[i]) ++stats.reassigned;
    }
    model.centroids = std::move(fit.centroids);
    model.history_assignments = std::move(fit.assignments);
    return stats;
}

BatchOutcome process_batch(ConceptModel& model, const Batch& batch) {
    if (batch.records.empty()) throw InvalidArgumentError("empty batch");
    const Matrix points = batch.points();
    require_dim(model, points.cols());

    const std::size_t batch_index = model.batch_counter + 1;
    const std::size_t s = points.rows();
    const double threshold = model.params.delta_frac * static_cast<double>(s);

    BatchOutcome out;
    out.batch = batch_index;
    out.batch_size = s;
    out.k_before = model.k();
    out.centroids_at_entry = model.centroids;

    // Concepts born inside this loop are not rescanned until the next batch.
    for (std::size_t c = 0; c < out.k_before; ++c) {
        auto rep = detect_outliers(model, points, c);
        out.outlier_counts.push_back(rep.outliers.size());
        out.windows.push_back({rep.l, rep.u, rep.lower, rep.upper});
        if (static_cast<double>(rep.outliers.size()) <= threshold) continue;
        try {
            const auto entry = local_split(model, c, points, rep.outliers, batch_index);
            out.splits.push_back({c, entry.child});
        } catch (const InvalidArgumentError&) {
            // degenerate pool (all points coincide): nothing to split
        }
    }

    // The member records of the split concepts were relabelled by the splits;
    // the new records join with their nearest concept before re-clustering.
    const std::size_t old_n = model.history_ids.size();
    const auto pre_assign = kmeans_assign(points, model.centroids);
    for (std::size_t i = 0; i < s; ++i) {
        model.history_ids.push_back(batch.records[i].id);
        model.history_batches.push_back(batch_index);
        model.history_assignments.push_back(pre_assign[i]);
    }
    model.history_points.append_rows(points);

    const std::vector<std::size_t> before(model.history_assignments.begin(),
                                          model.history_assignments.begin() +
                                              static_cast<std::ptrdiff_t>(old_n));
    global_adjust(model);
    for (std::size_t i = 0; i < old_n; ++i) {
        if (model.history_assignments[i] != before[i]) ++out.history_reassigned;
    }

    model.batch_counter = batch_index;
    out.k_after = model.k();
    out.assignments.reserve(s);
    for (std::size_t i = 0; i < s; ++i) {
        out.assignments.emplace_back(batch.records[i].id, model.history_assignments[old_n + i]);
    }
    return out;
}

Assignments assign(const ConceptModel& model, std::span<const EmbeddingRecord> records) {
    Assignments out;
    out.reserve(records.size());
    for (const auto& r : records) {
        require_dim(model, r.vector.size());
        out.emplace_back(r.id, nearest_centroid(r.vector, model.centroids));
    }
    return out;
}

StreamRun run_stream(std::span<const Batch> batches, const EngineParams& params) {
    if (batches.empty()) throw EmptyDatasetError("no batches to process");
    StreamRun run{init_model(batches.front(), params), {}};
    run.outcomes.push_back(initial_outcome(run.model, batches.front()));
    for (std::size_t b = 1; b < batches.size(); ++b) {
        run.outcomes.push_back(process_batch(run.model, batches[b]));
    }
    return run;
}

}  // namespace driftmap
