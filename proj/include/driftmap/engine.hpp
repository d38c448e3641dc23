#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftmap/clustering.hpp"
#include "driftmap/matrix.hpp"
#include "driftmap/vector_io.hpp"

namespace driftmap {

struct EngineParams {
    std::size_t k0 = 2;
    double lo = 40.0;          // lower distance percentile
    double hi = 60.0;          // upper distance percentile
    double lambda = 0.25;      // window widening multiplier
    double delta_frac = 0.15;  // split threshold as a fraction of the batch size
    // Count only records whose nearest centroid is the concept under test.
    // Disabling it tests every batch record against every concept's window.
    bool purview_filter = true;
    Metric metric = Metric::euclidean;
    std::uint64_t seed = 0;

    void validate() const;  // throws InvalidArgumentError

    friend bool operator==(const EngineParams&, const EngineParams&) = default;
};

// One (root, child) pair of the lineage list. The k0 initial concepts have no root.
struct LineageEntry {
    std::optional<std::size_t> root;
    std::size_t child = 0;
    std::size_t created_at_batch = 0;

    friend bool operator==(const LineageEntry&, const LineageEntry&) = default;
};

// Persistent engine state. Every record seen so far is retained because the
// global adjustment re-clusters the union of all batches.
struct ConceptModel {
    EngineParams params;
    std::size_t dim = 0;
    Matrix centroids;                   // k rows
    std::vector<LineageEntry> lineage;  // k entries, indexed by child id
    std::vector<std::string> history_ids;
    Matrix history_points;
    std::vector<std::size_t> history_assignments;
    std::vector<std::size_t> history_batches;  // batch index each record arrived in
    std::size_t batch_counter = 0;             // batches consumed so far

    std::size_t k() const noexcept { return centroids.rows(); }
    void validate() const;  // throws FormatError on a broken invariant

    friend bool operator==(const ConceptModel&, const ConceptModel&) = default;
};

// Distance window of one concept against one batch.
struct OutlierReport {
    std::size_t concept_id = 0;
    std::vector<double> distances;  // every batch record to the concept centroid
    double l = 0.0;                 // lo-th percentile of distances
    double u = 0.0;                 // hi-th percentile of distances
    double lower = 0.0;
    double upper = 0.0;
    std::size_t purview_size = 0;
    std::vector<std::size_t> outliers;  // batch row indices, ascending
};

struct SplitRecord {
    std::size_t root = 0;
    std::size_t child = 0;

    friend bool operator==(const SplitRecord&, const SplitRecord&) = default;
};

struct OutlierWindow {
    double l = 0.0, u = 0.0, lower = 0.0, upper = 0.0;

    friend bool operator==(const OutlierWindow&, const OutlierWindow&) = default;
};

using Assignments = std::vector<std::pair<std::string, std::size_t>>;

struct BatchOutcome {
    std::size_t batch = 0;
    std::size_t batch_size = 0;
    std::size_t k_before = 0;
    std::size_t k_after = 0;
    std::vector<std::size_t> outlier_counts;  // per concept that existed at batch entry
    std::vector<OutlierWindow> windows;       // same indexing as outlier_counts
    std::vector<SplitRecord> splits;
    Assignments assignments;                  // this batch's records after global adjustment
    std::size_t history_reassigned = 0;       // earlier records moved by the global adjustment
    Matrix centroids_at_entry;

    friend bool operator==(const BatchOutcome&, const BatchOutcome&) = default;
};

ConceptModel init_model(const Batch& first_batch, const EngineParams& params);

// Outcome record for the batch that built the initial model.
BatchOutcome initial_outcome(const ConceptModel& model, const Batch& first_batch);

OutlierReport detect_outliers(const ConceptModel& model, const Matrix& batch_points,
                              std::size_t concept_id);

// Splits concept `concept_id` by 2-means over its retained members plus the
// given outlier rows of the batch. The sub-cluster nearer the old centroid
// keeps the id; the other becomes concept k. Returns the new lineage entry.
LineageEntry local_split(ConceptModel& model, std::size_t concept_id, const Matrix& batch_points,
                         std::span<const std::size_t> outliers, std::size_t batch_index);

struct GlobalAdjustStats {
    std::size_t iterations = 0;
    std::size_t reassigned = 0;
};

// k-means over all retained records, started from the current centroids.
GlobalAdjustStats global_adjust(ConceptModel& model);

BatchOutcome process_batch(ConceptModel& model, const Batch& batch);

// Read-only nearest-centroid query.
Assignments assign(const ConceptModel& model, std::span<const EmbeddingRecord> records);

struct StreamRun {
    ConceptModel model;
    std::vector<BatchOutcome> outcomes;
};

// Builds the model from the first batch and feeds the rest through process_batch.
StreamRun run_stream(std::span<const Batch> batches, const EngineParams& params);

}  // namespace driftmap
