#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "driftmap/engine.hpp"
#include "driftmap/metrics.hpp"
#include "driftmap/vector_io.hpp"

namespace driftmap {

struct BlobSpec {
    std::string label;
    Vector mean;
    double sigma = 1.0;   // isotropic standard deviation
    double weight = 1.0;  // relative; normalised when sampling
};

// A new component takes `blob.weight` (in (0,1)) of the mixture; the
// existing components are scaled by (1 - weight).
struct EmergeEvent {
    BlobSpec blob;
};

// `fraction` of the parent's weight moves to a child at parent.mean + offset.
struct SplitEvent {
    std::string parent;
    std::string child_label;
    Vector offset;
    double fraction = 0.5;
};

struct ScenarioEvent {
    std::size_t at_batch = 2;
    std::variant<EmergeEvent, SplitEvent> kind;
};

struct DriftScenario {
    std::size_t dim = 16;
    std::size_t batch_size = 200;
    std::size_t n_batches = 5;
    std::vector<BlobSpec> initial;
    std::vector<ScenarioEvent> events;
    std::uint64_t seed = 0;
    // Minimum distance, in units of sigma, between a new component and every
    // component already active.
    double min_separation_sigmas = 6.0;

    void validate() const;  // throws InvalidArgumentError
};

DriftScenario load_scenario(const std::filesystem::path& path);
DriftScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const DriftScenario& scenario);

using GroundTruth = std::unordered_map<std::string, std::string>;  // record id -> label

struct SyntheticStream {
    std::vector<Batch> batches;
    GroundTruth truth;
    // Active components after each batch's events, indexed by batch - 1.
    std::vector<std::vector<BlobSpec>> components;
};

SyntheticStream generate(const DriftScenario& scenario);

// Posts with short label-specific texts so term reports have material.
std::vector<PostRecord> synthetic_posts(const SyntheticStream& stream, std::uint64_t seed);

// Adjusted Rand index by pair counting over the contingency table.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct EventEvaluation {
    std::size_t at_batch = 0;
    std::string label;      // the new component's label
    std::string reference;  // split parent label, or the new label for emergence
    std::optional<std::size_t> detected_at;
    std::optional<std::size_t> latency;
    std::optional<std::size_t> concept_id;     // concept that captured the new label
    std::optional<std::size_t> recorded_root;  // its lineage root
    std::size_t expected_root = 0;             // concept nearest the reference mean at event time
    bool lineage_correct = false;
};

struct RunEvaluation {
    std::vector<EventEvaluation> events;
    double ari = 0.0;
    std::map<std::string, Coverage> coverage;
};

RunEvaluation evaluate_run(std::span<const BatchOutcome> outcomes, const ConceptModel& model,
                           const DriftScenario& scenario, const SyntheticStream& stream);

}  // namespace driftmap
