#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "driftmap/engine.hpp"
#include "driftmap/vector_io.hpp"

namespace driftmap {

inline constexpr int kSnapshotSchemaVersion = 1;

enum class HistoryStorage {
    reference,  // ids only; vectors are re-read from the dataset file
    inline_vectors,
};

struct SnapshotOptions {
    HistoryStorage storage = HistoryStorage::inline_vectors;
    std::filesystem::path dataset;  // required for reference storage
};

// Canonical snapshot document including its digest.
nlohmann::json snapshot_document(const ConceptModel& model, const SnapshotOptions& options);

void save_model(const ConceptModel& model, const std::filesystem::path& path,
                const SnapshotOptions& options = {});

// `dataset` overrides the file recorded in a reference-mode snapshot.
ConceptModel load_model(const std::filesystem::path& path, const Dataset* dataset = nullptr);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

nlohmann::json params_to_json(const EngineParams& params);
EngineParams params_from_json(const nlohmann::json& j);

nlohmann::json outcome_to_json(const BatchOutcome& outcome);
BatchOutcome outcome_from_json(const nlohmann::json& j);

}  // namespace driftmap
