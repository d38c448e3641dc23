#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftmap/matrix.hpp"

namespace driftmap {

// One post's embedding. The timestamp is optional and only consulted by
// timestamp-window batching; it is filled from the posts file or from an
// optional `timestamp` field in embedding JSONL.
struct EmbeddingRecord {
    std::string id;
    Vector vector;
    std::optional<std::int64_t> timestamp;

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct PostRecord {
    std::string id;
    std::optional<std::int64_t> timestamp;
    std::string text;
    std::optional<std::string> label;
};

struct Dataset {
    std::size_t dim = 0;
    std::vector<EmbeddingRecord> records;
};

struct Batch {
    std::size_t index = 0;  // 1-based stream position
    std::vector<EmbeddingRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    Matrix points() const;
};

enum class EmbeddingFormat { jsonl, binary };

enum class BatchingMode { fixed_size, timestamp_window };

struct Batching {
    BatchingMode mode = BatchingMode::fixed_size;
    // Records per batch (fixed_size) or window width in seconds (timestamp_window).
    std::int64_t value = 100;
};

struct DatasetManifest {
    std::size_t dim = 0;
    std::size_t count = 0;
    Batching batching;
};

inline constexpr char kBinaryMagic[4] = {'D', 'M', 'A', 'P'};
inline constexpr std::uint16_t kBinaryVersion = 1;

// Reads either format; binary files are recognised by the magic bytes.
Dataset read_embeddings(const std::filesystem::path& path);
void write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path,
                      EmbeddingFormat format);

std::vector<PostRecord> read_posts(const std::filesystem::path& path);
void write_posts(std::span<const PostRecord> posts, const std::filesystem::path& path);

// Copies post timestamps onto embedding records with the same id.
void attach_timestamps(std::vector<EmbeddingRecord>& records, std::span<const PostRecord> posts);

std::vector<Batch> batch_stream(std::span<const EmbeddingRecord> records, const Batching& batching);

DatasetManifest make_manifest(const Dataset& dataset, const Batching& batching);

// id -> row lookup used when rejoining posts or snapshot history.
std::unordered_map<std::string, std::size_t> index_by_id(std::span<const EmbeddingRecord> records);

}  // namespace driftmap
