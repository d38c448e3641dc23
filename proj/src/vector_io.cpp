#include "driftmap/vector_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary embedding I/O assumes a little-endian host");

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    std::array<char, sizeof(T)> bytes{};
    if (!in.read(bytes.data(), bytes.size())) {
        throw FormatError(std::string("truncated binary embedding file while reading ") + what);
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void validate_record(const EmbeddingRecord& r, std::size_t dim,
                     std::unordered_set<std::string>& seen) {
    if (r.id.empty()) throw FormatError("embedding record with empty id");
    if (!seen.insert(r.id).second) throw FormatError("duplicate embedding id '" + r.id + "'");
    if (r.vector.size() != dim) {
        throw DimensionMismatchError("record '" + r.id + "' has dimension " +
                                     std::to_string(r.vector.size()) + ", expected " +
                                     std::to_string(dim));
    }
    for (double v : r.vector) {
        if (!std::isfinite(v)) throw FormatError("record '" + r.id + "' has a non-finite component");
    }
}

Dataset read_jsonl(std::istream& in, const std::filesystem::path& path) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        EmbeddingRecord rec;
        try {
            const json j = json::parse(line);
            rec.id = j.at("id").get<std::string>();
            const auto& vec = j.at("vector");
            if (!vec.is_array()) throw FormatError("'vector' is not an array");
            rec.vector.reserve(vec.size());
            for (const auto& v : vec) {
                if (!v.is_number()) {
                    throw FormatError("record '" + rec.id + "' has a non-numeric component");
                }
                rec.vector.push_back(v.get<double>());
            }
            if (auto it = j.find("timestamp"); it != j.end() && !it->is_null()) {
                rec.timestamp = it->get<std::int64_t>();
            }
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        ds.records.push_back(std::move(rec));
    }
    if (ds.records.empty()) throw EmptyDatasetError(path.string() + ": no embedding records");
    ds.dim = ds.records.front().vector.size();
    if (ds.dim == 0) throw FormatError(path.string() + ": zero-dimensional vectors");
    std::unordered_set<std::string> seen;
    for (const auto& r : ds.records) validate_record(r, ds.dim, seen);
    return ds;
}

Dataset read_binary(std::istream& in, const std::filesystem::path& path) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    const auto version = get_le<std::uint16_t>(in, "version");
    if (version != kBinaryVersion) {
        throw UnsupportedVersionError(path.string() + ": binary format version " +
                                      std::to_string(version) + " is not supported");
    }
    Dataset ds;
    ds.dim = get_le<std::uint32_t>(in, "dim");
    const auto count = get_le<std::uint64_t>(in, "count");
    if (count == 0) throw EmptyDatasetError(path.string() + ": header declares zero records");
    if (ds.dim == 0) throw FormatError(path.string() + ": zero-dimensional vectors");
    std::unordered_set<std::string> seen;
    ds.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddingRecord rec;
        const auto id_len = get_le<std::uint16_t>(in, "id length");
        rec.id.resize(id_len);
        if (id_len > 0 && !in.read(rec.id.data(), id_len)) {
            throw FormatError(path.string() + ": truncated id of record " + std::to_string(i));
        }
        rec.vector.resize(ds.dim);
        for (auto& v : rec.vector) v = static_cast<double>(get_le<float>(in, "vector"));
        validate_record(rec, ds.dim, seen);
        ds.records.push_back(std::move(rec));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after " + std::to_string(count) +
                          " records");
    }
    return ds;
}

std::size_t common_dim(std::span<const EmbeddingRecord> records) {
    if (records.empty()) throw EmptyDatasetError("cannot write an empty record list");
    const std::size_t dim = records.front().vector.size();
    if (dim == 0) throw FormatError("cannot write zero-dimensional vectors");
    std::unordered_set<std::string> seen;
    for (const auto& r : records) validate_record(r, dim, seen);
    return dim;
}

}  // namespace

Matrix Batch::points() const {
    Matrix m;
    for (const auto& r : records) m.append_row(r.vector);
    return m;
}

Dataset read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embeddings file " + path.string());
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    const auto got = in.gcount();
    in.clear();
    in.seekg(0);
    if (got == 0) throw EmptyDatasetError(path.string() + ": empty file");
    if (got == 4 && std::memcmp(head.data(), kBinaryMagic, 4) == 0) return read_binary(in, path);
    return read_jsonl(in, path);
}

void write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path,
                      EmbeddingFormat format) {
    const std::size_t dim = common_dim(records);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    if (format == EmbeddingFormat::jsonl) {
        for (const auto& r : records) {
            json j = {{"id", r.id}, {"vector", r.vector}};
            if (r.timestamp) j["timestamp"] = *r.timestamp;
            out << j.dump() << '\n';
        }
    } else {
        if (dim > std::numeric_limits<std::uint32_t>::max()) throw FormatError("dimension too large");
        out.write(kBinaryMagic, 4);
        put_le<std::uint16_t>(out, kBinaryVersion);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
        put_le<std::uint64_t>(out, records.size());
        for (const auto& r : records) {
            if (r.id.size() > std::numeric_limits<std::uint16_t>::max()) {
                throw FormatError("id '" + r.id.substr(0, 32) + "...' exceeds 65535 bytes");
            }
            put_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.id.size()));
            out.write(r.id.data(), static_cast<std::streamsize>(r.id.size()));
            for (double v : r.vector) {
                const auto f = static_cast<float>(v);
                if (!std::isfinite(f)) {
                    throw FormatError("record '" + r.id + "' overflows single precision");
                }
                put_le<float>(out, f);
            }
        }
    }
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<PostRecord> read_posts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open posts file " + path.string());
    std::vector<PostRecord> posts;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        PostRecord p;
        try {
            const json j = json::parse(line);
            p.id = j.at("id").get<std::string>();
            p.text = j.at("text").get<std::string>();
            if (auto it = j.find("timestamp"); it != j.end() && !it->is_null()) {
                p.timestamp = it->get<std::int64_t>();
            }
            if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
                p.label = it->get<std::string>();
            }
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (p.id.empty()) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty id");
        if (p.text.empty()) throw FormatError("post '" + p.id + "' has empty text");
        if (!seen.insert(p.id).second) throw FormatError("duplicate post id '" + p.id + "'");
        posts.push_back(std::move(p));
    }
    return posts;
}

void write_posts(std::span<const PostRecord> posts, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& p : posts) {
        json j = {{"id", p.id}, {"text", p.text}};
        if (p.timestamp) j["timestamp"] = *p.timestamp;
        if (p.label) j["label"] = *p.label;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void attach_timestamps(std::vector<EmbeddingRecord>& records, std::span<const PostRecord> posts) {
    std::unordered_map<std::string, std::int64_t> ts;
    for (const auto& p : posts) {
        if (p.timestamp) ts.emplace(p.id, *p.timestamp);
    }
    for (auto& r : records) {
        if (auto it = ts.find(r.id); it != ts.end()) r.timestamp = it->second;
    }
}

std::vector<Batch> batch_stream(std::span<const EmbeddingRecord> records, const Batching& batching) {
    std::vector<Batch> batches;
    if (batching.mode == BatchingMode::fixed_size) {
        if (batching.value < 2) throw InvalidArgumentError("batch size must be at least 2");
        const auto size = static_cast<std::size_t>(batching.value);
        for (std::size_t start = 0; start < records.size(); start += size) {
            Batch b;
            b.index = batches.size() + 1;
            const auto stop = std::min(records.size(), start + size);
            b.records.assign(records.begin() + static_cast<std::ptrdiff_t>(start),
                             records.begin() + static_cast<std::ptrdiff_t>(stop));
            batches.push_back(std::move(b));
        }
        return batches;
    }

    if (batching.value <= 0) throw InvalidArgumentError("timestamp window must be positive");
    std::int64_t origin = std::numeric_limits<std::int64_t>::max();
    for (const auto& r : records) {
        if (!r.timestamp) {
            throw FormatError("record '" + r.id + "' has no timestamp (required for window batching)");
        }
        origin = std::min(origin, *r.timestamp);
    }
    std::int64_t current_window = -1;
    for (const auto& r : records) {
        const std::int64_t window = (*r.timestamp - origin) / batching.value;
        if (window < current_window) {
            throw FormatError("record '" + r.id + "' is out of timestamp order");
        }
        if (window != current_window) {
            batches.push_back(Batch{batches.size() + 1, {}});
            current_window = window;
        }
        batches.back().records.push_back(r);
    }
    return batches;
}

DatasetManifest make_manifest(const Dataset& dataset, const Batching& batching) {
    return {dataset.dim, dataset.records.size(), batching};
}

std::unordered_map<std::string, std::size_t> index_by_id(std::span<const EmbeddingRecord> records) {
    std::unordered_map<std::string, std::size_t> idx;
    idx.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) idx.emplace(records[i].id, i);
    return idx;
}

}  // namespace driftmap
