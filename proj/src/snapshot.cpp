#include "driftmap/snapshot.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row_vector(i));
    return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols) {
    Matrix m(0, cols);
    for (const auto& r : j) m.append_row(r.get<Vector>());
    return m;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

json params_to_json(const EngineParams& p) {
    return {{"k0", p.k0},
            {"lo", p.lo},
            {"hi", p.hi},
            {"lambda", p.lambda},
            {"delta_frac", p.delta_frac},
            {"purview_filter", p.purview_filter},
            {"metric", "euclidean"},
            {"seed", p.seed}};
}

EngineParams params_from_json(const json& j) {
    EngineParams p;
    p.k0 = j.at("k0").get<std::size_t>();
    p.lo = j.at("lo").get<double>();
    p.hi = j.at("hi").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.delta_frac = j.at("delta_frac").get<double>();
    p.purview_filter = j.at("purview_filter").get<bool>();
    if (j.at("metric").get<std::string>() != "euclidean") {
        throw FormatError("unsupported metric '" + j.at("metric").get<std::string>() + "'");
    }
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

json outcome_to_json(const BatchOutcome& o) {
    json windows = json::array();
    for (const auto& w : o.windows) windows.push_back({{"l", w.l}, {"u", w.u}, {"lower", w.lower}, {"upper", w.upper}});
    json splits = json::array();
    for (const auto& s : o.splits) splits.push_back({{"root", s.root}, {"child", s.child}});
    json assignments = json::array();
    for (const auto& [id, c] : o.assignments) assignments.push_back({id, c});
    return {{"batch", o.batch},
            {"batch_size", o.batch_size},
            {"k_before", o.k_before},
            {"k_after", o.k_after},
            {"outlier_counts", o.outlier_counts},
            {"windows", windows},
            {"splits", splits},
            {"assignments", assignments},
            {"history_reassigned", o.history_reassigned},
            {"centroids_at_entry", matrix_to_json(o.centroids_at_entry)}};
}

BatchOutcome outcome_from_json(const json& j) {
    BatchOutcome o;
    o.batch = j.at("batch").get<std::size_t>();
    o.batch_size = j.at("batch_size").get<std::size_t>();
    o.k_before = j.at("k_before").get<std::size_t>();
    o.k_after = j.at("k_after").get<std::size_t>();
    o.outlier_counts = j.at("outlier_counts").get<std::vector<std::size_t>>();
    for (const auto& w : j.at("windows")) {
        o.windows.push_back({w.at("l").get<double>(), w.at("u").get<double>(), w.at("lower").get<double>(),
                             w.at("upper").get<double>()});
    }
    for (const auto& s : j.at("splits")) {
        o.splits.push_back({s.at("root").get<std::size_t>(), s.at("child").get<std::size_t>()});
    }
    for (const auto& a : j.at("assignments")) {
        o.assignments.emplace_back(a.at(0).get<std::string>(), a.at(1).get<std::size_t>());
    }
    o.history_reassigned = j.at("history_reassigned").get<std::size_t>();
    const auto& cents = j.at("centroids_at_entry");
    const std::size_t cols = cents.empty() ? 0 : cents.at(0).size();
    if (!cents.empty()) o.centroids_at_entry = matrix_from_json(cents, cols);
    return o;
}

json snapshot_document(const ConceptModel& model, const SnapshotOptions& options) {
    model.validate();
    json lineage = json::array();
    for (const auto& e : model.lineage) {
        lineage.push_back({{"root", e.root ? json(*e.root) : json(nullptr)},
                           {"child", e.child},
                           {"batch", e.created_at_batch}});
    }
    json history = {{"ids", model.history_ids},
                    {"assignments", model.history_assignments},
                    {"batches", model.history_batches}};
    if (options.storage == HistoryStorage::reference) {
        if (options.dataset.empty()) throw InvalidArgumentError("reference snapshots need a dataset path");
        history["mode"] = "reference";
        history["dataset"] = options.dataset.string();
    } else {
        history["mode"] = "inline";
        history["vectors"] = matrix_to_json(model.history_points);
    }
    json doc = {{"schema_version", kSnapshotSchemaVersion},
                {"params", params_to_json(model.params)},
                {"dim", model.dim},
                {"k", model.k()},
                {"centroids", matrix_to_json(model.centroids)},
                {"lineage", lineage},
                {"batch_counter", model.batch_counter},
                {"history", history}};
    doc["digest"] = sha256_hex(doc.dump());
    return doc;
}

void save_model(const ConceptModel& model, const std::filesystem::path& path,
                const SnapshotOptions& options) {
    const json doc = snapshot_document(model, options);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

ConceptModel load_model(const std::filesystem::path& path, const Dataset* dataset) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw FormatError(path.string() + ": snapshot is not a JSON object");
    const auto& version_field = doc["schema_version"];
    const int version = version_field.is_number_integer() ? version_field.get<int>() : -1;
    if (version != kSnapshotSchemaVersion) {
        throw UnsupportedVersionError(path.string() + ": snapshot schema version " +
                                      std::to_string(version) + " is not supported");
    }
    if (!doc.contains("digest") || !doc["digest"].is_string()) {
        throw DigestMismatchError(path.string() + ": snapshot carries no digest");
    }
    const std::string stored = doc["digest"].get<std::string>();
    doc.erase("digest");
    if (sha256_hex(doc.dump()) != stored) {
        throw DigestMismatchError(path.string() + ": digest mismatch (file altered or corrupt)");
    }

    ConceptModel m;
    try {
        m.params = params_from_json(doc.at("params"));
        m.dim = doc.at("dim").get<std::size_t>();
        if (dataset && dataset->dim != m.dim) {
            throw DimensionMismatchError("dataset dimension " + std::to_string(dataset->dim) +
                                         " does not match snapshot dimension " + std::to_string(m.dim));
        }
        m.centroids = matrix_from_json(doc.at("centroids"), m.dim);
        if (m.centroids.rows() != doc.at("k").get<std::size_t>()) {
            throw FormatError("centroid count differs from k");
        }
        for (const auto& e : doc.at("lineage")) {
            LineageEntry entry;
            if (!e.at("root").is_null()) entry.root = e.at("root").get<std::size_t>();
            entry.child = e.at("child").get<std::size_t>();
            entry.created_at_batch = e.at("batch").get<std::size_t>();
            m.lineage.push_back(entry);
        }
        m.batch_counter = doc.at("batch_counter").get<std::size_t>();

        const auto& h = doc.at("history");
        m.history_ids = h.at("ids").get<std::vector<std::string>>();
        m.history_assignments = h.at("assignments").get<std::vector<std::size_t>>();
        m.history_batches = h.at("batches").get<std::vector<std::size_t>>();
        const auto mode = h.at("mode").get<std::string>();
        if (mode == "inline") {
            m.history_points = matrix_from_json(h.at("vectors"), m.dim);
        } else if (mode == "reference") {
            Dataset loaded;
            if (!dataset) {
                const std::filesystem::path ref = h.at("dataset").get<std::string>();
                if (!std::filesystem::exists(ref)) {
                    throw MissingDependencyError(path.string() + ": referenced dataset " + ref.string() +
                                                 " is missing");
                }
                loaded = read_embeddings(ref);
                dataset = &loaded;
            }
            if (dataset->dim != m.dim) {
                throw DimensionMismatchError("dataset dimension " + std::to_string(dataset->dim) +
                                             " does not match snapshot dimension " + std::to_string(m.dim));
            }
            const auto idx = index_by_id(dataset->records);
            m.history_points = Matrix(0, m.dim);
            for (const auto& id : m.history_ids) {
                auto it = idx.find(id);
                if (it == idx.end()) {
                    throw MissingDependencyError("record '" + id + "' is not in the supplied dataset");
                }
                m.history_points.append_row(dataset->records[it->second].vector);
            }
        } else {
            throw FormatError("unknown history mode '" + mode + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    m.validate();
    return m;
}

}  // namespace driftmap
