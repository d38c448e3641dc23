#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "driftmap/matrix.hpp"
#include "driftmap/vector_io.hpp"

namespace testsupport {

using driftmap::Matrix;
using driftmap::Vector;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("driftmap-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

struct Blobs {
    Matrix points;
    std::vector<std::size_t> labels;
    Matrix means;
};

// Isotropic Gaussian blobs; centers along distinct axes scaled by `spacing`.
inline Blobs make_blobs(std::size_t n_blobs, std::size_t per_blob, std::size_t dim, double sigma,
                        double spacing, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Blobs out;
    out.means = Matrix(n_blobs, dim, 0.0);
    for (std::size_t b = 0; b < n_blobs; ++b) out.means(b, b % dim) = spacing * static_cast<double>(b / dim + 1);
    out.points = Matrix(n_blobs * per_blob, dim);
    for (std::size_t b = 0; b < n_blobs; ++b) {
        for (std::size_t i = 0; i < per_blob; ++i) {
            const std::size_t r = b * per_blob + i;
            for (std::size_t j = 0; j < dim; ++j) out.points(r, j) = out.means(b, j) + noise(rng);
            out.labels.push_back(b);
        }
    }
    return out;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

inline std::vector<driftmap::EmbeddingRecord> records_from(const Matrix& m, const std::string& prefix = "r") {
    std::vector<driftmap::EmbeddingRecord> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.push_back({prefix + std::to_string(i), m.row_vector(i), {}});
    return out;
}

inline driftmap::Batch batch_from(const Matrix& m, std::size_t index, const std::string& prefix = "r") {
    return {index, records_from(m, prefix)};
}

}  // namespace testsupport
