#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "driftmap/matrix.hpp"

namespace driftmap {

// Only Euclidean distance is implemented; the enum exists so snapshots and
// configs name the metric explicitly.
enum class Metric { euclidean };

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Linear-interpolation percentile: rank = p/100 * (n-1) over the sorted values.
double percentile(std::span<const double> values, double p);

enum class KMeansInit { plus_plus, provided_centroids };

struct KMeansConfig {
    std::size_t k = 2;
    std::size_t max_iterations = 300;
    double tolerance = 1e-6;  // on the largest centroid shift (Euclidean)
    std::uint64_t seed = 0;
    KMeansInit init = KMeansInit::plus_plus;
    Matrix initial_centroids;  // k rows when init == provided_centroids
};

struct KMeansResult {
    Matrix centroids;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::size_t iterations = 0;
    // Inertia of each assignment step, in order. Non-increasing by construction.
    std::vector<double> inertia_trace;
};

// Nearest centroid per point, ties to the lowest index.
std::vector<std::size_t> kmeans_assign(const Matrix& points, const Matrix& centroids);
std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids);

// k-means++ seeding; exposed for the baselines that reuse it.
Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, std::uint64_t seed);

// Lloyd iterations. An emptied cluster is re-seeded with the point farthest
// from its current centroid, so the returned model always has k non-empty
// clusters when the data has at least k distinct points.
KMeansResult kmeans_fit(const Matrix& points, const KMeansConfig& config);

// Column means of the selected rows, accumulated in index order.
Vector mean_of_rows(const Matrix& points, std::span<const std::size_t> rows);

}  // namespace driftmap
