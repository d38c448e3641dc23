#include "driftmap/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

// Uniform double in [0,1) from the raw 64-bit engine output; avoids the
// implementation-defined std::uniform_real_distribution.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatchError("distance between vectors of dimension " +
                                     std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw InvalidArgumentError("percentile of an empty list");
    if (!(p >= 0.0 && p <= 100.0)) throw InvalidArgumentError("percentile p must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids) {
    if (centroids.empty()) throw InvalidArgumentError("no centroids to assign to");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double d = squared_distance(point, centroids.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

std::vector<std::size_t> kmeans_assign(const Matrix& points, const Matrix& centroids) {
    if (centroids.empty()) throw InvalidArgumentError("no centroids to assign to");
    if (!points.empty() && points.cols() != centroids.cols()) {
        throw DimensionMismatchError("points have dimension " + std::to_string(points.cols()) +
                                     ", centroids " + std::to_string(centroids.cols()));
    }
    std::vector<std::size_t> out(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) out[i] = nearest_centroid(points.row(i), centroids);
    return out;
}

Vector mean_of_rows(const Matrix& points, std::span<const std::size_t> rows) {
    Vector mean(points.cols(), 0.0);
    if (rows.empty()) return mean;
    for (std::size_t r : rows) {
        auto x = points.row(r);
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += x[d];
    }
    for (double& m : mean) m /= static_cast<double>(rows.size());
    return mean;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = points.rows();
    Matrix centroids(0, points.cols());
    const auto first = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n));
    centroids.append_row(points.row(first));

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));

    while (centroids.rows() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = unit_uniform(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            // every point coincides with a chosen centroid
            pick = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n));
        }
        centroids.append_row(points.row(pick));
        const auto c = centroids.row(centroids.rows() - 1);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), c));
    }
    return centroids;
}

KMeansResult kmeans_fit(const Matrix& points, const KMeansConfig& config) {
    const std::size_t n = points.rows();
    const std::size_t k = config.k;
    if (k == 0) throw InvalidArgumentError("k-means needs k >= 1");
    if (k > n) {
        throw InvalidArgumentError("k-means with k=" + std::to_string(k) + " on " +
                                   std::to_string(n) + " points");
    }
    if (config.tolerance < 0.0) throw InvalidArgumentError("k-means tolerance must be >= 0");
    if (config.max_iterations == 0) throw InvalidArgumentError("k-means needs max_iterations >= 1");

    KMeansResult result;
    if (config.init == KMeansInit::provided_centroids) {
        if (config.initial_centroids.rows() != k) {
            throw InvalidArgumentError("expected " + std::to_string(k) + " initial centroids, got " +
                                       std::to_string(config.initial_centroids.rows()));
        }
        if (config.initial_centroids.cols() != points.cols()) {
            throw DimensionMismatchError("initial centroids do not match point dimension");
        }
        result.centroids = config.initial_centroids;
    } else {
        result.centroids = kmeans_plus_plus(points, k, config.seed);
    }

    const std::size_t dim = points.cols();
    std::vector<std::size_t> assign(n);
    std::vector<double> d2(n);
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = nearest_centroid(points.row(i), result.centroids);
            d2[i] = squared_distance(points.row(i), result.centroids.row(assign[i]));
            inertia += d2[i];
        }
        result.inertia_trace.push_back(inertia);
        ++result.iterations;

        std::vector<std::size_t> counts(k, 0);
        for (std::size_t a : assign) ++counts[a];

        // Re-seed emptied clusters with the worst-served point, taken only
        // from clusters that keep at least one member.
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[assign[i]] > 1 && d2[i] > far_d) {
                    far_d = d2[i];
                    far = i;
                }
            }
            if (far == n) break;  // fewer than k distinct points: nothing to move
            --counts[assign[far]];
            assign[far] = j;
            counts[j] = 1;
            d2[far] = 0.0;
        }

        Matrix next(k, dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = next.row(assign[i]);
            auto src = points.row(i);
            for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
        }
        double shift = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            auto dst = next.row(j);
            if (counts[j] == 0) {
                auto old = result.centroids.row(j);
                std::copy(old.begin(), old.end(), dst.begin());
                continue;
            }
            for (double& v : dst) v /= static_cast<double>(counts[j]);
            shift = std::max(shift, euclidean_distance(dst, result.centroids.row(j)));
        }
        result.centroids = std::move(next);
        if (shift < config.tolerance) break;
    }

    result.assignments = kmeans_assign(points, result.centroids);
    result.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        result.inertia += squared_distance(points.row(i), result.centroids.row(result.assignments[i]));
    }
    return result;
}

}  // namespace driftmap
