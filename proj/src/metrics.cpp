#include "driftmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "driftmap/clustering.hpp"
#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

struct ClusterSummary {
    std::vector<std::size_t> ids;        // non-empty cluster ids, ascending
    std::vector<std::size_t> sizes;      // parallel to ids
    std::vector<std::size_t> slot;       // cluster id -> position in ids (or npos)
    Matrix centroids;                    // parallel to ids
};

constexpr std::size_t npos = static_cast<std::size_t>(-1);

ClusterSummary summarize(const ClusteringView& view) {
    const auto& pts = view.points;
    if (view.assignments.size() != pts.rows()) {
        throw InvalidArgumentError("assignment count differs from point count");
    }
    std::vector<std::size_t> counts(view.k, 0);
    for (std::size_t a : view.assignments) {
        if (a >= view.k) throw InvalidArgumentError("cluster index out of range");
        ++counts[a];
    }
    ClusterSummary s;
    s.slot.assign(view.k, npos);
    for (std::size_t c = 0; c < view.k; ++c) {
        if (counts[c] == 0) continue;
        s.slot[c] = s.ids.size();
        s.ids.push_back(c);
        s.sizes.push_back(counts[c]);
    }
    if (s.ids.size() < 2) throw InvalidArgumentError("metric needs at least 2 non-empty clusters");
    s.centroids = Matrix(s.ids.size(), pts.cols(), 0.0);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        auto dst = s.centroids.row(s.slot[view.assignments[i]]);
        auto src = pts.row(i);
        for (std::size_t d = 0; d < src.size(); ++d) dst[d] += src[d];
    }
    for (std::size_t j = 0; j < s.ids.size(); ++j) {
        for (double& v : s.centroids.row(j)) v /= static_cast<double>(s.sizes[j]);
    }
    return s;
}

}  // namespace

double davies_bouldin(const ClusteringView& view) {
    const auto s = summarize(view);
    const std::size_t K = s.ids.size();
    std::vector<double> scatter(K, 0.0);
    for (std::size_t i = 0; i < view.points.rows(); ++i) {
        const auto j = s.slot[view.assignments[i]];
        scatter[j] += euclidean_distance(view.points.row(i), s.centroids.row(j));
    }
    for (std::size_t j = 0; j < K; ++j) scatter[j] /= static_cast<double>(s.sizes[j]);

    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            if (i == j) continue;
            const double sep = euclidean_distance(s.centroids.row(i), s.centroids.row(j));
            if (sep == 0.0) {
                throw InvalidArgumentError("Davies-Bouldin undefined: clusters " +
                                           std::to_string(s.ids[i]) + " and " +
                                           std::to_string(s.ids[j]) + " share a centroid");
            }
            worst = std::max(worst, (scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    return total / static_cast<double>(K);
}

double silhouette(const ClusteringView& view) {
    const auto s = summarize(view);
    const std::size_t n = view.points.rows();
    const std::size_t K = s.ids.size();
    std::vector<double> sums(K);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = s.slot[view.assignments[i]];
        if (s.sizes[own] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[s.slot[view.assignments[j]]] += euclidean_distance(view.points.row(i), view.points.row(j));
        }
        const double a = sums[own] / static_cast<double>(s.sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < K; ++c) {
            if (c != own) b = std::min(b, sums[c] / static_cast<double>(s.sizes[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

double calinski_harabasz(const ClusteringView& view) {
    const auto s = summarize(view);
    const std::size_t n = view.points.rows();
    const std::size_t K = s.ids.size();
    // n == K means all singletons: zero within-dispersion, reported as +inf below.
    if (n <= K) return std::numeric_limits<double>::infinity();
    Vector overall(view.points.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = view.points.row(i);
        for (std::size_t d = 0; d < overall.size(); ++d) overall[d] += x[d];
    }
    for (double& v : overall) v /= static_cast<double>(n);

    double between = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        between += static_cast<double>(s.sizes[j]) * squared_distance(s.centroids.row(j), overall);
    }
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        within += squared_distance(view.points.row(i), s.centroids.row(s.slot[view.assignments[i]]));
    }
    if (within == 0.0) return std::numeric_limits<double>::infinity();
    return (between / static_cast<double>(K - 1)) / (within / static_cast<double>(n - K));
}

Coverage concept_coverage(std::span<const std::size_t> assignments,
                          std::span<const std::string> labels, const std::string& target) {
    if (assignments.size() != labels.size()) {
        throw InvalidArgumentError("assignment and label lists differ in length");
    }
    std::map<std::size_t, std::size_t> hits;
    std::size_t total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != target) continue;
        ++total;
        ++hits[assignments[i]];
    }
    if (total == 0) throw InvalidArgumentError("label '" + target + "' does not occur");
    Coverage best;
    std::size_t best_hits = 0;
    for (const auto& [cluster, count] : hits) {  // ascending cluster id
        if (count > best_hits) {
            best_hits = count;
            best.cluster = cluster;
        }
    }
    best.fraction = static_cast<double>(best_hits) / static_cast<double>(total);
    return best;
}

}  // namespace driftmap
