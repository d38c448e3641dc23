#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftmap/matrix.hpp"

namespace driftmap {

struct ClusteringView {
    Matrix points;
    std::vector<std::size_t> assignments;
    std::size_t k = 0;
};

// Empty clusters are ignored by all three quality metrics.

// Mean over clusters of the worst (s_i + s_j) / d(c_i, c_j); lower is better.
double davies_bouldin(const ClusteringView& view);

// Mean silhouette over all points; singleton-cluster members contribute 0.
double silhouette(const ClusteringView& view);

// Between/within dispersion ratio. Returns +infinity when every cluster has
// zero within-cluster dispersion.
double calinski_harabasz(const ClusteringView& view);

struct Coverage {
    double fraction = 0.0;
    std::size_t cluster = 0;
};

// Largest share of `target` records captured by a single cluster (lowest id on ties).
Coverage concept_coverage(std::span<const std::size_t> assignments,
                          std::span<const std::string> labels, const std::string& target);

}  // namespace driftmap
