#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftmap/matrix.hpp"
#include "driftmap/metrics.hpp"

namespace driftmap {

ClusteringView static_kmeans(const Matrix& points, std::size_t k, std::uint64_t seed);

struct GmmConfig {
    std::size_t k = 2;
    std::size_t max_iterations = 200;
    double reg = 1e-6;  // variance floor
    std::uint64_t seed = 0;
    double tolerance = 1e-5;  // stop when the log-likelihood gain drops below this
};

struct GmmResult {
    ClusteringView view;
    Matrix responsibilities;  // n x k
    Matrix means;
    Matrix variances;  // diagonal, k x D
    Vector weights;
    std::vector<double> log_likelihood_trace;  // one entry per E-step
};

// EM for a mixture of diagonal-covariance Gaussians.
GmmResult gaussian_mixture(const Matrix& points, const GmmConfig& config);

struct MeanShiftConfig {
    double bandwidth = 1.0;
    std::size_t max_iterations = 300;
    std::optional<double> merge_radius;  // defaults to bandwidth / 2
};

struct MeanShiftResult {
    ClusteringView view;
    Matrix modes;
};

// Flat-kernel mean shift started from every point.
MeanShiftResult mean_shift(const Matrix& points, const MeanShiftConfig& config);

// Median pairwise distance; a starting point for the bandwidth.
double median_heuristic_bandwidth(const Matrix& points);

enum class BaselineMethod { kmeans, gmm, meanshift };

std::string method_name(BaselineMethod m);
// Throws InvalidArgumentError for unknown names.
BaselineMethod parse_method(const std::string& name);

struct CompareOptions {
    std::vector<BaselineMethod> methods{BaselineMethod::kmeans, BaselineMethod::gmm,
                                        BaselineMethod::meanshift};
    std::size_t k = 9;  // clusters for k-means and GMM
    std::uint64_t seed = 0;
    GmmConfig gmm;
    MeanShiftConfig meanshift;
    std::vector<std::string> coverage_labels;
};

struct ReportRow {
    std::string method;
    std::optional<double> dbi;
    std::optional<double> sc;
    std::optional<double> chi;
    std::size_t clusters = 0;
    // One entry per requested label; empty when labels are absent or the label never occurs.
    std::vector<std::optional<Coverage>> coverage;
    std::optional<std::string> error;
};

struct ComparisonReport {
    std::vector<std::string> coverage_labels;
    bool labels_available = false;
    std::vector<ReportRow> rows;
};

struct ExternalClustering {
    std::string name;
    std::vector<std::size_t> assignments;
    std::size_t k = 0;
};

// Scores the engine's clustering (when given) and every requested baseline on
// the same points. A failing method yields a row with `error` set.
ComparisonReport compare_report(const Matrix& points, const std::vector<std::string>* labels,
                                const std::optional<ExternalClustering>& engine,
                                const CompareOptions& options);

// Scores one clustering; metric failures leave the metric empty.
ReportRow score_clustering(std::string method, const ClusteringView& view,
                           const std::vector<std::string>* labels,
                           const std::vector<std::string>& coverage_labels);

}  // namespace driftmap
