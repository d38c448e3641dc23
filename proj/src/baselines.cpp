#include "driftmap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "driftmap/clustering.hpp"
#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

double log_sum_exp(std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::size_t count_nonempty(const ClusteringView& view) {
    std::set<std::size_t> used(view.assignments.begin(), view.assignments.end());
    return used.size();
}

}  // namespace

ClusteringView static_kmeans(const Matrix& points, std::size_t k, std::uint64_t seed) {
    KMeansConfig cfg;
    cfg.k = k;
    cfg.seed = seed;
    auto fit = kmeans_fit(points, cfg);
    return {points, std::move(fit.assignments), k};
}

GmmResult gaussian_mixture(const Matrix& points, const GmmConfig& config) {
    const std::size_t n = points.rows();
    const std::size_t k = config.k;
    const std::size_t dim = points.cols();
    if (k == 0) throw InvalidArgumentError("mixture needs k >= 1");
    if (n < k) throw InvalidArgumentError("mixture with more components than points");
    if (!(config.reg > 0.0)) throw InvalidArgumentError("variance floor must be positive");

    GmmResult res;
    res.means = kmeans_plus_plus(points, k, config.seed);
    Vector global_mean(dim, 0.0), global_var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) global_mean[d] += points(i, d);
    }
    for (double& m : global_mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double z = points(i, d) - global_mean[d];
            global_var[d] += z * z;
        }
    }
    res.variances = Matrix(k, dim);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t d = 0; d < dim; ++d) {
            res.variances(j, d) = std::max(global_var[d] / static_cast<double>(n), config.reg);
        }
    }
    res.weights.assign(k, 1.0 / static_cast<double>(k));
    res.responsibilities = Matrix(n, k);

    const double log_2pi = std::log(2.0 * std::numbers::pi);
    std::vector<double> logp(k);
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        // E-step
        std::vector<double> log_norm(k);
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += std::log(res.variances(j, d));
            log_norm[j] = std::log(res.weights[j]) - 0.5 * (static_cast<double>(dim) * log_2pi + s);
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                double q = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double z = points(i, d) - res.means(j, d);
                    q += z * z / res.variances(j, d);
                }
                logp[j] = log_norm[j] - 0.5 * q;
            }
            const double lse = log_sum_exp(logp);
            ll += lse;
            for (std::size_t j = 0; j < k; ++j) res.responsibilities(i, j) = std::exp(logp[j] - lse);
        }
        res.log_likelihood_trace.push_back(ll);
        if (it > 0 && ll - previous < config.tolerance) break;
        previous = ll;

        // M-step. Variances are clamped at the floor, which keeps each step
        // a constrained maximiser of the expected complete log-likelihood.
        for (std::size_t j = 0; j < k; ++j) {
            double nk = 0.0;
            for (std::size_t i = 0; i < n; ++i) nk += res.responsibilities(i, j);
            res.weights[j] = nk / static_cast<double>(n);
            if (nk < 1e-300) continue;  // collapsed component keeps its shape
            for (std::size_t d = 0; d < dim; ++d) {
                double m = 0.0;
                for (std::size_t i = 0; i < n; ++i) m += res.responsibilities(i, j) * points(i, d);
                m /= nk;
                double v = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double z = points(i, d) - m;
                    v += res.responsibilities(i, j) * z * z;
                }
                res.means(j, d) = m;
                res.variances(j, d) = std::max(v / nk, config.reg);
            }
        }
    }

    res.view.points = points;
    res.view.k = k;
    res.view.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = res.responsibilities.row(i);
        res.view.assignments[i] =
            static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return res;
}

MeanShiftResult mean_shift(const Matrix& points, const MeanShiftConfig& config) {
    if (!(config.bandwidth > 0.0)) throw InvalidArgumentError("bandwidth must be positive");
    if (points.empty()) throw InvalidArgumentError("mean shift on an empty point set");
    const double radius = config.merge_radius.value_or(config.bandwidth / 2.0);
    if (!(radius > 0.0)) throw InvalidArgumentError("merge radius must be positive");

    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    const double h2 = config.bandwidth * config.bandwidth;
    const double stop = 1e-4 * config.bandwidth;

    MeanShiftResult res;
    res.modes = Matrix(0, dim);
    Vector y(dim), next(dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto start = points.row(i);
        y.assign(start.begin(), start.end());
        for (std::size_t it = 0; it < config.max_iterations; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            std::size_t count = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (squared_distance(points.row(j), y) <= h2) {
                    auto x = points.row(j);
                    for (std::size_t d = 0; d < dim; ++d) next[d] += x[d];
                    ++count;
                }
            }
            // count >= 1: the mean of a ball's members always has one within the ball
            for (double& v : next) v /= static_cast<double>(count);
            const double moved = euclidean_distance(next, y);
            std::swap(y, next);
            if (moved < stop) break;
        }
        bool merged = false;
        for (std::size_t m = 0; m < res.modes.rows(); ++m) {
            if (euclidean_distance(res.modes.row(m), y) <= radius) {
                merged = true;
                break;
            }
        }
        if (!merged) res.modes.append_row(y);
    }

    res.view.points = points;
    res.view.k = res.modes.rows();
    res.view.assignments = kmeans_assign(points, res.modes);
    return res;
}

double median_heuristic_bandwidth(const Matrix& points) {
    std::vector<double> d;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = i + 1; j < points.rows(); ++j) {
            d.push_back(euclidean_distance(points.row(i), points.row(j)));
        }
    }
    if (d.empty()) throw InvalidArgumentError("median heuristic needs at least 2 points");
    return percentile(d, 50.0);
}

std::string method_name(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::kmeans: return "kmeans";
        case BaselineMethod::gmm: return "gmm";
        case BaselineMethod::meanshift: return "meanshift";
    }
    return "unknown";
}

BaselineMethod parse_method(const std::string& name) {
    if (name == "kmeans") return BaselineMethod::kmeans;
    if (name == "gmm" || name == "gaussian") return BaselineMethod::gmm;
    if (name == "meanshift" || name == "mean-shift") return BaselineMethod::meanshift;
    throw InvalidArgumentError("unknown method '" + name + "'");
}

ReportRow score_clustering(std::string method, const ClusteringView& view,
                           const std::vector<std::string>* labels,
                           const std::vector<std::string>& coverage_labels) {
    ReportRow row;
    row.method = std::move(method);
    row.clusters = count_nonempty(view);
    auto attempt = [&](auto metric) -> std::optional<double> {
        try {
            return metric(view);
        } catch (const InvalidArgumentError&) {
            return std::nullopt;
        }
    };
    row.dbi = attempt(davies_bouldin);
    row.sc = attempt(silhouette);
    row.chi = attempt(calinski_harabasz);
    if (labels) {
        for (const auto& label : coverage_labels) {
            if (std::find(labels->begin(), labels->end(), label) == labels->end()) {
                row.coverage.emplace_back(std::nullopt);
            } else {
                row.coverage.emplace_back(concept_coverage(view.assignments, *labels, label));
            }
        }
    }
    return row;
}

ComparisonReport compare_report(const Matrix& points, const std::vector<std::string>* labels,
                                const std::optional<ExternalClustering>& engine,
                                const CompareOptions& options) {
    if (points.empty()) throw EmptyDatasetError("comparison on an empty dataset");
    if (labels && labels->size() != points.rows()) {
        throw InvalidArgumentError("label count differs from point count");
    }
    ComparisonReport report;
    report.coverage_labels = options.coverage_labels;
    report.labels_available = labels != nullptr;

    auto guarded = [&](const std::string& name, auto&& cluster) {
        try {
            report.rows.push_back(score_clustering(name, cluster(), labels, options.coverage_labels));
        } catch (const Error& e) {
            ReportRow row;
            row.method = name;
            row.error = e.what();
            report.rows.push_back(std::move(row));
        }
    };

    if (engine) {
        guarded(engine->name, [&] { return ClusteringView{points, engine->assignments, engine->k}; });
    }
    for (auto m : options.methods) {
        switch (m) {
            case BaselineMethod::kmeans:
                guarded("kmeans", [&] { return static_kmeans(points, options.k, options.seed); });
                break;
            case BaselineMethod::gmm:
                guarded("gmm", [&] {
                    GmmConfig cfg = options.gmm;
                    cfg.k = options.k;
                    cfg.seed = options.seed;
                    return gaussian_mixture(points, cfg).view;
                });
                break;
            case BaselineMethod::meanshift:
                guarded("meanshift", [&] { return mean_shift(points, options.meanshift).view; });
                break;
        }
    }
    return report;
}

}  // namespace driftmap
