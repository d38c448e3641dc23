#include "driftmap/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>

#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

using nlohmann::json;

std::string fixed(double v, int precision) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string cell(const std::optional<double>& v, int precision) {
    return v ? fixed(*v, precision) : "n/a";
}

json number_or_marker(const std::optional<double>& v) {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "Infinity" : "-Infinity";
    return *v;
}

std::string join_terms(const std::vector<TermRow>& rows) {
    std::string out;
    for (const auto& r : rows) {
        if (!out.empty()) out += ", ";
        out += r.term;
    }
    return out;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()), 0);
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            os << (c ? " | " : "") << std::left << std::setw(static_cast<int>(width[c])) << rows[i][c];
        }
        os << '\n';
        if (i == 0) {
            for (std::size_t c = 0; c < width.size(); ++c) os << (c ? "-+-" : "") << std::string(width[c], '-');
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace

std::string render_comparison_text(const ComparisonReport& report) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Method", "Davies-Bouldin", "Silhouette", "Calinski-Harabasz", "Clusters"};
    for (const auto& l : report.coverage_labels) header.push_back(l + " Coverage");
    rows.push_back(header);
    for (const auto& r : report.rows) {
        std::vector<std::string> line = {r.method};
        if (r.error) {
            line.push_back("error: " + *r.error);
            rows.push_back(line);
            continue;
        }
        line.push_back(cell(r.dbi, 2));
        line.push_back(cell(r.sc, 2));
        line.push_back(cell(r.chi, 2));
        line.push_back(std::to_string(r.clusters));
        for (std::size_t i = 0; i < report.coverage_labels.size(); ++i) {
            if (!report.labels_available || i >= r.coverage.size() || !r.coverage[i]) {
                line.push_back("Not Applicable");
            } else {
                line.push_back(fixed(100.0 * r.coverage[i]->fraction, 2) + "% (c" +
                               std::to_string(r.coverage[i]->cluster) + ")");
            }
        }
        rows.push_back(line);
    }
    return render_table(rows);
}

json comparison_to_json(const ComparisonReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row = {{"method", r.method}};
        if (r.error) {
            row["error"] = *r.error;
            rows.push_back(row);
            continue;
        }
        row["davies_bouldin"] = number_or_marker(r.dbi);
        row["silhouette"] = number_or_marker(r.sc);
        row["calinski_harabasz"] = number_or_marker(r.chi);
        row["clusters"] = r.clusters;
        json cov = json::object();
        for (std::size_t i = 0; i < report.coverage_labels.size(); ++i) {
            const auto& label = report.coverage_labels[i];
            if (!report.labels_available || i >= r.coverage.size() || !r.coverage[i]) {
                cov[label] = "not-applicable";
            } else {
                cov[label] = {{"fraction", r.coverage[i]->fraction}, {"cluster", r.coverage[i]->cluster}};
            }
        }
        row["coverage"] = cov;
        rows.push_back(row);
    }
    return {{"labels_available", report.labels_available},
            {"coverage_labels", report.coverage_labels},
            {"rows", rows}};
}

std::string render_terms_text(const std::vector<ConceptTerms>& concepts) {
    std::vector<std::vector<std::string>> rows = {{"Concept", "Unigrams", "Bigrams/Trigrams"}};
    for (const auto& c : concepts) {
        std::vector<TermRow> longer = c.bigrams;
        longer.insert(longer.end(), c.trigrams.begin(), c.trigrams.end());
        std::stable_sort(longer.begin(), longer.end(),
                         [](const TermRow& a, const TermRow& b) { return a.tfidf > b.tfidf; });
        longer.resize(std::min(longer.size(), std::max(c.bigrams.size(), c.trigrams.size())));
        rows.push_back({"C" + std::to_string(c.concept_id), join_terms(c.unigrams), join_terms(longer)});
    }
    return render_table(rows);
}

json terms_to_json(const std::vector<ConceptTerms>& concepts) {
    auto rows_json = [](const std::vector<TermRow>& rows) {
        json out = json::array();
        for (const auto& r : rows) out.push_back({{"term", r.term}, {"tfidf", r.tfidf}});
        return out;
    };
    json out = json::array();
    for (const auto& c : concepts) {
        out.push_back({{"concept", c.concept_id},
                       {"unigrams", rows_json(c.unigrams)},
                       {"bigrams", rows_json(c.bigrams)},
                       {"trigrams", rows_json(c.trigrams)}});
    }
    return out;
}

std::vector<std::string> lineage_edges(const ConceptModel& model) {
    std::vector<std::string> edges;
    for (const auto& e : model.lineage) {
        if (!e.root) continue;
        edges.push_back(std::to_string(*e.root) + " -> " + std::to_string(e.child) + " @ " +
                        std::to_string(e.created_at_batch));
    }
    return edges;
}

Matrix pca_project(const Matrix& points, std::size_t components) {
    const auto n = static_cast<Eigen::Index>(points.rows());
    const auto dim = static_cast<Eigen::Index>(points.cols());
    if (n == 0) throw InvalidArgumentError("projection of an empty point set");
    if (components == 0 || static_cast<Eigen::Index>(components) > dim) {
        throw InvalidArgumentError("projection width must lie in [1, dim]");
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> x(points.data().data(), n, dim);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // eigenvalues ascend; take the trailing columns in reverse
    Eigen::MatrixXd axes(dim, static_cast<Eigen::Index>(components));
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(components); ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(dim - 1 - c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        axes.col(c) = v;
    }
    const Eigen::MatrixXd proj = centered * axes;
    Matrix out(points.rows(), components);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(components); ++c) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = proj(i, c);
        }
    }
    return out;
}

}  // namespace driftmap
