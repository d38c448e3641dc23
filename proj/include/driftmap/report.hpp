#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "driftmap/baselines.hpp"
#include "driftmap/engine.hpp"
#include "driftmap/terms.hpp"

namespace driftmap {

// Aligned text table with one row per method and one coverage column per label.
std::string render_comparison_text(const ComparisonReport& report);
nlohmann::json comparison_to_json(const ComparisonReport& report);

// Concept | Unigrams | Bigrams/Trigrams
std::string render_terms_text(const std::vector<ConceptTerms>& concepts);
nlohmann::json terms_to_json(const std::vector<ConceptTerms>& concepts);

// "root -> child @ batch" for every concept that has a root.
std::vector<std::string> lineage_edges(const ConceptModel& model);

// Projection of the rows onto the leading principal axes. Each axis is
// sign-fixed so its largest-magnitude loading is positive.
Matrix pca_project(const Matrix& points, std::size_t components = 2);

}  // namespace driftmap
