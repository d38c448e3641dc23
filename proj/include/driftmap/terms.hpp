#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace driftmap {

struct CleanText {
    std::string id;
    std::vector<std::string> tokens;  // lowercase, [a-z0-9'] only, never empty
};

// Link -> title of the page it points to.
using TitleMap = std::unordered_map<std::string, std::string>;

// Lowercases, swaps links for their titles (or drops them), strips every
// character outside [a-z0-9'] and splits on whitespace.
CleanText preprocess(std::string_view text, const TitleMap& titles = {}, std::string id = {});

bool is_stopword(std::string_view word);

// Contiguous n-token windows, n in 1..3. Stopword unigrams are dropped;
// longer n-grams are dropped only when every word is a stopword.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n);

struct TermScore {
    std::string term;
    int n = 1;
    std::size_t concept_id = 0;
    double tfidf = 0.0;
};

struct TermIndex {
    std::vector<std::size_t> concepts;  // every concept that was scored, ascending
    std::vector<TermScore> scores;
};

// Each concept's posts form one document. Per n-gram size:
//   tf(t,c) = count(t in c) / total n-grams in c
//   idf(t)  = ln((1 + K) / (1 + df(t))) + 1
// where K is the number of concepts supplied and df counts concepts containing t.
TermIndex tfidf_by_concept(const std::map<std::size_t, std::vector<CleanText>>& posts_by_concept);

struct TermRow {
    std::string term;
    double tfidf = 0.0;
};

struct ConceptTerms {
    std::size_t concept_id = 0;
    std::vector<TermRow> unigrams;
    std::vector<TermRow> bigrams;
    std::vector<TermRow> trigrams;
};

// Top `per_size` terms for each n-gram size; ties break lexicographically.
ConceptTerms top_terms(const TermIndex& index, std::size_t concept_id, std::size_t per_size);

}  // namespace driftmap
