#include "driftmap/terms.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

// Small English list; enough to keep bare function words out of reports.
constexpr std::array<std::string_view, 128> kStopwords = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "it's", "its", "itself",
    "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on",
    "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves", "don't"};

const std::regex& link_pattern() {
    static const std::regex re(R"((https?://|www\.)[^\s]+)", std::regex::icase);
    return re;
}

void clean_into(std::string_view text, std::vector<std::string>& tokens) {
    std::string current;
    for (char raw : text) {
        const auto ch = static_cast<unsigned char>(raw);
        char c = (ch < 0x80) ? static_cast<char>(std::tolower(ch)) : ' ';
        const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
        if (keep) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
}

}  // namespace

CleanText preprocess(std::string_view text, const TitleMap& titles, std::string id) {
    CleanText out;
    out.id = std::move(id);
    const std::string s(text);
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), link_pattern()); it != std::sregex_iterator();
         ++it) {
        const auto& m = *it;
        const auto pos = static_cast<std::size_t>(m.position());
        clean_into(std::string_view(s).substr(last, pos - last), out.tokens);
        if (auto t = titles.find(m.str()); t != titles.end()) clean_into(t->second, out.tokens);
        last = pos + static_cast<std::size_t>(m.length());
    }
    clean_into(std::string_view(s).substr(last), out.tokens);
    return out;
}

bool is_stopword(std::string_view word) {
    return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
    if (n < 1 || n > 3) throw InvalidArgumentError("n-gram size must be 1, 2 or 3");
    std::vector<std::string> out;
    const auto width = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
        bool all_stop = true;
        std::string gram;
        for (std::size_t j = i; j < i + width; ++j) {
            all_stop = all_stop && is_stopword(tokens[j]);
            if (j > i) gram.push_back(' ');
            gram += tokens[j];
        }
        if (!all_stop) out.push_back(std::move(gram));
    }
    return out;
}

TermIndex tfidf_by_concept(const std::map<std::size_t, std::vector<CleanText>>& posts_by_concept) {
    TermIndex index;
    std::size_t total_posts = 0;
    for (const auto& [c, posts] : posts_by_concept) {
        index.concepts.push_back(c);
        total_posts += posts.size();
    }
    if (total_posts == 0) throw InvalidArgumentError("term extraction on an empty corpus");
    const double K = static_cast<double>(posts_by_concept.size());

    for (int n = 1; n <= 3; ++n) {
        // n-grams never cross post boundaries, so scores do not depend on post order
        std::map<std::size_t, std::map<std::string, std::size_t>> counts;
        std::map<std::size_t, std::size_t> totals;
        std::map<std::string, std::size_t> df;
        for (const auto& [c, posts] : posts_by_concept) {
            auto& bag = counts[c];
            for (const auto& p : posts) {
                for (auto& g : ngrams(p.tokens, n)) {
                    ++bag[std::move(g)];
                    ++totals[c];
                }
            }
            for (const auto& [term, _] : bag) ++df[term];
        }
        for (const auto& [c, bag] : counts) {
            for (const auto& [term, count] : bag) {
                const double tf = static_cast<double>(count) / static_cast<double>(totals[c]);
                const double idf = std::log((1.0 + K) / (1.0 + static_cast<double>(df[term]))) + 1.0;
                index.scores.push_back({term, n, c, tf * idf});
            }
        }
    }
    return index;
}

ConceptTerms top_terms(const TermIndex& index, std::size_t concept_id, std::size_t per_size) {
    if (per_size == 0) throw InvalidArgumentError("top-N must be at least 1");
    if (!std::binary_search(index.concepts.begin(), index.concepts.end(), concept_id)) {
        throw InvalidArgumentError("unknown concept " + std::to_string(concept_id));
    }
    ConceptTerms out;
    out.concept_id = concept_id;
    std::array<std::vector<TermRow>*, 3> slots{&out.unigrams, &out.bigrams, &out.trigrams};
    for (const auto& s : index.scores) {
        if (s.concept_id == concept_id) slots[static_cast<std::size_t>(s.n - 1)]->push_back({s.term, s.tfidf});
    }
    for (auto* rows : slots) {
        std::sort(rows->begin(), rows->end(), [](const TermRow& a, const TermRow& b) {
            if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
            return a.term < b.term;
        });
        if (rows->size() > per_size) rows->resize(per_size);
    }
    return out;
}

}  // namespace driftmap
