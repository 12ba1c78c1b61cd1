#include "pathqa/text.hpp"

#include <array>
#include <unordered_set>

#include "pathqa/common.hpp"

namespace pathqa {

namespace {

// Fixed stopword list shipped with the artifact. Matches the usual English
// function-word inventory; frozen here because index files depend on it.
const std::unordered_set<std::string_view>& stopword_set() {
    static const std::unordered_set<std::string_view> kStopwords = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "did", "do", "does", "doing", "down",
        "during", "each", "few", "for", "from", "further", "had", "has", "have",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
        "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me",
        "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on",
        "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
        "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
        "their", "theirs", "them", "themselves", "then", "there", "these", "they",
        "this", "those", "through", "to", "too", "under", "until", "up", "very",
        "was", "we", "were", "what", "when", "where", "which", "while", "who",
        "whom", "why", "will", "with", "you", "your", "yours", "yourself",
        "yourselves",
    };
    return kStopwords;
}

inline bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c >= 0x80;
}

inline char lower_ascii(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

}  // namespace

bool is_stopword(std::string_view token) {
    return stopword_set().count(token) > 0;
}

std::vector<std::string> tokenize(std::string_view text, bool drop_stopwords) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (is_token_byte(c)) {
            cur.push_back(lower_ascii(c));
        } else if (!cur.empty()) {
            if (!drop_stopwords || !is_stopword(cur)) tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty() && (!drop_stopwords || !is_stopword(cur))) tokens.push_back(cur);
    return tokens;
}

std::vector<uint32_t> ngram_features(const std::vector<std::string>& tokens,
                                     uint32_t bucket_count, int ngram_order) {
    if (!is_power_of_two(bucket_count))
        throw UsageError("bucket_count must be a power of two");
    const uint32_t mask = bucket_count - 1;
    std::vector<uint32_t> feats;
    feats.reserve(tokens.size() * 2);
    for (const auto& t : tokens) feats.push_back(fnv1a32(t) & mask);
    if (ngram_order >= 2) {
        std::string joined;
        for (size_t i = 0; i + 1 < tokens.size(); ++i) {
            joined.assign(tokens[i]);
            joined.push_back(' ');
            joined.append(tokens[i + 1]);
            feats.push_back(fnv1a32(joined) & mask);
        }
    }
    return feats;
}

bool is_power_of_two(uint64_t v) {
    return v != 0 && (v & (v - 1)) == 0;
}

}  // namespace pathqa
