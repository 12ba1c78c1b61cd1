#pragma once
// Tokenization and feature hashing shared by the sparse index and the
// reference encoders. Rules are frozen for reproducibility:
//   - lowercase ASCII letters; bytes >= 0x80 are kept verbatim (UTF-8 safe)
//   - tokens are maximal runs of [0-9a-z] plus high bytes
//   - features are unigrams and space-joined bigrams, hashed with FNV-1a 32
//   - optional stopword removal against a fixed built-in list

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pathqa {

// FNV-1a, 32-bit. Public and pinned: index files depend on it.
inline uint32_t fnv1a32(std::string_view s) {
    uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

bool is_stopword(std::string_view token);

// Lowercased tokens, split on non-alphanumeric bytes.
std::vector<std::string> tokenize(std::string_view text, bool drop_stopwords = false);

// Hashed unigram+bigram feature ids for a token sequence, masked to
// `bucket_count` buckets (power of two). With multiplicity, in order.
std::vector<uint32_t> ngram_features(const std::vector<std::string>& tokens,
                                     uint32_t bucket_count, int ngram_order = 2);

bool is_power_of_two(uint64_t v);

}  // namespace pathqa
