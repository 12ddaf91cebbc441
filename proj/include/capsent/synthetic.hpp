#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "capsent/dataset.hpp"
#include "capsent/error.hpp"
#include "capsent/rng.hpp"

namespace capsent {

// Recipe for a generated multi-domain corpus. Majority polarity is positive
// (negatives are the scarce class); imbalance_ratio = majority / minority.
struct synthetic_spec {
    std::size_t num_domains = 2;
    std::size_t docs_per_domain = 20;
    std::size_t domain_vocab_size = 30;
    std::size_t sentiment_lexicon_size = 12;  // split half positive, half negative
    double vocab_overlap = 0.0;               // fraction of each domain vocab drawn from a shared pool
    double imbalance_ratio = 1.0;
    std::size_t doc_len_min = 8;
    std::size_t doc_len_max = 16;
    std::uint64_t seed = 42;
};

namespace detail {

inline void validate(const synthetic_spec& spec) {
    if (spec.num_domains < 1 || spec.docs_per_domain < 1 || spec.domain_vocab_size < 1)
        throw contract_error("synthetic spec: counts must be >= 1");
    if (spec.sentiment_lexicon_size < 2)
        throw contract_error("synthetic spec: sentiment lexicon needs both signs (size >= 2)");
    if (spec.vocab_overlap < 0.0 || spec.vocab_overlap > 1.0)
        throw contract_error("synthetic spec: vocab_overlap must be in [0, 1]");
    if (spec.imbalance_ratio < 1.0)
        throw contract_error("synthetic spec: imbalance_ratio must be >= 1");
    if (spec.doc_len_min < 3)
        throw contract_error("synthetic spec: doc_len_min must be >= 3");
    if (spec.doc_len_max < spec.doc_len_min)
        throw contract_error("synthetic spec: doc_len_max < doc_len_min");
}

}  // namespace detail

// Vocabulary of domain i: its own "d{i}w*" tokens plus, when vocab_overlap > 0,
// a prefix of the shared pool "sharedw*".
inline std::vector<std::string> synthetic_domain_vocab(const synthetic_spec& spec,
                                                       std::size_t domain) {
    std::size_t n_shared = static_cast<std::size_t>(
        std::llround(spec.vocab_overlap * static_cast<double>(spec.domain_vocab_size)));
    if (n_shared > spec.domain_vocab_size) n_shared = spec.domain_vocab_size;
    std::size_t n_own = spec.domain_vocab_size - n_shared;
    std::vector<std::string> vocab;
    vocab.reserve(spec.domain_vocab_size);
    for (std::size_t k = 0; k < n_own; ++k)
        vocab.push_back("d" + std::to_string(domain) + "w" + std::to_string(k));
    for (std::size_t k = 0; k < n_shared; ++k) vocab.push_back("sharedw" + std::to_string(k));
    return vocab;
}

inline std::vector<std::string> synthetic_sentiment_words(const synthetic_spec& spec,
                                                          polarity sign) {
    std::size_t n_pos = (spec.sentiment_lexicon_size + 1) / 2;
    std::size_t n = sign == polarity::positive ? n_pos : spec.sentiment_lexicon_size - n_pos;
    std::vector<std::string> words;
    words.reserve(n);
    const char* prefix = sign == polarity::positive ? "posw" : "negw";
    for (std::size_t k = 0; k < n; ++k) words.push_back(prefix + std::to_string(k));
    return words;
}

// Each document mixes domain tokens with sentiment tokens whose strict
// majority sign determines the label; counts per domain honor the imbalance
// ratio to within rounding. Fully deterministic in the seed.
inline dataset generate_synthetic(const synthetic_spec& spec) {
    detail::validate(spec);

    std::vector<std::string> pos_words = synthetic_sentiment_words(spec, polarity::positive);
    std::vector<std::string> neg_words = synthetic_sentiment_words(spec, polarity::negative);

    std::size_t n_minority = static_cast<std::size_t>(std::llround(
        static_cast<double>(spec.docs_per_domain) / (1.0 + spec.imbalance_ratio)));
    std::size_t n_majority = spec.docs_per_domain - n_minority;

    rng r(spec.seed);
    dataset out;
    for (std::size_t d = 0; d < spec.num_domains; ++d) {
        std::vector<std::string> domain_vocab = synthetic_domain_vocab(spec, d);
        for (std::size_t k = 0; k < spec.docs_per_domain; ++k) {
            polarity label = k < n_majority ? polarity::positive : polarity::negative;
            const std::vector<std::string>& match =
                label == polarity::positive ? pos_words : neg_words;
            const std::vector<std::string>& opposite =
                label == polarity::positive ? neg_words : pos_words;

            std::size_t len =
                spec.doc_len_min + r.below(spec.doc_len_max - spec.doc_len_min + 1);
            std::size_t n_sent = static_cast<std::size_t>(
                std::llround(0.5 * static_cast<double>(len)));
            n_sent = std::clamp<std::size_t>(n_sent, 1, len - 1);  // keep >= 1 domain token
            std::size_t n_opp = n_sent / 5;  // ~20% dissenting tokens; majority sign always wins
            std::size_t n_match = n_sent - n_opp;

            std::vector<std::string> tokens;
            tokens.reserve(len);
            for (std::size_t i = 0; i < n_match; ++i)
                tokens.push_back(match[r.below(match.size())]);
            for (std::size_t i = 0; i < n_opp; ++i)
                tokens.push_back(opposite[r.below(opposite.size())]);
            for (std::size_t i = n_sent; i < len; ++i)
                tokens.push_back(domain_vocab[r.below(domain_vocab.size())]);
            r.shuffle(tokens);

            labeled_document doc;
            doc.domain = "domain" + std::to_string(d);
            doc.label = label;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i) doc.text += ' ';
                doc.text += tokens[i];
            }
            out.add(std::move(doc));
        }
    }
    return out;
}

}  // namespace capsent
