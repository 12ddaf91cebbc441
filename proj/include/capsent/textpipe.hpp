#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "capsent/dataset.hpp"
#include "capsent/error.hpp"
#include "capsent/utf8.hpp"

namespace capsent {

struct pipeline_config {
    std::set<std::string> stopwords;
    std::size_t min_count = 2;     // tokens rarer than this are dropped from the vocabulary
    std::size_t max_len_cap = 0;   // 0 = auto (corpus maximum); otherwise an explicit cap
    std::size_t embed_dim = 32;
    bool dbd_sum_mode = false;     // document weights as sums instead of means
};

// One stopword per line, UTF-8. Lines are themselves run through the token
// cleanup so "است." in the file matches the stripped token "است".
inline std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open stopword file: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string cleaned;
        for (std::uint32_t cp : decode_utf8(line))
            if (!is_unicode_space(cp) && !is_stripped_mark(cp))
                append_utf8(cleaned, ascii_lower(cp));
        if (!cleaned.empty()) out.insert(cleaned);
    }
    return out;
}

// Whitespace-split on unicode space separators, strip punctuation and format
// marks inside tokens, ASCII-lowercase, drop empties and stopwords. Order is
// preserved; the result may be empty.
inline std::vector<std::string> preprocess(const std::string& text, const pipeline_config& config) {
    std::vector<std::string> tokens;
    std::string current;
    const auto flush = [&] {
        if (!current.empty() && !config.stopwords.count(current)) tokens.push_back(current);
        current.clear();
    };
    for (std::uint32_t cp : decode_utf8(text)) {
        if (is_unicode_space(cp)) {
            flush();
        } else if (!is_stripped_mark(cp)) {
            append_utf8(current, ascii_lower(cp));
        }
    }
    flush();
    return tokens;
}

// Token -> index table. Index 0 is PAD, index 1 is OOV, content tokens start
// at 2 ordered by descending corpus frequency (ties lexicographic).
class vocabulary {
  public:
    static constexpr std::size_t pad_index = 0;
    static constexpr std::size_t oov_index = 1;

    vocabulary() = default;

    // tokens in index order (index 2, 3, ...)
    static vocabulary from_tokens(std::vector<std::string> tokens) {
        vocabulary v;
        v.tokens_ = std::move(tokens);
        for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
            if (v.index_.count(v.tokens_[i]))
                throw data_error("vocabulary: duplicate token '" + v.tokens_[i] + "'");
            v.index_[v.tokens_[i]] = i + 2;
        }
        return v;
    }

    std::size_t size() const { return tokens_.size() + 2; }

    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    std::size_t index_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? oov_index : it->second;
    }

    // content tokens only, position i holds the token at index i + 2
    const std::vector<std::string>& tokens() const { return tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Counts preprocessed tokens across the corpus and keeps those with frequency
// >= min_count, indexed by descending frequency then lexicographic order.
inline vocabulary build_vocabulary(const dataset& corpus, const pipeline_config& config) {
    if (corpus.documents.empty()) throw data_error("build_vocabulary: empty corpus");
    std::map<std::string, std::size_t> counts;  // ordered map makes ties easy to break
    for (const labeled_document& doc : corpus.documents)
        for (const std::string& token : preprocess(doc.text, config)) ++counts[token];

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [token, count] : counts)
        if (count >= config.min_count) kept.emplace_back(token, count);
    if (kept.empty())
        throw data_error("build_vocabulary: no token survives min_count=" +
                         std::to_string(config.min_count));

    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ordered;
    ordered.reserve(kept.size());
    for (auto& [token, count] : kept) ordered.push_back(std::move(token));
    return vocabulary::from_tokens(std::move(ordered));
}

// Longest preprocessed document in the corpus, floored at 1; an explicit cap
// (when nonzero) bounds it from above.
inline std::size_t resolve_max_len(const dataset& corpus, const pipeline_config& config) {
    std::size_t longest = 0;
    for (const labeled_document& doc : corpus.documents)
        longest = std::max(longest, preprocess(doc.text, config).size());
    if (longest == 0) longest = 1;
    if (config.max_len_cap > 0) longest = std::min(longest, config.max_len_cap);
    return longest;
}

// Maps tokens to indices (unknown -> OOV), truncates to the first max_len,
// right-pads with PAD. Output length is always exactly max_len.
inline std::vector<std::size_t> encode_pad(const std::vector<std::string>& tokens,
                                           const vocabulary& vocab, std::size_t max_len) {
    if (max_len < 1) throw contract_error("encode_pad: max_len must be >= 1");
    std::vector<std::size_t> out(max_len, vocabulary::pad_index);
    std::size_t n = std::min(max_len, tokens.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = vocab.index_of(tokens[i]);
    return out;
}

}  // namespace capsent
