#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "capsent/dataset.hpp"
#include "capsent/error.hpp"
#include "capsent/textpipe.hpp"

namespace capsent {

// Per-domain word occurrence counts over the training split: count(T, i) is
// the number of occurrences of token T in domain i, total(i) the number of all
// token occurrences in domain i. Immutable after construction.
class domain_stats {
  public:
    domain_stats() = default;

    domain_stats(std::vector<std::string> domains,
                 std::map<std::string, std::vector<std::uint64_t>> counts,
                 std::vector<std::uint64_t> totals)
        : domains_(std::move(domains)), counts_(std::move(counts)), totals_(std::move(totals)) {
        if (totals_.size() != domains_.size())
            throw contract_error("domain_stats: totals/domains length mismatch");
        std::vector<std::uint64_t> check(domains_.size(), 0);
        for (const auto& [token, row] : counts_) {
            if (row.size() != domains_.size())
                throw contract_error("domain_stats: count row length mismatch for '" + token +
                                     "'");
            for (std::size_t i = 0; i < row.size(); ++i) check[i] += row[i];
        }
        for (std::size_t i = 0; i < domains_.size(); ++i) {
            if (check[i] != totals_[i])
                throw contract_error("domain_stats: totals are not the column sums");
            if (totals_[i] == 0)
                throw data_error("domain_stats: domain '" + domains_[i] +
                                 "' has no token occurrences");
        }
    }

    const std::vector<std::string>& domains() const { return domains_; }
    std::size_t num_domains() const { return domains_.size(); }

    std::uint64_t count(const std::string& token, std::size_t domain_index) const {
        check_index(domain_index);
        auto it = counts_.find(token);
        return it == counts_.end() ? 0 : it->second[domain_index];
    }

    std::uint64_t total(std::size_t domain_index) const {
        check_index(domain_index);
        return totals_[domain_index];
    }

    bool knows(const std::string& token) const { return counts_.count(token) != 0; }

    // token -> per-domain counts, ordered by token for deterministic dumps
    const std::map<std::string, std::vector<std::uint64_t>>& counts() const { return counts_; }
    const std::vector<std::uint64_t>& totals() const { return totals_; }

  private:
    void check_index(std::size_t i) const {
        if (i >= domains_.size())
            throw contract_error("domain_stats: domain index " + std::to_string(i) +
                                 " out of range");
    }

    std::vector<std::string> domains_;
    std::map<std::string, std::vector<std::uint64_t>> counts_;
    std::vector<std::uint64_t> totals_;
};

// Counts preprocessed tokens (no padding, no truncation, no min_count
// filtering — raw corpus evidence) per domain over the training split.
inline domain_stats build_domain_stats(const dataset& train, const pipeline_config& config) {
    if (train.documents.empty()) throw data_error("build_domain_stats: empty dataset");
    std::map<std::string, std::vector<std::uint64_t>> counts;
    std::vector<std::uint64_t> totals(train.domains.size(), 0);
    for (const labeled_document& doc : train.documents) {
        std::size_t d = train.domain_index(doc.domain);
        std::vector<std::string> tokens = preprocess(doc.text, config);
        totals[d] += tokens.size();
        for (std::string& token : tokens) {
            auto [it, inserted] = counts.try_emplace(
                std::move(token), std::vector<std::uint64_t>(train.domains.size(), 0));
            ++it->second[d];
        }
    }
    for (std::size_t i = 0; i < totals.size(); ++i)
        if (totals[i] == 0)
            throw data_error("build_domain_stats: domain '" + train.domains[i] +
                             "' has no surviving tokens");
    return domain_stats(train.domains, std::move(counts), std::move(totals));
}

struct word_dbd_result {
    double tf = 0.0;   // n_{T_i} / N_i
    double idf = 0.0;  // n_{T_i} / sum_j n_{T_j}
    double dbd = 0.0;  // tf * idf
};

// A token seen nowhere yields zeros (0/0 is resolved to 0: no evidence).
inline word_dbd_result word_dbd(const std::string& token, std::size_t domain_index,
                                const domain_stats& stats) {
    word_dbd_result out;
    if (!stats.knows(token)) {
        (void)stats.total(domain_index);  // still validate the index
        return out;
    }
    double n_i = static_cast<double>(stats.count(token, domain_index));
    if (n_i == 0.0) return out;
    double across = 0.0;
    for (std::size_t j = 0; j < stats.num_domains(); ++j)
        across += static_cast<double>(stats.count(token, j));
    out.tf = n_i / static_cast<double>(stats.total(domain_index));
    out.idf = n_i / across;
    out.dbd = out.tf * out.idf;
    return out;
}

enum class dbd_aggregation { mean, sum };

// Per-document domain weights D: entry i aggregates word_dbd(token, i) over
// the document's tokens (arithmetic mean by default). Unknown tokens
// contribute zero; an empty document gives the zero vector.
inline std::vector<double> document_dbd(const std::vector<std::string>& tokens,
                                        const domain_stats& stats,
                                        dbd_aggregation mode = dbd_aggregation::mean) {
    std::vector<double> D(stats.num_domains(), 0.0);
    if (tokens.empty()) return D;
    for (const std::string& token : tokens)
        for (std::size_t i = 0; i < D.size(); ++i) D[i] += word_dbd(token, i, stats).dbd;
    if (mode == dbd_aggregation::mean)
        for (double& v : D) v /= static_cast<double>(tokens.size());
    return D;
}

// Smallest index achieving the maximum (deterministic tie-break).
inline std::size_t identify_domain(const std::vector<double>& D) {
    if (D.empty()) throw contract_error("identify_domain: empty weight vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < D.size(); ++i)
        if (D[i] > D[best]) best = i;
    return best;
}

}  // namespace capsent
