#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "capsent/error.hpp"
#include "capsent/polarity.hpp"
#include "capsent/tensor.hpp"

namespace capsent {

inline constexpr double probability_floor = 1e-12;

// Negative log-likelihood of the target class. Entries are floored at
// probability_floor before the log so a confidently wrong prediction yields a
// large finite loss instead of infinity.
inline double cross_entropy(const tensor& p, std::size_t target) {
    if (p.rank() != 1 || p.size() == 0)
        throw shape_error("cross_entropy: probabilities must be a non-empty vector");
    if (target >= p.size())
        throw contract_error("cross_entropy: target class out of range");
    double sum = 0.0;
    for (double v : p.data()) sum += v;
    if (std::abs(sum - 1.0) > 1e-9)
        throw contract_error("cross_entropy: probabilities must sum to 1");
    return -std::log(std::max(p[target], probability_floor));
}

// Moving inputs of the dynamic cost-sensitive weighting. The imbalance ratio
// is fixed per training split; the batch statistics are refreshed from each
// minibatch that contains at least one minority sample.
struct cost_state {
    double ir_overall = 1.0;
    polarity minority_label = polarity::negative;
    double g_mean_batch = 0.0;
    double acc_batch = 0.0;

    void validate() const {
        if (!(ir_overall >= 1.0))
            throw contract_error("cost_state: imbalance ratio must be >= 1");
        if (!(g_mean_batch >= 0.0 && g_mean_batch <= 1.0))
            throw contract_error("cost_state: batch g_mean must lie in [0, 1]");
        if (!(acc_batch >= 0.0 && acc_batch <= 1.0))
            throw contract_error("cost_state: batch accuracy must lie in [0, 1]");
    }
};

// Minority samples get ir * exp(-g_mean/2) * exp(-acc/2): the weight grows
// with the imbalance and shrinks as the batch is already handled well.
// Majority samples always weigh 1.
inline double lambda_weight(const cost_state& state, polarity sample_label) {
    state.validate();
    if (sample_label != state.minority_label) return 1.0;
    return state.ir_overall * std::exp(-state.g_mean_batch / 2.0) *
           std::exp(-state.acc_batch / 2.0);
}

// E = (1/n_pos) sum_pos lambda_i * loss_i + (1/n_neg) sum_neg lambda_i * loss_i.
// Each class is averaged over its own count in this batch; a class absent from
// the batch simply contributes no term.
inline double cost_sensitive_loss(const std::vector<std::pair<double, polarity>>& batch,
                                  const cost_state& state) {
    if (batch.empty()) throw contract_error("cost_sensitive_loss: empty batch");
    double sum_pos = 0.0, sum_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [loss, label] : batch) {
        double weighted = lambda_weight(state, label) * loss;
        if (label == polarity::positive) {
            sum_pos += weighted;
            ++n_pos;
        } else {
            sum_neg += weighted;
            ++n_neg;
        }
    }
    double e = 0.0;
    if (n_pos > 0) e += sum_pos / static_cast<double>(n_pos);
    if (n_neg > 0) e += sum_neg / static_cast<double>(n_neg);
    return e;
}

}  // namespace capsent
