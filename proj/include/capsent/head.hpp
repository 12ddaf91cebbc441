#pragma once

#include <cstddef>

#include "capsent/error.hpp"
#include "capsent/gru.hpp"
#include "capsent/math.hpp"
#include "capsent/tensor.hpp"

namespace capsent {

// Dense classification head: logits f = W * F + b, probabilities by stable
// softmax. softmin_mode applies softmax to the negated logits (an audit switch
// that inverts the ranking).
struct head_params {
    tensor W;  // num_classes x flattened capsule dim
    tensor b;  // num_classes

    std::size_t num_classes() const { return b.dim(0); }
    std::size_t in_dim() const { return W.dim(1); }

    void validate() const {
        if (W.rank() != 2 || b.rank() != 1 || W.dim(0) != b.dim(0))
            throw shape_error("head_params: weight/bias shapes disagree");
    }
};

inline head_params init_head(std::size_t num_classes, std::size_t in_dim, rng& r) {
    if (num_classes < 2 || in_dim < 1) throw contract_error("init_head: bad dimensions");
    double k = 1.0 / std::sqrt(static_cast<double>(in_dim));
    head_params p;
    p.W = detail::uniform_init({num_classes, in_dim}, k, r);
    p.b = detail::uniform_init({num_classes}, k, r);
    return p;
}

inline tensor dense_logits(const tensor& flattened, const head_params& params) {
    params.validate();
    return add(matmul(params.W, flattened), params.b);
}

inline tensor dense_softmax(const tensor& flattened, const head_params& params,
                            bool softmin_mode = false) {
    tensor logits = dense_logits(flattened, params);
    return softmax(softmin_mode ? scale(logits, -1.0) : logits);
}

}  // namespace capsent
