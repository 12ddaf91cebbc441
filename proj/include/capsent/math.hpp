#pragma once

#include <algorithm>
#include <cmath>

#include "capsent/tensor.hpp"

namespace capsent {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Stable softmax over a rank-1 tensor: shift by the max before exponentiating.
inline tensor softmax(const tensor& x) {
    if (x.rank() != 1) throw shape_error("softmax: operand must be rank 1");
    double mx = *std::max_element(x.data().begin(), x.data().end());
    tensor out({x.dim(0)});
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        z += out[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] /= z;
    return out;
}

// v = (|s|^2 / (1 + |s|^2)) * s / |s|, with squash(0) = 0.
// Maps any vector into the open unit ball, preserving direction.
inline tensor squash(const tensor& s) {
    double n = euclidean_norm(s);
    if (n < 1e-12) return tensor(s.shape(), 0.0);
    double g = n / (1.0 + n * n);
    return scale(s, g);
}

}  // namespace capsent
