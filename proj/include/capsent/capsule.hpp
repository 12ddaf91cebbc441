#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "capsent/error.hpp"
#include "capsent/gru.hpp"
#include "capsent/math.hpp"
#include "capsent/tensor.hpp"

namespace capsent {

// One transformation matrix (dim_out x in_dim) per (input position i, output
// capsule j), stored i-major at index i * num_out + j.
struct capsule_params {
    std::vector<tensor> W;
    std::size_t num_in = 0;
    std::size_t num_out = 0;
    std::size_t dim_out = 0;
    std::size_t routing_iterations = 3;

    const tensor& w(std::size_t i, std::size_t j) const { return W[i * num_out + j]; }
    tensor& w(std::size_t i, std::size_t j) { return W[i * num_out + j]; }
    std::size_t in_dim() const { return W.empty() ? 0 : W[0].dim(1); }

    void validate() const {
        if (num_in < 1 || num_out < 1 || dim_out < 1)
            throw contract_error("capsule_params: counts must be >= 1");
        if (routing_iterations < 1)
            throw contract_error("capsule_params: routing_iterations must be >= 1");
        if (W.size() != num_in * num_out)
            throw shape_error("capsule_params: expected one matrix per (position, capsule)");
        for (const tensor& m : W)
            if (m.rank() != 2 || m.dim(0) != dim_out || m.dim(1) != in_dim())
                throw shape_error("capsule_params: transformation matrices disagree on shape");
    }
};

inline capsule_params init_capsule(std::size_t num_in, std::size_t in_dim, std::size_t num_out,
                                   std::size_t dim_out, std::size_t routing_iterations, rng& r) {
    capsule_params p;
    p.num_in = num_in;
    p.num_out = num_out;
    p.dim_out = dim_out;
    p.routing_iterations = routing_iterations;
    double k = 1.0 / std::sqrt(static_cast<double>(in_dim));
    p.W.reserve(num_in * num_out);
    for (std::size_t i = 0; i < num_in * num_out; ++i)
        p.W.push_back(detail::uniform_init({dim_out, in_dim}, k, r));
    p.validate();
    return p;
}

// u_hat[i][j] = W_ij * hidden_i: the prediction each input position makes for
// each output capsule.
inline std::vector<std::vector<tensor>> predict_vectors(const tensor& hidden,
                                                        const capsule_params& params) {
    if (hidden.rank() != 2 || hidden.dim(0) != params.num_in)
        throw shape_error("predict_vectors: hidden row count must equal num_in");
    std::vector<std::vector<tensor>> u_hat(params.num_in);
    for (std::size_t i = 0; i < params.num_in; ++i) {
        tensor h_i = row_of(hidden, i);
        u_hat[i].reserve(params.num_out);
        for (std::size_t j = 0; j < params.num_out; ++j)
            u_hat[i].push_back(matmul(params.w(i, j), h_i));
    }
    return u_hat;
}

struct routing_result {
    std::vector<tensor> v;  // num_out capsule vectors of dim_out
    tensor c;               // coupling coefficients, num_in x num_out
};

// Routing by agreement: logits start at zero; each iteration takes c as the
// per-position softmax over output capsules, forms the weighted sums s_j,
// squashes them into v_j, and reinforces logits by the u_hat . v agreements.
// Returns the final capsules and the coupling matrix that produced them.
inline routing_result dynamic_routing(const std::vector<std::vector<tensor>>& u_hat,
                                      std::size_t iterations) {
    if (iterations < 1) throw contract_error("dynamic_routing: iterations must be >= 1");
    if (u_hat.empty() || u_hat[0].empty())
        throw contract_error("dynamic_routing: empty prediction set");
    std::size_t n = u_hat.size(), j_count = u_hat[0].size();
    std::size_t dim = u_hat[0][0].dim(0);
    for (const auto& row : u_hat)
        if (row.size() != j_count)
            throw shape_error("dynamic_routing: ragged prediction matrix");

    tensor b({n, j_count}, 0.0);
    routing_result out;
    out.c = tensor({n, j_count});
    for (std::size_t iter = 0; iter < iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            tensor ci = softmax(row_of(b, i));
            for (std::size_t j = 0; j < j_count; ++j) out.c.at(i, j) = ci[j];
        }
        out.v.clear();
        for (std::size_t j = 0; j < j_count; ++j) {
            tensor s({dim}, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < dim; ++d) s[d] += out.c.at(i, j) * u_hat[i][j][d];
            out.v.push_back(squash(s));
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < j_count; ++j) b.at(i, j) += dot(u_hat[i][j], out.v[j]);
    }
    return out;
}

// Full capsule layer: per-pair predictions followed by dynamic routing.
inline routing_result capsule_layer(const tensor& hidden, const capsule_params& params) {
    params.validate();
    return dynamic_routing(predict_vectors(hidden, params), params.routing_iterations);
}

// Capsule outputs flattened in order v_1 .. v_J.
inline tensor flatten_capsules(const std::vector<tensor>& v) {
    return concat(v);
}

}  // namespace capsent
