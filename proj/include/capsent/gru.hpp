#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "capsent/error.hpp"
#include "capsent/math.hpp"
#include "capsent/rng.hpp"
#include "capsent/tensor.hpp"

namespace capsent {

// Gate parameters of one GRU cell. W_* act on the input, U_* on the previous
// hidden state; the candidate pair follows the same naming (the recurrent
// candidate matrix is often written U_n).
struct gru_params {
    tensor W_z, W_r, W_h;  // hidden x input
    tensor U_z, U_r, U_h;  // hidden x hidden
    tensor b_z, b_r, b_h;  // hidden

    std::size_t hidden() const { return b_z.dim(0); }
    std::size_t input_dim() const { return W_z.dim(1); }

    void validate() const {
        std::size_t h = hidden(), in = input_dim();
        for (const tensor* m : {&W_z, &W_r, &W_h})
            if (m->rank() != 2 || m->dim(0) != h || m->dim(1) != in)
                throw shape_error("gru_params: input matrix shape mismatch");
        for (const tensor* m : {&U_z, &U_r, &U_h})
            if (m->rank() != 2 || m->dim(0) != h || m->dim(1) != h)
                throw shape_error("gru_params: recurrent matrix shape mismatch");
        for (const tensor* b : {&b_z, &b_r, &b_h})
            if (b->rank() != 1 || b->dim(0) != h)
                throw shape_error("gru_params: bias shape mismatch");
    }
};

namespace detail {

inline tensor uniform_init(std::vector<std::size_t> shape, double bound, rng& r) {
    tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-bound, bound);
    return t;
}

}  // namespace detail

// Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; draw order is
// fixed (W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h) for reproducibility.
inline gru_params init_gru(std::size_t input_dim, std::size_t hidden, rng& r) {
    if (input_dim < 1 || hidden < 1) throw contract_error("init_gru: dims must be >= 1");
    double kw = 1.0 / std::sqrt(static_cast<double>(input_dim));
    double ku = 1.0 / std::sqrt(static_cast<double>(hidden));
    gru_params p;
    p.W_z = detail::uniform_init({hidden, input_dim}, kw, r);
    p.W_r = detail::uniform_init({hidden, input_dim}, kw, r);
    p.W_h = detail::uniform_init({hidden, input_dim}, kw, r);
    p.U_z = detail::uniform_init({hidden, hidden}, ku, r);
    p.U_r = detail::uniform_init({hidden, hidden}, ku, r);
    p.U_h = detail::uniform_init({hidden, hidden}, ku, r);
    p.b_z = detail::uniform_init({hidden}, ku, r);
    p.b_r = detail::uniform_init({hidden}, ku, r);
    p.b_h = detail::uniform_init({hidden}, ku, r);
    return p;
}

struct gru_step_detail {
    tensor z, r, candidate, h;
};

// z = sigmoid(W_z x + U_z h + b_z), r = sigmoid(W_r x + U_r h + b_r),
// cand = act(W_h x + U_h (r . h) + b_h), h' = (1 - z) . h + z . cand.
// The candidate activation is tanh unless candidate_sigmoid is set.
inline gru_step_detail gru_step_full(const tensor& x_t, const tensor& h_prev,
                                     const gru_params& params, bool candidate_sigmoid = false) {
    gru_step_detail out;
    out.z = map(add(add(matmul(params.W_z, x_t), matmul(params.U_z, h_prev)), params.b_z),
                [](double v) { return sigmoid(v); });
    out.r = map(add(add(matmul(params.W_r, x_t), matmul(params.U_r, h_prev)), params.b_r),
                [](double v) { return sigmoid(v); });
    tensor pre =
        add(add(matmul(params.W_h, x_t), matmul(params.U_h, mul(out.r, h_prev))), params.b_h);
    out.candidate = candidate_sigmoid ? map(pre, [](double v) { return sigmoid(v); })
                                      : map(pre, [](double v) { return std::tanh(v); });
    tensor keep(h_prev.shape());
    for (std::size_t i = 0; i < keep.size(); ++i)
        keep[i] = (1.0 - out.z[i]) * h_prev[i] + out.z[i] * out.candidate[i];
    out.h = std::move(keep);
    return out;
}

inline tensor gru_step(const tensor& x_t, const tensor& h_prev, const gru_params& params,
                       bool candidate_sigmoid = false) {
    return gru_step_full(x_t, h_prev, params, candidate_sigmoid).h;
}

struct bigru_params {
    gru_params fwd;
    gru_params bwd;

    std::size_t hidden() const { return fwd.hidden(); }

    void validate() const {
        fwd.validate();
        bwd.validate();
        if (fwd.hidden() != bwd.hidden() || fwd.input_dim() != bwd.input_dim())
            throw shape_error("bigru_params: directions disagree on dimensions");
    }
};

inline bigru_params init_bigru(std::size_t input_dim, std::size_t hidden, rng& r) {
    bigru_params p;
    p.fwd = init_gru(input_dim, hidden, r);
    p.bwd = init_gru(input_dim, hidden, r);
    return p;
}

// Runs the forward cell over rows 0..M-1 and the backward cell over the
// reversed rows, both from zero initial states; output row t is the aligned
// concatenation (h_fwd_t, h_bwd_t) of width 2h.
inline tensor bigru_forward(const tensor& embedded, const bigru_params& params,
                            bool candidate_sigmoid = false) {
    if (embedded.rank() != 2) throw shape_error("bigru_forward: input must be rank 2");
    std::size_t m = embedded.dim(0), h = params.hidden();
    tensor out({m, 2 * h});
    tensor state({h}, 0.0);
    for (std::size_t t = 0; t < m; ++t) {
        state = gru_step(row_of(embedded, t), state, params.fwd, candidate_sigmoid);
        for (std::size_t c = 0; c < h; ++c) out.at(t, c) = state[c];
    }
    state = tensor({h}, 0.0);
    for (std::size_t t = m; t-- > 0;) {
        state = gru_step(row_of(embedded, t), state, params.bwd, candidate_sigmoid);
        for (std::size_t c = 0; c < h; ++c) out.at(t, h + c) = state[c];
    }
    return out;
}

}  // namespace capsent
