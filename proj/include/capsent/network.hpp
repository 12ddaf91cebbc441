#pragma once

#include <map>
#include <string>
#include <vector>

#include "capsent/capsule.hpp"
#include "capsent/embedding.hpp"
#include "capsent/error.hpp"
#include "capsent/graph.hpp"
#include "capsent/gru.hpp"
#include "capsent/head.hpp"

namespace capsent {

// Architecture of one per-domain classifier: embedded document (max_len x
// embed_dim) -> bidirectional GRU -> capsule layer with dynamic routing ->
// 2-class dense softmax. With vocab_size > 0 the graph starts one stage
// earlier: it takes a one-hot selection matrix (max_len x vocab_size) and owns
// a trainable embedding matrix, so token vectors are fine-tuned alongside the
// rest of the stack. With vocab_size == 0 the input is a pre-embedded matrix
// and no embedding parameter exists.
struct network_config {
    std::size_t vocab_size = 0;  // 0: input is pre-embedded; > 0: trainable embedding stage
    std::size_t max_len = 1;
    std::size_t embed_dim = 32;
    std::size_t hidden = 64;  // per direction
    std::size_t num_capsules = 4;
    std::size_t capsule_dim = 8;
    std::size_t routing_iterations = 3;
    bool candidate_sigmoid = false;  // literal reading of the candidate activation
    bool softmin_mode = false;       // literal reading of the softmax sign

    void validate() const {
        if (max_len < 1 || embed_dim < 1 || hidden < 1 || num_capsules < 1 || capsule_dim < 1)
            throw contract_error("network_config: dimensions must be >= 1");
        if (routing_iterations < 1)
            throw contract_error("network_config: routing_iterations must be >= 1");
    }
};

// All learnable tensors of one per-domain classifier. The embedding matrix is
// present (vocab_size x embed_dim, row 0 zero) only when the network owns a
// trainable embedding stage; init_domain_parameters leaves it empty, and the
// caller seeds it from an embedding_table.
struct domain_parameters {
    tensor embedding;
    bigru_params rnn;
    capsule_params caps;
    head_params head;
};

// Deterministic initialization; draw order is rnn.fwd, rnn.bwd, capsule
// matrices (position-major), head.
inline domain_parameters init_domain_parameters(const network_config& cfg, rng& r) {
    cfg.validate();
    domain_parameters p;
    p.rnn = init_bigru(cfg.embed_dim, cfg.hidden, r);
    p.caps = init_capsule(cfg.max_len, 2 * cfg.hidden, cfg.num_capsules, cfg.capsule_dim,
                          cfg.routing_iterations, r);
    p.head = init_head(2, cfg.num_capsules * cfg.capsule_dim, r);
    return p;
}

// Numeric (graph-free) forward pass; the independent twin of domain_network.
// Used for inference and as a cross-check of the differentiable path. Takes
// the already-embedded document; when the model carries a fine-tuned
// embedding matrix, embed with that matrix first.
inline tensor domain_forward(const tensor& embedded, const domain_parameters& params,
                             const network_config& cfg) {
    tensor hidden = bigru_forward(embedded, params.rnn, cfg.candidate_sigmoid);
    routing_result routed = capsule_layer(hidden, params.caps);
    return dense_softmax(flatten_capsules(routed.v), params.head, cfg.softmin_mode);
}

// The differentiable stack. The graph is built once; every sample is a fresh
// evaluation pass. Routing coefficients are computed numerically between two
// partial evaluations and re-enter the graph as a bound input, so gradients
// treat them as constants.
class domain_network {
  public:
    domain_network(const network_config& cfg, const domain_parameters& init) : cfg_(cfg) {
        cfg_.validate();
        if (cfg_.vocab_size > 0) {
            if (init.embedding.rank() != 2 || init.embedding.dim(0) != cfg_.vocab_size ||
                init.embedding.dim(1) != cfg_.embed_dim)
                throw shape_error("domain_network: embedding matrix must be vocab_size x embed_dim");
        } else if (init.embedding.size() != 0) {
            throw contract_error("domain_network: embedding matrix given but vocab_size is 0");
        }
        init.rnn.validate();
        init.caps.validate();
        init.head.validate();
        build(init);
    }

    const network_config& config() const { return cfg_; }

    // Full forward pass for one document: evaluates predictions, runs dynamic
    // routing, binds the couplings, returns the probabilities. The input is a
    // one-hot selection matrix when the network owns its embedding stage, a
    // pre-embedded matrix otherwise.
    tensor forward_probs(const tensor& input) {
        g_.new_pass();
        g_.bind(cfg_.vocab_size > 0 ? "s" : "x", input);
        std::vector<std::vector<tensor>> u_hat(cfg_.max_len);
        for (std::size_t i = 0; i < cfg_.max_len; ++i) {
            u_hat[i].reserve(cfg_.num_capsules);
            for (std::size_t j = 0; j < cfg_.num_capsules; ++j)
                u_hat[i].push_back(g_.eval(u_hat_[i * cfg_.num_capsules + j]));
        }
        routing_result routed = dynamic_routing(u_hat, cfg_.routing_iterations);
        last_coupling_ = routed.c;
        g_.bind("c", routed.c);
        return g_.eval(probs_);
    }

    // Cross-entropy of the current pass against a one-hot target; requires a
    // completed forward_probs on this pass.
    double eval_loss(const tensor& target_onehot) {
        g_.bind("y", target_onehot);
        return g_.eval(loss_).item();
    }

    // Gradients of coefficient * loss for every parameter of this pass.
    std::map<std::string, tensor> backward(double coefficient) {
        return g_.backward(loss_, tensor::scalar(coefficient));
    }

    tensor& param(const std::string& name) { return g_.param_value(name); }
    std::vector<std::string> param_names() const { return g_.param_names(); }
    const tensor& last_coupling() const { return last_coupling_; }
    graph& value_graph() { return g_; }
    graph::ref loss_ref() const { return loss_; }

    domain_parameters export_parameters() {
        domain_parameters p;
        if (cfg_.vocab_size > 0) p.embedding = g_.param_value("embed");
        p.rnn.fwd = read_gru("f");
        p.rnn.bwd = read_gru("b");
        p.caps.num_in = cfg_.max_len;
        p.caps.num_out = cfg_.num_capsules;
        p.caps.dim_out = cfg_.capsule_dim;
        p.caps.routing_iterations = cfg_.routing_iterations;
        for (std::size_t i = 0; i < cfg_.max_len; ++i)
            for (std::size_t j = 0; j < cfg_.num_capsules; ++j)
                p.caps.W.push_back(g_.param_value(cap_name(i, j)));
        p.head.W = g_.param_value("head.W");
        p.head.b = g_.param_value("head.b");
        return p;
    }

  private:
    static std::string cap_name(std::size_t i, std::size_t j) {
        return "cap." + std::to_string(i) + "." + std::to_string(j);
    }

    gru_params read_gru(const std::string& prefix) {
        gru_params p;
        p.W_z = g_.param_value(prefix + ".Wz");
        p.W_r = g_.param_value(prefix + ".Wr");
        p.W_h = g_.param_value(prefix + ".Wh");
        p.U_z = g_.param_value(prefix + ".Uz");
        p.U_r = g_.param_value(prefix + ".Ur");
        p.U_h = g_.param_value(prefix + ".Uh");
        p.b_z = g_.param_value(prefix + ".bz");
        p.b_r = g_.param_value(prefix + ".br");
        p.b_h = g_.param_value(prefix + ".bh");
        return p;
    }

    graph::ref add_gru_params(const std::string& prefix, const gru_params& p,
                              std::map<std::string, graph::ref>& refs) {
        refs[prefix + ".Wz"] = g_.param(prefix + ".Wz", p.W_z);
        refs[prefix + ".Wr"] = g_.param(prefix + ".Wr", p.W_r);
        refs[prefix + ".Wh"] = g_.param(prefix + ".Wh", p.W_h);
        refs[prefix + ".Uz"] = g_.param(prefix + ".Uz", p.U_z);
        refs[prefix + ".Ur"] = g_.param(prefix + ".Ur", p.U_r);
        refs[prefix + ".Uh"] = g_.param(prefix + ".Uh", p.U_h);
        refs[prefix + ".bz"] = g_.param(prefix + ".bz", p.b_z);
        refs[prefix + ".br"] = g_.param(prefix + ".br", p.b_r);
        refs[prefix + ".bh"] = g_.param(prefix + ".bh", p.b_h);
        return refs[prefix + ".Wz"];
    }

    graph::ref gru_step_node(const std::string& prefix, graph::ref x_t, graph::ref h_prev,
                             graph::ref ones, const std::map<std::string, graph::ref>& refs) {
        auto p = [&](const char* name) { return refs.at(prefix + "." + name); };
        graph::ref z = g_.sigmoid(
            g_.add(g_.add(g_.matmul(p("Wz"), x_t), g_.matmul(p("Uz"), h_prev)), p("bz")));
        graph::ref r = g_.sigmoid(
            g_.add(g_.add(g_.matmul(p("Wr"), x_t), g_.matmul(p("Ur"), h_prev)), p("br")));
        graph::ref pre = g_.add(
            g_.add(g_.matmul(p("Wh"), x_t), g_.matmul(p("Uh"), g_.mul(r, h_prev))), p("bh"));
        graph::ref cand = cfg_.candidate_sigmoid ? g_.sigmoid(pre) : g_.tanh(pre);
        return g_.add(g_.mul(g_.sub(ones, z), h_prev), g_.mul(z, cand));
    }

    void build(const domain_parameters& init) {
        std::size_t m = cfg_.max_len, j_count = cfg_.num_capsules;
        std::map<std::string, graph::ref> refs;
        add_gru_params("f", init.rnn.fwd, refs);
        add_gru_params("b", init.rnn.bwd, refs);

        graph::ref x;
        if (cfg_.vocab_size > 0) {
            graph::ref s = g_.input("s", {m, cfg_.vocab_size});
            graph::ref table = g_.param("embed", init.embedding);
            x = g_.matmul(s, table);
        } else {
            x = g_.input("x", {m, cfg_.embed_dim});
        }
        graph::ref c = g_.input("c", {m, j_count});
        graph::ref y = g_.input("y", {2});
        graph::ref zero_h = g_.constant(tensor({cfg_.hidden}, 0.0));
        graph::ref ones_h = g_.constant(tensor({cfg_.hidden}, 1.0));

        std::vector<graph::ref> x_rows(m);
        for (std::size_t t = 0; t < m; ++t) x_rows[t] = g_.row(x, t);

        std::vector<graph::ref> h_fwd(m), h_bwd(m);
        graph::ref state = zero_h;
        for (std::size_t t = 0; t < m; ++t) {
            state = gru_step_node("f", x_rows[t], state, ones_h, refs);
            h_fwd[t] = state;
        }
        state = zero_h;
        for (std::size_t t = m; t-- > 0;) {
            state = gru_step_node("b", x_rows[t], state, ones_h, refs);
            h_bwd[t] = state;
        }

        u_hat_.resize(m * j_count);
        for (std::size_t i = 0; i < m; ++i) {
            graph::ref hidden_i = g_.concat({h_fwd[i], h_bwd[i]});
            for (std::size_t j = 0; j < j_count; ++j) {
                graph::ref w = g_.param(cap_name(i, j), init.caps.w(i, j));
                u_hat_[i * j_count + j] = g_.matmul(w, hidden_i);
            }
        }

        std::vector<graph::ref> capsules(j_count);
        for (std::size_t j = 0; j < j_count; ++j) {
            graph::ref s = -1;
            for (std::size_t i = 0; i < m; ++i) {
                graph::ref weighted =
                    g_.mul(g_.elem(c, i * j_count + j), u_hat_[i * j_count + j]);
                s = (i == 0) ? weighted : g_.add(s, weighted);
            }
            capsules[j] = g_.squash(s);
        }

        graph::ref flattened = g_.concat(capsules);
        graph::ref w_dense = g_.param("head.W", init.head.W);
        graph::ref b_dense = g_.param("head.b", init.head.b);
        graph::ref logits = g_.add(g_.matmul(w_dense, flattened), b_dense);
        if (cfg_.softmin_mode) logits = g_.scale(logits, -1.0);
        probs_ = g_.softmax(logits);
        loss_ = g_.scale(g_.sum(g_.mul(y, g_.log(g_.clamp_min(probs_, 1e-12)))), -1.0);
    }

    network_config cfg_;
    graph g_;
    std::vector<graph::ref> u_hat_;
    graph::ref probs_ = -1;
    graph::ref loss_ = -1;
    tensor last_coupling_;
};

}  // namespace capsent
