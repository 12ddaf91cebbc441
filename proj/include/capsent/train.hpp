#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "capsent/loss.hpp"
#include "capsent/metrics.hpp"
#include "capsent/model.hpp"
#include "capsent/rng.hpp"

namespace capsent {

// Adam with the conventional constants; state is keyed by parameter name and
// created lazily on the first step.
class adam_optimizer {
  public:
    explicit adam_optimizer(double learning_rate) : lr_(learning_rate) {}

    void step(domain_network& net, const std::map<std::string, tensor>& grads) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (const auto& [name, g] : grads) {
            tensor& value = net.param(name);
            auto m_it = m_.find(name);
            if (m_it == m_.end()) {
                m_it = m_.emplace(name, tensor(g.shape(), 0.0)).first;
                v_.emplace(name, tensor(g.shape(), 0.0));
            }
            tensor& m = m_it->second;
            tensor& v = v_.at(name);
            for (std::size_t i = 0; i < g.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                value[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        }
    }

  private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::size_t t_ = 0;
    std::map<std::string, tensor> m_, v_;
};

namespace detail {

struct encoded_document {
    tensor input;  // one-hot selection matrix, max_len x vocab_size
    polarity label = polarity::positive;
};

inline tensor onehot(polarity label) {
    return label == polarity::positive ? tensor({2}, {1.0, 0.0}) : tensor({2}, {0.0, 1.0});
}

inline void accumulate(std::map<std::string, tensor>& total,
                       const std::map<std::string, tensor>& grads) {
    if (total.empty()) {
        total = grads;
        return;
    }
    for (const auto& [name, g] : grads) {
        tensor& acc = total.at(name);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
}

// Forward every batch sample once to refresh the cost statistics from this
// batch's own predictions. Batches without a minority sample keep the
// previous statistics. The confusion matrix is oriented minority-positive.
inline void refresh_cost_state(domain_network& net,
                               const std::vector<encoded_document>& docs,
                               const std::vector<std::size_t>& batch, cost_state& state) {
    confusion_matrix cm;
    bool saw_minority = false;
    for (std::size_t idx : batch) {
        tensor p = net.forward_probs(docs[idx].input);
        polarity predicted = p[0] >= p[1] ? polarity::positive : polarity::negative;
        bool actual_minority = docs[idx].label == state.minority_label;
        saw_minority = saw_minority || actual_minority;
        cm.add(predicted == state.minority_label, actual_minority);
    }
    if (!saw_minority) return;
    metrics_report m = compute_metrics(cm);
    state.g_mean_batch = m.g_mean;  // reported 0 when one class is absent
    state.acc_batch = m.accuracy;
}

// One domain's full gradient-descent run. Returns the trained parameters and
// the per-epoch mean objective (cross-entropy, or the cost-sensitive E).
inline domain_model train_domain(const std::string& domain_name,
                                 const std::vector<encoded_document>& docs,
                                 const network_config& net_cfg, const train_config& cfg,
                                 const tensor& embedding_init, std::uint64_t domain_stream,
                                 const cost_state* cost) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const encoded_document& d : docs)
        (d.label == polarity::positive ? n_pos : n_neg) += 1;
    if (n_pos < 2 || n_neg < 2)
        throw data_error("train_ensemble: domain '" + domain_name +
                         "' needs at least 2 documents of each polarity (has " +
                         std::to_string(n_pos) + " positive, " + std::to_string(n_neg) +
                         " negative)");

    rng r(mix_seed(cfg.seed, domain_stream));
    domain_parameters init = init_domain_parameters(net_cfg, r);
    init.embedding = embedding_init;  // each domain fine-tunes its own copy
    domain_network net(net_cfg, init);
    adam_optimizer optimizer(cfg.learning_rate);
    cost_state state;
    if (cost) state = *cost;

    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    domain_model out;
    out.domain = domain_name;
    out.seed = cfg.seed;
    out.epochs = cfg.epochs;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        r.shuffle(order);
        double epoch_objective = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
            std::map<std::string, tensor> grads;
            std::vector<std::pair<double, polarity>> losses;
            losses.reserve(batch.size());

            if (cost) {
                refresh_cost_state(net, docs, batch, state);
                std::size_t batch_pos = 0, batch_neg = 0;
                for (std::size_t idx : batch)
                    (docs[idx].label == polarity::positive ? batch_pos : batch_neg) += 1;
                for (std::size_t idx : batch) {
                    const encoded_document& doc = docs[idx];
                    net.forward_probs(doc.input);
                    double loss = net.eval_loss(onehot(doc.label));
                    losses.emplace_back(loss, doc.label);
                    double lambda = lambda_weight(state, doc.label);
                    std::size_t class_count =
                        doc.label == polarity::positive ? batch_pos : batch_neg;
                    accumulate(grads,
                               net.backward(lambda / static_cast<double>(class_count)));
                }
                epoch_objective += cost_sensitive_loss(losses, state);
            } else {
                double inv = 1.0 / static_cast<double>(batch.size());
                double batch_loss = 0.0;
                for (std::size_t idx : batch) {
                    const encoded_document& doc = docs[idx];
                    net.forward_probs(doc.input);
                    batch_loss += net.eval_loss(onehot(doc.label));
                    accumulate(grads, net.backward(inv));
                }
                epoch_objective += batch_loss / static_cast<double>(batch.size());
            }
            optimizer.step(net, grads);
            ++batches;
        }
        out.epoch_losses.push_back(epoch_objective / static_cast<double>(batches));
    }

    out.params = net.export_parameters();
    return out;
}

}  // namespace detail

// Bundled configuration of a full ensemble run. net.max_len, net.embed_dim,
// and net.vocab_size are derived from the corpus and the pipeline; the other
// architecture fields are taken as given.
struct ensemble_config {
    pipeline_config pipeline;
    network_config net;
    train_config training;
};

// Builds the shared pipeline and corpus statistics once, then trains one
// classifier per domain on that domain's documents only. Deterministic for a
// fixed seed: every random draw comes from streams derived from training.seed.
inline ensemble_model train_ensemble(const dataset& train, const ensemble_config& config) {
    config.training.validate();
    if (train.documents.empty()) throw data_error("train_ensemble: empty training set");

    ensemble_model model;
    model.pipeline = config.pipeline;
    model.net = config.net;
    model.training = config.training;
    model.domains = train.domains;

    model.net.embed_dim = model.pipeline.embed_dim;
    model.net.max_len = resolve_max_len(train, model.pipeline);
    model.net.validate();

    model.vocab = build_vocabulary(train, model.pipeline);
    model.net.vocab_size = model.vocab.size();
    model.stats = build_domain_stats(train, model.pipeline);
    model.embeddings =
        config.training.embeddings_path.empty()
            ? random_embeddings(model.vocab, model.pipeline.embed_dim,
                                mix_seed(config.training.seed, 0x9E3779B97F4A7C15ULL))
            : load_embeddings(config.training.embeddings_path, model.vocab, model.pipeline,
                              mix_seed(config.training.seed, 0x9E3779B97F4A7C15ULL));

    // bind the cost weighting to the empirical minority class (ties: negative)
    std::size_t n_pos = 0, n_neg = 0;
    for (const labeled_document& doc : train.documents)
        (doc.label == polarity::positive ? n_pos : n_neg) += 1;
    polarity minority = config.training.minority_override.value_or(
        n_pos < n_neg ? polarity::positive : polarity::negative);

    // encode every document once, grouped by domain
    std::vector<std::vector<detail::encoded_document>> per_domain(model.domains.size());
    for (const labeled_document& doc : train.documents) {
        std::size_t d = train.domain_index(doc.domain);
        detail::encoded_document enc;
        std::vector<std::string> tokens = preprocess(doc.text, model.pipeline);
        enc.input = one_hot_rows(encode_pad(tokens, model.vocab, model.net.max_len),
                                 model.vocab.size());
        enc.label = doc.label;
        per_domain[d].push_back(std::move(enc));
    }

    for (std::size_t d = 0; d < model.domains.size(); ++d) {
        const std::vector<detail::encoded_document>& docs = per_domain[d];
        cost_state state;
        const cost_state* cost_ptr = nullptr;
        if (config.training.cost_sensitive) {
            std::size_t d_min = 0, d_maj = 0;
            for (const detail::encoded_document& doc : docs)
                (doc.label == minority ? d_min : d_maj) += 1;
            state.minority_label = minority;
            // domain-local imbalance, floored at 1 to honor the state contract
            state.ir_overall =
                d_min == 0 ? 1.0
                           : std::max(1.0, static_cast<double>(d_maj) /
                                               static_cast<double>(d_min));
            cost_ptr = &state;
        }
        model.models.push_back(detail::train_domain(model.domains[d], docs, model.net,
                                                    config.training,
                                                    model.embeddings.matrix(), d, cost_ptr));
    }

    model.validate();
    return model;
}

}  // namespace capsent
