#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capsent/dbd.hpp"
#include "capsent/embedding.hpp"
#include "capsent/error.hpp"
#include "capsent/network.hpp"
#include "capsent/polarity.hpp"
#include "capsent/textpipe.hpp"

namespace capsent {

// Knobs of the training procedure. batch_size applies as given; callers that
// want the conventional larger cost-sensitive batch choose it explicitly.
struct train_config {
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    bool cost_sensitive = false;
    // by default the minority class is detected from the training split
    // (ties resolve to negative); the override pins it explicitly
    std::optional<polarity> minority_override;
    std::string embeddings_path;  // empty: seeded random initialization

    void validate() const {
        if (epochs < 1 || batch_size < 1)
            throw contract_error("train_config: epochs and batch_size must be >= 1");
        if (!(learning_rate > 0.0))
            throw contract_error("train_config: learning_rate must be positive");
    }
};

// One trained per-domain classifier plus its training provenance.
struct domain_model {
    std::string domain;
    domain_parameters params;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    std::vector<double> epoch_losses;  // mean objective per epoch
};

// Everything needed to predict: the shared text pipeline, the per-domain
// classifiers (aligned with `domains`), and the corpus statistics.
struct ensemble_model {
    static constexpr std::uint32_t format_version = 1;

    pipeline_config pipeline;
    network_config net;
    train_config training;
    std::vector<std::string> domains;
    std::vector<domain_model> models;
    domain_stats stats;
    vocabulary vocab;
    embedding_table embeddings;

    dbd_aggregation aggregation() const {
        return pipeline.dbd_sum_mode ? dbd_aggregation::sum : dbd_aggregation::mean;
    }

    void validate() const {
        if (domains.empty()) throw contract_error("ensemble_model: no domains");
        if (models.size() != domains.size() || stats.num_domains() != domains.size())
            throw contract_error("ensemble_model: domain alignment broken");
        for (std::size_t i = 0; i < domains.size(); ++i) {
            if (models[i].domain != domains[i] || stats.domains()[i] != domains[i])
                throw contract_error("ensemble_model: domain ordering differs between parts");
            models[i].params.rnn.validate();
            models[i].params.caps.validate();
            models[i].params.head.validate();
            if (models[i].params.head.num_classes() != 2)
                throw contract_error("ensemble_model: polarity head must emit 2 classes");
            if (net.vocab_size > 0) {
                const tensor& e = models[i].params.embedding;
                if (e.rank() != 2 || e.dim(0) != net.vocab_size || e.dim(1) != net.embed_dim)
                    throw contract_error(
                        "ensemble_model: fine-tuned embedding misaligned for domain " +
                        domains[i]);
                for (std::size_t c = 0; c < e.dim(1); ++c)
                    if (e.at(0, c) != 0.0)
                        throw contract_error("ensemble_model: embedding PAD row moved off zero");
            }
        }
        if (net.vocab_size > 0 && net.vocab_size != vocab.size())
            throw contract_error("ensemble_model: network vocab_size differs from vocabulary");
        if (embeddings.vocab_size() != vocab.size() || embeddings.dim() != net.embed_dim)
            throw contract_error("ensemble_model: embedding table misaligned with vocabulary");
        net.validate();
        training.validate();
    }
};

// C_i = Pos_i when Pos_i >= Neg_i (ties positive), else -Neg_i.
inline std::vector<double> polarity_vector(
    const std::vector<std::pair<double, double>>& per_domain_probs) {
    std::vector<double> c;
    c.reserve(per_domain_probs.size());
    for (const auto& [pos, neg] : per_domain_probs) {
        if (pos < 0.0 || neg < 0.0 || std::abs(pos + neg - 1.0) > 1e-9)
            throw contract_error("polarity_vector: (Pos, Neg) must be a probability pair");
        c.push_back(pos >= neg ? pos : -neg);
    }
    return c;
}

struct combined_prediction {
    std::size_t domain_index = 0;
    polarity label = polarity::positive;
    double score = 0.0;
};

// Joint decision: the domain is argmax of the belonging weights alone; the
// polarity is the sign of the weighted sum of the signed confidences, with
// score 0 counting as positive.
inline combined_prediction combine(const std::vector<double>& d, const std::vector<double>& c) {
    if (d.size() != c.size())
        throw contract_error("combine: weight and confidence vectors differ in length");
    combined_prediction out;
    out.domain_index = identify_domain(d);
    for (std::size_t i = 0; i < d.size(); ++i) out.score += d[i] * c[i];
    out.label = out.score >= 0.0 ? polarity::positive : polarity::negative;
    return out;
}

// Full diagnostics of one prediction. no_evidence marks documents whose
// belonging weights are all zero (nothing left after preprocessing, or no
// token known to the statistics); the tie rules then pick the first domain
// and positive polarity.
struct prediction {
    std::string domain;
    std::size_t domain_index = 0;
    polarity label = polarity::positive;
    double score = 0.0;
    std::vector<double> dbd;              // D, aligned with the model's domains
    std::vector<double> polarity_scores;  // C, same alignment
    bool no_evidence = false;
};

inline prediction predict(const ensemble_model& model, const std::string& text) {
    std::vector<std::string> tokens = preprocess(text, model.pipeline);
    std::vector<std::size_t> encoded = encode_pad(tokens, model.vocab, model.net.max_len);
    // Each domain classifier embeds with its own fine-tuned matrix; the shared
    // table only serves models without an embedding stage.
    tensor shared_x;
    if (model.net.vocab_size == 0) shared_x = embed(encoded, model.embeddings);

    std::vector<std::pair<double, double>> per_domain;
    per_domain.reserve(model.models.size());
    for (const domain_model& dm : model.models) {
        tensor p = model.net.vocab_size > 0
                       ? domain_forward(embed(encoded, dm.params.embedding), dm.params, model.net)
                       : domain_forward(shared_x, dm.params, model.net);
        per_domain.emplace_back(p[0], p[1]);
    }

    prediction out;
    out.polarity_scores = polarity_vector(per_domain);
    out.dbd = document_dbd(tokens, model.stats, model.aggregation());
    combined_prediction joint = combine(out.dbd, out.polarity_scores);
    out.domain_index = joint.domain_index;
    out.domain = model.domains[joint.domain_index];
    out.label = joint.label;
    out.score = joint.score;
    out.no_evidence = true;
    for (double w : out.dbd)
        if (w != 0.0) out.no_evidence = false;
    return out;
}

}  // namespace capsent
