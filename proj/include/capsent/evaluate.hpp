#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capsent/metrics.hpp"
#include "capsent/model.hpp"
#include "capsent/train.hpp"

namespace capsent {

// One scored document, kept verbatim in the report so every aggregate can be
// recomputed from the dump.
struct sample_outcome {
    std::string true_domain;
    polarity true_label = polarity::positive;
    std::string predicted_domain;
    polarity predicted_label = polarity::positive;
    double score = 0.0;
    bool no_evidence = false;
};

struct evaluate_report {
    std::size_t n = 0;

    // polarity task; the confusion matrix treats minority_label as "positive"
    polarity minority_label = polarity::negative;
    confusion_matrix polarity_counts;
    metrics_report polarity_metrics;

    // domain-identification task
    double domain_accuracy = 0.0;
    double domain_precision_macro = 0.0;
    double domain_recall_macro = 0.0;
    double domain_precision_micro = 0.0;
    double domain_recall_micro = 0.0;

    // per-domain breakdown over the documents truly belonging to each domain
    std::vector<std::string> domains;
    std::vector<std::size_t> per_domain_count;
    std::vector<double> per_domain_polarity_accuracy;
    std::vector<double> per_domain_identification_accuracy;

    std::vector<sample_outcome> samples;
};

// Scores a test set against any predictor, so a stub (or a loaded model) can
// drive the same aggregation. The polarity confusion matrix is oriented
// toward the test set's own minority class; ties resolve to negative.
inline evaluate_report evaluate_with(
    const dataset& test,
    const std::function<prediction(const labeled_document&)>& predictor) {
    if (test.documents.empty()) throw contract_error("evaluate: empty test set");

    evaluate_report report;
    report.n = test.documents.size();
    report.domains = test.domains;

    std::size_t n_pos = 0, n_neg = 0;
    for (const labeled_document& doc : test.documents)
        (doc.label == polarity::positive ? n_pos : n_neg) += 1;
    report.minority_label = n_pos < n_neg ? polarity::positive : polarity::negative;

    std::size_t d = test.domains.size();
    std::vector<std::size_t> truth_count(d, 0), predicted_count(d, 0), correct_count(d, 0);
    std::vector<std::size_t> polarity_hits(d, 0);
    std::size_t domain_hits = 0;

    for (const labeled_document& doc : test.documents) {
        prediction p = predictor(doc);
        sample_outcome row;
        row.true_domain = doc.domain;
        row.true_label = doc.label;
        row.predicted_domain = p.domain;
        row.predicted_label = p.label;
        row.score = p.score;
        row.no_evidence = p.no_evidence;
        report.samples.push_back(row);

        report.polarity_counts.add(p.label == report.minority_label,
                                   doc.label == report.minority_label);

        std::size_t truth = test.domain_index(doc.domain);
        ++truth_count[truth];
        if (p.label == doc.label) ++polarity_hits[truth];
        for (std::size_t i = 0; i < d; ++i)
            if (test.domains[i] == p.domain) ++predicted_count[i];
        if (p.domain == doc.domain) {
            ++domain_hits;
            ++correct_count[truth];
        }
    }

    report.polarity_metrics = compute_metrics(report.polarity_counts);

    double n = static_cast<double>(report.n);
    report.domain_accuracy = static_cast<double>(domain_hits) / n;
    // micro averages over a single-label task coincide with accuracy
    report.domain_precision_micro = report.domain_accuracy;
    report.domain_recall_micro = report.domain_accuracy;
    double precision_sum = 0.0, recall_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (predicted_count[i] > 0)
            precision_sum += static_cast<double>(correct_count[i]) /
                             static_cast<double>(predicted_count[i]);
        if (truth_count[i] > 0)
            recall_sum +=
                static_cast<double>(correct_count[i]) / static_cast<double>(truth_count[i]);
    }
    report.domain_precision_macro = precision_sum / static_cast<double>(d);
    report.domain_recall_macro = recall_sum / static_cast<double>(d);

    report.per_domain_count = truth_count;
    report.per_domain_polarity_accuracy.resize(d, 0.0);
    report.per_domain_identification_accuracy.resize(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        if (truth_count[i] == 0) continue;
        double denom = static_cast<double>(truth_count[i]);
        report.per_domain_polarity_accuracy[i] =
            static_cast<double>(polarity_hits[i]) / denom;
        report.per_domain_identification_accuracy[i] =
            static_cast<double>(correct_count[i]) / denom;
    }
    return report;
}

inline evaluate_report evaluate(const ensemble_model& model, const dataset& test) {
    return evaluate_with(
        test, [&](const labeled_document& doc) { return predict(model, doc.text); });
}

// k-fold cross validation: deterministic shuffle, near-equal contiguous
// blocks, one retraining per fold on the complement using the model's own
// stored configuration. Returns one report per fold.
inline std::vector<evaluate_report> evaluate_folds(const ensemble_model& model,
                                                   const dataset& full, std::size_t folds) {
    if (folds < 2) throw contract_error("evaluate_folds: need at least 2 folds");
    if (folds > full.documents.size())
        throw contract_error("evaluate_folds: more folds than documents");

    std::vector<std::size_t> order(full.documents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng shuffler(mix_seed(model.training.seed, 0xF01D5ULL));
    shuffler.shuffle(order);

    ensemble_config config{model.pipeline, model.net, model.training};
    std::vector<evaluate_report> reports;
    std::size_t n = order.size(), base = n / folds, extra = n % folds, start = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t size = base + (f < extra ? 1 : 0);
        dataset train_part, test_part;
        train_part.domains = full.domains;
        test_part.domains = full.domains;
        for (std::size_t i = 0; i < n; ++i) {
            const labeled_document& doc = full.documents[order[i]];
            if (i >= start && i < start + size)
                test_part.documents.push_back(doc);
            else
                train_part.documents.push_back(doc);
        }
        start += size;
        ensemble_model fold_model = train_ensemble(train_part, config);
        reports.push_back(evaluate(fold_model, test_part));
    }
    return reports;
}

inline nlohmann::json report_to_json(const evaluate_report& report) {
    nlohmann::json polarity_task = {
        {"minority_label", polarity_name(report.minority_label)},
        {"confusion",
         {{"tp", report.polarity_counts.tp},
          {"fp", report.polarity_counts.fp},
          {"tn", report.polarity_counts.tn},
          {"fn", report.polarity_counts.fn}}},
        {"accuracy", report.polarity_metrics.accuracy},
        {"precision", report.polarity_metrics.precision},
        {"recall", report.polarity_metrics.recall},
        {"f1", report.polarity_metrics.f1},
        {"g_mean", report.polarity_metrics.g_mean},
    };
    nlohmann::json domain_task = {
        {"accuracy", report.domain_accuracy},
        {"precision_macro", report.domain_precision_macro},
        {"recall_macro", report.domain_recall_macro},
        {"precision_micro", report.domain_precision_micro},
        {"recall_micro", report.domain_recall_micro},
    };
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t i = 0; i < report.domains.size(); ++i)
        table.push_back({{"domain", report.domains[i]},
                         {"documents", report.per_domain_count[i]},
                         {"polarity_accuracy", report.per_domain_polarity_accuracy[i]},
                         {"domain_accuracy", report.per_domain_identification_accuracy[i]}});
    nlohmann::json samples = nlohmann::json::array();
    for (const sample_outcome& s : report.samples)
        samples.push_back({{"true_domain", s.true_domain},
                           {"true_polarity", polarity_name(s.true_label)},
                           {"predicted_domain", s.predicted_domain},
                           {"predicted_polarity", polarity_name(s.predicted_label)},
                           {"score", s.score},
                           {"no_evidence", s.no_evidence}});
    return {{"documents", report.n},
            {"polarity", polarity_task},
            {"domain_identification", domain_task},
            {"per_domain", table},
            {"samples", samples}};
}

}  // namespace capsent
