#pragma once

#include <cmath>
#include <cstddef>

#include "capsent/error.hpp"

namespace capsent {

// Binary confusion counts; "positive" is the class of interest (by convention
// the minority class when scoring imbalance-sensitive metrics).
struct confusion_matrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }

    void add(bool predicted_positive, bool actually_positive) {
        if (actually_positive)
            predicted_positive ? ++tp : ++fn;
        else
            predicted_positive ? ++fp : ++tn;
    }
};

// Each *_undefined flag marks a 0/0 ratio reported as 0.
struct metrics_report {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double g_mean = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
    bool g_mean_undefined = false;
};

// accuracy = (TP+TN)/total, precision = TP/(TP+FP), recall = TP/(TP+FN),
// f1 = 2PR/(P+R), g_mean = sqrt(sensitivity * specificity).
//
// literal_g_mean swaps specificity for the false-positive rate,
// sqrt( TP/(TP+FN) * FP/(TN+FP) ): an audit mode that reproduces a formula
// sometimes quoted with the factors confused; a perfect classifier scores 0
// under it, so it is never used for model selection here.
inline metrics_report compute_metrics(const confusion_matrix& cm, bool literal_g_mean = false) {
    if (cm.total() == 0) throw contract_error("compute_metrics: empty confusion matrix");
    metrics_report r;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());

    if (cm.tp + cm.fp == 0)
        r.precision_undefined = true;
    else
        r.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);

    if (cm.tp + cm.fn == 0)
        r.recall_undefined = true;
    else
        r.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);

    if (r.precision + r.recall == 0.0)
        r.f1_undefined = true;
    else
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);

    if (cm.tp + cm.fn == 0 || cm.tn + cm.fp == 0) {
        r.g_mean_undefined = true;
    } else {
        double sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
        double second = literal_g_mean
                            ? static_cast<double>(cm.fp) / static_cast<double>(cm.tn + cm.fp)
                            : static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
        r.g_mean = std::sqrt(sensitivity * second);
    }
    return r;
}

}  // namespace capsent
