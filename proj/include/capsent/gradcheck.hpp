#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "capsent/graph.hpp"

namespace capsent {

struct gradcheck_entry {
    std::string param;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    bool pass = true;
};

struct gradcheck_report {
    std::vector<gradcheck_entry> entries;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

// Central-difference check of the analytic gradient, h = 1e-6.
// Relative error uses a unit floor, |a - n| / max(1, |a|, |n|), so exactly-zero
// gradients do not divide the FD roundoff noise by itself. Bindings (including
// any routing coefficients) are held fixed: the function differentiated is the
// same one backward() differentiates.
inline gradcheck_report finite_difference_check(
    graph& g, const std::vector<std::pair<std::string, tensor>>& bindings, graph::ref out,
    double tolerance) {
    const double h = 1e-6;

    tensor f0 = g.forward(bindings, out);
    if (!f0.is_scalar()) throw contract_error("finite_difference_check: output must be scalar");
    auto analytic = g.backward(out, tensor::scalar(1.0));

    gradcheck_report report;
    report.tolerance = tolerance;
    for (const std::string& pname : g.param_names()) {
        gradcheck_entry entry;
        entry.param = pname;
        tensor& theta = g.param_value(pname);
        const tensor& a = analytic.at(pname);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double saved = theta[i];
            theta[i] = saved + h;
            double fp = g.forward(bindings, out).item();
            theta[i] = saved - h;
            double fm = g.forward(bindings, out).item();
            theta[i] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            double denom = std::max({1.0, std::abs(a[i]), std::abs(numeric)});
            double rel = std::abs(a[i] - numeric) / denom;
            if (rel > entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_index = i;
            }
        }
        entry.pass = entry.max_rel_err <= tolerance;
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    report.pass = report.max_rel_err <= tolerance;
    // leave the graph evaluated at the unperturbed point
    g.forward(bindings, out);
    return report;
}

}  // namespace capsent
