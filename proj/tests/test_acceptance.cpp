// Integration gate: one test case per release criterion, each printing a
// machine-readable verdict line. Run the binary directly to see all eight
// lines; under ctest a failing criterion also fails the suite.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "capsent/capsule.hpp"
#include "capsent/dbd.hpp"
#include "capsent/evaluate.hpp"
#include "capsent/gradcheck.hpp"
#include "capsent/metrics.hpp"
#include "capsent/model.hpp"
#include "capsent/network.hpp"
#include "capsent/rng.hpp"
#include "capsent/serialize.hpp"
#include "capsent/synthetic.hpp"
#include "capsent/train.hpp"

using capsent::graph;
using capsent::rng;
using capsent::tensor;

namespace {

void verdict(int criterion, bool ok) {
    std::printf("ACCEPTANCE %d: %s\n", criterion, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

tensor random_tensor(std::vector<std::size_t> shape, rng& r, double lo = -1.0, double hi = 1.0) {
    tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(lo, hi);
    return t;
}

// --- gradient-check fixtures -------------------------------------------------

struct gru_refs {
    graph::ref Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
};

gru_refs add_gru_params(graph& g, const std::string& p, std::size_t e, std::size_t h, rng& r) {
    gru_refs w;
    w.Wz = g.param(p + ".Wz", random_tensor({h, e}, r));
    w.Wr = g.param(p + ".Wr", random_tensor({h, e}, r));
    w.Wh = g.param(p + ".Wh", random_tensor({h, e}, r));
    w.Uz = g.param(p + ".Uz", random_tensor({h, h}, r));
    w.Ur = g.param(p + ".Ur", random_tensor({h, h}, r));
    w.Uh = g.param(p + ".Uh", random_tensor({h, h}, r));
    w.bz = g.param(p + ".bz", random_tensor({h}, r));
    w.br = g.param(p + ".br", random_tensor({h}, r));
    w.bh = g.param(p + ".bh", random_tensor({h}, r));
    return w;
}

graph::ref gru_step(graph& g, const gru_refs& w, graph::ref x, graph::ref h_prev,
                    graph::ref ones) {
    graph::ref z = g.sigmoid(g.add(g.add(g.matmul(w.Wz, x), g.matmul(w.Uz, h_prev)), w.bz));
    graph::ref r = g.sigmoid(g.add(g.add(g.matmul(w.Wr, x), g.matmul(w.Ur, h_prev)), w.br));
    graph::ref cand =
        g.tanh(g.add(g.add(g.matmul(w.Wh, x), g.matmul(w.Uh, g.mul(r, h_prev))), w.bh));
    return g.add(g.mul(g.sub(ones, z), h_prev), g.mul(z, cand));
}

// (a) one recurrent cell update, squared-norm loss over the new state
bool gru_step_gradient_ok(std::uint64_t seed) {
    const std::size_t e = 4, h = 3;
    rng r(seed);
    graph g;
    gru_refs w = add_gru_params(g, "g", e, h, r);
    graph::ref x = g.input("x", {e});
    graph::ref h0 = g.input("h0", {h});
    graph::ref ones = g.constant(tensor({h}, 1.0));
    graph::ref h1 = gru_step(g, w, x, h0, ones);
    graph::ref loss = g.sum(g.mul(h1, h1));
    auto report = capsent::finite_difference_check(
        g, {{"x", random_tensor({e}, r)}, {"h0", random_tensor({h}, r)}}, loss, 1e-4);
    return report.pass;
}

// (b) three bidirectional steps, loss over every concatenated state
bool bigru_gradient_ok(std::uint64_t seed) {
    const std::size_t m = 3, e = 3, h = 2;
    rng r(seed);
    graph g;
    gru_refs fw = add_gru_params(g, "f", e, h, r);
    gru_refs bw = add_gru_params(g, "b", e, h, r);
    graph::ref x = g.input("x", {m, e});
    graph::ref zero = g.constant(tensor({h}, 0.0));
    graph::ref ones = g.constant(tensor({h}, 1.0));

    std::vector<graph::ref> rows(m), h_fwd(m), h_bwd(m);
    for (std::size_t t = 0; t < m; ++t) rows[t] = g.row(x, t);
    graph::ref state = zero;
    for (std::size_t t = 0; t < m; ++t) h_fwd[t] = state = gru_step(g, fw, rows[t], state, ones);
    state = zero;
    for (std::size_t t = m; t-- > 0;) h_bwd[t] = state = gru_step(g, bw, rows[t], state, ones);

    graph::ref loss = -1;
    for (std::size_t t = 0; t < m; ++t) {
        graph::ref cat = g.concat({h_fwd[t], h_bwd[t]});
        graph::ref sq = g.sum(g.mul(cat, cat));
        loss = (t == 0) ? sq : g.add(loss, sq);
    }
    auto report =
        capsent::finite_difference_check(g, {{"x", random_tensor({m, e}, r)}}, loss, 1e-4);
    return report.pass;
}

// (c) capsule transformation + routing; the couplings come from a numeric
// routing run on the evaluated predictions and re-enter as a fixed input
bool capsule_gradient_ok(std::uint64_t seed) {
    const std::size_t m = 3, in_dim = 4, caps = 2, dim = 2, iterations = 3;
    rng r(seed);
    graph g;
    graph::ref hidden = g.input("h", {m, in_dim});
    graph::ref c = g.input("c", {m, caps});
    std::vector<graph::ref> u(m * caps);
    for (std::size_t i = 0; i < m; ++i) {
        graph::ref row_i = g.row(hidden, i);
        for (std::size_t j = 0; j < caps; ++j) {
            graph::ref w =
                g.param("w." + std::to_string(i) + "." + std::to_string(j),
                        random_tensor({dim, in_dim}, r));
            u[i * caps + j] = g.matmul(w, row_i);
        }
    }
    graph::ref loss = -1;
    for (std::size_t j = 0; j < caps; ++j) {
        graph::ref s = -1;
        for (std::size_t i = 0; i < m; ++i) {
            graph::ref weighted = g.mul(g.elem(c, i * caps + j), u[i * caps + j]);
            s = (i == 0) ? weighted : g.add(s, weighted);
        }
        graph::ref v = g.squash(s);
        graph::ref sq = g.sum(g.mul(v, v));
        loss = (j == 0) ? sq : g.add(loss, sq);
    }

    tensor h = random_tensor({m, in_dim}, r);
    g.new_pass();
    g.bind("h", h);
    std::vector<std::vector<tensor>> u_hat(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < caps; ++j) u_hat[i].push_back(g.eval(u[i * caps + j]));
    capsent::routing_result routed = capsent::dynamic_routing(u_hat, iterations);

    auto report =
        capsent::finite_difference_check(g, {{"h", h}, {"c", routed.c}}, loss, 1e-4);
    return report.pass;
}

// (d) the whole per-domain classifier, embedding stage included
bool full_stack_gradient_ok(std::uint64_t seed) {
    capsent::network_config cfg;
    cfg.vocab_size = 7;
    cfg.max_len = 3;
    cfg.embed_dim = 3;
    cfg.hidden = 2;
    cfg.num_capsules = 2;
    cfg.capsule_dim = 2;
    cfg.routing_iterations = 3;
    rng r(seed);
    capsent::domain_parameters params = capsent::init_domain_parameters(cfg, r);
    params.embedding = random_tensor({cfg.vocab_size, cfg.embed_dim}, r, -0.25, 0.25);
    for (std::size_t col = 0; col < cfg.embed_dim; ++col) params.embedding.at(0, col) = 0.0;
    capsent::domain_network net(cfg, params);

    std::vector<std::size_t> indices = {2 + r.below(5), 1, 0};  // content, OOV, PAD
    tensor s = capsent::one_hot_rows(indices, cfg.vocab_size);
    net.forward_probs(s);
    tensor y = r.below(2) == 0 ? tensor({2}, {1.0, 0.0}) : tensor({2}, {0.0, 1.0});
    auto report = capsent::finite_difference_check(
        net.value_graph(), {{"s", s}, {"c", net.last_coupling()}, {"y", y}}, net.loss_ref(),
        1e-4);
    return report.pass;
}

}  // namespace

TEST_CASE("acceptance 1: worked-example joint decision") {
    capsent::combined_prediction joint =
        capsent::combine({0.03, 0.75, 0.40}, {0.06, 0.08, -0.03});
    bool ok = joint.domain_index == 1  // the second domain
              && joint.label == capsent::polarity::positive &&
              std::abs(joint.score - 0.049) <= 1e-3 && std::abs(joint.score - 0.0498) <= 1e-12;
    verdict(1, ok);
    CHECK(ok);
}

TEST_CASE("acceptance 2: gradient integrity across the stack") {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ok = ok && gru_step_gradient_ok(seed);
        ok = ok && bigru_gradient_ok(100 + seed);
        ok = ok && capsule_gradient_ok(200 + seed);
        ok = ok && full_stack_gradient_ok(300 + seed);
    }
    double elapsed = seconds_since(t0);
    INFO("elapsed " << elapsed << "s");
    ok = ok && elapsed < 30.0;
    verdict(2, ok);
    CHECK(ok);
}

TEST_CASE("acceptance 3: routing invariants over 1000 random instances") {
    auto t0 = std::chrono::steady_clock::now();
    rng r(33);
    bool ok = true;
    for (int k = 0; k < 1000; ++k) {
        std::size_t n = 1 + r.below(6), caps = 1 + r.below(4), dim = 1 + r.below(4);
        std::size_t iterations = 1 + r.below(4);
        std::vector<std::vector<tensor>> u_hat(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < caps; ++j)
                u_hat[i].push_back(random_tensor({dim}, r, -2.0, 2.0));
        capsent::routing_result res = capsent::dynamic_routing(u_hat, iterations);
        for (std::size_t i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < caps; ++j) {
                ok = ok && res.c.at(i, j) >= 0.0;
                row_sum += res.c.at(i, j);
            }
            ok = ok && std::abs(row_sum - 1.0) <= 1e-12;
        }
        for (const tensor& v : res.v) {
            double norm_sq = 0.0;
            for (std::size_t d = 0; d < v.size(); ++d) norm_sq += v[d] * v[d];
            double norm = std::sqrt(norm_sq);
            ok = ok && norm >= 0.0 && norm < 1.0;
        }
    }
    double elapsed = seconds_since(t0);
    INFO("elapsed " << elapsed << "s");
    ok = ok && elapsed < 10.0;
    verdict(3, ok);
    CHECK(ok);
}

TEST_CASE("acceptance 4: belonging-degree equivalence with a counting oracle") {
    auto t0 = std::chrono::steady_clock::now();
    rng r(44);
    capsent::pipeline_config pipe;
    pipe.min_count = 1;
    const std::size_t token_types = 20;
    bool ok = true;

    for (int corpus = 0; corpus < 20; ++corpus) {
        std::size_t n_domains = 1 + r.below(10);
        std::size_t per_domain = 2 + r.below(100 / n_domains - 1);  // total <= 100 docs
        capsent::dataset data;
        // raw token lists kept aside for the independent recount
        std::vector<std::vector<std::vector<std::string>>> kept(n_domains);
        for (std::size_t d = 0; d < n_domains; ++d) {
            for (std::size_t k = 0; k < per_domain; ++k) {
                std::size_t len = 3 + r.below(10);
                std::vector<std::string> tokens;
                for (std::size_t i = 0; i < len; ++i)
                    tokens.push_back("w" + std::to_string(r.below(token_types)));
                capsent::labeled_document doc;
                doc.domain = "dom" + std::to_string(d);
                doc.label = k % 2 == 0 ? capsent::polarity::positive
                                       : capsent::polarity::negative;
                for (std::size_t i = 0; i < tokens.size(); ++i) {
                    if (i) doc.text += ' ';
                    doc.text += tokens[i];
                }
                kept[d].push_back(tokens);
                data.add(std::move(doc));
            }
        }
        capsent::domain_stats stats = capsent::build_domain_stats(data, pipe);

        // independent recount with plain maps
        std::map<std::string, std::vector<std::uint64_t>> counts;
        std::vector<std::uint64_t> totals(n_domains, 0);
        for (std::size_t d = 0; d < n_domains; ++d)
            for (const auto& tokens : kept[d])
                for (const std::string& tok : tokens) {
                    auto [it, fresh] =
                        counts.try_emplace(tok, std::vector<std::uint64_t>(n_domains, 0));
                    ++it->second[d];
                    ++totals[d];
                }

        auto brute_dbd = [&](const std::string& tok, std::size_t d) {
            auto it = counts.find(tok);
            std::uint64_t n_i = it == counts.end() ? 0 : it->second[d];
            if (n_i == 0) return std::array<double, 3>{0.0, 0.0, 0.0};
            std::uint64_t across = 0;
            for (std::size_t j = 0; j < n_domains; ++j) across += it->second[j];
            double tf = static_cast<double>(n_i) / static_cast<double>(totals[d]);
            double idf = static_cast<double>(n_i) / static_cast<double>(across);
            return std::array<double, 3>{tf, idf, tf * idf};
        };

        for (std::size_t t = 0; t < token_types + 1; ++t) {
            // the extra index probes a token the corpus never contained
            std::string tok = t < token_types ? "w" + std::to_string(t) : "never-seen";
            for (std::size_t d = 0; d < n_domains; ++d) {
                auto it = counts.find(tok);
                std::uint64_t want = it == counts.end() ? 0 : it->second[d];
                ok = ok && stats.count(tok, d) == want;
                capsent::word_dbd_result mine = capsent::word_dbd(tok, d, stats);
                auto brute = brute_dbd(tok, d);
                ok = ok && std::abs(mine.tf - brute[0]) <= 1e-15 &&
                     std::abs(mine.idf - brute[1]) <= 1e-15 &&
                     std::abs(mine.dbd - brute[2]) <= 1e-15;
            }
        }
        for (int probe = 0; probe < 5; ++probe) {
            const auto& tokens = kept[r.below(n_domains)][r.below(per_domain)];
            std::vector<double> mine = capsent::document_dbd(tokens, stats);
            for (std::size_t d = 0; d < n_domains; ++d) {
                double sum = 0.0;
                for (const std::string& tok : tokens) sum += brute_dbd(tok, d)[2];
                ok = ok && std::abs(mine[d] - sum / static_cast<double>(tokens.size())) <= 1e-15;
            }
        }
    }
    double elapsed = seconds_since(t0);
    INFO("elapsed " << elapsed << "s");
    ok = ok && elapsed < 10.0;
    verdict(4, ok);
    CHECK(ok);
}

TEST_CASE("acceptance 5: synthetic end-to-end accuracy at default training") {
    auto t0 = std::chrono::steady_clock::now();
    capsent::synthetic_spec spec;
    spec.num_domains = 10;
    spec.docs_per_domain = 40;
    spec.vocab_overlap = 0.0;
    spec.imbalance_ratio = 1.0;
    capsent::dataset all = capsent::generate_synthetic(spec);
    auto [train_split, test_split] = capsent::split(all, 0.2, 42);

    capsent::ensemble_config cfg;  // all defaults
    capsent::ensemble_model model = capsent::train_ensemble(train_split, cfg);
    capsent::evaluate_report rep = capsent::evaluate(model, test_split);

    double elapsed = seconds_since(t0);
    INFO("domain " << rep.domain_accuracy << " polarity " << rep.polarity_metrics.accuracy
                   << " elapsed " << elapsed << "s");
    bool ok = rep.domain_accuracy >= 0.99 && rep.polarity_metrics.accuracy >= 0.90 &&
              elapsed <= 300.0;
    verdict(5, ok);
    CHECK(rep.domain_accuracy >= 0.99);
    CHECK(rep.polarity_metrics.accuracy >= 0.90);
    CHECK(ok);
}

TEST_CASE("acceptance 6: cost weighting lifts minority recall under imbalance") {
    auto t0 = std::chrono::steady_clock::now();
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        capsent::synthetic_spec spec;
        spec.num_domains = 3;
        spec.docs_per_domain = 60;
        spec.imbalance_ratio = 9.0;
        spec.seed = 1000 + seed;
        capsent::dataset all = capsent::generate_synthetic(spec);
        auto [train_split, test_split] = capsent::split(all, 0.25, seed);

        capsent::ensemble_config plain;
        plain.training.seed = seed;
        capsent::ensemble_config weighted = plain;
        weighted.training.cost_sensitive = true;
        weighted.training.batch_size = 128;

        double plain_recall =
            capsent::evaluate(capsent::train_ensemble(train_split, plain), test_split)
                .polarity_metrics.recall;
        double weighted_recall =
            capsent::evaluate(capsent::train_ensemble(train_split, weighted), test_split)
                .polarity_metrics.recall;
        INFO("seed " << seed << ": plain " << plain_recall << " weighted " << weighted_recall);
        if (weighted_recall >= plain_recall) ++wins;
    }
    double elapsed = seconds_since(t0);
    INFO("wins " << wins << "/5, elapsed " << elapsed << "s");
    bool ok = wins >= 4 && elapsed <= 600.0;
    verdict(6, ok);
    CHECK(wins >= 4);
    CHECK(ok);
}

TEST_CASE("acceptance 7: metric formulas agree exactly with a recount scorer") {
    rng r(77);
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + r.below(60);
        capsent::confusion_matrix cm;
        std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool predicted = r.below(2) == 1, actual = r.below(2) == 1;
            cm.add(predicted, actual);
            if (predicted && actual) ++tp;
            if (predicted && !actual) ++fp;
            if (!predicted && !actual) ++tn;
            if (!predicted && actual) ++fn;
        }
        capsent::metrics_report m = capsent::compute_metrics(cm);
        double accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
        double precision =
            tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        double recall =
            tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        double f1 = precision + recall == 0.0
                        ? 0.0
                        : 2.0 * precision * recall / (precision + recall);
        double g_mean = tp + fn == 0 || tn + fp == 0
                            ? 0.0
                            : std::sqrt(static_cast<double>(tp) / (tp + fn) *
                                        (static_cast<double>(tn) / (tn + fp)));
        ok = ok && m.accuracy == accuracy && m.precision == precision && m.recall == recall &&
             m.f1 == f1 && m.g_mean == g_mean;
    }
    // a classifier that copies the labels scores 1.0 on all five metrics
    for (int trial = 0; trial < 10; ++trial) {
        capsent::confusion_matrix cm;
        cm.add(true, true);
        cm.add(false, false);
        for (int i = 0; i < 20; ++i) {
            bool label = r.below(2) == 1;
            cm.add(label, label);
        }
        capsent::metrics_report m = capsent::compute_metrics(cm);
        ok = ok && m.accuracy == 1.0 && m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0 &&
             m.g_mean == 1.0;
    }
    verdict(7, ok);
    CHECK(ok);
}

TEST_CASE("acceptance 8: deterministic training and lossless persistence") {
    namespace fs = std::filesystem;
    capsent::synthetic_spec spec;
    spec.num_domains = 2;
    spec.docs_per_domain = 30;
    spec.seed = 88;
    capsent::dataset data = capsent::generate_synthetic(spec);

    capsent::ensemble_config cfg;  // defaults throughout
    capsent::ensemble_model first = capsent::train_ensemble(data, cfg);
    capsent::ensemble_model second = capsent::train_ensemble(data, cfg);

    fs::path path_a = fs::temp_directory_path() / "acceptance_twin_a.capsent";
    fs::path path_b = fs::temp_directory_path() / "acceptance_twin_b.capsent";
    capsent::save_model(first, path_a.string());
    capsent::save_model(second, path_b.string());

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    std::string bytes_a = slurp(path_a), bytes_b = slurp(path_b);
    bool identical = !bytes_a.empty() && bytes_a == bytes_b;

    capsent::ensemble_model loaded = capsent::load_model(path_a.string());
    capsent::synthetic_spec probe_spec;
    probe_spec.num_domains = 2;
    probe_spec.docs_per_domain = 25;  // 50 probe texts
    probe_spec.seed = 99;
    capsent::dataset probe = capsent::generate_synthetic(probe_spec);
    bool predictions_unchanged = probe.documents.size() == 50;
    for (const capsent::labeled_document& doc : probe.documents) {
        capsent::prediction p = capsent::predict(first, doc.text);
        capsent::prediction q = capsent::predict(loaded, doc.text);
        bool same = p.domain_index == q.domain_index && p.domain == q.domain &&
                    p.label == q.label && p.score == q.score &&
                    p.no_evidence == q.no_evidence && p.dbd == q.dbd &&
                    p.polarity_scores == q.polarity_scores;
        predictions_unchanged = predictions_unchanged && same;
    }
    fs::remove(path_a);
    fs::remove(path_b);

    bool ok = identical && predictions_unchanged;
    verdict(8, ok);
    CHECK(identical);
    CHECK(predictions_unchanged);
    CHECK(ok);
}
