#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "capsent/dbd.hpp"
#include "capsent/rng.hpp"
#include "capsent/synthetic.hpp"

using capsent::dataset;
using capsent::domain_stats;
using capsent::labeled_document;
using capsent::pipeline_config;
using capsent::polarity;

namespace {

dataset two_domain_corpus() {
    dataset d;
    d.add({"good shoe shoe", polarity::positive, "A"});
    d.add({"good book", polarity::positive, "B"});
    return d;
}

// independent brute-force oracle: its own tokenizer (plain whitespace split),
// its own counting, its own arithmetic
struct brute_stats {
    std::vector<std::string> domains;
    std::map<std::string, std::map<std::string, long long>> counts;  // domain -> token -> n
    std::map<std::string, long long> totals;

    explicit brute_stats(const dataset& d) : domains(d.domains) {
        for (const auto& doc : d.documents) {
            std::istringstream in(doc.text);
            std::string tok;
            while (in >> tok) {
                counts[doc.domain][tok]++;
                totals[doc.domain]++;
            }
        }
    }

    double tf(const std::string& token, const std::string& dom) const {
        auto it = counts.find(dom);
        long long n = 0;
        if (it != counts.end() && it->second.count(token)) n = it->second.at(token);
        if (n == 0) return 0.0;
        return static_cast<double>(n) / static_cast<double>(totals.at(dom));
    }

    double idf(const std::string& token, const std::string& dom) const {
        long long n = 0, across = 0;
        for (const auto& name : domains) {
            auto it = counts.find(name);
            long long c = (it != counts.end() && it->second.count(token)) ? it->second.at(token) : 0;
            across += c;
            if (name == dom) n = c;
        }
        if (n == 0 || across == 0) return 0.0;
        return static_cast<double>(n) / static_cast<double>(across);
    }
};

}  // namespace

TEST_CASE("build_domain_stats: hand-counted corpus") {
    pipeline_config cfg;
    domain_stats stats = capsent::build_domain_stats(two_domain_corpus(), cfg);
    REQUIRE(stats.domains() == std::vector<std::string>{"A", "B"});
    CHECK(stats.count("shoe", 0) == 2);
    CHECK(stats.count("shoe", 1) == 0);
    CHECK(stats.count("good", 0) == 1);
    CHECK(stats.count("good", 1) == 1);
    CHECK(stats.total(0) == 3);
    CHECK(stats.total(1) == 2);
}

TEST_CASE("build_domain_stats: order-free and error cases") {
    pipeline_config cfg;
    dataset forward = two_domain_corpus();
    dataset reversed;
    reversed.domains = forward.domains;  // same domain order, permuted documents
    reversed.documents.push_back(forward.documents[1]);
    reversed.documents.push_back(forward.documents[0]);
    domain_stats a = capsent::build_domain_stats(forward, cfg);
    domain_stats b = capsent::build_domain_stats(reversed, cfg);
    CHECK(a.counts() == b.counts());
    CHECK(a.totals() == b.totals());

    dataset degenerate;
    degenerate.add({"good text", polarity::positive, "A"});
    degenerate.add({"!!!", polarity::negative, "B"});  // nothing survives preprocessing
    CHECK_THROWS_MATCHES(capsent::build_domain_stats(degenerate, cfg), capsent::data_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("B")));

    dataset empty;
    CHECK_THROWS_AS(capsent::build_domain_stats(empty, cfg), capsent::data_error);
}

TEST_CASE("word_dbd: hand arithmetic on the two-domain corpus") {
    pipeline_config cfg;
    domain_stats stats = capsent::build_domain_stats(two_domain_corpus(), cfg);

    auto shoe_a = capsent::word_dbd("shoe", 0, stats);
    CHECK(shoe_a.tf == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(shoe_a.idf == 1.0);
    CHECK(shoe_a.dbd == Catch::Approx(2.0 / 3.0).margin(1e-15));

    auto good_a = capsent::word_dbd("good", 0, stats);
    CHECK(good_a.tf == Catch::Approx(1.0 / 3.0).margin(1e-15));
    CHECK(good_a.idf == 0.5);
    CHECK(good_a.dbd == Catch::Approx(1.0 / 6.0).margin(1e-15));

    auto missing = capsent::word_dbd("plane", 0, stats);
    CHECK(missing.tf == 0.0);
    CHECK(missing.idf == 0.0);
    CHECK(missing.dbd == 0.0);

    auto shoe_b = capsent::word_dbd("shoe", 1, stats);  // known token, zero in this domain
    CHECK(shoe_b.dbd == 0.0);

    CHECK_THROWS_AS(capsent::word_dbd("shoe", 5, stats), capsent::contract_error);
}

TEST_CASE("word_dbd: symmetric token across equal domains") {
    pipeline_config cfg;
    dataset d;
    d.add({"common fillera", polarity::positive, "d0"});
    d.add({"common fillerb", polarity::positive, "d1"});
    d.add({"common fillerc", polarity::positive, "d2"});
    domain_stats stats = capsent::build_domain_stats(d, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        auto r = capsent::word_dbd("common", i, stats);
        CHECK(r.idf == Catch::Approx(1.0 / 3.0).margin(1e-15));
        CHECK(r.tf == 0.5);
        CHECK(r.dbd == Catch::Approx(1.0 / 6.0).margin(1e-15));
    }
}

TEST_CASE("document_dbd: aggregation over tokens") {
    pipeline_config cfg;
    domain_stats stats = capsent::build_domain_stats(two_domain_corpus(), cfg);

    CHECK(capsent::document_dbd({"xx", "yy"}, stats) == std::vector<double>{0.0, 0.0});
    CHECK(capsent::document_dbd({}, stats) == std::vector<double>{0.0, 0.0});

    auto single = capsent::document_dbd({"shoe"}, stats);
    CHECK(single[0] == capsent::word_dbd("shoe", 0, stats).dbd);
    CHECK(single[1] == capsent::word_dbd("shoe", 1, stats).dbd);

    // three tokens: hand means are (1/6 + 2/3 + 0)/3 and (1/4 + 0 + 1/2)/3
    auto D = capsent::document_dbd({"good", "shoe", "book"}, stats);
    CHECK(D[0] == Catch::Approx(5.0 / 18.0).margin(1e-12));
    CHECK(D[1] == Catch::Approx(0.25).margin(1e-12));

    auto sums = capsent::document_dbd({"good", "shoe", "book"}, stats,
                                      capsent::dbd_aggregation::sum);
    CHECK(sums[0] == Catch::Approx(3.0 * D[0]).margin(1e-12));
    CHECK(sums[1] == Catch::Approx(3.0 * D[1]).margin(1e-12));
}

TEST_CASE("identify_domain: argmax with smallest-index ties") {
    CHECK(capsent::identify_domain({0.03, 0.75, 0.40}) == 1);  // the second domain wins
    CHECK(capsent::identify_domain({0.0, 0.0, 0.0}) == 0);
    CHECK(capsent::identify_domain({0.0, 0.0, 1.0}) == 2);
    CHECK(capsent::identify_domain({0.5, 0.7, 0.7}) == 1);
    CHECK(capsent::identify_domain({0.4}) == 0);
    CHECK_THROWS_AS(capsent::identify_domain({}), capsent::contract_error);
}

TEST_CASE("dbd range invariants and idf distribution property") {
    pipeline_config cfg;
    capsent::synthetic_spec spec;
    spec.num_domains = 5;
    spec.docs_per_domain = 12;
    spec.vocab_overlap = 0.4;
    spec.seed = 9;
    dataset d = capsent::generate_synthetic(spec);
    domain_stats stats = capsent::build_domain_stats(d, cfg);

    for (const auto& [token, row] : stats.counts()) {
        double idf_sum = 0.0;
        for (std::size_t i = 0; i < stats.num_domains(); ++i) {
            auto r = capsent::word_dbd(token, i, stats);
            CHECK(r.tf >= 0.0);
            CHECK(r.tf <= 1.0);
            CHECK(r.idf >= 0.0);
            CHECK(r.idf <= 1.0);
            CHECK(r.dbd <= r.tf + 1e-15);
            CHECK(r.dbd <= r.idf + 1e-15);
            idf_sum += r.idf;
        }
        CHECK(idf_sum == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("word_dbd and document_dbd match the brute-force oracle on random corpora") {
    pipeline_config cfg;
    capsent::rng r(2024);
    for (int trial = 0; trial < 8; ++trial) {
        // random corpus from a small shared token pool, whitespace-only text
        std::size_t n_domains = 2 + r.below(5);
        dataset d;
        for (std::size_t dom = 0; dom < n_domains; ++dom) {
            std::size_t n_docs = 2 + r.below(8);
            for (std::size_t k = 0; k < n_docs; ++k) {
                std::string text;
                std::size_t len = 1 + r.below(12);
                for (std::size_t i = 0; i < len; ++i) {
                    if (i) text += ' ';
                    text += "w" + std::to_string(r.below(15));
                }
                d.add({text, polarity::positive, "dom" + std::to_string(dom)});
            }
        }
        domain_stats stats = capsent::build_domain_stats(d, cfg);
        brute_stats oracle(d);

        for (int q = 0; q < 40; ++q) {
            std::string token = "w" + std::to_string(r.below(18));  // sometimes unseen
            std::size_t i = r.below(n_domains);
            auto got = capsent::word_dbd(token, i, stats);
            double tf = oracle.tf(token, d.domains[i]);
            double idf = oracle.idf(token, d.domains[i]);
            CHECK(got.tf == tf);
            CHECK(got.idf == idf);
            CHECK(std::abs(got.dbd - tf * idf) <= 1e-15);
        }

        // document aggregation vs direct mean of oracle products
        std::vector<std::string> doc_tokens;
        for (int i = 0; i < 6; ++i) doc_tokens.push_back("w" + std::to_string(r.below(18)));
        auto D = capsent::document_dbd(doc_tokens, stats);
        for (std::size_t i = 0; i < n_domains; ++i) {
            double mean = 0.0;
            for (const auto& token : doc_tokens)
                mean += oracle.tf(token, d.domains[i]) * oracle.idf(token, d.domains[i]);
            mean /= static_cast<double>(doc_tokens.size());
            CHECK(std::abs(D[i] - mean) <= 1e-15);
        }
    }
}

TEST_CASE("scaling every count equally never changes the routed domain") {
    pipeline_config cfg;
    capsent::synthetic_spec spec;
    spec.num_domains = 4;
    spec.docs_per_domain = 8;
    spec.seed = 77;
    dataset base = capsent::generate_synthetic(spec);
    dataset tripled;
    tripled.domains = base.domains;
    for (int rep = 0; rep < 3; ++rep)
        for (const auto& doc : base.documents) tripled.documents.push_back(doc);

    domain_stats s1 = capsent::build_domain_stats(base, cfg);
    domain_stats s3 = capsent::build_domain_stats(tripled, cfg);
    for (const auto& doc : base.documents) {
        auto tokens = capsent::preprocess(doc.text, cfg);
        CHECK(capsent::identify_domain(capsent::document_dbd(tokens, s1)) ==
              capsent::identify_domain(capsent::document_dbd(tokens, s3)));
    }
}

TEST_CASE("disjoint domain vocabularies route every evidenced document home") {
    pipeline_config cfg;
    dataset d;
    capsent::rng r(31);
    std::vector<std::vector<std::string>> vocabs = {
        {"ax", "ay", "az"}, {"bx", "by", "bz"}, {"cx", "cy", "cz"}};
    for (std::size_t dom = 0; dom < vocabs.size(); ++dom) {
        for (int k = 0; k < 6; ++k) {
            std::string text;
            std::size_t len = 2 + r.below(6);
            for (std::size_t i = 0; i < len; ++i) {
                if (i) text += ' ';
                text += vocabs[dom][r.below(vocabs[dom].size())];
            }
            d.add({text, polarity::positive, "dom" + std::to_string(dom)});
        }
    }
    domain_stats stats = capsent::build_domain_stats(d, cfg);
    for (const auto& doc : d.documents) {
        auto tokens = capsent::preprocess(doc.text, cfg);
        CHECK(capsent::identify_domain(capsent::document_dbd(tokens, stats)) ==
              d.domain_index(doc.domain));
    }
}
