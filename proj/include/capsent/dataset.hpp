#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "capsent/error.hpp"
#include "capsent/polarity.hpp"
#include "capsent/rng.hpp"

namespace capsent {

struct labeled_document {
    std::string text;
    polarity label = polarity::positive;
    std::string domain;
};

// Documents plus the ordered, duplicate-free domain list. Domain index in this
// list is the domain id every weight/polarity vector is aligned to.
struct dataset {
    std::vector<labeled_document> documents;
    std::vector<std::string> domains;

    std::size_t domain_index(const std::string& name) const {
        for (std::size_t i = 0; i < domains.size(); ++i)
            if (domains[i] == name) return i;
        throw data_error("dataset: unknown domain '" + name + "'");
    }

    // appends a document, registering its domain on first appearance
    void add(labeled_document doc) {
        if (std::find(domains.begin(), domains.end(), doc.domain) == domains.end())
            domains.push_back(doc.domain);
        documents.push_back(std::move(doc));
    }
};

enum class dataset_format { jsonl, csv };

namespace detail {

inline std::string trim_ascii(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
        --e;
    return s.substr(b, e - b);
}

inline polarity parse_polarity(std::string token, std::size_t line_no) {
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (token == "positive" || token == "pos" || token == "1") return polarity::positive;
    if (token == "negative" || token == "neg" || token == "0") return polarity::negative;
    throw data_error("line " + std::to_string(line_no) + ": unknown polarity label '" + token +
                     "'");
}

// RFC-4180-style fields: comma separated, optional double quotes, "" escapes a
// quote inside a quoted field.
inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty())
                throw parse_error("line " + std::to_string(line_no) +
                                  ": quote inside unquoted csv field");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted)
        throw parse_error("line " + std::to_string(line_no) + ": unterminated csv quote");
    fields.push_back(cur);
    return fields;
}

inline labeled_document make_document(std::string text, const std::string& polarity_token,
                                      std::string domain, std::size_t line_no) {
    labeled_document doc;
    doc.text = trim_ascii(text);
    if (doc.text.empty())
        throw data_error("line " + std::to_string(line_no) + ": empty text");
    doc.label = parse_polarity(polarity_token, line_no);
    doc.domain = std::move(domain);
    if (doc.domain.empty())
        throw data_error("line " + std::to_string(line_no) + ": empty domain");
    return doc;
}

}  // namespace detail

// JSONL: one {"text":..., "polarity":..., "domain":...} object per line.
// CSV: mandatory header row text,polarity,domain. Domains are registered in
// first-appearance order. Errors carry 1-based line numbers.
inline dataset load_dataset(const std::string& path, dataset_format format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open dataset file: " + path);
    dataset out;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim_ascii(line).empty()) continue;
        if (format == dataset_format::jsonl) {
            nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
            if (rec.is_discarded())
                throw parse_error("line " + std::to_string(line_no) + ": invalid json");
            if (!rec.is_object() || !rec.contains("text") || !rec.contains("polarity") ||
                !rec.contains("domain") || !rec["text"].is_string() ||
                !rec["domain"].is_string())
                throw parse_error("line " + std::to_string(line_no) +
                                  ": record must have text, polarity, domain");
            std::string pol = rec["polarity"].is_string()
                                  ? rec["polarity"].get<std::string>()
                                  : rec["polarity"].dump();
            out.add(detail::make_document(rec["text"].get<std::string>(), pol,
                                          rec["domain"].get<std::string>(), line_no));
        } else {
            std::vector<std::string> fields = detail::split_csv_line(line, line_no);
            if (!saw_header) {
                if (fields.size() != 3 || detail::trim_ascii(fields[0]) != "text" ||
                    detail::trim_ascii(fields[1]) != "polarity" ||
                    detail::trim_ascii(fields[2]) != "domain")
                    throw parse_error("line " + std::to_string(line_no) +
                                      ": csv header must be text,polarity,domain");
                saw_header = true;
                continue;
            }
            if (fields.size() != 3)
                throw parse_error("line " + std::to_string(line_no) + ": expected 3 csv fields, got " +
                                  std::to_string(fields.size()));
            out.add(detail::make_document(fields[0], fields[1], fields[2], line_no));
        }
    }
    if (format == dataset_format::csv && !saw_header)
        throw parse_error("csv file has no header row");
    if (out.documents.empty()) throw data_error("dataset is empty: " + path);
    return out;
}

inline void save_jsonl(const dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write dataset file: " + path);
    for (const labeled_document& doc : data.documents) {
        nlohmann::json rec;
        rec["text"] = doc.text;
        rec["polarity"] = doc.label == polarity::positive ? "pos" : "neg";
        rec["domain"] = doc.domain;
        out << rec.dump() << "\n";
    }
}

// Deterministic stratified split: every (domain, polarity) cell is shuffled
// with its own derived seed and contributes clamp(round(f*n), 1, n-1) test
// documents, so both sides keep at least one document per populated cell.
inline std::pair<dataset, dataset> split(const dataset& data, double test_fraction,
                                         std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw contract_error("split: test_fraction must be in (0, 1)");

    std::vector<std::vector<std::size_t>> cells(data.domains.size() * 2);
    for (std::size_t i = 0; i < data.documents.size(); ++i) {
        const labeled_document& doc = data.documents[i];
        std::size_t d = data.domain_index(doc.domain);
        cells[d * 2 + (doc.label == polarity::positive ? 0 : 1)].push_back(i);
    }

    std::vector<bool> in_test(data.documents.size(), false);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<std::size_t>& cell = cells[c];
        if (cell.empty()) continue;
        if (cell.size() < 2) {
            std::size_t d = c / 2;
            throw data_error("split: cell (" + data.domains[d] + ", " +
                             (c % 2 == 0 ? "positive" : "negative") +
                             ") has fewer than 2 documents");
        }
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(cell.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, cell.size() - 1);
        rng r(mix_seed(seed, c));
        r.shuffle(cell);
        for (std::size_t k = 0; k < n_test; ++k) in_test[cell[k]] = true;
    }

    dataset train, test;
    train.domains = data.domains;
    test.domains = data.domains;
    for (std::size_t i = 0; i < data.documents.size(); ++i)
        (in_test[i] ? test : train).documents.push_back(data.documents[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace capsent
