#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "capsent/error.hpp"
#include "capsent/rng.hpp"
#include "capsent/tensor.hpp"
#include "capsent/textpipe.hpp"

namespace capsent {

// V x E matrix, one row per vocabulary index. Row 0 (PAD) is identically
// zero and treated as untrainable everywhere.
class embedding_table {
  public:
    embedding_table() = default;

    explicit embedding_table(tensor matrix) : matrix_(std::move(matrix)) {
        if (matrix_.rank() != 2) throw shape_error("embedding_table: matrix must be rank 2");
        for (std::size_t c = 0; c < matrix_.dim(1); ++c)
            if (matrix_.at(0, c) != 0.0)
                throw contract_error("embedding_table: PAD row must be zero");
    }

    std::size_t vocab_size() const { return matrix_.dim(0); }
    std::size_t dim() const { return matrix_.dim(1); }
    const tensor& matrix() const { return matrix_; }

    tensor row(std::size_t i) const {
        if (i >= vocab_size())
            throw contract_error("embedding_table: row " + std::to_string(i) + " out of range");
        return row_of(matrix_, i);
    }

  private:
    tensor matrix_;
};

namespace detail {

inline void fill_random_row(tensor& m, std::size_t r, std::uint64_t seed) {
    rng gen(mix_seed(seed, r));
    for (std::size_t c = 0; c < m.dim(1); ++c) m.at(r, c) = gen.uniform(-0.25, 0.25);
}

}  // namespace detail

// All rows (except PAD) seeded uniform in [-0.25, 0.25]; each row's stream is
// derived from its index so the table is stable under vocabulary growth at the
// tail.
inline embedding_table random_embeddings(const vocabulary& vocab, std::size_t embed_dim,
                                         std::uint64_t seed) {
    if (embed_dim < 1) throw contract_error("random_embeddings: embed_dim must be >= 1");
    tensor m({vocab.size(), embed_dim});
    for (std::size_t r = 1; r < vocab.size(); ++r) detail::fill_random_row(m, r, seed);
    return embedding_table(std::move(m));
}

// Textual word-vector file: header "<count> <dim>", then one token and <dim>
// floats per line. Vocabulary tokens found in the file copy its vector; the
// rest (including OOV) get the seeded random initialization; PAD stays zero.
inline embedding_table load_embeddings(const std::string& path, const vocabulary& vocab,
                                       const pipeline_config& config, std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open word-vector file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error("word-vector file is empty: " + path);
    std::istringstream header(line);
    long long count = -1, dim = -1;
    if (!(header >> count >> dim) || count < 0 || dim < 1)
        throw parse_error("line 1: malformed word-vector header");
    if (static_cast<std::size_t>(dim) != config.embed_dim)
        throw format_error("word-vector dimension " + std::to_string(dim) +
                           " does not match configured embed_dim " +
                           std::to_string(config.embed_dim));

    std::unordered_map<std::string, std::vector<double>> file_vectors;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        if (!(row >> token))
            throw parse_error("line " + std::to_string(line_no) + ": malformed vector line");
        std::vector<double> values(static_cast<std::size_t>(dim));
        for (long long c = 0; c < dim; ++c)
            if (!(row >> values[static_cast<std::size_t>(c)]))
                throw parse_error("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(dim) + " floats after token");
        if (vocab.contains(token)) file_vectors[token] = std::move(values);
    }

    tensor m({vocab.size(), config.embed_dim});
    detail::fill_random_row(m, vocabulary::oov_index, seed);
    const std::vector<std::string>& tokens = vocab.tokens();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::size_t r = i + 2;
        auto it = file_vectors.find(tokens[i]);
        if (it == file_vectors.end()) {
            detail::fill_random_row(m, r, seed);
        } else {
            for (std::size_t c = 0; c < config.embed_dim; ++c) m.at(r, c) = it->second[c];
        }
    }
    return embedding_table(std::move(m));
}

// Gathers matrix rows: output row t is row indices[t] of a V x E matrix.
inline tensor embed(const std::vector<std::size_t>& indices, const tensor& matrix) {
    if (matrix.rank() != 2) throw shape_error("embed: embedding matrix must be rank 2");
    tensor out({indices.size(), matrix.dim(1)});
    for (std::size_t t = 0; t < indices.size(); ++t) {
        if (indices[t] >= matrix.dim(0))
            throw contract_error("embed: index " + std::to_string(indices[t]) + " out of range");
        for (std::size_t c = 0; c < matrix.dim(1); ++c)
            out.at(t, c) = matrix.at(indices[t], c);
    }
    return out;
}

inline tensor embed(const std::vector<std::size_t>& indices, const embedding_table& table) {
    return embed(indices, table.matrix());
}

// Selection matrix S (M x V) with S[t, indices[t]] = 1, except that PAD
// positions get an all-zero row. Then S * table reproduces embed(), and in a
// differentiable graph the PAD row of the table receives zero gradient, so it
// can never move off zero during training.
inline tensor one_hot_rows(const std::vector<std::size_t>& indices, std::size_t vocab_size) {
    tensor out({indices.size(), vocab_size}, 0.0);
    for (std::size_t t = 0; t < indices.size(); ++t) {
        if (indices[t] >= vocab_size)
            throw contract_error("one_hot_rows: index " + std::to_string(indices[t]) +
                                 " out of range");
        if (indices[t] != vocabulary::pad_index) out.at(t, indices[t]) = 1.0;
    }
    return out;
}

}  // namespace capsent
