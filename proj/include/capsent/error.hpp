#pragma once

#include <stdexcept>
#include <string>

namespace capsent {

// Base for everything this library throws. Subtypes let callers and tests
// distinguish bad files from bad shapes from bad call sequences.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (JSONL, CSV, word-vector files); messages carry line numbers.
struct parse_error : error {
    using error::error;
};

// Semantically invalid data: unknown labels, empty datasets, unsplittable cells,
// domains with no usable tokens, untrainable class distributions.
struct data_error : error {
    using error::error;
};

// Dimension mismatches in tensors, graph primitives, and vector files.
struct shape_error : error {
    using error::error;
};

// A graph input was left unbound before evaluation.
struct binding_error : error {
    using error::error;
};

// Operation called in the wrong order (e.g. backward before forward).
struct state_error : error {
    using error::error;
};

// Caller violated an operation precondition (bad index, empty batch, R < 1, ...).
struct contract_error : error {
    using error::error;
};

// Filesystem-level failures.
struct io_error : error {
    using error::error;
};

// Model container problems: wrong magic/version, checksum mismatch, truncation.
struct format_error : error {
    using error::error;
};

}  // namespace capsent
