#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "capsent/error.hpp"
#include "capsent/model.hpp"

namespace capsent {

namespace detail {

inline constexpr char model_magic[8] = {'C', 'A', 'P', 'S', 'E', 'N', 'T', '\0'};

// FNV-1a, the integrity check over the payload bytes.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

// Little-endian primitive encoders over a growing byte string. Doubles travel
// as their IEEE-754 bit patterns, so every value round-trips exactly.
struct byte_writer {
    std::string buf;

    void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        buf.append(s);
    }
    void tensor1(const tensor& t) {
        u64(t.rank());
        for (std::size_t i = 0; i < t.rank(); ++i) u64(t.dim(i));
        for (double v : t.data()) f64(v);
    }
};

struct byte_reader {
    const std::string& buf;
    std::size_t pos = 0;

    explicit byte_reader(const std::string& b) : buf(b) {}

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw format_error("model file: truncated payload");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string str() {
        std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    tensor tensor1() {
        std::uint64_t rank = u64();
        if (rank > 2) throw format_error("model file: tensor rank out of range");
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::uint64_t i = 0; i < rank; ++i) {
            shape.push_back(u64());
            total *= shape.back();
        }
        std::vector<double> data;
        data.reserve(total);
        for (std::size_t i = 0; i < total; ++i) data.push_back(f64());
        return tensor(shape, data);
    }
};

inline void write_gru(byte_writer& w, const gru_params& p) {
    for (const tensor* t : {&p.W_z, &p.W_r, &p.W_h, &p.U_z, &p.U_r, &p.U_h, &p.b_z, &p.b_r,
                            &p.b_h})
        w.tensor1(*t);
}

inline gru_params read_gru(byte_reader& r) {
    gru_params p;
    for (tensor* t : {&p.W_z, &p.W_r, &p.W_h, &p.U_z, &p.U_r, &p.U_h, &p.b_z, &p.b_r, &p.b_h})
        *t = r.tensor1();
    return p;
}

inline std::string serialize_payload(const ensemble_model& m) {
    byte_writer w;
    // pipeline
    w.u64(m.pipeline.min_count);
    w.u64(m.pipeline.max_len_cap);
    w.u64(m.pipeline.embed_dim);
    w.u8(m.pipeline.dbd_sum_mode ? 1 : 0);
    w.u64(m.pipeline.stopwords.size());
    for (const std::string& s : m.pipeline.stopwords) w.str(s);
    // network architecture
    w.u64(m.net.vocab_size);
    w.u64(m.net.max_len);
    w.u64(m.net.embed_dim);
    w.u64(m.net.hidden);
    w.u64(m.net.num_capsules);
    w.u64(m.net.capsule_dim);
    w.u64(m.net.routing_iterations);
    w.u8(m.net.candidate_sigmoid ? 1 : 0);
    w.u8(m.net.softmin_mode ? 1 : 0);
    // training provenance
    w.u64(m.training.epochs);
    w.u64(m.training.batch_size);
    w.f64(m.training.learning_rate);
    w.u64(m.training.seed);
    w.u8(m.training.cost_sensitive ? 1 : 0);
    w.u8(m.training.minority_override.has_value() ? 1 : 0);
    w.u8(m.training.minority_override.value_or(polarity::negative) == polarity::negative ? 1
                                                                                        : 0);
    w.str(m.training.embeddings_path);
    // domain list
    w.u64(m.domains.size());
    for (const std::string& d : m.domains) w.str(d);
    // vocabulary (content tokens in index order)
    w.u64(m.vocab.tokens().size());
    for (const std::string& t : m.vocab.tokens()) w.str(t);
    // embedding matrix
    w.tensor1(m.embeddings.matrix());
    // belonging-degree counts
    w.u64(m.stats.counts().size());
    for (const auto& [token, row] : m.stats.counts()) {
        w.str(token);
        for (std::uint64_t v : row) w.u64(v);
    }
    for (std::uint64_t v : m.stats.totals()) w.u64(v);
    // per-domain classifiers
    w.u64(m.models.size());
    for (const domain_model& dm : m.models) {
        w.str(dm.domain);
        w.u64(dm.seed);
        w.u64(dm.epochs);
        w.u64(dm.epoch_losses.size());
        for (double v : dm.epoch_losses) w.f64(v);
        w.u8(dm.params.embedding.size() != 0 ? 1 : 0);
        if (dm.params.embedding.size() != 0) w.tensor1(dm.params.embedding);
        write_gru(w, dm.params.rnn.fwd);
        write_gru(w, dm.params.rnn.bwd);
        w.u64(dm.params.caps.num_in);
        w.u64(dm.params.caps.num_out);
        w.u64(dm.params.caps.dim_out);
        w.u64(dm.params.caps.routing_iterations);
        for (const tensor& t : dm.params.caps.W) w.tensor1(t);
        w.tensor1(dm.params.head.W);
        w.tensor1(dm.params.head.b);
    }
    return w.buf;
}

inline ensemble_model parse_payload(const std::string& payload) {
    byte_reader r(payload);
    ensemble_model m;
    m.pipeline.min_count = r.u64();
    m.pipeline.max_len_cap = r.u64();
    m.pipeline.embed_dim = r.u64();
    m.pipeline.dbd_sum_mode = r.u8() != 0;
    std::uint64_t n_stop = r.u64();
    for (std::uint64_t i = 0; i < n_stop; ++i) m.pipeline.stopwords.insert(r.str());

    m.net.vocab_size = r.u64();
    m.net.max_len = r.u64();
    m.net.embed_dim = r.u64();
    m.net.hidden = r.u64();
    m.net.num_capsules = r.u64();
    m.net.capsule_dim = r.u64();
    m.net.routing_iterations = r.u64();
    m.net.candidate_sigmoid = r.u8() != 0;
    m.net.softmin_mode = r.u8() != 0;

    m.training.epochs = r.u64();
    m.training.batch_size = r.u64();
    m.training.learning_rate = r.f64();
    m.training.seed = r.u64();
    m.training.cost_sensitive = r.u8() != 0;
    bool has_override = r.u8() != 0;
    bool override_negative = r.u8() != 0;
    if (has_override)
        m.training.minority_override =
            override_negative ? polarity::negative : polarity::positive;
    m.training.embeddings_path = r.str();

    std::uint64_t n_domains = r.u64();
    for (std::uint64_t i = 0; i < n_domains; ++i) m.domains.push_back(r.str());

    std::uint64_t n_tokens = r.u64();
    std::vector<std::string> tokens;
    tokens.reserve(n_tokens);
    for (std::uint64_t i = 0; i < n_tokens; ++i) tokens.push_back(r.str());

    tensor embedding_matrix = r.tensor1();

    std::uint64_t n_counted = r.u64();
    std::map<std::string, std::vector<std::uint64_t>> counts;
    for (std::uint64_t i = 0; i < n_counted; ++i) {
        std::string token = r.str();
        std::vector<std::uint64_t> row;
        row.reserve(n_domains);
        for (std::uint64_t d = 0; d < n_domains; ++d) row.push_back(r.u64());
        counts.emplace(std::move(token), std::move(row));
    }
    std::vector<std::uint64_t> totals;
    totals.reserve(n_domains);
    for (std::uint64_t d = 0; d < n_domains; ++d) totals.push_back(r.u64());

    std::uint64_t n_models = r.u64();
    for (std::uint64_t i = 0; i < n_models; ++i) {
        domain_model dm;
        dm.domain = r.str();
        dm.seed = r.u64();
        dm.epochs = r.u64();
        std::uint64_t n_losses = r.u64();
        for (std::uint64_t k = 0; k < n_losses; ++k) dm.epoch_losses.push_back(r.f64());
        if (r.u8() != 0) dm.params.embedding = r.tensor1();
        dm.params.rnn.fwd = read_gru(r);
        dm.params.rnn.bwd = read_gru(r);
        dm.params.caps.num_in = r.u64();
        dm.params.caps.num_out = r.u64();
        dm.params.caps.dim_out = r.u64();
        dm.params.caps.routing_iterations = r.u64();
        for (std::size_t k = 0; k < dm.params.caps.num_in * dm.params.caps.num_out; ++k)
            dm.params.caps.W.push_back(r.tensor1());
        dm.params.head.W = r.tensor1();
        dm.params.head.b = r.tensor1();
        m.models.push_back(std::move(dm));
    }
    if (r.pos != payload.size())
        throw format_error("model file: trailing bytes after payload");

    try {
        m.vocab = vocabulary::from_tokens(std::move(tokens));
        m.embeddings = embedding_table(std::move(embedding_matrix));
        m.stats = domain_stats(m.domains, std::move(counts), std::move(totals));
        m.validate();
    } catch (const format_error&) {
        throw;
    } catch (const error& e) {
        throw format_error(std::string("model file: inconsistent contents: ") + e.what());
    }
    return m;
}

}  // namespace detail

// Layout: 8-byte magic, u32 format version, u64 payload length, u64 FNV-1a
// checksum of the payload, payload bytes. The version is checked before the
// checksum so a reader can always say "wrong version" instead of "corrupt".
inline void save_model(const ensemble_model& model, const std::string& path) {
    model.validate();
    std::string payload = detail::serialize_payload(model);
    detail::byte_writer header;
    header.buf.assign(detail::model_magic, sizeof detail::model_magic);
    header.u32(ensemble_model::format_version);
    header.u64(payload.size());
    header.u64(detail::fnv1a64(payload));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open model file for writing: " + path);
    out.write(header.buf.data(), static_cast<std::streamsize>(header.buf.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) throw io_error("failed writing model file: " + path);
}

inline ensemble_model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open model file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    constexpr std::size_t header_size = sizeof detail::model_magic + 4 + 8 + 8;
    if (bytes.size() < header_size) throw format_error("model file: shorter than the header");
    if (std::memcmp(bytes.data(), detail::model_magic, sizeof detail::model_magic) != 0)
        throw format_error("model file: bad magic, not a model file");

    detail::byte_reader r(bytes);
    r.pos = sizeof detail::model_magic;
    std::uint32_t version = r.u32();
    if (version != ensemble_model::format_version)
        throw format_error("model file: unsupported format version " + std::to_string(version) +
                           " (expected " + std::to_string(ensemble_model::format_version) + ")");
    std::uint64_t payload_len = r.u64();
    std::uint64_t checksum = r.u64();
    if (bytes.size() - header_size != payload_len)
        throw format_error("model file: truncated or padded (payload length mismatch)");
    std::string payload = bytes.substr(header_size);
    if (detail::fnv1a64(payload) != checksum)
        throw format_error("model file: checksum mismatch, contents corrupt");
    return detail::parse_payload(payload);
}

}  // namespace capsent
