#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "capsent/error.hpp"

namespace capsent {

// Dense row-major tensor of doubles. Construction rejects NaN/Inf so a
// diverged computation fails loudly instead of propagating garbage.
class tensor {
  public:
    tensor() = default;

    explicit tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(shape_product(shape_), fill) {
        check_finite_value(fill);
    }

    tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_product(shape_))
            throw shape_error("tensor: data length " + std::to_string(data_.size()) +
                              " does not match shape size " + std::to_string(shape_product(shape_)));
        check_finite();
    }

    static tensor scalar(double v) { return tensor({1}, {v}); }

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    bool is_scalar() const { return data_.size() == 1; }
    double item() const {
        if (!is_scalar()) throw shape_error("tensor: item() on non-scalar");
        return data_[0];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-d access
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    void check_finite() const {
        for (double v : data_) check_finite_value(v);
    }

    static std::size_t shape_product(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    static std::string shape_str(const std::vector<std::size_t>& s) {
        std::string out = "(";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += "x";
            out += std::to_string(s[i]);
        }
        return out + ")";
    }

  private:
    static void check_finite_value(double v) {
        if (!std::isfinite(v)) throw shape_error("tensor: non-finite value rejected");
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

namespace detail {
inline void require_same_shape(const tensor& a, const tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw shape_error(std::string(op) + ": shape mismatch " + tensor::shape_str(a.shape()) +
                          " vs " + tensor::shape_str(b.shape()));
}
}  // namespace detail

inline tensor add(const tensor& a, const tensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return tensor(a.shape(), std::move(out));
}

inline tensor sub(const tensor& a, const tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return tensor(a.shape(), std::move(out));
}

// Elementwise product; a scalar operand broadcasts over the other side.
inline tensor mul(const tensor& a, const tensor& b) {
    if (a.is_scalar() && !b.is_scalar()) {
        std::vector<double> out(b.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.item() * b[i];
        return tensor(b.shape(), std::move(out));
    }
    if (b.is_scalar() && !a.is_scalar()) {
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b.item();
        return tensor(a.shape(), std::move(out));
    }
    detail::require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return tensor(a.shape(), std::move(out));
}

inline tensor scale(const tensor& a, double k) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * k;
    return tensor(a.shape(), std::move(out));
}

template <class F>
tensor map(const tensor& a, F&& f) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
    return tensor(a.shape(), std::move(out));
}

inline double sum(const tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

inline double dot(const tensor& a, const tensor& b) {
    detail::require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double euclidean_norm(const tensor& a) { return std::sqrt(dot(a, a)); }

// (m x k)·(k x n) -> (m x n), or (m x k)·(k) -> (m)
inline tensor matmul(const tensor& a, const tensor& b) {
    if (a.rank() != 2)
        throw shape_error("matmul: left operand must be rank 2, got " +
                          tensor::shape_str(a.shape()));
    std::size_t m = a.dim(0), k = a.dim(1);
    if (b.rank() == 1) {
        if (b.dim(0) != k)
            throw shape_error("matmul: inner dims " + std::to_string(k) + " vs " +
                              std::to_string(b.dim(0)));
        tensor out({m});
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += a.at(i, j) * b[j];
            out[i] = s;
        }
        return out;
    }
    if (b.rank() != 2 || b.dim(0) != k)
        throw shape_error("matmul: incompatible shapes " + tensor::shape_str(a.shape()) + " vs " +
                          tensor::shape_str(b.shape()));
    std::size_t n = b.dim(1);
    tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double av = a.at(i, j);
            if (av == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) out.at(i, c) += av * b.at(j, c);
        }
    }
    return out;
}

// A^T·b for rank-1 b: (m x k)^T·(m) -> (k)
inline tensor matmul_tv(const tensor& a, const tensor& b) {
    if (a.rank() != 2 || b.rank() != 1 || a.dim(0) != b.dim(0))
        throw shape_error("matmul_tv: incompatible shapes " + tensor::shape_str(a.shape()) +
                          " vs " + tensor::shape_str(b.shape()));
    std::size_t m = a.dim(0), k = a.dim(1);
    tensor out({k});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) out[j] += a.at(i, j) * b[i];
    return out;
}

// outer(u, v): (m)·(k) -> (m x k)
inline tensor outer(const tensor& u, const tensor& v) {
    if (u.rank() != 1 || v.rank() != 1)
        throw shape_error("outer: both operands must be rank 1");
    tensor out({u.dim(0), v.dim(0)});
    for (std::size_t i = 0; i < u.dim(0); ++i)
        for (std::size_t j = 0; j < v.dim(0); ++j) out.at(i, j) = u[i] * v[j];
    return out;
}

inline tensor concat(const std::vector<tensor>& parts) {
    std::size_t total = 0;
    for (const tensor& p : parts) {
        if (p.rank() != 1) throw shape_error("concat: only rank-1 tensors");
        total += p.size();
    }
    tensor out({total});
    std::size_t off = 0;
    for (const tensor& p : parts) {
        for (std::size_t i = 0; i < p.size(); ++i) out[off + i] = p[i];
        off += p.size();
    }
    return out;
}

inline tensor reshape(const tensor& a, std::vector<std::size_t> shape) {
    if (tensor::shape_product(shape) != a.size())
        throw shape_error("reshape: size mismatch " + tensor::shape_str(a.shape()) + " -> " +
                          tensor::shape_str(shape));
    return tensor(std::move(shape), a.data());
}

inline tensor row_of(const tensor& a, std::size_t r) {
    if (a.rank() != 2) throw shape_error("row: operand must be rank 2");
    if (r >= a.dim(0)) throw contract_error("row: index out of range");
    std::size_t n = a.dim(1);
    tensor out({n});
    for (std::size_t c = 0; c < n; ++c) out[c] = a.at(r, c);
    return out;
}

}  // namespace capsent
