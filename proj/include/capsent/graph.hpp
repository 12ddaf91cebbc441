#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "capsent/error.hpp"
#include "capsent/math.hpp"
#include "capsent/tensor.hpp"

namespace capsent {

// Reverse-mode tape over dense tensors.
//
// A graph is built once (nodes are created in topological order), then
// re-evaluated many times: new_pass() opens an evaluation pass, bind() attaches
// input values, eval() computes any node lazily, backward() sweeps adjoints
// from a scalar output back to every parameter. Pass stamps let a pass evaluate
// part of the graph, feed results into later bindings (the routing coefficients
// work this way) and continue without recomputing finished nodes.
class graph {
  public:
    using ref = int;

    enum class op {
        input,
        param,
        constant,
        matmul,
        add,
        sub,
        mul,
        scale,
        sigmoid,
        tanh_fn,
        exp_fn,
        log_fn,
        clamp_min,
        sum,
        mean,
        concat,
        reshape,
        row,
        elem,
        softmax,
        norm,
        squash,
    };

    graph() = default;
    graph(const graph&) = delete;
    graph& operator=(const graph&) = delete;
    graph(graph&&) = default;
    graph& operator=(graph&&) = default;

    ref input(const std::string& name, std::vector<std::size_t> shape) {
        if (by_name_.count(name)) throw contract_error("graph: duplicate name '" + name + "'");
        ref r = add_node(op::input, {});
        nodes_[r].name = name;
        nodes_[r].declared_shape = std::move(shape);
        by_name_[name] = r;
        inputs_.push_back(r);
        return r;
    }

    ref param(const std::string& name, tensor init) {
        if (by_name_.count(name)) throw contract_error("graph: duplicate name '" + name + "'");
        ref r = add_node(op::param, {});
        nodes_[r].name = name;
        nodes_[r].value = std::move(init);
        by_name_[name] = r;
        params_.push_back(r);
        return r;
    }

    ref constant(tensor value) {
        ref r = add_node(op::constant, {});
        nodes_[r].value = std::move(value);
        return r;
    }

    ref matmul(ref a, ref b) { return add_node(op::matmul, {a, b}); }
    ref add(ref a, ref b) { return add_node(op::add, {a, b}); }
    ref sub(ref a, ref b) { return add_node(op::sub, {a, b}); }
    ref mul(ref a, ref b) { return add_node(op::mul, {a, b}); }

    ref scale(ref a, double k) {
        ref r = add_node(op::scale, {a});
        nodes_[r].attr = k;
        return r;
    }

    ref sigmoid(ref a) { return add_node(op::sigmoid, {a}); }
    ref tanh(ref a) { return add_node(op::tanh_fn, {a}); }
    ref exp(ref a) { return add_node(op::exp_fn, {a}); }
    ref log(ref a) { return add_node(op::log_fn, {a}); }

    ref clamp_min(ref a, double lo) {
        ref r = add_node(op::clamp_min, {a});
        nodes_[r].attr = lo;
        return r;
    }

    ref sum(ref a) { return add_node(op::sum, {a}); }
    ref mean(ref a) { return add_node(op::mean, {a}); }

    ref concat(const std::vector<ref>& parts) {
        if (parts.empty()) throw contract_error("graph: concat of nothing");
        return add_node(op::concat, parts);
    }

    ref reshape(ref a, std::vector<std::size_t> shape) {
        ref r = add_node(op::reshape, {a});
        nodes_[r].declared_shape = std::move(shape);
        return r;
    }

    ref flatten(ref a) { return add_node(op::reshape, {a}); }  // shape resolved at eval

    ref row(ref a, std::size_t i) {
        ref r = add_node(op::row, {a});
        nodes_[r].index = i;
        return r;
    }

    ref elem(ref a, std::size_t flat_index) {
        ref r = add_node(op::elem, {a});
        nodes_[r].index = flat_index;
        return r;
    }

    ref softmax(ref a) { return add_node(op::softmax, {a}); }
    ref norm(ref a) { return add_node(op::norm, {a}); }
    ref squash(ref a) { return add_node(op::squash, {a}); }

    // --- evaluation ---

    void new_pass() { ++epoch_; }

    void bind(const std::string& name, tensor value) {
        auto it = by_name_.find(name);
        if (it == by_name_.end() || nodes_[it->second].kind != op::input)
            throw binding_error("graph: no input named '" + name + "'");
        node& nd = nodes_[it->second];
        if (!nd.declared_shape.empty() && value.shape() != nd.declared_shape)
            throw shape_error("bind '" + name + "': expected " +
                              tensor::shape_str(nd.declared_shape) + ", got " +
                              tensor::shape_str(value.shape()));
        nd.value = std::move(value);
        nd.fwd_stamp = epoch_;
    }

    const tensor& eval(ref out) {
        if (out < 0 || out >= static_cast<ref>(nodes_.size()))
            throw contract_error("graph: bad node ref");
        // iterative DFS so deep recurrent chains cannot overflow the stack
        std::vector<ref> stack{out};
        while (!stack.empty()) {
            ref r = stack.back();
            node& nd = nodes_[r];
            if (nd.fwd_stamp == epoch_) {
                stack.pop_back();
                continue;
            }
            if (nd.kind == op::input)
                throw binding_error("graph: input '" + nd.name + "' not bound");
            if (nd.kind == op::param || nd.kind == op::constant) {
                nd.fwd_stamp = epoch_;
                stack.pop_back();
                continue;
            }
            bool ready = true;
            for (ref a : nd.args) {
                if (nodes_[a].fwd_stamp != epoch_) {
                    stack.push_back(a);
                    ready = false;
                }
            }
            if (!ready) continue;
            compute(nd);
            nd.fwd_stamp = epoch_;
            stack.pop_back();
        }
        return nodes_[out].value;
    }

    // Convenience one-shot: fresh pass, bind everything, evaluate.
    tensor forward(const std::vector<std::pair<std::string, tensor>>& bindings, ref out) {
        new_pass();
        for (const auto& [name, value] : bindings) bind(name, value);
        return eval(out);
    }

    // Sweeps adjoints from `out` (seeded with out_adjoint) down to every
    // parameter reached in the current pass. Shared subexpressions accumulate.
    std::map<std::string, tensor> backward(ref out, const tensor& out_adjoint) {
        if (out < 0 || out >= static_cast<ref>(nodes_.size()))
            throw contract_error("graph: bad node ref");
        node& on = nodes_[out];
        if (on.fwd_stamp != epoch_)
            throw state_error("graph: backward before forward");
        if (!out_adjoint.same_shape(on.value))
            throw shape_error("backward: adjoint shape " + tensor::shape_str(out_adjoint.shape()) +
                              " vs output " + tensor::shape_str(on.value.shape()));
        on.grad = out_adjoint;
        on.grad_stamp = epoch_;
        for (ref r = out; r >= 0; --r) {
            node& nd = nodes_[r];
            if (nd.grad_stamp != epoch_ || nd.fwd_stamp != epoch_) continue;
            propagate(nd);
        }
        std::map<std::string, tensor> grads;
        for (ref p : params_) {
            const node& nd = nodes_[p];
            if (nd.grad_stamp == epoch_)
                grads.emplace(nd.name, nd.grad);
            else
                grads.emplace(nd.name, tensor(nd.value.shape(), 0.0));
        }
        return grads;
    }

    const tensor& value(ref r) const { return nodes_.at(r).value; }

    tensor& param_value(const std::string& name) {
        auto it = by_name_.find(name);
        if (it == by_name_.end() || nodes_[it->second].kind != op::param)
            throw contract_error("graph: no param named '" + name + "'");
        return nodes_[it->second].value;
    }

    std::vector<std::string> param_names() const {
        std::vector<std::string> out;
        out.reserve(params_.size());
        for (ref p : params_) out.push_back(nodes_[p].name);
        return out;
    }

    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct node {
        op kind;
        std::vector<ref> args;
        tensor value;
        tensor grad;
        std::uint64_t fwd_stamp = 0;
        std::uint64_t grad_stamp = 0;
        std::string name;
        std::vector<std::size_t> declared_shape;  // inputs / reshape targets
        double attr = 0.0;                        // scale factor, clamp floor
        std::size_t index = 0;                    // row / elem
    };

    ref add_node(op kind, std::vector<ref> args) {
        for (ref a : args)
            if (a < 0 || a >= static_cast<ref>(nodes_.size()))
                throw contract_error("graph: argument node does not exist");
        node nd;
        nd.kind = kind;
        nd.args = std::move(args);
        nodes_.push_back(std::move(nd));
        return static_cast<ref>(nodes_.size() - 1);
    }

    const tensor& arg_val(const node& nd, std::size_t i) const {
        return nodes_[nd.args[i]].value;
    }

    void compute(node& nd) {
        switch (nd.kind) {
            case op::input:
            case op::param:
            case op::constant:
                break;
            case op::matmul:
                nd.value = capsent::matmul(arg_val(nd, 0), arg_val(nd, 1));
                break;
            case op::add:
                nd.value = capsent::add(arg_val(nd, 0), arg_val(nd, 1));
                break;
            case op::sub:
                nd.value = capsent::sub(arg_val(nd, 0), arg_val(nd, 1));
                break;
            case op::mul:
                nd.value = capsent::mul(arg_val(nd, 0), arg_val(nd, 1));
                break;
            case op::scale:
                nd.value = capsent::scale(arg_val(nd, 0), nd.attr);
                break;
            case op::sigmoid:
                nd.value = capsent::map(arg_val(nd, 0), [](double x) { return capsent::sigmoid(x); });
                break;
            case op::tanh_fn:
                nd.value = capsent::map(arg_val(nd, 0), [](double x) { return std::tanh(x); });
                break;
            case op::exp_fn:
                nd.value = capsent::map(arg_val(nd, 0), [](double x) { return std::exp(x); });
                break;
            case op::log_fn:
                nd.value = capsent::map(arg_val(nd, 0), [](double x) { return std::log(x); });
                break;
            case op::clamp_min: {
                double lo = nd.attr;
                nd.value = capsent::map(arg_val(nd, 0), [lo](double x) { return x < lo ? lo : x; });
                break;
            }
            case op::sum:
                nd.value = tensor::scalar(capsent::sum(arg_val(nd, 0)));
                break;
            case op::mean:
                nd.value = tensor::scalar(capsent::sum(arg_val(nd, 0)) /
                                          static_cast<double>(arg_val(nd, 0).size()));
                break;
            case op::concat: {
                std::vector<tensor> parts;
                parts.reserve(nd.args.size());
                for (ref a : nd.args) parts.push_back(nodes_[a].value);
                nd.value = capsent::concat(parts);
                break;
            }
            case op::reshape: {
                std::vector<std::size_t> target = nd.declared_shape.empty()
                                                      ? std::vector<std::size_t>{arg_val(nd, 0).size()}
                                                      : nd.declared_shape;
                nd.value = capsent::reshape(arg_val(nd, 0), target);
                break;
            }
            case op::row:
                nd.value = capsent::row_of(arg_val(nd, 0), nd.index);
                break;
            case op::elem: {
                const tensor& a = arg_val(nd, 0);
                if (nd.index >= a.size()) throw contract_error("elem: index out of range");
                nd.value = tensor::scalar(a[nd.index]);
                break;
            }
            case op::softmax:
                nd.value = capsent::softmax(arg_val(nd, 0));
                break;
            case op::norm:
                nd.value = tensor::scalar(capsent::euclidean_norm(arg_val(nd, 0)));
                break;
            case op::squash:
                nd.value = capsent::squash(arg_val(nd, 0));
                break;
        }
    }

    tensor& grad_buf(ref r) {
        node& nd = nodes_[r];
        if (nd.grad_stamp != epoch_) {
            nd.grad = tensor(nd.value.shape(), 0.0);
            nd.grad_stamp = epoch_;
        }
        return nd.grad;
    }

    static void add_into(tensor& dst, const tensor& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    void propagate(node& nd) {
        const tensor& g = nd.grad;
        switch (nd.kind) {
            case op::input:
            case op::param:
            case op::constant:
                break;
            case op::matmul: {
                const tensor& a = arg_val(nd, 0);
                const tensor& b = arg_val(nd, 1);
                tensor& da = grad_buf(nd.args[0]);
                tensor& db = grad_buf(nd.args[1]);
                if (b.rank() == 1) {
                    add_into(da, outer(g, b));        // dA += g b^T
                    add_into(db, matmul_tv(a, g));    // db += A^T g
                } else {
                    // dA += g B^T ; dB += A^T g
                    std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < k; ++j) {
                            double s = 0.0;
                            for (std::size_t c = 0; c < n; ++c) s += g.at(i, c) * b.at(j, c);
                            da.at(i, j) += s;
                        }
                    for (std::size_t j = 0; j < k; ++j)
                        for (std::size_t c = 0; c < n; ++c) {
                            double s = 0.0;
                            for (std::size_t i = 0; i < m; ++i) s += a.at(i, j) * g.at(i, c);
                            db.at(j, c) += s;
                        }
                }
                break;
            }
            case op::add:
                add_into(grad_buf(nd.args[0]), g);
                add_into(grad_buf(nd.args[1]), g);
                break;
            case op::sub: {
                add_into(grad_buf(nd.args[0]), g);
                tensor& db = grad_buf(nd.args[1]);
                for (std::size_t i = 0; i < db.size(); ++i) db[i] -= g[i];
                break;
            }
            case op::mul: {
                const tensor& a = arg_val(nd, 0);
                const tensor& b = arg_val(nd, 1);
                tensor& da = grad_buf(nd.args[0]);
                tensor& db = grad_buf(nd.args[1]);
                if (a.is_scalar() && !b.is_scalar()) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        s += g[i] * b[i];
                        db[i] += g[i] * a.item();
                    }
                    da[0] += s;
                } else if (b.is_scalar() && !a.is_scalar()) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        s += g[i] * a[i];
                        da[i] += g[i] * b.item();
                    }
                    db[0] += s;
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        da[i] += g[i] * b[i];
                        db[i] += g[i] * a[i];
                    }
                }
                break;
            }
            case op::scale: {
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * nd.attr;
                break;
            }
            case op::sigmoid: {
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double s = nd.value[i];
                    da[i] += g[i] * s * (1.0 - s);
                }
                break;
            }
            case op::tanh_fn: {
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double t = nd.value[i];
                    da[i] += g[i] * (1.0 - t * t);
                }
                break;
            }
            case op::exp_fn: {
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * nd.value[i];
                break;
            }
            case op::log_fn: {
                const tensor& x = arg_val(nd, 0);
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / x[i];
                break;
            }
            case op::clamp_min: {
                const tensor& x = arg_val(nd, 0);
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (x[i] > nd.attr) da[i] += g[i];
                break;
            }
            case op::sum: {
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0];
                break;
            }
            case op::mean: {
                tensor& da = grad_buf(nd.args[0]);
                double k = g[0] / static_cast<double>(da.size());
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += k;
                break;
            }
            case op::concat: {
                std::size_t off = 0;
                for (ref a : nd.args) {
                    tensor& da = grad_buf(a);
                    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[off + i];
                    off += da.size();
                }
                break;
            }
            case op::reshape: {
                tensor& da = grad_buf(nd.args[0]);
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
                break;
            }
            case op::row: {
                tensor& da = grad_buf(nd.args[0]);
                std::size_t cols = arg_val(nd, 0).dim(1);
                for (std::size_t c = 0; c < cols; ++c) da[nd.index * cols + c] += g[c];
                break;
            }
            case op::elem:
                grad_buf(nd.args[0])[nd.index] += g[0];
                break;
            case op::softmax: {
                const tensor& p = nd.value;
                tensor& da = grad_buf(nd.args[0]);
                double gp = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) gp += g[i] * p[i];
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += p[i] * (g[i] - gp);
                break;
            }
            case op::norm: {
                const tensor& x = arg_val(nd, 0);
                double n = nd.value[0];
                if (n > 1e-12) {
                    tensor& da = grad_buf(nd.args[0]);
                    for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[0] * x[i] / n;
                }
                break;
            }
            case op::squash: {
                const tensor& s = arg_val(nd, 0);
                double n = euclidean_norm(s);
                if (n >= 1e-12) {
                    double gn = n / (1.0 + n * n);
                    double k = (1.0 - n * n) / ((1.0 + n * n) * (1.0 + n * n) * n);
                    double gs = 0.0;
                    for (std::size_t i = 0; i < s.size(); ++i) gs += g[i] * s[i];
                    tensor& da = grad_buf(nd.args[0]);
                    for (std::size_t i = 0; i < s.size(); ++i)
                        da[i] += gn * g[i] + k * s[i] * gs;
                }
                break;
            }
        }
    }

    std::vector<node> nodes_;
    std::unordered_map<std::string, ref> by_name_;
    std::vector<ref> inputs_;
    std::vector<ref> params_;
    std::uint64_t epoch_ = 1;
};

}  // namespace capsent
