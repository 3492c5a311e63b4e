#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evoadam/tensor.hpp"

namespace evoadam {

using NodeId = int;

enum class Op {
    input,
    matmul,
    add,          // equal shapes, or (B x d) + (d) bias broadcast over the batch axis
    leaky_relu,   // attrs.value = slope in (0, 1)
    sigmoid,
    exp,
    mean_abs_error,
    mean_sq_error,
    logistic_loss,  // with logits, attrs.target in {0, 1}, mean over elements
    scalar_scale,   // attrs.value * x
    scalar_add,     // x + attrs.value
    normalize_rows, // divide each (attrs.rows x attrs.cols) row by its sum
    convex_blend,   // sum_c w[attrs.row * cols + c] * attrs.parts[c]
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::input: return "input";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::leaky_relu: return "leaky_relu";
        case Op::sigmoid: return "sigmoid";
        case Op::exp: return "exp";
        case Op::mean_abs_error: return "mean_abs_error";
        case Op::mean_sq_error: return "mean_sq_error";
        case Op::logistic_loss: return "logistic_loss_with_logits";
        case Op::scalar_scale: return "scalar_scale";
        case Op::scalar_add: return "scalar_add";
        case Op::normalize_rows: return "normalize_rows";
        case Op::convex_blend: return "convex_blend";
    }
    return "?";
}

struct Attrs {
    double value = 0.0;           // slope / scale / offset
    int target = 0;               // logistic_loss target
    std::size_t rows = 0, cols = 0;  // normalize_rows / convex_blend layout
    std::size_t row = 0;          // convex_blend: which weight row to use
    std::vector<Tensor> parts;    // convex_blend: constant tensors to combine
};

struct Node {
    Op op;
    std::vector<NodeId> args;
    Attrs attrs;
    Tensor value;
};

// Per-node gradients, shapes matching the forward values.
using GradientMap = std::vector<Tensor>;

inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable logistic loss with logits: max(x,0) - t*x + log1p(exp(-|x|)).
inline double logistic_loss_scalar(double x, int target) {
    return std::fmax(x, 0.0) - x * static_cast<double>(target) + std::log1p(std::exp(-std::fabs(x)));
}

// Append-only computation graph with eager forward evaluation. Nodes are
// immutable once appended; backward walks ids in reverse, which is a valid
// reverse topological order by construction.
class Graph {
public:
    NodeId input(Tensor value) {
        nodes_.push_back(Node{Op::input, {}, {}, std::move(value)});
        return static_cast<NodeId>(nodes_.size()) - 1;
    }

    NodeId apply(Op op, std::vector<NodeId> args, Attrs attrs = {}) {
        for (NodeId a : args) check_id(a);
        Tensor value = forward(op, args, attrs);
        nodes_.push_back(Node{op, std::move(args), std::move(attrs), std::move(value)});
        return static_cast<NodeId>(nodes_.size()) - 1;
    }

    const Tensor& value(NodeId id) const {
        check_id(id);
        return nodes_[static_cast<std::size_t>(id)].value;
    }

    const Node& node(NodeId id) const {
        check_id(id);
        return nodes_[static_cast<std::size_t>(id)];
    }

    std::size_t size() const { return nodes_.size(); }

    // Gradients of a scalar loss w.r.t. every node, accumulated in reverse
    // topological order. Deterministic: plain loops, fixed order.
    GradientMap backward(NodeId loss) const {
        check_id(loss);
        const Tensor& lv = nodes_[static_cast<std::size_t>(loss)].value;
        if (lv.size() != 1)
            throw std::invalid_argument("backward: loss node is not scalar, shape " +
                                        shape_str(lv.shape));
        GradientMap grads(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            grads[i] = Tensor::zeros(nodes_[i].value.shape);
        grads[static_cast<std::size_t>(loss)].data[0] = 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (static_cast<NodeId>(i) > loss) continue;  // cannot influence the loss
            accumulate(i, grads);
        }
        return grads;
    }

private:
    void check_id(NodeId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            throw std::out_of_range("graph: unknown node id " + std::to_string(id));
    }

    [[noreturn]] static void shape_error(Op op, const std::string& detail) {
        throw std::invalid_argument(std::string("shape mismatch in ") + op_name(op) + ": " + detail);
    }

    const Tensor& arg(const std::vector<NodeId>& args, std::size_t i) const {
        return nodes_[static_cast<std::size_t>(args.at(i))].value;
    }

    static void require_args(Op op, const std::vector<NodeId>& args, std::size_t n) {
        if (args.size() != n)
            throw std::invalid_argument(std::string(op_name(op)) + ": expected " +
                                        std::to_string(n) + " operands, got " +
                                        std::to_string(args.size()));
    }

    Tensor forward(Op op, const std::vector<NodeId>& args, const Attrs& attrs) const {
        switch (op) {
            case Op::input:
                throw std::invalid_argument("apply: use Graph::input for input nodes");
            case Op::matmul: {
                require_args(op, args, 2);
                const Tensor& a = arg(args, 0);
                const Tensor& b = arg(args, 1);
                if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
                    shape_error(op, shape_str(a.shape) + " * " + shape_str(b.shape));
                Tensor out = Tensor::zeros({a.rows(), b.cols()});
                for (std::size_t i = 0; i < a.rows(); ++i)
                    for (std::size_t k = 0; k < a.cols(); ++k) {
                        const double aik = a.at(i, k);
                        for (std::size_t j = 0; j < b.cols(); ++j)
                            out.at(i, j) += aik * b.at(k, j);
                    }
                return out;
            }
            case Op::add: {
                require_args(op, args, 2);
                const Tensor& a = arg(args, 0);
                const Tensor& b = arg(args, 1);
                if (a.same_shape(b)) {
                    Tensor out = a;
                    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
                    return out;
                }
                // Bias broadcast: (B x d) + (d). No other mismatch is allowed.
                if (a.rank() == 2 && b.rank() == 1 && a.cols() == b.shape[0]) {
                    Tensor out = a;
                    for (std::size_t i = 0; i < a.rows(); ++i)
                        for (std::size_t j = 0; j < a.cols(); ++j)
                            out.at(i, j) += b.data[j];
                    return out;
                }
                shape_error(op, shape_str(a.shape) + " + " + shape_str(b.shape));
            }
            case Op::leaky_relu: {
                require_args(op, args, 1);
                if (!(attrs.value > 0.0 && attrs.value < 1.0))
                    throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
                Tensor out = arg(args, 0);
                for (double& v : out.data)
                    if (v < 0.0) v *= attrs.value;
                return out;
            }
            case Op::sigmoid: {
                require_args(op, args, 1);
                Tensor out = arg(args, 0);
                for (double& v : out.data) v = sigmoid_scalar(v);
                return out;
            }
            case Op::exp: {
                require_args(op, args, 1);
                Tensor out = arg(args, 0);
                for (double& v : out.data) v = std::exp(v);
                return out;
            }
            case Op::mean_abs_error:
            case Op::mean_sq_error: {
                require_args(op, args, 2);
                const Tensor& a = arg(args, 0);
                const Tensor& b = arg(args, 1);
                if (!a.same_shape(b))
                    shape_error(op, shape_str(a.shape) + " vs " + shape_str(b.shape));
                double acc = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    const double d = a.data[i] - b.data[i];
                    acc += (op == Op::mean_abs_error) ? std::fabs(d) : d * d;
                }
                return Tensor::scalar(acc / static_cast<double>(a.size()));
            }
            case Op::logistic_loss: {
                require_args(op, args, 1);
                if (attrs.target != 0 && attrs.target != 1)
                    throw std::invalid_argument("logistic_loss: target must be 0 or 1");
                const Tensor& x = arg(args, 0);
                double acc = 0.0;
                for (double v : x.data) acc += logistic_loss_scalar(v, attrs.target);
                return Tensor::scalar(acc / static_cast<double>(x.size()));
            }
            case Op::scalar_scale: {
                require_args(op, args, 1);
                Tensor out = arg(args, 0);
                for (double& v : out.data) v *= attrs.value;
                return out;
            }
            case Op::scalar_add: {
                require_args(op, args, 1);
                Tensor out = arg(args, 0);
                for (double& v : out.data) v += attrs.value;
                return out;
            }
            case Op::normalize_rows: {
                require_args(op, args, 1);
                const Tensor& x = arg(args, 0);
                if (attrs.rows * attrs.cols != x.size())
                    shape_error(op, shape_str(x.shape) + " as " + std::to_string(attrs.rows) +
                                        "x" + std::to_string(attrs.cols));
                Tensor out = x;
                for (std::size_t r = 0; r < attrs.rows; ++r) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < attrs.cols; ++c) s += x.data[r * attrs.cols + c];
                    if (!(s > 0.0))
                        throw std::runtime_error("normalize_rows: non-positive row sum");
                    for (std::size_t c = 0; c < attrs.cols; ++c) out.data[r * attrs.cols + c] /= s;
                }
                return out;
            }
            case Op::convex_blend: {
                require_args(op, args, 1);
                const Tensor& w = arg(args, 0);
                if (attrs.parts.size() != attrs.cols || attrs.row >= attrs.rows ||
                    attrs.rows * attrs.cols != w.size())
                    shape_error(op, "weight " + shape_str(w.shape) + " as " +
                                        std::to_string(attrs.rows) + "x" + std::to_string(attrs.cols));
                for (const Tensor& p : attrs.parts)
                    if (!p.same_shape(attrs.parts[0]))
                        shape_error(op, "parts disagree: " + shape_str(p.shape));
                Tensor out = Tensor::zeros(attrs.parts[0].shape);
                for (std::size_t c = 0; c < attrs.cols; ++c) {
                    const double wc = w.data[attrs.row * attrs.cols + c];
                    const Tensor& p = attrs.parts[c];
                    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += wc * p.data[i];
                }
                return out;
            }
        }
        throw std::invalid_argument("unknown primitive kind");
    }

    void accumulate(std::size_t i, GradientMap& grads) const {
        const Node& n = nodes_[i];
        const Tensor& g = grads[i];
        switch (n.op) {
            case Op::input:
                return;
            case Op::matmul: {
                const Tensor& a = value(n.args[0]);
                const Tensor& b = value(n.args[1]);
                Tensor& ga = grads[static_cast<std::size_t>(n.args[0])];
                Tensor& gb = grads[static_cast<std::size_t>(n.args[1])];
                for (std::size_t r = 0; r < a.rows(); ++r)
                    for (std::size_t c = 0; c < b.cols(); ++c) {
                        const double gv = g.at(r, c);
                        for (std::size_t k = 0; k < a.cols(); ++k) {
                            ga.at(r, k) += gv * b.at(k, c);
                            gb.at(k, c) += gv * a.at(r, k);
                        }
                    }
                return;
            }
            case Op::add: {
                Tensor& ga = grads[static_cast<std::size_t>(n.args[0])];
                Tensor& gb = grads[static_cast<std::size_t>(n.args[1])];
                const Tensor& a = value(n.args[0]);
                const Tensor& b = value(n.args[1]);
                for (std::size_t k = 0; k < ga.size(); ++k) ga.data[k] += g.data[k];
                if (a.same_shape(b)) {
                    for (std::size_t k = 0; k < gb.size(); ++k) gb.data[k] += g.data[k];
                } else {
                    for (std::size_t r = 0; r < a.rows(); ++r)
                        for (std::size_t c = 0; c < a.cols(); ++c)
                            gb.data[c] += g.at(r, c);
                }
                return;
            }
            case Op::leaky_relu: {
                const Tensor& x = value(n.args[0]);
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                // x == 0 takes the positive branch (documented convention).
                for (std::size_t k = 0; k < x.size(); ++k)
                    gx.data[k] += g.data[k] * (x.data[k] >= 0.0 ? 1.0 : n.attrs.value);
                return;
            }
            case Op::sigmoid: {
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                for (std::size_t k = 0; k < n.value.size(); ++k) {
                    const double s = n.value.data[k];
                    gx.data[k] += g.data[k] * s * (1.0 - s);
                }
                return;
            }
            case Op::exp: {
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                for (std::size_t k = 0; k < n.value.size(); ++k)
                    gx.data[k] += g.data[k] * n.value.data[k];
                return;
            }
            case Op::mean_abs_error: {
                const Tensor& a = value(n.args[0]);
                const Tensor& b = value(n.args[1]);
                Tensor& ga = grads[static_cast<std::size_t>(n.args[0])];
                Tensor& gb = grads[static_cast<std::size_t>(n.args[1])];
                const double scale = g.data[0] / static_cast<double>(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) {
                    const double d = a.data[k] - b.data[k];
                    const double s = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                    ga.data[k] += scale * s;
                    gb.data[k] -= scale * s;
                }
                return;
            }
            case Op::mean_sq_error: {
                const Tensor& a = value(n.args[0]);
                const Tensor& b = value(n.args[1]);
                Tensor& ga = grads[static_cast<std::size_t>(n.args[0])];
                Tensor& gb = grads[static_cast<std::size_t>(n.args[1])];
                const double scale = 2.0 * g.data[0] / static_cast<double>(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) {
                    const double d = a.data[k] - b.data[k];
                    ga.data[k] += scale * d;
                    gb.data[k] -= scale * d;
                }
                return;
            }
            case Op::logistic_loss: {
                const Tensor& x = value(n.args[0]);
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                const double scale = g.data[0] / static_cast<double>(x.size());
                for (std::size_t k = 0; k < x.size(); ++k)
                    gx.data[k] += scale * (sigmoid_scalar(x.data[k]) - n.attrs.target);
                return;
            }
            case Op::scalar_scale: {
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                for (std::size_t k = 0; k < gx.size(); ++k) gx.data[k] += g.data[k] * n.attrs.value;
                return;
            }
            case Op::scalar_add: {
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                for (std::size_t k = 0; k < gx.size(); ++k) gx.data[k] += g.data[k];
                return;
            }
            case Op::normalize_rows: {
                const Tensor& x = value(n.args[0]);
                Tensor& gx = grads[static_cast<std::size_t>(n.args[0])];
                const std::size_t R = n.attrs.rows, C = n.attrs.cols;
                for (std::size_t r = 0; r < R; ++r) {
                    double s = 0.0, gy = 0.0;
                    for (std::size_t c = 0; c < C; ++c) {
                        s += x.data[r * C + c];
                        gy += g.data[r * C + c] * n.value.data[r * C + c];
                    }
                    for (std::size_t c = 0; c < C; ++c)
                        gx.data[r * C + c] += (g.data[r * C + c] - gy) / s;
                }
                return;
            }
            case Op::convex_blend: {
                Tensor& gw = grads[static_cast<std::size_t>(n.args[0])];
                for (std::size_t c = 0; c < n.attrs.cols; ++c) {
                    const Tensor& p = n.attrs.parts[c];
                    double dot = 0.0;
                    for (std::size_t k = 0; k < p.size(); ++k) dot += g.data[k] * p.data[k];
                    gw.data[n.attrs.row * n.attrs.cols + c] += dot;
                }
                return;
            }
        }
    }

    std::vector<Node> nodes_;
};

// Max relative error between an analytic gradient and central finite
// differences, relative error with denominator max(|analytic|, |numeric|, 1e-8).
// `f` evaluates the loss and its gradient at a parameter vector; only the
// loss value is used for the perturbed evaluations.
inline double finite_diff_check(
    const std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>& f,
    std::vector<double> params, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
    const auto [loss0, grad] = f(params);
    if (!std::isfinite(loss0)) throw std::runtime_error("finite_diff_check: non-finite loss");
    if (grad.size() != params.size())
        throw std::invalid_argument("finite_diff_check: gradient length mismatch");
    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + step;
        const double fp = f(params).first;
        params[i] = keep - step;
        const double fm = f(params).first;
        params[i] = keep;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("finite_diff_check: non-finite loss at perturbed point");
        const double numeric = (fp - fm) / (2.0 * step);
        const double denom = std::fmax(std::fmax(std::fabs(grad[i]), std::fabs(numeric)), 1e-8);
        max_rel = std::fmax(max_rel, std::fabs(grad[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace evoadam
