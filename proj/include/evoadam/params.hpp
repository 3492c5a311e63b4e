#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoadam/graph.hpp"
#include "evoadam/rng.hpp"
#include "evoadam/tensor.hpp"

namespace evoadam {

// One addressable slice of a flat parameter vector. Weights and biases are
// separate entries so the fusion stage can weight them per layer.
struct LayerLayout {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::vector<std::size_t> shape;
};

inline void validate_layout(const std::vector<LayerLayout>& layout, std::size_t flat_len) {
    std::size_t expect = 0;
    for (const LayerLayout& l : layout) {
        if (l.length == 0)
            throw std::invalid_argument("layout: zero-length layer '" + l.name + "'");
        if (l.offset != expect)
            throw std::invalid_argument("layout: layer '" + l.name +
                                        "' offset " + std::to_string(l.offset) +
                                        " not contiguous (expected " + std::to_string(expect) + ")");
        if (shape_numel(l.shape) != l.length)
            throw std::invalid_argument("layout: layer '" + l.name + "' shape/length mismatch");
        expect += l.length;
    }
    if (expect != flat_len)
        throw std::invalid_argument("layout: total length " + std::to_string(expect) +
                                    " != data length " + std::to_string(flat_len));
}

// A model's parameters as one flat vector plus the per-layer layout map.
struct FlatParams {
    std::vector<double> data;
    std::vector<LayerLayout> layout;

    void validate() const { validate_layout(layout, data.size()); }

    bool same_layout(const FlatParams& o) const {
        if (layout.size() != o.layout.size()) return false;
        for (std::size_t i = 0; i < layout.size(); ++i)
            if (layout[i].offset != o.layout[i].offset || layout[i].length != o.layout[i].length ||
                layout[i].shape != o.layout[i].shape)
                return false;
        return true;
    }

    Tensor layer_tensor(std::size_t i) const {
        const LayerLayout& l = layout.at(i);
        return Tensor(l.shape, std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(l.offset),
                                                   data.begin() + static_cast<std::ptrdiff_t>(l.offset + l.length)));
    }
};

enum class Activation { identity, leaky_relu, sigmoid };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation activation_from(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "leaky_relu") return Activation::leaky_relu;
    if (s == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

// Dense stack: widths[0] inputs, widths.back() outputs, leaky-relu slope 0.2
// by convention when hidden activation is leaky_relu.
struct MlpSpec {
    std::vector<std::size_t> widths;
    Activation hidden = Activation::leaky_relu;
    Activation output = Activation::identity;
    double slope = 0.2;

    void validate() const {
        if (widths.size() < 2) throw std::invalid_argument("mlp spec: need at least input and output widths");
        for (std::size_t w : widths)
            if (w == 0) throw std::invalid_argument("mlp spec: zero width");
    }

    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
    std::size_t layer_count() const { return widths.size() - 1; }
};

inline std::vector<LayerLayout> mlp_layout(const MlpSpec& spec) {
    spec.validate();
    std::vector<LayerLayout> layout;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const std::size_t din = spec.widths[l], dout = spec.widths[l + 1];
        layout.push_back({"w" + std::to_string(l + 1), offset, din * dout, {din, dout}});
        offset += din * dout;
        layout.push_back({"b" + std::to_string(l + 1), offset, dout, {dout}});
        offset += dout;
    }
    return layout;
}

// He-style init: weights ~ N(0, 2/fan_in), biases zero, deterministic in seed.
inline FlatParams init_mlp(const MlpSpec& spec, std::uint64_t seed) {
    FlatParams p;
    p.layout = mlp_layout(spec);
    p.data.assign(p.layout.back().offset + p.layout.back().length, 0.0);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const std::size_t din = spec.widths[l];
        const double std = std::sqrt(2.0 / static_cast<double>(din));
        const LayerLayout& wl = p.layout[2 * l];
        for (std::size_t i = 0; i < wl.length; ++i) p.data[wl.offset + i] = std * rng.normal();
    }
    return p;
}

// Forward pass given parameter leaves already on the graph (one node per
// layout entry, shapes matching). Returns the output node.
inline NodeId mlp_forward_nodes(Graph& g, const MlpSpec& spec,
                                const std::vector<NodeId>& param_nodes, NodeId input) {
    spec.validate();
    if (param_nodes.size() != 2 * spec.layer_count())
        throw std::invalid_argument("mlp_forward: expected " + std::to_string(2 * spec.layer_count()) +
                                    " parameter nodes, got " + std::to_string(param_nodes.size()));
    if (g.value(input).rank() != 2 || g.value(input).cols() != spec.input_width())
        throw std::invalid_argument("mlp_forward: input width " + shape_str(g.value(input).shape) +
                                    " does not match spec input " + std::to_string(spec.input_width()));
    NodeId h = input;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        h = g.apply(Op::matmul, {h, param_nodes[2 * l]});
        h = g.apply(Op::add, {h, param_nodes[2 * l + 1]});
        const Activation act = (l + 1 == spec.layer_count()) ? spec.output : spec.hidden;
        if (act == Activation::leaky_relu) {
            Attrs a;
            a.value = spec.slope;
            h = g.apply(Op::leaky_relu, {h}, a);
        } else if (act == Activation::sigmoid) {
            h = g.apply(Op::sigmoid, {h});
        }
    }
    return h;
}

struct MlpNodes {
    std::vector<NodeId> params;
    NodeId output = -1;
};

// Insert params as input leaves and build the layer chain.
inline MlpNodes mlp_apply(Graph& g, const MlpSpec& spec, const FlatParams& params, NodeId input) {
    const std::vector<LayerLayout> expect = mlp_layout(spec);
    params.validate();
    if (params.layout.size() != expect.size())
        throw std::invalid_argument("mlp_apply: params layout does not match spec");
    for (std::size_t i = 0; i < expect.size(); ++i)
        if (params.layout[i].shape != expect[i].shape)
            throw std::invalid_argument("mlp_apply: layer '" + expect[i].name + "' shape mismatch");
    MlpNodes out;
    out.params.reserve(params.layout.size());
    for (std::size_t i = 0; i < params.layout.size(); ++i)
        out.params.push_back(g.input(params.layer_tensor(i)));
    out.output = mlp_forward_nodes(g, spec, out.params, input);
    return out;
}

// Collect gradients at the parameter leaves back into flat-vector order.
inline std::vector<double> gather_param_grad(const GradientMap& grads,
                                             const std::vector<NodeId>& param_nodes,
                                             const std::vector<LayerLayout>& layout) {
    if (param_nodes.size() != layout.size())
        throw std::invalid_argument("gather_param_grad: node/layout count mismatch");
    std::size_t total = layout.empty() ? 0 : layout.back().offset + layout.back().length;
    std::vector<double> flat(total, 0.0);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const Tensor& gt = grads[static_cast<std::size_t>(param_nodes[i])];
        for (std::size_t k = 0; k < layout[i].length; ++k) flat[layout[i].offset + k] = gt.data[k];
    }
    return flat;
}

// Unpack to per-layer tensors and repack; bit-identical by construction,
// and validates the layout on the way.
inline std::vector<Tensor> unpack_layers(const FlatParams& p) {
    p.validate();
    std::vector<Tensor> out;
    out.reserve(p.layout.size());
    for (std::size_t i = 0; i < p.layout.size(); ++i) out.push_back(p.layer_tensor(i));
    return out;
}

inline FlatParams pack_layers(const std::vector<Tensor>& layers, const std::vector<LayerLayout>& layout) {
    if (layers.size() != layout.size())
        throw std::invalid_argument("pack_layers: count mismatch");
    FlatParams p;
    p.layout = layout;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (layers[i].shape != layout[i].shape)
            throw std::invalid_argument("pack_layers: layer '" + layout[i].name + "' shape mismatch");
        p.data.insert(p.data.end(), layers[i].data.begin(), layers[i].data.end());
    }
    p.validate();
    return p;
}

inline FlatParams flatten_roundtrip(const FlatParams& p) {
    return pack_layers(unpack_layers(p), p.layout);
}

}  // namespace evoadam
