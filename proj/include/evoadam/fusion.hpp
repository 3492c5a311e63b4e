#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoadam/adam.hpp"
#include "evoadam/driver.hpp"
#include "evoadam/objectives.hpp"
#include "evoadam/params.hpp"
#include "evoadam/rng.hpp"

namespace evoadam {

// Weight regression network: a three-layer leaky-relu feature module, mean
// pooling over the feature axis, and a two-linear-layer + sigmoid mapping
// module producing one weight per (fusable layer, expert). Sigmoid outputs
// are normalized per layer row to sum to one.
struct RegressorSpec {
    std::vector<std::size_t> feature_widths{8, 16, 16, 16};
    std::size_t mapping_hidden = 16;
    std::size_t experts = 0;  // N
    std::size_t layers = 0;   // L, fusable layer count
    double slope = 0.2;

    void validate() const {
        if (feature_widths.size() != 4)
            throw std::invalid_argument("regressor spec: feature module must have 3 dense layers");
        for (std::size_t w : feature_widths)
            if (w == 0) throw std::invalid_argument("regressor spec: zero width");
        if (mapping_hidden == 0 || experts == 0 || layers == 0)
            throw std::invalid_argument("regressor spec: empty mapping/experts/layers");
    }

    MlpSpec feature_spec() const {
        return MlpSpec{feature_widths, Activation::leaky_relu, Activation::leaky_relu, slope};
    }
    std::size_t output_size() const { return experts * layers; }
};

// Per-layer convex combination weights over the N experts, row-major L x N.
// Every row lies on the probability simplex.
struct FusionWeights {
    std::size_t layers = 0;
    std::size_t experts = 0;
    std::vector<double> w;

    double at(std::size_t l, std::size_t k) const { return w[l * experts + k]; }
    double& at(std::size_t l, std::size_t k) { return w[l * experts + k]; }

    void validate(double tol = 1e-9) const {
        if (w.size() != layers * experts)
            throw std::invalid_argument("fusion weights: size mismatch");
        for (std::size_t l = 0; l < layers; ++l) {
            double s = 0.0;
            for (std::size_t k = 0; k < experts; ++k) {
                const double v = at(l, k);
                if (!(v >= 0.0 && v <= 1.0))
                    throw std::invalid_argument("fusion weights: entry out of [0,1]");
                s += v;
            }
            if (std::fabs(s - 1.0) > tol)
                throw std::invalid_argument("fusion weights: row " + std::to_string(l) +
                                            " sums to " + std::to_string(s));
        }
    }

    static FusionWeights uniform(std::size_t layers, std::size_t experts) {
        FusionWeights fw{layers, experts, std::vector<double>(layers * experts,
                                                              1.0 / static_cast<double>(experts))};
        return fw;
    }
};

using UniversalWeights = FusionWeights;

struct FusionConfig {
    std::size_t m = 8;           // validation inputs averaged into the universal weights
    std::size_t epochs = 40;
    std::size_t steps_per_epoch = 8;
    std::size_t batch_size = 8;
    double lr = 1e-2;
    double alpha1 = 0.01, alpha2 = 1.0, alpha3 = 0.005;  // pixel / perceptual / adversarial
    std::uint64_t seed = 99;
    RegressorSpec reg;

    void validate() const {
        if (m < 1) throw std::invalid_argument("fusion config: m must be >= 1");
        if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0)
            throw std::invalid_argument("fusion config: loss weights must be nonnegative");
    }
};

namespace fusion_streams {
constexpr std::uint64_t reg_init = 0x61;
constexpr std::uint64_t disc_init = 0x62;
constexpr std::uint64_t train = 0x63;
constexpr std::uint64_t learnable = 0x64;
}  // namespace fusion_streams

inline std::vector<LayerLayout> regressor_layout(const RegressorSpec& spec) {
    spec.validate();
    std::vector<LayerLayout> layout = mlp_layout(spec.feature_spec());
    const MlpSpec mapping{{1, spec.mapping_hidden, spec.output_size()},
                          Activation::identity, Activation::identity};
    std::size_t offset = layout.back().offset + layout.back().length;
    for (LayerLayout l : mlp_layout(mapping)) {
        l.name = "m" + l.name;  // mw1, mb1, mw2, mb2
        l.offset = offset;
        offset += l.length;
        layout.push_back(l);
    }
    return layout;
}

inline FlatParams init_regressor(const RegressorSpec& spec, std::uint64_t seed) {
    spec.validate();
    const FlatParams feat = init_mlp(spec.feature_spec(), stream_seed(seed, 1));
    const MlpSpec mapping{{1, spec.mapping_hidden, spec.output_size()},
                          Activation::identity, Activation::identity};
    const FlatParams map = init_mlp(mapping, stream_seed(seed, 2));
    FlatParams out;
    out.layout = regressor_layout(spec);
    out.data = feat.data;
    out.data.insert(out.data.end(), map.data.begin(), map.data.end());
    out.validate();
    return out;
}

struct RegressorNodes {
    std::vector<NodeId> params;  // feature module then mapping module leaves
    NodeId weights = -1;         // normalized (B*L) x N weights
};

// Build the regressor on a graph. Input is B x d; the weights node holds the
// per-sample row-normalized L x N matrices, flattened sample-major.
inline RegressorNodes regressor_nodes(Graph& g, const RegressorSpec& spec, const FlatParams& reg,
                                      NodeId input) {
    spec.validate();
    reg.validate();
    const MlpSpec fs = spec.feature_spec();
    const std::vector<LayerLayout> expect = regressor_layout(spec);
    if (reg.layout.size() != expect.size())
        throw std::invalid_argument("regressor_nodes: params layout does not match spec");
    RegressorNodes out;
    for (std::size_t i = 0; i < reg.layout.size(); ++i)
        out.params.push_back(g.input(reg.layer_tensor(i)));
    const std::size_t feat_nodes = 2 * fs.layer_count();
    const std::vector<NodeId> feat_params(out.params.begin(),
                                          out.params.begin() + static_cast<std::ptrdiff_t>(feat_nodes));
    const std::vector<NodeId> map_params(out.params.begin() + static_cast<std::ptrdiff_t>(feat_nodes),
                                         out.params.end());
    const NodeId feats = mlp_forward_nodes(g, fs, feat_params, input);
    // mean over the feature axis (global-average-pooling stand-in)
    const std::size_t h = fs.output_width();
    const NodeId pool_w = g.input(Tensor({h, 1}, std::vector<double>(h, 1.0 / static_cast<double>(h))));
    NodeId x = g.apply(Op::matmul, {feats, pool_w});
    const MlpSpec mapping{{1, spec.mapping_hidden, spec.output_size()},
                          Activation::identity, Activation::identity};
    x = mlp_forward_nodes(g, mapping, map_params, x);
    x = g.apply(Op::sigmoid, {x});
    Attrs norm;
    norm.rows = g.value(x).rows() * spec.layers;
    norm.cols = spec.experts;
    out.weights = g.apply(Op::normalize_rows, {x}, norm);
    return out;
}

// Predicted fusion weights for one input row (or each row of a batch).
inline std::vector<FusionWeights> regressor_forward(const FlatParams& reg, const RegressorSpec& spec,
                                                    const Tensor& input) {
    Graph g;
    const RegressorNodes nodes = regressor_nodes(g, spec, reg, g.input(input));
    const Tensor& w = g.value(nodes.weights);
    std::vector<FusionWeights> out;
    const std::size_t per = spec.layers * spec.experts;
    for (std::size_t b = 0; b < input.rows(); ++b) {
        FusionWeights fw{spec.layers, spec.experts,
                         std::vector<double>(w.data.begin() + static_cast<std::ptrdiff_t>(b * per),
                                             w.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * per))};
        fw.validate();
        out.push_back(std::move(fw));
    }
    return out;
}

// fused layer l = sum_k W[l,k] * expert_k layer l.
inline FlatParams assemble_fused(const std::vector<FlatParams>& experts, const FusionWeights& w) {
    if (experts.empty()) throw std::invalid_argument("assemble_fused: no experts");
    for (const FlatParams& e : experts)
        if (!e.same_layout(experts[0]))
            throw std::invalid_argument("assemble_fused: expert layout mismatch");
    if (w.experts != experts.size() || w.layers != experts[0].layout.size())
        throw std::invalid_argument("assemble_fused: weight shape mismatch");
    w.validate(1e-6);
    FlatParams fused = experts[0];
    std::fill(fused.data.begin(), fused.data.end(), 0.0);
    for (std::size_t l = 0; l < w.layers; ++l) {
        const LayerLayout& ll = fused.layout[l];
        for (std::size_t k = 0; k < w.experts; ++k) {
            const double wk = w.at(l, k);
            for (std::size_t i = 0; i < ll.length; ++i)
                fused.data[ll.offset + i] += wk * experts[k].data[ll.offset + i];
        }
    }
    return fused;
}

namespace detail {

// Constant per-layer expert tensors for the blend primitive.
inline std::vector<std::vector<Tensor>> expert_parts(const std::vector<FlatParams>& experts) {
    std::vector<std::vector<Tensor>> parts(experts[0].layout.size());
    for (std::size_t l = 0; l < parts.size(); ++l)
        for (const FlatParams& e : experts) parts[l].push_back(e.layer_tensor(l));
    return parts;
}

// Per-sample fused forward + Eq.1-style composite loss; returns the loss node
// and the discriminator loss node. `weights` must be an L x N normalized node.
struct FusedSampleNodes {
    NodeId loss = -1;
    NodeId disc_loss = -1;
    std::vector<NodeId> disc_params;
};

inline FusedSampleNodes fused_sample_loss(Graph& g, const TrainContext& ctx,
                                          const std::vector<std::vector<Tensor>>& parts,
                                          NodeId weights, const Tensor& input_row,
                                          const Tensor& target_row, const FlatParams& disc,
                                          const FusionConfig& fc) {
    const std::size_t L = parts.size();
    const std::size_t N = parts[0].size();
    std::vector<NodeId> fused_params(L);
    for (std::size_t l = 0; l < L; ++l) {
        Attrs a;
        a.rows = L;
        a.cols = N;
        a.row = l;
        a.parts = parts[l];
        fused_params[l] = g.apply(Op::convex_blend, {weights}, a);
    }
    const NodeId x = g.input(input_row);
    const NodeId target = g.input(target_row);
    const NodeId pred = mlp_forward_nodes(g, ctx.cfg.toy.gen_spec, fused_params, x);
    const NodeId pix = g.apply(Op::mean_abs_error, {pred, target});
    const NodeId fp = mlp_apply(g, ctx.feat.spec, ctx.feat.params, pred).output;
    const NodeId ft = mlp_apply(g, ctx.feat.spec, ctx.feat.params, target).output;
    const NodeId percep = g.apply(Op::mean_sq_error, {fp, ft});
    const MlpNodes disc_nodes = mlp_apply(g, ctx.cfg.toy.disc_spec, disc, pred);
    Attrs t1, t0;
    t1.target = 1;
    t0.target = 0;
    const NodeId adv = g.apply(Op::logistic_loss, {disc_nodes.output}, t1);
    Attrs s1, s2, s3;
    s1.value = fc.alpha1;
    s2.value = fc.alpha2;
    s3.value = fc.alpha3;
    NodeId loss = g.apply(Op::add, {g.apply(Op::scalar_scale, {pix}, s1),
                                    g.apply(Op::scalar_scale, {percep}, s2)});
    loss = g.apply(Op::add, {loss, g.apply(Op::scalar_scale, {adv}, s3)});
    const NodeId real_logit = mlp_forward_nodes(g, ctx.cfg.toy.disc_spec, disc_nodes.params, target);
    const NodeId dl = g.apply(Op::add, {g.apply(Op::logistic_loss, {real_logit}, t1),
                                        g.apply(Op::logistic_loss, {disc_nodes.output}, t0)});
    return FusedSampleNodes{loss, dl, disc_nodes.params};
}

inline Tensor row_of(const Tensor& t, std::size_t r) {
    Tensor out = Tensor::zeros({1, t.cols()});
    for (std::size_t c = 0; c < t.cols(); ++c) out.at(0, c) = t.at(r, c);
    return out;
}

}  // namespace detail

// Train the weight-regression network against the composite GAN loss, experts
// frozen, discriminator freshly initialized and co-trained on its own loss.
inline FlatParams train_regressor(const TrainContext& ctx, const std::vector<FlatParams>& experts,
                                  FusionConfig fc) {
    if (ctx.cfg.analytic) throw std::invalid_argument("train_regressor: needs the toy-sr task");
    fc.validate();
    fc.reg.experts = experts.size();
    fc.reg.layers = experts[0].layout.size();
    fc.reg.feature_widths[0] = ctx.ds.d_lr();
    FlatParams reg = init_regressor(fc.reg, stream_seed(fc.seed, fusion_streams::reg_init));
    FlatParams disc = init_mlp(ctx.cfg.toy.disc_spec, stream_seed(fc.seed, fusion_streams::disc_init));
    AdamHyper hyper = ctx.cfg.adam;
    hyper.lr = fc.lr;
    AdamState reg_adam = AdamState::fresh(reg.data.size(), hyper);
    AdamState disc_adam = AdamState::fresh(disc.data.size(), hyper);
    const auto parts = detail::expert_parts(experts);
    for (std::size_t epoch = 1; epoch <= fc.epochs; ++epoch) {
        Rng rng(stream_seed(fc.seed, fusion_streams::train, epoch));
        for (std::size_t step = 0; step < fc.steps_per_epoch; ++step) {
            const EvalBatch batch = ctx.ds.minibatch(ToySrDataset::Part::train, fc.batch_size, rng);
            std::vector<double> reg_grad(reg.data.size(), 0.0);
            std::vector<double> disc_grad(disc.data.size(), 0.0);
            for (std::size_t b = 0; b < batch.batch_size(); ++b) {
                Graph g;
                const Tensor in_row = detail::row_of(batch.inputs, b);
                const RegressorNodes rn = regressor_nodes(g, fc.reg, reg, g.input(in_row));
                const auto sample = detail::fused_sample_loss(
                    g, ctx, parts, rn.weights, in_row, detail::row_of(batch.targets, b), disc, fc);
                if (!std::isfinite(g.value(sample.loss).data[0]))
                    throw std::runtime_error("train_regressor: non-finite loss at batch " +
                                             std::to_string(step + 1));
                const auto gl = gather_param_grad(g.backward(sample.loss), rn.params, reg.layout);
                for (std::size_t i = 0; i < reg_grad.size(); ++i) reg_grad[i] += gl[i];
                const auto gd =
                    gather_param_grad(g.backward(sample.disc_loss), sample.disc_params, disc.layout);
                for (std::size_t i = 0; i < disc_grad.size(); ++i) disc_grad[i] += gd[i];
            }
            const double inv = 1.0 / static_cast<double>(batch.batch_size());
            for (double& v : reg_grad) v *= inv;
            for (double& v : disc_grad) v *= inv;
            adam_step(reg.data, reg_grad, reg_adam);
            adam_step(disc.data, disc_grad, disc_adam);
        }
    }
    return reg;
}

struct FusionOutcome {
    UniversalWeights weights;
    FlatParams fused;
};

// Average the per-input predicted weights over M validation inputs into one
// universal weight matrix, then assemble the fused model.
inline FusionOutcome universal_fuse(const TrainContext& ctx, const FlatParams& reg,
                                    const RegressorSpec& spec,
                                    const std::vector<FlatParams>& experts, std::size_t m) {
    if (m < 1) throw std::invalid_argument("universal_fuse: empty validation set");
    const EvalBatch val = ctx.ds.part_batch(ToySrDataset::Part::validation);
    if (m > val.batch_size()) m = val.batch_size();
    UniversalWeights mean{spec.layers, spec.experts,
                          std::vector<double>(spec.layers * spec.experts, 0.0)};
    for (std::size_t i = 0; i < m; ++i) {
        const auto w = regressor_forward(reg, spec, detail::row_of(val.inputs, i));
        for (std::size_t j = 0; j < mean.w.size(); ++j) mean.w[j] += w[0].w[j];
    }
    for (double& v : mean.w) v /= static_cast<double>(m);
    mean.validate(1e-6);
    return FusionOutcome{mean, assemble_fused(experts, mean)};
}

enum class FusionBaseline { uniform_average, single_layer_broadcast, learnable_weight };

// Directly optimized L x N weight matrix with softmax-parameterized rows,
// trained against the same composite loss and budget.
inline FusionOutcome learnable_weight_fuse(const TrainContext& ctx,
                                           const std::vector<FlatParams>& experts, FusionConfig fc) {
    fc.validate();
    const std::size_t L = experts[0].layout.size();
    const std::size_t N = experts.size();
    std::vector<double> raw(L * N, 0.0);
    FlatParams disc = init_mlp(ctx.cfg.toy.disc_spec, stream_seed(fc.seed, fusion_streams::disc_init));
    AdamHyper hyper = ctx.cfg.adam;
    hyper.lr = fc.lr;
    AdamState raw_adam = AdamState::fresh(raw.size(), hyper);
    AdamState disc_adam = AdamState::fresh(disc.data.size(), hyper);
    const auto parts = detail::expert_parts(experts);
    Attrs norm;
    norm.rows = L;
    norm.cols = N;
    for (std::size_t epoch = 1; epoch <= fc.epochs; ++epoch) {
        Rng rng(stream_seed(fc.seed, fusion_streams::learnable, epoch));
        for (std::size_t step = 0; step < fc.steps_per_epoch; ++step) {
            const EvalBatch batch = ctx.ds.minibatch(ToySrDataset::Part::train, fc.batch_size, rng);
            std::vector<double> grad(raw.size(), 0.0);
            std::vector<double> dgrad(disc.data.size(), 0.0);
            for (std::size_t b = 0; b < batch.batch_size(); ++b) {
                Graph g;
                const NodeId raw_node = g.input(Tensor({L, N}, raw));
                const NodeId weights = g.apply(Op::normalize_rows, {g.apply(Op::exp, {raw_node})}, norm);
                const auto sample = detail::fused_sample_loss(
                    g, ctx, parts, weights, detail::row_of(batch.inputs, b),
                    detail::row_of(batch.targets, b), disc, fc);
                if (!std::isfinite(g.value(sample.loss).data[0]))
                    throw std::runtime_error("learnable_weight_fuse: non-finite loss");
                const GradientMap grads = g.backward(sample.loss);
                const Tensor& gr = grads[static_cast<std::size_t>(raw_node)];
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += gr.data[i];
                const auto gd =
                    gather_param_grad(g.backward(sample.disc_loss), sample.disc_params, disc.layout);
                for (std::size_t i = 0; i < dgrad.size(); ++i) dgrad[i] += gd[i];
            }
            const double inv = 1.0 / static_cast<double>(batch.batch_size());
            for (double& v : grad) v *= inv;
            for (double& v : dgrad) v *= inv;
            adam_step(raw, grad, raw_adam);
            adam_step(disc.data, dgrad, disc_adam);
        }
    }
    FusionWeights w{L, N, std::vector<double>(L * N, 0.0)};
    for (std::size_t l = 0; l < L; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < N; ++k) s += std::exp(raw[l * N + k]);
        for (std::size_t k = 0; k < N; ++k) w.at(l, k) = std::exp(raw[l * N + k]) / s;
    }
    return FusionOutcome{w, assemble_fused(experts, w)};
}

inline FusionOutcome fuse_baselines(const TrainContext& ctx, const std::vector<FlatParams>& experts,
                                    FusionBaseline mode, const FusionConfig* fc = nullptr) {
    const std::size_t L = experts.at(0).layout.size();
    const std::size_t N = experts.size();
    switch (mode) {
        case FusionBaseline::uniform_average: {
            const FusionWeights w = FusionWeights::uniform(L, N);
            return FusionOutcome{w, assemble_fused(experts, w)};
        }
        case FusionBaseline::single_layer_broadcast: {
            if (!fc) throw std::invalid_argument("single_layer_broadcast: needs data and config");
            FusionConfig cfg = *fc;
            const FlatParams reg = train_regressor(ctx, experts, cfg);
            cfg.reg.experts = N;
            cfg.reg.layers = L;
            cfg.reg.feature_widths[0] = ctx.ds.d_lr();
            FusionOutcome full = universal_fuse(ctx, reg, cfg.reg, experts, cfg.m);
            FusionWeights w = full.weights;
            for (std::size_t l = 1; l < L; ++l)
                for (std::size_t k = 0; k < N; ++k) w.at(l, k) = w.at(0, k);
            return FusionOutcome{w, assemble_fused(experts, w)};
        }
        case FusionBaseline::learnable_weight: {
            if (!fc) throw std::invalid_argument("learnable_weight: needs data and config");
            return learnable_weight_fuse(ctx, experts, *fc);
        }
    }
    throw std::invalid_argument("fuse_baselines: unknown mode");
}

}  // namespace evoadam
