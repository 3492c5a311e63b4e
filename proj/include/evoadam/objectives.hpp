#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "evoadam/graph.hpp"
#include "evoadam/params.hpp"
#include "evoadam/tensor.hpp"

namespace evoadam {

// A batch of low-resolution inputs and their high-resolution targets.
struct EvalBatch {
    Tensor inputs;   // B x d_in
    Tensor targets;  // B x d_out

    void validate() const {
        if (inputs.rank() != 2 || targets.rank() != 2 || inputs.rows() != targets.rows())
            throw std::invalid_argument("eval batch: inputs " + shape_str(inputs.shape) +
                                        " / targets " + shape_str(targets.shape));
    }
    std::size_t batch_size() const { return inputs.rows(); }
};

struct ObjectiveValues {
    double f1 = 0.0;  // fidelity loss, nonnegative
    double f2 = 0.0;  // perceptual composite
};

// alpha weighs the adversarial term inside f2; the feature network for the
// perceptual proxy is frozen and fully determined by (feature_spec, feature_seed).
struct ObjectiveConfig {
    double alpha = 0.005;
    std::uint64_t feature_seed = 90210;
    MlpSpec feature_spec{{32, 20, 12}, Activation::leaky_relu, Activation::identity};
};

// Frozen random feature extractor; never trained.
struct FeatureNet {
    MlpSpec spec;
    FlatParams params;
};

inline FeatureNet make_feature_net(const ObjectiveConfig& cfg) {
    return FeatureNet{cfg.feature_spec, init_mlp(cfg.feature_spec, cfg.feature_seed)};
}

// Mean absolute error over all elements.
inline double pixel_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("pixel_loss: " + shape_str(pred.shape) + " vs " +
                                    shape_str(target.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred.data[i] - target.data[i]);
    return acc / static_cast<double>(pred.size());
}

// Mean squared error between frozen-network features of pred and target.
inline double perceptual_proxy(const Tensor& pred, const Tensor& target, const FeatureNet& feat) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("perceptual_proxy: " + shape_str(pred.shape) + " vs " +
                                    shape_str(target.shape));
    Graph g;
    NodeId a = mlp_apply(g, feat.spec, feat.params, g.input(pred)).output;
    NodeId b = mlp_apply(g, feat.spec, feat.params, g.input(target)).output;
    return g.value(g.apply(Op::mean_sq_error, {a, b})).data[0];
}

inline double perceptual_proxy(const Tensor& pred, const Tensor& target, const ObjectiveConfig& cfg) {
    return perceptual_proxy(pred, target, make_feature_net(cfg));
}

struct AdvLosses {
    double gen_loss = 0.0;
    double disc_loss = 0.0;
};

// Non-saturating logistic GAN losses. pred is a constant inside disc_loss
// and real a constant inside gen_loss; at value level that falls out for free.
inline AdvLosses adversarial_losses(const FlatParams& disc, const MlpSpec& disc_spec,
                                    const Tensor& pred, const Tensor& real) {
    if (!pred.same_shape(real))
        throw std::invalid_argument("adversarial_losses: " + shape_str(pred.shape) + " vs " +
                                    shape_str(real.shape));
    Graph g;
    NodeId fake_logit = mlp_apply(g, disc_spec, disc, g.input(pred)).output;
    NodeId real_logit = mlp_apply(g, disc_spec, disc, g.input(real)).output;
    Attrs t1;
    t1.target = 1;
    Attrs t0;
    t0.target = 0;
    const double gen = g.value(g.apply(Op::logistic_loss, {fake_logit}, t1)).data[0];
    const double d = g.value(g.apply(Op::logistic_loss, {real_logit}, t1)).data[0] +
                     g.value(g.apply(Op::logistic_loss, {fake_logit}, t0)).data[0];
    return AdvLosses{gen, d};
}

// f2 of the two-objective formulation: perceptual proxy + alpha * generator
// adversarial loss.
inline double composite_f2(const Tensor& pred, const Tensor& target, const FlatParams& disc,
                           const MlpSpec& disc_spec, const FeatureNet& feat, double alpha) {
    const double percep = perceptual_proxy(pred, target, feat);
    const double adv = adversarial_losses(disc, disc_spec, pred, target).gen_loss;
    return percep + alpha * adv;
}

inline double composite_f2(const Tensor& pred, const Tensor& target, const FlatParams& disc,
                           const MlpSpec& disc_spec, const ObjectiveConfig& cfg) {
    return composite_f2(pred, target, disc, disc_spec, make_feature_net(cfg), cfg.alpha);
}

}  // namespace evoadam
