#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evoadam/driver.hpp"
#include "evoadam/fusion.hpp"

using namespace evoadam;

namespace {

TrainConfig tiny_toy_config() {
    TrainConfig cfg;
    cfg.population = 3;
    cfg.toy.sample_count = 40;
    cfg.toy.d_hr = 16;
    cfg.toy.factor = 4;
    cfg.toy.gen_spec = MlpSpec{{4, 6, 16}, Activation::leaky_relu, Activation::identity};
    cfg.toy.disc_spec = MlpSpec{{16, 6, 1}, Activation::leaky_relu, Activation::identity};
    cfg.objective.feature_spec = MlpSpec{{16, 8, 6}, Activation::leaky_relu, Activation::identity};
    cfg.evo.n_nbr = 2;
    return cfg;
}

std::vector<FlatParams> make_experts(const TrainConfig& cfg, std::size_t n) {
    std::vector<FlatParams> experts;
    for (std::size_t k = 0; k < n; ++k) experts.push_back(init_mlp(cfg.toy.gen_spec, 100 + k));
    return experts;
}

FusionConfig tiny_fusion_config() {
    FusionConfig fc;
    fc.epochs = 3;
    fc.steps_per_epoch = 2;
    fc.batch_size = 4;
    fc.m = 4;
    fc.reg.feature_widths = {4, 6, 6, 6};
    fc.reg.mapping_hidden = 6;
    return fc;
}

}  // namespace

TEST_CASE("regressor forward produces simplex rows deterministically") {
    const TrainConfig cfg = tiny_toy_config();
    RegressorSpec spec;
    spec.feature_widths = {4, 6, 6, 6};
    spec.mapping_hidden = 6;
    spec.experts = 3;
    spec.layers = 4;
    const FlatParams reg = init_regressor(spec, 55);
    Tensor input({1, 4}, {0.2, -0.4, 0.8, 0.1});
    const auto w1 = regressor_forward(reg, spec, input);
    const auto w2 = regressor_forward(reg, spec, input);
    REQUIRE(w1.size() == 1);
    CHECK(w1[0].w == w2[0].w);
    for (std::size_t l = 0; l < spec.layers; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < spec.experts; ++k) {
            CHECK(w1[0].at(l, k) >= 0.0);
            CHECK(w1[0].at(l, k) <= 1.0);
            s += w1[0].at(l, k);
        }
        CHECK(s == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("equal sigmoid outputs normalize to uniform rows") {
    // zero mapping weights with any shared bias give identical sigmoids
    RegressorSpec spec;
    spec.feature_widths = {4, 6, 6, 6};
    spec.mapping_hidden = 6;
    spec.experts = 4;
    spec.layers = 2;
    FlatParams reg = init_regressor(spec, 7);
    // zero the mapping module's final layer weights, set bias large positive
    for (std::size_t i = 0; i < reg.layout.size(); ++i) {
        const LayerLayout& l = reg.layout[i];
        if (l.name == "mw2")
            for (std::size_t j = 0; j < l.length; ++j) reg.data[l.offset + j] = 0.0;
        if (l.name == "mb2")
            for (std::size_t j = 0; j < l.length; ++j) reg.data[l.offset + j] = 9.0;
    }
    const auto w = regressor_forward(reg, spec, Tensor({1, 4}, {1.0, 2.0, 3.0, 4.0}));
    for (std::size_t l = 0; l < spec.layers; ++l)
        for (std::size_t k = 0; k < spec.experts; ++k)
            CHECK(w[0].at(l, k) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("assemble_fused") {
    const TrainConfig cfg = tiny_toy_config();
    const std::vector<FlatParams> experts = make_experts(cfg, 3);
    const std::size_t L = experts[0].layout.size();
    SECTION("identical experts reproduce themselves under any valid weights") {
        const std::vector<FlatParams> same{experts[0], experts[0], experts[0]};
        FusionWeights w = FusionWeights::uniform(L, 3);
        w.at(0, 0) = 0.6;
        w.at(0, 1) = 0.3;
        w.at(0, 2) = 0.1;
        const FlatParams fused = assemble_fused(same, w);
        for (std::size_t i = 0; i < fused.data.size(); ++i)
            CHECK(fused.data[i] == Catch::Approx(experts[0].data[i]).margin(1e-15));
    }
    SECTION("scalar blend example") {
        // two experts, weights (0.25, 0.75), layer values 0 and 1 -> 0.75
        MlpSpec small{{1, 1}, Activation::identity, Activation::identity};
        FlatParams e0 = init_mlp(small, 1);
        FlatParams e1 = init_mlp(small, 2);
        std::fill(e0.data.begin(), e0.data.end(), 0.0);
        std::fill(e1.data.begin(), e1.data.end(), 1.0);
        FusionWeights w{2, 2, {0.25, 0.75, 0.25, 0.75}};
        const FlatParams fused = assemble_fused({e0, e1}, w);
        CHECK(fused.data[0] == 0.75);
    }
    SECTION("one-hot rows select an expert") {
        FusionWeights w{L, 3, std::vector<double>(L * 3, 0.0)};
        for (std::size_t l = 0; l < L; ++l) w.at(l, 2) = 1.0;
        CHECK(assemble_fused(experts, w).data == experts[2].data);
    }
    SECTION("linearity in the weights") {
        FusionWeights wa = FusionWeights::uniform(L, 3);
        FusionWeights wb{L, 3, std::vector<double>(L * 3, 0.0)};
        for (std::size_t l = 0; l < L; ++l) wb.at(l, 0) = 1.0;
        const double a = 0.3;
        FusionWeights mix{L, 3, std::vector<double>(L * 3, 0.0)};
        for (std::size_t i = 0; i < mix.w.size(); ++i) mix.w[i] = a * wa.w[i] + (1 - a) * wb.w[i];
        const FlatParams fa = assemble_fused(experts, wa);
        const FlatParams fb = assemble_fused(experts, wb);
        const FlatParams fm = assemble_fused(experts, mix);
        for (std::size_t i = 0; i < fm.data.size(); ++i)
            CHECK(fm.data[i] == Catch::Approx(a * fa.data[i] + (1 - a) * fb.data[i]).margin(1e-12));
    }
    SECTION("fused parameters stay in the per-coordinate expert envelope") {
        const FusionWeights w = FusionWeights::uniform(L, 3);
        const FlatParams fused = assemble_fused(experts, w);
        for (std::size_t i = 0; i < fused.data.size(); ++i) {
            const double lo = std::min({experts[0].data[i], experts[1].data[i], experts[2].data[i]});
            const double hi = std::max({experts[0].data[i], experts[1].data[i], experts[2].data[i]});
            CHECK(fused.data[i] >= lo - 1e-12);
            CHECK(fused.data[i] <= hi + 1e-12);
        }
    }
    SECTION("row-sum violation beyond 1e-6 errors") {
        FusionWeights w = FusionWeights::uniform(L, 3);
        w.at(0, 0) += 1e-3;
        CHECK_THROWS(assemble_fused(experts, w));
    }
    SECTION("layout mismatch errors") {
        std::vector<FlatParams> bad = experts;
        bad[1] = init_mlp(MlpSpec{{4, 7, 16}, Activation::leaky_relu, Activation::identity}, 1);
        CHECK_THROWS(assemble_fused(bad, FusionWeights::uniform(L, 3)));
    }
}

TEST_CASE("train_regressor leaves the experts untouched") {
    const TrainConfig cfg = tiny_toy_config();
    const TrainContext ctx = build_context(cfg);
    const std::vector<FlatParams> experts = make_experts(cfg, 3);
    const std::vector<FlatParams> copies = experts;
    const FusionConfig fc = tiny_fusion_config();
    const FlatParams reg = train_regressor(ctx, experts, fc);
    for (std::size_t k = 0; k < experts.size(); ++k) CHECK(experts[k].data == copies[k].data);
    CHECK(reg.data.size() > 0);
    // determinism
    const FlatParams reg2 = train_regressor(ctx, experts, fc);
    CHECK(reg.data == reg2.data);
}

TEST_CASE("universal_fuse averages per-input weights") {
    const TrainConfig cfg = tiny_toy_config();
    const TrainContext ctx = build_context(cfg);
    const std::vector<FlatParams> experts = make_experts(cfg, 3);
    FusionConfig fc = tiny_fusion_config();
    const FlatParams reg = train_regressor(ctx, experts, fc);
    fc.reg.experts = 3;
    fc.reg.layers = experts[0].layout.size();
    fc.reg.feature_widths[0] = ctx.ds.d_lr();
    SECTION("m = 1 equals that input's weights") {
        const FusionOutcome one = universal_fuse(ctx, reg, fc.reg, experts, 1);
        const EvalBatch val = ctx.ds.part_batch(ToySrDataset::Part::validation);
        Tensor row = Tensor::zeros({1, ctx.ds.d_lr()});
        for (std::size_t c = 0; c < ctx.ds.d_lr(); ++c) row.at(0, c) = val.inputs.at(0, c);
        const auto w = regressor_forward(reg, fc.reg, row);
        for (std::size_t i = 0; i < w[0].w.size(); ++i)
            CHECK(one.weights.w[i] == Catch::Approx(w[0].w[i]).margin(1e-12));
    }
    SECTION("rows of the mean stay on the simplex") {
        const FusionOutcome out = universal_fuse(ctx, reg, fc.reg, experts, 4);
        out.weights.validate(1e-9);
    }
    SECTION("hand-built mean of one-hot rows") {
        FusionWeights a{1, 2, {1.0, 0.0}};
        FusionWeights b{1, 2, {0.0, 1.0}};
        FusionWeights mean{1, 2, {0.5, 0.5}};
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(0.5 * (a.w[i] + b.w[i]) == Catch::Approx(mean.w[i]));
    }
}

TEST_CASE("fusion baselines") {
    const TrainConfig cfg = tiny_toy_config();
    const TrainContext ctx = build_context(cfg);
    const std::vector<FlatParams> experts = make_experts(cfg, 5);
    const std::size_t L = experts[0].layout.size();
    SECTION("uniform average rows are exactly 1/N") {
        const FusionOutcome out = fuse_baselines(ctx, experts, FusionBaseline::uniform_average);
        for (double v : out.weights.w) CHECK(v == Catch::Approx(0.2));
    }
    SECTION("learnable weight rows sum to one by construction") {
        const FusionConfig fc = tiny_fusion_config();
        const FusionOutcome out = fuse_baselines(ctx, experts, FusionBaseline::learnable_weight, &fc);
        for (std::size_t l = 0; l < L; ++l) {
            double s = 0.0;
            for (std::size_t k = 0; k < 5; ++k) s += out.weights.at(l, k);
            CHECK(s == Catch::Approx(1.0).margin(1e-9));
        }
    }
    SECTION("single-layer broadcast copies row one everywhere") {
        const FusionConfig fc = tiny_fusion_config();
        const FusionOutcome out =
            fuse_baselines(ctx, experts, FusionBaseline::single_layer_broadcast, &fc);
        for (std::size_t l = 1; l < L; ++l)
            for (std::size_t k = 0; k < 5; ++k)
                CHECK(out.weights.at(l, k) == out.weights.at(0, k));
    }
    SECTION("mode-input mismatch errors") {
        CHECK_THROWS(fuse_baselines(ctx, experts, FusionBaseline::learnable_weight, nullptr));
    }
}

TEST_CASE("regressor training concentrates weight on a perfect expert") {
    // one expert that reconstructs far better than the other: with the
    // perceptual-dominated loss, trained rows should put most mass on it
    TrainConfig cfg = tiny_toy_config();
    cfg.adam.lr = 1e-3;
    const TrainContext ctx = build_context(cfg);

    // train a decent generator on f1 for a while to act as the good expert
    TrainConfig pre_cfg = cfg;
    pre_cfg.pretrain_epochs = 150;
    pre_cfg.steps_per_epoch = 10;
    pre_cfg.batch_size = 16;
    pre_cfg.adam.lr = 1e-2;
    const TrainContext pre_ctx = build_context(pre_cfg);
    const FlatParams good = pretrain(pre_ctx);
    FlatParams bad = init_mlp(cfg.toy.gen_spec, 777);
    for (double& v : bad.data) v *= 3.0;  // clearly wrong model

    FusionConfig fc = tiny_fusion_config();
    fc.epochs = 60;
    fc.steps_per_epoch = 4;
    fc.batch_size = 8;
    fc.lr = 5e-2;
    fc.alpha1 = 0.0;
    fc.alpha2 = 1.0;
    fc.alpha3 = 0.0;
    const std::vector<FlatParams> experts{good, bad};
    const FlatParams reg = train_regressor(ctx, experts, fc);
    fc.reg.experts = 2;
    fc.reg.layers = experts[0].layout.size();
    fc.reg.feature_widths[0] = ctx.ds.d_lr();
    const FusionOutcome out = universal_fuse(ctx, reg, fc.reg, experts, fc.m);
    double mass_good = 0.0;
    for (std::size_t l = 0; l < out.weights.layers; ++l) mass_good += out.weights.at(l, 0);
    mass_good /= static_cast<double>(out.weights.layers);
    INFO("average mass on the good expert: " << mass_good);
    CHECK(mass_good > 0.5);
}
