#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoadam/adam.hpp"
#include "evoadam/analytic.hpp"
#include "evoadam/dataset.hpp"
#include "evoadam/evolution.hpp"
#include "evoadam/objectives.hpp"
#include "evoadam/params.hpp"
#include "evoadam/rng.hpp"

namespace evoadam {

struct ToySrProblemConfig {
    std::uint64_t dataset_seed = 4242;
    std::size_t sample_count = 160;
    std::size_t d_hr = 32;
    std::size_t factor = 4;
    MlpSpec gen_spec{{8, 24, 32}, Activation::leaky_relu, Activation::identity};
    MlpSpec disc_spec{{32, 24, 1}, Activation::leaky_relu, Activation::identity};
};

// Everything that defines one training run. Defaults carry the reference
// hyperparameters: N=5, T=100, T_adam=10, T_ea=1, delta=0.7, eta=20,
// sigma2=0.01, alpha=0.005.
struct TrainConfig {
    std::size_t population = 5;    // N
    std::size_t epochs = 100;      // T
    std::size_t adam_epochs = 10;  // T_adam per cycle
    std::size_t ea_epochs = 1;     // T_ea per cycle
    std::size_t steps_per_epoch = 50;
    std::size_t batch_size = 16;
    std::size_t pretrain_epochs = 20;
    std::uint64_t master_seed = 1;
    std::uint64_t eval_batch_seed = 7;
    AdamHyper adam;
    EvoConfig evo;
    ObjectiveConfig objective;
    bool analytic = false;
    AnalyticProblem analytic_problem;
    ToySrProblemConfig toy;

    void validate() const {
        if (population < 2) throw std::invalid_argument("train config: population must be >= 2");
        if (epochs < 1 || adam_epochs < 1 || ea_epochs < 1)
            throw std::invalid_argument("train config: epochs, adam_epochs, ea_epochs must be >= 1");
        if (steps_per_epoch < 1) throw std::invalid_argument("train config: steps_per_epoch must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
        evo.validate(population);
        if (analytic) {
            analytic_problem.validate();
        } else {
            toy.gen_spec.validate();
            toy.disc_spec.validate();
            objective.feature_spec.validate();
            const std::size_t d_lr = toy.d_hr / toy.factor;
            if (toy.gen_spec.input_width() != d_lr || toy.gen_spec.output_width() != toy.d_hr)
                throw std::invalid_argument("train config: generator widths must map d_lr to d_hr");
            if (toy.disc_spec.input_width() != toy.d_hr || toy.disc_spec.output_width() != 1)
                throw std::invalid_argument("train config: discriminator must map d_hr to one logit");
            if (objective.feature_spec.input_width() != toy.d_hr)
                throw std::invalid_argument("train config: feature network input must be d_hr");
        }
    }
};

struct Individual {
    FlatParams gen;
    std::optional<FlatParams> disc;
    AdamState gen_adam;
    std::optional<AdamState> disc_adam;
    double lambda = 0.0;
    ObjectiveValues last_values{};
    bool frozen = false;
};

struct LogRow {
    std::size_t epoch = 0;
    std::string phase;  // "adam" or "ea"
    std::size_t k = 0;  // 1-based individual / model index
    double lambda = 0.0;
    double f1 = 0.0, f2 = 0.0, tcheb = 0.0, z1 = 0.0, z2 = 0.0;
};

using RunLog = std::vector<LogRow>;

struct PhaseInfo {
    std::size_t epoch = 0;
    std::string phase;
    bool ea_phase_end = false;
};

using RunObserver =
    std::function<void(const PhaseInfo&, const std::vector<Individual>&, const IdealPoint&)>;

struct RunResult {
    FlatParams theta0;
    std::vector<Individual> population;
    NeighborhoodMap nbh;
    IdealPoint z;
    RunLog log;
};

// stream tags
namespace streams {
constexpr std::uint64_t pretrain_init = 0x11;
constexpr std::uint64_t pretrain = 0x12;
constexpr std::uint64_t disc_init = 0x21;
constexpr std::uint64_t adam_phase = 0x31;
constexpr std::uint64_t ea_phase = 0x32;
constexpr std::uint64_t baseline = 0x41;
constexpr std::uint64_t baseline_disc = 0x42;
constexpr std::uint64_t eval_disc = 0x51;
}  // namespace streams

// Shared per-run context; for toy-sr it owns the dataset, the frozen feature
// network and the fixed evaluation batch (the whole validation partition).
struct TrainContext {
    TrainConfig cfg;
    ToySrDataset ds;
    FeatureNet feat;
    EvalBatch eval_batch;
};

inline TrainContext build_context(const TrainConfig& cfg) {
    cfg.validate();
    TrainContext ctx;
    ctx.cfg = cfg;
    if (!cfg.analytic) {
        ctx.ds = make_toy_sr_dataset(cfg.toy.dataset_seed, cfg.toy.sample_count, cfg.toy.d_hr,
                                     cfg.toy.factor);
        ctx.feat = make_feature_net(cfg.objective);
        ctx.eval_batch = ctx.ds.part_batch(ToySrDataset::Part::validation);
    }
    return ctx;
}

inline FlatParams analytic_params(const AnalyticProblem& p) {
    FlatParams fp;
    fp.data = p.start;
    fp.layout = {{"x", 0, p.dimension, {p.dimension}}};
    return fp;
}

// Generator forward on a batch, value only.
inline Tensor generator_predict(const TrainContext& ctx, const FlatParams& gen, const Tensor& inputs) {
    Graph g;
    const NodeId out = mlp_apply(g, ctx.cfg.toy.gen_spec, gen, g.input(inputs)).output;
    return g.value(out);
}

// Objective values of a generator (with its discriminator) on a batch.
inline ObjectiveValues eval_generator(const TrainContext& ctx, const FlatParams& gen,
                                      const FlatParams* disc, const EvalBatch& batch) {
    if (ctx.cfg.analytic) {
        return analytic_eval(ctx.cfg.analytic_problem, gen.data).values;
    }
    const Tensor pred = generator_predict(ctx, gen, batch.inputs);
    ObjectiveValues v;
    v.f1 = pixel_loss(pred, batch.targets);
    v.f2 = perceptual_proxy(pred, batch.targets, ctx.feat);
    if (disc != nullptr)
        v.f2 += ctx.cfg.objective.alpha *
                adversarial_losses(*disc, ctx.cfg.toy.disc_spec, pred, batch.targets).gen_loss;
    return v;
}

inline ObjectiveValues eval_individual(const TrainContext& ctx, const Individual& ind) {
    return eval_generator(ctx, ind.gen, ind.disc ? &*ind.disc : nullptr, ctx.eval_batch);
}

struct GenGrads {
    double f1 = 0.0, f2 = 0.0;
    std::vector<double> g1, g2;
};

// Gradients of both objectives w.r.t. the generator parameters on one batch.
// The discriminator enters f2 only through the adversarial term; its own
// parameters are leaves whose gradients are simply never read here.
inline GenGrads generator_grads(const TrainContext& ctx, const FlatParams& gen,
                                const FlatParams& disc, const EvalBatch& batch) {
    Graph g;
    const NodeId input = g.input(batch.inputs);
    const NodeId target = g.input(batch.targets);
    const MlpNodes gen_nodes = mlp_apply(g, ctx.cfg.toy.gen_spec, gen, input);
    const NodeId pred = gen_nodes.output;
    const NodeId f1 = g.apply(Op::mean_abs_error, {pred, target});
    const NodeId feat_pred = mlp_apply(g, ctx.feat.spec, ctx.feat.params, pred).output;
    const NodeId feat_target = mlp_apply(g, ctx.feat.spec, ctx.feat.params, target).output;
    const NodeId percep = g.apply(Op::mean_sq_error, {feat_pred, feat_target});
    const NodeId fake_logit = mlp_apply(g, ctx.cfg.toy.disc_spec, disc, pred).output;
    Attrs t1;
    t1.target = 1;
    const NodeId gen_adv = g.apply(Op::logistic_loss, {fake_logit}, t1);
    Attrs sc;
    sc.value = ctx.cfg.objective.alpha;
    const NodeId f2 = g.apply(Op::add, {percep, g.apply(Op::scalar_scale, {gen_adv}, sc)});
    GenGrads out;
    out.f1 = g.value(f1).data[0];
    out.f2 = g.value(f2).data[0];
    if (!std::isfinite(out.f1) || !std::isfinite(out.f2))
        throw std::runtime_error("generator objective diverged (non-finite loss)");
    out.g1 = gather_param_grad(g.backward(f1), gen_nodes.params, gen.layout);
    out.g2 = gather_param_grad(g.backward(f2), gen_nodes.params, gen.layout);
    return out;
}

// Discriminator gradient on one batch; the generator prediction is a
// constant as far as these gradients are concerned.
inline std::vector<double> discriminator_grad(const TrainContext& ctx, const FlatParams& gen,
                                              const FlatParams& disc, const EvalBatch& batch) {
    Graph g;
    const NodeId pred = mlp_apply(g, ctx.cfg.toy.gen_spec, gen, g.input(batch.inputs)).output;
    const MlpNodes disc_nodes = mlp_apply(g, ctx.cfg.toy.disc_spec, disc, g.input(batch.targets));
    const NodeId real_logit = disc_nodes.output;
    const NodeId fake_logit = mlp_forward_nodes(g, ctx.cfg.toy.disc_spec, disc_nodes.params, pred);
    Attrs t1, t0;
    t1.target = 1;
    t0.target = 0;
    const NodeId loss = g.apply(Op::add, {g.apply(Op::logistic_loss, {real_logit}, t1),
                                          g.apply(Op::logistic_loss, {fake_logit}, t0)});
    if (!std::isfinite(g.value(loss).data[0]))
        throw std::runtime_error("discriminator loss diverged (non-finite loss)");
    return gather_param_grad(g.backward(loss), disc_nodes.params, disc.layout);
}

// Train a fresh generator with Adam on f1 only. Deterministic in master_seed.
inline FlatParams pretrain(const TrainContext& ctx) {
    const TrainConfig& cfg = ctx.cfg;
    FlatParams gen = cfg.analytic
                         ? analytic_params(cfg.analytic_problem)
                         : init_mlp(cfg.toy.gen_spec, stream_seed(cfg.master_seed, streams::pretrain_init));
    AdamState state = AdamState::fresh(gen.data.size(), cfg.adam);
    for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
        Rng rng(stream_seed(cfg.master_seed, streams::pretrain, epoch));
        for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step) {
            try {
                if (cfg.analytic) {
                    adam_step(gen.data, analytic_eval(cfg.analytic_problem, gen.data).grad_f1, state);
                } else {
                    const EvalBatch batch = ctx.ds.minibatch(ToySrDataset::Part::train, cfg.batch_size, rng);
                    Graph g;
                    const MlpNodes nodes = mlp_apply(g, cfg.toy.gen_spec, gen, g.input(batch.inputs));
                    const NodeId f1 = g.apply(Op::mean_abs_error, {nodes.output, g.input(batch.targets)});
                    if (!std::isfinite(g.value(f1).data[0]))
                        throw std::runtime_error("non-finite pretraining loss");
                    adam_step(gen.data, gather_param_grad(g.backward(f1), nodes.params, gen.layout), state);
                }
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("pretrain: epoch " + std::to_string(epoch) + ": " + e.what());
            }
        }
    }
    return gen;
}

struct InitResult {
    std::vector<Individual> population;
    NeighborhoodMap nbh;
    IdealPoint z;
};

// N clones of theta0 on the uniform lambda grid; the lambda = 1 individual
// is frozen for the whole run. Discriminators are seeded for every
// individual, but the frozen one's is never updated.
inline InitResult init_population(const FlatParams& theta0, const TrainContext& ctx) {
    const TrainConfig& cfg = ctx.cfg;
    const WeightGrid grid = WeightGrid::uniform(cfg.population);
    InitResult out;
    out.nbh = build_neighborhood(grid, cfg.evo.n_nbr);
    out.population.resize(cfg.population);
    for (std::size_t k = 0; k < cfg.population; ++k) {
        Individual& ind = out.population[k];
        ind.gen = theta0;
        ind.lambda = grid.lambdas[k];
        ind.frozen = (k == 0);
        ind.gen_adam = AdamState::fresh(ind.gen.data.size(), cfg.adam);
        if (!cfg.analytic) {
            ind.disc = init_mlp(cfg.toy.disc_spec,
                                stream_seed(cfg.master_seed, streams::disc_init, k));
            ind.disc_adam = AdamState::fresh(ind.disc->data.size(), cfg.adam);
        }
        ind.last_values = eval_individual(ctx, ind);
    }
    return out;
}

// One Adam epoch for one individual: steps_per_epoch minibatch iterations,
// gradnorm-combined lambda-weighted generator update, then the discriminator.
inline void adam_epoch_individual(const TrainContext& ctx, Individual& ind, std::size_t k,
                                  std::size_t epoch, std::uint64_t phase_tag) {
    const TrainConfig& cfg = ctx.cfg;
    Rng rng(stream_seed(cfg.master_seed, phase_tag, epoch, k));
    for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step) {
        try {
            if (cfg.analytic) {
                const AnalyticEval ev = analytic_eval(cfg.analytic_problem, ind.gen.data);
                adam_step(ind.gen.data, gradnorm_combine(ev.grad_f1, ev.grad_f2, ind.lambda),
                          ind.gen_adam);
            } else {
                const EvalBatch batch = ctx.ds.minibatch(ToySrDataset::Part::train, cfg.batch_size, rng);
                const GenGrads gg = generator_grads(ctx, ind.gen, *ind.disc, batch);
                adam_step(ind.gen.data, gradnorm_combine(gg.g1, gg.g2, ind.lambda), ind.gen_adam);
                adam_step(ind.disc->data, discriminator_grad(ctx, ind.gen, *ind.disc, batch),
                          *ind.disc_adam);
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("adam phase: individual " + std::to_string(k + 1) +
                                     ", epoch " + std::to_string(epoch) + ", iteration " +
                                     std::to_string(step + 1) + ": " + e.what());
        }
    }
}

// One EA epoch: sequentially for k = 2..N, select parents, crossover with a
// fresh beta, mutate, evaluate the offspring on the fixed eval batch, update
// the ideal point with both candidates and replace on a strict Tchebycheff
// improvement. Replacements are visible to later k in the same pass.
inline void ea_epoch(const TrainContext& ctx, std::vector<Individual>& pop,
                     const NeighborhoodMap& nbh, IdealPoint& z, std::size_t epoch) {
    const TrainConfig& cfg = ctx.cfg;
    for (const Individual& ind : pop) update_ideal(z, ind.last_values);
    for (std::size_t k = 1; k < pop.size(); ++k) {
        Rng rng(stream_seed(cfg.master_seed, streams::ea_phase, epoch, k));
        const ParentPick pick = select_parents(k, pop.size(), nbh, cfg.evo.delta, rng);
        const double beta = sample_beta(rng.uniform(), cfg.evo.eta);
        FlatParams offspring =
            mutate(sbx_crossover(pop[pick.first].gen, pop[pick.second].gen, beta), cfg.evo.sigma2, rng);
        const ObjectiveValues off_vals =
            eval_generator(ctx, offspring, pop[k].disc ? &*pop[k].disc : nullptr, ctx.eval_batch);
        update_ideal(z, pop[k].last_values);
        update_ideal(z, off_vals);
        if (ea_replace(pop[k].last_values, off_vals, pop[k].lambda, z)) {
            pop[k].gen = std::move(offspring);
            pop[k].last_values = off_vals;
        }
    }
}

// Number of Adam epochs the cycle schedule places in 1..T. The loop runs
// T_adam Adam epochs then T_ea EA epochs per cycle, truncating the final
// cycle at epoch T.
inline std::size_t adam_epoch_count(const TrainConfig& cfg) {
    const std::size_t cycle = cfg.adam_epochs + cfg.ea_epochs;
    std::size_t n = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
        if ((epoch - 1) % cycle < cfg.adam_epochs) ++n;
    return n;
}

// The full loop: pretrain (unless theta0 is supplied), initialize the
// population, then alternate Adam and EA phases, logging every individual on
// the fixed eval batch after every epoch.
inline RunResult run(const TrainConfig& cfg, const FlatParams* theta0_in = nullptr,
                     const RunObserver& observer = {}) {
    const TrainContext ctx = build_context(cfg);
    RunResult res;
    res.theta0 = theta0_in ? *theta0_in : pretrain(ctx);
    InitResult init = init_population(res.theta0, ctx);
    res.population = std::move(init.population);
    res.nbh = std::move(init.nbh);
    res.z = init.z;
    const std::size_t cycle = cfg.adam_epochs + cfg.ea_epochs;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::size_t pos = (epoch - 1) % cycle;
        const bool is_adam = pos < cfg.adam_epochs;
        bool ea_phase_end = false;
        if (is_adam) {
            for (std::size_t k = 1; k < res.population.size(); ++k)
                adam_epoch_individual(ctx, res.population[k], k, epoch, streams::adam_phase);
        } else {
            ea_epoch(ctx, res.population, res.nbh, res.z, epoch);
            if (pos + 1 == cycle) {
                // Re-initialization: re-define the Adam optimizer for each model.
                for (Individual& ind : res.population) {
                    reset_state(ind.gen_adam);
                    if (ind.disc_adam) reset_state(*ind.disc_adam);
                }
                ea_phase_end = true;
            }
        }
        const std::string phase = is_adam ? "adam" : "ea";
        for (Individual& ind : res.population) {
            ind.last_values = eval_individual(ctx, ind);
            update_ideal(res.z, ind.last_values);
        }
        for (std::size_t k = 0; k < res.population.size(); ++k) {
            const Individual& ind = res.population[k];
            res.log.push_back({epoch, phase, k + 1, ind.lambda, ind.last_values.f1,
                               ind.last_values.f2,
                               tchebycheff_value(ind.last_values, ind.lambda, res.z), res.z.z1,
                               res.z.z2});
        }
        if (observer) observer(PhaseInfo{epoch, phase, ea_phase_end}, res.population, res.z);
    }
    return res;
}

// Fixed, seeded, never-trained discriminator used for held-out measurements,
// so that every model's f2 is scored by the same functional.
inline FlatParams fixed_eval_disc(const TrainContext& ctx) {
    return init_mlp(ctx.cfg.toy.disc_spec, stream_seed(ctx.cfg.eval_batch_seed, streams::eval_disc));
}

inline ObjectiveValues eval_on_split(const TrainContext& ctx, const FlatParams& gen,
                                     ToySrDataset::Part part) {
    if (ctx.cfg.analytic) return analytic_eval(ctx.cfg.analytic_problem, gen.data).values;
    const FlatParams disc = fixed_eval_disc(ctx);
    return eval_generator(ctx, gen, &disc, ctx.ds.part_batch(part));
}

struct BaselineResult {
    FlatParams theta0;
    std::vector<Individual> models;
    IdealPoint z;
    RunLog log;
};

// Independent Adam-only runs, one per fixed weight, matched to the EA-Adam
// generator gradient-step budget (adam_epoch_count(cfg) epochs of
// steps_per_epoch steps each).
inline BaselineResult run_adam_baseline(const TrainConfig& cfg, const std::vector<double>& weights,
                                        const FlatParams* theta0_in = nullptr) {
    if (weights.empty()) throw std::invalid_argument("run_adam_baseline: empty weight list");
    for (double w : weights)
        if (!(w >= 0.0 && w <= 1.0))
            throw std::invalid_argument("run_adam_baseline: weights must lie in [0,1]");
    const TrainContext ctx = build_context(cfg);
    BaselineResult res;
    res.theta0 = theta0_in ? *theta0_in : pretrain(ctx);
    res.models.resize(weights.size());
    for (std::size_t w = 0; w < weights.size(); ++w) {
        Individual& ind = res.models[w];
        ind.gen = res.theta0;
        ind.lambda = weights[w];
        ind.gen_adam = AdamState::fresh(ind.gen.data.size(), cfg.adam);
        if (!cfg.analytic) {
            ind.disc = init_mlp(cfg.toy.disc_spec,
                                stream_seed(cfg.master_seed, streams::baseline_disc, w));
            ind.disc_adam = AdamState::fresh(ind.disc->data.size(), cfg.adam);
        }
        ind.last_values = eval_individual(ctx, ind);
    }
    const std::size_t total_epochs = adam_epoch_count(cfg);
    for (std::size_t epoch = 1; epoch <= total_epochs; ++epoch) {
        for (std::size_t w = 0; w < res.models.size(); ++w)
            adam_epoch_individual(ctx, res.models[w], w, epoch, streams::baseline);
        for (Individual& ind : res.models) {
            ind.last_values = eval_individual(ctx, ind);
            update_ideal(res.z, ind.last_values);
        }
        for (std::size_t w = 0; w < res.models.size(); ++w) {
            const Individual& ind = res.models[w];
            res.log.push_back({epoch, "adam", w + 1, ind.lambda, ind.last_values.f1,
                               ind.last_values.f2,
                               tchebycheff_value(ind.last_values, ind.lambda, res.z), res.z.z1,
                               res.z.z2});
        }
    }
    return res;
}

}  // namespace evoadam
