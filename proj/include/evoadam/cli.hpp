#pragma once

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evoadam/checkpoint.hpp"
#include "evoadam/config.hpp"
#include "evoadam/driver.hpp"
#include "evoadam/fusion.hpp"
#include "evoadam/metrics.hpp"
#include "evoadam/runio.hpp"

namespace evoadam {

namespace clidetail {

inline MlpSpec checkpoint_spec(const TrainConfig& cfg, const std::string& role) {
    if (cfg.analytic) {
        MlpSpec s;
        s.widths = {cfg.analytic_problem.dimension, cfg.analytic_problem.dimension};
        return s;
    }
    return role == "discriminator" ? cfg.toy.disc_spec : cfg.toy.gen_spec;
}

inline Checkpoint make_checkpoint(const FullConfig& cfg, const FlatParams& params,
                                  const std::string& role, double lambda, std::size_t epoch) {
    Checkpoint cp;
    cp.role = cfg.train.analytic ? (role == "generator" ? "decision-vector" : role) : role;
    cp.spec = checkpoint_spec(cfg.train, role);
    cp.params = params;
    cp.lambda = lambda;
    cp.config_hash = config_hash(cfg);
    cp.epoch = epoch;
    return cp;
}

inline void save_config_snapshot(const FullConfig& cfg, const std::string& dir) {
    write_text(config_to_json(cfg).dump(2) + "\n", dir + "/config.json");
}

inline std::string front_report(const FrontSet& front, const FullConfig& cfg) {
    std::ostringstream out;
    const FrontSet nd = pareto_filter(front);
    const FrontPoint ref = reference_point({&front});
    out << "points: " << front.size() << "\n";
    out << "nondominated: " << nd.size() << "\n";
    out << "reference (componentwise max x 1.1): " << format_real(ref.f1) << " "
        << format_real(ref.f2) << "\n";
    out << "hypervolume: " << format_real(hypervolume_2d(front, ref)) << "\n";
    if (cfg.train.analytic) {
        FrontSet reference;
        for (int i = 0; i <= 100; ++i)
            reference.push_back({analytic_pf(cfg.train.analytic_problem, 0.01 * i).f1,
                                 analytic_pf(cfg.train.analytic_problem, 0.01 * i).f2, "pf"});
        out << "igd vs analytic front (101 samples): " << format_real(igd(front, reference)) << "\n";
    }
    for (const FrontPoint& p : nd)
        out << "  " << p.tag << ": f1=" << format_real(p.f1) << " f2=" << format_real(p.f2) << "\n";
    return out.str();
}

inline std::vector<double> parse_weights(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
    return out;
}

inline ToySrDataset::Part parse_split(const std::string& name) {
    if (name == "train") return ToySrDataset::Part::train;
    if (name == "validation") return ToySrDataset::Part::validation;
    if (name == "eval") return ToySrDataset::Part::eval;
    throw std::runtime_error("unknown split '" + name + "' (train|validation|eval)");
}

inline int cmd_pretrain(const std::string& config_path, const std::string& out_dir) {
    const FullConfig cfg = load_config(config_path);
    ensure_dir(out_dir);
    const TrainContext ctx = build_context(cfg.train);
    const FlatParams theta0 = pretrain(ctx);
    save_config_snapshot(cfg, out_dir);
    save_checkpoint(make_checkpoint(cfg, theta0, "generator", 1.0, cfg.train.pretrain_epochs),
                    out_dir + "/theta_g0.json");
    const ObjectiveValues v = eval_generator(ctx, theta0, nullptr, ctx.eval_batch);
    std::ostringstream report;
    report << "pretrained generator\n";
    report << "f1 on validation batch: " << format_real(v.f1) << "\n";
    write_text(report.str(), out_dir + "/report.txt");
    std::cout << "pretrain: wrote " << out_dir << "/theta_g0.json\n";
    return 0;
}

inline int cmd_train(const std::string& config_path, const std::string& out_dir,
                     const std::string& theta0_path) {
    const FullConfig cfg = load_config(config_path);
    ensure_dir(out_dir);
    ensure_dir(out_dir + "/checkpoints");
    FlatParams theta0;
    const FlatParams* theta0_ptr = nullptr;
    if (!theta0_path.empty()) {
        theta0 = load_checkpoint(theta0_path).params;
        theta0_ptr = &theta0;
    }
    const RunResult res = run(cfg.train, theta0_ptr);
    save_config_snapshot(cfg, out_dir);
    write_log_csv(res.log, out_dir + "/log.csv");
    const FrontSet front = log_front(res.log);
    export_front(front, out_dir + "/front.csv");
    save_checkpoint(make_checkpoint(cfg, res.theta0, "generator", 1.0, 0),
                    out_dir + "/checkpoints/theta_g0.json");
    for (std::size_t k = 0; k < res.population.size(); ++k)
        save_checkpoint(make_checkpoint(cfg, res.population[k].gen, "generator",
                                        res.population[k].lambda, cfg.train.epochs),
                        out_dir + "/checkpoints/ind_" + std::to_string(k + 1) + ".json");
    write_text(front_report(front, cfg), out_dir + "/report.txt");
    std::cout << "train: " << res.population.size() << " individuals, " << cfg.train.epochs
              << " epochs -> " << out_dir << "\n";
    return 0;
}

inline int cmd_baseline(const std::string& config_path, const std::string& out_dir,
                        const std::string& weights_text) {
    const FullConfig cfg = load_config(config_path);
    ensure_dir(out_dir);
    ensure_dir(out_dir + "/checkpoints");
    std::vector<double> weights;
    if (weights_text.empty())
        weights = WeightGrid::uniform(cfg.train.population).lambdas;
    else
        weights = parse_weights(weights_text);
    const BaselineResult res = run_adam_baseline(cfg.train, weights);
    save_config_snapshot(cfg, out_dir);
    write_log_csv(res.log, out_dir + "/log.csv");
    const FrontSet front = log_front(res.log);
    export_front(front, out_dir + "/front.csv");
    for (std::size_t w = 0; w < res.models.size(); ++w)
        save_checkpoint(make_checkpoint(cfg, res.models[w].gen, "generator", res.models[w].lambda,
                                        adam_epoch_count(cfg.train)),
                        out_dir + "/checkpoints/model_" + std::to_string(w + 1) + ".json");
    write_text(front_report(front, cfg), out_dir + "/report.txt");
    std::cout << "baseline: " << weights.size() << " weights -> " << out_dir << "\n";
    return 0;
}

inline int cmd_fuse(const std::string& config_path, const std::string& experts_dir,
                    const std::string& out_dir) {
    const FullConfig cfg = load_config(config_path);
    if (cfg.train.analytic) throw std::runtime_error("fuse: requires a toy-sr config");
    ensure_dir(out_dir);
    ensure_dir(out_dir + "/checkpoints");
    const TrainContext ctx = build_context(cfg.train);
    std::vector<FlatParams> experts;
    std::vector<double> lambdas;
    for (std::size_t k = 1; k <= cfg.train.population; ++k) {
        const std::string src = experts_dir + "/checkpoints/ind_" + std::to_string(k) + ".json";
        const Checkpoint cp = load_checkpoint(src);
        experts.push_back(cp.params);
        lambdas.push_back(cp.lambda);
        // experts are emitted untouched
        write_text(read_text(src), out_dir + "/checkpoints/ind_" + std::to_string(k) + ".json");
    }
    FusionConfig fc = cfg.fusion;
    const FlatParams reg = train_regressor(ctx, experts, fc);
    fc.reg.experts = experts.size();
    fc.reg.layers = experts[0].layout.size();
    fc.reg.feature_widths[0] = ctx.ds.d_lr();
    const FusionOutcome full = universal_fuse(ctx, reg, fc.reg, experts, fc.m);
    const FusionOutcome uniform = fuse_baselines(ctx, experts, FusionBaseline::uniform_average);
    const FusionOutcome learnable =
        fuse_baselines(ctx, experts, FusionBaseline::learnable_weight, &cfg.fusion);
    const FusionOutcome broadcast =
        fuse_baselines(ctx, experts, FusionBaseline::single_layer_broadcast, &cfg.fusion);

    save_config_snapshot(cfg, out_dir);
    save_checkpoint(make_checkpoint(cfg, full.fused, "fused", 0.0, cfg.fusion.epochs),
                    out_dir + "/checkpoints/fused.json");
    Checkpoint reg_cp = make_checkpoint(cfg, reg, "regressor", 0.0, cfg.fusion.epochs);
    reg_cp.spec = fc.reg.feature_spec();
    save_checkpoint(reg_cp, out_dir + "/checkpoints/regressor.json");
    save_checkpoint(make_checkpoint(cfg, uniform.fused, "fused", 0.0, 0),
                    out_dir + "/checkpoints/fused_uniform.json");
    save_checkpoint(make_checkpoint(cfg, learnable.fused, "fused", 0.0, cfg.fusion.epochs),
                    out_dir + "/checkpoints/fused_learnable.json");
    save_checkpoint(make_checkpoint(cfg, broadcast.fused, "fused", 0.0, cfg.fusion.epochs),
                    out_dir + "/checkpoints/fused_broadcast.json");

    std::ostringstream wcsv;
    wcsv << "layer,name";
    for (std::size_t k = 0; k < experts.size(); ++k) wcsv << ",w" << (k + 1);
    wcsv << "\n";
    for (std::size_t l = 0; l < full.weights.layers; ++l) {
        wcsv << l + 1 << "," << experts[0].layout[l].name;
        for (std::size_t k = 0; k < full.weights.experts; ++k)
            wcsv << "," << format_real(full.weights.at(l, k));
        wcsv << "\n";
    }
    write_text(wcsv.str(), out_dir + "/universal_weights.csv");

    std::ostringstream report;
    report << "eval-split objective values (fixed seeded eval discriminator)\n";
    auto line = [&](const std::string& name, const FlatParams& gen) {
        const ObjectiveValues v = eval_on_split(ctx, gen, ToySrDataset::Part::eval);
        report << "  " << name << ": f1=" << format_real(v.f1) << " f2=" << format_real(v.f2) << "\n";
    };
    for (std::size_t k = 0; k < experts.size(); ++k)
        line("expert lambda=" + format_real(lambdas[k]), experts[k]);
    line("fused (weight regression + universal average)", full.fused);
    line("fused (uniform average)", uniform.fused);
    line("fused (learnable weight)", learnable.fused);
    line("fused (single-layer broadcast)", broadcast.fused);
    write_text(report.str(), out_dir + "/report.txt");
    std::cout << "fuse: " << experts.size() << " experts -> " << out_dir << "\n";
    return 0;
}

inline int cmd_eval(const std::string& config_path, const std::string& checkpoint_path,
                    const std::string& split) {
    const FullConfig cfg = load_config(config_path);
    const TrainContext ctx = build_context(cfg.train);
    const Checkpoint cp = load_checkpoint(checkpoint_path);
    const ObjectiveValues v = eval_on_split(ctx, cp.params, parse_split(split));
    std::cout << "role=" << cp.role << " split=" << split << " f1=" << format_real(v.f1)
              << " f2=" << format_real(v.f2) << "\n";
    return 0;
}

inline int cmd_front(const std::string& log_path, const std::string& out_path, std::size_t epoch) {
    const RunLog log = read_log_csv(log_path);
    export_front(log_front(log, epoch), out_path);
    std::cout << "front: wrote " << out_path << "\n";
    return 0;
}

inline int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                       const std::string& out_path) {
    const FrontSet front_a = import_front(dir_a + "/front.csv");
    const FrontSet front_b = import_front(dir_b + "/front.csv");
    const FullConfig cfg_a = load_config(dir_a + "/config.json");
    const FullConfig cfg_b = load_config(dir_b + "/config.json");
    const FrontPoint ref = reference_point({&front_a, &front_b});
    const double hv_a = hypervolume_2d(front_a, ref);
    const double hv_b = hypervolume_2d(front_b, ref);
    FrontSet reference;
    std::string ref_kind;
    if (cfg_a.train.analytic && config_to_json(cfg_a)["problem"] == config_to_json(cfg_b)["problem"]) {
        for (int i = 0; i <= 100; ++i) {
            const ObjectiveValues v = analytic_pf(cfg_a.train.analytic_problem, 0.01 * i);
            reference.push_back({v.f1, v.f2, "pf"});
        }
        ref_kind = "analytic front (101 samples)";
    } else {
        FrontSet both = front_a;
        both.insert(both.end(), front_b.begin(), front_b.end());
        reference = pareto_filter(both);
        ref_kind = "combined nondominated front";
    }
    const double igd_a = igd(front_a, reference);
    const double igd_b = igd(front_b, reference);
    std::ostringstream report;
    report << "shared reference point: " << format_real(ref.f1) << " " << format_real(ref.f2) << "\n";
    report << "hypervolume a: " << format_real(hv_a) << "\n";
    report << "hypervolume b: " << format_real(hv_b) << "\n";
    report << "hypervolume ratio (a/b): " << format_real(hv_b == 0.0 ? 1.0 : hv_a / hv_b) << "\n";
    report << "igd reference: " << ref_kind << "\n";
    report << "igd a: " << format_real(igd_a) << "\n";
    report << "igd b: " << format_real(igd_b) << "\n";
    report << "igd difference (a-b): " << format_real(igd_a - igd_b) << "\n";
    std::cout << report.str();
    if (!out_path.empty()) write_text(report.str(), out_path);
    return 0;
}

}  // namespace clidetail

// Entry point shared by the binary and the tests. `args` excludes the program
// name. Returns the process exit status.
inline int run_command(const std::vector<std::string>& args) {
    CLI::App app{"hybrid evolutionary/Adam multi-objective trainer"};
    app.require_subcommand(1);

    std::string config_path, out_dir, theta0_path, weights_text, experts_dir, checkpoint_path;
    std::string split = "eval";
    std::string log_path, out_path, dir_a, dir_b;
    std::size_t epoch = 0;

    CLI::App* pretrain = app.add_subcommand("pretrain", "train the fidelity-only seed model");
    pretrain->add_option("--config", config_path, "config file")->required();
    pretrain->add_option("--out", out_dir, "output run directory")->required();

    CLI::App* train = app.add_subcommand("train", "run the hybrid EA-Adam optimizer");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--out", out_dir, "output run directory")->required();
    train->add_option("--theta0", theta0_path, "pretrained generator checkpoint (skips pretraining)");

    CLI::App* baseline = app.add_subcommand("baseline", "Adam-only runs over a weight grid");
    baseline->add_option("--config", config_path, "config file")->required();
    baseline->add_option("--out", out_dir, "output run directory")->required();
    baseline->add_option("--weights", weights_text, "comma-separated lambda list (default: grid of N)");

    CLI::App* fuse = app.add_subcommand("fuse", "train the weight regressor and fuse the experts");
    fuse->add_option("--config", config_path, "config file")->required();
    fuse->add_option("--experts", experts_dir, "run directory holding expert checkpoints")->required();
    fuse->add_option("--out", out_dir, "output run directory")->required();

    CLI::App* eval = app.add_subcommand("eval", "objective values of a checkpoint on a data split");
    eval->add_option("--config", config_path, "config file")->required();
    eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval->add_option("--split", split, "train|validation|eval (default eval)");

    CLI::App* front = app.add_subcommand("front", "export a front CSV from a run log");
    front->add_option("--log", log_path, "log.csv path")->required();
    front->add_option("--out", out_path, "front.csv output path")->required();
    front->add_option("--epoch", epoch, "epoch to export (default: last)");

    CLI::App* compare = app.add_subcommand("compare", "hypervolume/IGD report of two runs");
    compare->add_option("--run-a", dir_a, "first run directory")->required();
    compare->add_option("--run-b", dir_b, "second run directory")->required();
    compare->add_option("--out", out_path, "report output path");

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    std::string prog = "evoadam";
    argv.push_back(prog.data());
    for (std::string& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (pretrain->parsed()) return clidetail::cmd_pretrain(config_path, out_dir);
        if (train->parsed()) return clidetail::cmd_train(config_path, out_dir, theta0_path);
        if (baseline->parsed()) return clidetail::cmd_baseline(config_path, out_dir, weights_text);
        if (fuse->parsed()) return clidetail::cmd_fuse(config_path, experts_dir, out_dir);
        if (eval->parsed()) return clidetail::cmd_eval(config_path, checkpoint_path, split);
        if (front->parsed()) return clidetail::cmd_front(log_path, out_path, epoch);
        if (compare->parsed()) return clidetail::cmd_compare(dir_a, dir_b, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}

}  // namespace evoadam
