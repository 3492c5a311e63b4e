#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoadam/driver.hpp"
#include "evoadam/fusion.hpp"

namespace evoadam {

// Raw problem parameters as written in the config file; the derived
// AnalyticProblem (anchors, start point) is rebuilt from these on load so
// that parse -> serialize -> parse is idempotent.
struct ProblemSpecConfig {
    std::string kind = "toy-sr";  // toy-sr | quadratic-pair | concave-front
    std::size_t dimension = 16;
    std::uint64_t seed = 5;
    double separation = 0.4;  // quadratic-pair: |b - a|
    double u1_init = 0.45;    // concave-front: starting f1
    double rest_init = -6.0;  // concave-front: starting x2..xn
};

struct FullConfig {
    TrainConfig train;
    ProblemSpecConfig problem;
    FusionConfig fusion;
};

namespace cfgdetail {

class Reader {
public:
    Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw std::runtime_error("config: '" + (path_.empty() ? std::string("<root>") : path_) +
                                     "' must be a JSON object");
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const std::exception&) {
            throw std::runtime_error("config: bad type for key '" + full(key) + "'");
        }
    }

    bool has_object(const std::string& key) const { return j_.contains(key); }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(j_.at(key), full(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw std::runtime_error("config: unknown key '" + full(it.key()) + "'");
    }

    std::string full(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw std::runtime_error("config: " + message);
}

inline MlpSpec widths_spec(const std::vector<std::size_t>& widths, Activation hidden,
                           Activation output) {
    MlpSpec s;
    s.widths = widths;
    s.hidden = hidden;
    s.output = output;
    return s;
}

}  // namespace cfgdetail

// Parse a config document. Every unspecified field takes its default; unknown
// keys, type errors and range violations fail naming the key path. An empty
// document is a valid all-defaults config.
inline FullConfig parse_config(const std::string& text) {
    std::string trimmed;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) trimmed.push_back(c);
    nlohmann::json j = trimmed.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);

    FullConfig cfg;
    cfgdetail::Reader root(j, "");
    if (root.has_object("train")) {
        auto r = root.child("train");
        r.get("population", cfg.train.population);
        r.get("epochs", cfg.train.epochs);
        r.get("adam_epochs", cfg.train.adam_epochs);
        r.get("ea_epochs", cfg.train.ea_epochs);
        r.get("steps_per_epoch", cfg.train.steps_per_epoch);
        r.get("batch_size", cfg.train.batch_size);
        r.get("pretrain_epochs", cfg.train.pretrain_epochs);
        r.get("master_seed", cfg.train.master_seed);
        r.get("eval_batch_seed", cfg.train.eval_batch_seed);
        if (r.has_object("adam")) {
            auto a = r.child("adam");
            a.get("lr", cfg.train.adam.lr);
            a.get("beta1", cfg.train.adam.beta1);
            a.get("beta2", cfg.train.adam.beta2);
            a.get("eps", cfg.train.adam.eps);
            a.finish();
            cfgdetail::require(cfg.train.adam.lr > 0.0, "key 'train.adam.lr' must be positive");
            cfgdetail::require(cfg.train.adam.beta1 >= 0.0 && cfg.train.adam.beta1 < 1.0,
                               "key 'train.adam.beta1' must lie in [0,1)");
            cfgdetail::require(cfg.train.adam.beta2 >= 0.0 && cfg.train.adam.beta2 < 1.0,
                               "key 'train.adam.beta2' must lie in [0,1)");
            cfgdetail::require(cfg.train.adam.eps >= 1e-12, "key 'train.adam.eps' must be >= 1e-12");
        }
        r.finish();
        cfgdetail::require(cfg.train.population >= 2, "key 'train.population' must be >= 2");
        cfgdetail::require(cfg.train.epochs >= 1, "key 'train.epochs' must be >= 1");
        cfgdetail::require(cfg.train.adam_epochs >= 1, "key 'train.adam_epochs' must be >= 1");
        cfgdetail::require(cfg.train.ea_epochs >= 1, "key 'train.ea_epochs' must be >= 1");
    }
    if (root.has_object("evo")) {
        auto r = root.child("evo");
        r.get("eta", cfg.train.evo.eta);
        r.get("sigma2", cfg.train.evo.sigma2);
        r.get("delta", cfg.train.evo.delta);
        r.get("n_nbr", cfg.train.evo.n_nbr);
        r.finish();
        cfgdetail::require(cfg.train.evo.eta > 0.0, "key 'evo.eta' must be positive");
        cfgdetail::require(cfg.train.evo.sigma2 >= 0.0, "key 'evo.sigma2' must be >= 0");
        cfgdetail::require(cfg.train.evo.delta >= 0.0 && cfg.train.evo.delta <= 1.0,
                           "key 'evo.delta' must lie in [0,1]");
        cfgdetail::require(cfg.train.evo.n_nbr >= 2 && cfg.train.evo.n_nbr <= cfg.train.population,
                           "key 'evo.n_nbr' must lie in [2, population]");
    }
    if (root.has_object("objective")) {
        auto r = root.child("objective");
        std::vector<std::size_t> widths = cfg.train.objective.feature_spec.widths;
        r.get("alpha", cfg.train.objective.alpha);
        r.get("feature_seed", cfg.train.objective.feature_seed);
        r.get("feature_widths", widths);
        r.finish();
        cfgdetail::require(cfg.train.objective.alpha >= 0.0, "key 'objective.alpha' must be >= 0");
        cfgdetail::require(widths.size() >= 2, "key 'objective.feature_widths' needs >= 2 entries");
        cfg.train.objective.feature_spec.widths = widths;
    }
    if (root.has_object("problem")) {
        auto r = root.child("problem");
        r.get("kind", cfg.problem.kind);
        cfgdetail::require(cfg.problem.kind == "toy-sr" || cfg.problem.kind == "quadratic-pair" ||
                               cfg.problem.kind == "concave-front",
                           "key 'problem.kind' must be toy-sr, quadratic-pair or concave-front");
        if (cfg.problem.kind == "toy-sr") {
            std::vector<std::size_t> gen_widths = cfg.train.toy.gen_spec.widths;
            std::vector<std::size_t> disc_widths = cfg.train.toy.disc_spec.widths;
            r.get("dataset_seed", cfg.train.toy.dataset_seed);
            r.get("sample_count", cfg.train.toy.sample_count);
            r.get("d_hr", cfg.train.toy.d_hr);
            r.get("factor", cfg.train.toy.factor);
            r.get("gen_widths", gen_widths);
            r.get("disc_widths", disc_widths);
            cfg.train.toy.gen_spec.widths = gen_widths;
            cfg.train.toy.disc_spec.widths = disc_widths;
        } else {
            r.get("dimension", cfg.problem.dimension);
            r.get("seed", cfg.problem.seed);
            if (cfg.problem.kind == "quadratic-pair") {
                r.get("separation", cfg.problem.separation);
                cfgdetail::require(cfg.problem.separation > 0.0,
                                   "key 'problem.separation' must be positive");
            } else {
                r.get("u1_init", cfg.problem.u1_init);
                r.get("rest_init", cfg.problem.rest_init);
                cfgdetail::require(cfg.problem.u1_init > 0.0 && cfg.problem.u1_init < 1.0,
                                   "key 'problem.u1_init' must lie in (0,1)");
            }
        }
        r.finish();
    }
    if (root.has_object("fusion")) {
        auto r = root.child("fusion");
        std::vector<std::size_t> fw = cfg.fusion.reg.feature_widths;
        r.get("m", cfg.fusion.m);
        r.get("epochs", cfg.fusion.epochs);
        r.get("steps_per_epoch", cfg.fusion.steps_per_epoch);
        r.get("batch_size", cfg.fusion.batch_size);
        r.get("lr", cfg.fusion.lr);
        r.get("alpha1", cfg.fusion.alpha1);
        r.get("alpha2", cfg.fusion.alpha2);
        r.get("alpha3", cfg.fusion.alpha3);
        r.get("seed", cfg.fusion.seed);
        r.get("feature_widths", fw);
        r.get("mapping_hidden", cfg.fusion.reg.mapping_hidden);
        r.finish();
        cfgdetail::require(cfg.fusion.m >= 1, "key 'fusion.m' must be >= 1");
        cfgdetail::require(cfg.fusion.lr > 0.0, "key 'fusion.lr' must be positive");
        cfgdetail::require(cfg.fusion.alpha1 >= 0.0 && cfg.fusion.alpha2 >= 0.0 &&
                               cfg.fusion.alpha3 >= 0.0,
                           "key 'fusion.alpha*' must be nonnegative");
        cfgdetail::require(fw.size() == 4, "key 'fusion.feature_widths' must have 4 entries");
        cfg.fusion.reg.feature_widths = fw;
    }
    root.finish();

    // Build the derived problem.
    if (cfg.problem.kind == "quadratic-pair") {
        cfg.train.analytic = true;
        cfg.train.analytic_problem =
            make_quadratic_pair(cfg.problem.dimension, cfg.problem.seed, cfg.problem.separation);
    } else if (cfg.problem.kind == "concave-front") {
        cfg.train.analytic = true;
        cfg.train.analytic_problem = make_concave_front(cfg.problem.dimension, cfg.problem.seed,
                                                        cfg.problem.u1_init, cfg.problem.rest_init);
    }
    cfg.train.validate();
    cfg.fusion.validate();
    return cfg;
}

inline FullConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config: " + path + ": " + e.what());
    }
}

// Serialize with every field explicit, so re-parsing reproduces the config.
inline nlohmann::json config_to_json(const FullConfig& cfg) {
    nlohmann::json j;
    j["train"] = {{"population", cfg.train.population},
                  {"epochs", cfg.train.epochs},
                  {"adam_epochs", cfg.train.adam_epochs},
                  {"ea_epochs", cfg.train.ea_epochs},
                  {"steps_per_epoch", cfg.train.steps_per_epoch},
                  {"batch_size", cfg.train.batch_size},
                  {"pretrain_epochs", cfg.train.pretrain_epochs},
                  {"master_seed", cfg.train.master_seed},
                  {"eval_batch_seed", cfg.train.eval_batch_seed},
                  {"adam",
                   {{"lr", cfg.train.adam.lr},
                    {"beta1", cfg.train.adam.beta1},
                    {"beta2", cfg.train.adam.beta2},
                    {"eps", cfg.train.adam.eps}}}};
    j["evo"] = {{"eta", cfg.train.evo.eta},
                {"sigma2", cfg.train.evo.sigma2},
                {"delta", cfg.train.evo.delta},
                {"n_nbr", cfg.train.evo.n_nbr}};
    j["objective"] = {{"alpha", cfg.train.objective.alpha},
                      {"feature_seed", cfg.train.objective.feature_seed},
                      {"feature_widths", cfg.train.objective.feature_spec.widths}};
    if (cfg.problem.kind == "toy-sr") {
        j["problem"] = {{"kind", "toy-sr"},
                        {"dataset_seed", cfg.train.toy.dataset_seed},
                        {"sample_count", cfg.train.toy.sample_count},
                        {"d_hr", cfg.train.toy.d_hr},
                        {"factor", cfg.train.toy.factor},
                        {"gen_widths", cfg.train.toy.gen_spec.widths},
                        {"disc_widths", cfg.train.toy.disc_spec.widths}};
    } else if (cfg.problem.kind == "quadratic-pair") {
        j["problem"] = {{"kind", "quadratic-pair"},
                        {"dimension", cfg.problem.dimension},
                        {"seed", cfg.problem.seed},
                        {"separation", cfg.problem.separation}};
    } else {
        j["problem"] = {{"kind", "concave-front"},
                        {"dimension", cfg.problem.dimension},
                        {"seed", cfg.problem.seed},
                        {"u1_init", cfg.problem.u1_init},
                        {"rest_init", cfg.problem.rest_init}};
    }
    j["fusion"] = {{"m", cfg.fusion.m},
                   {"epochs", cfg.fusion.epochs},
                   {"steps_per_epoch", cfg.fusion.steps_per_epoch},
                   {"batch_size", cfg.fusion.batch_size},
                   {"lr", cfg.fusion.lr},
                   {"alpha1", cfg.fusion.alpha1},
                   {"alpha2", cfg.fusion.alpha2},
                   {"alpha3", cfg.fusion.alpha3},
                   {"seed", cfg.fusion.seed},
                   {"feature_widths", cfg.fusion.reg.feature_widths},
                   {"mapping_hidden", cfg.fusion.reg.mapping_hidden}};
    return j;
}

inline std::string config_hash(const FullConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace evoadam
