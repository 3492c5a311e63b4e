#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "evoadam/checkpoint.hpp"
#include "evoadam/cli.hpp"
#include "evoadam/config.hpp"
#include "evoadam/runio.hpp"

using namespace evoadam;

namespace {
std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("empty config document yields all defaults") {
    const FullConfig cfg = parse_config("");
    CHECK(cfg.train.population == 5);
    CHECK(cfg.train.epochs == 100);
    CHECK(cfg.train.adam_epochs == 10);
    CHECK(cfg.train.ea_epochs == 1);
    CHECK(cfg.train.evo.delta == 0.7);
    CHECK(cfg.train.evo.eta == 20.0);
    CHECK(cfg.train.evo.sigma2 == 0.01);
    CHECK(cfg.train.objective.alpha == 0.005);
    CHECK(cfg.fusion.alpha1 == 0.01);
    CHECK(cfg.fusion.alpha2 == 1.0);
    CHECK(cfg.fusion.alpha3 == 0.005);
    CHECK(parse_config("{}").train.population == 5);
    CHECK(parse_config("  \n ").train.population == 5);
}

TEST_CASE("unknown keys are rejected with their path") {
    CHECK_THROWS_WITH(parse_config(R"({"train": {"adamm": {"lr": 1.0}}})"),
                      Catch::Matchers::ContainsSubstring("train.adamm"));
    CHECK_THROWS_WITH(parse_config(R"({"nonsense": 1})"),
                      Catch::Matchers::ContainsSubstring("nonsense"));
    CHECK_THROWS_WITH(parse_config(R"({"train": {"adam": {"lrr": 1.0}}})"),
                      Catch::Matchers::ContainsSubstring("train.adam.lrr"));
}

TEST_CASE("type and range violations name the key") {
    CHECK_THROWS_WITH(parse_config(R"({"evo": {"delta": 1.5}})"),
                      Catch::Matchers::ContainsSubstring("evo.delta"));
    CHECK_THROWS_WITH(parse_config(R"({"evo": {"delta": "high"}})"),
                      Catch::Matchers::ContainsSubstring("evo.delta"));
    CHECK_THROWS_WITH(parse_config(R"({"train": {"population": 1}})"),
                      Catch::Matchers::ContainsSubstring("train.population"));
}

TEST_CASE("config serialization is idempotent") {
    const std::string text =
        R"({"train": {"epochs": 12, "master_seed": 9}, "evo": {"sigma2": 0.001},
            "problem": {"kind": "quadratic-pair", "dimension": 6, "seed": 3, "separation": 0.5}})";
    const FullConfig a = parse_config(text);
    const std::string dump1 = config_to_json(a).dump(2);
    const FullConfig b = parse_config(dump1);
    const std::string dump2 = config_to_json(b).dump(2);
    CHECK(dump1 == dump2);
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("problem kinds build the right training config") {
    const FullConfig q = parse_config(R"({"problem": {"kind": "quadratic-pair", "dimension": 4}})");
    CHECK(q.train.analytic);
    CHECK(q.train.analytic_problem.dimension == 4);
    const FullConfig c = parse_config(R"({"problem": {"kind": "concave-front", "dimension": 8}})");
    CHECK(c.train.analytic_problem.kind == AnalyticProblem::Kind::concave_front);
    const FullConfig t = parse_config(R"({"problem": {"kind": "toy-sr"}})");
    CHECK_FALSE(t.train.analytic);
}

TEST_CASE("checkpoint payload encoding") {
    CHECK(encode_payload({1.0}) == "3ff0000000000000");
    CHECK(decode_payload("3ff0000000000000") == std::vector<double>{1.0});
    SECTION("roundtrip is bit-exact") {
        Rng rng(12);
        std::vector<double> values;
        for (int i = 0; i < 64; ++i) values.push_back(rng.normal() * std::pow(10.0, i % 20 - 10));
        values.push_back(0.0);
        values.push_back(-0.0);
        const std::vector<double> back = decode_payload(encode_payload(values));
        REQUIRE(back.size() == values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            CHECK(std::bit_cast<std::uint64_t>(back[i]) == std::bit_cast<std::uint64_t>(values[i]));
    }
    SECTION("malformed hex rejected") {
        CHECK_THROWS(decode_payload("3ff000000000000g"));
        CHECK_THROWS(decode_payload("3ff0"));
    }
}

TEST_CASE("checkpoint save/load roundtrip") {
    const MlpSpec spec{{4, 6, 8}, Activation::leaky_relu, Activation::identity};
    Checkpoint cp;
    cp.role = "generator";
    cp.spec = spec;
    cp.params = init_mlp(spec, 31);
    cp.lambda = 0.75;
    cp.config_hash = "deadbeefdeadbeef";
    cp.epoch = 42;
    const std::string path = tmp_path("evoadam_cp_test.json");
    save_checkpoint(cp, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.role == cp.role);
    CHECK(back.spec.widths == spec.widths);
    CHECK(back.params.data == cp.params.data);
    CHECK(back.params.layout.size() == cp.params.layout.size());
    CHECK(back.lambda == 0.75);
    CHECK(back.config_hash == cp.config_hash);
    CHECK(back.epoch == 42);
    SECTION("truncated payload fails with a length mismatch") {
        nlohmann::json j;
        {
            std::ifstream in(path);
            in >> j;
        }
        const std::string payload = j["payload"].get<std::string>();
        j["payload"] = payload.substr(0, payload.size() - 16);
        const std::string bad = tmp_path("evoadam_cp_bad.json");
        std::ofstream out(bad);
        out << j.dump();
        out.close();
        CHECK_THROWS(load_checkpoint(bad));
        std::filesystem::remove(bad);
    }
    SECTION("version mismatch fails") {
        nlohmann::json j;
        {
            std::ifstream in(path);
            in >> j;
        }
        j["format_version"] = 99;
        const std::string bad = tmp_path("evoadam_cp_v99.json");
        std::ofstream out(bad);
        out << j.dump();
        out.close();
        CHECK_THROWS_WITH(load_checkpoint(bad), Catch::Matchers::ContainsSubstring("version"));
        std::filesystem::remove(bad);
    }
    std::filesystem::remove(path);
}

TEST_CASE("log csv roundtrip") {
    RunLog log;
    log.push_back({1, "adam", 1, 1.0, 0.25, 0.333333333333333315, 0.1, 0.0, 0.1});
    log.push_back({1, "adam", 2, 0.5, 1e-17, 2e17, 0.2, 0.0, 0.1});
    const std::string path = tmp_path("evoadam_log_test.csv");
    write_log_csv(log, path);
    const RunLog back = read_log_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].phase == "adam");
    CHECK(back[0].f2 == log[0].f2);
    CHECK(back[1].f1 == log[1].f1);
    CHECK(back[1].f2 == log[1].f2);
    const FrontSet front = log_front(back);
    REQUIRE(front.size() == 2);
    CHECK(front[0].tag == "ind1");
    std::filesystem::remove(path);
}

TEST_CASE("cli end-to-end on a small analytic run") {
    const std::string dir = tmp_path("evoadam_cli_run");
    std::filesystem::remove_all(dir);
    const std::string cfg_path = tmp_path("evoadam_cli_cfg.json");
    write_text(R"({"train": {"epochs": 8, "adam_epochs": 3, "ea_epochs": 1,
                             "steps_per_epoch": 4, "pretrain_epochs": 20,
                             "adam": {"lr": 0.01}},
                   "evo": {"sigma2": 0.0001},
                   "problem": {"kind": "quadratic-pair", "dimension": 4, "seed": 2,
                                "separation": 0.5}})",
               cfg_path);
    REQUIRE(run_command({"train", "--config", cfg_path, "--out", dir}) == 0);
    CHECK(std::filesystem::exists(dir + "/config.json"));
    CHECK(std::filesystem::exists(dir + "/log.csv"));
    CHECK(std::filesystem::exists(dir + "/front.csv"));
    CHECK(std::filesystem::exists(dir + "/checkpoints/ind_5.json"));
    CHECK(std::filesystem::exists(dir + "/report.txt"));

    SECTION("train twice gives byte-identical logs and checkpoints") {
        const std::string dir2 = tmp_path("evoadam_cli_run2");
        std::filesystem::remove_all(dir2);
        REQUIRE(run_command({"train", "--config", cfg_path, "--out", dir2}) == 0);
        CHECK(read_text(dir + "/log.csv") == read_text(dir2 + "/log.csv"));
        for (int k = 1; k <= 5; ++k) {
            const std::string name = "/checkpoints/ind_" + std::to_string(k) + ".json";
            CHECK(read_text(dir + name) == read_text(dir2 + name));
        }
        std::filesystem::remove_all(dir2);
    }

    SECTION("front export matches the log tail") {
        const std::string fpath = tmp_path("evoadam_cli_front.csv");
        REQUIRE(run_command({"front", "--log", dir + "/log.csv", "--out", fpath}) == 0);
        CHECK(read_text(fpath) == read_text(dir + "/front.csv"));
        std::filesystem::remove(fpath);
    }

    SECTION("compare a run against itself") {
        REQUIRE(run_command({"compare", "--run-a", dir, "--run-b", dir, "--out",
                             tmp_path("evoadam_cmp.txt")}) == 0);
        const std::string report = read_text(tmp_path("evoadam_cmp.txt"));
        CHECK(report.find("hypervolume ratio (a/b): 1\n") != std::string::npos);
        CHECK(report.find("igd difference (a-b): 0\n") != std::string::npos);
    }

    SECTION("eval prints objective values for a checkpoint") {
        REQUIRE(run_command({"eval", "--config", cfg_path, "--checkpoint",
                             dir + "/checkpoints/ind_1.json"}) == 0);
    }

    SECTION("unknown subcommand fails") {
        CHECK(run_command({"explode"}) != 0);
    }
    std::filesystem::remove_all(dir);
    std::filesystem::remove(cfg_path);
}
