#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evoadam/params.hpp"
#include "evoadam/rng.hpp"

using namespace evoadam;

TEST_CASE("init_mlp is deterministic with zero biases and He-scaled weights") {
    const MlpSpec spec{{100, 100, 4}, Activation::leaky_relu, Activation::identity};
    const FlatParams a = init_mlp(spec, 42);
    const FlatParams b = init_mlp(spec, 42);
    CHECK(a.data == b.data);
    CHECK(init_mlp(spec, 43).data != a.data);

    // biases exactly zero
    for (std::size_t l = 0; l < a.layout.size(); ++l) {
        if (a.layout[l].name[0] != 'b') continue;
        for (std::size_t i = 0; i < a.layout[l].length; ++i)
            CHECK(a.data[a.layout[l].offset + i] == 0.0);
    }

    // 10,000-weight layer sample variance within 10% of 2/fan_in
    const LayerLayout& w1 = a.layout[0];
    REQUIRE(w1.length == 10000);
    double mean = 0.0;
    for (std::size_t i = 0; i < w1.length; ++i) mean += a.data[w1.offset + i];
    mean /= static_cast<double>(w1.length);
    double var = 0.0;
    for (std::size_t i = 0; i < w1.length; ++i) {
        const double d = a.data[w1.offset + i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(w1.length - 1);
    const double expect = 2.0 / 100.0;
    CHECK(var > 0.9 * expect);
    CHECK(var < 1.1 * expect);
}

TEST_CASE("mlp_apply matches direct matrix arithmetic") {
    SECTION("identity weight plus bias is a translation") {
        const MlpSpec spec{{3, 3}, Activation::identity, Activation::identity};
        FlatParams p = init_mlp(spec, 1);
        std::fill(p.data.begin(), p.data.end(), 0.0);
        // identity weight
        for (std::size_t i = 0; i < 3; ++i) p.data[i * 3 + i] = 1.0;
        // bias b = (10, 20, 30)
        p.data[9] = 10.0;
        p.data[10] = 20.0;
        p.data[11] = 30.0;
        Graph g;
        const Tensor input({2, 3}, {1, 2, 3, 4, 5, 6});
        const Tensor out = g.value(mlp_apply(g, spec, p, g.input(input)).output);
        CHECK(out.data == std::vector<double>{11, 22, 33, 14, 25, 36});
    }
    SECTION("zero parameters give zero output") {
        const MlpSpec spec{{4, 5, 2}, Activation::leaky_relu, Activation::identity};
        FlatParams p = init_mlp(spec, 7);
        std::fill(p.data.begin(), p.data.end(), 0.0);
        Graph g;
        Tensor input = Tensor::zeros({3, 4});
        input.data[0] = 5.0;
        const Tensor out = g.value(mlp_apply(g, spec, p, g.input(input)).output);
        for (double v : out.data) CHECK(v == 0.0);
    }
    SECTION("batch dimension is preserved") {
        const MlpSpec spec{{4, 6, 2}, Activation::leaky_relu, Activation::sigmoid};
        const FlatParams p = init_mlp(spec, 9);
        Graph g;
        const Tensor out = g.value(mlp_apply(g, spec, p, g.input(Tensor::zeros({7, 4}))).output);
        CHECK(out.shape == std::vector<std::size_t>{7, 2});
    }
    SECTION("width mismatch errors") {
        const MlpSpec spec{{4, 2}, Activation::identity, Activation::identity};
        const FlatParams p = init_mlp(spec, 9);
        Graph g;
        CHECK_THROWS(mlp_apply(g, spec, p, g.input(Tensor::zeros({3, 5}))));
    }
}

TEST_CASE("flatten roundtrip identity") {
    const MlpSpec spec{{5, 8, 3}, Activation::leaky_relu, Activation::identity};
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        FlatParams p = init_mlp(spec, rng.next_u64());
        const FlatParams q = flatten_roundtrip(p);
        CHECK(q.data == p.data);
    }
}

TEST_CASE("layout invariants are enforced") {
    SECTION("overlapping layout rejected") {
        FlatParams p;
        p.data.assign(6, 0.0);
        p.layout = {{"w", 0, 4, {4}}, {"b", 3, 3, {3}}};
        CHECK_THROWS(p.validate());
    }
    SECTION("zero-length layer rejected") {
        FlatParams p;
        p.data.assign(4, 0.0);
        p.layout = {{"w", 0, 4, {4}}, {"b", 4, 0, {}}};
        CHECK_THROWS(p.validate());
    }
    SECTION("total length must match") {
        FlatParams p;
        p.data.assign(5, 0.0);
        p.layout = {{"w", 0, 4, {4}}};
        CHECK_THROWS(p.validate());
    }
}
