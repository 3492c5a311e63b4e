#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "evoadam/metrics.hpp"
#include "evoadam/rng.hpp"

using namespace evoadam;

TEST_CASE("dominance") {
    CHECK(dominates({1, 1, ""}, {2, 2, ""}));
    CHECK_FALSE(dominates({1, 2, ""}, {2, 1, ""}));
    CHECK_FALSE(dominates({2, 1, ""}, {1, 2, ""}));
    CHECK_FALSE(dominates({1, 1, ""}, {1, 1, ""}));
    CHECK(dominates({1, 1, ""}, {1, 2, ""}));
}

TEST_CASE("pareto filter") {
    const FrontSet in{{1, 2, "a"}, {2, 1, "b"}, {2, 2, "c"}};
    const FrontSet out = pareto_filter(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0].tag == "a");
    CHECK(out[1].tag == "b");
    SECTION("singleton is itself") {
        const FrontSet one{{5, 5, "x"}};
        CHECK(pareto_filter(one).size() == 1);
    }
    SECTION("idempotence") {
        const FrontSet once = pareto_filter(in);
        const FrontSet twice = pareto_filter(once);
        REQUIRE(once.size() == twice.size());
        for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].tag == twice[i].tag);
    }
    SECTION("exact duplicates collapse to one") {
        const FrontSet dup{{1, 2, "a"}, {1, 2, "b"}, {2, 1, "c"}};
        CHECK(pareto_filter(dup).size() == 2);
    }
}

TEST_CASE("hypervolume examples") {
    CHECK(hypervolume_2d({{0, 0, ""}}, {1, 1, "ref"}) == 1.0);
    CHECK(hypervolume_2d({{1, 2, ""}, {2, 1, ""}}, {3, 3, "ref"}) == 3.0);
    SECTION("filtered front equals unfiltered set") {
        const FrontSet raw{{1, 2, ""}, {2, 1, ""}, {2.5, 2.5, ""}, {1, 2, ""}};
        CHECK(hypervolume_2d(raw, {3, 3, ""}) == hypervolume_2d(pareto_filter(raw), {3, 3, ""}));
    }
    SECTION("monotone under adding a nondominated point") {
        FrontSet f{{1, 2, ""}, {2, 1, ""}};
        const double before = hypervolume_2d(f, {3, 3, ""});
        f.push_back({1.4, 1.4, ""});
        CHECK(hypervolume_2d(f, {3, 3, ""}) >= before);
    }
    SECTION("points beyond the reference are clipped") {
        CHECK(hypervolume_2d({{0, 0, ""}, {5, 5, ""}}, {1, 1, ""}) == 1.0);
    }
}

TEST_CASE("hypervolume agrees with a Monte-Carlo oracle") {
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 6.0);
        FrontSet front;
        for (std::size_t i = 0; i < n; ++i)
            front.push_back({rng.uniform(), rng.uniform(), "p" + std::to_string(i)});
        const FrontPoint ref{1.2, 1.2, "ref"};
        const double hv = hypervolume_2d(front, ref);
        std::size_t inside = 0;
        const std::size_t samples = 1000000;
        for (std::size_t s = 0; s < samples; ++s) {
            const double x = ref.f1 * rng.uniform();
            const double y = ref.f2 * rng.uniform();
            for (const FrontPoint& p : front)
                if (p.f1 <= x && p.f2 <= y) {
                    ++inside;
                    break;
                }
        }
        const double mc = ref.f1 * ref.f2 * static_cast<double>(inside) / static_cast<double>(samples);
        INFO("trial " << trial << " hv=" << hv << " mc=" << mc);
        CHECK(std::fabs(hv - mc) <= 0.01 * std::max(hv, 1e-12));
    }
}

TEST_CASE("igd") {
    const FrontSet reference{{0, 1, ""}, {1, 0, ""}};
    CHECK(igd(reference, reference) == 0.0);
    CHECK(igd({{0, 1, ""}}, reference) == Catch::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
    SECTION("adding points never increases igd") {
        FrontSet f{{0, 1, ""}};
        const double before = igd(f, reference);
        f.push_back({0.9, 0.1, ""});
        CHECK(igd(f, reference) <= before);
    }
    SECTION("zero iff every reference point appears") {
        const FrontSet f{{0, 1, ""}, {1, 0, ""}, {0.5, 0.5, ""}};
        CHECK(igd(f, reference) == 0.0);
        const FrontSet g{{0, 1, ""}, {0.5, 0.5, ""}};
        CHECK(igd(g, reference) > 1e-12);
    }
    SECTION("empty inputs error") {
        CHECK_THROWS(igd({}, reference));
        CHECK_THROWS(igd(reference, {}));
    }
}

TEST_CASE("front export and import") {
    const std::string path = (std::filesystem::temp_directory_path() / "evoadam_front_test.csv").string();
    SECTION("empty set gives a header-only file") {
        export_front({}, path);
        CHECK(import_front(path).empty());
    }
    SECTION("roundtrip reproduces values exactly") {
        Rng rng(404);
        FrontSet front;
        for (int i = 0; i < 10; ++i)
            front.push_back({rng.normal() * 1e-7, rng.normal() * 1e7, "t" + std::to_string(i)});
        export_front(front, path);
        const FrontSet back = import_front(path);
        REQUIRE(back.size() == front.size());
        for (std::size_t i = 0; i < front.size(); ++i) {
            CHECK(back[i].tag == front[i].tag);
            CHECK(back[i].f1 == front[i].f1);
            CHECK(back[i].f2 == front[i].f2);
        }
    }
    SECTION("byte output is deterministic") {
        const FrontSet front{{0.1, 0.2, "a"}, {1.0 / 3.0, 2.0 / 3.0, "b"}};
        export_front(front, path);
        std::ifstream in1(path, std::ios::binary);
        std::stringstream s1;
        s1 << in1.rdbuf();
        export_front(front, path);
        std::ifstream in2(path, std::ios::binary);
        std::stringstream s2;
        s2 << in2.rdbuf();
        CHECK(s1.str() == s2.str());
    }
    std::remove(path.c_str());
}

TEST_CASE("reference point is the componentwise max scaled by 1.1") {
    const FrontSet a{{1, 5, ""}};
    const FrontSet b{{3, 2, ""}};
    const FrontPoint ref = reference_point({&a, &b});
    CHECK(ref.f1 == Catch::Approx(3.3));
    CHECK(ref.f2 == Catch::Approx(5.5));
}
