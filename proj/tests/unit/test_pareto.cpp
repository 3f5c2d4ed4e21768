#include "doctest.h"

#include <algorithm>
#include <random>

#include "../support/oracles.hpp"
#include "kvpilot/pareto.hpp"

using namespace kvpilot;
using fixtures::random_points;

TEST_CASE("dominated point removed") {
    const auto f = pareto_frontier({{"a", 0.9, 5, 1}, {"b", 0.8, 4, 2}});
    REQUIRE(f.size() == 1);
    CHECK(f[0].id == "a");
}

TEST_CASE("trade-off points are both kept") {
    const auto f = pareto_frontier({{"a", 0.9, 3, 1}, {"b", 0.8, 5, 1}});
    CHECK(f.size() == 2);
}

TEST_CASE("duplicates keep the smallest id") {
    const auto f = pareto_frontier({{"z", 0.9, 5, 1}, {"m", 0.9, 5, 1}, {"q", 0.9, 5, 1}});
    REQUIRE(f.size() == 1);
    CHECK(f[0].id == "m");
}

TEST_CASE("matches the pairwise oracle, is order independent and idempotent") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        auto pts = random_points(rng, 200);
        const auto want = fixtures::pareto_oracle(pts);
        const auto got = pareto_frontier(pts);
        CHECK(got == want);
        std::shuffle(pts.begin(), pts.end(), rng);
        CHECK(pareto_frontier(pts) == got);
        CHECK(pareto_frontier(got) == got);
    }
}

TEST_CASE("empty input") { CHECK(pareto_frontier({}).empty()); }
