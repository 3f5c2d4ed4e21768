#include "doctest.h"

#include "kvpilot/error.hpp"
#include "kvpilot/workload.hpp"

using namespace kvpilot;

namespace {

MixEntry entry(const std::string& w, double weight) {
    MixEntry e;
    e.workload = w;
    e.weight = weight;
    e.volume_min = 1e6;
    e.volume_max = 2e6;
    e.t_prefill = 0.1;
    e.t_decode = 0.2;
    return e;
}

}  // namespace

TEST_CASE("same seed, same stream") {
    MixSpec m;
    m.entries = {entry("a", 1.0), entry("b", 2.0)};
    m.count = 500;
    CHECK(generate_requests(m, 3) == generate_requests(m, 3));
    CHECK(generate_requests(m, 3) != generate_requests(m, 4));
}

TEST_CASE("single workload labels and ranges") {
    MixSpec m;
    m.entries = {entry("chat", 1.0)};
    m.count = 1000;
    m.arrival_rate = 20.0;
    const auto rs = generate_requests(m, 1);
    REQUIRE(rs.size() == 1000);
    CHECK(rs.front().arrival == 0.0);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(rs[i].workload == "chat");
        CHECK(rs[i].id == i);
        CHECK(rs[i].volume >= 1e6);
        CHECK(rs[i].volume <= 2e6);
        CHECK(rs[i].t_model() == doctest::Approx(0.3));
        if (i) CHECK(rs[i].arrival >= rs[i - 1].arrival);
    }
    // mean inter-arrival ~ 1/rate
    CHECK(rs.back().arrival / 999.0 == doctest::Approx(0.05).epsilon(0.1));
}

TEST_CASE("70/30 mix proportions") {
    MixSpec m;
    m.entries = {entry("a", 0.7), entry("b", 0.3)};
    m.count = 10000;
    std::size_t a = 0;
    for (const auto& r : generate_requests(m, 11)) a += r.workload == "a";
    CHECK(std::abs(a / 10000.0 - 0.7) <= 0.02);
}

TEST_CASE("zero rate puts every arrival at zero") {
    MixSpec m;
    m.entries = {entry("a", 1.0)};
    m.count = 10;
    m.arrival_rate = 0.0;
    for (const auto& r : generate_requests(m, 0)) CHECK(r.arrival == 0.0);
}

TEST_CASE("invalid mixes") {
    MixSpec m;
    m.count = 1;
    CHECK_THROWS_AS(generate_requests(m, 0), ConfigError);
    m.entries = {entry("a", 0.0)};
    CHECK_THROWS_WITH_AS(generate_requests(m, 0), doctest::Contains("weight"), ConfigError);
    m.entries = {entry("a", 1.0)};
    m.entries[0].volume_max = 0.5e6;
    CHECK_THROWS_WITH_AS(generate_requests(m, 0), doctest::Contains("volume_max"), ConfigError);
    m.entries = {entry("a", 1.0)};
    m.arrival_rate = -1.0;
    CHECK_THROWS_WITH_AS(generate_requests(m, 0), doctest::Contains("arrival_rate"), ConfigError);
}
