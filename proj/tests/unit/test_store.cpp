#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <random>
#include <thread>

#include "../support/tmpdir.hpp"
#include "kvpilot/pipeline.hpp"
#include "kvpilot/space.hpp"
#include "kvpilot/store.hpp"

using namespace kvpilot;
using fixtures::TempDir;

namespace {

ProfileStore random_store(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto space = enumerate_space(SpaceDef{});
    ProfileStore s;
    s.config_digest = "0123456789abcdef";
    s.seed = rng();
    s.trace_digest = "fedcba9876543210";
    std::vector<std::size_t> idx(space.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
        Profile p;
        p.strategy = space[idx[i % idx.size()]].id();
        p.id = p.strategy + (i >= idx.size() ? "#" + std::to_string(i) : "");
        p.workload = i % 3 ? "chat" : "code";
        p.cr = 1.0 + 15.0 * u(rng);
        p.s_enc = std::ldexp(u(rng) + 0.5, 30 + static_cast<int>(rng() % 5));
        p.s_dec = std::ldexp(u(rng) + 0.5, 30 + static_cast<int>(rng() % 5));
        p.s = harmonic_throughput(p.s_enc, p.s_dec);
        p.q = u(rng);
        s.profiles.push_back(p);
    }
    return s;
}

}  // namespace

TEST_CASE("save then load is the identity") {
    TempDir d("store");
    const auto s = random_store(200, 1);
    store_profiles(d / "s.json", s);
    const auto back = load_profiles(d / "s.json");
    REQUIRE(back.profiles.size() == 200);
    CHECK(back == s);
    for (std::size_t i = 0; i < s.profiles.size(); ++i) {
        CHECK(std::memcmp(&back.profiles[i].cr, &s.profiles[i].cr, sizeof(double)) == 0);
        CHECK(std::memcmp(&back.profiles[i].s, &s.profiles[i].s, sizeof(double)) == 0);
    }
    CHECK(std::filesystem::exists(d / "s.json.lock"));
    CHECK_FALSE(std::filesystem::exists(d / "s.json.tmp"));
    CHECK(serialize_store(back) == serialize_store(s));
}

TEST_CASE("empty store") {
    TempDir d("store_empty");
    ProfileStore s;
    store_profiles(d / "e.json", s);
    const auto back = load_profiles(d / "e.json");
    CHECK(back.profiles.empty());
    CHECK(back == s);
}

TEST_CASE("version mismatch") {
    auto text = serialize_store(random_store(2, 2));
    const auto at = text.find("\"version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, 12, "\"version\": 9");
    CHECK_THROWS_AS(parse_store(text), VersionError);
}

TEST_CASE("corrupt files carry a byte offset") {
    const auto text = serialize_store(random_store(3, 3));
    const auto cut = text.substr(0, text.size() / 2);
    try {
        parse_store(cut);
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.offset() <= cut.size());
        CHECK(e.offset() > cut.size() - 10);
    }
    try {
        parse_store("{\"format\": \"kvpilot-profile-store\", x}");
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 36);
    }
}

TEST_CASE("schema violations") {
    auto s = random_store(2, 4);
    s.profiles[1].id = s.profiles[0].id;
    CHECK_THROWS_AS(serialize_store(s), ConfigError);
    s = random_store(2, 4);
    auto text = serialize_store(s);
    const auto at = text.find("\"q\":");
    text.insert(at, "\"extra\": 1, ");
    CHECK_THROWS_AS(parse_store(text), ConfigError);
    CHECK_THROWS_AS(parse_store("{\"format\": \"other\", \"version\": 1}"), ConfigError);
}

TEST_CASE("concurrent writers leave a complete store") {
    TempDir d("store_race");
    std::vector<std::thread> th;
    for (int w = 0; w < 4; ++w) {
        th.emplace_back([&, w] {
            for (int i = 0; i < 10; ++i) store_profiles(d / "r.json", random_store(20, static_cast<std::uint64_t>(w)));
        });
    }
    for (auto& t : th) t.join();
    const auto back = load_profiles(d / "r.json");
    bool any = false;
    for (int w = 0; w < 4; ++w) any |= back == random_store(20, static_cast<std::uint64_t>(w));
    CHECK(any);
}

TEST_CASE("profiles from a search result") {
    SearchResult r;
    EvalResult e{0.95, 4.0, 0.5, 2e9, 3e9};
    r.feasible.push_back({0, "t=identity;q=uniform,b=4,g=32;c=none", e});
    const auto ps = profiles_from_search(r, "chat");
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].q == 0.95);
    CHECK(ps[0].s == doctest::Approx(1.2e9));
    CHECK(ps[0].workload == "chat");
    CHECK_NOTHROW(ps[0].validate());
}
