#include "doctest.h"

#include <random>

#include "kvpilot/error.hpp"
#include "kvpilot/simulator.hpp"
#include "../support/sim_fixtures.hpp"

using namespace kvpilot;
using namespace fixtures;

TEST_CASE("simulated latency equals the analytic model with no drift") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double se = std::pow(10.0, 8.0 + 3.0 * u(rng));
        const double sd = std::pow(10.0, 8.0 + 3.0 * u(rng));
        Profile p{"p", 1.0 + 15.0 * u(rng), se * sd / (se + sd), 0.95, se, sd, "", ""};
        if (i % 10 == 0) p = Profile::uncompressed();
        const double b = std::pow(10.0, 7.0 + 4.0 * u(rng));
        const auto r = request(10.0 * u(rng), 1e9 * u(rng), u(rng));
        ServiceContext c;
        c.bandwidth = b;
        c.volume = r.volume;
        c.t_model = r.t_model();
        const auto st = simulate_request(r, p, BandwidthTrace::constant(b), DriftModel{});
        CHECK(std::abs(st.total() - predict_latency(p, c)) <= 1e-9);
    }
}

TEST_CASE("transfer that crosses a trace change") {
    Request r;
    r.volume = 10.0;
    const BandwidthTrace t{{0.0, 0.5}, {10.0, 2.0}};
    const auto st = simulate_request(r, Profile::uncompressed(), t, DriftModel{});
    CHECK(st[Stage::communicate] == doctest::Approx(3.0));
    CHECK(st[Stage::compress] == 0.0);
    CHECK(st[Stage::decompress] == 0.0);
}

TEST_CASE("drift factor 0.5 doubles the codec stages") {
    const auto p = Profile::make("p", 4.0, 1e9, 0.95);
    const auto r = request(2.0, 1e9, 0.1);
    const auto t = BandwidthTrace::constant(1e9);
    DriftModel d;
    d.factors["p"] = {{1.0, 0.5}};
    const auto a = simulate_request(r, p, t, DriftModel{});
    const auto b = simulate_request(r, p, t, d);
    CHECK(b[Stage::compress] == 2.0 * a[Stage::compress]);
    CHECK(b[Stage::decompress] == 2.0 * a[Stage::decompress]);
    CHECK(b[Stage::communicate] == a[Stage::communicate]);
    d.overhead = 0.25;
    CHECK(simulate_request(r, p, t, d)[Stage::communicate] == a[Stage::communicate] + 0.25);
}

TEST_CASE("no compression matches the closed form and has no codec share") {
    const auto table = build_policy_table(crossover_profiles(), {0.9}, gbps(1), gbps(1000));
    MixSpec mix;
    MixEntry e;
    e.volume_min = 1e8;
    e.volume_max = 9e8;
    e.t_prefill = 0.02;
    e.t_decode = 0.03;
    mix.entries = {e};
    mix.count = 400;
    Scenario s;
    s.requests = generate_requests(mix, 2);
    s.trace = BandwidthTrace::constant(gbps(25));
    s.mode = ControllerMode::no_compression;
    const auto m = run_scenario(s, table, 0);
    double v = 0.0;
    for (const auto& r : s.requests) v += r.volume;
    v /= static_cast<double>(s.requests.size());
    CHECK(m.summary.mean_jct == doctest::Approx(0.05 + v / gbps(25)).epsilon(1e-12));
    CHECK(m.summary.shares[1] == 0.0);
    CHECK(m.summary.shares[3] == 0.0);
    for (const auto& r : m.records) {
        double sum = 0.0;
        for (double x : r.stages.shares()) sum += x;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        CHECK(r.jct == r.stages.total());
    }
    const auto rows = report_breakdown(m);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == kNoCompressionId);
    CHECK(rows[1].label == "all");
    CHECK(rows[1].shares[1] == 0.0);
}

TEST_CASE("crossover pattern") {
    const auto profiles = crossover_profiles();
    const auto table = build_policy_table(profiles, {0.9}, gbps(1), gbps(1000));
    for (double g : {10.0, 20.0, 30.0, 35.0, 38.0, 45.0, 52.0, 60.0, 80.0, 100.0, 105.0, 120.0, 200.0, 400.0}) {
        Scenario s;
        s.requests = steady_stream(20, 1e9, 0.1);
        s.trace = BandwidthTrace::constant(gbps(g));

        s.mode = ControllerMode::no_compression;
        const double raw = run_scenario(s, table, 0).summary.mean_jct;
        std::string best = kNoCompressionId;
        double best_jct = raw;
        for (const auto& p : profiles) {
            s.mode = ControllerMode::fixed_profile;
            s.fixed_profile = p.id;
            const double jct = run_scenario(s, table, 0).summary.mean_jct;
            if (g > benefit_threshold(p) / kBytesPerGbps) CHECK(jct > raw);
            if (g < benefit_threshold(p) / kBytesPerGbps) CHECK(jct < raw);
            if (jct < best_jct) {
                best_jct = jct;
                best = p.id;
            }
        }
        s.fixed_profile.clear();
        s.mode = ControllerMode::without_bandit;
        const auto m = run_scenario(s, table, 0);
        for (const auto& r : m.records) CHECK(r.decision.profile_id == best);
        const char* expect = g < 32.4 ? "hi" : g < 39.3 ? "mid" : g < 110.0 ? "lo" : kNoCompressionId;
        CHECK(best == expect);
    }
}

TEST_CASE("full controller beats a static choice after a bandwidth drop") {
    const auto table = build_policy_table(crossover_profiles(), {0.9}, gbps(1), gbps(1000));
    Scenario s;
    s.requests = steady_stream(200, 1e9, 0.1);
    s.trace = BandwidthTrace{{0.0, 10.0}, {gbps(100), gbps(10)}};
    s.mode = ControllerMode::full;
    const auto full = run_scenario(s, table, 3);
    s.mode = ControllerMode::without_controller;
    const auto stat = run_scenario(s, table, 3);
    CHECK(mean_jct_from(full, 100) < mean_jct_from(stat, 100));
    for (const auto& r : stat.records) CHECK(r.decision.profile_id == "lo");
}

TEST_CASE("breakdown shift under the controller") {
    const auto table = build_policy_table(Breakdown::profiles(), {0.9}, gbps(1), gbps(1000));
    auto s = Breakdown::scenario(ControllerMode::no_compression);
    const auto raw = run_scenario(s, table, 0);
    CHECK(raw.summary.shares[2] == doctest::Approx(0.85));
    s.mode = ControllerMode::full;
    const auto m = run_scenario(s, table, 0);
    CHECK(m.summary.shares[2] < 0.15);
    CHECK(m.summary.shares[2] == doctest::Approx(Breakdown::predicted_share()).epsilon(0.05));
}

TEST_CASE("the share floor for an 8x profile with free codecs") {
    // with no codec time the compressed share is (0.85/8)/(0.15 + 0.85/8)
    const double floor = (0.85 / 8.0) / (0.15 + 0.85 / 8.0);
    CHECK(floor > 0.41);
    for (double codec : {0.0, 0.1, 0.3}) {
        CHECK((0.85 / 8.0) / (0.15 + codec + 0.85 / 8.0) > 0.15);
    }
}

TEST_CASE("bandit recovers from a codec slowdown") {
    const auto table = build_policy_table(Recovery::profiles(), {0.9}, gbps(1), gbps(1000));
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto full = run_scenario(Recovery::scenario(ControllerMode::full, seed), table, seed);
        const auto wob = run_scenario(Recovery::scenario(ControllerMode::without_bandit, seed), table, seed);
        const auto settle = settle_requests(full, Recovery::drift_at, "N");
        const double gain = 1.0 - mean_jct_from(full, Recovery::drift_at) / mean_jct_from(wob, Recovery::drift_at);
        ok += settle <= 30 && gain >= 0.10;
        for (std::size_t i = Recovery::drift_at; i < wob.records.size(); ++i) {
            CHECK(wob.records[i].decision.profile_id == "A");
        }
    }
    CHECK(ok >= 18);
}

TEST_CASE("determinism") {
    const auto table = build_policy_table(Recovery::profiles(), {0.9}, gbps(1), gbps(1000));
    const auto a = run_scenario(Recovery::scenario(ControllerMode::full, 5), table, 5);
    const auto b = run_scenario(Recovery::scenario(ControllerMode::full, 5), table, 5);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].jct == b.records[i].jct);
        CHECK(a.records[i].decision.profile_id == b.records[i].decision.profile_id);
        CHECK(a.records[i].decision.explored == b.records[i].decision.explored);
    }
}

TEST_CASE("prefix caching recompute fallback") {
    const auto table = build_policy_table(crossover_profiles(), {0.9}, gbps(1), gbps(1000));
    Scenario s;
    s.kind = ScenarioKind::prefix_caching;
    s.requests = steady_stream(20, 1e9, 0.1, 0.5);
    s.trace = BandwidthTrace::constant(gbps(10));  // raw fetch 0.8 s
    s.recompute_fallback = true;
    s.recompute_time = 0.4;

    s.mode = ControllerMode::no_compression;
    auto m = run_scenario(s, table, 0);
    CHECK(m.summary.recompute_rate == 1.0);
    CHECK(m.summary.mean_ttft == doctest::Approx(0.4));
    CHECK(m.summary.mean_jct == doctest::Approx(0.45));

    // the controller finds a feasible fetch path
    s.mode = ControllerMode::full;
    m = run_scenario(s, table, 0);
    CHECK(m.summary.recompute_rate == 0.0);
    CHECK(m.summary.mean_ttft < 0.4);

    // nothing fits the SLO: the controller falls back and recomputes
    for (auto& r : s.requests) r.t_slo = 0.01;
    m = run_scenario(s, table, 0);
    CHECK(m.summary.fallback_rate == 1.0);
    CHECK(m.summary.recompute_rate == 1.0);

    s.recompute_fallback = false;
    m = run_scenario(s, table, 0);
    CHECK(m.summary.recompute_rate == 0.0);
}

TEST_CASE("scenario validation") {
    const auto table = build_policy_table(crossover_profiles(), {0.9}, gbps(1), gbps(1000));
    Scenario s;
    s.requests = steady_stream(2, 1e9, 0.1);
    s.mode = ControllerMode::fixed_profile;
    CHECK_THROWS_AS(run_scenario(s, table, 0), ConfigError);
    s.fixed_profile = "nope";
    CHECK_THROWS_AS(run_scenario(s, table, 0), ConfigError);
    s.fixed_profile = "lo";
    CHECK_NOTHROW(run_scenario(s, table, 0));
    s.mode = ControllerMode::full;
    CHECK_THROWS_AS(run_scenario(s, table, 0), ConfigError);
    s.fixed_profile.clear();
    s.recompute_fallback = true;
    CHECK_THROWS_AS(run_scenario(s, table, 0), ConfigError);
    s.recompute_fallback = false;
    s.trace = BandwidthTrace{{1.0}, {1e9}};
    CHECK_THROWS_AS(run_scenario(s, table, 0), ConfigError);
    CHECK(parse_controller_mode("w/o_bandit") == ControllerMode::without_bandit);
    CHECK_THROWS_AS(parse_controller_mode("bogus"), ConfigError);
}
