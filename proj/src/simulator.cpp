// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "kvpilot/error.hpp"
#include "kvpilot/rng.hpp"

namespace kvpilot {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::prefill: return "prefill";
        case Stage::compress: return "compress";
        case Stage::communicate: return "communicate";
        case Stage::decompress: return "decompress";
        case Stage::decode: return "decode";
    }
    return "?";
}

double StageTimes::total() const {
    double s = 0.0;
    for (double v : t) s += v;
    return s;
}

std::array<double, kStageCount> StageTimes::shares() const {
    std::array<double, kStageCount> out{};
    const double tot = total();
    if (tot > 0.0) {
        for (std::size_t i = 0; i < kStageCount; ++i) out[i] = t[i] / tot;
    }
    return out;
}

StageTimes simulate_request(const Request& r, const Profile& p, const BandwidthTrace& trace, const DriftModel& drift) {
    StageTimes st;
    st[Stage::prefill] = r.t_prefill;
    const double f = drift.factor(p.id, r.arrival);
    if (!p.is_uncompressed()) {
        st[Stage::compress] = std::isinf(p.s_enc) ? 0.0 : r.volume / (p.s_enc * f);
        st[Stage::decompress] = std::isinf(p.s_dec) ? 0.0 : r.volume / (p.s_dec * f);
    }
    const double start = r.arrival + st[Stage::prefill] + st[Stage::compress];
    st[Stage::communicate] = trace.transfer_time(start, r.volume / p.cr) + drift.overhead;
    st[Stage::decode] = r.t_decode;
    return st;
}

const char* to_string(ScenarioKind k) {
    return k == ScenarioKind::pd_separation ? "pd_separation" : "prefix_caching";
}

const char* to_string(ControllerMode m) {
    switch (m) {
        case ControllerMode::full: return "full";
        case ControllerMode::without_bandit: return "without_bandit";
        case ControllerMode::without_controller: return "without_controller";
        case ControllerMode::fixed_profile: return "fixed_profile";
        case ControllerMode::no_compression: return "no_compression";
    }
    return "?";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
    if (s == "pd_separation") return ScenarioKind::pd_separation;
    if (s == "prefix_caching") return ScenarioKind::prefix_caching;
    throw ConfigError("unknown scenario kind '" + s + "'", "kind");
}

ControllerMode parse_controller_mode(const std::string& s) {
    if (s == "full") return ControllerMode::full;
    if (s == "without_bandit" || s == "w/o_bandit") return ControllerMode::without_bandit;
    if (s == "without_controller" || s == "w/o_controller") return ControllerMode::without_controller;
    if (s == "fixed_profile") return ControllerMode::fixed_profile;
    if (s == "no_compression") return ControllerMode::no_compression;
    throw ConfigError("unknown controller mode '" + s + "'", "mode");
}

void Scenario::validate(const PolicyTable& table) const {
    trace.validate();
    drift.validate();
    bandit.validate();
    if (mode == ControllerMode::fixed_profile) {
        if (fixed_profile.empty()) throw ConfigError("fixed_profile mode needs a profile id", "fixed_profile");
        (void)table.index_of(fixed_profile);
    } else if (!fixed_profile.empty()) {
        throw ConfigError("only valid with mode fixed_profile", "fixed_profile");
    }
    if (kind == ScenarioKind::pd_separation && recompute_fallback) {
        throw ConfigError("recompute fallback applies to prefix_caching only", "recompute_fallback");
    }
    if (!(recompute_time >= 0.0) || !std::isfinite(recompute_time)) {
        throw ConfigError("must be finite and >= 0", "recompute_time");
    }
    if (recompute_fallback && recompute_time <= 0.0) {
        throw ConfigError("recompute fallback needs recompute_time > 0", "recompute_time");
    }
    for (const auto& r : requests) {
        if (!(r.volume >= 0.0) || !(r.arrival >= 0.0) || !(r.t_prefill >= 0.0) || !(r.t_decode >= 0.0)) {
            throw ConfigError("request " + std::to_string(r.id) + " has negative fields", "requests");
        }
        if (r.arrival < trace.times.front()) {
            throw ConfigError("request " + std::to_string(r.id) + " arrives before the trace", "requests");
        }
    }
}

namespace {

ServiceContext context_for(const Request& r, double bandwidth) {
    ServiceContext c;
    c.workload = r.workload;
    c.bandwidth = bandwidth;
    c.t_slo = r.t_slo;
    c.q_min = r.q_min;
    c.volume = r.volume;
    c.t_model = r.t_model();
    return c;
}

std::size_t static_choice(const PolicyTable& table, const ServiceContext& c) {
    try {
        return lookup(table, c).candidates.front();
    } catch (const InfeasibleQualityError&) {
        return table.uncompressed_index();
    }
}

bool controller_mode(ControllerMode m) {
    return m == ControllerMode::full || m == ControllerMode::without_bandit;
}

}  // namespace

SimMetrics run_scenario(const Scenario& s, const PolicyTable& table, std::uint64_t seed) {
    s.validate(table);
    BanditParams bp = s.bandit;
    if (s.mode == ControllerMode::without_bandit) bp.epsilon = 0.0;
    BanditState bandit(bp);
    std::mt19937_64 rng(derive_seed(seed, 1));
    const std::size_t fixed = s.mode == ControllerMode::fixed_profile ? table.index_of(s.fixed_profile) : 0;
    const double b0 = s.trace.bandwidth.front();

    SimMetrics m;
    m.records.reserve(s.requests.size());
    for (std::size_t n = 0; n < s.requests.size(); ++n) {
        const Request& r = s.requests[n];
        const ServiceContext c = context_for(r, s.trace.bandwidth_at(r.arrival));
        SimRecord out;
        out.arrival = r.arrival;
        out.bandwidth = c.bandwidth;
        DecisionRecord& d = out.decision;
        if (controller_mode(s.mode)) {
            d = select_profile(c, table, bandit, rng, r.id, n);
        } else {
            std::size_t idx = table.uncompressed_index();
            if (s.mode == ControllerMode::fixed_profile) idx = fixed;
            if (s.mode == ControllerMode::without_controller) idx = static_choice(table, context_for(r, b0));
            d.request_id = r.id;
            d.now = n;
            d.workload = r.workload;
            d.profile = idx;
            d.profile_id = table.profile(idx).id;
            d.t_slo = r.t_slo;
            d.predicted = predict_latency(table.profile(idx), c);
            d.corrected = d.predicted;
        }

        out.stages = simulate_request(r, table.profile(d.profile), s.trace, s.drift);
        if (s.kind == ScenarioKind::prefix_caching && s.recompute_fallback) {
            const double fetch = out.stages.total() - out.stages[Stage::decode];
            const bool allowed = !controller_mode(s.mode) || d.fallback;
            if (allowed && s.recompute_time < fetch) {
                const double decode = out.stages[Stage::decode];
                out.stages = StageTimes{};
                out.stages[Stage::prefill] = s.recompute_time;
                out.stages[Stage::decode] = decode;
                out.recomputed = true;
            }
        }
        out.jct = out.stages.total();
        out.ttft = out.jct - out.stages[Stage::decode];

        if (s.mode == ControllerMode::full && !out.recomputed) {
            observe_outcome(d, out.jct, bandit);
        } else {
            d.observed = out.jct;
            d.residual = d.observed - d.predicted;
            d.slo_violated = d.observed > d.t_slo;
        }
        m.records.push_back(std::move(out));
    }
    m.summary = summarize(m.records);
    return m;
}

SimSummary summarize(const std::vector<SimRecord>& records) {
    SimSummary s;
    s.count = records.size();
    if (records.empty()) return s;
    std::vector<double> jct;
    jct.reserve(records.size());
    StageTimes tot;
    double sum = 0.0, ttft = 0.0;
    std::size_t viol = 0, rec = 0, expl = 0, fb = 0;
    for (const auto& r : records) {
        jct.push_back(r.jct);
        sum += r.jct;
        ttft += r.ttft;
        viol += r.decision.slo_violated;
        rec += r.recomputed;
        expl += r.decision.explored;
        fb += r.decision.fallback;
        for (std::size_t i = 0; i < kStageCount; ++i) tot.t[i] += r.stages.t[i];
    }
    const double n = static_cast<double>(records.size());
    std::sort(jct.begin(), jct.end());
    auto rank = [&](double p) {
        const auto k = static_cast<std::size_t>(std::ceil(p * n));
        return jct[std::min(jct.size() - 1, k == 0 ? 0 : k - 1)];
    };
    s.mean_jct = sum / n;
    s.p50_jct = rank(0.50);
    s.p99_jct = rank(0.99);
    s.mean_ttft = ttft / n;
    s.slo_violation_rate = viol / n;
    s.recompute_rate = rec / n;
    s.explore_rate = expl / n;
    s.fallback_rate = fb / n;
    s.shares = tot.shares();
    return s;
}

std::vector<BreakdownRow> report_breakdown(const SimMetrics& m) {
    std::map<std::string, std::pair<std::size_t, StageTimes>> by;
    StageTimes all;
    for (const auto& r : m.records) {
        auto& [n, st] = by[r.recomputed ? std::string("recompute") : r.decision.profile_id];
        ++n;
        for (std::size_t i = 0; i < kStageCount; ++i) {
            st.t[i] += r.stages.t[i];
            all.t[i] += r.stages.t[i];
        }
    }
    std::vector<BreakdownRow> rows;
    for (const auto& [id, v] : by) rows.push_back({id, v.first, v.second.shares()});
    rows.push_back({"all", m.records.size(), all.shares()});
    return rows;
}

}  // namespace kvpilot
