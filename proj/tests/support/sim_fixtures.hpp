#pragma once

#include <vector>

#include "kvpilot/simulator.hpp"

namespace fixtures {

using namespace kvpilot;

inline double gbps(double g) { return g * kBytesPerGbps; }

inline Request request(double arrival, double volume, double t_model, double t_slo = 100.0) {
    Request r;
    r.arrival = arrival;
    r.volume = volume;
    r.t_prefill = 0.5 * t_model;
    r.t_decode = 0.5 * t_model;
    r.t_slo = t_slo;
    r.q_min = 0.9;
    return r;
}

inline std::vector<Request> steady_stream(std::size_t n, double volume, double t_model, double t_slo = 100.0,
                                          double gap = 0.1) {
    std::vector<Request> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(request(gap * static_cast<double>(i), volume, t_model, t_slo));
        out.back().id = i;
    }
    return out;
}

/// Crossover set with benefit thresholds of 50, 55 and 110 Gbps. Each owns
/// an envelope segment: hi below ~32 Gbps, mid up to ~39, lo up to 110.
inline std::vector<Profile> crossover_profiles() {
    return {Profile::make("hi", 8.0, gbps(50.0) / (1.0 - 1.0 / 8.0), 0.95),
            Profile::make("mid", 4.0, gbps(55.0) / (1.0 - 1.0 / 4.0), 0.95),
            Profile::make("lo", 1.5, gbps(110.0) / (1.0 - 1.0 / 1.5), 0.95)};
}

/// Bandit recovery setup at V/B = 1.2 s. A (cr 8, 0.4 s codec) is
/// model-optimal at 0.55 s + T_model; its neighbour N (cr 2, 0.05 s codec)
/// costs 0.65 s. Halving A's codec throughput makes A 0.95 s.
struct Recovery {
    static constexpr double volume = 1e9;
    static constexpr double t_model = 0.2;
    static constexpr double t_slo = 2.0;
    static constexpr std::size_t requests = 300;
    static constexpr std::size_t drift_at = 100;
    static constexpr double gap = 0.1;

    static double bandwidth() { return volume / 1.2; }
    static std::vector<Profile> profiles() {
        return {Profile::make("A", 8.0, volume / 0.4, 0.95), Profile::make("N", 2.0, volume / 0.05, 0.95)};
    }
    static Scenario scenario(ControllerMode mode, std::uint64_t seed) {
        Scenario s;
        MixSpec mix;
        MixEntry e;
        e.workload = "";
        e.volume_min = 0.95 * volume;
        e.volume_max = 1.05 * volume;
        e.t_prefill = 0.5 * t_model;
        e.t_decode = 0.5 * t_model;
        e.t_slo = t_slo;
        e.q_min = 0.9;
        mix.entries = {e};
        mix.count = requests;
        mix.arrival_rate = 0.0;
        s.requests = generate_requests(mix, seed);
        for (std::size_t i = 0; i < s.requests.size(); ++i) s.requests[i].arrival = gap * static_cast<double>(i);
        s.trace = BandwidthTrace::constant(bandwidth());
        s.drift.factors["A"] = {{gap * static_cast<double>(drift_at), 0.5}};
        s.mode = mode;
        return s;
    }
};

/// 85% of the uncompressed latency is communication (T_model 0.15 s,
/// V/B 0.85 s). The single 8x profile spends 0.5 s in its codec. The SLO
/// admits only the compressed path.
struct Breakdown {
    static constexpr double volume = 1e9;
    static constexpr double t_model = 0.15;
    static constexpr double comm = 0.85;
    static constexpr double codec = 0.5;
    static constexpr double cr = 8.0;
    static constexpr double t_slo = 0.9;

    static std::vector<Profile> profiles() { return {Profile::make("x8", cr, volume / codec, 0.95)}; }
    static double bandwidth() { return volume / comm; }
    static double predicted_share() { return (comm / cr) / (t_model + codec + comm / cr); }
    static Scenario scenario(ControllerMode mode) {
        Scenario s;
        s.requests = steady_stream(200, volume, t_model, t_slo);
        s.trace = BandwidthTrace::constant(bandwidth());
        s.mode = mode;
        return s;
    }
};

}  // namespace fixtures

namespace fixtures {

/// In-environment requests after `from` until the exploit choice settles on
/// `best` for good; exploration picks are ignored.
inline std::size_t settle_requests(const SimMetrics& m, std::size_t from, const std::string& best) {
    const EnvKey env = m.records.at(from).decision.env;
    std::size_t seen = 0, settled = 0;
    for (std::size_t i = from; i < m.records.size(); ++i) {
        const auto& d = m.records[i].decision;
        if (!d.has_env || d.env != env) continue;
        ++seen;
        if (!d.explored && d.profile_id != best) settled = seen;
    }
    return settled;
}

inline double mean_jct_from(const SimMetrics& m, std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < m.records.size(); ++i) s += m.records[i].jct;
    return s / static_cast<double>(m.records.size() - from);
}

}  // namespace fixtures
