// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/workload.hpp"

#include <cmath>
#include <random>

#include "kvpilot/error.hpp"

namespace kvpilot {

void MixSpec::validate() const {
    if (entries.empty()) throw ConfigError("empty mix", "mix.entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const MixEntry& e = entries[i];
        const std::string f = "mix.entries[" + std::to_string(i) + "].";
        auto nonneg = [&](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("must be finite and >= 0", f + name);
        };
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) throw ConfigError("must be > 0", f + "weight");
        nonneg(e.volume_min, "volume_min");
        nonneg(e.volume_max, "volume_max");
        if (e.volume_max < e.volume_min) throw ConfigError("below volume_min", f + "volume_max");
        nonneg(e.t_prefill, "t_prefill");
        nonneg(e.t_decode, "t_decode");
        if (!(e.t_slo > 0.0)) throw ConfigError("must be > 0", f + "t_slo");
        if (!(e.q_min >= 0.0 && e.q_min <= 1.0)) throw ConfigError("must be in [0, 1]", f + "q_min");
    }
    if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate)) {
        throw ConfigError("must be finite and >= 0", "mix.arrival_rate");
    }
}

std::vector<Request> generate_requests(const MixSpec& mix, std::uint64_t seed) {
    mix.validate();
    std::mt19937_64 rng(seed);
    std::vector<double> w;
    for (const auto& e : mix.entries) w.push_back(e.weight);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Request> out;
    out.reserve(mix.count);
    double t = 0.0;
    for (std::size_t i = 0; i < mix.count; ++i) {
        if (i > 0 && mix.arrival_rate > 0.0) t += -std::log1p(-unit(rng)) / mix.arrival_rate;
        const MixEntry& e = mix.entries[pick(rng)];
        Request r;
        r.id = i;
        r.arrival = t;
        r.workload = e.workload;
        r.volume = e.volume_min + (e.volume_max - e.volume_min) * unit(rng);
        r.t_prefill = e.t_prefill;
        r.t_decode = e.t_decode;
        r.t_slo = e.t_slo;
        r.q_min = e.q_min;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace kvpilot
