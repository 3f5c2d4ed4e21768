// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/latency.hpp"

#include <cmath>

#include "kvpilot/error.hpp"
#include "kvpilot/pipeline.hpp"

namespace kvpilot {

Profile Profile::uncompressed() {
    Profile p;
    p.id = kNoCompressionId;
    return p;
}

Profile Profile::make(std::string id, double cr, double s, double q) {
    Profile p;
    p.id = std::move(id);
    p.cr = cr;
    p.s = s;
    p.q = q;
    p.s_enc = 2.0 * s;
    p.s_dec = 2.0 * s;
    return p;
}

void Profile::validate() const {
    if (id.empty()) throw ConfigError("profile id is empty", "profile.id");
    if (!(cr >= 1.0) || std::isinf(cr)) throw ConfigError("cr must be finite and >= 1", "profile.cr");
    if (!(s > 0.0)) throw ConfigError("throughput must be positive", "profile.s");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quality must be in [0,1]", "profile.q");
    if (!(s_enc > 0.0) || !(s_dec > 0.0)) throw ConfigError("throughput must be positive", "profile.s_enc");
    const double h = harmonic_throughput(s_enc, s_dec);
    if (std::abs(h - s) > 1e-9 * std::max(h, s) && !(std::isinf(h) && std::isinf(s))) {
        throw ConfigError("s differs from the harmonic combination of s_enc and s_dec", "profile.s");
    }
}

double predict_latency(const Profile& p, const ServiceContext& c) {
    return c.t_model + c.volume / p.s + c.volume / (c.bandwidth * p.cr);
}

double benefit_threshold(const Profile& p) {
    if (p.cr <= 1.0) return 0.0;
    return (1.0 - 1.0 / p.cr) * p.s;
}

bool tie_preferred(const Profile& a, const Profile& b) {
    if (a.q != b.q) return a.q > b.q;
    if (a.cr != b.cr) return a.cr > b.cr;
    return a.id < b.id;
}

}  // namespace kvpilot
