#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "kvpilot/codec.hpp"
#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/pareto.hpp"
#include "kvpilot/policy.hpp"

namespace fixtures {

using namespace kvpilot;

struct RandomStream {
    SymbolLayout layout;
    std::vector<std::uint8_t> symbols;
};

// Streams mix widths and skew so every codec path is exercised: uniform noise,
// long runs and heavily biased alphabets.
inline RandomStream random_stream(std::mt19937_64& rng) {
    RandomStream s;
    s.layout.slab_len = 1 + rng() % 300;
    const std::size_t slabs = 1 + rng() % 6;
    for (std::size_t i = 0; i < slabs; ++i) s.layout.slab_bits.push_back(static_cast<std::uint8_t>(1 + rng() % 8));
    const int style = static_cast<int>(rng() % 3);
    std::geometric_distribution<int> geo(0.6);
    for (std::size_t slab = 0; slab < slabs; ++slab) {
        const unsigned top = (1u << s.layout.slab_bits[slab]) - 1;
        std::uint8_t cur = 0;
        for (std::size_t i = 0; i < s.layout.slab_len; ++i) {
            if (style == 0) cur = static_cast<std::uint8_t>(rng() & top);
            if (style == 1 && rng() % 16 == 0) cur = static_cast<std::uint8_t>(rng() & top);
            if (style == 2) cur = static_cast<std::uint8_t>(std::min<unsigned>(geo(rng), top));
            s.symbols.push_back(cur);
        }
    }
    return s;
}

inline KVTensor random_tensor(KVShape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<double> v(shape.num_elements());
    for (auto& e : v) e = n(rng);
    return KVTensor(shape, std::move(v), std::vector<double>(shape.num_heads(), 0.5));
}

inline double max_abs_diff(const KVTensor& a, const KVTensor& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::fabs(a.values()[i] - b.values()[i]));
    return m;
}

// Argmin of 1/s + x/cr over the bucket's members with the documented ties.
inline std::size_t grid_argmin(const PolicyTable& t, const BucketEnvelope& env, double x) {
    std::size_t best = env.members.front();
    for (std::size_t i : env.members) {
        const Profile& p = t.profiles[i];
        const Profile& b = t.profiles[best];
        const double cp = 1.0 / p.s + x / p.cr;
        const double cb = 1.0 / b.s + x / b.cr;
        if (cp < cb || (cp == cb && (p.q > b.q || (p.q == b.q && (p.cr > b.cr || (p.cr == b.cr && p.id < b.id))))))
            best = i;
    }
    return best;
}

inline std::vector<Profile> random_profiles(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Profile> ps;
    for (std::size_t i = 0; i < n; ++i) {
        const double cr = 1.0 + 9.0 * u(rng);
        const double s = std::pow(10.0, 8.5 + 2.0 * u(rng));
        const double q = 0.85 + 0.15 * u(rng);
        ps.push_back(Profile::make("p" + std::to_string(i), cr, s, q));
    }
    // exact duplicates and parallel lines exercise the tie rule
    if (n >= 3) {
        Profile d = ps[0];
        d.id = "p00dup";
        d.q = ps[0].q;
        ps.push_back(d);
        Profile par = ps[1];
        par.id = "p01par";
        par.s *= 2.0;
        par.s_enc *= 2.0;
        par.s_dec *= 2.0;
        ps.push_back(par);
    }
    return ps;
}

// Pairwise dominance, duplicates resolved to the smallest id.
inline std::vector<ParetoPoint> pareto_oracle(const std::vector<ParetoPoint>& pts) {
    std::vector<ParetoPoint> out;
    for (const auto& p : pts) {
        bool keep = true;
        for (const auto& q : pts) {
            const bool ge = q.acc >= p.acc && q.cr >= p.cr && q.lat <= p.lat;
            const bool gt = q.acc > p.acc || q.cr > p.cr || q.lat < p.lat;
            const bool same = q.acc == p.acc && q.cr == p.cr && q.lat == p.lat;
            if ((ge && gt) || (same && q.id < p.id)) keep = false;
        }
        if (keep) out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.id < b.id; });
    return out;
}

inline std::vector<ParetoPoint> random_points(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> coarse(0, 9);
    std::uniform_real_distribution<double> fine(0.0, 1.0);
    std::vector<ParetoPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
        ParetoPoint p;
        p.id = "p" + std::to_string(rng() % 100000);
        // a coarse lattice forces ties and exact duplicates
        const bool lattice = rng() % 2 == 0;
        p.acc = lattice ? coarse(rng) / 10.0 : fine(rng);
        p.cr = lattice ? 1 + coarse(rng) : 1 + 7 * fine(rng);
        p.lat = lattice ? coarse(rng) : 10 * fine(rng);
        pts.push_back(p);
    }
    if (n > 2) pts.push_back({"dup", pts[0].acc, pts[0].cr, pts[0].lat});
    return pts;
}

}  // namespace fixtures
