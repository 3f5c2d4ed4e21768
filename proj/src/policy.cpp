// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kvpilot/error.hpp"

namespace kvpilot {

std::size_t PolicyTable::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (profiles[i].id == id) return i;
    }
    throw ConfigError("unknown profile '" + id + "'", "profile");
}

namespace {

// x where line b starts undercutting line a (slope(a) > slope(b)).
double crossing(const Profile& a, const Profile& b) {
    return (1.0 / b.s - 1.0 / a.s) / (1.0 / a.cr - 1.0 / b.cr);
}

}  // namespace

std::vector<Segment> lower_envelope(const std::vector<Profile>& profiles, const std::vector<std::size_t>& members,
                                    double x_lo, double x_hi) {
    if (members.empty()) throw ConfigError("envelope needs at least one profile", "profiles");
    std::vector<std::size_t> order = members;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const Profile& a = profiles[i];
        const Profile& b = profiles[j];
        const double ma = 1.0 / a.cr, mb = 1.0 / b.cr;
        if (ma != mb) return ma > mb;
        const double ia = 1.0 / a.s, ib = 1.0 / b.s;
        if (ia != ib) return ia < ib;
        return tie_preferred(a, b);
    });

    std::vector<std::size_t> hull;
    for (std::size_t k : order) {
        if (!hull.empty() && 1.0 / profiles[hull.back()].cr == 1.0 / profiles[k].cr) continue;
        while (hull.size() >= 2) {
            const Profile& a = profiles[hull[hull.size() - 2]];
            const Profile& b = profiles[hull.back()];
            if (crossing(a, profiles[k]) <= crossing(a, b)) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(k);
    }

    std::vector<Segment> out;
    for (std::size_t k = 0; k < hull.size(); ++k) {
        const double lo = k == 0 ? -kInf : crossing(profiles[hull[k - 1]], profiles[hull[k]]);
        const double hi = k + 1 == hull.size() ? kInf : crossing(profiles[hull[k]], profiles[hull[k + 1]]);
        const double a = std::max(lo, x_lo);
        const double b = std::min(hi, x_hi);
        if (a < b) out.push_back(Segment{a, b, hull[k]});
    }
    if (out.empty()) {
        // Degenerate range: the owner at x_lo takes everything.
        std::size_t k = 0;
        while (k + 1 < hull.size() && crossing(profiles[hull[k]], profiles[hull[k + 1]]) <= x_lo) ++k;
        out.push_back(Segment{x_lo, x_hi, hull[k]});
    }
    return out;
}

std::size_t bucket_for(const std::vector<double>& floors, double q_min) {
    for (std::size_t i = 0; i < floors.size(); ++i) {
        if (floors[i] >= q_min) return i;
    }
    throw InfeasibleQualityError("q_min " + std::to_string(q_min) + " is above every quality bucket");
}

PolicyTable build_policy_table(const std::vector<Profile>& profiles, const std::vector<double>& floors,
                               double b_min, double b_max) {
    if (profiles.empty()) throw ConfigError("no profiles to build a policy table from", "profiles");
    if (floors.empty()) throw ConfigError("at least one bucket floor is required", "buckets");
    for (std::size_t i = 0; i < floors.size(); ++i) {
        if (!(floors[i] >= 0.0 && floors[i] <= 1.0)) throw ConfigError("floor outside [0,1]", "buckets");
        if (i > 0 && !(floors[i] > floors[i - 1])) throw ConfigError("floors must be strictly increasing", "buckets");
    }
    if (!(b_min > 0.0) || !(b_max > b_min) || std::isinf(b_max)) {
        throw ConfigError("need 0 < b_min < b_max < inf", "bandwidth");
    }

    PolicyTable t;
    t.floors = floors;
    t.x_lo = 1.0 / b_max;
    t.x_hi = 1.0 / b_min;
    t.profiles.push_back(Profile::uncompressed());
    std::set<std::string> ids{kNoCompressionId};
    std::set<std::string> workloads;
    for (const Profile& p : profiles) {
        if (p.is_uncompressed()) continue;
        p.validate();
        if (!ids.insert(p.id).second) throw ConfigError("duplicate profile id '" + p.id + "'", "profiles");
        t.profiles.push_back(p);
        workloads.insert(p.workload);
    }
    if (workloads.empty()) workloads.insert("");

    for (const std::string& w : workloads) {
        WorkloadTable wt;
        for (double f : floors) {
            BucketEnvelope env;
            env.floor = f;
            env.members.push_back(0);
            for (std::size_t i = 1; i < t.profiles.size(); ++i) {
                if (t.profiles[i].workload == w && t.profiles[i].q >= f) env.members.push_back(i);
            }
            env.segments = lower_envelope(t.profiles, env.members, t.x_lo, t.x_hi);
            wt.buckets.push_back(std::move(env));
        }
        t.workloads.emplace(w, std::move(wt));
    }
    return t;
}

LookupResult lookup_x(const PolicyTable& table, const std::string& workload, std::size_t bucket, double x) {
    const auto it = table.workloads.find(workload);
    if (it == table.workloads.end()) throw ConfigError("no policy table for workload '" + workload + "'", "workload");
    const BucketEnvelope& env = it->second.buckets.at(bucket);
    LookupResult r;
    r.bucket = bucket;
    r.x = std::clamp(x, table.x_lo, table.x_hi);
    const auto& seg = env.segments;
    const auto up = std::upper_bound(seg.begin(), seg.end(), r.x,
                                     [](double v, const Segment& s) { return v < s.x_lo; });
    r.interval = up == seg.begin() ? 0 : static_cast<std::size_t>(up - seg.begin()) - 1;

    std::vector<std::size_t> cand;
    for (std::size_t k = r.interval == 0 ? 0 : r.interval - 1; k <= r.interval + 1 && k < seg.size(); ++k) {
        if (std::find(cand.begin(), cand.end(), seg[k].profile) == cand.end()) cand.push_back(seg[k].profile);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < cand.size(); ++k) {
        const Profile& a = table.profiles[cand[k]];
        const Profile& b = table.profiles[cand[best]];
        const double ca = envelope_cost(a, r.x), cb = envelope_cost(b, r.x);
        if (ca < cb || (ca == cb && tie_preferred(a, b))) best = k;
    }
    std::rotate(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(best),
                cand.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    r.candidates = std::move(cand);
    return r;
}

LookupResult lookup(const PolicyTable& table, const ServiceContext& c) {
    if (!(c.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive", "context.bandwidth");
    return lookup_x(table, c.workload, bucket_for(table.floors, c.q_min), 1.0 / c.bandwidth);
}

}  // namespace kvpilot
