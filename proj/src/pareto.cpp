// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/pareto.hpp"

#include <algorithm>
#include <tuple>

namespace kvpilot {

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
    const bool ge = a.acc >= b.acc && a.cr >= b.cr && a.lat <= b.lat;
    const bool strict = a.acc > b.acc || a.cr > b.cr || a.lat < b.lat;
    return ge && strict;
}

std::vector<ParetoPoint> pareto_frontier(std::vector<ParetoPoint> points) {
    // After this sort a point can only be dominated by points before it,
    // and duplicates are adjacent with the smallest id first.
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        return std::tie(b.acc, b.cr, a.lat, a.id) < std::tie(a.acc, a.cr, b.lat, b.id);
    });
    std::vector<ParetoPoint> front;
    for (auto& p : points) {
        const bool drop = std::any_of(front.begin(), front.end(), [&](const ParetoPoint& q) {
            return dominates(q, p) || (q.acc == p.acc && q.cr == p.cr && q.lat == p.lat);
        });
        if (!drop) front.push_back(std::move(p));
    }
    std::sort(front.begin(), front.end(), [](const ParetoPoint& a, const ParetoPoint& b) { return a.id < b.id; });
    return front;
}

}  // namespace kvpilot
