// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace kvpilot {

/// Objectives: maximise acc and cr, minimise lat.
struct ParetoPoint {
    std::string id;
    double acc = 0.0;
    double cr = 0.0;
    double lat = 0.0;

    bool operator==(const ParetoPoint&) const = default;
};

/// a >= b in every objective and strictly better in at least one.
bool dominates(const ParetoPoint& a, const ParetoPoint& b);

/// Non-dominated subset, sorted by id. Points with identical objectives
/// collapse to the one with the lexicographically smallest id.
std::vector<ParetoPoint> pareto_frontier(std::vector<ParetoPoint> points);

}  // namespace kvpilot
