// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kvpilot {

/// Piecewise-constant, right-continuous effective bandwidth. Segment k holds
/// bandwidth[k] on [times[k], times[k+1]); the last segment never ends.
struct BandwidthTrace {
    std::vector<double> times;      ///< seconds, strictly increasing
    std::vector<double> bandwidth;  ///< bytes/s, > 0

    static BandwidthTrace constant(double bytes_per_s, double t0 = 0.0);

    /// Throws ConfigError on empty, unsorted or non-positive entries.
    void validate() const;
    /// Throws ConfigError when t is before the first timestamp.
    double bandwidth_at(double t) const;
    /// Seconds to move `bytes` starting at `start`, integrating across
    /// segment changes.
    double transfer_time(double start, double bytes) const;

    bool operator==(const BandwidthTrace&) const = default;
};

/// CSV with header `t_s,bandwidth_gbps`. Blank lines and lines starting
/// with '#' are skipped. Throws ParseError with the byte offset.
BandwidthTrace parse_trace_csv(std::string_view text);
BandwidthTrace load_trace_csv(const std::string& path);
std::string format_trace_csv(const BandwidthTrace& trace);

/// Codec throughput drift. Each schedule is a list of (t, factor) steps:
/// the factor is 1 before the first step and otherwise that of the last
/// step with t_step <= t. Key "*" applies to compressed profiles without a
/// schedule of their own. `overhead` seconds are added to every transfer.
struct DriftModel {
    std::map<std::string, std::vector<std::pair<double, double>>> factors;
    double overhead = 0.0;

    void validate() const;
    double factor(const std::string& profile_id, double t) const;

    bool operator==(const DriftModel&) const = default;
};

}  // namespace kvpilot
