// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kvpilot/simulator.hpp"

namespace kvpilot {

inline constexpr int kMetricsVersion = 1;

/// Identifies one simulated run inside a metrics file.
struct RunHeader {
    std::string scenario;
    ScenarioKind kind = ScenarioKind::pd_separation;
    ControllerMode mode = ControllerMode::full;
    std::string fixed_profile;
    std::string config_digest;
    std::uint64_t seed = 0;
    bool operator==(const RunHeader&) const = default;
};

struct RunMetrics {
    RunHeader header;
    SimMetrics metrics;
};

/// Line-delimited JSON: one summary line (format, version, header fields,
/// summary), then one line per request with every DecisionRecord field, the
/// five stage times, jct, ttft and the recompute flag. Several runs may be
/// concatenated in one file.
std::string serialize_metrics(const RunMetrics& run);
/// Throws ParseError (byte offset) or VersionError.
std::vector<RunMetrics> parse_metrics(std::string_view text);

/// CSV field with RFC 4180 quoting; strategy ids contain commas.
std::string csv_field(std::string_view v);

enum class ReportFormat { text, csv };
ReportFormat parse_report_format(const std::string& s);

enum class ReportTable { summary, breakdown, timeline };

/// Renders the requested tables in a stable column order with fixed
/// precision: seconds to 6 decimals, percentages to 4. No runs gives
/// header-only tables.
std::string emit_report(const std::vector<RunMetrics>& runs, ReportFormat format,
                        const std::vector<ReportTable>& tables = {ReportTable::summary, ReportTable::breakdown});

}  // namespace kvpilot
