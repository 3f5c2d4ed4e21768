// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kvpilot/bandit.hpp"
#include "kvpilot/policy.hpp"
#include "kvpilot/trace.hpp"
#include "kvpilot/workload.hpp"

namespace kvpilot {

enum class Stage { prefill, compress, communicate, decompress, decode };
inline constexpr std::size_t kStageCount = 5;
const char* stage_name(Stage s);

struct StageTimes {
    std::array<double, kStageCount> t{};

    double& operator[](Stage s) { return t[static_cast<std::size_t>(s)]; }
    double operator[](Stage s) const { return t[static_cast<std::size_t>(s)]; }
    double total() const;
    /// Per-stage fraction of total(); all zero when total() is 0.
    std::array<double, kStageCount> shares() const;
};

/// Runs one request through the five stages with `p`. Codec throughputs are
/// scaled by the drift factor at arrival, the transfer of V/cr bytes starts
/// after compression and integrates over the trace, and the drift overhead
/// is booked on the communicate stage.
StageTimes simulate_request(const Request& r, const Profile& p, const BandwidthTrace& trace, const DriftModel& drift);

enum class ScenarioKind { pd_separation, prefix_caching };

enum class ControllerMode {
    full,            ///< envelope lookup plus residual bandit
    without_bandit,  ///< envelope lookup only
    without_controller,  ///< profile fixed from the bandwidth at trace start
    fixed_profile,
    no_compression,
};

const char* to_string(ScenarioKind k);
const char* to_string(ControllerMode m);
/// Accepts the names printed by to_string plus "w/o_bandit" and
/// "w/o_controller". Throws ConfigError.
ScenarioKind parse_scenario_kind(const std::string& s);
ControllerMode parse_controller_mode(const std::string& s);

struct Scenario {
    ScenarioKind kind = ScenarioKind::pd_separation;
    std::vector<Request> requests;
    BandwidthTrace trace = BandwidthTrace::constant(100.0 * kBytesPerGbps);
    DriftModel drift;
    ControllerMode mode = ControllerMode::full;
    std::string fixed_profile;   ///< for ControllerMode::fixed_profile
    BanditParams bandit;
    double recompute_time = 0.0;  ///< prefix caching: cost of recomputing the prefix
    bool recompute_fallback = false;

    /// Throws ConfigError on inconsistent mode/kind settings.
    void validate(const PolicyTable& table) const;
};

struct SimRecord {
    DecisionRecord decision;
    double arrival = 0.0;
    double bandwidth = 0.0;  ///< at arrival, bytes/s
    StageTimes stages;
    double jct = 0.0;
    double ttft = 0.0;  ///< every stage before decode
    bool recomputed = false;
};

struct SimSummary {
    std::size_t count = 0;
    double mean_jct = 0.0;
    double p50_jct = 0.0;
    double p99_jct = 0.0;
    double mean_ttft = 0.0;
    double slo_violation_rate = 0.0;
    double recompute_rate = 0.0;
    double explore_rate = 0.0;
    double fallback_rate = 0.0;
    std::array<double, kStageCount> shares{};  ///< stage time over total time
};

struct SimMetrics {
    std::vector<SimRecord> records;
    SimSummary summary;
};

/// Nearest-rank percentiles; shares are aggregate time fractions.
SimSummary summarize(const std::vector<SimRecord>& records);

/// Open-loop run in arrival order: select, simulate, observe. The logical
/// clock is the request's position in the stream.
SimMetrics run_scenario(const Scenario& s, const PolicyTable& table, std::uint64_t seed);

struct BreakdownRow {
    std::string label;
    std::size_t requests = 0;
    std::array<double, kStageCount> shares{};
};

/// One row per profile used (by id) followed by an "all" row.
std::vector<BreakdownRow> report_breakdown(const SimMetrics& m);

}  // namespace kvpilot
