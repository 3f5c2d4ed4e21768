// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kvpilot/bandit.hpp"
#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/search.hpp"
#include "kvpilot/simulator.hpp"
#include "kvpilot/space.hpp"

namespace kvpilot {

inline constexpr int kConfigVersion = 1;

struct CorpusConfig {
    GeneratorParams generator{{2, 4, 64, 128}};
    std::size_t count = 4;
    bool operator==(const CorpusConfig&) const = default;
};

/// Bandwidth trace source: a CSV path or inline (t_s, gbps) points. A
/// relative CSV path is resolved against the config file's directory.
struct TraceSpec {
    std::string csv;
    std::vector<std::pair<double, double>> points{{0.0, 100.0}};
    bool operator==(const TraceSpec&) const = default;
};

struct ScenarioConfig {
    std::string name;
    ScenarioKind kind = ScenarioKind::pd_separation;
    ControllerMode mode = ControllerMode::full;
    std::string fixed_profile;
    MixSpec mix;
    TraceSpec trace;
    DriftModel drift;
    double recompute_time = 0.0;
    bool recompute_fallback = false;
    bool operator==(const ScenarioConfig&) const = default;
};

/// Whole-run configuration. The JSON schema mirrors these fields one to
/// one; see README for the key list.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string workload = "default";
    SpaceDef space;
    SearchOptions search;
    CorpusConfig corpus;
    std::size_t sample_size = 2;
    double v_ref = 1073741824.0;
    std::vector<double> buckets = kDefaultBucketFloors;
    double b_min_gbps = 1.0;
    double b_max_gbps = 400.0;
    BanditParams bandit;
    std::vector<ScenarioConfig> scenarios;

    /// Cross-field checks; throws ConfigError naming the field.
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

/// Strict parse: unknown keys, wrong types and failed checks throw
/// ConfigError with a dotted field path; malformed JSON throws ParseError.
RunConfig parse_config(std::string_view text);
/// Pretty JSON with every field present, defaults included.
std::string serialize_config(const RunConfig& c);
/// FNV-1a of the compact serialization, as 16 hex digits.
std::string config_digest(const RunConfig& c);

std::string hex64(std::uint64_t v);

/// The scenario's trace, loading CSV files relative to `base_dir`.
BandwidthTrace resolve_trace(const TraceSpec& t, const std::string& base_dir);

}  // namespace kvpilot
