// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kvpilot {

struct Request {
    std::uint64_t id = 0;
    double arrival = 0.0;    ///< seconds
    std::string workload;
    double volume = 0.0;     ///< KV bytes to move
    double t_prefill = 0.0;  ///< strategy-independent compute before the transfer
    double t_decode = 0.0;   ///< and after it
    double t_slo = 0.0;
    double q_min = 0.0;

    double t_model() const { return t_prefill + t_decode; }
    bool operator==(const Request&) const = default;
};

/// One workload class of a request mix. Volumes are uniform on
/// [volume_min, volume_max].
struct MixEntry {
    std::string workload;
    double weight = 1.0;
    double volume_min = 0.0;
    double volume_max = 0.0;
    double t_prefill = 0.0;
    double t_decode = 0.0;
    double t_slo = 1.0;
    double q_min = 0.9;

    bool operator==(const MixEntry&) const = default;
};

/// Open-loop Poisson arrivals at `arrival_rate` requests/s. A rate of 0
/// puts every request at t = 0.
struct MixSpec {
    std::vector<MixEntry> entries;
    std::size_t count = 0;
    double arrival_rate = 1.0;

    /// Throws ConfigError naming the bad field.
    void validate() const;
    bool operator==(const MixSpec&) const = default;
};

std::vector<Request> generate_requests(const MixSpec& mix, std::uint64_t seed);

}  // namespace kvpilot
