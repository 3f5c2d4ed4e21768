// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>

namespace kvpilot {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// 1 Gbps in bytes/s (decimal gigabits).
inline constexpr double kBytesPerGbps = 1.25e8;

inline constexpr const char* kNoCompressionId = "uncompressed";

/// Online selection unit: compression ratio, effective codec throughput and
/// quality. s = s_enc*s_dec/(s_enc+s_dec) so V/s is total codec time.
struct Profile {
    std::string id;
    double cr = 1.0;
    double s = kInf;
    double q = 1.0;
    double s_enc = kInf;
    double s_dec = kInf;
    std::string strategy;  ///< strategy id; empty for the uncompressed profile
    std::string workload;

    /// cr = 1, s = +inf, q = 1.
    static Profile uncompressed();
    /// Splits s evenly: s_enc = s_dec = 2 s.
    static Profile make(std::string id, double cr, double s, double q);

    bool is_uncompressed() const { return id == kNoCompressionId; }
    /// Throws ConfigError on cr < 1, s <= 0, q outside [0,1] or a mismatched split.
    void validate() const;

    bool operator==(const Profile&) const = default;
};

struct ServiceContext {
    std::string workload;
    double bandwidth = 0.0;  ///< bytes/s
    double t_slo = kInf;     ///< seconds
    double q_min = 0.0;
    double volume = 0.0;     ///< bytes
    double t_model = 0.0;    ///< seconds
};

/// T_model + V/s + V/(B*cr). The uncompressed profile gives T_model + V/B.
double predict_latency(const Profile& p, const ServiceContext& c);

/// (1 - 1/cr) * s: the profile beats no compression iff B < B*.
double benefit_threshold(const Profile& p);

/// Per-byte line over x = 1/B: 1/s + x/cr.
inline double envelope_cost(const Profile& p, double x) { return 1.0 / p.s + x / p.cr; }

/// Selection order among equal costs: higher q, then higher cr, then smaller id.
bool tie_preferred(const Profile& a, const Profile& b);

}  // namespace kvpilot
