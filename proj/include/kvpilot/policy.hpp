// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "kvpilot/latency.hpp"

namespace kvpilot {

inline const std::vector<double> kDefaultBucketFloors{0.90, 0.95, 0.97, 0.99};

/// Envelope segment [x_lo, x_hi) over x = 1/B, owned by one profile.
struct Segment {
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::size_t profile = 0;  ///< index into PolicyTable::profiles
};

/// Lower envelope of one quality bucket. Members are every profile of the
/// workload with q >= floor plus the uncompressed profile.
struct BucketEnvelope {
    double floor = 0.0;
    std::vector<std::size_t> members;
    std::vector<Segment> segments;  ///< contiguous, covering [x_lo, x_hi]
};

struct WorkloadTable {
    std::vector<BucketEnvelope> buckets;  ///< ascending floor
};

struct PolicyTable {
    std::vector<Profile> profiles;  ///< index 0 is the uncompressed profile
    double x_lo = 0.0;              ///< 1 / b_max
    double x_hi = 0.0;              ///< 1 / b_min
    std::vector<double> floors;
    std::map<std::string, WorkloadTable> workloads;

    const Profile& profile(std::size_t i) const { return profiles.at(i); }
    std::size_t uncompressed_index() const { return 0; }
    /// Throws ConfigError for an unknown id.
    std::size_t index_of(const std::string& id) const;
};

/// Builds one envelope per (workload, floor). Each profile's `workload`
/// selects its table. Throws ConfigError on an empty profile list, bad
/// floors or bandwidth bounds, and duplicate ids.
PolicyTable build_policy_table(const std::vector<Profile>& profiles, const std::vector<double>& floors,
                               double b_min, double b_max);

/// Lower envelope of `members` clipped to [x_lo, x_hi]: lines sorted by
/// slope, incremental hull, then adjacent equal owners merged.
std::vector<Segment> lower_envelope(const std::vector<Profile>& profiles, const std::vector<std::size_t>& members,
                                    double x_lo, double x_hi);

/// Index of the lowest floor >= q_min; throws InfeasibleQualityError when
/// q_min is above every floor.
std::size_t bucket_for(const std::vector<double>& floors, double q_min);

struct LookupResult {
    std::size_t bucket = 0;
    std::size_t interval = 0;
    double x = 0.0;                      ///< 1/B clamped to the table range
    std::vector<std::size_t> candidates; ///< model-optimal first, then neighbours
};

/// Binary search for the segment containing 1/B. Candidates are the owners
/// of that segment and its adjacent segments; the model-optimal one is their
/// argmin of envelope_cost at x under tie_preferred.
LookupResult lookup(const PolicyTable& table, const ServiceContext& c);

/// lookup() at an explicit x and bucket.
LookupResult lookup_x(const PolicyTable& table, const std::string& workload, std::size_t bucket, double x);

/// Policy table holder whose rebuilds swap atomically: readers get either
/// the old or the new table.
class PolicyHandle {
public:
    PolicyHandle() = default;
    explicit PolicyHandle(PolicyTable t) : table_(std::make_shared<const PolicyTable>(std::move(t))) {}
    std::shared_ptr<const PolicyTable> get() const {
        std::lock_guard lock(mu_);
        return table_;
    }
    void swap_in(PolicyTable t) {
        auto next = std::make_shared<const PolicyTable>(std::move(t));
        std::lock_guard lock(mu_);
        table_ = std::move(next);
    }

private:
    mutable std::mutex mu_;
    std::shared_ptr<const PolicyTable> table_;
};

}  // namespace kvpilot
