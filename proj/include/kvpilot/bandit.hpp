// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "kvpilot/policy.hpp"

namespace kvpilot {

struct BanditParams {
    double alpha = 0.2;            ///< EWMA rate
    double epsilon = 0.1;          ///< exploration probability
    std::size_t k_violations = 3;  ///< cooldown trigger count
    std::size_t window = 10;       ///< recent uses kept per profile
    std::uint64_t cooldown = 50;   ///< requests

    void validate() const;
    bool operator==(const BanditParams&) const = default;
};

/// Per-profile statistics inside one environment.
struct ArmStats {
    double residual = 0.0;  ///< EWMA of observed - predicted, seconds
    std::uint64_t count = 0;
    std::deque<bool> violations;  ///< last `window` SLO flags, oldest first
    std::uint64_t cooldown_until = 0;

    bool operator==(const ArmStats&) const = default;
};

/// Independent environment key: workload, quality bucket, envelope interval.
struct EnvKey {
    std::string workload;
    std::size_t bucket = 0;
    std::size_t interval = 0;
    auto operator<=>(const EnvKey&) const = default;
};

struct DecisionRecord {
    std::uint64_t request_id = 0;
    std::uint64_t now = 0;        ///< logical clock (request sequence number)
    std::string workload;
    std::size_t profile = 0;      ///< index into the policy table
    std::string profile_id;
    bool has_env = false;         ///< false when no bucket admits q_min
    EnvKey env;
    double predicted = 0.0;       ///< analytic T_hat
    double corrected = 0.0;       ///< T_hat + residual
    double observed = 0.0;
    double residual = 0.0;        ///< observed - predicted
    double t_slo = 0.0;
    bool explored = false;
    bool fallback = false;
    bool slo_violated = false;
};

/// Residual-corrected epsilon-greedy state. Reads take a shared lock on the
/// environment map plus the environment's own lock; observe_outcome
/// serialises per environment, so updates to distinct environments proceed
/// concurrently.
class BanditState {
public:
    explicit BanditState(BanditParams params = {});

    const BanditParams& params() const { return params_; }

    /// Copy of one arm's stats (defaults when never observed).
    ArmStats arm(const EnvKey& env, const std::string& profile_id) const;
    bool in_cooldown(const EnvKey& env, const std::string& profile_id, std::uint64_t now) const;

    void observe(const DecisionRecord& rec);

    /// Full state as a map, sorted by environment then profile id.
    std::map<EnvKey, std::map<std::string, ArmStats>> snapshot() const;
    void restore(const std::map<EnvKey, std::map<std::string, ArmStats>>& state);

private:
    struct Env {
        mutable std::mutex mu;
        std::map<std::string, ArmStats> arms;
    };
    Env& env_for(const EnvKey& key);
    const Env* find_env(const EnvKey& key) const;

    BanditParams params_;
    mutable std::shared_mutex map_mu_;
    std::map<EnvKey, std::unique_ptr<Env>> envs_;
};

/// Picks a profile for context `c`:
///   1. envelope candidates for (bucket, interval);
///   2. drop candidates in cooldown;
///   3. drop compressed candidates with B >= B*; if none remain use the
///      uncompressed profile;
///   4. keep candidates whose corrected prediction meets T_SLO; if none, fall
///      back to the best-quality feasible profile of the bucket, else the
///      uncompressed profile;
///   5. with probability 1 - epsilon the argmin of the corrected
///      prediction, otherwise a uniform pick among the feasible candidates.
/// Total: never throws for a valid table, worst case returns uncompressed.
DecisionRecord select_profile(const ServiceContext& c, const PolicyTable& table, const BanditState& bandit,
                              std::mt19937_64& rng, std::uint64_t request_id, std::uint64_t now);

/// Fills residual and SLO flag of `rec` with `observed` and updates `bandit`.
void observe_outcome(DecisionRecord& rec, double observed, BanditState& bandit);

}  // namespace kvpilot
