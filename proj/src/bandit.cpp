// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/bandit.hpp"

#include <algorithm>
#include <cmath>

#include "kvpilot/error.hpp"

namespace kvpilot {

void BanditParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("must be in (0, 1]", "bandit.alpha");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("must be in [0, 1)", "bandit.epsilon");
    if (window == 0) throw ConfigError("must be positive", "bandit.window");
    if (k_violations == 0 || k_violations > window) throw ConfigError("must be in 1..window", "bandit.k_violations");
}

BanditState::BanditState(BanditParams params) : params_(params) { params_.validate(); }

BanditState::Env& BanditState::env_for(const EnvKey& key) {
    {
        std::shared_lock lock(map_mu_);
        const auto it = envs_.find(key);
        if (it != envs_.end()) return *it->second;
    }
    std::unique_lock lock(map_mu_);
    auto& slot = envs_[key];
    if (!slot) slot = std::make_unique<Env>();
    return *slot;
}

const BanditState::Env* BanditState::find_env(const EnvKey& key) const {
    std::shared_lock lock(map_mu_);
    const auto it = envs_.find(key);
    return it == envs_.end() ? nullptr : it->second.get();
}

ArmStats BanditState::arm(const EnvKey& env, const std::string& profile_id) const {
    const Env* e = find_env(env);
    if (!e) return {};
    std::lock_guard lock(e->mu);
    const auto it = e->arms.find(profile_id);
    return it == e->arms.end() ? ArmStats{} : it->second;
}

bool BanditState::in_cooldown(const EnvKey& env, const std::string& profile_id, std::uint64_t now) const {
    return now < arm(env, profile_id).cooldown_until;
}

void BanditState::observe(const DecisionRecord& rec) {
    if (!rec.has_env) return;
    Env& e = env_for(rec.env);
    std::lock_guard lock(e.mu);
    ArmStats& a = e.arms[rec.profile_id];
    a.residual = (1.0 - params_.alpha) * a.residual + params_.alpha * rec.residual;
    ++a.count;
    a.violations.push_back(rec.slo_violated);
    while (a.violations.size() > params_.window) a.violations.pop_front();
    const auto bad = static_cast<std::size_t>(std::count(a.violations.begin(), a.violations.end(), true));
    if (bad >= params_.k_violations) {
        a.cooldown_until = rec.now + params_.cooldown;
        a.violations.clear();
    }
}

std::map<EnvKey, std::map<std::string, ArmStats>> BanditState::snapshot() const {
    std::shared_lock lock(map_mu_);
    std::map<EnvKey, std::map<std::string, ArmStats>> out;
    for (const auto& [key, env] : envs_) {
        std::lock_guard g(env->mu);
        out.emplace(key, env->arms);
    }
    return out;
}

void BanditState::restore(const std::map<EnvKey, std::map<std::string, ArmStats>>& state) {
    std::unique_lock lock(map_mu_);
    envs_.clear();
    for (const auto& [key, arms] : state) {
        auto env = std::make_unique<Env>();
        env->arms = arms;
        envs_.emplace(key, std::move(env));
    }
}

namespace {

bool better(double ta, const Profile& a, double tb, const Profile& b) {
    return ta < tb || (ta == tb && tie_preferred(a, b));
}

}  // namespace

DecisionRecord select_profile(const ServiceContext& c, const PolicyTable& table, const BanditState& bandit,
                              std::mt19937_64& rng, std::uint64_t request_id, std::uint64_t now) {
    DecisionRecord rec;
    rec.request_id = request_id;
    rec.now = now;
    rec.workload = c.workload;
    rec.t_slo = c.t_slo;
    auto finish = [&](std::size_t idx, double residual) {
        const Profile& p = table.profile(idx);
        rec.profile = idx;
        rec.profile_id = p.id;
        rec.predicted = predict_latency(p, c);
        rec.corrected = rec.predicted + residual;
        return rec;
    };
    // Uniform draw taken up front so the random stream does not depend on
    // which branch runs.
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto pick = rng();

    LookupResult lr;
    try {
        lr = lookup(table, c);
    } catch (const InfeasibleQualityError&) {
        rec.fallback = true;
        return finish(table.uncompressed_index(), 0.0);
    }
    rec.has_env = true;
    rec.env = EnvKey{c.workload, lr.bucket, lr.interval};

    auto residual_of = [&](std::size_t idx) { return bandit.arm(rec.env, table.profile(idx).id).residual; };
    auto cooling = [&](std::size_t idx) { return bandit.in_cooldown(rec.env, table.profile(idx).id, now); };

    std::vector<std::size_t> cand;
    for (std::size_t idx : lr.candidates) {
        if (cooling(idx)) continue;
        const Profile& p = table.profile(idx);
        if (p.is_uncompressed() || c.bandwidth < benefit_threshold(p)) cand.push_back(idx);
    }
    if (cand.empty()) cand.push_back(table.uncompressed_index());

    std::vector<std::size_t> feasible;
    std::vector<double> t_eff;
    for (std::size_t idx : cand) {
        const double t = predict_latency(table.profile(idx), c) + residual_of(idx);
        if (t <= c.t_slo) {
            feasible.push_back(idx);
            t_eff.push_back(t);
        }
    }

    if (feasible.empty()) {
        rec.fallback = true;
        const BucketEnvelope& env = table.workloads.at(c.workload).buckets.at(lr.bucket);
        std::size_t best = table.uncompressed_index();
        double best_t = 0.0;
        bool found = false;
        for (std::size_t idx : env.members) {
            const Profile& p = table.profile(idx);
            if (p.is_uncompressed() || cooling(idx)) continue;
            const double t = predict_latency(p, c) + residual_of(idx);
            if (t > c.t_slo) continue;
            const Profile& b = table.profile(best);
            if (!found || p.q > b.q || (p.q == b.q && better(t, p, best_t, b))) {
                best = idx;
                best_t = t;
                found = true;
            }
        }
        return finish(best, found ? residual_of(best) : residual_of(table.uncompressed_index()));
    }

    std::size_t chosen = 0;
    if (u < bandit.params().epsilon) {
        rec.explored = true;
        chosen = static_cast<std::size_t>(pick % feasible.size());
    } else {
        for (std::size_t k = 1; k < feasible.size(); ++k) {
            if (better(t_eff[k], table.profile(feasible[k]), t_eff[chosen], table.profile(feasible[chosen]))) {
                chosen = k;
            }
        }
    }
    return finish(feasible[chosen], residual_of(feasible[chosen]));
}

void observe_outcome(DecisionRecord& rec, double observed, BanditState& bandit) {
    rec.observed = observed;
    rec.residual = observed - rec.predicted;
    rec.slo_violated = observed > rec.t_slo;
    bandit.observe(rec);
}

}  // namespace kvpilot
