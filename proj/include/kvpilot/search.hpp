// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kvpilot/gp.hpp"
#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/pipeline.hpp"
#include "kvpilot/space.hpp"

namespace kvpilot {

struct SearchBudget {
    double acc_threshold = 0.90;
    double eps_buf = 0.40;             ///< pruning buffer, in CR units
    std::size_t max_evaluations = 80;  ///< counts the initial samples too
    std::size_t failure_limit = 10;    ///< consecutive infeasible evaluations
    double lambda0 = 0.5;
    double tau = 20.0;
    double hard_gap = 0.10;            ///< "far below threshold" means acc < ths - hard_gap
    std::size_t initial_samples = 5;

    void validate() const;
    bool operator==(const SearchBudget&) const = default;
};

/// lambda0 * exp(-t / tau), for t >= 1.
double exploration_weight(std::size_t t, double lambda0, double tau);

/// Phi((mean - ths) / std); with std == 0 the indicator mean >= ths.
double feasibility_probability(double mean, double std, double ths);

/// cr_est * P(feasible) + lambda * std / std_max (0 when std_max is 0).
double acquisition_score(double mean, double std, double std_max, double lambda, double ths,
                         double cr_est);
double acquisition_score(const GpState& gp, std::span<const double> embedding, double lambda,
                         double ths, double cr_est, double std_max);

struct AcquisitionChoice {
    std::size_t index = 0;  ///< candidate index
    double score = 0.0;
};

/// Scores every candidate in `remaining` (sorted ascending) and returns the
/// best one; ties go to the smaller index. std_max is taken over `remaining`.
AcquisitionChoice argmax_acquisition(const GpState& gp, const std::vector<std::vector<double>>& embeddings,
                                     std::span<const std::size_t> remaining, std::span<const double> cr_est,
                                     double lambda, double ths);

/// Analytic CR times a per-codec efficiency factor equal to the mean
/// measured/analytic ratio over observed candidates of that codec (1 until
/// one is observed). With calibration off this is the plain analytic CR.
class CrEstimator {
public:
    explicit CrEstimator(bool calibrate = true) : calibrate_(calibrate) {}
    double estimate(const StrategyConfig& s) const;
    void observe(const StrategyConfig& s, double measured_cr);
    double factor(CodecKind k) const;

private:
    bool calibrate_;
    double sum_[3] = {0.0, 0.0, 0.0};
    std::size_t count_[3] = {0, 0, 0};
};

struct EvalResult {
    double acc = 0.0;
    double cr = 0.0;
    double lat = 0.0;  ///< v_ref / s_p, seconds
    double s_enc = 0.0;
    double s_dec = 0.0;
};

struct EvaluatorOptions {
    std::size_t sample_size = 4;
    std::uint64_t seed = 0;
    double v_ref = 1073741824.0;  ///< bytes
    ThroughputOptions throughput{};
    QualityOracle quality{};
};

/// Compress/decompress every tensor of `sample`; acc and cr are means,
/// throughputs are means combined harmonically into lat.
EvalResult evaluate_config(const StrategyConfig& s, std::span<const KVTensor> sample,
                           const EvaluatorOptions& opts);

/// Fixed seeded subsample of a corpus, shared by every evaluated config.
class PipelineEvaluator {
public:
    PipelineEvaluator(std::vector<KVTensor> corpus, EvaluatorOptions opts);
    EvalResult operator()(const StrategyConfig& s) const;
    std::span<const KVTensor> sample() const { return sample_; }

private:
    std::vector<KVTensor> sample_;
    EvaluatorOptions opts_;
};

struct PruneResult {
    std::vector<std::size_t> remaining;
    std::size_t pruned = 0;
};

/// Bi-directional pruning. Feasible (acc >= ths): drop cr_est < cr - eps.
/// Far infeasible (acc < ths - hard_gap): drop cr_est > cr + eps.
/// `cr_est` is indexed by candidate index.
PruneResult prune_space(std::span<const std::size_t> remaining, std::span<const double> cr_est,
                        double acc, double cr, double ths, double eps, double hard_gap);

/// Consecutive-infeasible counter; any feasible result resets it.
struct FailureCounter {
    std::size_t k_fail = 0;
    void record(bool feasible) { k_fail = feasible ? 0 : k_fail + 1; }
};

bool check_early_stop(std::size_t remaining, std::size_t k_fail, std::size_t limit);

struct SearchOptions {
    SearchBudget budget{};
    GpParams gp{};
    bool use_encoding = true;     ///< false: random 1-D index embedding
    bool use_exploration = true;  ///< false: lambda_t = 0
    bool use_pruning = true;
    bool use_early_stop = true;
    bool calibrate_cr = true;
    std::uint64_t seed = 0;

    bool operator==(const SearchOptions&) const = default;
};

struct Observation {
    std::size_t index = 0;
    std::string id;
    EvalResult result;
};

struct TraceRecord {
    std::size_t iteration = 0;  ///< 1-based evaluation number
    bool initial = false;       ///< quasi-random seeding phase
    std::string id;
    double lambda = 0.0;
    double score = 0.0;
    double acc = 0.0;
    double cr = 0.0;
    double lat = 0.0;
    std::size_t remaining = 0;
    std::size_t k_fail = 0;
    std::size_t pruned = 0;
};

struct SearchResult {
    std::vector<Observation> evaluated;  ///< in evaluation order
    std::vector<Observation> feasible;   ///< acc >= acc_threshold, evaluation order
    std::vector<TraceRecord> trace;
    std::string stop_reason;
    std::string diagnostic;              ///< set when no feasible config was found

    std::size_t evaluations() const { return evaluated.size(); }
    /// Highest measured CR among feasible configs, 0 when there are none.
    double best_feasible_cr() const;
};

using EvaluateFn = std::function<EvalResult(std::size_t index, const StrategyConfig& s)>;

/// Constrained Bayesian search over a discrete space. Never evaluates a
/// candidate twice and never exceeds budget.max_evaluations.
SearchResult run_search(const StrategySpace& space, const EvaluateFn& evaluate, const SearchOptions& opts);

/// k points of the Halton sequence in [0,1]^dim with a seeded
/// Cranley-Patterson rotation.
std::vector<std::vector<double>> halton_points(std::size_t k, std::size_t dim, std::uint64_t seed);

}  // namespace kvpilot
