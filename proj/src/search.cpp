// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "kvpilot/error.hpp"
#include "kvpilot/rng.hpp"

namespace kvpilot {

void SearchBudget::validate() const {
    if (!(acc_threshold > 0.0 && acc_threshold <= 1.0)) {
        throw ConfigError("must be in (0, 1]", "budget.acc_threshold");
    }
    if (!(eps_buf > 0.0)) throw ConfigError("must be positive", "budget.eps_buf");
    if (max_evaluations == 0) throw ConfigError("must be positive", "budget.max_evaluations");
    if (failure_limit == 0) throw ConfigError("must be positive", "budget.failure_limit");
    if (!(lambda0 > 0.0)) throw ConfigError("must be positive", "budget.lambda0");
    if (!(tau > 0.0)) throw ConfigError("must be positive", "budget.tau");
    if (!(hard_gap > 0.0)) throw ConfigError("must be positive", "budget.hard_gap");
    if (initial_samples == 0) throw ConfigError("must be positive", "budget.initial_samples");
}

double exploration_weight(std::size_t t, double lambda0, double tau) {
    return lambda0 * std::exp(-static_cast<double>(t) / tau);
}

double feasibility_probability(double mean, double std, double ths) {
    if (std <= 0.0) return mean >= ths ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(mean - ths) / (std * std::numbers::sqrt2));
}

double acquisition_score(double mean, double std, double std_max, double lambda, double ths,
                         double cr_est) {
    const double norm = std_max > 0.0 ? std / std_max : 0.0;
    return cr_est * feasibility_probability(mean, std, ths) + lambda * norm;
}

double acquisition_score(const GpState& gp, std::span<const double> embedding, double lambda,
                         double ths, double cr_est, double std_max) {
    const GpPrediction p = gp_predict(gp, embedding);
    return acquisition_score(p.mean, p.std, std_max, lambda, ths, cr_est);
}

AcquisitionChoice argmax_acquisition(const GpState& gp, const std::vector<std::vector<double>>& embeddings,
                                     std::span<const std::size_t> remaining, std::span<const double> cr_est,
                                     double lambda, double ths) {
    if (remaining.empty()) throw Error("argmax_acquisition over an empty candidate set");
    std::vector<GpPrediction> pred(remaining.size());
    double std_max = 0.0;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
        pred[k] = gp_predict(gp, embeddings[remaining[k]]);
        std_max = std::max(std_max, pred[k].std);
    }
    AcquisitionChoice best{remaining.front(), -std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < remaining.size(); ++k) {
        const double s = acquisition_score(pred[k].mean, pred[k].std, std_max, lambda, ths, cr_est[remaining[k]]);
        if (s > best.score) best = {remaining[k], s};
    }
    return best;
}

double CrEstimator::factor(CodecKind k) const {
    const auto i = static_cast<std::size_t>(k);
    if (!calibrate_ || count_[i] == 0) return 1.0;
    return sum_[i] / static_cast<double>(count_[i]);
}

double CrEstimator::estimate(const StrategyConfig& s) const {
    return analytic_cr(s) * factor(s.codec.kind);
}

void CrEstimator::observe(const StrategyConfig& s, double measured_cr) {
    const auto i = static_cast<std::size_t>(s.codec.kind);
    sum_[i] += measured_cr / analytic_cr(s);
    ++count_[i];
}

EvalResult evaluate_config(const StrategyConfig& s, std::span<const KVTensor> sample,
                           const EvaluatorOptions& opts) {
    if (sample.empty()) throw Error("evaluate_config needs a nonempty sample");
    EvalResult r;
    for (const KVTensor& x : sample) {
        const PipelineMetrics m = run_pipeline(x, s, opts.throughput, opts.quality);
        r.acc += m.quality;
        r.cr += m.cr;
        r.s_enc += m.s_enc;
        r.s_dec += m.s_dec;
    }
    const auto n = static_cast<double>(sample.size());
    r.acc /= n;
    r.cr /= n;
    r.s_enc /= n;
    r.s_dec /= n;
    r.lat = opts.v_ref / harmonic_throughput(r.s_enc, r.s_dec);
    return r;
}

PipelineEvaluator::PipelineEvaluator(std::vector<KVTensor> corpus, EvaluatorOptions opts)
    : opts_(std::move(opts)) {
    if (opts_.sample_size == 0) throw ConfigError("must be positive", "evaluator.sample_size");
    if (corpus.size() < opts_.sample_size) {
        throw ConfigError("corpus has " + std::to_string(corpus.size()) + " tensors, sample needs " +
                              std::to_string(opts_.sample_size),
                          "evaluator.sample_size");
    }
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(opts_.seed, 0x5a));
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(opts_.sample_size);
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) sample_.push_back(std::move(corpus[i]));
}

EvalResult PipelineEvaluator::operator()(const StrategyConfig& s) const {
    return evaluate_config(s, sample_, opts_);
}

PruneResult prune_space(std::span<const std::size_t> remaining, std::span<const double> cr_est,
                        double acc, double cr, double ths, double eps, double hard_gap) {
    PruneResult out;
    const bool feasible = acc >= ths;
    const bool far_below = acc < ths - hard_gap;
    for (std::size_t i : remaining) {
        const bool drop = (feasible && cr_est[i] < cr - eps) || (far_below && cr_est[i] > cr + eps);
        if (drop) {
            ++out.pruned;
        } else {
            out.remaining.push_back(i);
        }
    }
    return out;
}

bool check_early_stop(std::size_t remaining, std::size_t k_fail, std::size_t limit) {
    return remaining == 0 || k_fail >= limit;
}

double SearchResult::best_feasible_cr() const {
    double best = 0.0;
    for (const auto& o : feasible) best = std::max(best, o.result.cr);
    return best;
}

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

std::vector<std::uint64_t> first_primes(std::size_t n) {
    std::vector<std::uint64_t> p;
    for (std::uint64_t c = 2; p.size() < n; ++c) {
        bool prime = true;
        for (std::uint64_t q : p) {
            if (q * q > c) break;
            if (c % q == 0) {
                prime = false;
                break;
            }
        }
        if (prime) p.push_back(c);
    }
    return p;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

}  // namespace

std::vector<std::vector<double>> halton_points(std::size_t k, std::size_t dim, std::uint64_t seed) {
    const auto primes = first_primes(dim);
    std::mt19937_64 rng(derive_seed(seed, 0x4a17));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> shift(dim);
    for (double& s : shift) s = u(rng);
    std::vector<std::vector<double>> pts(k, std::vector<double>(dim));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = radical_inverse(i + 1, primes[j]) + shift[j];
            pts[i][j] = v - std::floor(v);
        }
    }
    return pts;
}

SearchResult run_search(const StrategySpace& space, const EvaluateFn& evaluate, const SearchOptions& opts) {
    opts.budget.validate();
    if (space.size() == 0) throw ConfigError("search space is empty", "space");
    const SearchBudget& b = opts.budget;

    const auto embeddings = opts.use_encoding ? encode_space(space)
                                              : random_index_embedding(space.size(), derive_seed(opts.seed, 0xe4c));
    CrEstimator estimator(opts.calibrate_cr);
    std::vector<double> cr_est(space.size());
    auto refresh_estimates = [&] {
        for (std::size_t i = 0; i < space.size(); ++i) cr_est[i] = estimator.estimate(space[i]);
    };
    refresh_estimates();

    std::vector<std::size_t> remaining(space.size());
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});
    FailureCounter failures;
    SearchResult result;
    std::vector<std::vector<double>> train_x;
    std::vector<double> train_y;

    // Returns true when the search must stop.
    auto record = [&](std::size_t idx, bool initial, double lambda, double score) {
        const StrategyConfig& s = space[idx];
        const EvalResult r = evaluate(idx, s);
        remaining.erase(std::find(remaining.begin(), remaining.end(), idx));
        Observation obs{idx, s.id(), r};
        result.evaluated.push_back(obs);
        const bool feasible = r.acc >= b.acc_threshold;
        if (feasible) result.feasible.push_back(obs);
        failures.record(feasible);
        estimator.observe(s, r.cr);
        refresh_estimates();
        train_x.push_back(embeddings[idx]);
        train_y.push_back(r.acc);

        // seeding results are not pruned on; pruning belongs to the guided phase
        std::size_t pruned = 0;
        if (opts.use_pruning && !initial) {
            PruneResult p = prune_space(remaining, cr_est, r.acc, r.cr, b.acc_threshold, b.eps_buf, b.hard_gap);
            pruned = p.pruned;
            remaining = std::move(p.remaining);
        }
        result.trace.push_back(TraceRecord{result.evaluated.size(), initial, obs.id, lambda, score, r.acc, r.cr,
                                           r.lat, remaining.size(), failures.k_fail, pruned});
        if (remaining.empty()) {
            result.stop_reason = "space exhausted";
            return true;
        }
        if (opts.use_early_stop && check_early_stop(remaining.size(), failures.k_fail, b.failure_limit)) {
            result.stop_reason = "failure limit";
            return true;
        }
        if (result.evaluated.size() >= b.max_evaluations) {
            result.stop_reason = "evaluation budget";
            return true;
        }
        return false;
    };

    bool stop = false;
    const auto seeds = halton_points(b.initial_samples, embeddings.front().size(), opts.seed);
    for (const auto& pt : seeds) {
        std::size_t best = remaining.front();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i : remaining) {
            const double d = squared_distance(embeddings[i], pt);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if ((stop = record(best, true, 0.0, 0.0))) break;
    }

    for (std::size_t t = 1; !stop; ++t) {
        const GpState gp = gp_fit(train_x, train_y, opts.gp);
        const double lambda = opts.use_exploration ? exploration_weight(t, b.lambda0, b.tau) : 0.0;
        const AcquisitionChoice next =
            argmax_acquisition(gp, embeddings, remaining, cr_est, lambda, b.acc_threshold);
        stop = record(next.index, false, lambda, next.score);
    }

    if (result.feasible.empty()) {
        result.diagnostic = "no evaluated configuration reached acc_threshold " + std::to_string(b.acc_threshold) +
                            " after " + std::to_string(result.evaluations()) + " evaluations";
    }
    return result;
}

}  // namespace kvpilot
