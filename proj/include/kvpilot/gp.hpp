// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace kvpilot {

/// Fixed hyperparameters of the squared-exponential kernel
/// k(a, b) = signal_variance * exp(-|a - b|^2 / (2 * length_scale^2)).
struct GpParams {
    double length_scale = 0.5;
    double signal_variance = 0.05;
    double noise_variance = 1e-4;
    double max_jitter = 1e-4;  ///< extra diagonal tried before giving up

    bool operator==(const GpParams&) const = default;
};

/// Zero-mean GP on targets centred by their mean. Holds the Cholesky factor
/// of K + (noise + jitter) I so each prediction costs O(n^2).
struct GpState {
    GpParams params;
    Eigen::MatrixXd inputs;  ///< one row per observation
    Eigen::VectorXd targets;
    double prior_mean = 0.0;
    double jitter = 0.0;     ///< diagonal added on top of the noise variance
    Eigen::MatrixXd chol_lower;
    Eigen::VectorXd alpha;   ///< (K + s I)^-1 (y - prior_mean)
};

struct GpPrediction {
    double mean = 0.0;
    double std = 0.0;
};

double se_kernel(std::span<const double> a, std::span<const double> b, const GpParams& p);

/// Throws Error on empty input or ragged rows and NumericError when the
/// kernel matrix stays indefinite at max_jitter.
GpState gp_fit(const std::vector<std::vector<double>>& inputs, const std::vector<double>& targets,
               const GpParams& params = {});

/// Posterior mean and standard deviation; the variance is clamped at 0.
GpPrediction gp_predict(const GpState& gp, std::span<const double> x);

}  // namespace kvpilot
