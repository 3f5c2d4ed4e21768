// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/gp.hpp"

#include <cmath>
#include <numeric>

#include "kvpilot/error.hpp"

namespace kvpilot {

double se_kernel(std::span<const double> a, std::span<const double> b, const GpParams& p) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return p.signal_variance * std::exp(-d2 / (2.0 * p.length_scale * p.length_scale));
}

GpState gp_fit(const std::vector<std::vector<double>>& inputs, const std::vector<double>& targets,
               const GpParams& params) {
    if (inputs.empty()) throw Error("gp_fit needs at least one observation");
    if (inputs.size() != targets.size()) throw DimensionError("gp_fit: inputs and targets differ in length");
    if (!(params.length_scale > 0.0) || !(params.signal_variance > 0.0) || params.noise_variance < 0.0) {
        throw ConfigError("kernel parameters must be positive", "gp");
    }
    const std::size_t n = inputs.size();
    const std::size_t d = inputs.front().size();
    GpState gp;
    gp.params = params;
    gp.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    gp.targets.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (inputs[i].size() != d) throw DimensionError("gp_fit: embeddings differ in dimension");
        for (std::size_t j = 0; j < d; ++j) gp.inputs(Eigen::Index(i), Eigen::Index(j)) = inputs[i][j];
        gp.targets(Eigen::Index(i)) = targets[i];
    }
    gp.prior_mean = gp.targets.mean();

    Eigen::MatrixXd k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = se_kernel(inputs[i], inputs[j], params);
            k(Eigen::Index(i), Eigen::Index(j)) = v;
            k(Eigen::Index(j), Eigen::Index(i)) = v;
        }
    }

    double jitter = 0.0;
    while (true) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += params.noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            gp.jitter = jitter;
            gp.chol_lower = llt.matrixL();
            const Eigen::VectorXd centred = gp.targets.array() - gp.prior_mean;
            gp.alpha = llt.solve(centred);
            return gp;
        }
        if (jitter >= params.max_jitter) break;
        jitter = jitter == 0.0 ? 1e-10 : std::min(jitter * 10.0, params.max_jitter);
    }
    throw NumericError("kernel matrix is not positive definite after jitter " +
                       std::to_string(params.max_jitter));
}

GpPrediction gp_predict(const GpState& gp, std::span<const double> x) {
    if (static_cast<Eigen::Index>(x.size()) != gp.inputs.cols()) {
        throw DimensionError("gp_predict: embedding dimension mismatch");
    }
    const Eigen::Index n = gp.inputs.rows();
    Eigen::VectorXd ks(n);
    std::vector<double> row(x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) row[j] = gp.inputs(i, Eigen::Index(j));
        ks(i) = se_kernel(row, x, gp.params);
    }
    GpPrediction out;
    out.mean = gp.prior_mean + ks.dot(gp.alpha);
    const Eigen::VectorXd v = gp.chol_lower.triangularView<Eigen::Lower>().solve(ks);
    const double var = gp.params.signal_variance - v.squaredNorm();
    out.std = std::sqrt(std::max(var, 0.0));
    return out;
}

}  // namespace kvpilot
