#include "doctest.h"

#include <cmath>
#include <random>

#include "kvpilot/error.hpp"
#include "kvpilot/gp.hpp"

using namespace kvpilot;

namespace {

// Gauss-Jordan with partial pivoting; returns A^-1 b.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
    return b;
}

double k_se(double a, double b, const GpParams& p) {
    return p.signal_variance * std::exp(-(a - b) * (a - b) / (2 * p.length_scale * p.length_scale));
}

}  // namespace

TEST_CASE("interpolates a single training point") {
    GpParams p;
    p.noise_variance = 1e-6;
    const auto gp = gp_fit({{0.3, 0.7}}, {0.8}, p);
    const std::vector<double> x{0.3, 0.7};
    const auto pr = gp_predict(gp, x);
    CHECK(std::abs(pr.mean - 0.8) <= 1e-3);
    CHECK(pr.std * pr.std <= 1e-3);
}

TEST_CASE("recovers the prior far from data") {
    GpParams p;
    const auto gp = gp_fit({{0.0}, {0.1}, {0.2}}, {0.5, 0.7, 0.9}, p);
    const std::vector<double> far{100.0};
    const auto pr = gp_predict(gp, far);
    CHECK(pr.mean == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(pr.std * pr.std == doctest::Approx(p.signal_variance).epsilon(1e-9));
}

TEST_CASE("matches a dense-solve oracle on a 1-D toy set") {
    GpParams p;
    const std::vector<double> xs{0.0, 0.2, 0.45, 0.7, 1.0};
    const std::vector<double> ys{0.95, 0.91, 0.80, 0.62, 0.40};
    std::vector<std::vector<double>> in;
    for (double x : xs) in.push_back({x});
    const auto gp = gp_fit(in, ys, p);
    CHECK(gp.jitter == 0.0);

    double mu0 = 0;
    for (double y : ys) mu0 += y;
    mu0 /= ys.size();
    std::vector<std::vector<double>> k(5, std::vector<double>(5));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) k[i][j] = k_se(xs[i], xs[j], p) + (i == j ? p.noise_variance : 0.0);
    std::vector<double> centred(5);
    for (int i = 0; i < 5; ++i) centred[i] = ys[i] - mu0;
    const auto alpha = dense_solve(k, centred);

    for (double q : {-0.3, 0.0, 0.1, 0.33, 0.5, 0.85, 1.0, 1.4}) {
        std::vector<double> ks(5);
        for (int i = 0; i < 5; ++i) ks[i] = k_se(q, xs[i], p);
        double mean = mu0;
        for (int i = 0; i < 5; ++i) mean += ks[i] * alpha[i];
        const auto w = dense_solve(k, ks);
        double var = p.signal_variance;
        for (int i = 0; i < 5; ++i) var -= ks[i] * w[i];
        const std::vector<double> x{q};
        const auto pr = gp_predict(gp, x);
        CHECK(std::abs(pr.mean - mean) <= 1e-8);
        CHECK(std::abs(pr.std * pr.std - std::max(var, 0.0)) <= 1e-8);
    }
}

TEST_CASE("interpolation tightens as noise vanishes") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> in;
    std::vector<double> ys;
    for (int i = 0; i < 8; ++i) {
        in.push_back({u(rng), u(rng), u(rng)});
        ys.push_back(u(rng));
    }
    double prev = 1e9;
    for (double noise : {1e-2, 1e-4, 1e-6, 1e-8}) {
        GpParams p;
        p.noise_variance = noise;
        const auto gp = gp_fit(in, ys, p);
        double worst = 0;
        for (std::size_t i = 0; i < in.size(); ++i) worst = std::max(worst, std::abs(gp_predict(gp, in[i]).mean - ys[i]));
        CHECK(worst <= prev + 1e-12);
        prev = worst;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("duplicate inputs need jitter") {
    GpParams p;
    p.noise_variance = 0.0;
    const auto gp = gp_fit({{0.5}, {0.5}}, {0.1, 0.2}, p);
    CHECK(gp.jitter > 0.0);
    CHECK(gp.jitter <= p.max_jitter);

    p.max_jitter = 0.0;
    CHECK_THROWS_AS(gp_fit({{0.5}, {0.5}}, {0.1, 0.2}, p), NumericError);
}

TEST_CASE("posterior variance is never negative") {
    GpParams p;
    p.noise_variance = 0.0;
    std::vector<std::vector<double>> in;
    std::vector<double> ys;
    for (int i = 0; i < 30; ++i) {
        in.push_back({i * 1e-3});
        ys.push_back(i * 0.01);
    }
    const auto gp = gp_fit(in, ys, p);
    for (const auto& x : in) CHECK(gp_predict(gp, x).std >= 0.0);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(gp_fit({}, {}, {}), Error);
    CHECK_THROWS_AS(gp_fit({{0.0}, {0.0, 1.0}}, {1.0, 2.0}, {}), DimensionError);
    const auto gp = gp_fit({{0.0, 0.0}}, {1.0}, {});
    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS(gp_predict(gp, bad), DimensionError);
}
