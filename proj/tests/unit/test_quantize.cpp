#include "doctest.h"

#include <random>

#include "kvpilot/error.hpp"
#include "kvpilot/half.hpp"
#include "kvpilot/quantize.hpp"

using namespace kvpilot;

namespace {

QuantConfig uniform(int bits, int group) {
    QuantConfig q;
    q.kind = QuantKind::uniform_group;
    q.bits = bits;
    q.group_size = group;
    return q;
}

KVTensor row(std::vector<double> v) {
    const std::size_t n = v.size();
    return KVTensor(KVShape{1, 1, 1, n}, std::move(v), {0.5});
}

}  // namespace

TEST_CASE("classify_heads picks the top-k with index tie-break") {
    KVTensor x(KVShape{1, 4, 1, 1}, {0, 0, 0, 0}, {0.9, 0.1, 0.5, 0.5});
    auto labels = classify_heads(x, 0.5);
    CHECK(labels[0] == HeadClass::retrieval);
    CHECK(labels[1] == HeadClass::streaming);
    CHECK(labels[2] == HeadClass::retrieval);
    CHECK(labels[3] == HeadClass::streaming);

    for (auto l : classify_heads(x, 0.0)) CHECK(l == HeadClass::streaming);
    for (auto l : classify_heads(x, 1.0)) CHECK(l == HeadClass::retrieval);
    // ceil(0.3 * 4) = 2
    auto partial = classify_heads(x, 0.3);
    CHECK(std::count(partial.begin(), partial.end(), HeadClass::retrieval) == 2);
}

TEST_CASE("exactly representable group quantizes losslessly") {
    const auto x = row({0, 1, 2, 3});
    const auto qt = quantize(x, uniform(2, 4));
    CHECK(qt.symbols == std::vector<std::uint8_t>{0, 1, 2, 3});
    CHECK(half::to_double(qt.scales[0]) == 1.0);
    CHECK(half::to_double(qt.zeros[0]) == 0.0);
    const auto back = dequantize(qt, uniform(2, 4));
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.values()[i] == x.values()[i]);
}

TEST_CASE("constant group stores zero scale and reconstructs exactly") {
    for (int bits : {1, 2, 4, 8}) {
        const auto x = row({5, 5, 5, 5});
        const auto qt = quantize(x, uniform(bits, 4));
        CHECK(qt.scales[0] == 0);
        for (auto s : qt.symbols) CHECK(s == 0);
        const auto back = dequantize(qt, uniform(bits, 4));
        for (double v : back.values()) CHECK(v == 5.0);
    }
}

TEST_CASE("reconstruction error is at most half the stored scale") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> offset(-20.0, 20.0);
    std::lognormal_distribution<double> spread(0.0, 1.5);
    const int group = 32;
    const std::size_t groups = 10000;
    std::vector<double> v(groups * group);
    for (std::size_t g = 0; g < groups; ++g) {
        const double mu = offset(rng);
        const double sd = spread(rng);
        for (int i = 0; i < group; ++i) v[g * group + i] = mu + sd * n(rng);
    }
    KVTensor x(KVShape{1, 1, groups, static_cast<std::size_t>(group)}, v, {0.5});
    for (int bits : {1, 2, 4, 8}) {
        const auto q = uniform(bits, group);
        const auto qt = quantize(x, q);
        const auto back = dequantize(qt, q);
        const int top = (1 << bits) - 1;
        std::size_t violations = 0;
        for (std::size_t g = 0; g < groups; ++g) {
            const double scale = half::to_double(qt.scales[g]);
            for (int i = 0; i < group; ++i) {
                const std::size_t k = g * group + i;
                CHECK(qt.symbols[k] <= top);
                if (std::fabs(back.values()[k] - x.values()[k]) > scale / 2 + 1e-6) ++violations;
            }
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("mixed-head quantization uses per-class widths and counts the class map") {
    KVTensor x(KVShape{1, 4, 2, 8}, std::vector<double>(64, 0.0), {0.9, 0.1, 0.5, 0.5});
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : x.values()) v = n(rng);
    QuantConfig q;
    q.kind = QuantKind::mixed_head;
    q.high_bits = 8;
    q.low_bits = 2;
    q.group_size = 4;
    q.retrieval_fraction = 0.5;
    const auto qt = quantize(x, q);
    CHECK(qt.head_bits == std::vector<std::uint8_t>{8, 2, 8, 2});
    CHECK(qt.metadata_bits() == qt.num_groups() * 32 + 4);
    for (std::size_t i = 16; i < 32; ++i) CHECK(qt.symbols[i] <= 3);

    const auto uq = quantize(x, uniform(4, 4));
    CHECK(uq.metadata_bits() == uq.num_groups() * 32);
}

TEST_CASE("quantizer config errors") {
    const auto x = row({0, 1, 2, 3});
    CHECK_THROWS_AS(quantize(x, uniform(0, 4)), ConfigError);
    CHECK_THROWS_AS(quantize(x, uniform(9, 4)), ConfigError);
    CHECK_THROWS_AS(quantize(x, uniform(2, 3)), ConfigError);
    auto qt = quantize(x, uniform(2, 4));
    qt.scales.pop_back();
    CHECK_THROWS_AS(dequantize(qt, uniform(2, 4)), DimensionError);
    CHECK_THROWS_AS(dequantize(quantize(x, uniform(2, 4)), uniform(2, 2)), DimensionError);
}

TEST_CASE("binary16 directed rounding brackets the input") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-60000.0, 60000.0);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, -static_cast<double>(rng() % 9));
        const double lo = half::to_double(half::from_double_down(v));
        const double hi = half::to_double(half::from_double_up(v));
        CHECK(lo <= v);
        CHECK(hi >= v);
        const double near = half::to_double(half::from_double_nearest(v));
        CHECK((near == lo || near == hi));
    }
    CHECK(half::to_double(half::from_double_nearest(1.0)) == 1.0);
    CHECK(half::to_double(half::from_double_nearest(65504.0)) == 65504.0);
    CHECK_THROWS_AS(half::from_double_nearest(1e6), NumericError);
}
