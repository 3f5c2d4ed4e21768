#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kvpilot/error.hpp"
#include "kvpilot/pipeline.hpp"
#include "kvpilot/quantize.hpp"
#include "kvpilot/transform.hpp"

using namespace kvpilot;

namespace {

StrategyConfig uniform(TransformKind t, int bits, int group, CodecKind c) {
    StrategyConfig s;
    s.transform.kind = t;
    s.quant.kind = QuantKind::uniform_group;
    s.quant.bits = bits;
    s.quant.group_size = group;
    s.codec.kind = c;
    return s;
}

StrategyConfig mixed(TransformKind t, int hi, int lo, int group, double rho, CodecKind c) {
    StrategyConfig s;
    s.transform.kind = t;
    s.quant.kind = QuantKind::mixed_head;
    s.quant.high_bits = hi;
    s.quant.low_bits = lo;
    s.quant.group_size = group;
    s.quant.retrieval_fraction = rho;
    s.codec.kind = c;
    return s;
}

GeneratorParams small_params(std::uint64_t seed) {
    GeneratorParams p;
    p.shape = {2, 4, 32, 64};
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("measured CR follows the metadata-aware formula") {
    GeneratorParams p;
    p.shape = {4, 8, 256, 128};  // 2 MiB of 16-bit source
    const auto x = generate_kv(p);
    const auto c2 = compress(x, uniform(TransformKind::identity, 2, 32, CodecKind::none));
    CHECK(std::fabs(c2.metrics.cr - 16.0 / 3.0) / (16.0 / 3.0) < 0.05);
    const auto c4 = compress(x, uniform(TransformKind::identity, 4, 32, CodecKind::none));
    CHECK(std::fabs(c4.metrics.cr - 3.2) / 3.2 < 0.05);
    CHECK(c2.metrics.cr == doctest::Approx(c2.blob.compression_ratio()));
    CHECK(c2.metrics.s_enc > 0);
}

TEST_CASE("end-to-end error is exactly the quantization error") {
    const auto x = generate_kv(small_params(4));
    for (auto t : {TransformKind::identity, TransformKind::delta, TransformKind::hadamard}) {
        for (auto c : {CodecKind::none, CodecKind::rle_bitpack, CodecKind::entropy}) {
            for (const auto& s : {uniform(t, 3, 16, c), mixed(t, 8, 2, 32, 0.25, c)}) {
                const auto out = decompress(compress(x, s).blob, s).tensor;
                const auto expect = invert_transform(
                    dequantize(quantize(apply_transform(x, s.transform), s.quant), s.quant), s.transform);
                double worst = 0;
                for (std::size_t i = 0; i < out.values().size(); ++i) {
                    worst = std::max(worst, std::fabs(out.values()[i] - expect.values()[i]));
                }
                CHECK(worst < 1e-5);
                CHECK(out.shape() == x.shape());
            }
        }
    }
}

TEST_CASE("8-bit identity path reproduces the quantized reconstruction") {
    const auto x = generate_kv(small_params(5));
    const auto s8 = uniform(TransformKind::identity, 8, 32, CodecKind::none);
    const auto out = decompress(compress(x, s8).blob, s8).tensor;
    const auto direct = dequantize(quantize(x, s8.quant), s8.quant);
    CHECK(std::equal(out.values().begin(), out.values().end(), direct.values().begin()));
    const auto s2 = uniform(TransformKind::identity, 2, 32, CodecKind::none);
    const auto out2 = decompress(compress(x, s2).blob, s2).tensor;
    CHECK(quality_score(x, out) >= quality_score(x, out2));
}

TEST_CASE("decompress refuses a blob from another strategy") {
    const auto x = generate_kv(small_params(6));
    const auto a = uniform(TransformKind::identity, 4, 32, CodecKind::none);
    auto b = a;
    b.transform.kind = TransformKind::hadamard;
    const auto blob = compress(x, a).blob;
    CHECK_THROWS_AS(decompress(blob, b), DecodeError);
    auto c = a;
    c.quant.bits = 3;
    CHECK_THROWS_AS(decompress(blob, c), DecodeError);
}

TEST_CASE("quality_score anchors") {
    const auto x = generate_kv(small_params(7));
    CHECK(quality_score(x, x) == 1.0);
    KVTensor zero(x.shape());
    CHECK(quality_score(x, zero) == doctest::Approx(0.0).epsilon(1e-12));
    KVTensor other(KVShape{1, 1, 1, 1});
    CHECK_THROWS_AS(quality_score(x, other), DimensionError);
}

TEST_CASE("quality never drops and CR never rises as bits increase") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto x = generate_kv(small_params(1000 + seed));
        for (auto t : {TransformKind::identity, TransformKind::hadamard}) {
            double prev_q = -1, prev_cr = 1e9;
            for (int bits : {2, 4, 8}) {
                const auto m = run_pipeline(x, uniform(t, bits, 32, CodecKind::none));
                CHECK(m.quality >= prev_q);
                CHECK(m.cr <= prev_cr * 1.0001);
                prev_q = m.quality;
                prev_cr = m.cr;
            }
        }
    }
}

TEST_CASE("CR ranking of a fixed strategy set is stable across tensors") {
    const std::vector<StrategyConfig> set{
        uniform(TransformKind::identity, 8, 32, CodecKind::none),
        uniform(TransformKind::identity, 4, 32, CodecKind::rle_bitpack),
        uniform(TransformKind::hadamard, 4, 64, CodecKind::entropy),
        mixed(TransformKind::identity, 8, 2, 32, 0.5, CodecKind::none),
        uniform(TransformKind::identity, 2, 32, CodecKind::none),
        uniform(TransformKind::hadamard, 2, 64, CodecKind::entropy),
    };
    std::vector<std::size_t> reference;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x = generate_kv(small_params(500 + seed));
        std::vector<double> cr;
        for (const auto& s : set) cr.push_back(compress(x, s).metrics.cr);
        std::vector<std::size_t> order(set.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cr[a] < cr[b]; });
        // Kendall tau of 1 means the permutation is identical.
        if (reference.empty()) reference = order;
        CHECK(order == reference);
    }
}

TEST_CASE("harmonic throughput") {
    CHECK(harmonic_throughput(2.0, 2.0) == 1.0);
    CHECK(harmonic_throughput(INFINITY, 3.0) == 3.0);
    ThroughputModel model;
    const auto [enc, dec] = model.throughput(uniform(TransformKind::identity, 2, 32, CodecKind::none));
    CHECK(enc == doctest::Approx(1e9 / 0.052));
    CHECK(dec == doctest::Approx(1e9 / 0.036));
    const auto m = run_pipeline(generate_kv(small_params(8)), uniform(TransformKind::identity, 2, 32, CodecKind::none));
    CHECK(m.s_p == doctest::Approx(enc * dec / (enc + dec)));
}

TEST_CASE("measured throughput mode reports positive rates") {
    ThroughputOptions opts;
    opts.mode = ThroughputMode::measured;
    opts.min_bytes = 1 << 16;
    const auto m = run_pipeline(generate_kv(small_params(9)), uniform(TransformKind::identity, 4, 32, CodecKind::none), opts);
    CHECK(m.s_enc > 0);
    CHECK(m.s_dec > 0);
    CHECK(m.s_p < std::min(m.s_enc, m.s_dec));
}
