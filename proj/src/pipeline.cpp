// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "kvpilot/error.hpp"
#include "kvpilot/quantize.hpp"
#include "kvpilot/rng.hpp"
#include "kvpilot/transform.hpp"

namespace kvpilot {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double rate(std::size_t bytes, double seconds) {
    // Timer resolution floor so a tiny tensor never reports infinity.
    return static_cast<double>(bytes) / std::max(seconds, 1e-9);
}

void check_blob_matches(const QuantizedTensor& qt, const StrategyConfig& s) {
    if (qt.kind != s.quant.kind || qt.group_size != s.quant.group_size) {
        throw DecodeError("blob quantizer does not match strategy " + s.id());
    }
    for (std::size_t h = 0; h < qt.head_bits.size(); ++h) {
        const int bits = qt.head_bits[h];
        const bool ok = s.quant.kind == QuantKind::uniform_group
                            ? bits == s.quant.bits
                            : bits == (qt.head_classes[h] == HeadClass::retrieval ? s.quant.high_bits
                                                                                   : s.quant.low_bits);
        if (!ok) throw DecodeError("blob bit widths do not match strategy " + s.id());
    }
}

}  // namespace

double harmonic_throughput(double s_enc, double s_dec) {
    if (std::isinf(s_enc)) return s_dec;
    if (std::isinf(s_dec)) return s_enc;
    return s_enc * s_dec / (s_enc + s_dec);
}

std::uint32_t strategy_tag(const StrategyConfig& s) {
    const std::string id = s.id();
    return static_cast<std::uint32_t>(fnv1a64(id.data(), id.size()));
}

CompressResult compress(const KVTensor& x, const StrategyConfig& s) {
    s.validate_for(x.shape());
    const auto start = Clock::now();
    const KVTensor transformed = apply_transform(x, s.transform);
    const QuantizedTensor qt = quantize(transformed, s.quant, {});
    CompressResult out;
    out.blob = encode_lossless(qt, s.codec, strategy_tag(s));
    const double elapsed = seconds_since(start);
    out.metrics.cr = out.blob.compression_ratio();
    out.metrics.s_enc = rate(x.original_bytes(), elapsed);
    return out;
}

DecompressResult decompress(const CompressedBlob& blob, const StrategyConfig& s) {
    s.validate();
    const auto start = Clock::now();
    DecodedBlob decoded = decode_lossless(blob, s.codec);
    if (decoded.strategy_tag != strategy_tag(s)) {
        throw DecodeError("blob was produced under a different strategy than " + s.id());
    }
    check_blob_matches(decoded.quantized, s);
    const KVTensor deq = dequantize(decoded.quantized, s.quant);
    DecompressResult out{invert_transform(deq, s.transform), 0.0};
    out.s_dec = rate(blob.original_bytes, seconds_since(start));
    return out;
}

double quality_score(const KVTensor& original, const KVTensor& reconstructed) {
    if (original.shape() != reconstructed.shape()) {
        throw DimensionError("quality_score requires tensors of the same shape");
    }
    const auto a = original.values();
    const auto b = reconstructed.values();
    double err = 0.0;
    double energy = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = b[i] - a[i];
        err += d * d;
        energy += a[i] * a[i];
        max_abs = std::max(max_abs, std::fabs(d));
    }
    if (max_abs <= 1e-9) return 1.0;
    if (energy == 0.0) return 0.0;
    return std::max(0.0, 1.0 - std::sqrt(err / energy));
}

std::pair<double, double> ThroughputModel::throughput(const StrategyConfig& s) const {
    StageCost t = identity;
    if (s.transform.kind == TransformKind::delta) t = delta;
    if (s.transform.kind == TransformKind::hadamard) t = hadamard;
    const StageCost q = s.quant.kind == QuantKind::uniform_group ? uniform_group : mixed_head;
    StageCost c = codec_none;
    if (s.codec.kind == CodecKind::rle_bitpack) c = codec_rle;
    if (s.codec.kind == CodecKind::entropy) c = codec_entropy;
    const double enc_ns = t.enc + q.enc + c.enc;
    const double dec_ns = t.dec + q.dec + c.dec;
    auto to_rate = [](double ns) {
        return ns > 0.0 ? 1e9 / ns : std::numeric_limits<double>::infinity();
    };
    return {to_rate(enc_ns), to_rate(dec_ns)};
}

PipelineMetrics run_pipeline(const KVTensor& x, const StrategyConfig& s, const ThroughputOptions& opts,
                             const QualityOracle& quality) {
    CompressResult c = compress(x, s);
    DecompressResult d = decompress(c.blob, s);
    PipelineMetrics m;
    m.cr = c.metrics.cr;
    m.quality = quality ? quality(x, d.tensor) : quality_score(x, d.tensor);

    if (opts.mode == ThroughputMode::model) {
        std::tie(m.s_enc, m.s_dec) = opts.model.throughput(s);
    } else {
        const std::size_t bytes = std::max<std::size_t>(x.original_bytes(), 1);
        const std::size_t reps = std::max<std::size_t>(1, (opts.min_bytes + bytes - 1) / bytes);
        std::vector<double> enc, dec;
        for (int run = 0; run < std::max(1, opts.repeats); ++run) {
            auto start = Clock::now();
            for (std::size_t i = 0; i < reps; ++i) c = compress(x, s);
            enc.push_back(rate(bytes * reps, seconds_since(start)));
            start = Clock::now();
            for (std::size_t i = 0; i < reps; ++i) d = decompress(c.blob, s);
            dec.push_back(rate(bytes * reps, seconds_since(start)));
        }
        auto median = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        m.s_enc = median(enc);
        m.s_dec = median(dec);
    }
    m.s_p = harmonic_throughput(m.s_enc, m.s_dec);
    return m;
}

}  // namespace kvpilot
