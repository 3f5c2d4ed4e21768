// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "kvpilot/codec.hpp"
#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/strategy.hpp"

namespace kvpilot {

struct PipelineMetrics {
    double cr = 0.0;
    double s_enc = 0.0;  ///< bytes/s of source data
    double s_dec = 0.0;
    double s_p = 0.0;    ///< harmonic combination s_enc*s_dec/(s_enc+s_dec)
    double quality = 0.0;
};

/// s_enc * s_dec / (s_enc + s_dec); infinite inputs collapse to the other one.
double harmonic_throughput(double s_enc, double s_dec);

struct CompressResult {
    CompressedBlob blob;
    PipelineMetrics metrics;  ///< cr and s_enc are filled in
};

/// Runs transform -> quantize -> lossless codec. `metrics.s_enc` is the
/// wall-clock throughput of this single call over the 16-bit source bytes.
CompressResult compress(const KVTensor& x, const StrategyConfig& s);

struct DecompressResult {
    KVTensor tensor;
    double s_dec = 0.0;
};

/// Full inverse pipeline. Throws when the blob was produced under a different
/// strategy or is corrupted.
DecompressResult decompress(const CompressedBlob& blob, const StrategyConfig& s);

/// max(0, 1 - RMSE(rec, orig) / RMS(orig)); exactly 1 when every element
/// matches within 1e-9.
double quality_score(const KVTensor& original, const KVTensor& reconstructed);

/// Deterministic per-stage cost model, in nanoseconds per source byte.
/// Used instead of wall-clock timing whenever outputs must be reproducible.
struct ThroughputModel {
    struct StageCost {
        double enc = 0.0;
        double dec = 0.0;
    };
    StageCost identity{0.0, 0.0};
    StageCost delta{0.016, 0.016};
    StageCost hadamard{0.04, 0.04};
    StageCost uniform_group{0.04, 0.024};
    StageCost mixed_head{0.048, 0.028};
    StageCost codec_none{0.012, 0.012};
    StageCost codec_rle{0.032, 0.024};
    StageCost codec_entropy{0.2, 0.22};

    /// (s_enc, s_dec) in bytes/s.
    std::pair<double, double> throughput(const StrategyConfig& s) const;

    bool operator==(const ThroughputModel&) const = default;
};

enum class ThroughputMode { model, measured };

struct ThroughputOptions {
    ThroughputMode mode = ThroughputMode::model;
    ThroughputModel model{};
    int repeats = 3;                              ///< median of this many timed runs
    std::size_t min_bytes = std::size_t{8} << 20; ///< source bytes per timed run
};

/// Pluggable quality evaluator; an empty oracle means quality_score.
using QualityOracle = std::function<double(const KVTensor& original, const KVTensor& reconstructed)>;

/// Compress, decompress and score `x`; throughput comes from `opts`.
PipelineMetrics run_pipeline(const KVTensor& x, const StrategyConfig& s, const ThroughputOptions& opts = {},
                             const QualityOracle& quality = {});

/// Lower 32 bits of the FNV-1a digest of the strategy id.
std::uint32_t strategy_tag(const StrategyConfig& s);

}  // namespace kvpilot
