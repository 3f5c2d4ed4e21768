// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kvpilot/strategy.hpp"

namespace kvpilot {

/// Axes of a strategy search space. Uniform candidates take (bits, group);
/// mixed candidates take (high, low, group, rho) and ignore `bits`. Mixed
/// combinations with high <= low are structurally invalid and skipped.
struct SpaceDef {
    std::vector<TransformKind> transforms{TransformKind::identity, TransformKind::delta,
                                           TransformKind::hadamard};
    std::vector<QuantKind> quant_kinds{QuantKind::uniform_group, QuantKind::mixed_head};
    std::vector<CodecKind> codecs{CodecKind::none, CodecKind::rle_bitpack, CodecKind::entropy};
    std::vector<int> bits{2, 3, 4, 5, 6, 8};
    std::vector<int> group_sizes{32, 64, 128};
    std::vector<int> high_bits{6, 8};
    std::vector<int> low_bits{2, 3, 4};
    std::vector<double> retrieval_fractions{0.25, 0.5, 0.75};

    /// Throws ConfigError naming the first empty or out-of-range axis.
    void validate() const;

    bool operator==(const SpaceDef&) const = default;
};

/// Candidate count of the default SpaceDef.
inline constexpr std::size_t kDefaultSpaceSize = 648;

/// Enumerated candidates in a fixed order: transform, then quantizer
/// (uniform before mixed, numeric axes nested in declaration order), then
/// codec innermost.
class StrategySpace {
public:
    explicit StrategySpace(SpaceDef def);

    const SpaceDef& def() const { return def_; }
    const std::vector<StrategyConfig>& candidates() const { return candidates_; }
    std::size_t size() const { return candidates_.size(); }
    const StrategyConfig& operator[](std::size_t i) const { return candidates_[i]; }

    /// Index of `c`, or npos when it is not a member.
    std::size_t index_of(const StrategyConfig& c) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// One-hot(transform) ++ one-hot(quant kind) ++ one-hot(codec) ++
    /// min-max(bits, group, high, low, rho). Numeric axes that do not apply
    /// to a candidate's quantizer are 0.
    std::vector<double> encode(const StrategyConfig& c) const;
    std::size_t embedding_dim() const;

private:
    SpaceDef def_;
    std::vector<StrategyConfig> candidates_;
    std::unordered_map<std::string, std::size_t> index_;
};

StrategySpace enumerate_space(const SpaceDef& def);

/// Throws ConfigError when `c` is not in `space`.
std::vector<double> encode_config(const StrategyConfig& c, const StrategySpace& space);

/// Embeddings of all candidates, one row each.
std::vector<std::vector<double>> encode_space(const StrategySpace& space);

/// Structure-free 1-D embedding: candidate i maps to pi(i)/(n-1) for a
/// seeded random permutation pi. Used by the encoding ablation.
std::vector<std::vector<double>> random_index_embedding(std::size_t n, std::uint64_t seed);

}  // namespace kvpilot
