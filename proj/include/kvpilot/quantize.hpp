// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/strategy.hpp"

namespace kvpilot {

enum class HeadClass : std::uint8_t { streaming = 0, retrieval = 1 };

/// Labels the ceil(rho * layers * heads) most important heads as retrieval
/// heads. Equal importance is broken by flat (layer, head) index ascending.
std::vector<HeadClass> classify_heads(const KVTensor& x, double rho);

/// Quantizer output: one symbol per element plus the per-group metadata
/// needed to reconstruct it.
struct QuantizedTensor {
    KVShape shape;
    QuantKind kind = QuantKind::uniform_group;
    int group_size = 1;
    std::vector<std::uint8_t> head_bits;      ///< bit width of every (layer, head) slab
    std::vector<HeadClass> head_classes;      ///< mixed_head only
    std::vector<std::uint8_t> symbols;        ///< tensor order
    std::vector<std::uint16_t> scales;        ///< binary16, one per group
    std::vector<std::uint16_t> zeros;         ///< binary16, one per group

    std::size_t num_groups() const { return shape.num_elements() / group_size; }
    /// 16 bits of scale and 16 bits of zero per group, plus one class bit per
    /// head for mixed_head.
    std::size_t metadata_bits() const;
};

/// Per-group asymmetric uniform quantization. Each run of `group_size`
/// consecutive channels of one token row is one group. The zero point is the
/// group minimum rounded down to binary16 and the scale is
/// (max - zero) / (2^b - 1) rounded up to binary16, so every symbol lies in
/// [0, 2^b - 1] and the reconstruction error of each element is at most half
/// the stored scale. A group whose values all equal a binary16 value stores
/// scale = 0 and reconstructs that value exactly.
///
/// `labels` is only consulted for mixed_head; when empty the heads are
/// classified from `x.head_importance()`.
QuantizedTensor quantize(const KVTensor& x, const QuantConfig& q,
                         std::span<const HeadClass> labels = {});

/// zero + symbol * scale for every element. Head importance of the result is
/// zero-filled.
KVTensor dequantize(const QuantizedTensor& qt, const QuantConfig& q);

}  // namespace kvpilot
