// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "kvpilot/kv_tensor.hpp"

namespace kvpilot {

enum class TransformKind { identity, delta, hadamard };
enum class QuantKind { uniform_group, mixed_head };
enum class CodecKind { none, rle_bitpack, entropy };

std::string_view to_string(TransformKind k);
std::string_view to_string(QuantKind k);
std::string_view to_string(CodecKind k);
TransformKind parse_transform_kind(std::string_view s);
QuantKind parse_quant_kind(std::string_view s);
CodecKind parse_codec_kind(std::string_view s);

struct TransformConfig {
    TransformKind kind = TransformKind::identity;
    bool operator==(const TransformConfig&) const = default;
};

struct QuantConfig {
    QuantKind kind = QuantKind::uniform_group;
    int bits = 4;            ///< uniform_group only
    int group_size = 32;
    int high_bits = 8;       ///< mixed_head: retrieval heads
    int low_bits = 2;        ///< mixed_head: streaming heads
    double retrieval_fraction = 0.25;  ///< mixed_head: rho

    bool operator==(const QuantConfig&) const = default;
};

struct CodecConfig {
    CodecKind kind = CodecKind::none;
    bool operator==(const CodecConfig&) const = default;
};

/// One point of the compression strategy space.
///
/// The id grammar (whitespace is not allowed):
///
///     id        := "t=" transform ";q=" quant ";c=" codec
///     transform := "identity" | "delta" | "hadamard"
///     quant     := "uniform,b=" INT ",g=" INT
///                | "mixed,hi=" INT ",lo=" INT ",g=" INT ",rho=" REAL
///     codec     := "none" | "rle" | "entropy"
///
/// REAL is printed in shortest round-trip form, so parse(format(s)) == s
/// bit-exactly.
struct StrategyConfig {
    TransformConfig transform;
    QuantConfig quant;
    CodecConfig codec;

    std::string id() const;
    static StrategyConfig parse(std::string_view id);

    /// Field-range checks that do not depend on the tensor shape.
    void validate() const;
    /// Shape-dependent checks (group divides channels, Hadamard length).
    void validate_for(const KVShape& shape) const;

    bool operator==(const StrategyConfig&) const = default;
};

/// Metadata bits per group: one binary16 scale plus one binary16 zero point.
inline constexpr double kGroupMetadataBits = 32.0;

/// Stored bits per element, ignoring the lossless stage:
/// b + 32/g for uniform, rho*hi + (1-rho)*lo + 32/g for mixed.
double analytic_bits_per_element(const QuantConfig& q);

/// 16 / analytic_bits_per_element; the ratio of the codec=none layout.
double analytic_cr(const StrategyConfig& s);

}  // namespace kvpilot
