// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kvpilot/quantize.hpp"
#include "kvpilot/strategy.hpp"

namespace kvpilot {

/// How a flat symbol stream is split into fixed-width slabs: slab i holds
/// `slab_len` symbols of `slab_bits[i]` bits each.
struct SymbolLayout {
    std::size_t slab_len = 0;
    std::vector<std::uint8_t> slab_bits;

    std::size_t size() const { return slab_len * slab_bits.size(); }
    std::size_t packed_bits() const;
};

/// none: LSB-first bit packing at exactly the slab width.
/// rle_bitpack: byte-oriented run-length coding of the packed stream.
/// entropy: adaptive binary range coding, one bit-tree model per slab width.
std::vector<std::uint8_t> encode_symbols(std::span<const std::uint8_t> symbols,
                                         const SymbolLayout& layout, CodecKind codec);

/// Throws DecodeError on truncated or malformed input.
std::vector<std::uint8_t> decode_symbols(std::span<const std::uint8_t> payload,
                                         const SymbolLayout& layout, CodecKind codec);

// Building blocks, exposed for testing.
std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> symbols, const SymbolLayout& layout);
std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, const SymbolLayout& layout);
std::vector<std::uint8_t> rle_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> rle_decode(std::span<const std::uint8_t> encoded, std::size_t expected_size);

/// Compressed KV block. Every byte needed for reconstruction is in
/// `payload` or `metadata`; the compression ratio counts both.
struct CompressedBlob {
    std::vector<std::uint8_t> payload;
    std::vector<std::uint8_t> metadata;  ///< header, bit-width map, binary16 scales and zeros
    std::size_t original_bytes = 0;

    std::size_t metadata_bytes() const { return metadata.size(); }
    std::size_t compressed_bytes() const { return payload.size() + metadata.size(); }
    double compression_ratio() const {
        return static_cast<double>(original_bytes) / static_cast<double>(compressed_bytes());
    }
};

/// `strategy_tag` is stored in the header so a blob cannot be decompressed
/// under a different strategy.
CompressedBlob encode_lossless(const QuantizedTensor& qt, const CodecConfig& codec,
                               std::uint32_t strategy_tag = 0);

struct DecodedBlob {
    QuantizedTensor quantized;
    std::uint32_t strategy_tag = 0;
};

DecodedBlob decode_lossless(const CompressedBlob& blob, const CodecConfig& codec);

}  // namespace kvpilot
