// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/codec.hpp"

#include <array>
#include <cstring>

#include "kvpilot/error.hpp"
#include "kvpilot/rng.hpp"

namespace kvpilot {

std::size_t SymbolLayout::packed_bits() const {
    std::size_t bits = 0;
    for (auto b : slab_bits) bits += static_cast<std::size_t>(b) * slab_len;
    return bits;
}

// ---------------------------------------------------------------------------
// Bit packing

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> symbols, const SymbolLayout& layout) {
    if (symbols.size() != layout.size()) throw DimensionError("symbol count does not match layout");
    std::vector<std::uint8_t> out((layout.packed_bits() + 7) / 8, 0);
    std::size_t bitpos = 0;
    for (std::size_t slab = 0; slab < layout.slab_bits.size(); ++slab) {
        const unsigned width = layout.slab_bits[slab];
        const unsigned mask = (1u << width) - 1;
        for (std::size_t i = slab * layout.slab_len; i < (slab + 1) * layout.slab_len; ++i) {
            const unsigned v = symbols[i];
            if (v > mask) throw DimensionError("symbol exceeds its declared bit width");
            // A symbol spans at most two bytes since width <= 8.
            const std::size_t byte = bitpos >> 3;
            const unsigned shift = bitpos & 7;
            const unsigned word = v << shift;
            out[byte] |= static_cast<std::uint8_t>(word & 0xff);
            if (shift + width > 8) out[byte + 1] |= static_cast<std::uint8_t>(word >> 8);
            bitpos += width;
        }
    }
    return out;
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, const SymbolLayout& layout) {
    if (packed.size() != (layout.packed_bits() + 7) / 8) {
        throw DecodeError("packed stream length does not match layout");
    }
    std::vector<std::uint8_t> out(layout.size());
    std::size_t bitpos = 0;
    for (std::size_t slab = 0; slab < layout.slab_bits.size(); ++slab) {
        const unsigned width = layout.slab_bits[slab];
        const unsigned mask = (1u << width) - 1;
        for (std::size_t i = slab * layout.slab_len; i < (slab + 1) * layout.slab_len; ++i) {
            const std::size_t byte = bitpos >> 3;
            const unsigned shift = bitpos & 7;
            unsigned word = packed[byte];
            if (shift + width > 8) word |= static_cast<unsigned>(packed[byte + 1]) << 8;
            out[i] = static_cast<std::uint8_t>((word >> shift) & mask);
            bitpos += width;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// PackBits-style run-length coding. Control byte c: c < 128 copies c + 1
// literal bytes, c > 128 repeats the next byte 257 - c times, 128 is invalid.

std::vector<std::uint8_t> rle_encode(std::span<const std::uint8_t> d) {
    std::vector<std::uint8_t> out;
    out.reserve(d.size() / 4 + 16);
    std::size_t i = 0;
    const std::size_t n = d.size();
    while (i < n) {
        std::size_t run = 1;
        while (i + run < n && run < 128 && d[i + run] == d[i]) ++run;
        if (run >= 2) {
            out.push_back(static_cast<std::uint8_t>(257 - run));
            out.push_back(d[i]);
            i += run;
            continue;
        }
        const std::size_t start = i;
        std::size_t len = 0;
        while (i < n && len < 128) {
            if (i + 1 < n && d[i] == d[i + 1]) break;
            ++i;
            ++len;
        }
        out.push_back(static_cast<std::uint8_t>(len - 1));
        out.insert(out.end(), d.begin() + start, d.begin() + start + len);
    }
    return out;
}

std::vector<std::uint8_t> rle_decode(std::span<const std::uint8_t> e, std::size_t expected_size) {
    std::vector<std::uint8_t> out;
    out.reserve(expected_size);
    std::size_t i = 0;
    while (i < e.size()) {
        const unsigned c = e[i++];
        if (c < 128) {
            const std::size_t len = c + 1;
            if (i + len > e.size()) throw DecodeError("run-length literal overruns payload");
            out.insert(out.end(), e.begin() + i, e.begin() + i + len);
            i += len;
        } else if (c > 128) {
            if (i >= e.size()) throw DecodeError("run-length repeat missing its byte");
            out.insert(out.end(), 257 - c, e[i++]);
        } else {
            throw DecodeError("invalid run-length control byte");
        }
        if (out.size() > expected_size) throw DecodeError("run-length output exceeds expected size");
    }
    if (out.size() != expected_size) throw DecodeError("run-length output shorter than expected");
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive binary range coder (LZMA style: 11-bit probabilities, shift-5
// adaptation, carry propagated through a pending 0xFF run).

namespace {

constexpr unsigned kProbBits = 11;
constexpr std::uint16_t kProbInit = 1u << (kProbBits - 1);
constexpr unsigned kMoveBits = 5;
constexpr std::uint32_t kTop = 1u << 24;

class RangeEncoder {
public:
    void encode(std::uint16_t& prob, unsigned bit) {
        const std::uint32_t bound = (range_ >> kProbBits) * prob;
        if (bit == 0) {
            range_ = bound;
            prob = static_cast<std::uint16_t>(prob + (((1u << kProbBits) - prob) >> kMoveBits));
        } else {
            low_ += bound;
            range_ -= bound;
            prob = static_cast<std::uint16_t>(prob - (prob >> kMoveBits));
        }
        while (range_ < kTop) {
            range_ <<= 8;
            shift_low();
        }
    }

    std::vector<std::uint8_t> finish() {
        for (int i = 0; i < 5; ++i) shift_low();
        return std::move(out_);
    }

private:
    void shift_low() {
        if (static_cast<std::uint32_t>(low_) < 0xff000000u || (low_ >> 32) != 0) {
            const auto carry = static_cast<std::uint8_t>(low_ >> 32);
            std::uint8_t temp = cache_;
            do {
                out_.push_back(static_cast<std::uint8_t>(temp + carry));
                temp = 0xff;
            } while (--cache_size_ != 0);
            cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
        }
        ++cache_size_;
        low_ = (low_ & 0x00ffffffu) << 8;
    }

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xffffffffu;
    std::uint8_t cache_ = 0;
    std::uint64_t cache_size_ = 1;
    std::vector<std::uint8_t> out_;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const std::uint8_t> in) : in_(in) {
        if (in_.size() < 5 || in_[0] != 0) throw DecodeError("range-coded payload has a bad preamble");
        pos_ = 1;
        for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
    }

    unsigned decode(std::uint16_t& prob) {
        const std::uint32_t bound = (range_ >> kProbBits) * prob;
        unsigned bit;
        if (code_ < bound) {
            range_ = bound;
            prob = static_cast<std::uint16_t>(prob + (((1u << kProbBits) - prob) >> kMoveBits));
            bit = 0;
        } else {
            code_ -= bound;
            range_ -= bound;
            prob = static_cast<std::uint16_t>(prob - (prob >> kMoveBits));
            bit = 1;
        }
        while (range_ < kTop) {
            range_ <<= 8;
            code_ = (code_ << 8) | next();
        }
        return bit;
    }

private:
    std::uint32_t next() {
        if (pos_ >= in_.size()) throw DecodeError("range-coded payload is truncated");
        return in_[pos_++];
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    std::uint32_t code_ = 0;
    std::uint32_t range_ = 0xffffffffu;
};

// One bit-tree model per width: an adaptive order-0 model over 2^width symbols.
struct BitTreeModels {
    std::array<std::vector<std::uint16_t>, 9> trees;
    std::vector<std::uint16_t>& for_width(unsigned width) {
        auto& t = trees[width];
        if (t.empty()) t.assign(std::size_t{1} << width, kProbInit);
        return t;
    }
};

std::vector<std::uint8_t> entropy_encode(std::span<const std::uint8_t> symbols, const SymbolLayout& layout) {
    RangeEncoder enc;
    BitTreeModels models;
    for (std::size_t slab = 0; slab < layout.slab_bits.size(); ++slab) {
        const unsigned width = layout.slab_bits[slab];
        auto& tree = models.for_width(width);
        for (std::size_t i = slab * layout.slab_len; i < (slab + 1) * layout.slab_len; ++i) {
            const unsigned v = symbols[i];
            if (v >> width) throw DimensionError("symbol exceeds its declared bit width");
            unsigned node = 1;
            for (int b = static_cast<int>(width) - 1; b >= 0; --b) {
                const unsigned bit = (v >> b) & 1u;
                enc.encode(tree[node], bit);
                node = (node << 1) | bit;
            }
        }
    }
    return enc.finish();
}

std::vector<std::uint8_t> entropy_decode(std::span<const std::uint8_t> payload, const SymbolLayout& layout) {
    RangeDecoder dec(payload);
    BitTreeModels models;
    std::vector<std::uint8_t> out(layout.size());
    for (std::size_t slab = 0; slab < layout.slab_bits.size(); ++slab) {
        const unsigned width = layout.slab_bits[slab];
        auto& tree = models.for_width(width);
        for (std::size_t i = slab * layout.slab_len; i < (slab + 1) * layout.slab_len; ++i) {
            unsigned node = 1;
            for (unsigned b = 0; b < width; ++b) node = (node << 1) | dec.decode(tree[node]);
            out[i] = static_cast<std::uint8_t>(node - (1u << width));
        }
    }
    return out;
}

void check_layout(const SymbolLayout& layout) {
    for (auto b : layout.slab_bits) {
        if (b < 1 || b > 8) throw DimensionError("slab bit width must be in 1..8");
    }
}

}  // namespace

std::vector<std::uint8_t> encode_symbols(std::span<const std::uint8_t> symbols, const SymbolLayout& layout,
                                         CodecKind codec) {
    check_layout(layout);
    if (symbols.size() != layout.size()) throw DimensionError("symbol count does not match layout");
    switch (codec) {
        case CodecKind::none: return pack_bits(symbols, layout);
        case CodecKind::rle_bitpack: return rle_encode(pack_bits(symbols, layout));
        case CodecKind::entropy: return entropy_encode(symbols, layout);
    }
    throw ConfigError("unknown codec", "codec");
}

std::vector<std::uint8_t> decode_symbols(std::span<const std::uint8_t> payload, const SymbolLayout& layout,
                                         CodecKind codec) {
    check_layout(layout);
    switch (codec) {
        case CodecKind::none: return unpack_bits(payload, layout);
        case CodecKind::rle_bitpack:
            return unpack_bits(rle_decode(payload, (layout.packed_bits() + 7) / 8), layout);
        case CodecKind::entropy: return entropy_decode(payload, layout);
    }
    throw ConfigError("unknown codec", "codec");
}

// ---------------------------------------------------------------------------
// Blob framing. Metadata layout (little endian):
//
//   0  magic "KVPB"          4  format version (u8)   5  codec (u8)
//   6  quant kind (u8)       7  reserved (u8)
//   8  layers, heads, tokens, channels (u32 x4)
//  24  group size (u32)     28  strategy tag (u32)
//  32  payload length (u64) 40  payload checksum (u32)
//  44  width table: uniform -> bits (u8); mixed -> high, low (u8 x2) then the
//      head class bit map, ceil(layers*heads / 8) bytes, LSB first
//      then per group: scale (u16), zero (u16)

namespace {

constexpr std::uint8_t kBlobVersion = 1;
constexpr std::size_t kHeaderBytes = 44;

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (pos_ + n > in_.size()) throw DecodeError("blob metadata is truncated");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::uint64_t get(int n) {
        if (pos_ + static_cast<std::size_t>(n) > in_.size()) throw DecodeError("blob metadata is truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint32_t checksum32(std::span<const std::uint8_t> bytes) {
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    return static_cast<std::uint32_t>(h ^ (h >> 32));
}

SymbolLayout layout_of(const QuantizedTensor& qt) {
    SymbolLayout layout;
    layout.slab_len = qt.shape.slab_size();
    layout.slab_bits = qt.head_bits;
    return layout;
}

}  // namespace

CompressedBlob encode_lossless(const QuantizedTensor& qt, const CodecConfig& codec, std::uint32_t strategy_tag) {
    const KVShape& s = qt.shape;
    CompressedBlob blob;
    blob.original_bytes = s.num_elements() * kSourceBits / 8;
    blob.payload = encode_symbols(qt.symbols, layout_of(qt), codec.kind);

    auto& meta = blob.metadata;
    meta.reserve(kHeaderBytes + 3 + s.num_heads() / 8 + qt.scales.size() * 4);
    ByteWriter w(meta);
    for (char c : {'K', 'V', 'P', 'B'}) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kBlobVersion);
    w.u8(static_cast<std::uint8_t>(codec.kind));
    w.u8(static_cast<std::uint8_t>(qt.kind));
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(s.layers));
    w.u32(static_cast<std::uint32_t>(s.heads));
    w.u32(static_cast<std::uint32_t>(s.tokens));
    w.u32(static_cast<std::uint32_t>(s.channels));
    w.u32(static_cast<std::uint32_t>(qt.group_size));
    w.u32(strategy_tag);
    w.u64(blob.payload.size());
    w.u32(checksum32(blob.payload));
    if (qt.kind == QuantKind::uniform_group) {
        w.u8(qt.head_bits.empty() ? 0 : qt.head_bits[0]);
    } else {
        std::uint8_t hi = 0, lo = 0;
        for (std::size_t h = 0; h < qt.head_bits.size(); ++h) {
            (qt.head_classes[h] == HeadClass::retrieval ? hi : lo) = qt.head_bits[h];
        }
        // Widths are only recorded for classes that occur; keep the pair ordered.
        if (hi == 0) hi = static_cast<std::uint8_t>(lo + 1);
        if (lo == 0) lo = static_cast<std::uint8_t>(hi - 1);
        w.u8(hi);
        w.u8(lo);
        std::vector<std::uint8_t> map((s.num_heads() + 7) / 8, 0);
        for (std::size_t h = 0; h < s.num_heads(); ++h) {
            if (qt.head_classes[h] == HeadClass::retrieval) map[h / 8] |= static_cast<std::uint8_t>(1u << (h % 8));
        }
        for (auto b : map) w.u8(b);
    }
    for (std::size_t g = 0; g < qt.scales.size(); ++g) {
        w.u16(qt.scales[g]);
        w.u16(qt.zeros[g]);
    }
    return blob;
}

DecodedBlob decode_lossless(const CompressedBlob& blob, const CodecConfig& codec) {
    ByteReader r(blob.metadata);
    const auto magic = r.bytes(4);
    if (std::memcmp(magic.data(), "KVPB", 4) != 0) throw DecodeError("blob metadata has a bad magic");
    if (r.u8() != kBlobVersion) throw DecodeError("unsupported blob version");
    const auto codec_kind = static_cast<CodecKind>(r.u8());
    if (codec_kind != codec.kind) throw DecodeError("blob was encoded with a different codec");
    const auto quant_kind = r.u8();
    if (quant_kind > 1) throw DecodeError("blob has an unknown quantizer kind");
    r.u8();

    DecodedBlob out;
    QuantizedTensor& qt = out.quantized;
    qt.kind = static_cast<QuantKind>(quant_kind);
    qt.shape.layers = r.u32();
    qt.shape.heads = r.u32();
    qt.shape.tokens = r.u32();
    qt.shape.channels = r.u32();
    qt.group_size = static_cast<int>(r.u32());
    out.strategy_tag = r.u32();
    const std::uint64_t payload_len = r.u64();
    const std::uint32_t checksum = r.u32();
    const KVShape& s = qt.shape;
    if (s.num_elements() == 0 || qt.group_size <= 0 || s.channels % qt.group_size != 0) {
        throw DecodeError("blob header describes an invalid shape");
    }
    if (payload_len != blob.payload.size() || checksum != checksum32(blob.payload)) {
        throw DecodeError("blob payload is corrupted");
    }

    if (qt.kind == QuantKind::uniform_group) {
        const std::uint8_t bits = r.u8();
        qt.head_bits.assign(s.num_heads(), bits);
    } else {
        const std::uint8_t hi = r.u8();
        const std::uint8_t lo = r.u8();
        const auto map = r.bytes((s.num_heads() + 7) / 8);
        qt.head_classes.resize(s.num_heads());
        qt.head_bits.resize(s.num_heads());
        for (std::size_t h = 0; h < s.num_heads(); ++h) {
            const bool retrieval = (map[h / 8] >> (h % 8)) & 1u;
            qt.head_classes[h] = retrieval ? HeadClass::retrieval : HeadClass::streaming;
            qt.head_bits[h] = retrieval ? hi : lo;
        }
    }
    const std::size_t groups = s.num_elements() / static_cast<std::size_t>(qt.group_size);
    qt.scales.resize(groups);
    qt.zeros.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        qt.scales[g] = r.u16();
        qt.zeros[g] = r.u16();
    }
    if (!r.done()) throw DecodeError("blob metadata has trailing bytes");
    qt.symbols = decode_symbols(blob.payload, layout_of(qt), codec.kind);
    return out;
}

}  // namespace kvpilot
