// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/strategy.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "kvpilot/error.hpp"

namespace kvpilot {

std::string_view to_string(TransformKind k) {
    switch (k) {
        case TransformKind::identity: return "identity";
        case TransformKind::delta: return "delta";
        case TransformKind::hadamard: return "hadamard";
    }
    return "?";
}

std::string_view to_string(QuantKind k) {
    return k == QuantKind::uniform_group ? "uniform" : "mixed";
}

std::string_view to_string(CodecKind k) {
    switch (k) {
        case CodecKind::none: return "none";
        case CodecKind::rle_bitpack: return "rle";
        case CodecKind::entropy: return "entropy";
    }
    return "?";
}

TransformKind parse_transform_kind(std::string_view s) {
    if (s == "identity") return TransformKind::identity;
    if (s == "delta") return TransformKind::delta;
    if (s == "hadamard") return TransformKind::hadamard;
    throw ConfigError("unknown transform '" + std::string(s) + "'", "transform");
}

QuantKind parse_quant_kind(std::string_view s) {
    if (s == "uniform") return QuantKind::uniform_group;
    if (s == "mixed") return QuantKind::mixed_head;
    throw ConfigError("unknown quantizer '" + std::string(s) + "'", "quant");
}

CodecKind parse_codec_kind(std::string_view s) {
    if (s == "none") return CodecKind::none;
    if (s == "rle") return CodecKind::rle_bitpack;
    if (s == "entropy") return CodecKind::entropy;
    throw ConfigError("unknown codec '" + std::string(s) + "'", "codec");
}

namespace {

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view expect_key(std::string_view item, std::string_view key, std::string_view id) {
    if (item.size() <= key.size() + 1 || item.substr(0, key.size()) != key ||
        item[key.size()] != '=') {
        throw ConfigError("malformed strategy id '" + std::string(id) + "': expected '" +
                              std::string(key) + "='",
                          "strategy");
    }
    return item.substr(key.size() + 1);
}

int parse_int(std::string_view s, std::string_view id) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("malformed integer in strategy id '" + std::string(id) + "'", "strategy");
    }
    return v;
}

double parse_real(std::string_view s, std::string_view id) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("malformed real in strategy id '" + std::string(id) + "'", "strategy");
    }
    return v;
}

}  // namespace

std::string StrategyConfig::id() const {
    std::string out = "t=";
    out += to_string(transform.kind);
    out += ";q=";
    if (quant.kind == QuantKind::uniform_group) {
        out += "uniform,b=" + std::to_string(quant.bits) + ",g=" + std::to_string(quant.group_size);
    } else {
        out += "mixed,hi=" + std::to_string(quant.high_bits) + ",lo=" +
               std::to_string(quant.low_bits) + ",g=" + std::to_string(quant.group_size) +
               ",rho=" + format_real(quant.retrieval_fraction);
    }
    out += ";c=";
    out += to_string(codec.kind);
    return out;
}

StrategyConfig StrategyConfig::parse(std::string_view id) {
    const auto parts = split(id, ';');
    if (parts.size() != 3) {
        throw ConfigError("malformed strategy id '" + std::string(id) + "'", "strategy");
    }
    StrategyConfig s;
    s.transform.kind = parse_transform_kind(expect_key(parts[0], "t", id));
    const auto q = split(expect_key(parts[1], "q", id), ',');
    s.quant.kind = parse_quant_kind(q[0]);
    if (s.quant.kind == QuantKind::uniform_group) {
        if (q.size() != 3) throw ConfigError("malformed uniform quantizer in '" + std::string(id) + "'", "strategy");
        s.quant.bits = parse_int(expect_key(q[1], "b", id), id);
        s.quant.group_size = parse_int(expect_key(q[2], "g", id), id);
    } else {
        if (q.size() != 5) throw ConfigError("malformed mixed quantizer in '" + std::string(id) + "'", "strategy");
        s.quant.high_bits = parse_int(expect_key(q[1], "hi", id), id);
        s.quant.low_bits = parse_int(expect_key(q[2], "lo", id), id);
        s.quant.group_size = parse_int(expect_key(q[3], "g", id), id);
        s.quant.retrieval_fraction = parse_real(expect_key(q[4], "rho", id), id);
    }
    s.codec.kind = parse_codec_kind(expect_key(parts[2], "c", id));
    s.validate();
    // Reject ids that parse but would not print identically ("b=04", "rho=0.50").
    if (s.id() != id) {
        throw ConfigError("non-canonical strategy id '" + std::string(id) + "'", "strategy");
    }
    return s;
}

void StrategyConfig::validate() const {
    auto bits_ok = [](int b) { return b >= 1 && b <= 8; };
    if (quant.group_size < 1) throw ConfigError("group_size must be >= 1", "group_size");
    if (quant.kind == QuantKind::uniform_group) {
        if (!bits_ok(quant.bits)) throw ConfigError("bits must be in 1..8", "bits");
    } else {
        if (!bits_ok(quant.high_bits)) throw ConfigError("high_bits must be in 1..8", "high_bits");
        if (!bits_ok(quant.low_bits)) throw ConfigError("low_bits must be in 1..8", "low_bits");
        if (quant.high_bits <= quant.low_bits) {
            throw ConfigError("high_bits must exceed low_bits", "high_bits");
        }
        if (!(quant.retrieval_fraction >= 0.0 && quant.retrieval_fraction <= 1.0)) {
            throw ConfigError("retrieval_fraction must lie in [0,1]", "retrieval_fraction");
        }
    }
}

void StrategyConfig::validate_for(const KVShape& shape) const {
    validate();
    if (shape.channels % static_cast<std::size_t>(quant.group_size) != 0) {
        throw ConfigError("group_size " + std::to_string(quant.group_size) +
                              " does not divide channels " + std::to_string(shape.channels),
                          "group_size");
    }
    if (transform.kind == TransformKind::hadamard && (shape.channels & (shape.channels - 1)) != 0) {
        throw DimensionError("hadamard transform requires a power-of-two channel count");
    }
}

double analytic_bits_per_element(const QuantConfig& q) {
    const double meta = kGroupMetadataBits / q.group_size;
    if (q.kind == QuantKind::uniform_group) return q.bits + meta;
    const double rho = q.retrieval_fraction;
    return rho * q.high_bits + (1.0 - rho) * q.low_bits + meta;
}

double analytic_cr(const StrategyConfig& s) {
    return static_cast<double>(kSourceBits) / analytic_bits_per_element(s.quant);
}

}  // namespace kvpilot
