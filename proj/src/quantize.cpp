// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kvpilot/error.hpp"
#include "kvpilot/half.hpp"

namespace kvpilot {

std::vector<HeadClass> classify_heads(const KVTensor& x, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0,1]", "retrieval_fraction");
    const auto importance = x.head_importance();
    const std::size_t n = importance.size();
    // Guard against rho * n landing a hair above an integer.
    const auto k = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n) - 1e-9));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return importance[a] > importance[b];
    });
    std::vector<HeadClass> labels(n, HeadClass::streaming);
    for (std::size_t i = 0; i < std::min(k, n); ++i) labels[order[i]] = HeadClass::retrieval;
    return labels;
}

std::size_t QuantizedTensor::metadata_bits() const {
    std::size_t bits = num_groups() * 32;
    if (kind == QuantKind::mixed_head) bits += shape.num_heads();
    return bits;
}

QuantizedTensor quantize(const KVTensor& x, const QuantConfig& q, std::span<const HeadClass> labels) {
    StrategyConfig probe;
    probe.quant = q;
    probe.validate();
    const KVShape& s = x.shape();
    if (s.channels % static_cast<std::size_t>(q.group_size) != 0) {
        throw ConfigError("group_size " + std::to_string(q.group_size) + " does not divide channels " +
                              std::to_string(s.channels),
                          "group_size");
    }

    QuantizedTensor out;
    out.shape = s;
    out.kind = q.kind;
    out.group_size = q.group_size;
    out.head_bits.assign(s.num_heads(), static_cast<std::uint8_t>(q.bits));
    if (q.kind == QuantKind::mixed_head) {
        if (labels.empty()) {
            out.head_classes = classify_heads(x, q.retrieval_fraction);
        } else {
            if (labels.size() != s.num_heads()) throw DimensionError("one head label per head required");
            out.head_classes.assign(labels.begin(), labels.end());
        }
        for (std::size_t h = 0; h < s.num_heads(); ++h) {
            out.head_bits[h] = static_cast<std::uint8_t>(
                out.head_classes[h] == HeadClass::retrieval ? q.high_bits : q.low_bits);
        }
    }

    const auto values = x.values();
    const std::size_t g = static_cast<std::size_t>(q.group_size);
    out.symbols.resize(values.size());
    out.scales.resize(values.size() / g);
    out.zeros.resize(values.size() / g);
    const std::size_t slab = s.slab_size();

    for (std::size_t grp = 0; grp < out.scales.size(); ++grp) {
        const std::size_t base = grp * g;
        const int bits = out.head_bits[base / slab];
        const double levels = static_cast<double>((1u << bits) - 1);
        const auto [lo_it, hi_it] = std::minmax_element(values.begin() + base, values.begin() + base + g);
        const std::uint16_t zero_h = half::from_double_down(*lo_it);
        const double zero = half::to_double(zero_h);
        const double range = *hi_it - zero;
        out.zeros[grp] = zero_h;
        if (range == 0.0) {
            out.scales[grp] = 0;
            std::fill_n(out.symbols.begin() + base, g, std::uint8_t{0});
            continue;
        }
        const std::uint16_t scale_h = half::from_double_up(range / levels);
        const double scale = half::to_double(scale_h);
        out.scales[grp] = scale_h;
        for (std::size_t i = base; i < base + g; ++i) {
            const double level = std::nearbyint((values[i] - zero) / scale);
            out.symbols[i] = static_cast<std::uint8_t>(std::clamp(level, 0.0, levels));
        }
    }
    return out;
}

KVTensor dequantize(const QuantizedTensor& qt, const QuantConfig& q) {
    const KVShape& s = qt.shape;
    const std::size_t n = s.num_elements();
    if (qt.group_size != q.group_size || qt.kind != q.kind) {
        throw DimensionError("quantized tensor does not match quantizer config");
    }
    if (qt.symbols.size() != n || qt.scales.size() != n / qt.group_size ||
        qt.zeros.size() != qt.scales.size() || qt.head_bits.size() != s.num_heads()) {
        throw DimensionError("quantized tensor metadata does not match its shape");
    }
    std::vector<double> values(n);
    const std::size_t g = static_cast<std::size_t>(qt.group_size);
    for (std::size_t grp = 0; grp < qt.scales.size(); ++grp) {
        const double zero = half::to_double(qt.zeros[grp]);
        const double scale = half::to_double(qt.scales[grp]);
        for (std::size_t i = grp * g; i < (grp + 1) * g; ++i) values[i] = zero + qt.symbols[i] * scale;
    }
    return KVTensor(s, std::move(values), std::vector<double>(s.num_heads(), 0.0));
}

}  // namespace kvpilot
