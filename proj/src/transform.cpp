// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/transform.hpp"

#include <cmath>

#include "kvpilot/error.hpp"

namespace kvpilot {

namespace {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void require_hadamard_shape(const KVShape& s) {
    if (!is_power_of_two(s.channels)) {
        throw DimensionError("hadamard transform requires a power-of-two channel count, got " +
                             std::to_string(s.channels));
    }
}

void hadamard_rows(KVTensor& x) {
    const std::size_t c = x.shape().channels;
    auto values = x.values();
    for (std::size_t off = 0; off < values.size(); off += c) {
        fwht_orthonormal(values.subspan(off, c));
    }
}

}  // namespace

void fwht_orthonormal(std::span<double> v) {
    const std::size_t n = v.size();
    if (!is_power_of_two(n)) throw DimensionError("WHT length must be a power of two");
    for (std::size_t h = 1; h < n; h *= 2) {
        for (std::size_t i = 0; i < n; i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = v[j];
                const double b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& e : v) e *= norm;
}

KVTensor apply_transform(const KVTensor& x, const TransformConfig& t) {
    KVTensor y = x;
    const KVShape& s = x.shape();
    switch (t.kind) {
        case TransformKind::identity:
            break;
        case TransformKind::delta:
            for (std::size_t h = 0; h < s.num_heads(); ++h) {
                auto src = x.slab(h);
                auto dst = y.slab(h);
                for (std::size_t tok = 1; tok < s.tokens; ++tok) {
                    for (std::size_t c = 0; c < s.channels; ++c) {
                        dst[tok * s.channels + c] =
                            src[tok * s.channels + c] - src[(tok - 1) * s.channels + c];
                    }
                }
            }
            break;
        case TransformKind::hadamard:
            require_hadamard_shape(s);
            hadamard_rows(y);
            break;
    }
    return y;
}

KVTensor invert_transform(const KVTensor& y, const TransformConfig& t) {
    KVTensor x = y;
    const KVShape& s = y.shape();
    switch (t.kind) {
        case TransformKind::identity:
            break;
        case TransformKind::delta:
            for (std::size_t h = 0; h < s.num_heads(); ++h) {
                auto dst = x.slab(h);
                for (std::size_t tok = 1; tok < s.tokens; ++tok) {
                    for (std::size_t c = 0; c < s.channels; ++c) {
                        dst[tok * s.channels + c] += dst[(tok - 1) * s.channels + c];
                    }
                }
            }
            break;
        case TransformKind::hadamard:
            require_hadamard_shape(s);
            hadamard_rows(x);
            break;
    }
    return x;
}

}  // namespace kvpilot
