// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/half.hpp"

#include <cmath>

#include "kvpilot/error.hpp"

namespace kvpilot::half {

double to_double(std::uint16_t bits) {
    const int sign = (bits >> 15) & 1;
    const int exponent = (bits >> 10) & 0x1f;
    const int mantissa = bits & 0x3ff;
    double v;
    if (exponent == 0) {
        v = std::ldexp(static_cast<double>(mantissa), -24);
    } else if (exponent == 31) {
        v = mantissa ? std::nan("") : INFINITY;
    } else {
        v = std::ldexp(static_cast<double>(mantissa | 0x400), exponent - 25);
    }
    return sign ? -v : v;
}

std::uint16_t from_double_nearest(double v) {
    if (!std::isfinite(v) || std::fabs(v) > kMax) {
        throw NumericError("value not representable as binary16: " + std::to_string(v));
    }
    const std::uint16_t sign = std::signbit(v) ? 0x8000 : 0;
    const double a = std::fabs(v);
    if (a == 0.0) return sign;
    int e;
    std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
    int exponent = e - 1 + 15;
    if (exponent <= 0) {
        // subnormal: unit is 2^-24
        const auto m = static_cast<std::uint32_t>(std::nearbyint(std::ldexp(a, 24)));
        return static_cast<std::uint16_t>(sign | m);  // m == 0x400 rolls into the smallest normal
    }
    auto m = static_cast<std::uint32_t>(std::nearbyint(std::ldexp(a, 25 - exponent)));
    if (m == 0x800) {
        m = 0x400;
        ++exponent;
    }
    if (exponent >= 31) {
        throw NumericError("value not representable as binary16: " + std::to_string(v));
    }
    return static_cast<std::uint16_t>(sign | (exponent << 10) | (m & 0x3ff));
}

namespace {

// Neighbour toward +inf / -inf in binary16 ordering.
std::uint16_t step_up(std::uint16_t h) {
    if (h == 0x8000) return 0x0001;
    if (h & 0x8000) return static_cast<std::uint16_t>(h - 1);
    return static_cast<std::uint16_t>(h + 1);
}

std::uint16_t step_down(std::uint16_t h) {
    if (h == 0x0000) return 0x8001;
    if (h & 0x8000) return static_cast<std::uint16_t>(h + 1);
    return static_cast<std::uint16_t>(h - 1);
}

}  // namespace

std::uint16_t from_double_down(double v) {
    std::uint16_t h = from_double_nearest(v);
    if (to_double(h) > v) h = step_down(h);
    return h;
}

std::uint16_t from_double_up(double v) {
    std::uint16_t h = from_double_nearest(v);
    if (to_double(h) < v) {
        h = step_up(h);
        if ((h & 0x7c00) == 0x7c00) throw NumericError("binary16 overflow rounding up");
    }
    return h;
}

}  // namespace kvpilot::half
