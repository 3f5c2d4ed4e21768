// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace kvpilot::half {

// IEEE 754 binary16 helpers. Group scales and zero points are stored in this
// width, so the quantizer needs directed rounding to keep every value inside
// the representable grid.

double to_double(std::uint16_t bits);

std::uint16_t from_double_nearest(double v);

/// Largest half value <= v.
std::uint16_t from_double_down(double v);

/// Smallest half value >= v.
std::uint16_t from_double_up(double v);

constexpr double kMax = 65504.0;

}  // namespace kvpilot::half
