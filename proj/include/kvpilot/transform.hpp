// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/strategy.hpp"

namespace kvpilot {

/// In-place orthonormal fast Walsh-Hadamard transform. Applying it twice is
/// the identity. `v.size()` must be a power of two.
void fwht_orthonormal(std::span<double> v);

/// identity: copy. delta: token 0 of every (layer, head, channel) stream is
/// kept as the anchor, later tokens become x[t] - x[t-1]. hadamard: orthonormal
/// WHT over the channel axis of every token row.
KVTensor apply_transform(const KVTensor& x, const TransformConfig& t);

KVTensor invert_transform(const KVTensor& y, const TransformConfig& t);

}  // namespace kvpilot
