// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/kv_tensor.hpp"

#include <cmath>
#include <random>

#include "kvpilot/error.hpp"
#include "kvpilot/half.hpp"
#include "kvpilot/rng.hpp"

namespace kvpilot {

namespace {

void check_shape(const KVShape& s) {
    if (s.layers == 0 || s.heads == 0 || s.tokens == 0 || s.channels == 0) {
        throw DimensionError("KV tensor dimensions must all be >= 1");
    }
}

}  // namespace

KVTensor::KVTensor(KVShape shape)
    : shape_(shape), values_(shape.num_elements(), 0.0), importance_(shape.num_heads(), 0.0) {
    check_shape(shape_);
}

KVTensor::KVTensor(KVShape shape, std::vector<double> values, std::vector<double> head_importance)
    : shape_(shape), values_(std::move(values)), importance_(std::move(head_importance)) {
    check_shape(shape_);
    if (values_.size() != shape_.num_elements()) {
        throw DimensionError("value count does not match KV shape");
    }
    if (importance_.size() != shape_.num_heads()) {
        throw DimensionError("head_importance length must equal layers * heads");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw DimensionError("KV values must be finite");
    }
    for (double v : importance_) {
        if (!(v >= 0.0 && v <= 1.0)) throw DimensionError("head_importance entries must lie in [0,1]");
    }
}

KVTensor generate_kv(const GeneratorParams& params) {
    const KVShape& s = params.shape;
    KVTensor x(s);
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (auto& imp : x.head_importance()) imp = unit(rng);

    std::vector<double> scale(s.channels);
    std::vector<double> mean(s.channels);
    for (std::size_t h = 0; h < s.num_heads(); ++h) {
        for (std::size_t c = 0; c < s.channels; ++c) {
            scale[c] = std::exp(params.log_scale_sigma * normal(rng));
            if (unit(rng) < params.outlier_fraction) scale[c] *= params.outlier_scale;
            mean[c] = params.mean_scale * scale[c] * normal(rng);
        }
        auto slab = x.slab(h);
        for (std::size_t t = 0; t < s.tokens; ++t) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                const double v = mean[c] + scale[c] * normal(rng);
                slab[t * s.channels + c] = half::to_double(half::from_double_nearest(v));
            }
        }
    }
    return x;
}

std::vector<KVTensor> generate_corpus(const GeneratorParams& params, std::size_t count) {
    std::vector<KVTensor> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        GeneratorParams p = params;
        p.seed = derive_seed(params.seed, i);
        out.push_back(generate_kv(p));
    }
    return out;
}

}  // namespace kvpilot
