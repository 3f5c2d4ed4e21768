// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kvpilot {

struct KVShape {
    std::size_t layers = 1;
    std::size_t heads = 1;
    std::size_t tokens = 1;
    std::size_t channels = 1;

    std::size_t num_heads() const { return layers * heads; }
    std::size_t num_elements() const { return layers * heads * tokens * channels; }
    /// Elements in one (layer, head) slab.
    std::size_t slab_size() const { return tokens * channels; }

    bool operator==(const KVShape&) const = default;
};

/// Uncompressed source width in bits; all compression ratios are measured
/// against this.
inline constexpr std::size_t kSourceBits = 16;

/// Dense KV block laid out as [layer][head][token][channel].
class KVTensor {
public:
    KVTensor() = default;
    explicit KVTensor(KVShape shape);
    KVTensor(KVShape shape, std::vector<double> values, std::vector<double> head_importance);

    const KVShape& shape() const { return shape_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::span<const double> head_importance() const { return importance_; }
    std::span<double> head_importance() { return importance_; }

    double& at(std::size_t layer, std::size_t head, std::size_t token, std::size_t channel) {
        return values_[index(layer, head, token, channel)];
    }
    double at(std::size_t layer, std::size_t head, std::size_t token, std::size_t channel) const {
        return values_[index(layer, head, token, channel)];
    }

    std::size_t index(std::size_t layer, std::size_t head, std::size_t token,
                      std::size_t channel) const {
        return ((layer * shape_.heads + head) * shape_.tokens + token) * shape_.channels + channel;
    }

    std::span<double> slab(std::size_t head_index) {
        return std::span<double>(values_).subspan(head_index * shape_.slab_size(), shape_.slab_size());
    }
    std::span<const double> slab(std::size_t head_index) const {
        return std::span<const double>(values_).subspan(head_index * shape_.slab_size(),
                                                        shape_.slab_size());
    }

    std::size_t original_bytes() const { return shape_.num_elements() * kSourceBits / 8; }

private:
    KVShape shape_{};
    std::vector<double> values_;
    std::vector<double> importance_;
};

/// Synthetic KV statistics. Each (layer, head, channel) is an independent
/// Gaussian whose scale is log-normal across channels; a small fraction of
/// channels are outliers with a much larger scale.
struct GeneratorParams {
    KVShape shape{4, 8, 256, 128};
    double log_scale_sigma = 0.5;
    double mean_scale = 0.5;  ///< channel mean ~ N(0, mean_scale * channel scale)
    double outlier_fraction = 0.01;
    double outlier_scale = 10.0;
    std::uint64_t seed = 0;

    bool operator==(const GeneratorParams&) const = default;
};

/// Deterministic in `params`. Values are rounded to binary16 so the declared
/// 16-bit source width is exact.
KVTensor generate_kv(const GeneratorParams& params);

/// `count` tensors with seeds derived from params.seed.
std::vector<KVTensor> generate_corpus(const GeneratorParams& params, std::size_t count);

}  // namespace kvpilot
