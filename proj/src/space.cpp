// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/space.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "kvpilot/error.hpp"

namespace kvpilot {

namespace {

template <class T>
void check_axis(const std::vector<T>& axis, const char* field) {
    if (axis.empty()) throw ConfigError("axis is empty", field);
    std::set<T> seen(axis.begin(), axis.end());
    if (seen.size() != axis.size()) throw ConfigError("axis has duplicate values", field);
}

void check_bits(const std::vector<int>& axis, const char* field) {
    check_axis(axis, field);
    for (int b : axis) {
        if (b < 1 || b > 8) throw ConfigError("bit width outside 1..8", field);
    }
}

template <class T>
double min_max(const std::vector<T>& axis, T v) {
    const auto [lo, hi] = std::minmax_element(axis.begin(), axis.end());
    if (*hi == *lo) return 0.0;
    return (static_cast<double>(v) - static_cast<double>(*lo)) /
           (static_cast<double>(*hi) - static_cast<double>(*lo));
}

template <class T>
std::size_t position(const std::vector<T>& axis, T v) {
    return static_cast<std::size_t>(std::find(axis.begin(), axis.end(), v) - axis.begin());
}

}  // namespace

void SpaceDef::validate() const {
    check_axis(transforms, "space.transforms");
    check_axis(quant_kinds, "space.quant_kinds");
    check_axis(codecs, "space.codecs");
    check_axis(group_sizes, "space.group_sizes");
    for (int g : group_sizes) {
        if (g < 1) throw ConfigError("group size must be >= 1", "space.group_sizes");
    }
    const bool uniform = std::find(quant_kinds.begin(), quant_kinds.end(), QuantKind::uniform_group) !=
                         quant_kinds.end();
    const bool mixed = std::find(quant_kinds.begin(), quant_kinds.end(), QuantKind::mixed_head) !=
                       quant_kinds.end();
    if (uniform) check_bits(bits, "space.bits");
    if (mixed) {
        check_bits(high_bits, "space.high_bits");
        check_bits(low_bits, "space.low_bits");
        check_axis(retrieval_fractions, "space.retrieval_fractions");
        for (double r : retrieval_fractions) {
            if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rho outside [0,1]", "space.retrieval_fractions");
        }
        const bool any = std::any_of(high_bits.begin(), high_bits.end(), [&](int hi) {
            return std::any_of(low_bits.begin(), low_bits.end(), [&](int lo) { return hi > lo; });
        });
        if (!any) throw ConfigError("no high_bits value exceeds a low_bits value", "space.high_bits");
    }
}

StrategySpace::StrategySpace(SpaceDef def) : def_(std::move(def)) {
    def_.validate();
    std::vector<QuantConfig> quants;
    for (QuantKind kind : def_.quant_kinds) {
        if (kind == QuantKind::uniform_group) {
            for (int b : def_.bits) {
                for (int g : def_.group_sizes) {
                    QuantConfig q;
                    q.kind = kind;
                    q.bits = b;
                    q.group_size = g;
                    quants.push_back(q);
                }
            }
        } else {
            for (int hi : def_.high_bits) {
                for (int lo : def_.low_bits) {
                    if (hi <= lo) continue;
                    for (int g : def_.group_sizes) {
                        for (double rho : def_.retrieval_fractions) {
                            QuantConfig q;
                            q.kind = kind;
                            q.group_size = g;
                            q.high_bits = hi;
                            q.low_bits = lo;
                            q.retrieval_fraction = rho;
                            quants.push_back(q);
                        }
                    }
                }
            }
        }
    }
    for (TransformKind t : def_.transforms) {
        for (const QuantConfig& q : quants) {
            for (CodecKind c : def_.codecs) {
                StrategyConfig s;
                s.transform.kind = t;
                s.quant = q;
                s.codec.kind = c;
                index_.emplace(s.id(), candidates_.size());
                candidates_.push_back(s);
            }
        }
    }
}

std::size_t StrategySpace::index_of(const StrategyConfig& c) const {
    const auto it = index_.find(c.id());
    return it == index_.end() ? npos : it->second;
}

std::size_t StrategySpace::embedding_dim() const {
    return def_.transforms.size() + def_.quant_kinds.size() + def_.codecs.size() + 5;
}

std::vector<double> StrategySpace::encode(const StrategyConfig& c) const {
    if (index_of(c) == npos) throw ConfigError("strategy " + c.id() + " is not in the space", "strategy");
    std::vector<double> e;
    e.reserve(embedding_dim());
    auto one_hot = [&e](std::size_t n, std::size_t k) {
        for (std::size_t i = 0; i < n; ++i) e.push_back(i == k ? 1.0 : 0.0);
    };
    one_hot(def_.transforms.size(), position(def_.transforms, c.transform.kind));
    one_hot(def_.quant_kinds.size(), position(def_.quant_kinds, c.quant.kind));
    one_hot(def_.codecs.size(), position(def_.codecs, c.codec.kind));
    if (c.quant.kind == QuantKind::uniform_group) {
        e.push_back(min_max(def_.bits, c.quant.bits));
        e.push_back(min_max(def_.group_sizes, c.quant.group_size));
        e.insert(e.end(), {0.0, 0.0, 0.0});
    } else {
        e.push_back(0.0);
        e.push_back(min_max(def_.group_sizes, c.quant.group_size));
        e.push_back(min_max(def_.high_bits, c.quant.high_bits));
        e.push_back(min_max(def_.low_bits, c.quant.low_bits));
        e.push_back(min_max(def_.retrieval_fractions, c.quant.retrieval_fraction));
    }
    return e;
}

StrategySpace enumerate_space(const SpaceDef& def) { return StrategySpace(def); }

std::vector<double> encode_config(const StrategyConfig& c, const StrategySpace& space) {
    return space.encode(c);
}

std::vector<std::vector<double>> encode_space(const StrategySpace& space) {
    std::vector<std::vector<double>> out;
    out.reserve(space.size());
    for (const auto& c : space.candidates()) out.push_back(space.encode(c));
    return out;
}

std::vector<std::vector<double>> random_index_embedding(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {n > 1 ? static_cast<double>(perm[i]) / static_cast<double>(n - 1) : 0.0};
    }
    return out;
}

}  // namespace kvpilot
