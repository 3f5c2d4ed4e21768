#pragma once

#include <algorithm>
#include <vector>

#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/rng.hpp"
#include "kvpilot/search.hpp"
#include "kvpilot/space.hpp"

namespace fixtures {

using namespace kvpilot;

/// 3 transforms x uniform b in {2,4,8}, g=32 x codecs {none, entropy}.
inline SpaceDef space18() {
    SpaceDef d;
    d.quant_kinds = {QuantKind::uniform_group};
    d.bits = {2, 4, 8};
    d.group_sizes = {32};
    d.codecs = {CodecKind::none, CodecKind::entropy};
    return d;
}

/// identity/hadamard x (32 uniform + 32 mixed) x codecs {none, entropy}.
inline SpaceDef space256() {
    SpaceDef d;
    d.transforms = {TransformKind::identity, TransformKind::hadamard};
    d.quant_kinds = {QuantKind::uniform_group, QuantKind::mixed_head};
    d.bits = {1, 2, 3, 4, 5, 6, 7, 8};
    d.group_sizes = {16, 32, 64, 128};
    d.high_bits = {6, 8};
    d.low_bits = {4, 5};
    d.retrieval_fractions = {0.25, 0.5};
    d.codecs = {CodecKind::none, CodecKind::entropy};
    return d;
}

inline GeneratorParams small_generator(std::uint64_t seed) {
    GeneratorParams g;
    g.shape = {2, 4, 64, 128};
    g.seed = seed;
    return g;
}

/// Exhaustive table of every candidate's evaluation for one corpus.
struct Exhaustive {
    std::vector<EvalResult> results;
    double best_cr = 0.0;  ///< best feasible CR at the given threshold
    std::size_t best_index = 0;
    std::size_t feasible = 0;
};

inline Exhaustive evaluate_all(const StrategySpace& space, const PipelineEvaluator& eval, double ths) {
    Exhaustive ex;
    ex.results.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        ex.results.push_back(eval(space[i]));
        const auto& r = ex.results.back();
        if (r.acc >= ths) {
            ++ex.feasible;
            if (r.cr > ex.best_cr) {
                ex.best_cr = r.cr;
                ex.best_index = i;
            }
        }
    }
    return ex;
}

inline PipelineEvaluator make_evaluator(std::uint64_t seed, std::size_t corpus_size = 4, std::size_t sample = 2) {
    EvaluatorOptions o;
    o.sample_size = sample;
    o.seed = seed;
    return PipelineEvaluator(generate_corpus(small_generator(derive_seed(seed, 17)), corpus_size), o);
}

/// Evaluator that replays a precomputed table and counts calls.
struct Replay {
    const Exhaustive* table;
    std::size_t* calls;
    EvalResult operator()(std::size_t i, const StrategyConfig&) const {
        ++*calls;
        return table->results[i];
    }
};

}  // namespace fixtures
