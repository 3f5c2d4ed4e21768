// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/config.hpp"

#include <cstdio>
#include <filesystem>
#include <set>

#include "json_util.hpp"
#include "kvpilot/rng.hpp"

namespace kvpilot {

using detail::Json;
using detail::Reader;

namespace {

template <class E, class F>
std::vector<E> enum_list(Reader& r, const std::string& key, std::vector<E> def, F parse) {
    const Json* v = r.raw(key);
    if (!v) return def;
    std::vector<E> out;
    for (const auto& s : Reader::convert<std::vector<std::string>>(*v, r.field(key))) {
        try {
            out.push_back(parse(s));
        } catch (const Error& e) {
            throw ConfigError("unknown value '" + s + "'", r.field(key));
        }
    }
    return out;
}

SpaceDef read_space(const Json& j) {
    Reader r(j, "space");
    SpaceDef d;
    d.transforms = enum_list(r, "transforms", d.transforms, [](const std::string& s) { return parse_transform_kind(s); });
    d.quant_kinds = enum_list(r, "quant_kinds", d.quant_kinds, [](const std::string& s) { return parse_quant_kind(s); });
    d.codecs = enum_list(r, "codecs", d.codecs, [](const std::string& s) { return parse_codec_kind(s); });
    r.get("bits", d.bits);
    r.get("group_sizes", d.group_sizes);
    r.get("high_bits", d.high_bits);
    r.get("low_bits", d.low_bits);
    r.get("retrieval_fractions", d.retrieval_fractions);
    r.finish();
    return d;
}

Json write_space(const SpaceDef& d) {
    Json j;
    auto names = [](const auto& v) {
        Json a = Json::array();
        for (auto k : v) a.push_back(std::string(to_string(k)));
        return a;
    };
    j["transforms"] = names(d.transforms);
    j["quant_kinds"] = names(d.quant_kinds);
    j["codecs"] = names(d.codecs);
    j["bits"] = d.bits;
    j["group_sizes"] = d.group_sizes;
    j["high_bits"] = d.high_bits;
    j["low_bits"] = d.low_bits;
    j["retrieval_fractions"] = d.retrieval_fractions;
    return j;
}

SearchOptions read_search(const Json& j) {
    Reader r(j, "search");
    SearchOptions o;
    SearchBudget& b = o.budget;
    r.get("acc_threshold", b.acc_threshold);
    r.get("eps_buf", b.eps_buf);
    r.get("max_evaluations", b.max_evaluations);
    r.get("failure_limit", b.failure_limit);
    r.get("lambda0", b.lambda0);
    r.get("tau", b.tau);
    r.get("hard_gap", b.hard_gap);
    r.get("initial_samples", b.initial_samples);
    r.get("use_encoding", o.use_encoding);
    r.get("use_exploration", o.use_exploration);
    r.get("use_pruning", o.use_pruning);
    r.get("use_early_stop", o.use_early_stop);
    r.get("calibrate_cr", o.calibrate_cr);
    if (const Json* g = r.raw("gp")) {
        Reader gr(*g, "search.gp");
        gr.get("length_scale", o.gp.length_scale);
        gr.get("signal_variance", o.gp.signal_variance);
        gr.get("noise_variance", o.gp.noise_variance);
        gr.get("max_jitter", o.gp.max_jitter);
        gr.finish();
    }
    r.finish();
    return o;
}

Json write_search(const SearchOptions& o) {
    const SearchBudget& b = o.budget;
    Json j;
    j["acc_threshold"] = b.acc_threshold;
    j["eps_buf"] = b.eps_buf;
    j["max_evaluations"] = b.max_evaluations;
    j["failure_limit"] = b.failure_limit;
    j["lambda0"] = b.lambda0;
    j["tau"] = b.tau;
    j["hard_gap"] = b.hard_gap;
    j["initial_samples"] = b.initial_samples;
    j["use_encoding"] = o.use_encoding;
    j["use_exploration"] = o.use_exploration;
    j["use_pruning"] = o.use_pruning;
    j["use_early_stop"] = o.use_early_stop;
    j["calibrate_cr"] = o.calibrate_cr;
    j["gp"] = Json{{"length_scale", o.gp.length_scale},
                   {"signal_variance", o.gp.signal_variance},
                   {"noise_variance", o.gp.noise_variance},
                   {"max_jitter", o.gp.max_jitter}};
    return j;
}

CorpusConfig read_corpus(const Json& j) {
    Reader r(j, "corpus");
    CorpusConfig c;
    GeneratorParams& g = c.generator;
    if (const Json* s = r.raw("shape")) {
        const auto v = Reader::convert<std::vector<std::uint64_t>>(*s, "corpus.shape");
        if (v.size() != 4) throw ConfigError("expected [layers, heads, tokens, channels]", "corpus.shape");
        g.shape = KVShape{v[0], v[1], v[2], v[3]};
    }
    r.get("log_scale_sigma", g.log_scale_sigma);
    r.get("mean_scale", g.mean_scale);
    r.get("outlier_fraction", g.outlier_fraction);
    r.get("outlier_scale", g.outlier_scale);
    r.get("seed", g.seed);
    r.get("count", c.count);
    r.finish();
    return c;
}

Json write_corpus(const CorpusConfig& c) {
    const GeneratorParams& g = c.generator;
    Json j;
    j["shape"] = {g.shape.layers, g.shape.heads, g.shape.tokens, g.shape.channels};
    j["log_scale_sigma"] = g.log_scale_sigma;
    j["mean_scale"] = g.mean_scale;
    j["outlier_fraction"] = g.outlier_fraction;
    j["outlier_scale"] = g.outlier_scale;
    j["seed"] = g.seed;
    j["count"] = c.count;
    return j;
}

BanditParams read_bandit(const Json& j) {
    Reader r(j, "bandit");
    BanditParams p;
    r.get("alpha", p.alpha);
    r.get("epsilon", p.epsilon);
    r.get("k_violations", p.k_violations);
    r.get("window", p.window);
    r.get("cooldown", p.cooldown);
    r.finish();
    return p;
}

Json write_bandit(const BanditParams& p) {
    return Json{{"alpha", p.alpha},
                {"epsilon", p.epsilon},
                {"k_violations", p.k_violations},
                {"window", p.window},
                {"cooldown", p.cooldown}};
}

MixEntry read_entry(const Json& j, const std::string& path, const std::string& workload) {
    Reader r(j, path);
    MixEntry e;
    e.workload = workload;
    r.get("workload", e.workload);
    r.get("weight", e.weight);
    r.get("volume_min", e.volume_min);
    r.get("volume_max", e.volume_max);
    if (r.has("volume")) {
        if (r.has("volume_min") || r.has("volume_max")) throw ConfigError("give volume or volume_min/max", r.field("volume"));
        e.volume_min = e.volume_max = r.require<double>("volume");
    }
    r.get("t_prefill", e.t_prefill);
    r.get("t_decode", e.t_decode);
    r.get("t_slo", e.t_slo);
    r.get("q_min", e.q_min);
    r.finish();
    return e;
}

Json write_entry(const MixEntry& e) {
    return Json{{"workload", e.workload},   {"weight", e.weight},       {"volume_min", e.volume_min},
                {"volume_max", e.volume_max}, {"t_prefill", e.t_prefill}, {"t_decode", e.t_decode},
                {"t_slo", e.t_slo},         {"q_min", e.q_min}};
}

ScenarioConfig read_scenario(const Json& j, const std::string& path, const std::string& workload) {
    Reader r(j, path);
    ScenarioConfig s;
    s.name = r.require<std::string>("name");
    if (const Json* v = r.raw("kind")) {
        s.kind = parse_scenario_kind(Reader::convert<std::string>(*v, r.field("kind")));
    }
    if (const Json* v = r.raw("mode")) {
        try {
            s.mode = parse_controller_mode(Reader::convert<std::string>(*v, r.field("mode")));
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), r.field("mode"));
        }
    }
    r.get("fixed_profile", s.fixed_profile);
    if (const Json* m = r.raw("mix")) {
        Reader mr(*m, r.field("mix"));
        mr.get("count", s.mix.count);
        mr.get("arrival_rate", s.mix.arrival_rate);
        if (const Json* es = mr.raw("entries")) {
            if (!es->is_array()) throw ConfigError("expected an array", mr.field("entries"));
            for (std::size_t i = 0; i < es->size(); ++i) {
                s.mix.entries.push_back(read_entry((*es)[i], mr.field("entries") + "[" + std::to_string(i) + "]", workload));
            }
        }
        mr.finish();
    }
    if (const Json* t = r.raw("trace")) {
        Reader tr(*t, r.field("trace"));
        tr.get("csv", s.trace.csv);
        if (tr.has("points")) {
            if (!s.trace.csv.empty()) throw ConfigError("give csv or points, not both", tr.field("points"));
            s.trace.points = tr.require<std::vector<std::pair<double, double>>>("points");
        } else if (!s.trace.csv.empty()) {
            s.trace.points.clear();
        }
        tr.finish();
    }
    if (const Json* d = r.raw("drift")) {
        Reader dr(*d, r.field("drift"));
        dr.get("overhead", s.drift.overhead);
        if (const Json* f = dr.raw("factors")) {
            if (!f->is_object()) throw ConfigError("expected an object", dr.field("factors"));
            for (auto it = f->begin(); it != f->end(); ++it) {
                s.drift.factors[it.key()] = Reader::convert<std::vector<std::pair<double, double>>>(
                    it.value(), dr.field("factors") + "." + it.key());
            }
        }
        dr.finish();
    }
    r.get("recompute_time", s.recompute_time);
    r.get("recompute_fallback", s.recompute_fallback);
    r.finish();
    return s;
}

Json write_scenario(const ScenarioConfig& s) {
    Json j;
    j["name"] = s.name;
    j["kind"] = to_string(s.kind);
    j["mode"] = to_string(s.mode);
    j["fixed_profile"] = s.fixed_profile;
    Json entries = Json::array();
    for (const auto& e : s.mix.entries) entries.push_back(write_entry(e));
    j["mix"] = Json{{"count", s.mix.count}, {"arrival_rate", s.mix.arrival_rate}, {"entries", entries}};
    if (!s.trace.csv.empty()) {
        j["trace"] = Json{{"csv", s.trace.csv}};
    } else {
        Json pts = Json::array();
        for (const auto& [t, g] : s.trace.points) pts.push_back({t, g});
        j["trace"] = Json{{"points", pts}};
    }
    Json factors = Json::object();
    for (const auto& [id, steps] : s.drift.factors) {
        Json a = Json::array();
        for (const auto& [t, f] : steps) a.push_back({t, f});
        factors[id] = a;
    }
    j["drift"] = Json{{"overhead", s.drift.overhead}, {"factors", factors}};
    j["recompute_time"] = s.recompute_time;
    j["recompute_fallback"] = s.recompute_fallback;
    return j;
}

Json to_json(const RunConfig& c) {
    Json j;
    j["version"] = kConfigVersion;
    j["seed"] = c.seed;
    j["workload"] = c.workload;
    j["space"] = write_space(c.space);
    j["search"] = write_search(c.search);
    j["corpus"] = write_corpus(c.corpus);
    j["sample_size"] = c.sample_size;
    j["v_ref"] = c.v_ref;
    j["buckets"] = c.buckets;
    j["bandwidth"] = Json{{"min_gbps", c.b_min_gbps}, {"max_gbps", c.b_max_gbps}};
    j["bandit"] = write_bandit(c.bandit);
    Json sc = Json::array();
    for (const auto& s : c.scenarios) sc.push_back(write_scenario(s));
    j["scenarios"] = sc;
    return j;
}

}  // namespace

void RunConfig::validate() const {
    space.validate();
    try {
        search.budget.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "search");
    }
    const KVShape& shape = corpus.generator.shape;
    if (shape.num_elements() == 0) throw ConfigError("dimensions must be > 0", "corpus.shape");
    if (corpus.count == 0) throw ConfigError("must be > 0", "corpus.count");
    if (sample_size == 0 || sample_size > corpus.count) throw ConfigError("must be in [1, corpus.count]", "sample_size");
    for (int g : space.group_sizes) {
        if (g <= 0 || shape.channels % static_cast<std::size_t>(g) != 0) {
            throw ConfigError("group_size " + std::to_string(g) + " does not divide channels " +
                                  std::to_string(shape.channels),
                              "space.group_sizes");
        }
    }
    for (auto t : space.transforms) {
        if (t == TransformKind::hadamard && (shape.channels & (shape.channels - 1)) != 0) {
            throw ConfigError("hadamard needs a power-of-two channel count", "space.transforms");
        }
    }
    if (!(v_ref > 0.0)) throw ConfigError("must be > 0", "v_ref");
    if (buckets.empty()) throw ConfigError("need at least one floor", "buckets");
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        if (!(buckets[i] > 0.0 && buckets[i] <= 1.0) || (i > 0 && !(buckets[i] > buckets[i - 1]))) {
            throw ConfigError("floors must be strictly increasing in (0, 1]", "buckets");
        }
    }
    if (!(b_min_gbps > 0.0)) throw ConfigError("must be > 0", "bandwidth.min_gbps");
    if (!(b_max_gbps > b_min_gbps)) throw ConfigError("must exceed min_gbps", "bandwidth.max_gbps");
    try {
        bandit.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "bandit");
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const ScenarioConfig& s = scenarios[i];
        const std::string f = "scenarios[" + std::to_string(i) + "]";
        if (s.name.empty()) throw ConfigError("must not be empty", f + ".name");
        if (!names.insert(s.name).second) throw ConfigError("duplicate scenario '" + s.name + "'", f + ".name");
        try {
            s.mix.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), f);
        }
        if (s.mix.count == 0) throw ConfigError("must be > 0", f + ".mix.count");
        if ((s.mode == ControllerMode::fixed_profile) != !s.fixed_profile.empty()) {
            throw ConfigError("set exactly when mode is fixed_profile", f + ".fixed_profile");
        }
        if (s.kind == ScenarioKind::pd_separation && s.recompute_fallback) {
            throw ConfigError("only valid for prefix_caching", f + ".recompute_fallback");
        }
        if (!(s.recompute_time >= 0.0)) throw ConfigError("must be >= 0", f + ".recompute_time");
        if (s.recompute_fallback && !(s.recompute_time > 0.0)) throw ConfigError("must be > 0", f + ".recompute_time");
        if (s.trace.csv.empty()) {
            BandwidthTrace t;
            for (const auto& [ts, g] : s.trace.points) {
                t.times.push_back(ts);
                t.bandwidth.push_back(g * kBytesPerGbps);
            }
            try {
                t.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(e.what(), f + ".trace.points");
            }
            if (t.times.front() > 0.0) throw ConfigError("must start at t <= 0", f + ".trace.points");
        }
        try {
            s.drift.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), f + "." + e.field());
        }
    }
}

RunConfig parse_config(std::string_view text) {
    const Json j = detail::parse_json(text);
    Reader r(j, "");
    RunConfig c;
    if (const Json* v = r.raw("version")) {
        if (Reader::convert<int>(*v, "version") != kConfigVersion) {
            throw ConfigError("unsupported version, expected " + std::to_string(kConfigVersion), "version");
        }
    }
    r.get("seed", c.seed);
    r.get("workload", c.workload);
    if (const Json* v = r.raw("space")) c.space = read_space(*v);
    if (const Json* v = r.raw("search")) c.search = read_search(*v);
    if (const Json* v = r.raw("corpus")) c.corpus = read_corpus(*v);
    r.get("sample_size", c.sample_size);
    r.get("v_ref", c.v_ref);
    r.get("buckets", c.buckets);
    if (const Json* v = r.raw("bandwidth")) {
        Reader br(*v, "bandwidth");
        br.get("min_gbps", c.b_min_gbps);
        br.get("max_gbps", c.b_max_gbps);
        br.finish();
    }
    if (const Json* v = r.raw("bandit")) c.bandit = read_bandit(*v);
    if (const Json* v = r.raw("scenarios")) {
        if (!v->is_array()) throw ConfigError("expected an array", "scenarios");
        for (std::size_t i = 0; i < v->size(); ++i) {
            c.scenarios.push_back(read_scenario((*v)[i], "scenarios[" + std::to_string(i) + "]", c.workload));
        }
    }
    r.finish();
    c.validate();
    return c;
}

std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string config_digest(const RunConfig& c) {
    const std::string s = to_json(c).dump();
    return hex64(fnv1a64(s.data(), s.size()));
}

BandwidthTrace resolve_trace(const TraceSpec& t, const std::string& base_dir) {
    if (!t.csv.empty()) {
        std::filesystem::path p(t.csv);
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        return load_trace_csv(p.string());
    }
    BandwidthTrace out;
    for (const auto& [ts, g] : t.points) {
        out.times.push_back(ts);
        out.bandwidth.push_back(g * kBytesPerGbps);
    }
    out.validate();
    return out;
}

}  // namespace kvpilot
