// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json_util.hpp"
#include "kvpilot/config.hpp"
#include "kvpilot/pareto.hpp"
#include "kvpilot/report.hpp"
#include "kvpilot/rng.hpp"
#include "kvpilot/store.hpp"

namespace kvpilot {

namespace {

namespace fs = std::filesystem;
using detail::Json;

/// Usage-level failure: exit code 2.
struct UsageError : Error {
    using Error::Error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read input file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path + "'");
    f << text;
    if (!f.flush()) throw Error("write failed: '" + path + "'");
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
};

struct Loaded {
    RunConfig cfg;
    std::string dir;
    std::string digest;
};

Loaded load_config(const Common& c) {
    if (c.config.empty()) throw UsageError("--config is required");
    Loaded l;
    l.cfg = parse_config(read_file(c.config));
    if (c.seed) l.cfg.seed = *c.seed;
    l.dir = fs::path(c.config).parent_path().string();
    l.digest = config_digest(l.cfg);
    return l;
}

std::string store_path(const std::string& given) {
    if (!given.empty()) return given;
    if (const char* env = std::getenv(kStoreEnv); env && *env) return env;
    throw UsageError(std::string("no store path: pass --store or set ") + kStoreEnv);
}

ProfileStore read_store(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("cannot read input file '" + path + "'");
    return load_profiles(path);
}

PolicyTable table_for(const RunConfig& cfg, const ProfileStore& store) {
    return build_policy_table(store.profiles, cfg.buckets, cfg.b_min_gbps * kBytesPerGbps,
                              cfg.b_max_gbps * kBytesPerGbps);
}

std::string fmt(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

int cmd_profile(const Common& c, const std::string& store_opt, std::string trace_opt, std::ostream& out) {
    const Loaded l = load_config(c);
    const std::string path = store_path(store_opt);
    if (trace_opt.empty()) trace_opt = path + ".trace.jsonl";
    const RunConfig& cfg = l.cfg;

    EvaluatorOptions eo;
    eo.sample_size = cfg.sample_size;
    eo.seed = derive_seed(cfg.seed, 2);
    eo.v_ref = cfg.v_ref;
    const PipelineEvaluator eval(generate_corpus(cfg.corpus.generator, cfg.corpus.count), eo);
    const StrategySpace space = enumerate_space(cfg.space);
    SearchOptions so = cfg.search;
    so.seed = derive_seed(cfg.seed, 1);
    const SearchResult r = run_search(space, [&](std::size_t, const StrategyConfig& s) { return eval(s); }, so);

    const std::string trace = serialize_search_trace(r, l.digest, cfg.seed);
    ProfileStore store;
    store.config_digest = l.digest;
    store.seed = cfg.seed;
    store.trace_digest = hex64(fnv1a64(trace.data(), trace.size()));
    store.profiles = profiles_from_search(r, cfg.workload);
    write_output(trace_opt, trace, out);
    store_profiles(path, store);

    out << "profile: " << r.evaluations() << " of " << space.size() << " evaluated, " << r.feasible.size()
        << " feasible, best cr " << fmt(r.best_feasible_cr(), 4) << " (" << r.stop_reason << ")\n";
    if (!r.diagnostic.empty()) out << "profile: " << r.diagnostic << "\n";
    return 0;
}

int cmd_pareto(const Common& c, const std::string& store_opt, std::string out_opt, std::ostream& out) {
    const std::string path = store_path(store_opt);
    if (out_opt.empty()) out_opt = path;
    ProfileStore s = read_store(path);
    std::vector<ParetoPoint> pts;
    for (const auto& p : s.profiles) pts.push_back({p.id, p.q, p.cr, 1.0 / p.s});
    std::set<std::string> keep;
    for (const auto& p : pareto_frontier(pts)) keep.insert(p.id);
    const std::size_t before = s.profiles.size();
    std::erase_if(s.profiles, [&](const Profile& p) { return !keep.count(p.id); });
    if (c.seed) s.seed = *c.seed;
    store_profiles(out_opt, s);
    out << "pareto: kept " << s.profiles.size() << " of " << before << " profiles\n";
    return 0;
}

Json policy_json(const PolicyTable& t, const Loaded& l) {
    Json j;
    j["format"] = "kvpilot-policy";
    j["version"] = 1;
    j["config_digest"] = l.digest;
    j["seed"] = l.cfg.seed;
    j["units"] = Json{{"x", "s/byte"}, {"bandwidth", "bits/s"}, {"s", "bytes/s"}};
    j["b_min_bps"] = 8.0 / t.x_hi;
    j["b_max_bps"] = 8.0 / t.x_lo;
    Json ps = Json::array();
    for (std::size_t i = 0; i < t.profiles.size(); ++i) {
        const Profile& p = t.profiles[i];
        ps.push_back(Json{{"index", i},
                          {"id", p.id},
                          {"workload", p.workload},
                          {"cr", p.cr},
                          {"s", std::isinf(p.s) ? Json(nullptr) : Json(p.s)},
                          {"q", p.q},
                          {"b_star_bps", std::isinf(p.s) ? Json(nullptr) : Json(8.0 * benefit_threshold(p))}});
    }
    j["profiles"] = ps;
    Json ws = Json::object();
    for (const auto& [w, wt] : t.workloads) {
        Json bs = Json::array();
        for (const auto& b : wt.buckets) {
            Json members = Json::array();
            for (std::size_t m : b.members) members.push_back(t.profile(m).id);
            Json segs = Json::array();
            for (const auto& s : b.segments) {
                segs.push_back(Json{{"profile", t.profile(s.profile).id},
                                    {"x_lo", s.x_lo},
                                    {"x_hi", s.x_hi},
                                    {"b_lo_bps", 8.0 / s.x_hi},
                                    {"b_hi_bps", 8.0 / s.x_lo}});
            }
            bs.push_back(Json{{"floor", b.floor}, {"members", members}, {"segments", segs}});
        }
        ws[w] = Json{{"buckets", bs}};
    }
    j["workloads"] = ws;
    return j;
}

std::string curve_csv(const PolicyTable& t, const std::string& workload) {
    const auto& w = t.workloads.at(workload);
    std::vector<std::size_t> members = w.buckets.front().members;
    std::string out = "bandwidth_gbps";
    for (std::size_t m : members) out += "," + csv_field(t.profile(m).id);
    out += ",optimal\n";
    const int n = 200;
    const double lo = std::log(1.0 / t.x_hi), hi = std::log(1.0 / t.x_lo);
    for (int k = 0; k < n; ++k) {
        const double b = std::exp(lo + (hi - lo) * k / (n - 1));
        const double x = std::clamp(1.0 / b, t.x_lo, t.x_hi);
        out += fmt(b / kBytesPerGbps, 6);
        // seconds per GB moved, excluding T_model
        for (std::size_t m : members) out += "," + fmt(1e9 * envelope_cost(t.profile(m), x), 9);
        out += "," + csv_field(t.profile(lookup_x(t, workload, 0, x).candidates.front()).id) + "\n";
    }
    return out;
}

int cmd_envelope(const Common& c, const std::string& store_opt, const std::string& out_opt,
                 const std::string& curve_opt, std::ostream& out) {
    const Loaded l = load_config(c);
    const ProfileStore s = read_store(store_path(store_opt));
    const PolicyTable t = table_for(l.cfg, s);
    write_output(out_opt, policy_json(t, l).dump(2) + "\n", out);
    if (!curve_opt.empty()) {
        if (!t.workloads.count(l.cfg.workload)) throw ConfigError("no profiles for workload " + l.cfg.workload, "workload");
        write_output(curve_opt, curve_csv(t, l.cfg.workload), out);
    }
    if (out_opt != "-" && !out_opt.empty()) {
        std::size_t segs = 0;
        for (const auto& [w, wt] : t.workloads) {
            for (const auto& b : wt.buckets) segs += b.segments.size();
        }
        out << "envelope: " << t.workloads.size() << " workload(s), " << segs << " segment(s)\n";
    }
    return 0;
}

int cmd_simulate(const Common& c, const std::string& store_opt, const std::string& scenario,
                 const std::string& mode, const std::string& fixed, const std::string& out_opt, std::ostream& out) {
    const Loaded l = load_config(c);
    const ProfileStore s = read_store(store_path(store_opt));
    const PolicyTable t = table_for(l.cfg, s);
    if (l.cfg.scenarios.empty()) throw ConfigError("no scenarios configured", "scenarios");
    std::string text;
    bool matched = false;
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < l.cfg.scenarios.size(); ++i) {
        const ScenarioConfig& sc = l.cfg.scenarios[i];
        if (!scenario.empty() && sc.name != scenario) continue;
        matched = true;
        Scenario sim;
        sim.kind = sc.kind;
        sim.requests = generate_requests(sc.mix, derive_seed(l.cfg.seed, 100 + i));
        sim.trace = resolve_trace(sc.trace, l.dir);
        sim.drift = sc.drift;
        sim.mode = sc.mode;
        sim.fixed_profile = sc.fixed_profile;
        if (!mode.empty()) {
            sim.mode = parse_controller_mode(mode);
            sim.fixed_profile = sim.mode == ControllerMode::fixed_profile ? fixed : "";
        } else if (!fixed.empty()) {
            throw UsageError("--fixed-profile needs --mode fixed_profile");
        }
        sim.bandit = l.cfg.bandit;
        sim.recompute_time = sc.recompute_time;
        sim.recompute_fallback = sc.recompute_fallback;
        RunMetrics run;
        run.header = {sc.name, sim.kind, sim.mode, sim.fixed_profile, l.digest, l.cfg.seed};
        run.metrics = run_scenario(sim, t, derive_seed(l.cfg.seed, 200 + i));
        text += serialize_metrics(run);
        lines.push_back("simulate: " + sc.name + " " + to_string(sim.mode) + " mean_jct " +
                        fmt(run.metrics.summary.mean_jct, 6) + " s over " + std::to_string(run.metrics.summary.count) +
                        " requests\n");
    }
    if (!matched) throw UsageError("unknown scenario '" + scenario + "'");
    write_output(out_opt, text, out);
    if (out_opt != "-" && !out_opt.empty()) {
        for (const auto& x : lines) out << x;
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format, const std::string& tables,
               const std::string& out_opt, std::ostream& out) {
    std::vector<RunMetrics> runs;
    for (const auto& p : inputs) {
        auto r = parse_metrics(read_file(p));
        for (auto& x : r) runs.push_back(std::move(x));
    }
    std::vector<ReportTable> ts;
    std::stringstream ss(tables);
    for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok == "summary") ts.push_back(ReportTable::summary);
        else if (tok == "breakdown") ts.push_back(ReportTable::breakdown);
        else if (tok == "timeline") ts.push_back(ReportTable::timeline);
        else throw UsageError("unknown table '" + tok + "'");
    }
    write_output(out_opt, emit_report(runs, parse_report_format(format), ts), out);
    return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Offline profiling and online selection of KV-cache compression strategies", "kvpilot"};
    app.require_subcommand(1, 1);
    app.failure_message(CLI::FailureMessage::help);

    Common common;
    std::uint64_t seed = 0;
    std::string store, trace, out_path, curve, scenario, mode, fixed, format = "text",
                                                           tables = "summary,breakdown";
    std::vector<std::string> metrics;

    auto add_common = [&](CLI::App* sub, bool config) {
        if (config) sub->add_option("--config", common.config, "Run configuration (JSON)");
        sub->add_option("--seed", seed, "Override the configured seed");
    };

    auto* profile = app.add_subcommand("profile", "Search the strategy space and write a profile store");
    add_common(profile, true);
    profile->add_option("--store", store, std::string("Profile store to write (default $") + kStoreEnv + ")");
    profile->add_option("--trace", trace, "Search trace output (default <store>.trace.jsonl)");

    auto* pareto = app.add_subcommand("pareto", "Reduce a store to its Pareto frontier");
    add_common(pareto, false);
    pareto->add_option("--store", store, "Input store");
    pareto->add_option("--out", out_path, "Output store (default: rewrite the input)");

    auto* envelope = app.add_subcommand("envelope", "Build and export policy tables");
    add_common(envelope, true);
    envelope->add_option("--store", store, "Profile store");
    envelope->add_option("--out", out_path, "Policy table output (JSON, default stdout)");
    envelope->add_option("--curve", curve, "Latency-vs-bandwidth table (CSV)");

    auto* simulate = app.add_subcommand("simulate", "Run configured scenarios and write metrics");
    add_common(simulate, true);
    simulate->add_option("--store", store, "Profile store");
    simulate->add_option("--scenario", scenario, "Scenario name (default: all)");
    simulate->add_option("--mode", mode, "Controller mode override")
        ->check(CLI::IsMember({"full", "without_bandit", "w/o_bandit", "without_controller", "w/o_controller",
                               "fixed_profile", "no_compression"}));
    simulate->add_option("--fixed-profile", fixed, "Profile id for --mode fixed_profile");
    simulate->add_option("--out", out_path, "Metrics output (JSONL, default stdout)");

    auto* report = app.add_subcommand("report", "Render breakdowns and plot-ready tables");
    add_common(report, false);
    report->add_option("--metrics", metrics, "Metrics files")->required();
    report->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
    report->add_option("--tables", tables, "Comma list of summary, breakdown, timeline");
    report->add_option("--out", out_path, "Output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) common.seed = seed;
    try {
        if (sub == profile) return cmd_profile(common, store, trace, out);
        if (sub == pareto) return cmd_pareto(common, store, out_path, out);
        if (sub == envelope) return cmd_envelope(common, store, out_path, curve, out);
        if (sub == simulate) return cmd_simulate(common, store, scenario, mode, fixed, out_path, out);
        return cmd_report(metrics, format, tables, out_path, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << sub->help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace kvpilot
