// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/report.hpp"

#include <algorithm>
#include <cstdio>

#include "json_util.hpp"
#include "kvpilot/store.hpp"

namespace kvpilot {

using detail::Json;
using detail::Reader;

namespace {

Json summary_json(const SimSummary& s) {
    Json sh = Json::object();
    for (std::size_t i = 0; i < kStageCount; ++i) sh[stage_name(static_cast<Stage>(i))] = s.shares[i];
    return Json{{"count", s.count},
                {"mean_jct", s.mean_jct},
                {"p50_jct", s.p50_jct},
                {"p99_jct", s.p99_jct},
                {"mean_ttft", s.mean_ttft},
                {"slo_violation_rate", s.slo_violation_rate},
                {"recompute_rate", s.recompute_rate},
                {"explore_rate", s.explore_rate},
                {"fallback_rate", s.fallback_rate},
                {"shares", sh}};
}

Json record_json(const SimRecord& r) {
    const DecisionRecord& d = r.decision;
    Json st = Json::object();
    for (std::size_t i = 0; i < kStageCount; ++i) st[stage_name(static_cast<Stage>(i))] = r.stages.t[i];
    return Json{{"request_id", d.request_id},
                {"now", d.now},
                {"arrival", r.arrival},
                {"bandwidth", r.bandwidth},
                {"workload", d.workload},
                {"profile", d.profile},
                {"profile_id", d.profile_id},
                {"has_env", d.has_env},
                {"env", Json{{"workload", d.env.workload}, {"bucket", d.env.bucket}, {"interval", d.env.interval}}},
                {"predicted", d.predicted},
                {"corrected", d.corrected},
                {"observed", d.observed},
                {"residual", d.residual},
                {"t_slo", d.t_slo},
                {"explored", d.explored},
                {"fallback", d.fallback},
                {"slo_violated", d.slo_violated},
                {"stages", st},
                {"jct", r.jct},
                {"ttft", r.ttft},
                {"recomputed", r.recomputed}};
}

// nlohmann writes non-finite doubles as null
double num(Reader& r, const std::string& key) {
    const Json* v = r.raw(key);
    if (!v) throw ConfigError("missing", r.field(key));
    if (v->is_null()) return kInf;
    return Reader::convert<double>(*v, r.field(key));
}

SimRecord record_from(const Json& j, const std::string& path) {
    Reader r(j, path);
    SimRecord out;
    DecisionRecord& d = out.decision;
    d.request_id = r.require<std::uint64_t>("request_id");
    d.now = r.require<std::uint64_t>("now");
    out.arrival = num(r, "arrival");
    out.bandwidth = num(r, "bandwidth");
    d.workload = r.require<std::string>("workload");
    d.profile = r.require<std::uint64_t>("profile");
    d.profile_id = r.require<std::string>("profile_id");
    d.has_env = r.require<bool>("has_env");
    {
        const Json* e = r.raw("env");
        if (!e) throw ConfigError("missing", r.field("env"));
        Reader er(*e, r.field("env"));
        d.env.workload = er.require<std::string>("workload");
        d.env.bucket = er.require<std::uint64_t>("bucket");
        d.env.interval = er.require<std::uint64_t>("interval");
        er.finish();
    }
    d.predicted = num(r, "predicted");
    d.corrected = num(r, "corrected");
    d.observed = num(r, "observed");
    d.residual = num(r, "residual");
    d.t_slo = num(r, "t_slo");
    d.explored = r.require<bool>("explored");
    d.fallback = r.require<bool>("fallback");
    d.slo_violated = r.require<bool>("slo_violated");
    {
        const Json* s = r.raw("stages");
        if (!s) throw ConfigError("missing", r.field("stages"));
        Reader sr(*s, r.field("stages"));
        for (std::size_t i = 0; i < kStageCount; ++i) out.stages.t[i] = num(sr, stage_name(static_cast<Stage>(i)));
        sr.finish();
    }
    out.jct = num(r, "jct");
    out.ttft = num(r, "ttft");
    out.recomputed = r.require<bool>("recomputed");
    r.finish();
    return out;
}

}  // namespace

std::string serialize_metrics(const RunMetrics& run) {
    const RunHeader& h = run.header;
    std::string out = Json{{"format", "kvpilot-metrics"},
                           {"version", kMetricsVersion},
                           {"scenario", h.scenario},
                           {"kind", to_string(h.kind)},
                           {"mode", to_string(h.mode)},
                           {"fixed_profile", h.fixed_profile},
                           {"config_digest", h.config_digest},
                           {"seed", h.seed},
                           {"records", run.metrics.records.size()},
                           {"summary", summary_json(run.metrics.summary)}}
                          .dump();
    out += '\n';
    for (const auto& r : run.metrics.records) {
        out += record_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<RunMetrics> parse_metrics(std::string_view text) {
    std::vector<RunMetrics> runs;
    std::size_t pos = 0, pending = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        const std::size_t at = pos;
        pos = end + 1;
        if (line.empty()) continue;
        Json j;
        try {
            j = detail::parse_json(line);
        } catch (const ParseError& e) {
            throw ParseError("bad metrics line", at + e.offset());
        }
        try {
            if (pending == 0) {
                Reader r(j, "");
                if (r.require<std::string>("format") != "kvpilot-metrics") throw ConfigError("not a metrics file", "format");
                if (r.require<int>("version") != kMetricsVersion) {
                    throw VersionError("metrics version mismatch: expected " + std::to_string(kMetricsVersion));
                }
                RunMetrics m;
                m.header.scenario = r.require<std::string>("scenario");
                m.header.kind = parse_scenario_kind(r.require<std::string>("kind"));
                m.header.mode = parse_controller_mode(r.require<std::string>("mode"));
                m.header.fixed_profile = r.require<std::string>("fixed_profile");
                m.header.config_digest = r.require<std::string>("config_digest");
                m.header.seed = r.require<std::uint64_t>("seed");
                pending = r.require<std::uint64_t>("records");
                (void)r.raw("summary");  // recomputed from the records
                r.finish();
                runs.push_back(std::move(m));
                if (pending == 0) runs.back().metrics.summary = summarize({});
            } else {
                runs.back().metrics.records.push_back(record_from(j, "record"));
                if (--pending == 0) runs.back().metrics.summary = summarize(runs.back().metrics.records);
            }
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), at);
        }
    }
    if (pending != 0) throw ParseError("truncated metrics file", text.size());
    return runs;
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "text") return ReportFormat::text;
    if (s == "csv") return ReportFormat::csv;
    throw ConfigError("unknown format '" + s + "'", "format");
}

std::string csv_field(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

namespace {

std::string fixed(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

using Row = std::vector<std::string>;

void render(std::string& out, const std::string& title, const Row& head, const std::vector<Row>& rows,
            ReportFormat f) {
    if (f == ReportFormat::csv) {
        out += "# " + title + "\n";
        auto line = [&](const Row& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_field(r[i]);
            out += '\n';
        };
        line(head);
        for (const auto& r : rows) line(r);
        out += '\n';
        return;
    }
    std::vector<std::size_t> w(head.size());
    for (std::size_t i = 0; i < head.size(); ++i) w[i] = head[i].size();
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
    }
    auto line = [&](const Row& r) {
        out += '|';
        for (std::size_t i = 0; i < r.size(); ++i) out += ' ' + r[i] + std::string(w[i] - r[i].size(), ' ') + " |";
        out += '\n';
    };
    out += "## " + title + "\n\n";
    line(head);
    out += '|';
    for (std::size_t x : w) out += std::string(x + 2, '-') + '|';
    out += '\n';
    for (const auto& r : rows) line(r);
    out += '\n';
}

std::string mode_label(const RunHeader& h) {
    return h.mode == ControllerMode::fixed_profile ? std::string("fixed_profile:") + h.fixed_profile : to_string(h.mode);
}

}  // namespace

std::string emit_report(const std::vector<RunMetrics>& runs, ReportFormat format, const std::vector<ReportTable>& tables) {
    std::string out;
    for (ReportTable t : tables) {
        std::vector<Row> rows;
        if (t == ReportTable::summary) {
            for (const auto& r : runs) {
                const SimSummary& s = r.metrics.summary;
                rows.push_back({r.header.scenario, to_string(r.header.kind), mode_label(r.header), std::to_string(s.count),
                                fixed(s.mean_jct, 6), fixed(s.p50_jct, 6), fixed(s.p99_jct, 6), fixed(s.mean_ttft, 6),
                                fixed(s.slo_violation_rate, 6), fixed(s.recompute_rate, 6)});
            }
            render(out, "summary",
                   {"scenario", "kind", "mode", "requests", "mean_jct_s", "p50_jct_s", "p99_jct_s", "mean_ttft_s",
                    "slo_violation_rate", "recompute_rate"},
                   rows, format);
        } else if (t == ReportTable::breakdown) {
            for (const auto& r : runs) {
                for (const auto& b : report_breakdown(r.metrics)) {
                    Row row{r.header.scenario, mode_label(r.header), b.label, std::to_string(b.requests)};
                    for (double v : b.shares) row.push_back(fixed(100.0 * v, 4));
                    rows.push_back(std::move(row));
                }
            }
            render(out, "breakdown",
                   {"scenario", "mode", "profile", "requests", "prefill_pct", "compress_pct", "communicate_pct",
                    "decompress_pct", "decode_pct"},
                   rows, format);
        } else {
            for (const auto& r : runs) {
                for (const auto& x : r.metrics.records) {
                    const DecisionRecord& d = x.decision;
                    rows.push_back({r.header.scenario, mode_label(r.header), std::to_string(d.request_id),
                                    fixed(x.arrival, 6), fixed(x.bandwidth / kBytesPerGbps, 6), d.profile_id,
                                    d.explored ? "1" : "0", d.fallback ? "1" : "0", x.recomputed ? "1" : "0",
                                    fixed(d.predicted, 6), fixed(x.jct, 6), fixed(x.ttft, 6)});
                }
            }
            render(out, "timeline",
                   {"scenario", "mode", "request_id", "arrival_s", "bandwidth_gbps", "profile", "explored",
                    "fallback", "recomputed", "predicted_s", "jct_s", "ttft_s"},
                   rows, format);
        }
    }
    return out;
}

}  // namespace kvpilot
