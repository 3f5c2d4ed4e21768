// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kvpilot/error.hpp"
#include "kvpilot/latency.hpp"

namespace kvpilot {

BandwidthTrace BandwidthTrace::constant(double bytes_per_s, double t0) {
    BandwidthTrace t{{t0}, {bytes_per_s}};
    t.validate();
    return t;
}

void BandwidthTrace::validate() const {
    if (times.empty() || times.size() != bandwidth.size()) throw ConfigError("empty or ragged trace", "trace");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || (i > 0 && !(times[i] > times[i - 1]))) {
            throw ConfigError("times must be finite and strictly increasing", "trace.times");
        }
        if (!(bandwidth[i] > 0.0) || !std::isfinite(bandwidth[i])) {
            throw ConfigError("bandwidth must be finite and > 0", "trace.bandwidth");
        }
    }
}

namespace {

std::size_t segment_at(const BandwidthTrace& tr, double t) {
    if (tr.times.empty() || t < tr.times.front()) {
        throw ConfigError("time " + std::to_string(t) + " precedes the trace", "trace");
    }
    auto it = std::upper_bound(tr.times.begin(), tr.times.end(), t);
    return static_cast<std::size_t>(it - tr.times.begin()) - 1;
}

}  // namespace

double BandwidthTrace::bandwidth_at(double t) const { return bandwidth[segment_at(*this, t)]; }

double BandwidthTrace::transfer_time(double start, double bytes) const {
    std::size_t k = segment_at(*this, start);
    double elapsed = 0.0;
    double remaining = bytes;
    double cur = start;
    while (remaining > 0.0) {
        if (k + 1 == times.size()) return elapsed + remaining / bandwidth[k];
        const double span = times[k + 1] - cur;
        const double cap = bandwidth[k] * span;
        if (cap >= remaining) return elapsed + remaining / bandwidth[k];
        remaining -= cap;
        elapsed += span;
        cur = times[++k];
    }
    return elapsed;
}

namespace {

double parse_number(std::string_view field, std::size_t offset) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
        field.remove_prefix(1);
        ++offset;
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size() || field.empty()) {
        throw ParseError("expected a number", offset);
    }
    return v;
}

}  // namespace

BandwidthTrace parse_trace_csv(std::string_view text) {
    BandwidthTrace tr;
    bool header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const std::size_t at = pos;
        pos = end + 1;
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "t_s,bandwidth_gbps") throw ParseError("expected header 't_s,bandwidth_gbps'", at);
            header = true;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw ParseError("expected two columns", at);
        }
        const double t = parse_number(line.substr(0, comma), at);
        const double g = parse_number(line.substr(comma + 1), at + comma + 1);
        if (!tr.times.empty() && !(t > tr.times.back())) throw ParseError("times must strictly increase", at);
        if (!(g > 0.0) || !std::isfinite(g)) throw ParseError("bandwidth must be > 0", at + comma + 1);
        tr.times.push_back(t);
        tr.bandwidth.push_back(g * kBytesPerGbps);
    }
    if (!header) throw ParseError("missing header", text.size());
    if (tr.times.empty()) throw ParseError("trace has no rows", text.size());
    return tr;
}

BandwidthTrace load_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path, "trace");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_trace_csv(ss.str());
}

std::string format_trace_csv(const BandwidthTrace& trace) {
    std::string out = "t_s,bandwidth_gbps\n";
    char buf[64];
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        auto r = std::to_chars(buf, buf + sizeof buf, trace.times[i]);
        out.append(buf, r.ptr);
        out += ',';
        r = std::to_chars(buf, buf + sizeof buf, trace.bandwidth[i] / kBytesPerGbps);
        out.append(buf, r.ptr);
        out += '\n';
    }
    return out;
}

void DriftModel::validate() const {
    for (const auto& [id, steps] : factors) {
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (!(steps[i].second > 0.0) || !std::isfinite(steps[i].second)) {
                throw ConfigError("factors must be finite and > 0", "drift.factors." + id);
            }
            if (i > 0 && !(steps[i].first > steps[i - 1].first)) {
                throw ConfigError("step times must strictly increase", "drift.factors." + id);
            }
        }
    }
    if (!(overhead >= 0.0) || !std::isfinite(overhead)) throw ConfigError("must be finite and >= 0", "drift.overhead");
}

double DriftModel::factor(const std::string& profile_id, double t) const {
    auto it = factors.find(profile_id);
    if (it == factors.end()) {
        if (profile_id == kNoCompressionId) return 1.0;
        it = factors.find("*");
        if (it == factors.end()) return 1.0;
    }
    double f = 1.0;
    for (const auto& [ts, v] : it->second) {
        if (ts > t) break;
        f = v;
    }
    return f;
}

}  // namespace kvpilot
