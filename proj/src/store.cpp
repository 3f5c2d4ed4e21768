// SPDX-License-Identifier: Apache-2.0
#include "kvpilot/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "kvpilot/pipeline.hpp"
#include "kvpilot/rng.hpp"
#include "kvpilot/strategy.hpp"

namespace kvpilot {

using detail::Json;
using detail::Reader;

void ProfileStore::validate() const {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const Profile& p = profiles[i];
        const std::string f = "profiles[" + std::to_string(i) + "]";
        if (p.id.empty()) throw ConfigError("empty id", f + ".id");
        if (p.is_uncompressed()) throw ConfigError("the uncompressed profile is implicit", f + ".id");
        if (!ids.insert(p.id).second) throw ConfigError("duplicate id '" + p.id + "'", f + ".id");
        for (double v : {p.cr, p.s, p.s_enc, p.s_dec, p.q}) {
            if (!std::isfinite(v)) throw ConfigError("measurements must be finite", f);
        }
        try {
            p.validate();
            (void)StrategyConfig::parse(p.strategy);
        } catch (const Error& e) {
            throw ConfigError(e.what(), f);
        }
    }
}

namespace {

Json strategy_json(const StrategyConfig& s) {
    Json q;
    q["kind"] = std::string(to_string(s.quant.kind));
    if (s.quant.kind == QuantKind::uniform_group) {
        q["bits"] = s.quant.bits;
        q["group_size"] = s.quant.group_size;
    } else {
        q["high_bits"] = s.quant.high_bits;
        q["low_bits"] = s.quant.low_bits;
        q["group_size"] = s.quant.group_size;
        q["retrieval_fraction"] = s.quant.retrieval_fraction;
    }
    return q;
}

}  // namespace

std::string serialize_store(const ProfileStore& s) {
    s.validate();
    Json j;
    j["format"] = "kvpilot-profile-store";
    j["version"] = kStoreVersion;
    j["config_digest"] = s.config_digest;
    j["seed"] = s.seed;
    j["trace_digest"] = s.trace_digest;
    Json ps = Json::array();
    for (const auto& p : s.profiles) {
        const StrategyConfig sc = StrategyConfig::parse(p.strategy);
        Json o;
        o["id"] = p.id;
        o["workload"] = p.workload;
        o["strategy"] = p.strategy;
        o["transform"] = std::string(to_string(sc.transform.kind));
        o["quant"] = strategy_json(sc);
        o["codec"] = std::string(to_string(sc.codec.kind));
        o["cr"] = p.cr;
        o["s"] = p.s;
        o["s_enc"] = p.s_enc;
        o["s_dec"] = p.s_dec;
        o["q"] = p.q;
        ps.push_back(std::move(o));
    }
    j["profiles"] = ps;
    return j.dump(2) + "\n";
}

ProfileStore parse_store(std::string_view text) {
    const Json j = detail::parse_json(text);
    Reader r(j, "");
    if (r.require<std::string>("format") != "kvpilot-profile-store") {
        throw ConfigError("not a profile store", "format");
    }
    if (const Json* v = r.raw("version"); !v || !v->is_number_integer() || v->get<std::int64_t>() != kStoreVersion) {
        throw VersionError("profile store version mismatch: expected " + std::to_string(kStoreVersion) +
                           (v ? ", found " + v->dump() : ", found none"));
    }
    ProfileStore s;
    s.config_digest = r.require<std::string>("config_digest");
    s.seed = r.require<std::uint64_t>("seed");
    s.trace_digest = r.require<std::string>("trace_digest");
    const Json* ps = r.raw("profiles");
    if (!ps || !ps->is_array()) throw ConfigError("expected an array", "profiles");
    for (std::size_t i = 0; i < ps->size(); ++i) {
        Reader pr((*ps)[i], "profiles[" + std::to_string(i) + "]");
        Profile p;
        p.id = pr.require<std::string>("id");
        p.workload = pr.require<std::string>("workload");
        p.strategy = pr.require<std::string>("strategy");
        // structured copies of the strategy; the id string is authoritative
        const StrategyConfig sc = StrategyConfig::parse(p.strategy);
        if (pr.require<std::string>("transform") != to_string(sc.transform.kind) ||
            pr.require<std::string>("codec") != to_string(sc.codec.kind)) {
            throw ConfigError("does not match strategy id", pr.field("strategy"));
        }
        const Json* q = pr.raw("quant");
        if (!q || *q != strategy_json(sc)) throw ConfigError("does not match strategy id", pr.field("quant"));
        p.cr = pr.require<double>("cr");
        p.s = pr.require<double>("s");
        p.s_enc = pr.require<double>("s_enc");
        p.s_dec = pr.require<double>("s_dec");
        p.q = pr.require<double>("q");
        pr.finish();
        s.profiles.push_back(std::move(p));
    }
    r.finish();
    s.validate();
    return s;
}

namespace {

class FileLock {
public:
    FileLock(const std::string& path, int op) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error("cannot open lock file " + path + ": " + std::strerror(errno));
        while (::flock(fd_, op) != 0) {
            if (errno != EINTR) {
                ::close(fd_);
                throw Error("cannot lock " + path + ": " + std::strerror(errno));
            }
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace

void store_profiles(const std::string& path, const ProfileStore& s) {
    const std::string text = serialize_store(s);
    FileLock lock(path + ".lock", LOCK_EX);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << text;
        if (!out.flush()) throw Error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw Error("cannot replace " + path + ": " + std::strerror(errno));
    }
}

ProfileStore load_profiles(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path, "store");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_store(ss.str());
}

std::vector<Profile> profiles_from_search(const SearchResult& r, const std::string& workload) {
    std::vector<Profile> out;
    for (const auto& o : r.feasible) {
        Profile p;
        p.id = o.id;
        p.strategy = o.id;
        p.workload = workload;
        p.cr = o.result.cr;
        p.s_enc = o.result.s_enc;
        p.s_dec = o.result.s_dec;
        p.s = harmonic_throughput(p.s_enc, p.s_dec);
        p.q = o.result.acc;
        out.push_back(std::move(p));
    }
    return out;
}

std::string serialize_search_trace(const SearchResult& r, const std::string& config_digest, std::uint64_t seed) {
    std::string out = Json{{"format", "kvpilot-search-trace"},
                           {"version", 1},
                           {"config_digest", config_digest},
                           {"seed", seed},
                           {"evaluations", r.evaluations()},
                           {"feasible", r.feasible.size()},
                           {"stop_reason", r.stop_reason},
                           {"diagnostic", r.diagnostic}}
                          .dump();
    out += '\n';
    for (const auto& t : r.trace) {
        out += Json{{"iteration", t.iteration}, {"initial", t.initial}, {"id", t.id},
                    {"lambda", t.lambda},       {"score", t.score},     {"acc", t.acc},
                    {"cr", t.cr},               {"lat", t.lat},         {"remaining", t.remaining},
                    {"k_fail", t.k_fail},       {"pruned", t.pruned}}
                   .dump();
        out += '\n';
    }
    return out;
}

}  // namespace kvpilot
