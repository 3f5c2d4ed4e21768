// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kvpilot/error.hpp"
#include "kvpilot/latency.hpp"
#include "kvpilot/search.hpp"

namespace kvpilot {

inline constexpr int kStoreVersion = 1;

/// Artifact version does not match this build.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Offline profiling output. Profiles carry their full strategy; the
/// uncompressed profile is implicit and never stored.
struct ProfileStore {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string trace_digest;  ///< digest of the search trace that produced it
    std::vector<Profile> profiles;

    /// Unique ids, finite measurements, parseable strategies.
    void validate() const;
    bool operator==(const ProfileStore&) const = default;
};

/// JSON document:
///
///     { "format": "kvpilot-profile-store", "version": 1,
///       "config_digest": HEX, "seed": INT, "trace_digest": HEX,
///       "profiles": [ { "id", "workload", "strategy": ID,
///                       "transform", "quant": {...}, "codec",
///                       "cr", "s", "s_enc", "s_dec", "q" } ] }
///
/// Doubles are written in shortest round-trip form.
std::string serialize_store(const ProfileStore& s);
/// ParseError (with byte offset) on malformed text, VersionError on a
/// version mismatch, ConfigError on schema violations.
ProfileStore parse_store(std::string_view text);

/// Writes through a temporary file and rename while holding an exclusive
/// advisory lock on `path + ".lock"`.
void store_profiles(const std::string& path, const ProfileStore& s);
ProfileStore load_profiles(const std::string& path);

/// Feasible search results as profiles: q = acc, id = strategy id.
std::vector<Profile> profiles_from_search(const SearchResult& r, const std::string& workload);

/// One JSON line per trace record, preceded by a header line.
std::string serialize_search_trace(const SearchResult& r, const std::string& config_digest, std::uint64_t seed);

}  // namespace kvpilot
