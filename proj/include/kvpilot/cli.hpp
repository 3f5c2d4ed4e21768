// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace kvpilot {

/// Environment variable naming the default profile store.
inline constexpr const char* kStoreEnv = "KVPILOT_STORE";

/// Entry point of the `kvpilot` tool. Subcommands: profile, pareto,
/// envelope, simulate, report. Returns 0 on success, 2 on usage errors or
/// missing inputs, 1 on any other failure; diagnostics go to `err`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kvpilot
