//===- driver.h - Command-line pipeline -------------------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_DRIVER_H
#define PIPEFLOW_DRIVER_H

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace pipeflow {

enum ExitCode : int {
  ExitOk = 0,
  ExitInfeasible = 1,
  ExitInvalid = 2,
  ExitVerifyFailed = 3,
  ExitIo = 4,
};

struct RunConfig {
  /// schedule, autotune, verify, report, dump-ilp or dump-deps.
  std::string command;
  std::string input;
  /// Schedule file checked by `verify`.
  std::string scheduleFile;
  std::map<std::string, int64_t> iiOverrides;
  std::optional<std::string> out;
  bool gantt = false;
  std::optional<std::string> dumpIlpDir;
  bool dumpDeps = false;
  uint64_t maxInstances = 10'000'000;
};

/// Runs one command. Artifacts go to \c cfg.out, or to \p out when unset;
/// the one-line summary always goes to \p out and diagnostics to \p err.
int runDriver(const RunConfig &cfg, std::ostream &out, std::ostream &err);

} // namespace pipeflow

#endif // PIPEFLOW_DRIVER_H
