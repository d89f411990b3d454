//===- simulator.h - Schedule replay and latency measurement ----*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Replays a schedule over every dynamic instance of a kernel. Dependence
// ordering is checked point by point over the dependence polyhedra, port
// exclusivity by a per-(bank, port) cycle occupancy map.
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_SIMULATOR_H
#define PIPEFLOW_SIMULATOR_H

#include "pipeflow/scheduler.h"

namespace pipeflow {

struct DynInstance {
  int op = 0;
  std::vector<int64_t> ivs;
  int64_t start = 0;
  /// start + latency.
  int64_t end = 0;
};

/// "S3[1,2]".
std::string instanceName(const Program &program, int op,
                         const std::vector<int64_t> &ivs);

struct DependenceViolation {
  std::string source;
  std::string sink;
  /// RAW, WAR, WAW, PORT or SSA.
  std::string kind;
  std::string array;
  std::string level;
  std::vector<int64_t> srcIvs;
  std::vector<int64_t> snkIvs;
  int64_t requiredGap = 0;
  int64_t actualGap = 0;
};

struct PortConflict {
  std::string bank;
  int port = 0;
  int64_t cycle = 0;
  std::vector<std::string> instances;
};

struct VerifyReport {
  /// At most VerifyOptions::maxRecorded entries; the totals count all.
  std::vector<DependenceViolation> violations;
  std::vector<PortConflict> portConflicts;
  uint64_t totalViolations = 0;
  uint64_t totalPortConflicts = 0;
  int64_t overlappedLatency = 0;
  int64_t sequentialLatency = 0;
  /// sequential / overlapped; unset when the overlapped latency is 0.
  std::optional<Rational> speedup;

  bool clean() const {
    return totalViolations == 0 && totalPortConflicts == 0;
  }
};

struct VerifyOptions {
  GapConfig gaps;
  SolverLimits limits;
  uint64_t maxInstances = 10'000'000;
  size_t maxRecorded = 1000;
  /// Also walk every point of the PORT pseudo-dependences. The occupancy map
  /// already catches double-booked ports; this additionally checks ordering.
  bool enumeratePortProblems = false;
};

/// Number of dynamic instances of the whole kernel.
uint64_t countInstances(const Program &program);

/// One instance per (op, iteration vector), ops in program order and
/// iteration vectors in lexicographic order. Throws Error above the cap.
std::vector<DynInstance> enumerateInstances(const Program &program,
                                            const Schedule &schedule,
                                            uint64_t maxInstances = 10'000'000);

/// Largest end cycle over all instances; 0 for a kernel with none.
int64_t overlappedLatency(const Program &program, const Schedule &schedule);

/// No-overlap baseline: every top-level nest runs alone on its own
/// earliest-start schedule, one after the other, followed by the top-level
/// ops. Throws Error if a nest cannot be scheduled at \p ii on its own.
int64_t sequentialLatency(const Program &program, const IIAssignment &ii,
                          const SchedulerOptions &options = {});

VerifyReport verifySchedule(const Program &program, const Schedule &schedule,
                            const VerifyOptions &options = {});

/// One row per top-level nest; `#` where some instance of the nest is active
/// within the column's cycle range.
std::string renderGantt(const Program &program, const Schedule &schedule,
                        int width = 72);

} // namespace pipeflow

#endif // PIPEFLOW_SIMULATOR_H
