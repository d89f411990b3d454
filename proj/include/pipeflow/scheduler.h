//===- scheduler.h - Slack computation and scheduling ILP -------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Every op and loop gets a time variable: its start offset relative to the
// start of the enclosing region (a loop iteration or the kernel). The
// absolute start of an op instance is
//
//   sum over enclosing loops L of (t_L + iv_L * II_L)  +  t_op.
//
// Each memory dependence yields a slack, the minimum over its polyhedron of
// the sink-minus-source iteration-time difference less the required gap, and
// the constraint (source path times) - (sink path times) <= slack, where a
// path is the chain of time variables below the deepest common loop.
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_SCHEDULER_H
#define PIPEFLOW_SCHEDULER_H

#include "pipeflow/dependence.h"
#include "pipeflow/ilp.h"

#include <functional>
#include <span>

namespace pipeflow {

/// Loop id -> initiation interval.
using IIAssignment = std::map<std::string, int64_t>;

struct ScheduledLoop {
  std::string id;
  int64_t start = 0;
  int64_t ii = 1;

  bool operator==(const ScheduledLoop &) const = default;
};

struct ScheduledOp {
  std::string id;
  int64_t start = 0;

  bool operator==(const ScheduledOp &) const = default;
};

/// Loops and ops appear in program pre-order, matching Program indices.
struct Schedule {
  std::vector<ScheduledLoop> loops;
  std::vector<ScheduledOp> ops;
  int64_t horizon = 0;

  bool operator==(const Schedule &) const = default;
};

/// (source path) - (sink path) <= slack. Paths hold Program::nodes()
/// indices: the loops below the deepest common loop, then the op itself.
struct SlackConstraint {
  int srcOp = 0;
  int snkOp = 0;
  std::vector<int> srcPath;
  std::vector<int> snkPath;
  int64_t slack = 0;
};

struct SchedulerOptions {
  GapConfig gaps;
  SolverLimits limits;
  /// Called with a name and each ILP before it is solved.
  std::function<void(const std::string &, const ILPProblem &)> onIlp;
};

struct ScheduleResult {
  bool feasible = false;
  Schedule schedule;
  /// Sum over SSA edges of (t_consumer - t_producer - latency(producer)).
  Rational delayObjective = 0;
  std::vector<SlackConstraint> constraints;
  SolverStats stats;
};

/// Absolute start cycle of one instance of \p op. Throws Error when \p ivs
/// does not match the op's loop nest.
int64_t absoluteTime(const Program &program, const Schedule &schedule, int op,
                     std::span<const int64_t> ivs);

/// Checks that \p schedule names every op and loop of \p program exactly
/// once, in program order, with nonnegative offsets and positive IIs.
void checkScheduleShape(const Program &program, const Schedule &schedule);

/// IIs recorded in a schedule.
IIAssignment iiOf(const Schedule &schedule);

/// Minimum of sum(snk iv * II) - sum(src iv * II) - gap over the problem's
/// polyhedron; nullopt when the polyhedron is empty.
std::optional<int64_t> computeSlack(const Program &program,
                                    const DependenceProblem &problem,
                                    const IIAssignment &ii,
                                    SolverStats *stats = nullptr,
                                    const SchedulerOptions &options = {});

/// The slack ILP for one problem, exposed for dumping and cross-checks.
/// Variables follow DependenceProblem order.
ILPProblem buildSlackIlp(const Program &program,
                         const DependenceProblem &problem,
                         const IIAssignment &ii);

/// Upper bound on every time variable: sum over loops of II * trip plus
/// sum over ops of (latency + 1).
int64_t horizonBound(const Program &program, const IIAssignment &ii);

/// Variables are indexed like Program::nodes(). The objective is the total
/// SSA delay.
ILPProblem buildSchedulingIlp(const Program &program, const IIAssignment &ii,
                              const std::vector<SlackConstraint> &slacks);

/// Per-pair slack constraints at \p ii, merged per (source op, sink op)
/// keeping the smallest slack.
std::vector<SlackConstraint>
computeSlackConstraints(const Program &program, const DependenceInfo &deps,
                        const IIAssignment &ii, SolverStats *stats = nullptr,
                        const SchedulerOptions &options = {});

ScheduleResult scheduleKernel(const Program &program, const IIAssignment &ii,
                              const SchedulerOptions &options = {});
ScheduleResult scheduleKernel(const Program &program,
                              const DependenceInfo &deps,
                              const IIAssignment &ii,
                              const SchedulerOptions &options = {});

/// Sum of SSA delays a schedule incurs.
int64_t delayObjective(const Program &program, const Schedule &schedule);

/// Largest II the autotuner tries for a loop: the span of a fully
/// sequential iteration.
int64_t iiUpperBound(const Program &program, int loop);

/// Fills in IIs for loops with no target (and no override).
struct AutotuneResult {
  IIAssignment ii;
  ScheduleResult result;
  /// Number of scheduling attempts made by the search.
  int attempts = 0;
};

/// Binary-searches the smallest feasible II of every loop not fixed by
/// \p fixed or its target, innermost loops first. Throws Error("no feasible
/// II") if even the upper bounds fail.
AutotuneResult autotune(const Program &program, const IIAssignment &fixed = {},
                        const SchedulerOptions &options = {});

/// Target IIs from the source, with \p overrides applied. A key sets every
/// loop with that induction variable name; keys that are exact loop ids are
/// applied last and win.
IIAssignment initialIIs(const Program &program,
                        const std::map<std::string, int64_t> &overrides);

} // namespace pipeflow

#endif // PIPEFLOW_SCHEDULER_H
