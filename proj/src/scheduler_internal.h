//===- scheduler_internal.h - Shared scheduler helpers --------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_SCHEDULER_INTERNAL_H
#define PIPEFLOW_SCHEDULER_INTERNAL_H

#include "pipeflow/scheduler.h"

#include <set>

namespace pipeflow {

/// II of \p loop; throws Error if missing or not positive.
int64_t requireII(const Program &program, const IIAssignment &ii, int loop);

/// Memoizes slacks across calls that share a DependenceInfo.
class SlackCache {
public:
  std::optional<int64_t> lookup(const Program &program,
                                const DependenceProblem &problem,
                                const IIAssignment &ii, SolverStats *stats,
                                const SchedulerOptions &options);

private:
  struct Key {
    const DependenceProblem *problem = nullptr;
    std::vector<int64_t> iis;
    bool operator<(const Key &o) const {
      if (problem != o.problem)
        return std::less<const DependenceProblem *>()(problem, o.problem);
      return iis < o.iis;
    }
  };
  std::map<Key, int64_t> values;
  std::set<const DependenceProblem *> empty;
};

std::vector<SlackConstraint>
computeSlackConstraints(const Program &program, const DependenceInfo &deps,
                        const IIAssignment &ii, SolverStats *stats,
                        const SchedulerOptions &options, SlackCache *cache);

/// Scheduling ILP plus tie-break pass. With \p feasibilityOnly only the
/// first ILP is solved, against a zero objective, and no schedule is filled.
ScheduleResult solveSchedule(const Program &program,
                             const DependenceInfo &deps,
                             const IIAssignment &ii,
                             const SchedulerOptions &options,
                             SlackCache *cache, bool feasibilityOnly);

} // namespace pipeflow

#endif // PIPEFLOW_SCHEDULER_INTERNAL_H
