//===- autotune.cpp - Binary search for initiation intervals --------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/scheduler.h"
#include "scheduler_internal.h"

#include <functional>

namespace pipeflow {

static bool isChild(const LoopInfo &loop, int parent) {
  return parent < 0 ? loop.parents.empty()
                    : !loop.parents.empty() && loop.parents.back() == parent;
}

int64_t iiUpperBound(const Program &program, int loop) {
  int64_t bound = 0;
  for (const OpInfo &op : program.ops())
    if (!op.loops.empty() && op.loops.back() == loop)
      bound += op.latency + 1;
  for (size_t c = 0; c < program.loops().size(); ++c)
    if (isChild(program.loops()[c], loop))
      bound += program.loops()[c].tripCount *
               iiUpperBound(program, static_cast<int>(c));
  return std::max<int64_t>(bound, 1);
}

IIAssignment initialIIs(const Program &program,
                        const std::map<std::string, int64_t> &overrides) {
  IIAssignment ii;
  for (const LoopInfo &l : program.loops())
    if (l.targetII)
      ii[l.id] = *l.targetII;
  for (const auto &[key, value] : overrides) {
    if (value < 1)
      throw Error("initiation interval for '" + key + "' must be positive");
    bool matched = program.findLoop(key) >= 0;
    for (const LoopInfo &l : program.loops())
      if (l.iv == key) {
        ii[l.id] = value;
        matched = true;
      }
    if (!matched)
      throw Error("no loop named '" + key + "'");
  }
  // Exact ids win over induction variable names.
  for (const auto &[key, value] : overrides)
    if (program.findLoop(key) >= 0)
      ii[key] = value;
  return ii;
}

AutotuneResult autotune(const Program &program, const IIAssignment &fixed,
                        const SchedulerOptions &options) {
  AutotuneResult out;
  const std::vector<LoopInfo> &loops = program.loops();

  // Children before parents, so an outer loop is tuned against the final
  // IIs of the loops it contains.
  std::vector<int> order;
  std::function<void(int)> visit = [&](int parent) {
    for (size_t c = 0; c < loops.size(); ++c) {
      if (!isChild(loops[c], parent))
        continue;
      visit(static_cast<int>(c));
      order.push_back(static_cast<int>(c));
    }
  };
  visit(-1);

  std::vector<int> tunable;
  for (int l : order) {
    auto it = fixed.find(loops[l].id);
    if (it != fixed.end())
      out.ii[loops[l].id] = it->second;
    else if (loops[l].targetII)
      out.ii[loops[l].id] = *loops[l].targetII;
    else {
      out.ii[loops[l].id] = iiUpperBound(program, l);
      tunable.push_back(l);
    }
  }

  DependenceInfo deps = analyzeDependences(program, options.gaps);
  SchedulerOptions quiet = options;
  quiet.onIlp = nullptr;
  SlackCache cache;
  auto feasible = [&](const IIAssignment &ii) {
    ++out.attempts;
    ScheduleResult r = solveSchedule(program, deps, ii, quiet, &cache, true);
    return r.feasible;
  };

  for (int l : tunable) {
    const std::string &id = loops[l].id;
    int64_t lo = 1, hi = out.ii[id];
    if (!feasible(out.ii))
      throw Error("no feasible II for loop '" + id + "' up to " +
                  std::to_string(hi));
    while (lo < hi) {
      int64_t mid = lo + (hi - lo) / 2;
      out.ii[id] = mid;
      if (feasible(out.ii))
        hi = mid;
      else
        lo = mid + 1;
    }
    out.ii[id] = lo;
  }

  out.result = solveSchedule(program, deps, out.ii, options, &cache, false);
  return out;
}

} // namespace pipeflow
