//===- scheduler.cpp - Slack computation and scheduling ILP ---------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/scheduler.h"
#include "scheduler_internal.h"

#include <algorithm>

namespace pipeflow {

static int64_t toInt(const Rational &r) {
  if (r.get_den() != 1 || !r.get_num().fits_slong_p())
    throw Error("non-integral value " + formatRational(r));
  return r.get_num().get_si();
}

int64_t requireII(const Program &program, const IIAssignment &ii, int loop) {
  const std::string &id = program.loops()[loop].id;
  auto it = ii.find(id);
  if (it == ii.end())
    throw Error("no initiation interval for loop '" + id + "'");
  if (it->second < 1)
    throw Error("initiation interval of loop '" + id + "' must be positive");
  return it->second;
}

//===----------------------------------------------------------------------===//
// Schedules
//===----------------------------------------------------------------------===//

int64_t absoluteTime(const Program &program, const Schedule &schedule, int op,
                     std::span<const int64_t> ivs) {
  const OpInfo &info = program.ops().at(op);
  if (ivs.size() != info.loops.size())
    throw Error("iteration vector of " + info.stmt.id + " has " +
                std::to_string(ivs.size()) + " entries, expected " +
                std::to_string(info.loops.size()));
  int64_t t = schedule.ops.at(op).start;
  for (size_t m = 0; m < ivs.size(); ++m) {
    int l = info.loops[m];
    const LoopInfo &loop = program.loops()[l];
    if (ivs[m] < 0 || ivs[m] >= loop.tripCount)
      throw Error("iteration " + std::to_string(ivs[m]) + " out of range for " +
                  "loop '" + loop.id + "'");
    const ScheduledLoop &sl = schedule.loops.at(l);
    t += sl.start + ivs[m] * sl.ii;
  }
  return t;
}

void checkScheduleShape(const Program &program, const Schedule &schedule) {
  if (schedule.loops.size() != program.loops().size())
    throw Error("schedule has " + std::to_string(schedule.loops.size()) +
                " loops, kernel has " +
                std::to_string(program.loops().size()));
  if (schedule.ops.size() != program.ops().size())
    throw Error("schedule has " + std::to_string(schedule.ops.size()) +
                " ops, kernel has " + std::to_string(program.ops().size()));
  for (size_t i = 0; i < schedule.loops.size(); ++i) {
    const ScheduledLoop &l = schedule.loops[i];
    if (l.id != program.loops()[i].id)
      throw Error("schedule loop '" + l.id + "' does not match kernel loop '" +
                  program.loops()[i].id + "'");
    if (l.start < 0)
      throw Error("negative start for loop '" + l.id + "'");
    if (l.ii < 1)
      throw Error("non-positive II for loop '" + l.id + "'");
  }
  for (size_t i = 0; i < schedule.ops.size(); ++i) {
    const ScheduledOp &o = schedule.ops[i];
    if (o.id != program.ops()[i].stmt.id)
      throw Error("schedule op '" + o.id + "' does not match kernel op '" +
                  program.ops()[i].stmt.id + "'");
    if (o.start < 0)
      throw Error("negative start for op '" + o.id + "'");
  }
}

IIAssignment iiOf(const Schedule &schedule) {
  IIAssignment out;
  for (const ScheduledLoop &l : schedule.loops)
    out[l.id] = l.ii;
  return out;
}

int64_t delayObjective(const Program &program, const Schedule &schedule) {
  int64_t total = 0;
  for (const SsaEdge &e : program.ssaEdges())
    total += schedule.ops.at(e.consumer).start -
             schedule.ops.at(e.producer).start -
             program.ops()[e.producer].latency;
  return total;
}

//===----------------------------------------------------------------------===//
// Slack
//===----------------------------------------------------------------------===//

ILPProblem buildSlackIlp(const Program &program,
                         const DependenceProblem &problem,
                         const IIAssignment &ii) {
  ILPProblem ilp;
  const AccessPair &pair = problem.pair;
  LinExpr objective(Rational(-problem.minGap));
  for (int m = 0; m < problem.numVars(); ++m) {
    bool isSrc = m < problem.numSrcVars();
    int loop = isSrc ? pair.source.loops[m]
                     : pair.sink.loops[m - problem.numSrcVars()];
    std::string name =
        (isSrc ? "src." : "snk.") + program.loops()[loop].id;
    int v = ilp.addVariable(name, true, Rational(0),
                            Rational(problem.upperBound(m)));
    int64_t k = requireII(program, ii, loop);
    objective.add(v, Rational(isSrc ? -k : k));
  }
  for (const IntConstraint &c : problem.constraints()) {
    LinExpr e(Rational(c.constant));
    for (int m = 0; m < problem.numVars(); ++m)
      if (c.coeffs[m] != 0)
        e.add(m, Rational(c.coeffs[m]));
    ilp.addConstraint(std::move(e), c.equality ? Relation::Equal
                                               : Relation::LessEq,
                      Rational(0));
  }
  ilp.setObjective(std::move(objective));
  return ilp;
}

static std::string slackIlpName(const DependenceProblem &p) {
  return "slack_" + p.pair.source.stmtId + "_" + p.pair.sink.stmtId + "_" +
         depKindName(p.pair.kind) + "_" + p.levelName();
}

std::optional<int64_t> computeSlack(const Program &program,
                                    const DependenceProblem &problem,
                                    const IIAssignment &ii,
                                    SolverStats *stats,
                                    const SchedulerOptions &options) {
  ILPProblem ilp = buildSlackIlp(program, problem, ii);
  if (options.onIlp)
    options.onIlp(slackIlpName(problem), ilp);
  Solution s = solveIlp(ilp, stats, options.limits);
  if (!s.optimal())
    return std::nullopt;
  return toInt(s.objective);
}

std::optional<int64_t> SlackCache::lookup(const Program &program,
                                          const DependenceProblem &problem,
                                          const IIAssignment &ii,
                                          SolverStats *stats,
                                          const SchedulerOptions &options) {
  // The polyhedron does not depend on II, so only the IIs of the loops in
  // the objective form the key, and an empty polyhedron is empty for all.
  Key key;
  key.problem = &problem;
  for (int l : problem.pair.source.loops)
    key.iis.push_back(requireII(program, ii, l));
  for (int l : problem.pair.sink.loops)
    key.iis.push_back(requireII(program, ii, l));
  if (!options.onIlp) {
    if (empty.count(&problem))
      return std::nullopt;
    auto it = values.find(key);
    if (it != values.end())
      return it->second;
  }
  std::optional<int64_t> v = computeSlack(program, problem, ii, stats, options);
  if (!v)
    empty.insert(&problem);
  else
    values[key] = *v;
  return v;
}

namespace {

/// Node index of every loop and op.
struct NodeIndex {
  std::vector<int> loop;
  std::vector<int> op;

  explicit NodeIndex(const Program &program)
      : loop(program.loops().size()), op(program.ops().size()) {
    for (size_t n = 0; n < program.nodes().size(); ++n) {
      const TimedNode &node = program.nodes()[n];
      (node.isLoop ? loop : op)[node.index] = static_cast<int>(n);
    }
  }
};

} // namespace

std::vector<SlackConstraint>
computeSlackConstraints(const Program &program, const DependenceInfo &deps,
                        const IIAssignment &ii, SolverStats *stats,
                        const SchedulerOptions &options, SlackCache *cache) {
  NodeIndex nodes(program);
  std::map<std::pair<int, int>, int64_t> merged;
  for (size_t i = 0; i < deps.pairs.size(); ++i) {
    std::optional<int64_t> best;
    for (const DependenceProblem &p : deps.problems[i]) {
      std::optional<int64_t> s =
          cache ? cache->lookup(program, p, ii, stats, options)
                : computeSlack(program, p, ii, stats, options);
      if (s && (!best || *s < *best))
        best = s;
    }
    if (!best)
      continue;
    std::pair<int, int> key{deps.pairs[i].source.op, deps.pairs[i].sink.op};
    auto it = merged.find(key);
    if (it == merged.end())
      merged.emplace(key, *best);
    else
      it->second = std::min(it->second, *best);
  }

  std::vector<SlackConstraint> out;
  for (const auto &[key, slack] : merged) {
    SlackConstraint c;
    c.srcOp = key.first;
    c.snkOp = key.second;
    c.slack = slack;
    int d = program.commonDepth(key.first, key.second);
    const std::vector<int> &srcLoops = program.ops()[key.first].loops;
    const std::vector<int> &snkLoops = program.ops()[key.second].loops;
    for (size_t m = d; m < srcLoops.size(); ++m)
      c.srcPath.push_back(nodes.loop[srcLoops[m]]);
    c.srcPath.push_back(nodes.op[key.first]);
    for (size_t m = d; m < snkLoops.size(); ++m)
      c.snkPath.push_back(nodes.loop[snkLoops[m]]);
    c.snkPath.push_back(nodes.op[key.second]);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SlackConstraint>
computeSlackConstraints(const Program &program, const DependenceInfo &deps,
                        const IIAssignment &ii, SolverStats *stats,
                        const SchedulerOptions &options) {
  return computeSlackConstraints(program, deps, ii, stats, options, nullptr);
}

//===----------------------------------------------------------------------===//
// Scheduling ILP
//===----------------------------------------------------------------------===//

int64_t horizonBound(const Program &program, const IIAssignment &ii) {
  int64_t h = 0;
  for (size_t l = 0; l < program.loops().size(); ++l)
    h += requireII(program, ii, static_cast<int>(l)) *
         program.loops()[l].tripCount;
  for (const OpInfo &op : program.ops())
    h += op.latency + 1;
  return h;
}

ILPProblem buildSchedulingIlp(const Program &program, const IIAssignment &ii,
                              const std::vector<SlackConstraint> &slacks) {
  ILPProblem ilp;
  const Rational h(horizonBound(program, ii));
  for (const TimedNode &n : program.nodes()) {
    const std::string &id = n.isLoop ? program.loops()[n.index].id
                                     : program.ops()[n.index].stmt.id;
    ilp.addVariable("t_" + id, true, Rational(0), h);
  }
  for (const SlackConstraint &c : slacks) {
    LinExpr e;
    for (int v : c.srcPath)
      e.add(v, Rational(1));
    for (int v : c.snkPath)
      e.add(v, Rational(-1));
    ilp.addConstraint(std::move(e), Relation::LessEq, Rational(c.slack));
  }
  NodeIndex nodes(program);
  LinExpr objective;
  for (const SsaEdge &e : program.ssaEdges()) {
    int p = nodes.op[e.producer], c = nodes.op[e.consumer];
    Rational lat(program.ops()[e.producer].latency);
    LinExpr d;
    d.add(c, Rational(1)).add(p, Rational(-1));
    ilp.addConstraint(d, Relation::GreaterEq, lat);
    objective.add(c, Rational(1)).add(p, Rational(-1)).addConstant(-lat);
  }
  ilp.setObjective(std::move(objective));
  return ilp;
}

ScheduleResult solveSchedule(const Program &program,
                             const DependenceInfo &deps,
                             const IIAssignment &ii,
                             const SchedulerOptions &options,
                             SlackCache *cache, bool feasibilityOnly) {
  ScheduleResult r;
  r.constraints =
      computeSlackConstraints(program, deps, ii, &r.stats, options, cache);
  ILPProblem ilp = buildSchedulingIlp(program, ii, r.constraints);
  if (feasibilityOnly) {
    ilp.setObjective(LinExpr());
    Solution s = solveIlp(ilp, &r.stats, options.limits);
    r.feasible = s.optimal();
    return r;
  }
  if (options.onIlp)
    options.onIlp("schedule", ilp);
  Solution s = solveIlp(ilp, &r.stats, options.limits);
  if (!s.optimal())
    return r;
  r.delayObjective = s.objective;

  // Earliest start among the delay-optimal schedules.
  ILPProblem second = ilp;
  second.addConstraint(ilp.objective(), Relation::Equal, s.objective);
  LinExpr total;
  for (int v = 0; v < ilp.numVariables(); ++v)
    total.add(v, Rational(1));
  second.setObjective(std::move(total));
  if (options.onIlp)
    options.onIlp("schedule_tiebreak", second);
  Solution t = solveIlp(second, &r.stats, options.limits);
  if (!t.optimal())
    throw SolverError("tie-break pass lost feasibility");

  r.feasible = true;
  r.schedule.horizon = horizonBound(program, ii);
  r.schedule.loops.resize(program.loops().size());
  r.schedule.ops.resize(program.ops().size());
  for (size_t n = 0; n < program.nodes().size(); ++n) {
    const TimedNode &node = program.nodes()[n];
    int64_t start = toInt(t.values[n]);
    if (node.isLoop) {
      r.schedule.loops[node.index] = {program.loops()[node.index].id, start,
                                      requireII(program, ii, node.index)};
    } else {
      r.schedule.ops[node.index] = {program.ops()[node.index].stmt.id, start};
    }
  }
  return r;
}

ScheduleResult scheduleKernel(const Program &program,
                              const DependenceInfo &deps,
                              const IIAssignment &ii,
                              const SchedulerOptions &options) {
  return solveSchedule(program, deps, ii, options, nullptr, false);
}

ScheduleResult scheduleKernel(const Program &program, const IIAssignment &ii,
                              const SchedulerOptions &options) {
  return scheduleKernel(program, analyzeDependences(program, options.gaps), ii,
                        options);
}

} // namespace pipeflow
