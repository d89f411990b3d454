//===- simulator.cpp - Schedule replay and latency measurement ------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/simulator.h"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace pipeflow {

std::string instanceName(const Program &program, int op,
                         const std::vector<int64_t> &ivs) {
  std::string out = program.ops()[op].stmt.id + "[";
  for (size_t i = 0; i < ivs.size(); ++i)
    out += (i ? "," : "") + std::to_string(ivs[i]);
  return out + "]";
}

uint64_t countInstances(const Program &program) {
  uint64_t total = 0;
  for (const OpInfo &op : program.ops()) {
    uint64_t n = 1;
    for (int l : op.loops)
      n *= static_cast<uint64_t>(program.loops()[l].tripCount);
    total += n;
  }
  return total;
}

std::vector<DynInstance> enumerateInstances(const Program &program,
                                            const Schedule &schedule,
                                            uint64_t maxInstances) {
  checkScheduleShape(program, schedule);
  uint64_t n = countInstances(program);
  if (n > maxInstances)
    throw Error("kernel has " + std::to_string(n) +
                " dynamic instances, above the cap of " +
                std::to_string(maxInstances));
  std::vector<DynInstance> out;
  out.reserve(n);
  for (size_t op = 0; op < program.ops().size(); ++op) {
    const OpInfo &info = program.ops()[op];
    std::vector<int64_t> ivs(info.loops.size(), 0);
    bool empty = false;
    for (int l : info.loops)
      empty |= program.loops()[l].tripCount <= 0;
    while (!empty) {
      DynInstance inst;
      inst.op = static_cast<int>(op);
      inst.ivs = ivs;
      inst.start = absoluteTime(program, schedule, inst.op, ivs);
      inst.end = inst.start + info.latency;
      out.push_back(std::move(inst));
      int d = static_cast<int>(ivs.size()) - 1;
      for (; d >= 0; --d) {
        if (++ivs[d] < program.loops()[info.loops[d]].tripCount)
          break;
        ivs[d] = 0;
      }
      if (d < 0)
        break;
    }
  }
  return out;
}

int64_t overlappedLatency(const Program &program, const Schedule &schedule) {
  checkScheduleShape(program, schedule);
  // Every II is positive, so an op's last instance is its latest one.
  int64_t latest = 0;
  for (size_t op = 0; op < program.ops().size(); ++op) {
    const OpInfo &info = program.ops()[op];
    std::vector<int64_t> last;
    bool empty = false;
    for (int l : info.loops) {
      empty |= program.loops()[l].tripCount <= 0;
      last.push_back(program.loops()[l].tripCount - 1);
    }
    if (empty)
      continue;
    latest = std::max(latest, absoluteTime(program, schedule,
                                           static_cast<int>(op), last) +
                                  info.latency);
  }
  return latest;
}

int64_t sequentialLatency(const Program &program, const IIAssignment &ii,
                          const SchedulerOptions &options) {
  int64_t total = 0;
  for (const Item &item : program.kernel().body) {
    if (!item.isLoop()) {
      const Stmt &s = item.stmt();
      total += program.ops()[program.findOp(s.id)].latency;
      continue;
    }
    Kernel alone;
    alone.name = program.kernel().name;
    alone.arrays = program.kernel().arrays;
    alone.opdefs = program.kernel().opdefs;
    alone.body.push_back(item);
    Program nest(std::move(alone));
    ScheduleResult r = scheduleKernel(nest, ii, options);
    if (!r.feasible)
      throw Error("loop '" + item.loop().id +
                  "' cannot be scheduled on its own at the given IIs");
    total += overlappedLatency(nest, r.schedule);
  }
  return total;
}

namespace {

class Verifier {
public:
  Verifier(const Program &program, const Schedule &schedule,
           const VerifyOptions &options)
      : program(program), schedule(schedule), options(options) {}

  VerifyReport run() {
    checkScheduleShape(program, schedule);
    DependenceInfo deps = analyzeDependences(program, options.gaps);
    checkDependences(deps);
    checkSsa();
    checkPorts(deps);
    report.overlappedLatency = overlappedLatency(program, schedule);
    SchedulerOptions so;
    so.gaps = options.gaps;
    so.limits = options.limits;
    report.sequentialLatency = sequentialLatency(program, iiOf(schedule), so);
    if (report.overlappedLatency > 0)
      report.speedup = Rational(report.sequentialLatency) /
                       Rational(report.overlappedLatency);
    return std::move(report);
  }

private:
  void addViolation(DependenceViolation v) {
    ++report.totalViolations;
    if (report.violations.size() < options.maxRecorded)
      report.violations.push_back(std::move(v));
  }

  void checkDependences(const DependenceInfo &deps) {
    for (size_t i = 0; i < deps.pairs.size(); ++i) {
      const AccessPair &pair = deps.pairs[i];
      if (pair.kind == DepKind::PORT && !options.enumeratePortProblems)
        continue;
      for (const DependenceProblem &p : deps.problems[i]) {
        const int ns = p.numSrcVars();
        std::vector<int64_t> src, snk;
        enumeratePoints(p, [&](const std::vector<int64_t> &point) {
          src.assign(point.begin(), point.begin() + ns);
          snk.assign(point.begin() + ns, point.end());
          int64_t ts = absoluteTime(program, schedule, pair.source.op, src);
          int64_t tk = absoluteTime(program, schedule, pair.sink.op, snk);
          if (tk - ts < p.minGap)
            addViolation({pair.source.stmtId, pair.sink.stmtId,
                          depKindName(pair.kind), pair.source.array,
                          p.levelName(), src, snk, p.minGap, tk - ts});
          return true;
        });
      }
    }
  }

  /// Producer and consumer share every loop, so the gap is the same for all
  /// instances; the witness is the first one.
  void checkSsa() {
    for (const SsaEdge &e : program.ssaEdges()) {
      int64_t lat = program.ops()[e.producer].latency;
      int64_t gap =
          schedule.ops[e.consumer].start - schedule.ops[e.producer].start;
      if (gap >= lat)
        continue;
      std::vector<int64_t> zero(program.ops()[e.producer].loops.size(), 0);
      bool empty = false;
      for (int l : program.ops()[e.producer].loops)
        empty |= program.loops()[l].tripCount <= 0;
      if (empty)
        continue;
      addViolation({program.ops()[e.producer].stmt.id,
                    program.ops()[e.consumer].stmt.id, "SSA", "", "value",
                    zero, zero, lat, gap});
    }
  }

  void checkPorts(const DependenceInfo &deps) {
    std::vector<DynInstance> instances =
        enumerateInstances(program, schedule, options.maxInstances);
    std::map<std::string, int> banks;
    for (const OpInfo &op : program.ops())
      if (op.stmt.isMemoryAccess())
        banks.emplace(op.stmt.array, 0);
    std::vector<std::string> bankNames;
    for (auto &[name, idx] : banks) {
      idx = static_cast<int>(bankNames.size());
      bankNames.push_back(name);
    }
    // (bank, port, cycle, instance)
    std::vector<std::tuple<int, int, int64_t, size_t>> uses;
    for (size_t i = 0; i < instances.size(); ++i) {
      const Stmt &s = program.ops()[instances[i].op].stmt;
      if (!s.isMemoryAccess())
        continue;
      uses.emplace_back(banks[s.array], deps.ports[instances[i].op],
                        instances[i].start, i);
    }
    std::sort(uses.begin(), uses.end());
    for (size_t i = 0; i < uses.size();) {
      size_t j = i + 1;
      while (j < uses.size() &&
             std::get<0>(uses[j]) == std::get<0>(uses[i]) &&
             std::get<1>(uses[j]) == std::get<1>(uses[i]) &&
             std::get<2>(uses[j]) == std::get<2>(uses[i]))
        ++j;
      if (j - i > 1) {
        ++report.totalPortConflicts;
        if (report.portConflicts.size() < options.maxRecorded) {
          PortConflict c;
          c.bank = bankNames[std::get<0>(uses[i])];
          c.port = std::get<1>(uses[i]);
          c.cycle = std::get<2>(uses[i]);
          for (size_t k = i; k < j; ++k) {
            const DynInstance &inst = instances[std::get<3>(uses[k])];
            c.instances.push_back(instanceName(program, inst.op, inst.ivs));
          }
          report.portConflicts.push_back(std::move(c));
        }
      }
      i = j;
    }
  }

  const Program &program;
  const Schedule &schedule;
  const VerifyOptions &options;
  VerifyReport report;
};

} // namespace

VerifyReport verifySchedule(const Program &program, const Schedule &schedule,
                            const VerifyOptions &options) {
  return Verifier(program, schedule, options).run();
}

std::string renderGantt(const Program &program, const Schedule &schedule,
                        int width) {
  checkScheduleShape(program, schedule);
  int64_t total = overlappedLatency(program, schedule);
  int64_t perColumn = std::max<int64_t>(1, (total + width - 1) / width);
  int64_t columns = total == 0 ? 0 : (total + perColumn - 1) / perColumn;

  // Top-level nest of every op, or -1.
  std::vector<int> nestOf(program.ops().size(), -1);
  std::vector<int> nests;
  for (const TimedNode &n : program.topLevel())
    if (n.isLoop)
      nests.push_back(n.index);
  for (size_t op = 0; op < program.ops().size(); ++op)
    if (!program.ops()[op].loops.empty())
      nestOf[op] = program.ops()[op].loops.front();

  size_t label = 4;
  for (int l : nests)
    label = std::max(label, program.loops()[l].id.size());

  std::ostringstream out;
  out << "gantt: " << total << " cycles, " << perColumn << " per column\n";
  std::vector<DynInstance> instances = enumerateInstances(program, schedule);
  for (int l : nests) {
    std::vector<int64_t> delta(columns + 1, 0);
    for (const DynInstance &inst : instances) {
      if (nestOf[inst.op] != l)
        continue;
      // Active over [start, max(end, start + 1)).
      int64_t first = inst.start / perColumn;
      int64_t last = (std::max(inst.end, inst.start + 1) - 1) / perColumn;
      ++delta[first];
      --delta[last + 1];
    }
    std::string row;
    int64_t active = 0;
    for (int64_t c = 0; c < columns; ++c) {
      active += delta[c];
      row += active > 0 ? '#' : '.';
    }
    std::string id = program.loops()[l].id;
    out << id << std::string(label - id.size(), ' ') << " |" << row << "|\n";
  }
  return out.str();
}

} // namespace pipeflow
