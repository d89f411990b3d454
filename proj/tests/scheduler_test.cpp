//===- scheduler_test.cpp - Slack, scheduling ILP and autotuning ----------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "test_util.h"

#include "pipeflow/simulator.h"

#include <set>

using namespace pipeflow;

namespace {

const DependenceProblem *findProblem(const DependenceInfo &deps,
                                     const std::string &src,
                                     const std::string &snk, DepKind kind,
                                     const std::string &level) {
  for (size_t i = 0; i < deps.pairs.size(); ++i) {
    const AccessPair &p = deps.pairs[i];
    if (p.source.stmtId != src || p.sink.stmtId != snk || p.kind != kind)
      continue;
    for (const DependenceProblem &dp : deps.problems[i])
      if (dp.levelName() == level)
        return &dp;
  }
  return nullptr;
}

/// Minimum of the slack objective by walking every polyhedron point.
std::optional<int64_t> enumeratedSlack(const Program &program,
                                       const DependenceProblem &dp,
                                       const IIAssignment &ii) {
  const std::vector<int> &src = dp.pair.source.loops;
  const std::vector<int> &snk = dp.pair.sink.loops;
  std::optional<int64_t> best;
  enumeratePoints(dp, [&](const std::vector<int64_t> &pt) {
    int64_t v = -dp.minGap;
    for (size_t d = 0; d < src.size(); ++d)
      v -= pt[d] * ii.at(program.loops()[src[d]].id);
    for (size_t d = 0; d < snk.size(); ++d)
      v += pt[src.size() + d] * ii.at(program.loops()[snk[d]].id);
    if (!best || v < *best)
      best = v;
    return true;
  });
  return best;
}

int nodeOf(const Program &program, bool isLoop, const std::string &id) {
  int idx = isLoop ? program.findLoop(id) : program.findOp(id);
  for (size_t n = 0; n < program.nodes().size(); ++n)
    if (program.nodes()[n].isLoop == isLoop && program.nodes()[n].index == idx)
      return static_cast<int>(n);
  return -1;
}

} // namespace

TEST_CASE("absolute time sums region offsets and iteration strides") {
  Program p = testutil::loadBenchmark("conv1d.kir");
  ScheduleResult r = scheduleKernel(p, {{"j", 7}});
  REQUIRE(r.feasible);
  Schedule s = r.schedule;
  for (ScheduledLoop &l : s.loops)
    l.start = 0;
  for (ScheduledOp &o : s.ops)
    o.start = 0;
  int load = p.findOp("S0");
  std::vector<int64_t> j2{2};
  CHECK(absoluteTime(p, s, load, j2) == 14);

  s.loops[0].start = 3;
  s.ops[load].start = 2;
  std::vector<int64_t> zero{0};
  CHECK(absoluteTime(p, s, load, zero) == 5);
  // Last iteration of the 30-trip loop.
  std::vector<int64_t> last{29};
  CHECK(absoluteTime(p, s, load, last) == 3 + 29 * 7 + 2);

  std::vector<int64_t> outOfRange{30};
  CHECK_THROWS_AS(absoluteTime(p, s, load, outOfRange), Error);
  std::vector<int64_t> wrongDepth{1, 1};
  CHECK_THROWS_AS(absoluteTime(p, s, load, wrongDepth), Error);
}

TEST_CASE("absolute time of a top-level op is its offset") {
  Program p = lowerKernel("kernel k {\n"
                          "  array A : f32[4] ports=1 latency=1;\n"
                          "  x = load A[0];\n"
                          "  store A[1], x;\n"
                          "}\n");
  ScheduleResult r = scheduleKernel(p, {});
  REQUIRE(r.feasible);
  CHECK(absoluteTime(p, r.schedule, 1, {}) == r.schedule.ops[1].start);
  CHECK(r.schedule.ops[1].start - r.schedule.ops[0].start == 1);
}

TEST_CASE("slack examples") {
  SUBCASE("matmul RAW carried by k at II 7") {
    Program p = testutil::loadBenchmark("matmul.kir");
    DependenceInfo deps = analyzeDependences(p);
    IIAssignment ii = initialIIs(p, {});
    const DependenceProblem *dp =
        findProblem(deps, "S5", "S0", DepKind::RAW, "3");
    REQUIRE(dp);
    CHECK(computeSlack(p, *dp, ii) == 6);
    // Levels whose equalities contradict the ordering have no slack.
    CHECK(computeSlack(p, *findProblem(deps, "S5", "S0", DepKind::RAW, "1"),
                       ii) == std::nullopt);
    // WAR in the same iteration: every iv equal, so only the gap remains.
    const DependenceProblem *war =
        findProblem(deps, "S0", "S5", DepKind::WAR, "independent");
    REQUIRE(war);
    CHECK(computeSlack(p, *war, ii) == -1);
    CHECK(computeSlack(p, *war, {{"i", 3}, {"j", 5}, {"k", 1}}) == -1);
  }
  SUBCASE("inter-loop RAW with every II 1") {
    Program p = testutil::loadBenchmark("interloop.kir");
    DependenceInfo deps = analyzeDependences(p);
    IIAssignment ii{{"i", 1}, {"j", 1}, {"u", 1}, {"v", 1}};
    const DependenceProblem *dp =
        findProblem(deps, "S1", "S2", DepKind::RAW, "cross-nest");
    REQUIRE(dp);
    CHECK(computeSlack(p, *dp, ii) == -1);
    // With the source nest's own IIs the minimum stays at equal ivs.
    CHECK(computeSlack(p, *dp, initialIIs(p, {})) == -1);
  }
}

TEST_CASE("slack constraints take the form of the merged minimum") {
  SUBCASE("matmul store to reload") {
    Program p = testutil::loadBenchmark("matmul.kir");
    DependenceInfo deps = analyzeDependences(p);
    std::vector<SlackConstraint> cs =
        computeSlackConstraints(p, deps, initialIIs(p, {}));
    int s5 = p.findOp("S5"), s0 = p.findOp("S0");
    const SlackConstraint *c = nullptr;
    for (const SlackConstraint &x : cs)
      if (x.srcOp == s5 && x.snkOp == s0)
        c = &x;
    REQUIRE(c);
    CHECK(c->slack == 6);
    CHECK(c->srcPath == std::vector<int>{nodeOf(p, false, "S5")});
    CHECK(c->snkPath == std::vector<int>{nodeOf(p, false, "S0")});
    // One constraint per ordered op pair.
    std::set<std::pair<int, int>> seen;
    for (const SlackConstraint &x : cs)
      CHECK(seen.insert({x.srcOp, x.snkOp}).second);
  }
  SUBCASE("inter-loop paths start below the kernel") {
    Program p = testutil::loadBenchmark("interloop.kir");
    DependenceInfo deps = analyzeDependences(p);
    std::vector<SlackConstraint> cs =
        computeSlackConstraints(p, deps, initialIIs(p, {}));
    int s1 = p.findOp("S1"), s2 = p.findOp("S2");
    const SlackConstraint *c = nullptr;
    for (const SlackConstraint &x : cs)
      if (x.srcOp == s1 && x.snkOp == s2)
        c = &x;
    REQUIRE(c);
    CHECK(c->srcPath == std::vector<int>{nodeOf(p, true, "i"),
                                         nodeOf(p, true, "j"),
                                         nodeOf(p, false, "S1")});
    CHECK(c->snkPath == std::vector<int>{nodeOf(p, true, "u"),
                                         nodeOf(p, true, "v"),
                                         nodeOf(p, false, "S2")});
  }
}

TEST_CASE("scheduling ilp carries the slack rows and the delay objective") {
  Program p = testutil::loadBenchmark("matmul.kir");
  IIAssignment ii = initialIIs(p, {});
  DependenceInfo deps = analyzeDependences(p);
  std::vector<SlackConstraint> cs = computeSlackConstraints(p, deps, ii);
  ILPProblem ilp = buildSchedulingIlp(p, ii, cs);
  REQUIRE(ilp.variables().size() == p.nodes().size());
  int64_t h = horizonBound(p, ii);
  for (const Variable &v : ilp.variables()) {
    CHECK(v.integer);
    CHECK(v.lower == Rational(0));
    CHECK(v.upper == Rational(h));
  }
  CHECK(ilp.variables()[nodeOf(p, false, "S5")].name == "t_S5");
  // t_S5 - t_S0 <= 6 is among the rows.
  int s5 = nodeOf(p, false, "S5"), s0 = nodeOf(p, false, "S0");
  bool found = false;
  for (const Constraint &c : ilp.constraints()) {
    LinExpr want;
    want.add(s5, Rational(1)).add(s0, Rational(-1));
    if (c.expr == want && c.rel == Relation::LessEq && c.rhs == 6)
      found = true;
  }
  CHECK(found);
  // Objective: (t_S3 - t_S1 - 1) + (t_S3 - t_S2 - 1) + (t_S4 - t_S0 - 1) +
  // (t_S4 - t_S3 - 4) + (t_S5 - t_S4 - 5).
  std::vector<Rational> zero(ilp.variables().size(), Rational(0));
  CHECK(ilp.objective().evaluate(zero) == -12);
}

TEST_CASE("delay kernel: optimal delay is zero, the naive placement 999") {
  Program p = testutil::loadBenchmark("delay.kir");
  ScheduleResult r = scheduleKernel(p, initialIIs(p, {}));
  REQUIRE(r.feasible);
  CHECK(r.delayObjective == 0);
  CHECK(delayObjective(p, r.schedule) == 0);
  int load = p.findOp("S0"), store = p.findOp("S1");
  CHECK(r.schedule.ops[store].start == r.schedule.ops[load].start + 1);

  // The store a thousand cycles after the load is still valid, but the
  // loaded value has to be held for 999 extra cycles.
  Schedule naive = r.schedule;
  naive.ops[load].start = 0;
  naive.ops[store].start = 1000;
  CHECK(delayObjective(p, naive) == 999);
  CHECK(verifySchedule(p, naive).clean());
}

TEST_CASE("conv 1-D: II 6 is infeasible and 7 feasible") {
  Program p = testutil::loadBenchmark("conv1d.kir");
  CHECK_FALSE(scheduleKernel(p, {{"j", 6}}).feasible);
  ScheduleResult r = scheduleKernel(p, {{"j", 7}});
  REQUIRE(r.feasible);
  CHECK(verifySchedule(p, r.schedule).clean());
  AutotuneResult t = autotune(p);
  CHECK(t.ii.at("j") == 7);
  CHECK(t.result.feasible);
  CHECK(t.result.schedule == r.schedule);
}

TEST_CASE("autotune examples") {
  SUBCASE("no carried dependence pipelines fully") {
    Program p = lowerKernel("kernel k {\n"
                            "  array A : f32[4] ports=1 latency=1;\n"
                            "  array B : f32[4] ports=1 latency=1;\n"
                            "  for i in 0..4 pipeline(ii=?) {\n"
                            "    x = load A[i];\n"
                            "    store B[i], x;\n"
                            "  }\n"
                            "}\n");
    AutotuneResult t = autotune(p);
    CHECK(t.ii.at("i") == 1);
    CHECK(testutil::bruteForceViolations(p, t.result.schedule) == 0);
  }
  SUBCASE("two stores to one single-port array") {
    Program p = lowerKernel("kernel k {\n"
                            "  array A : f32[8] ports=1 latency=1;\n"
                            "  for i in 0..4 pipeline(ii=?) {\n"
                            "    store A[2*i], 1.0;\n"
                            "    store A[2*i + 1], 2.0;\n"
                            "  }\n"
                            "}\n");
    AutotuneResult t = autotune(p);
    CHECK(t.ii.at("i") == 2);
    CHECK_FALSE(scheduleKernel(p, {{"i", 1}}).feasible);
    CHECK(testutil::bruteForceViolations(p, t.result.schedule) == 0);
  }
  SUBCASE("fixed loops are left alone") {
    Program p = testutil::loadBenchmark("conv1d.kir");
    AutotuneResult t = autotune(p, {{"j", 9}});
    CHECK(t.ii.at("j") == 9);
    CHECK(t.attempts == 0);
  }
}

TEST_CASE("independent nests both start at cycle 0") {
  Program p = lowerKernel("kernel k {\n"
                          "  array A : f32[8] ports=1 latency=1;\n"
                          "  array B : f32[8] ports=1 latency=1;\n"
                          "  for i in 0..8 pipeline(ii=1) {\n"
                          "    store A[i], 1.0;\n"
                          "  }\n"
                          "  for u in 0..8 pipeline(ii=1) {\n"
                          "    store B[u], 2.0;\n"
                          "  }\n"
                          "}\n");
  ScheduleResult r = scheduleKernel(p, initialIIs(p, {}));
  REQUIRE(r.feasible);
  CHECK(r.schedule.loops[0].start == 0);
  CHECK(r.schedule.loops[1].start == 0);
}

TEST_CASE("initial IIs: iv names, then exact loop ids") {
  Program p = lowerKernel("kernel k {\n"
                          "  array A : f32[8] ports=1 latency=1;\n"
                          "  for i in 0..8 pipeline(ii=3) {\n"
                          "    store A[i], 1.0;\n"
                          "  }\n"
                          "  for i in 0..8 {\n"
                          "    store A[i], 2.0;\n"
                          "  }\n"
                          "}\n");
  CHECK(initialIIs(p, {}) == IIAssignment{{"i", 3}});
  CHECK(initialIIs(p, {{"i", 5}}) == IIAssignment{{"i", 5}, {"i.1", 5}});
  CHECK(initialIIs(p, {{"i", 5}, {"i.1", 2}}) ==
        IIAssignment{{"i", 5}, {"i.1", 2}});
  CHECK_THROWS_AS(initialIIs(p, {{"q", 1}}), Error);
  CHECK_THROWS_AS(initialIIs(p, {{"i", 0}}), Error);
}

TEST_CASE("slack ilp optimum equals enumeration and brute force") {
  // Named benchmarks first, then random kernels.
  auto checkProgram = [](const Program &p, const IIAssignment &ii,
                         std::optional<DepKind> only = std::nullopt) {
    DependenceInfo deps = analyzeDependences(p);
    int checked = 0;
    for (size_t i = 0; i < deps.pairs.size(); ++i) {
      if (only && deps.pairs[i].kind != *only)
        continue;
      for (const DependenceProblem &dp : deps.problems[i]) {
        std::optional<int64_t> got = computeSlack(p, dp, ii);
        CHECK(got == enumeratedSlack(p, dp, ii));
        Solution bf = bruteForceSolve(buildSlackIlp(p, dp, ii), 10'000'000);
        if (bf.optimal())
          CHECK((got && Rational(*got) == bf.objective));
        else
          CHECK(!got);
        ++checked;
      }
    }
    return checked;
  };
  {
    Program p = testutil::loadBenchmark("matmul.kir");
    CHECK(checkProgram(p, initialIIs(p, {}), DepKind::RAW) > 0);
  }
  {
    Program p = testutil::loadBenchmark("interloop.kir");
    CHECK(checkProgram(p, {{"i", 1}, {"j", 1}, {"u", 1}, {"v", 1}}) > 0);
  }
  std::mt19937_64 rng(testutil::seed() + 23);
  testutil::RandomKernelParams params;
  params.maxTrip = 4;
  for (int n = 0; n < 60; ++n) {
    std::string src = testutil::KernelGenerator(rng, params).generate();
    INFO(src);
    Program p = lowerKernel(src);
    IIAssignment ii;
    for (const LoopInfo &l : p.loops())
      ii[l.id] = std::uniform_int_distribution<int>(1, 5)(rng);
    checkProgram(p, ii);
  }
}

TEST_CASE("scheduled random kernels are valid under replay") {
  std::mt19937_64 rng(testutil::seed() + 31);
  testutil::RandomKernelParams params;
  params.maxTrip = 4;
  for (int n = 0; n < 60; ++n) {
    std::string src = testutil::KernelGenerator(rng, params).generate();
    INFO(src);
    Program p = lowerKernel(src);
    AutotuneResult t = autotune(p);
    REQUIRE(t.result.feasible);
    const Schedule &s = t.result.schedule;
    checkScheduleShape(p, s);
    CHECK(testutil::bruteForceViolations(p, s) == 0);
    VerifyOptions vo;
    vo.enumeratePortProblems = true;
    CHECK(verifySchedule(p, s, vo).clean());
    for (const ScheduledLoop &l : s.loops)
      CHECK(l.start <= s.horizon);
    for (const ScheduledOp &o : s.ops)
      CHECK(o.start <= s.horizon);
    // Tightness: every II found is minimal for its loop given the others.
    for (const LoopInfo &l : p.loops()) {
      if (t.ii.at(l.id) == 1)
        continue;
      IIAssignment smaller = t.ii;
      --smaller[l.id];
      CHECK_FALSE(scheduleKernel(p, smaller).feasible);
    }
  }
}

TEST_CASE("tie-break pass keeps the delay optimum") {
  for (const char *name :
       {"conv_chain.kir", "interloop.kir", "matmul.kir", "delay.kir"}) {
    Program p = testutil::loadBenchmark(name);
    std::optional<ILPProblem> first;
    SchedulerOptions opts;
    opts.onIlp = [&](const std::string &n, const ILPProblem &ilp) {
      if (n == "schedule")
        first = ilp;
    };
    ScheduleResult r = scheduleKernel(p, initialIIs(p, {}), opts);
    REQUIRE(r.feasible);
    REQUIRE(first);
    Solution s = solveIlp(*first);
    REQUIRE(s.optimal());
    CHECK(s.objective == r.delayObjective);
    CHECK(Rational(delayObjective(p, r.schedule)) == s.objective);
  }
}

TEST_CASE("scheduling is deterministic") {
  for (const char *name : {"conv_chain.kir", "unsharp.kir", "2mm.kir"}) {
    Program p = testutil::loadBenchmark(name);
    AutotuneResult a = autotune(p);
    AutotuneResult b = autotune(p);
    CHECK(a.ii == b.ii);
    CHECK(a.result.schedule == b.result.schedule);
    CHECK(scheduleKernel(p, a.ii).schedule == a.result.schedule);
  }
}

TEST_CASE("feasibility is monotone in the IIs on the benchmarks") {
  // Raising an inner II alone can make iterations of the next outer
  // iteration collide (see the next case), so every enclosing loop grows by
  // the extra span its raised child needs.
  for (const char *name : {"conv1d.kir", "conv_chain.kir", "interloop.kir",
                           "matmul.kir", "unsharp.kir"}) {
    INFO(std::string(name));
    Program p = testutil::loadBenchmark(name);
    IIAssignment base = autotune(p).ii;
    for (size_t l = 0; l < p.loops().size(); ++l) {
      for (int64_t extra : {1, 2, 5}) {
        IIAssignment bigger = base;
        int64_t grow = extra;
        int child = static_cast<int>(l);
        bigger[p.loops()[child].id] += grow;
        const std::vector<int> &parents = p.loops()[l].parents;
        for (auto it = parents.rbegin(); it != parents.rend(); ++it) {
          grow *= p.loops()[child].tripCount;
          bigger[p.loops()[*it].id] += grow;
          child = *it;
        }
        CHECK(scheduleKernel(p, bigger).feasible);
      }
    }
    IIAssignment all = base;
    for (auto &[loop, v] : all)
      v *= 2;
    CHECK(scheduleKernel(p, all).feasible);
  }
}

TEST_CASE("raising an inner II alone is not monotone") {
  // Iteration i of the j loop spans 20 cycles at II_j = 2 but the next i
  // iteration starts 10 cycles later, so two loads of X share a port cycle.
  Program p = testutil::loadBenchmark("interloop.kir");
  CHECK(scheduleKernel(p, {{"i", 10}, {"j", 1}, {"u", 10}, {"v", 1}})
            .feasible);
  CHECK_FALSE(scheduleKernel(p, {{"i", 10}, {"j", 2}, {"u", 10}, {"v", 1}})
                  .feasible);
}

TEST_CASE("horizon covers a fully sequential schedule") {
  Program p = testutil::loadBenchmark("interloop.kir");
  IIAssignment ii = initialIIs(p, {});
  // 10*10 + 10*1 + 10*10 + 10*1 + (2 + 2) + (2 + 1 + 5 + 2).
  CHECK(horizonBound(p, ii) == 234);
  ScheduleResult r = scheduleKernel(p, ii);
  CHECK(r.schedule.horizon == 234);
}
