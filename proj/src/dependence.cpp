//===- dependence.cpp - Memory dependence polyhedra -----------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/dependence.h"

#include <algorithm>
#include <sstream>

namespace pipeflow {

const char *depKindName(DepKind kind) {
  switch (kind) {
  case DepKind::RAW:
    return "RAW";
  case DepKind::WAR:
    return "WAR";
  case DepKind::WAW:
    return "WAW";
  case DepKind::PORT:
    return "PORT";
  }
  return "?";
}

int64_t GapConfig::gapFor(DepKind kind) const {
  switch (kind) {
  case DepKind::RAW:
    return raw;
  case DepKind::WAR:
    return war;
  case DepKind::WAW:
    return waw;
  case DepKind::PORT:
    return port;
  }
  return 1;
}

int64_t IntConstraint::evaluate(const std::vector<int64_t> &point) const {
  int64_t sum = constant;
  for (size_t v = 0; v < coeffs.size(); ++v)
    sum += coeffs[v] * point[v];
  return sum;
}

bool IntConstraint::holds(const std::vector<int64_t> &point) const {
  int64_t v = evaluate(point);
  return equality ? v == 0 : v <= 0;
}

int64_t DependenceProblem::upperBound(int var) const {
  if (var < numSrcVars())
    return srcTrips[var] - 1;
  return snkTrips[var - numSrcVars()] - 1;
}

std::vector<IntConstraint> DependenceProblem::constraints() const {
  std::vector<IntConstraint> out = equalities;
  int n = numVars();
  int ns = numSrcVars();
  auto diff = [&](int m, int64_t constant, bool equality) {
    IntConstraint c;
    c.coeffs.assign(n, 0);
    c.coeffs[m] = 1;
    c.coeffs[ns + m] = -1;
    c.constant = constant;
    c.equality = equality;
    return c;
  };
  switch (levelKind) {
  case LevelKind::Carried:
    for (int m = 0; m + 1 < level; ++m)
      out.push_back(diff(m, 0, true));
    // src_l < snk_l  <=>  src_l - snk_l + 1 <= 0
    out.push_back(diff(level - 1, 1, false));
    break;
  case LevelKind::LoopIndependent:
    for (int m = 0; m < commonDepth; ++m)
      out.push_back(diff(m, 0, true));
    break;
  case LevelKind::CrossNest:
    break;
  }
  return out;
}

bool DependenceProblem::contains(const std::vector<int64_t> &point) const {
  if (static_cast<int>(point.size()) != numVars())
    return false;
  for (int v = 0; v < numVars(); ++v)
    if (point[v] < 0 || point[v] > upperBound(v))
      return false;
  for (const IntConstraint &c : constraints())
    if (!c.holds(point))
      return false;
  return true;
}

std::string DependenceProblem::levelName() const {
  switch (levelKind) {
  case LevelKind::Carried:
    return std::to_string(level);
  case LevelKind::LoopIndependent:
    return "independent";
  case LevelKind::CrossNest:
    return "cross-nest";
  }
  return "?";
}

std::vector<int> assignPorts(const Program &program) {
  std::vector<int> ports(program.ops().size(), -1);
  std::map<std::string, int64_t> next;
  for (size_t i = 0; i < program.ops().size(); ++i) {
    const Stmt &s = program.ops()[i].stmt;
    if (!s.isMemoryAccess())
      continue;
    int64_t count = program.array(s.array).ports;
    ports[i] = static_cast<int>(next[s.array]++ % count);
  }
  return ports;
}

static AccessRef makeRef(const Program &program, int op, int port) {
  const OpInfo &info = program.ops()[op];
  AccessRef ref;
  ref.op = op;
  ref.stmtId = info.stmt.id;
  ref.array = info.stmt.array;
  ref.port = port;
  ref.kind = info.stmt.kind == StmtKind::Store ? AccessKind::Write
                                               : AccessKind::Read;
  ref.index = info.stmt.index;
  ref.loops = info.loops;
  return ref;
}

std::vector<AccessPair> collectAccessPairs(const Program &program,
                                           const std::vector<int> &ports) {
  std::vector<AccessRef> accesses;
  for (size_t i = 0; i < program.ops().size(); ++i)
    if (program.ops()[i].stmt.isMemoryAccess())
      accesses.push_back(makeRef(program, static_cast<int>(i), ports[i]));

  std::vector<AccessPair> pairs;
  for (const AccessRef &src : accesses) {
    for (const AccessRef &snk : accesses) {
      if (src.array != snk.array)
        continue;
      int depth = program.commonDepth(src.op, snk.op);
      bool canPrecede = program.ops()[src.op].order <
                        program.ops()[snk.op].order;
      for (int m = 0; m < depth && !canPrecede; ++m)
        if (program.loops()[src.loops[m]].tripCount > 1)
          canPrecede = true;
      if (!canPrecede)
        continue;
      bool srcWrites = src.kind == AccessKind::Write;
      bool snkWrites = snk.kind == AccessKind::Write;
      if (srcWrites && !snkWrites)
        pairs.push_back({src, snk, DepKind::RAW});
      if (!srcWrites && snkWrites)
        pairs.push_back({src, snk, DepKind::WAR});
      if (srcWrites && snkWrites)
        pairs.push_back({src, snk, DepKind::WAW});
      if (src.port == snk.port)
        pairs.push_back({src, snk, DepKind::PORT});
    }
  }
  return pairs;
}

std::vector<DependenceProblem>
buildDependenceProblems(const Program &program, const AccessPair &pair,
                        const GapConfig &gaps) {
  DependenceProblem base;
  base.pair = pair;
  base.minGap = gaps.gapFor(pair.kind);
  base.commonDepth = program.commonDepth(pair.source.op, pair.sink.op);
  for (int l : pair.source.loops)
    base.srcTrips.push_back(program.loops()[l].tripCount);
  for (int l : pair.sink.loops)
    base.snkTrips.push_back(program.loops()[l].tripCount);

  const int ns = base.numSrcVars();
  const int n = base.numVars();
  if (pair.kind != DepKind::PORT) {
    for (size_t d = 0; d < pair.source.index.size(); ++d) {
      const AffineExpr &a = pair.source.index[d];
      const AffineExpr &b = pair.sink.index[d];
      IntConstraint c;
      c.coeffs.assign(n, 0);
      c.equality = true;
      for (int m = 0; m < ns; ++m)
        c.coeffs[m] =
            a.coefficientOf(program.loops()[pair.source.loops[m]].id);
      for (int m = 0; m < n - ns; ++m)
        c.coeffs[ns + m] =
            -b.coefficientOf(program.loops()[pair.sink.loops[m]].id);
      c.constant = a.constant - b.constant;
      base.equalities.push_back(std::move(c));
    }
  }

  bool textuallyBefore =
      program.ops()[pair.source.op].order < program.ops()[pair.sink.op].order;
  std::vector<DependenceProblem> out;
  if (base.commonDepth == 0) {
    if (textuallyBefore) {
      base.levelKind = LevelKind::CrossNest;
      out.push_back(base);
    }
    return out;
  }
  for (int l = 1; l <= base.commonDepth; ++l) {
    DependenceProblem p = base;
    p.levelKind = LevelKind::Carried;
    p.level = l;
    out.push_back(std::move(p));
  }
  if (textuallyBefore) {
    base.levelKind = LevelKind::LoopIndependent;
    out.push_back(std::move(base));
  }
  return out;
}

DependenceInfo analyzeDependences(const Program &program,
                                  const GapConfig &gaps) {
  DependenceInfo info;
  info.ports = assignPorts(program);
  info.pairs = collectAccessPairs(program, info.ports);
  for (const AccessPair &pair : info.pairs)
    info.problems.push_back(buildDependenceProblems(program, pair, gaps));
  return info;
}

//===----------------------------------------------------------------------===//
// Point enumeration
//===----------------------------------------------------------------------===//

namespace {

int64_t floorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --q;
  return q;
}

int64_t ceilDiv(int64_t a, int64_t b) { return -floorDiv(-a, b); }

/// Depth-first enumeration where each constraint is resolved at its last
/// variable, so equalities pin values instead of being filtered afterwards.
class PointEnumerator {
public:
  PointEnumerator(const DependenceProblem &p,
                  const std::function<bool(const std::vector<int64_t> &)> &f)
      : p(p), visit(f), constraints(p.constraints()) {
    byLastVar.resize(p.numVars());
    for (size_t i = 0; i < constraints.size(); ++i) {
      int last = -1;
      for (int v = 0; v < p.numVars(); ++v)
        if (constraints[i].coeffs[v] != 0)
          last = v;
      if (last < 0)
        constantOnly.push_back(static_cast<int>(i));
      else
        byLastVar[last].push_back(static_cast<int>(i));
    }
    point.assign(p.numVars(), 0);
  }

  void run() {
    for (int i : constantOnly)
      if (!constraints[i].holds(point))
        return;
    if (p.numVars() == 0) {
      visit(point);
      return;
    }
    recurse(0);
  }

private:
  bool recurse(int var) {
    int64_t lo = 0, hi = p.upperBound(var);
    for (int i : byLastVar[var]) {
      const IntConstraint &c = constraints[i];
      int64_t partial = c.constant;
      for (int v = 0; v < var; ++v)
        partial += c.coeffs[v] * point[v];
      int64_t a = c.coeffs[var];
      if (c.equality) {
        if (partial % a != 0)
          return true;
        int64_t x = -partial / a;
        lo = std::max(lo, x);
        hi = std::min(hi, x);
      } else if (a > 0) {
        hi = std::min(hi, floorDiv(-partial, a));
      } else {
        lo = std::max(lo, ceilDiv(partial, -a));
      }
    }
    for (int64_t x = lo; x <= hi; ++x) {
      point[var] = x;
      if (var + 1 == p.numVars()) {
        if (!visit(point))
          return false;
      } else if (!recurse(var + 1)) {
        return false;
      }
    }
    return true;
  }

  const DependenceProblem &p;
  const std::function<bool(const std::vector<int64_t> &)> &visit;
  std::vector<IntConstraint> constraints;
  std::vector<std::vector<int>> byLastVar;
  std::vector<int> constantOnly;
  std::vector<int64_t> point;
};

} // namespace

void enumeratePoints(
    const DependenceProblem &problem,
    const std::function<bool(const std::vector<int64_t> &)> &visit) {
  PointEnumerator(problem, visit).run();
}

std::string formatDependenceProblem(const Program &program,
                                    const DependenceProblem &p) {
  std::vector<std::string> names;
  for (int l : p.pair.source.loops)
    names.push_back("src." + program.loops()[l].id);
  for (int l : p.pair.sink.loops)
    names.push_back("snk." + program.loops()[l].id);

  std::ostringstream out;
  out << "dep " << p.pair.source.stmtId << " -> " << p.pair.sink.stmtId
      << " kind=" << depKindName(p.pair.kind)
      << " array=" << p.pair.source.array
      << " port=" << p.pair.source.port << "/" << p.pair.sink.port
      << " level=" << p.levelName() << " gap=" << p.minGap << " vars=[";
  std::vector<int> order(names.size());
  for (size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return names[a] < names[b]; });
  for (size_t i = 0; i < order.size(); ++i)
    out << (i ? ", " : "") << names[order[i]] << " in 0.."
        << p.upperBound(order[i]);
  out << "] constraints=[";
  std::vector<IntConstraint> cs = p.constraints();
  for (size_t ci = 0; ci < cs.size(); ++ci) {
    const IntConstraint &c = cs[ci];
    out << (ci ? "; " : "");
    bool first = true;
    for (int v : order) {
      int64_t k = c.coeffs[v];
      if (k == 0)
        continue;
      int64_t mag = k < 0 ? -k : k;
      out << (first ? (k < 0 ? "-" : "") : (k < 0 ? " - " : " + "));
      if (mag != 1)
        out << mag << "*";
      out << names[v];
      first = false;
    }
    if (first)
      out << c.constant;
    else if (c.constant > 0)
      out << " + " << c.constant;
    else if (c.constant < 0)
      out << " - " << -c.constant;
    out << (c.equality ? " = 0" : " <= 0");
  }
  out << "]";
  return out.str();
}

} // namespace pipeflow
