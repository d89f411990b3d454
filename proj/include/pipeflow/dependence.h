//===- dependence.h - Memory dependence polyhedra ---------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Conflicting access pairs and, for each, the integer polyhedra whose points
// are the (source instance, sink instance) pairs that must stay ordered.
// Happens-before is split lexicographically: one polyhedron per common loop
// level at which the source iteration is strictly earlier, plus the
// loop-independent case when the source statement comes first textually.
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_DEPENDENCE_H
#define PIPEFLOW_DEPENDENCE_H

#include "pipeflow/program.h"

#include <functional>
#include <map>

namespace pipeflow {

enum class AccessKind { Read, Write };
enum class DepKind { RAW, WAR, WAW, PORT };

const char *depKindName(DepKind kind);

struct AccessRef {
  /// Index into Program::ops().
  int op = 0;
  std::string stmtId;
  std::string array;
  int port = 0;
  AccessKind kind = AccessKind::Read;
  std::vector<AffineExpr> index;
  /// Enclosing loops, outermost first (indices into Program::loops()).
  std::vector<int> loops;
};

struct AccessPair {
  AccessRef source;
  AccessRef sink;
  DepKind kind = DepKind::RAW;
};

/// Minimum number of cycles the sink instance must trail the source instance,
/// per dependence kind.
struct GapConfig {
  int64_t raw = 1;
  int64_t war = 1;
  int64_t waw = 1;
  int64_t port = 1;

  int64_t gapFor(DepKind kind) const;
};

/// `sum(coeffs[v] * x_v) + constant` compared against zero.
struct IntConstraint {
  std::vector<int64_t> coeffs;
  int64_t constant = 0;
  /// `== 0` when set, otherwise `<= 0`.
  bool equality = false;

  int64_t evaluate(const std::vector<int64_t> &point) const;
  bool holds(const std::vector<int64_t> &point) const;
};

enum class LevelKind {
  /// Source and sink first differ at common loop `level` (1-based).
  Carried,
  /// Every common induction variable is equal.
  LoopIndependent,
  /// No common loop; all source instances precede all sink instances.
  CrossNest,
};

/// Variables are the source induction variables (outermost first) followed
/// by the sink induction variables, each ranging over [0, trip - 1].
struct DependenceProblem {
  AccessPair pair;
  LevelKind levelKind = LevelKind::Carried;
  int level = 0;
  int commonDepth = 0;
  std::vector<int64_t> srcTrips;
  std::vector<int64_t> snkTrips;
  /// Address-conflict equalities (none for PORT pairs).
  std::vector<IntConstraint> equalities;
  int64_t minGap = 1;

  int numSrcVars() const { return static_cast<int>(srcTrips.size()); }
  int numVars() const {
    return static_cast<int>(srcTrips.size() + snkTrips.size());
  }
  int64_t upperBound(int var) const;
  /// Equalities followed by the happens-before constraints of this level.
  std::vector<IntConstraint> constraints() const;
  /// True when \p point lies in the polyhedron.
  bool contains(const std::vector<int64_t> &point) const;
  std::string levelName() const;
};

/// Round-robin port per access, restarting for each array, in program order.
/// Indexed by op; -1 for non-memory ops.
std::vector<int> assignPorts(const Program &program);

std::vector<AccessPair> collectAccessPairs(const Program &program,
                                           const std::vector<int> &ports);

std::vector<DependenceProblem>
buildDependenceProblems(const Program &program, const AccessPair &pair,
                        const GapConfig &gaps = {});

/// All pairs of a program with their problems.
struct DependenceInfo {
  std::vector<int> ports;
  std::vector<AccessPair> pairs;
  /// problems[i] belongs to pairs[i].
  std::vector<std::vector<DependenceProblem>> problems;
};

DependenceInfo analyzeDependences(const Program &program,
                                  const GapConfig &gaps = {});

/// Calls \p visit for each integer point of the polyhedron in lexicographic
/// order; stops early when \p visit returns false.
void enumeratePoints(
    const DependenceProblem &problem,
    const std::function<bool(const std::vector<int64_t> &)> &visit);

/// One-line canonical record: pair ids, kind, level and constraints with
/// sorted variables.
std::string formatDependenceProblem(const Program &program,
                                    const DependenceProblem &problem);

} // namespace pipeflow

#endif // PIPEFLOW_DEPENDENCE_H
