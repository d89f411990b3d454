//===- ilp.h - Exact integer linear programming -----------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Exact rational simplex for LP relaxations, depth-first branch-and-bound for
// integrality and a box-enumeration oracle. Every quantity is an arbitrary
// precision rational; no tolerances are involved anywhere.
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_ILP_H
#define PIPEFLOW_ILP_H

#include "pipeflow/kernel.h"

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pipeflow {

using Rational = mpq_class;

/// Linear form over variable ids plus a constant. Zero coefficients are never
/// stored.
class LinExpr {
public:
  LinExpr() = default;
  explicit LinExpr(Rational constant) : constant_(std::move(constant)) {
    constant_.canonicalize();
  }

  LinExpr &add(int var, const Rational &coeff);
  LinExpr &addConstant(const Rational &c) {
    Rational v = c;
    v.canonicalize();
    constant_ += v;
    return *this;
  }

  const std::map<int, Rational> &terms() const { return terms_; }
  const Rational &constant() const { return constant_; }
  Rational coefficient(int var) const;

  Rational evaluate(const std::vector<Rational> &values) const;

  bool operator==(const LinExpr &other) const {
    return terms_ == other.terms_ && constant_ == other.constant_;
  }

private:
  std::map<int, Rational> terms_;
  Rational constant_ = 0;
};

enum class Relation { LessEq, Equal, GreaterEq };

struct Variable {
  std::string name;
  bool integer = true;
  std::optional<Rational> lower;
  std::optional<Rational> upper;
};

/// `expr rel rhs`, where the constant of \c expr counts on the left.
struct Constraint {
  LinExpr expr;
  Relation rel = Relation::LessEq;
  Rational rhs = 0;

  bool holds(const std::vector<Rational> &values) const;
};

/// A minimization problem.
class ILPProblem {
public:
  int addVariable(std::string name, bool integer = true,
                  std::optional<Rational> lower = std::nullopt,
                  std::optional<Rational> upper = std::nullopt);
  void addConstraint(LinExpr expr, Relation rel, Rational rhs);
  void setObjective(LinExpr objective) { objective_ = std::move(objective); }

  const std::vector<Variable> &variables() const { return variables_; }
  std::vector<Variable> &variables() { return variables_; }
  const std::vector<Constraint> &constraints() const { return constraints_; }
  const LinExpr &objective() const { return objective_; }
  int numVariables() const { return static_cast<int>(variables_.size()); }

  /// True when \p values respects every bound, constraint and (optionally)
  /// integrality requirement exactly.
  bool isFeasible(const std::vector<Rational> &values,
                  bool checkIntegrality = true) const;

private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  LinExpr objective_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

const char *statusName(SolveStatus status);

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  Rational objective = 0;
  /// Indexed by variable id; empty unless optimal.
  std::vector<Rational> values;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SolverLimits {
  /// Simplex pivots per LP solve before the watchdog throws.
  int64_t maxPivots = 1'000'000;
  /// Branch-and-bound nodes per ILP solve.
  int64_t maxNodes = 1'000'000;
};

struct SolverStats {
  int64_t pivots = 0;
  int64_t nodes = 0;
  int64_t lpSolves = 0;
};

/// Thrown when a watchdog limit is exceeded or the oracle's box is too big.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Exact optimum of the LP relaxation (integrality ignored).
Solution solveLp(const ILPProblem &problem, SolverStats *stats = nullptr,
                 const SolverLimits &limits = {});

/// Exact integer optimum by branch-and-bound: depth first, branching on the
/// most fractional variable (lowest id on ties), down branch first.
Solution solveIlp(const ILPProblem &problem, SolverStats *stats = nullptr,
                  const SolverLimits &limits = {});

/// Exhaustive enumeration over the integer variables' boxes. Continuous
/// variables, if any, are optimized by an LP per box point. Throws
/// SolverError if the box holds more than \p boxLimit points or an integer
/// variable is unbounded.
Solution bruteForceSolve(const ILPProblem &problem, uint64_t boxLimit);

/// Canonical text: one variable per line, then the objective, then one
/// constraint per line with terms sorted by variable id.
std::string formatProblem(const ILPProblem &problem);

std::string formatRational(const Rational &value);

} // namespace pipeflow

#endif // PIPEFLOW_ILP_H
