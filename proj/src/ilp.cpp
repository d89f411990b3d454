//===- ilp.cpp - ILP problem model, text form and enumeration oracle ------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/ilp.h"

#include <sstream>

namespace pipeflow {

LinExpr &LinExpr::add(int var, const Rational &value) {
  // Callers may build values like Rational(4, 2); GMP expects lowest terms.
  Rational coeff = value;
  coeff.canonicalize();
  if (coeff == 0)
    return *this;
  auto [it, inserted] = terms_.emplace(var, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0)
      terms_.erase(it);
  }
  return *this;
}

Rational LinExpr::coefficient(int var) const {
  auto it = terms_.find(var);
  return it == terms_.end() ? Rational(0) : it->second;
}

Rational LinExpr::evaluate(const std::vector<Rational> &values) const {
  Rational sum = constant_;
  for (const auto &[var, coeff] : terms_)
    sum += coeff * values.at(var);
  return sum;
}

bool Constraint::holds(const std::vector<Rational> &values) const {
  Rational lhs = expr.evaluate(values);
  switch (rel) {
  case Relation::LessEq:
    return lhs <= rhs;
  case Relation::Equal:
    return lhs == rhs;
  case Relation::GreaterEq:
    return lhs >= rhs;
  }
  return false;
}

int ILPProblem::addVariable(std::string name, bool integer,
                            std::optional<Rational> lower,
                            std::optional<Rational> upper) {
  if (lower)
    lower->canonicalize();
  if (upper)
    upper->canonicalize();
  variables_.push_back(
      {std::move(name), integer, std::move(lower), std::move(upper)});
  return static_cast<int>(variables_.size()) - 1;
}

void ILPProblem::addConstraint(LinExpr expr, Relation rel, Rational rhs) {
  for (const auto &[var, coeff] : expr.terms())
    if (var < 0 || var >= numVariables())
      throw Error("constraint references undeclared variable " +
                  std::to_string(var));
  rhs.canonicalize();
  constraints_.push_back({std::move(expr), rel, std::move(rhs)});
}

bool ILPProblem::isFeasible(const std::vector<Rational> &values,
                            bool checkIntegrality) const {
  if (values.size() != variables_.size())
    return false;
  for (size_t i = 0; i < variables_.size(); ++i) {
    const Variable &v = variables_[i];
    if (v.lower && values[i] < *v.lower)
      return false;
    if (v.upper && values[i] > *v.upper)
      return false;
    if (checkIntegrality && v.integer && values[i].get_den() != 1)
      return false;
  }
  for (const Constraint &c : constraints_)
    if (!c.holds(values))
      return false;
  return true;
}

const char *statusName(SolveStatus status) {
  switch (status) {
  case SolveStatus::Optimal:
    return "optimal";
  case SolveStatus::Infeasible:
    return "infeasible";
  case SolveStatus::Unbounded:
    return "unbounded";
  }
  return "unknown";
}

std::string formatRational(const Rational &value) { return value.get_str(); }

static std::string formatExpr(const ILPProblem &p, const LinExpr &e) {
  std::ostringstream out;
  bool first = true;
  for (const auto &[var, coeff] : e.terms()) {
    Rational mag = abs(coeff);
    if (first)
      out << (coeff < 0 ? "-" : "");
    else
      out << (coeff < 0 ? " - " : " + ");
    if (mag != 1)
      out << formatRational(mag) << " ";
    out << p.variables()[var].name;
    first = false;
  }
  if (first)
    out << formatRational(e.constant());
  else if (e.constant() > 0)
    out << " + " << formatRational(e.constant());
  else if (e.constant() < 0)
    out << " - " << formatRational(-e.constant());
  return out.str();
}

std::string formatProblem(const ILPProblem &p) {
  std::ostringstream out;
  for (size_t i = 0; i < p.variables().size(); ++i) {
    const Variable &v = p.variables()[i];
    out << "var " << i << " " << v.name << " "
        << (v.integer ? "int" : "real") << " ["
        << (v.lower ? formatRational(*v.lower) : "-inf") << ", "
        << (v.upper ? formatRational(*v.upper) : "+inf") << "]\n";
  }
  out << "minimize " << formatExpr(p, p.objective()) << "\n";
  for (size_t i = 0; i < p.constraints().size(); ++i) {
    const Constraint &c = p.constraints()[i];
    const char *rel = c.rel == Relation::LessEq  ? "<="
                      : c.rel == Relation::Equal ? "="
                                                 : ">=";
    out << "c" << i << ": " << formatExpr(p, c.expr) << " " << rel << " "
        << formatRational(c.rhs) << "\n";
  }
  return out.str();
}

//===----------------------------------------------------------------------===//
// Enumeration oracle
//===----------------------------------------------------------------------===//

static Rational ceilOf(const Rational &q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(r);
}

static Rational floorOf(const Rational &q) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(r);
}

Solution bruteForceSolve(const ILPProblem &p, uint64_t boxLimit) {
  std::vector<int> intVars;
  std::vector<mpz_class> lo, hi;
  bool hasContinuous = false;
  mpz_class boxSize = 1;
  for (int i = 0; i < p.numVariables(); ++i) {
    const Variable &v = p.variables()[i];
    if (!v.integer) {
      hasContinuous = true;
      continue;
    }
    if (!v.lower || !v.upper)
      throw SolverError("brute force needs finite bounds on '" + v.name +
                        "'");
    mpz_class l = ceilOf(*v.lower).get_num();
    mpz_class h = floorOf(*v.upper).get_num();
    if (l > h)
      return {SolveStatus::Infeasible, 0, {}};
    intVars.push_back(i);
    lo.push_back(l);
    hi.push_back(h);
    boxSize *= h - l + 1;
    if (boxSize > mpz_class(std::to_string(boxLimit)))
      throw SolverError("box too large for enumeration");
  }

  Solution best;
  best.status = SolveStatus::Infeasible;
  std::vector<Rational> point(p.numVariables(), Rational(0));
  std::vector<mpz_class> cur = lo;
  for (;;) {
    for (size_t k = 0; k < intVars.size(); ++k)
      point[intVars[k]] = Rational(cur[k]);
    if (hasContinuous) {
      ILPProblem sub = p;
      for (size_t k = 0; k < intVars.size(); ++k) {
        sub.variables()[intVars[k]].lower = Rational(cur[k]);
        sub.variables()[intVars[k]].upper = Rational(cur[k]);
      }
      Solution s = solveLp(sub);
      if (s.status == SolveStatus::Unbounded)
        return s;
      if (s.optimal() && (!best.optimal() || s.objective < best.objective))
        best = s;
    } else if (p.isFeasible(point)) {
      Rational obj = p.objective().evaluate(point);
      if (!best.optimal() || obj < best.objective) {
        best.status = SolveStatus::Optimal;
        best.objective = obj;
        best.values = point;
      }
    }
    bool advanced = false;
    for (size_t k = intVars.size(); k-- > 0;) {
      if (cur[k] < hi[k]) {
        ++cur[k];
        advanced = true;
        break;
      }
      cur[k] = lo[k];
    }
    if (!advanced)
      break;
  }
  return best;
}

} // namespace pipeflow
