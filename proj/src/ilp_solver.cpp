//===- ilp_solver.cpp - Exact simplex and branch-and-bound ----------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Two-phase primal simplex on a sparse tableau of GMP rationals. Entering
// columns follow Dantzig's rule; after a run of degenerate pivots the solver
// switches to Bland's rule until the objective strictly improves again, which
// rules out cycling.
//
//===----------------------------------------------------------------------===//

#include "pipeflow/ilp.h"

#include <algorithm>

namespace pipeflow {

namespace {

struct Entry {
  int col;
  Rational val;
};
using SparseRow = std::vector<Entry>;

const Rational *findEntry(const SparseRow &row, int col) {
  auto it = std::lower_bound(
      row.begin(), row.end(), col,
      [](const Entry &e, int c) { return e.col < c; });
  if (it == row.end() || it->col != col)
    return nullptr;
  return &it->val;
}

/// row - factor * pivotRow, dropping cancelled entries.
SparseRow axpy(const SparseRow &row, const Rational &factor,
               const SparseRow &pivotRow) {
  SparseRow out;
  out.reserve(row.size() + pivotRow.size());
  size_t i = 0, j = 0;
  while (i < row.size() || j < pivotRow.size()) {
    if (j == pivotRow.size() ||
        (i < row.size() && row[i].col < pivotRow[j].col)) {
      out.push_back(row[i++]);
    } else if (i == row.size() || pivotRow[j].col < row[i].col) {
      out.push_back({pivotRow[j].col, -factor * pivotRow[j].val});
      ++j;
    } else {
      Rational v = row[i].val - factor * pivotRow[j].val;
      if (v != 0)
        out.push_back({row[i].col, std::move(v)});
      ++i;
      ++j;
    }
  }
  return out;
}

/// x_j = offset_j + sum(sign * y_k) over the nonnegative columns y_k.
struct VarMap {
  Rational offset = 0;
  std::vector<std::pair<int, int>> cols; // (column, sign)
};

enum class LpResult { Optimal, Infeasible, Unbounded };

class Simplex {
public:
  Simplex(const ILPProblem &p, SolverStats *stats, const SolverLimits &limits)
      : p(p), stats(stats), limits(limits) {}

  Solution run() {
    if (!buildStandardForm())
      return {SolveStatus::Infeasible, 0, {}};
    if (numArtificial > 0) {
      setPhaseOneCosts();
      iterate();
      Rational infeasibility = 0;
      for (size_t r = 0; r < rows.size(); ++r)
        if (basis[r] >= artStart)
          infeasibility += rhs[r];
      if (infeasibility > 0)
        return {SolveStatus::Infeasible, 0, {}};
      dropArtificials();
    }
    setPhaseTwoCosts();
    if (iterate() == LpResult::Unbounded)
      return {SolveStatus::Unbounded, 0, {}};
    return extract();
  }

private:
  bool buildStandardForm() {
    int n = p.numVariables();
    vars.resize(n);
    int col = 0;
    std::vector<std::pair<SparseRow, Rational>> boundRows;
    for (int i = 0; i < n; ++i) {
      const Variable &v = p.variables()[i];
      if (v.lower && v.upper && *v.lower > *v.upper)
        return false;
      if (v.lower) {
        vars[i].offset = *v.lower;
        vars[i].cols.push_back({col, 1});
        if (v.upper)
          boundRows.push_back({SparseRow{{col, Rational(1)}},
                               Rational(*v.upper - *v.lower)});
        ++col;
      } else if (v.upper) {
        vars[i].offset = *v.upper;
        vars[i].cols.push_back({col++, -1});
      } else {
        vars[i].cols.push_back({col++, 1});
        vars[i].cols.push_back({col++, -1});
      }
    }
    numStructural = col;

    struct RawRow {
      SparseRow entries;
      Relation rel;
      Rational rhs;
    };
    std::vector<RawRow> raw;
    for (const Constraint &c : p.constraints()) {
      std::map<int, Rational> acc;
      Rational b = c.rhs - c.expr.constant();
      for (const auto &[var, coeff] : c.expr.terms()) {
        b -= coeff * vars[var].offset;
        for (auto [k, sign] : vars[var].cols)
          acc[k] += sign * coeff;
      }
      SparseRow entries;
      for (auto &[k, v] : acc)
        if (v != 0)
          entries.push_back({k, v});
      raw.push_back({std::move(entries), c.rel, std::move(b)});
    }
    for (auto &[entries, bound] : boundRows)
      raw.push_back({std::move(entries), Relation::LessEq, std::move(bound)});

    // Normalize to nonnegative right-hand sides.
    for (RawRow &r : raw) {
      if (r.rhs < 0) {
        r.rhs = -r.rhs;
        for (Entry &e : r.entries)
          e.val = -e.val;
        if (r.rel == Relation::LessEq)
          r.rel = Relation::GreaterEq;
        else if (r.rel == Relation::GreaterEq)
          r.rel = Relation::LessEq;
      }
    }

    int slackCount = 0;
    for (const RawRow &r : raw)
      if (r.rel != Relation::Equal)
        ++slackCount;
    artStart = numStructural + slackCount;
    int nextSlack = numStructural;
    int nextArt = artStart;
    for (RawRow &r : raw) {
      SparseRow entries = std::move(r.entries);
      int basic;
      if (r.rel == Relation::LessEq) {
        basic = nextSlack;
        entries.push_back({nextSlack++, Rational(1)});
      } else if (r.rel == Relation::GreaterEq) {
        entries.push_back({nextSlack++, Rational(-1)});
        basic = nextArt;
        entries.push_back({nextArt++, Rational(1)});
      } else {
        basic = nextArt;
        entries.push_back({nextArt++, Rational(1)});
      }
      rows.push_back(std::move(entries));
      rhs.push_back(std::move(r.rhs));
      basis.push_back(basic);
    }
    numArtificial = nextArt - artStart;
    numCols = nextArt;
    cost.assign(numCols, Rational(0));
    enterable.assign(numCols, true);
    return true;
  }

  void setPhaseOneCosts() {
    std::fill(cost.begin(), cost.end(), Rational(0));
    for (int j = artStart; j < numCols; ++j)
      cost[j] = 1;
    for (size_t r = 0; r < rows.size(); ++r)
      if (basis[r] >= artStart)
        for (const Entry &e : rows[r])
          cost[e.col] -= e.val;
  }

  void dropArtificials() {
    for (size_t r = 0; r < rows.size();) {
      if (basis[r] < artStart) {
        ++r;
        continue;
      }
      int col = -1;
      for (const Entry &e : rows[r])
        if (e.col < artStart) {
          col = e.col;
          break;
        }
      if (col >= 0) {
        pivot(static_cast<int>(r), col);
        ++r;
      } else {
        // Redundant equality: the row is a combination of the others.
        rows.erase(rows.begin() + r);
        rhs.erase(rhs.begin() + r);
        basis.erase(basis.begin() + r);
      }
    }
    for (SparseRow &row : rows)
      std::erase_if(row, [&](const Entry &e) { return e.col >= artStart; });
    for (int j = artStart; j < numCols; ++j)
      enterable[j] = false;
  }

  void setPhaseTwoCosts() {
    std::fill(cost.begin(), cost.end(), Rational(0));
    for (const auto &[var, coeff] : p.objective().terms())
      for (auto [k, sign] : vars[var].cols)
        cost[k] += sign * coeff;
    for (size_t r = 0; r < rows.size(); ++r) {
      Rational cb = cost[basis[r]];
      if (cb == 0)
        continue;
      for (const Entry &e : rows[r])
        cost[e.col] -= cb * e.val;
    }
  }

  void pivot(int r, int c) {
    Rational inv = 1 / *findEntry(rows[r], c);
    for (Entry &e : rows[r])
      e.val *= inv;
    rhs[r] *= inv;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(i) == r)
        continue;
      const Rational *a = findEntry(rows[i], c);
      if (!a)
        continue;
      Rational factor = *a;
      rhs[i] -= factor * rhs[r];
      rows[i] = axpy(rows[i], factor, rows[r]);
    }
    if (cost[c] != 0) {
      Rational d = cost[c];
      for (const Entry &e : rows[r])
        cost[e.col] -= d * e.val;
    }
    basis[r] = c;
    if (stats)
      ++stats->pivots;
    if (++pivots > limits.maxPivots)
      throw SolverError("simplex pivot watchdog fired after " +
                        std::to_string(limits.maxPivots) + " pivots");
  }

  LpResult iterate() {
    bool bland = false;
    int degenerateRun = 0;
    for (;;) {
      int enter = -1;
      for (int j = 0; j < numCols; ++j) {
        if (!enterable[j] || cost[j] >= 0)
          continue;
        if (bland) {
          enter = j;
          break;
        }
        if (enter < 0 || cost[j] < cost[enter])
          enter = j;
      }
      if (enter < 0)
        return LpResult::Optimal;

      int leave = -1;
      Rational best;
      for (size_t i = 0; i < rows.size(); ++i) {
        const Rational *a = findEntry(rows[i], enter);
        if (!a || *a <= 0)
          continue;
        Rational ratio = rhs[i] / *a;
        if (leave < 0 || ratio < best ||
            (ratio == best && basis[i] < basis[leave])) {
          leave = static_cast<int>(i);
          best = std::move(ratio);
        }
      }
      if (leave < 0)
        return LpResult::Unbounded;

      if (best == 0) {
        if (++degenerateRun > kDegenerateRunBeforeBland)
          bland = true;
      } else {
        degenerateRun = 0;
        bland = false;
      }
      pivot(leave, enter);
    }
  }

  Solution extract() {
    std::vector<Rational> y(numCols, Rational(0));
    for (size_t r = 0; r < rows.size(); ++r)
      y[basis[r]] = rhs[r];
    Solution s;
    s.status = SolveStatus::Optimal;
    s.values.resize(vars.size());
    for (size_t i = 0; i < vars.size(); ++i) {
      Rational x = vars[i].offset;
      for (auto [k, sign] : vars[i].cols)
        x += sign * y[k];
      s.values[i] = std::move(x);
    }
    s.objective = p.objective().evaluate(s.values);
    return s;
  }

  static constexpr int kDegenerateRunBeforeBland = 16;

  const ILPProblem &p;
  SolverStats *stats;
  SolverLimits limits;
  std::vector<VarMap> vars;
  int numStructural = 0;
  int artStart = 0;
  int numArtificial = 0;
  int numCols = 0;
  std::vector<SparseRow> rows;
  std::vector<Rational> rhs;
  std::vector<int> basis;
  std::vector<Rational> cost;
  std::vector<bool> enterable;
  int64_t pivots = 0;
};

Rational floorOf(const Rational &q) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(r);
}

Rational ceilOf(const Rational &q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(r);
}

/// True when every feasible integer point has an integral objective value,
/// which lets the search prune on the rounded-up LP bound.
bool objectiveIsIntegral(const ILPProblem &p) {
  for (const auto &[var, coeff] : p.objective().terms())
    if (!p.variables()[var].integer || coeff.get_den() != 1)
      return false;
  return true;
}

} // namespace

Solution solveLp(const ILPProblem &problem, SolverStats *stats,
                 const SolverLimits &limits) {
  if (stats)
    ++stats->lpSolves;
  return Simplex(problem, stats, limits).run();
}

Solution solveIlp(const ILPProblem &problem, SolverStats *stats,
                  const SolverLimits &limits) {
  ILPProblem root = problem;
  for (Variable &v : root.variables()) {
    if (!v.integer)
      continue;
    if (v.lower)
      v.lower = ceilOf(*v.lower);
    if (v.upper)
      v.upper = floorOf(*v.upper);
  }
  const bool integralObjective = objectiveIsIntegral(root);
  const Rational objectiveConstant = root.objective().constant();

  struct Node {
    std::vector<std::optional<Rational>> lower, upper;
  };
  auto boundsOf = [](const ILPProblem &p) {
    Node n;
    for (const Variable &v : p.variables()) {
      n.lower.push_back(v.lower);
      n.upper.push_back(v.upper);
    }
    return n;
  };

  Solution incumbent;
  incumbent.status = SolveStatus::Infeasible;
  std::vector<Node> stack{boundsOf(root)};
  int64_t nodes = 0;
  ILPProblem work = root;
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    if (++nodes > limits.maxNodes)
      throw SolverError("branch-and-bound node limit exceeded");
    if (stats)
      ++stats->nodes;
    for (int i = 0; i < work.numVariables(); ++i) {
      work.variables()[i].lower = node.lower[i];
      work.variables()[i].upper = node.upper[i];
    }
    Solution lp = solveLp(work, stats, limits);
    if (lp.status == SolveStatus::Infeasible)
      continue;
    if (lp.status == SolveStatus::Unbounded)
      return lp;
    if (incumbent.optimal()) {
      Rational bound = lp.objective;
      if (integralObjective)
        bound = ceilOf(bound - objectiveConstant) + objectiveConstant;
      if (bound >= incumbent.objective)
        continue;
    }

    int branchVar = -1;
    Rational bestDistance = -1;
    for (int i = 0; i < work.numVariables(); ++i) {
      if (!work.variables()[i].integer || lp.values[i].get_den() == 1)
        continue;
      Rational frac = lp.values[i] - floorOf(lp.values[i]);
      Rational distance = frac < Rational(1, 2) ? frac : 1 - frac;
      if (distance > bestDistance) {
        bestDistance = distance;
        branchVar = i;
      }
    }
    if (branchVar < 0) {
      incumbent = std::move(lp);
      continue;
    }

    Node down = node, up = std::move(node);
    down.upper[branchVar] = floorOf(lp.values[branchVar]);
    up.lower[branchVar] = ceilOf(lp.values[branchVar]);
    stack.push_back(std::move(up));
    stack.push_back(std::move(down));
  }
  return incumbent;
}

} // namespace pipeflow
