//===- kernel_validate.cpp - Kernel invariant checks ----------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/kernel.h"

#include <algorithm>
#include <set>

namespace pipeflow {

namespace {

class Validator {
public:
  explicit Validator(const Kernel &k) : k(k) {}

  std::vector<Diagnostic> run() {
    checkDecls();
    std::vector<std::string> enclosing;
    checkRegion(k.body, enclosing);
    return std::move(diags);
  }

private:
  void report(const std::string &where, const std::string &msg, int line) {
    diags.push_back({where, msg, line});
  }

  void checkDecls() {
    std::set<std::string> names;
    for (const ArrayDecl &a : k.arrays) {
      if (!names.insert(a.name).second)
        report(a.name, "duplicate array name", 0);
      if (a.dims.empty())
        report(a.name, "array has no dimensions", 0);
      for (int64_t d : a.dims)
        if (d <= 0)
          report(a.name, "array extent must be positive", 0);
      if (a.ports < 1)
        report(a.name, "array needs at least one port", 0);
      if (a.latency < 0)
        report(a.name, "negative access latency", 0);
      std::set<int64_t> seen;
      for (int64_t d : a.partitionDims) {
        if (d < 0 || d >= static_cast<int64_t>(a.dims.size()))
          report(a.name, "partition dim " + std::to_string(d) +
                             " out of range",
                 0);
        if (!seen.insert(d).second)
          report(a.name, "partition dim listed twice", 0);
      }
    }
    std::set<std::string> ops;
    for (const OpDef &d : k.opdefs) {
      if (!ops.insert(d.name).second)
        report(d.name, "duplicate op name", 0);
      if (d.arity < 1)
        report(d.name, "op arity must be positive", 0);
      if (d.latency < 0)
        report(d.name, "negative op latency", 0);
    }
  }

  void checkIndex(const Stmt &s, const std::vector<std::string> &enclosing) {
    const ArrayDecl *a = k.findArray(s.array);
    if (!a) {
      report(s.id, "unknown array '" + s.array + "'", s.line);
      return;
    }
    if (a->dims.size() != s.index.size())
      report(s.id,
             "rank mismatch: '" + s.array + "' has rank " +
                 std::to_string(a->dims.size()) + " but is indexed with " +
                 std::to_string(s.index.size()) + " subscripts",
             s.line);
    for (const AffineExpr &e : s.index)
      for (const auto &[id, coeff] : e.terms)
        if (std::find(enclosing.begin(), enclosing.end(), id) ==
            enclosing.end())
          report(s.id, "index uses '" + id + "' which is not an enclosing loop",
                 s.line);
  }

  void checkOperand(const Stmt &s, const Operand &o,
                    const std::set<std::string> &regionDefs) {
    if (o.isLiteral)
      return;
    if (regionDefs.count(o.text))
      return;
    if (allDefs.count(o.text))
      report(s.id, "ssa value crosses region: '" + o.text + "'", s.line);
    else
      report(s.id, "use of undefined value '" + o.text + "'", s.line);
  }

  void checkRegion(const std::vector<Item> &body,
                   std::vector<std::string> &enclosing) {
    std::set<std::string> regionDefs;
    for (const Item &item : body) {
      if (item.isLoop()) {
        const Loop &l = item.loop();
        if (!loopIds.insert(l.id).second)
          report(l.id, "duplicate loop id", l.line);
        if (l.tripCount <= 0)
          report(l.id, "empty trip count", l.line);
        if (l.unroll && l.targetII)
          report(l.id, "unroll and pipeline are mutually exclusive", l.line);
        if (l.targetII && *l.targetII < 1)
          report(l.id, "initiation interval must be positive", l.line);
        enclosing.push_back(l.id);
        checkRegion(l.body, enclosing);
        enclosing.pop_back();
        continue;
      }
      const Stmt &s = item.stmt();
      switch (s.kind) {
      case StmtKind::Load:
        checkIndex(s, enclosing);
        break;
      case StmtKind::Store:
        checkIndex(s, enclosing);
        if (s.operands.size() != 1)
          report(s.id, "store needs exactly one value", s.line);
        break;
      case StmtKind::Compute:
        if (const OpDef *d = k.findOpDef(s.opcode)) {
          if (static_cast<int64_t>(s.operands.size()) != d->arity)
            report(s.id,
                   "'" + s.opcode + "' expects " + std::to_string(d->arity) +
                       " operands",
                   s.line);
        } else {
          report(s.id, "unknown opcode '" + s.opcode + "'", s.line);
        }
        break;
      case StmtKind::Const:
        break;
      }
      for (const Operand &o : s.operands)
        checkOperand(s, o, regionDefs);
      if (s.definesValue()) {
        if (!regionDefs.insert(s.result).second)
          report(s.id, "value '" + s.result + "' defined twice", s.line);
        allDefs.insert(s.result);
      }
    }
  }

  const Kernel &k;
  std::vector<Diagnostic> diags;
  std::set<std::string> loopIds;
  // Every value defined so far anywhere, to tell cross-region uses apart
  // from plain undefined ones.
  std::set<std::string> allDefs;
};

} // namespace

std::vector<Diagnostic> validateKernel(const Kernel &kernel) {
  return Validator(kernel).run();
}

} // namespace pipeflow
