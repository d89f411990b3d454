//===- kernel_ir.cpp - Kernel IR helpers and printer ----------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/kernel.h"

#include <algorithm>
#include <map>
#include <sstream>

namespace pipeflow {

int64_t AffineExpr::coefficientOf(const std::string &loopId) const {
  int64_t c = 0;
  for (const auto &[id, coeff] : terms)
    if (id == loopId)
      c += coeff;
  return c;
}

AffineExpr &AffineExpr::canonicalize() {
  std::vector<std::pair<std::string, int64_t>> merged;
  for (const auto &[id, coeff] : terms) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const auto &t) { return t.first == id; });
    if (it == merged.end())
      merged.emplace_back(id, coeff);
    else
      it->second += coeff;
  }
  std::erase_if(merged, [](const auto &t) { return t.second == 0; });
  terms = std::move(merged);
  return *this;
}

AffineExpr AffineExpr::substitute(const std::string &loopId,
                                  int64_t value) const {
  AffineExpr out;
  out.constant = constant;
  for (const auto &[id, coeff] : terms) {
    if (id == loopId)
      out.constant += coeff * value;
    else
      out.terms.emplace_back(id, coeff);
  }
  return out.canonicalize();
}

AffineExpr AffineExpr::renamed(const std::string &from,
                               const std::string &to) const {
  AffineExpr out = *this;
  for (auto &t : out.terms)
    if (t.first == from)
      t.first = to;
  return out.canonicalize();
}

const ArrayDecl *Kernel::findArray(const std::string &n) const {
  for (const ArrayDecl &a : arrays)
    if (a.name == n)
      return &a;
  return nullptr;
}

const OpDef *Kernel::findOpDef(const std::string &n) const {
  for (const OpDef &d : opdefs)
    if (d.name == n)
      return &d;
  return nullptr;
}

const char *storageKindName(StorageKind kind) {
  switch (kind) {
  case StorageKind::Bram:
    return "bram";
  case StorageKind::Lut:
    return "lut";
  case StorageKind::Register:
    return "register";
  }
  return "bram";
}

//===----------------------------------------------------------------------===//
// Printer
//===----------------------------------------------------------------------===//

namespace {

class Printer {
public:
  std::string run(const Kernel &k) {
    out << "kernel " << k.name << " {\n";
    for (const ArrayDecl &a : k.arrays)
      printArray(a);
    for (const OpDef &d : k.opdefs)
      out << "  op " << d.name << " arity=" << d.arity
          << " latency=" << d.latency << ";\n";
    for (const Item &item : k.body)
      printItem(item, 1);
    out << "}\n";
    return out.str();
  }

private:
  void indent(int depth) { out << std::string(2 * depth, ' '); }

  void printArray(const ArrayDecl &a) {
    out << "  array " << a.name << ": " << a.elementKind;
    for (int64_t d : a.dims)
      out << "[" << d << "]";
    out << " ports=" << a.ports << " latency=" << a.latency
        << " storage=" << storageKindName(a.storage);
    if (!a.partitionDims.empty()) {
      out << " partition(";
      for (size_t i = 0; i < a.partitionDims.size(); ++i)
        out << (i ? ", " : "") << "dim=" << a.partitionDims[i];
      out << ")";
    }
    if (a.isArgument)
      out << " arg";
    out << ";\n";
  }

  void printItem(const Item &item, int depth) {
    if (item.isLoop())
      printLoop(item.loop(), depth);
    else
      printStmt(item.stmt(), depth);
  }

  void printLoop(const Loop &l, int depth) {
    indent(depth);
    out << "for " << l.iv << " in 0.." << l.tripCount;
    if (l.unroll) {
      out << " unroll";
    } else {
      out << " pipeline(ii=";
      if (l.targetII)
        out << *l.targetII;
      else
        out << "?";
      out << ")";
    }
    out << " {\n";
    ivNames[l.id] = l.iv;
    for (const Item &item : l.body)
      printItem(item, depth + 1);
    indent(depth);
    out << "}\n";
  }

  void printAffine(const AffineExpr &e) {
    bool first = true;
    for (const auto &[id, coeff] : e.terms) {
      int64_t mag = coeff < 0 ? -coeff : coeff;
      if (first)
        out << (coeff < 0 ? "-" : "");
      else
        out << (coeff < 0 ? " - " : " + ");
      if (mag != 1)
        out << mag << "*";
      auto it = ivNames.find(id);
      out << (it == ivNames.end() ? id : it->second);
      first = false;
    }
    if (first)
      out << e.constant;
    else if (e.constant > 0)
      out << " + " << e.constant;
    else if (e.constant < 0)
      out << " - " << -e.constant;
  }

  void printIndex(const std::vector<AffineExpr> &index) {
    for (const AffineExpr &e : index) {
      out << "[";
      printAffine(e);
      out << "]";
    }
  }

  void printStmt(const Stmt &s, int depth) {
    indent(depth);
    switch (s.kind) {
    case StmtKind::Load:
      out << s.result << " = load " << s.array;
      printIndex(s.index);
      break;
    case StmtKind::Store:
      out << "store " << s.array;
      printIndex(s.index);
      out << ", " << (s.operands.empty() ? "" : s.operands.front().text);
      break;
    case StmtKind::Compute:
      out << s.result << " = " << s.opcode << "(";
      for (size_t i = 0; i < s.operands.size(); ++i)
        out << (i ? ", " : "") << s.operands[i].text;
      out << ")";
      break;
    case StmtKind::Const:
      out << s.result << " = const " << s.literal;
      break;
    }
    out << ";\n";
  }

  std::ostringstream out;
  std::map<std::string, std::string> ivNames;
};

} // namespace

std::string printKernel(const Kernel &kernel) { return Printer().run(kernel); }

} // namespace pipeflow
