//===- kernel.h - Affine kernel IR ------------------------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The affine-kernel IR: arrays, operator definitions and sequenced loop nests
// with constant bounds. Loops are normalized to a zero lower bound and unit
// step when parsed, so induction variables are iteration numbers.
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_KERNEL_H
#define PIPEFLOW_KERNEL_H

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pipeflow {

/// Base class for every error the library reports through exceptions.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Sum of integer multiples of induction variables plus a constant. Variables
/// are referred to by loop id.
struct AffineExpr {
  std::vector<std::pair<std::string, int64_t>> terms;
  int64_t constant = 0;

  static AffineExpr constantExpr(int64_t value) { return {{}, value}; }

  bool isConstant() const { return terms.empty(); }
  int64_t coefficientOf(const std::string &loopId) const;

  /// Merges like terms and drops zero coefficients; keeps first-seen order.
  AffineExpr &canonicalize();
  /// Replaces \p loopId by \p value everywhere.
  AffineExpr substitute(const std::string &loopId, int64_t value) const;
  AffineExpr renamed(const std::string &from, const std::string &to) const;

  bool operator==(const AffineExpr &) const = default;
};

enum class StorageKind { Bram, Lut, Register };

struct ArrayDecl {
  std::string name;
  std::string elementKind;
  std::vector<int64_t> dims;
  StorageKind storage = StorageKind::Bram;
  int64_t ports = 1;
  /// Read latency in cycles.
  int64_t latency = 1;
  std::vector<int64_t> partitionDims;
  bool isArgument = false;

  bool operator==(const ArrayDecl &) const = default;
};

/// An operator (or external function) with one result and constant latency.
struct OpDef {
  std::string name;
  int64_t arity = 0;
  int64_t latency = 0;

  bool operator==(const OpDef &) const = default;
};

/// Either an SSA value name or a literal.
struct Operand {
  bool isLiteral = false;
  std::string text;

  static Operand value(std::string name) { return {false, std::move(name)}; }
  static Operand literal(std::string text) { return {true, std::move(text)}; }

  bool operator==(const Operand &) const = default;
};

enum class StmtKind { Load, Store, Compute, Const };

struct Stmt {
  std::string id;
  StmtKind kind = StmtKind::Const;
  /// Load/Store.
  std::string array;
  std::vector<AffineExpr> index;
  /// Load/Compute/Const.
  std::string result;
  /// Compute.
  std::string opcode;
  /// Compute operands, or the single stored value for Store.
  std::vector<Operand> operands;
  /// Const.
  std::string literal;
  /// 1-based source position, 0 when synthesized.
  int line = 0;

  bool isMemoryAccess() const {
    return kind == StmtKind::Load || kind == StmtKind::Store;
  }
  bool definesValue() const { return kind != StmtKind::Store; }

  /// Source positions are not compared.
  bool operator==(const Stmt &other) const {
    return id == other.id && kind == other.kind && array == other.array &&
           index == other.index && result == other.result &&
           opcode == other.opcode && operands == other.operands &&
           literal == other.literal;
  }
};

struct Item;

struct Loop {
  /// Unique within the kernel. Equal to the induction variable name unless
  /// that name is reused by another loop.
  std::string id;
  std::string iv;
  int64_t tripCount = 0;
  /// Absent means the II is left to the autotuner.
  std::optional<int64_t> targetII;
  bool unroll = false;
  std::vector<Item> body;
  int line = 0;

  /// Source positions are not compared.
  bool operator==(const Loop &) const;
};

struct Item {
  std::variant<Stmt, Loop> node;

  bool isLoop() const { return std::holds_alternative<Loop>(node); }
  const Loop &loop() const { return std::get<Loop>(node); }
  Loop &loop() { return std::get<Loop>(node); }
  const Stmt &stmt() const { return std::get<Stmt>(node); }
  Stmt &stmt() { return std::get<Stmt>(node); }

  bool operator==(const Item &) const = default;
};

inline bool Loop::operator==(const Loop &other) const {
  return id == other.id && iv == other.iv && tripCount == other.tripCount &&
         targetII == other.targetII && unroll == other.unroll &&
         body == other.body;
}

struct Kernel {
  std::string name;
  std::vector<ArrayDecl> arrays;
  std::vector<OpDef> opdefs;
  std::vector<Item> body;

  const ArrayDecl *findArray(const std::string &name) const;
  const OpDef *findOpDef(const std::string &name) const;

  bool operator==(const Kernel &) const = default;
};

/// A problem found while checking kernel invariants. \c where names the
/// statement or loop id involved (empty for kernel-level problems).
struct Diagnostic {
  std::string where;
  std::string message;
  int line = 0;

  std::string str() const;
};

/// Thrown by the parser for syntax errors and for kernels that fail
/// validation.
class KernelError : public Error {
public:
  KernelError(const std::string &message, int line, int column);
  explicit KernelError(std::vector<Diagnostic> diagnostics);

  int line() const { return line_; }
  int column() const { return column_; }
  const std::vector<Diagnostic> &diagnostics() const { return diagnostics_; }

private:
  int line_ = 0;
  int column_ = 0;
  std::vector<Diagnostic> diagnostics_;
};

/// Parses kernel source without checking semantic invariants. Syntax errors
/// and non-constant loop bounds throw KernelError.
Kernel parseKernelUnchecked(const std::string &text);

/// Parses and validates; throws KernelError carrying every diagnostic.
Kernel parseKernel(const std::string &text);

/// Empty iff every IR invariant holds.
std::vector<Diagnostic> validateKernel(const Kernel &kernel);

/// Canonical source form. Parsing the output yields an equal kernel.
std::string printKernel(const Kernel &kernel);

/// Replaces every unroll-marked loop by trip-count copies of its body. Copies
/// get ids suffixed with "#<iteration>".
Kernel applyUnroll(const Kernel &kernel);

/// Splits completely partitioned arrays into banks named "<array>__<idx>".
/// Throws Error when a partitioned dimension is indexed non-constantly.
Kernel applyPartition(const Kernel &kernel);

const char *storageKindName(StorageKind kind);

} // namespace pipeflow

#endif // PIPEFLOW_KERNEL_H
