//===- program.h - Flattened view of a rewritten kernel ---------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Index over a kernel whose unroll loops have been expanded: every remaining
// loop and statement gets a dense index, its chain of enclosing loops and
// its position in sequential program order. Dependence analysis, the
// scheduler and the simulator all work on this view.
//
//===----------------------------------------------------------------------===//

#ifndef PIPEFLOW_PROGRAM_H
#define PIPEFLOW_PROGRAM_H

#include "pipeflow/kernel.h"

#include <map>

namespace pipeflow {

struct LoopInfo {
  std::string id;
  std::string iv;
  int64_t tripCount = 0;
  std::optional<int64_t> targetII;
  /// Enclosing loops, outermost first, excluding this loop.
  std::vector<int> parents;
  /// Pre-order position among loops and ops.
  int order = 0;
};

struct OpInfo {
  Stmt stmt;
  /// Enclosing loops, outermost first.
  std::vector<int> loops;
  int order = 0;
  /// Cycles from start until the result (or the write) is available.
  int64_t latency = 0;
};

/// A use of the value produced by \c producer in \c consumer. Both ops live
/// in the same region.
struct SsaEdge {
  int producer = 0;
  int consumer = 0;
};

/// A schedulable entity: a loop or an op, addressed by index.
struct TimedNode {
  bool isLoop = false;
  int index = 0;
};

class Program {
public:
  /// Throws Error if an unroll-marked loop remains.
  explicit Program(Kernel kernel);

  const Kernel &kernel() const { return kernel_; }
  const std::vector<LoopInfo> &loops() const { return loops_; }
  const std::vector<OpInfo> &ops() const { return ops_; }
  const std::vector<SsaEdge> &ssaEdges() const { return ssaEdges_; }
  /// Loops and ops in pre-order.
  const std::vector<TimedNode> &nodes() const { return nodes_; }
  /// Top-level loops and ops in program order.
  const std::vector<TimedNode> &topLevel() const { return topLevel_; }

  int findOp(const std::string &id) const;
  int findLoop(const std::string &id) const;
  const ArrayDecl &array(const std::string &name) const;

  /// Number of leading loops shared by two ops' loop chains.
  int commonDepth(int opA, int opB) const;

private:
  void index(const std::vector<Item> &body, std::vector<int> &chain);

  Kernel kernel_;
  std::vector<LoopInfo> loops_;
  std::vector<OpInfo> ops_;
  std::vector<SsaEdge> ssaEdges_;
  std::vector<TimedNode> nodes_;
  std::vector<TimedNode> topLevel_;
  std::map<std::string, int> opIndex_;
  std::map<std::string, int> loopIndex_;
};

} // namespace pipeflow

#endif // PIPEFLOW_PROGRAM_H
