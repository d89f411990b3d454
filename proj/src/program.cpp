//===- program.cpp - Flattened view of a rewritten kernel -----------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/program.h"

namespace pipeflow {

Program::Program(Kernel kernel) : kernel_(std::move(kernel)) {
  std::vector<int> chain;
  index(kernel_.body, chain);
}

void Program::index(const std::vector<Item> &body, std::vector<int> &chain) {
  // Producers visible in this region, by value name.
  std::map<std::string, int> producers;
  int order = 0;
  for (const Item &item : body) {
    order = static_cast<int>(nodes_.size());
    if (item.isLoop()) {
      const Loop &l = item.loop();
      if (l.unroll)
        throw Error("loop '" + l.id + "' must be unrolled before scheduling");
      LoopInfo info;
      info.id = l.id;
      info.iv = l.iv;
      info.tripCount = l.tripCount;
      info.targetII = l.targetII;
      info.parents = chain;
      info.order = order;
      int idx = static_cast<int>(loops_.size());
      loops_.push_back(std::move(info));
      loopIndex_[l.id] = idx;
      nodes_.push_back({true, idx});
      if (chain.empty())
        topLevel_.push_back({true, idx});
      chain.push_back(idx);
      index(l.body, chain);
      chain.pop_back();
      continue;
    }
    const Stmt &s = item.stmt();
    OpInfo info;
    info.stmt = s;
    info.loops = chain;
    info.order = order;
    switch (s.kind) {
    case StmtKind::Load:
      if (const ArrayDecl *a = kernel_.findArray(s.array))
        info.latency = a->latency;
      break;
    case StmtKind::Store:
      info.latency = 1;
      break;
    case StmtKind::Compute:
      if (const OpDef *d = kernel_.findOpDef(s.opcode))
        info.latency = d->latency;
      break;
    case StmtKind::Const:
      info.latency = 0;
      break;
    }
    int idx = static_cast<int>(ops_.size());
    for (const Operand &o : s.operands) {
      if (o.isLiteral)
        continue;
      auto it = producers.find(o.text);
      if (it == producers.end())
        continue;
      bool seen = false;
      for (const SsaEdge &e : ssaEdges_)
        if (e.producer == it->second && e.consumer == idx)
          seen = true;
      if (!seen)
        ssaEdges_.push_back({it->second, idx});
    }
    if (s.definesValue())
      producers[s.result] = idx;
    ops_.push_back(std::move(info));
    opIndex_[s.id] = idx;
    nodes_.push_back({false, idx});
    if (chain.empty())
      topLevel_.push_back({false, idx});
  }
}

int Program::findOp(const std::string &id) const {
  auto it = opIndex_.find(id);
  return it == opIndex_.end() ? -1 : it->second;
}

int Program::findLoop(const std::string &id) const {
  auto it = loopIndex_.find(id);
  return it == loopIndex_.end() ? -1 : it->second;
}

const ArrayDecl &Program::array(const std::string &name) const {
  const ArrayDecl *a = kernel_.findArray(name);
  if (!a)
    throw Error("unknown array '" + name + "'");
  return *a;
}

int Program::commonDepth(int opA, int opB) const {
  const std::vector<int> &a = ops_[opA].loops;
  const std::vector<int> &b = ops_[opB].loops;
  size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n])
    ++n;
  return static_cast<int>(n);
}

} // namespace pipeflow
