//===- kernel_transforms.cpp - Full unrolling and array partitioning ------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/kernel.h"

#include <algorithm>
#include <map>
#include <set>

namespace pipeflow {

namespace {

/// Renames the SSA values and ids of one unrolled body copy and replaces the
/// unrolled induction variable by a constant.
class BodyCopier {
public:
  BodyCopier(std::string loopId, int64_t iteration)
      : loopId(std::move(loopId)), iteration(iteration),
        suffix("#" + std::to_string(iteration)) {}

  std::vector<Item> copy(const std::vector<Item> &body) {
    std::vector<Item> out;
    out.reserve(body.size());
    for (const Item &item : body)
      out.push_back(copyItem(item));
    return out;
  }

private:
  Item copyItem(const Item &item) {
    if (item.isLoop()) {
      Loop l = item.loop();
      std::string oldId = l.id;
      l.id += suffix;
      loopRenames[oldId] = l.id;
      l.body = copy(item.loop().body);
      return Item{std::move(l)};
    }
    Stmt s = item.stmt();
    s.id += suffix;
    for (AffineExpr &e : s.index) {
      e = e.substitute(loopId, iteration);
      for (const auto &[from, to] : loopRenames)
        e = e.renamed(from, to);
    }
    for (Operand &o : s.operands)
      if (!o.isLiteral && defined.count(o.text))
        o.text += suffix;
    if (s.definesValue()) {
      defined.insert(s.result);
      s.result += suffix;
    }
    return Item{std::move(s)};
  }

  std::string loopId;
  int64_t iteration;
  std::string suffix;
  std::set<std::string> defined;
  std::map<std::string, std::string> loopRenames;
};

std::vector<Item> unrollRegion(const std::vector<Item> &body) {
  std::vector<Item> out;
  for (const Item &item : body) {
    if (!item.isLoop()) {
      out.push_back(item);
      continue;
    }
    const Loop &l = item.loop();
    if (!l.unroll) {
      Loop copy = l;
      copy.body = unrollRegion(l.body);
      out.push_back(Item{std::move(copy)});
      continue;
    }
    // Copy first, then unroll whatever unroll loops the copies still hold,
    // so nested ids read outer-iteration first.
    for (int64_t it = 0; it < l.tripCount; ++it) {
      std::vector<Item> copies = BodyCopier(l.id, it).copy(l.body);
      for (Item &c : unrollRegion(copies))
        out.push_back(std::move(c));
    }
  }
  return out;
}

std::string bankName(const std::string &array,
                     const std::vector<int64_t> &coords) {
  std::string name = array;
  for (int64_t c : coords)
    name += "__" + std::to_string(c);
  return name;
}

/// Rewrites accesses to partitioned arrays. The banks of an array take its
/// place in the declaration list, ordered by bank coordinates.
class Partitioner {
public:
  explicit Partitioner(const Kernel &k) : k(k) {}

  Kernel run() {
    Kernel out = k;
    out.body = rewrite(k.body);
    out.arrays.clear();
    for (const ArrayDecl &a : k.arrays) {
      if (a.partitionDims.empty()) {
        out.arrays.push_back(a);
        continue;
      }
      // Every bank exists even if it is never accessed.
      std::vector<int64_t> dims = sortedDims(a);
      std::vector<int64_t> coords(dims.size(), 0);
      bool done = false;
      while (!done) {
        out.arrays.push_back(makeBank(a, dims, coords));
        done = true;
        for (size_t d = coords.size(); d-- > 0;) {
          if (++coords[d] < a.dims[dims[d]]) {
            done = false;
            break;
          }
          coords[d] = 0;
        }
      }
    }
    return out;
  }

private:
  static std::vector<int64_t> sortedDims(const ArrayDecl &a) {
    std::vector<int64_t> dims = a.partitionDims;
    std::sort(dims.begin(), dims.end());
    return dims;
  }

  static ArrayDecl makeBank(const ArrayDecl &a,
                            const std::vector<int64_t> &dims,
                            const std::vector<int64_t> &coords) {
    ArrayDecl bank = a;
    bank.name = bankName(a.name, coords);
    bank.partitionDims.clear();
    bank.dims.clear();
    for (size_t d = 0; d < a.dims.size(); ++d)
      if (std::find(dims.begin(), dims.end(), static_cast<int64_t>(d)) ==
          dims.end())
        bank.dims.push_back(a.dims[d]);
    if (bank.dims.empty())
      bank.dims.push_back(1);
    return bank;
  }

  std::vector<Item> rewrite(const std::vector<Item> &body) {
    std::vector<Item> out;
    for (const Item &item : body) {
      if (item.isLoop()) {
        Loop l = item.loop();
        l.body = rewrite(l.body);
        out.push_back(Item{std::move(l)});
        continue;
      }
      Stmt s = item.stmt();
      if (s.isMemoryAccess())
        rewriteAccess(s);
      out.push_back(Item{std::move(s)});
    }
    return out;
  }

  void rewriteAccess(Stmt &s) {
    const ArrayDecl *a = k.findArray(s.array);
    if (!a || a->partitionDims.empty())
      return;
    std::vector<int64_t> dims = sortedDims(*a);
    std::vector<int64_t> coords;
    std::vector<AffineExpr> rest;
    for (size_t d = 0; d < s.index.size(); ++d) {
      bool partitioned = std::find(dims.begin(), dims.end(),
                                   static_cast<int64_t>(d)) != dims.end();
      if (!partitioned) {
        rest.push_back(s.index[d]);
        continue;
      }
      if (!s.index[d].isConstant())
        throw Error("non-constant partition index in " + s.id +
                    " accessing '" + s.array + "' along dim " +
                    std::to_string(d));
      int64_t c = s.index[d].constant;
      if (c < 0 || c >= a->dims[d])
        throw Error("partition index out of range in " + s.id +
                    " accessing '" + s.array + "'");
      coords.push_back(c);
    }
    if (rest.empty())
      rest.push_back(AffineExpr::constantExpr(0));
    s.array = bankName(s.array, coords);
    s.index = std::move(rest);
  }

  const Kernel &k;
};

} // namespace

Kernel applyUnroll(const Kernel &kernel) {
  Kernel out = kernel;
  out.body = unrollRegion(kernel.body);
  return out;
}

Kernel applyPartition(const Kernel &kernel) {
  return Partitioner(kernel).run();
}

} // namespace pipeflow
