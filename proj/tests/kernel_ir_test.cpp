//===- kernel_ir_test.cpp - Parser, validator and rewrites ----------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "test_util.h"

#include <algorithm>

using namespace pipeflow;

static const char *kConv = R"(
kernel conv {
  array X : f32[32] ports=1 latency=1;
  array Y : f32[32] ports=1 latency=1;
  op fadd arity=2 latency=5;
  for j in 0..30 pipeline(ii=7) {
    a = load X[j];
    y = load Y[j];
    r = fadd(y, a);
    store Y[j+1], r;
  }
}
)";

static bool hasDiagnostic(const std::vector<Diagnostic> &diags,
                          const std::string &text) {
  return std::any_of(diags.begin(), diags.end(), [&](const Diagnostic &d) {
    return d.message.find(text) != std::string::npos;
  });
}

static std::vector<Diagnostic> diagnosticsOf(const std::string &src) {
  return validateKernel(parseKernelUnchecked(src));
}

TEST_CASE("conv source parses with fadd latency 5 and one nest") {
  Kernel k = parseKernel(kConv);
  CHECK(k.name == "conv");
  REQUIRE(k.opdefs.size() == 1);
  CHECK(k.opdefs[0].latency == 5);
  REQUIRE(k.body.size() == 1);
  REQUIRE(k.body[0].isLoop());
  const Loop &j = k.body[0].loop();
  CHECK(j.tripCount == 30);
  CHECK(j.targetII == 7);
  CHECK(j.body.size() == 4);
}

TEST_CASE("empty kernel parses to zero nests") {
  Kernel k = parseKernel("kernel k {}");
  CHECK(k.body.empty());
  CHECK(k.arrays.empty());
}

TEST_CASE("rank mismatch is rejected") {
  const char *src = R"(kernel k {
    array A : f32[4][4];
    for i in 0..4 pipeline(ii=1) { store A[i][i][i], 1.0; }
  })";
  CHECK_THROWS_AS(parseKernel(src), KernelError);
  CHECK(hasDiagnostic(diagnosticsOf(src), "rank"));
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parseKernel("kernel k {\n  array A f32[4];\n}");
    FAIL("expected an error");
  } catch (const KernelError &e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("identifier loop bound is a non-constant bound") {
  try {
    parseKernel("kernel k { for i in 0..n { } }");
    FAIL("expected an error");
  } catch (const KernelError &e) {
    CHECK(std::string(e.what()).find("non-constant bound") !=
          std::string::npos);
  }
}

TEST_CASE("unknown array and opcode are reported") {
  CHECK(hasDiagnostic(diagnosticsOf(R"(kernel k {
    for i in 0..4 pipeline(ii=1) { x = load Q[i]; }
  })"),
                      "array"));
  CHECK(hasDiagnostic(diagnosticsOf(R"(kernel k {
    array A : f32[4];
    for i in 0..4 pipeline(ii=1) { x = load A[i]; y = fmul(x, x); }
  })"),
                      "fmul"));
}

TEST_CASE("well-formed matmul validates cleanly") {
  Kernel k =
      parseKernelUnchecked(readFile(testutil::benchmarkPath("matmul.kir")));
  CHECK(validateKernel(k).empty());
}

TEST_CASE("lower equal to upper is an empty trip count") {
  CHECK(hasDiagnostic(diagnosticsOf("kernel k { for i in 3..3 { } }"),
                      "empty trip count"));
}

TEST_CASE("ssa value used inside a nested loop crosses region") {
  auto d = diagnosticsOf(R"(kernel k {
    array A : f32[4];
    x = load A[0];
    for i in 0..4 pipeline(ii=1) { store A[i], x; }
  })");
  CHECK(hasDiagnostic(d, "ssa value crosses region"));
}

TEST_CASE("unroll and pipeline on one loop are exclusive") {
  CHECK(hasDiagnostic(
      diagnosticsOf("kernel k { for i in 0..2 pipeline(ii=1) unroll { } }"),
      "mutually exclusive"));
}

TEST_CASE("lower bounds are folded into index constants") {
  Kernel k = parseKernel(R"(kernel k {
    array A : f32[16];
    for i in 3..7 pipeline(ii=1) { store A[2*i - 1], 1.0; }
  })");
  const Loop &l = k.body[0].loop();
  CHECK(l.tripCount == 4);
  const AffineExpr &e = l.body[0].stmt().index[0];
  // 2*(i' + 3) - 1 with i' the iteration number.
  CHECK(e.coefficientOf(l.id) == 2);
  CHECK(e.constant == 5);
}

TEST_CASE("no pipeline clause means autotune") {
  Kernel k = parseKernel("kernel k { for i in 0..4 { } }");
  CHECK_FALSE(k.body[0].loop().targetII.has_value());
  CHECK(printKernel(k).find("pipeline(ii=?)") != std::string::npos);
}

TEST_CASE("array attributes are kept") {
  Kernel k = parseKernel(R"(kernel k {
    array W : i16[2][3] storage=lut latency=2 ports=3 partition(dim=0) arg;
  })");
  const ArrayDecl &w = k.arrays[0];
  CHECK(w.elementKind == "i16");
  CHECK(w.dims == std::vector<int64_t>{2, 3});
  CHECK(w.storage == StorageKind::Lut);
  CHECK(w.ports == 3);
  CHECK(w.latency == 2);
  CHECK(w.partitionDims == std::vector<int64_t>{0});
  CHECK(w.isArgument);
}

//===----------------------------------------------------------------------===//
// Unroll
//===----------------------------------------------------------------------===//

TEST_CASE("unroll substitutes the induction variable") {
  Kernel k = applyUnroll(parseKernel(R"(kernel k {
    array A : f32[3];
    for x in 0..3 unroll { store A[x], 1.0; }
  })"));
  REQUIRE(k.body.size() == 3);
  for (int64_t x = 0; x < 3; ++x) {
    const Stmt &s = k.body[x].stmt();
    CHECK(s.kind == StmtKind::Store);
    CHECK(s.index[0] == AffineExpr::constantExpr(x));
  }
  CHECK(k.body[0].stmt().id == "S0#0");
  CHECK(k.body[2].stmt().id == "S0#2");
}

TEST_CASE("nested 2x2 unroll gives four copies") {
  Kernel k = applyUnroll(parseKernel(R"(kernel k {
    array A : f32[2][2];
    for i in 0..4 pipeline(ii=1) {
      for x in 0..2 unroll {
        for y in 0..2 unroll { v = load A[x][y]; store A[y][x], v; }
      }
    }
  })"));
  const Loop &i = k.body[0].loop();
  CHECK(i.body.size() == 8);
  int loads = 0;
  for (const Item &it : i.body)
    loads += it.stmt().kind == StmtKind::Load;
  CHECK(loads == 4);
  // SSA names are freshened per copy, and still pair up within a copy.
  CHECK(i.body[0].stmt().result == i.body[1].stmt().operands[0].text);
  CHECK(i.body[0].stmt().result != i.body[2].stmt().result);
  CHECK(validateKernel(k).empty());
}

TEST_CASE("kernel without unroll marks is unchanged") {
  Kernel k = parseKernel(kConv);
  CHECK(applyUnroll(k) == k);
}

//===----------------------------------------------------------------------===//
// Partition
//===----------------------------------------------------------------------===//

TEST_CASE("constant partition index selects a bank") {
  Kernel k = applyPartition(parseKernel(R"(kernel k {
    array A : f32[4][8] ports=2 latency=3 partition(dim=0);
    for j in 0..8 pipeline(ii=1) { v = load A[2][j]; }
  })"));
  std::vector<std::string> names;
  for (const ArrayDecl &a : k.arrays)
    names.push_back(a.name);
  CHECK(names == std::vector<std::string>{"A__0", "A__1", "A__2", "A__3"});
  CHECK(k.arrays[2].dims == std::vector<int64_t>{8});
  CHECK(k.arrays[2].ports == 2);
  CHECK(k.arrays[2].latency == 3);
  const Stmt &s = k.body[0].loop().body[0].stmt();
  CHECK(s.array == "A__2");
  REQUIRE(s.index.size() == 1);
  CHECK(s.index[0].coefficientOf("j") == 1);
}

TEST_CASE("partition index on a live induction variable is an error") {
  Kernel k = parseKernel(R"(kernel k {
    array A : f32[4][8] partition(dim=0);
    for i in 0..4 pipeline(ii=1) {
      for j in 0..8 pipeline(ii=1) { v = load A[i][j]; }
    }
  })");
  try {
    applyPartition(k);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("non-constant partition index") !=
          std::string::npos);
  }
}

TEST_CASE("kernel without partitions is unchanged") {
  Kernel k = parseKernel(kConv);
  CHECK(applyPartition(k) == k);
}

//===----------------------------------------------------------------------===//
// Properties
//===----------------------------------------------------------------------===//

namespace {

using Access = std::tuple<std::string, std::vector<int64_t>, bool>;

/// Every (array, address, is-write) over all instances, by direct
/// interpretation of the tree, unroll loops included.
std::vector<Access> accessMultiset(const Kernel &k) {
  std::vector<Access> out;
  std::map<std::string, int64_t> env;
  std::function<void(const std::vector<Item> &)> walk =
      [&](const std::vector<Item> &body) {
        for (const Item &item : body) {
          if (item.isLoop()) {
            for (int64_t x = 0; x < item.loop().tripCount; ++x) {
              env[item.loop().id] = x;
              walk(item.loop().body);
            }
            continue;
          }
          const Stmt &s = item.stmt();
          if (!s.isMemoryAccess())
            continue;
          std::vector<int64_t> addr;
          for (const AffineExpr &e : s.index)
            addr.push_back(testutil::evalAffine(e, env));
          out.emplace_back(s.array, addr, s.kind == StmtKind::Store);
        }
      };
  walk(k.body);
  std::sort(out.begin(), out.end());
  return out;
}

/// Maps bank accesses back to the original array coordinates.
std::vector<Access> unpartitioned(const Kernel &original,
                                  std::vector<Access> accesses) {
  for (Access &a : accesses) {
    std::string &name = std::get<0>(a);
    size_t sep = name.find("__");
    if (sep == std::string::npos)
      continue;
    std::string base = name.substr(0, sep);
    const ArrayDecl *decl = original.findArray(base);
    REQUIRE(decl);
    std::vector<int64_t> coords;
    std::string rest = name.substr(sep + 2);
    for (size_t p; (p = rest.find("__")) != std::string::npos;
         rest = rest.substr(p + 2))
      coords.push_back(std::stoll(rest.substr(0, p)));
    coords.push_back(std::stoll(rest));
    std::vector<int64_t> dims = decl->partitionDims;
    std::sort(dims.begin(), dims.end());
    std::vector<int64_t> full;
    const std::vector<int64_t> &local = std::get<1>(a);
    size_t li = 0, ci = 0;
    bool allPartitioned = dims.size() == decl->dims.size();
    for (size_t d = 0; d < decl->dims.size(); ++d) {
      if (std::find(dims.begin(), dims.end(), static_cast<int64_t>(d)) !=
          dims.end())
        full.push_back(coords[ci++]);
      else
        full.push_back(local[li++]);
    }
    if (allPartitioned)
      CHECK(local == std::vector<int64_t>{0});
    name = base;
    std::get<1>(a) = full;
  }
  std::sort(accesses.begin(), accesses.end());
  return accesses;
}

} // namespace

TEST_CASE("unroll preserves the access multiset on random kernels") {
  std::mt19937_64 rng(testutil::seed());
  for (int n = 0; n < 60; ++n) {
    // Random bodies inside a fixed unroll frame.
    std::uniform_int_distribution<int> trip(1, 4);
    int a = trip(rng), b = trip(rng);
    std::ostringstream src;
    src << "kernel u {\n  array A : f32[64][64] ports=2;\n"
        << "  for i in 0.." << trip(rng) << " pipeline(ii=?) {\n"
        << "    for x in 1.." << a + 1 << " unroll {\n"
        << "      v = load A[i + x][2*x];\n"
        << "      for y in 0.." << b << " unroll {\n"
        << "        w = load A[x + y][i];\n"
        << "        store A[y][x + 3], w;\n"
        << "      }\n"
        << "      store A[x][i + 1], v;\n"
        << "    }\n  }\n}\n";
    Kernel k = parseKernel(src.str());
    Kernel u = applyUnroll(k);
    CHECK(validateKernel(u).empty());
    CHECK(accessMultiset(k) == accessMultiset(u));
  }
}

TEST_CASE("partition preserves the per-bank access multiset") {
  std::mt19937_64 rng(testutil::seed() + 1);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int n = 0; n < 40; ++n) {
    int dim = pick(rng) % 2;
    bool both = pick(rng) == 0;
    std::ostringstream src;
    src << "kernel p {\n  array W : f32[3][4] partition(dim=" << dim;
    if (both)
      src << ", dim=" << 1 - dim;
    src << ");\n"
        << "  for i in 0..4 pipeline(ii=?) {\n"
        << "    for x in 0..3 unroll {\n"
        << "      for y in 0..4 unroll {\n"
        << "        v = load W[x][y];\n"
        << "        store W[2 - x][3 - y], v;\n"
        << "      }\n    }\n  }\n}\n";
    Kernel k = applyUnroll(parseKernel(src.str()));
    Kernel p = applyPartition(k);
    CHECK(validateKernel(p).empty());
    CHECK(unpartitioned(k, accessMultiset(p)) == accessMultiset(k));
  }
}

TEST_CASE("parse print parse is a fixpoint on benchmarks and random kernels") {
  std::vector<std::string> sources;
  for (const char *b : {"conv1d.kir", "conv_chain.kir", "matmul.kir",
                        "interloop.kir", "delay.kir", "2mm.kir", "unsharp.kir",
                        "dus.kir", "harris.kir", "optflow.kir"})
    sources.push_back(readFile(testutil::benchmarkPath(b)));
  std::mt19937_64 rng(testutil::seed() + 2);
  for (int n = 0; n < 50; ++n)
    sources.push_back(testutil::KernelGenerator(rng).generate());
  for (const std::string &src : sources) {
    Kernel k = parseKernel(src);
    std::string printed = printKernel(k);
    Kernel again = parseKernel(printed);
    CHECK(again == k);
    CHECK(printKernel(again) == printed);
  }
}
