//===- kernel_parser.cpp - Kernel source parser ---------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "pipeflow/kernel.h"

#include <cctype>
#include <map>
#include <sstream>

namespace pipeflow {

KernelError::KernelError(const std::string &message, int line, int column)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " +
            message),
      line_(line), column_(column) {}

static std::string joinDiagnostics(const std::vector<Diagnostic> &diags) {
  std::string out;
  for (const Diagnostic &d : diags) {
    if (!out.empty())
      out += "\n";
    out += d.str();
  }
  return out;
}

KernelError::KernelError(std::vector<Diagnostic> diagnostics)
    : Error(joinDiagnostics(diagnostics)),
      line_(diagnostics.empty() ? 0 : diagnostics.front().line),
      diagnostics_(std::move(diagnostics)) {}

std::string Diagnostic::str() const {
  std::string out;
  if (line > 0)
    out += "line " + std::to_string(line) + ": ";
  if (!where.empty())
    out += where + ": ";
  return out + message;
}

namespace {

enum class Tok { Ident, Int, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string &text) : src(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skipSpaceAndComments();
      Token t;
      t.line = line;
      t.column = col;
      if (pos >= src.size()) {
        out.push_back(t);
        return out;
      }
      char c = src[pos];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
          c == '%') {
        t.kind = Tok::Ident;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                src[pos] == '_' || src[pos] == '%'))
          t.text += advance();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lexNumber(t);
      } else if (c == '.' && peek(1) == '.') {
        t.kind = Tok::Punct;
        t.text = "..";
        advance();
        advance();
      } else if (std::string("{}[]();:,=+-*?").find(c) != std::string::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, advance());
      } else {
        throw KernelError(std::string("unexpected character '") + c + "'",
                          line, col);
      }
      out.push_back(std::move(t));
    }
  }

private:
  char peek(size_t ahead) const {
    return pos + ahead < src.size() ? src[pos + ahead] : '\0';
  }

  char advance() {
    char c = src[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  void skipSpaceAndComments() {
    while (pos < src.size()) {
      if (std::isspace(static_cast<unsigned char>(src[pos]))) {
        advance();
      } else if (src[pos] == '/' && peek(1) == '/') {
        while (pos < src.size() && src[pos] != '\n')
          advance();
      } else {
        return;
      }
    }
  }

  void lexNumber(Token &t) {
    t.kind = Tok::Int;
    while (std::isdigit(static_cast<unsigned char>(peek(0))))
      t.text += advance();
    // A single '.' followed by a digit continues a literal; ".." is a range.
    if (peek(0) == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      t.kind = Tok::Number;
      t.text += advance();
      while (std::isdigit(static_cast<unsigned char>(peek(0))))
        t.text += advance();
    }
    if ((peek(0) == 'e' || peek(0) == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek(1))) ||
         ((peek(1) == '+' || peek(1) == '-') &&
          std::isdigit(static_cast<unsigned char>(peek(2)))))) {
      t.kind = Tok::Number;
      t.text += advance();
      if (peek(0) == '+' || peek(0) == '-')
        t.text += advance();
      while (std::isdigit(static_cast<unsigned char>(peek(0))))
        t.text += advance();
    }
    if (t.kind == Tok::Number && (peek(0) == 'f' || peek(0) == 'F'))
      t.text += advance();
  }

  const std::string &src;
  size_t pos = 0;
  int line = 1;
  int col = 1;
};

/// One enclosing loop during parsing: the induction variable name, the loop
/// id it resolves to and the lower bound folded into every use.
struct Scope {
  std::string iv;
  std::string loopId;
  int64_t lower;
};

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks(std::move(toks)) {}

  Kernel run() {
    Kernel k;
    expectWord("kernel");
    k.name = expectIdent();
    expectPunct("{");
    while (!isPunct("}")) {
      if (isWord("array"))
        k.arrays.push_back(parseArray());
      else if (isWord("op"))
        k.opdefs.push_back(parseOpDef());
      else
        k.body.push_back(parseItem());
    }
    expectPunct("}");
    if (cur().kind != Tok::End)
      fail("trailing input after kernel");
    return k;
  }

private:
  const Token &cur() const { return toks[pos]; }
  const Token &next() { return toks[pos++]; }

  [[noreturn]] void fail(const std::string &msg) const {
    throw KernelError(msg, cur().line, cur().column);
  }

  bool isPunct(const char *p) const {
    return cur().kind == Tok::Punct && cur().text == p;
  }
  bool isWord(const char *w) const {
    return cur().kind == Tok::Ident && cur().text == w;
  }

  void expectPunct(const char *p) {
    if (!isPunct(p))
      fail(std::string("expected '") + p + "'" + found());
    ++pos;
  }
  void expectWord(const char *w) {
    if (!isWord(w))
      fail(std::string("expected '") + w + "'" + found());
    ++pos;
  }
  std::string found() const {
    if (cur().kind == Tok::End)
      return " but found end of input";
    return " but found '" + cur().text + "'";
  }

  std::string expectIdent() {
    if (cur().kind != Tok::Ident)
      fail("expected identifier" + found());
    return next().text;
  }

  int64_t expectInt() {
    bool negative = false;
    if (isPunct("-")) {
      negative = true;
      ++pos;
    }
    if (cur().kind != Tok::Int)
      fail("expected integer" + found());
    int64_t v = std::stoll(next().text);
    return negative ? -v : v;
  }

  /// `KEY=` where KEY is a bare word.
  void expectAttr(const char *key) {
    expectWord(key);
    expectPunct("=");
  }

  ArrayDecl parseArray() {
    expectWord("array");
    ArrayDecl a;
    a.name = expectIdent();
    expectPunct(":");
    a.elementKind = expectIdent();
    if (!isPunct("["))
      fail("expected array dimensions" + found());
    while (isPunct("[")) {
      ++pos;
      a.dims.push_back(expectInt());
      expectPunct("]");
    }
    while (!isPunct(";")) {
      if (isWord("ports")) {
        expectAttr("ports");
        a.ports = expectInt();
      } else if (isWord("latency")) {
        expectAttr("latency");
        a.latency = expectInt();
      } else if (isWord("storage")) {
        expectAttr("storage");
        int line = cur().line, column = cur().column;
        std::string kind = expectIdent();
        if (kind == "bram")
          a.storage = StorageKind::Bram;
        else if (kind == "lut")
          a.storage = StorageKind::Lut;
        else if (kind == "register")
          a.storage = StorageKind::Register;
        else
          throw KernelError("unknown storage kind '" + kind + "'", line,
                            column);
      } else if (isWord("partition")) {
        ++pos;
        expectPunct("(");
        for (;;) {
          expectAttr("dim");
          a.partitionDims.push_back(expectInt());
          if (!isPunct(","))
            break;
          ++pos;
        }
        expectPunct(")");
      } else if (isWord("arg")) {
        ++pos;
        a.isArgument = true;
      } else {
        fail("unexpected array attribute" + found());
      }
    }
    expectPunct(";");
    return a;
  }

  OpDef parseOpDef() {
    expectWord("op");
    OpDef d;
    d.name = expectIdent();
    expectAttr("arity");
    d.arity = expectInt();
    expectAttr("latency");
    d.latency = expectInt();
    expectPunct(";");
    return d;
  }

  Item parseItem() {
    if (isWord("for"))
      return Item{parseLoop()};
    return Item{parseStmt()};
  }

  std::string freshLoopId(const std::string &iv) {
    int n = loopNameUses[iv]++;
    return n == 0 ? iv : iv + "." + std::to_string(n);
  }

  Loop parseLoop() {
    Loop l;
    l.line = cur().line;
    expectWord("for");
    l.iv = expectIdent();
    expectWord("in");
    int64_t lower = parseBound();
    expectPunct("..");
    int64_t upper = parseBound();
    l.tripCount = upper - lower;
    l.id = freshLoopId(l.iv);
    if (isWord("pipeline")) {
      ++pos;
      expectPunct("(");
      expectAttr("ii");
      if (isPunct("?"))
        ++pos;
      else
        l.targetII = expectInt();
      expectPunct(")");
    }
    if (isWord("unroll")) {
      ++pos;
      l.unroll = true;
    }
    expectPunct("{");
    scopes.push_back({l.iv, l.id, lower});
    while (!isPunct("}"))
      l.body.push_back(parseItem());
    scopes.pop_back();
    expectPunct("}");
    return l;
  }

  int64_t parseBound() {
    if (cur().kind == Tok::Ident)
      fail("non-constant bound '" + cur().text + "'");
    return expectInt();
  }

  const Scope *lookup(const std::string &iv) const {
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
      if (it->iv == iv)
        return &*it;
    return nullptr;
  }

  AffineExpr parseAffine() {
    AffineExpr e;
    bool negate = false;
    if (isPunct("-")) {
      negate = true;
      ++pos;
    } else if (isPunct("+")) {
      ++pos;
    }
    for (;;) {
      int64_t coeff = 1;
      bool isTerm = true;
      if (cur().kind == Tok::Int) {
        coeff = std::stoll(next().text);
        if (isPunct("*"))
          ++pos;
        else
          isTerm = false;
      }
      if (!isTerm) {
        e.constant += negate ? -coeff : coeff;
      } else {
        if (cur().kind != Tok::Ident)
          fail("expected affine term" + found());
        int line = cur().line, column = cur().column;
        std::string name = next().text;
        const Scope *s = lookup(name);
        if (!s)
          throw KernelError("unknown induction variable '" + name + "'",
                            line, column);
        int64_t c = negate ? -coeff : coeff;
        e.terms.emplace_back(s->loopId, c);
        e.constant += c * s->lower;
      }
      if (isPunct("+")) {
        negate = false;
        ++pos;
      } else if (isPunct("-")) {
        negate = true;
        ++pos;
      } else {
        break;
      }
    }
    e.canonicalize();
    return e;
  }

  std::vector<AffineExpr> parseIndex() {
    std::vector<AffineExpr> index;
    if (!isPunct("["))
      fail("expected '['" + found());
    while (isPunct("[")) {
      ++pos;
      index.push_back(parseAffine());
      expectPunct("]");
    }
    return index;
  }

  Operand parseOperand() {
    if (cur().kind == Tok::Ident)
      return Operand::value(next().text);
    std::string text;
    if (isPunct("-")) {
      ++pos;
      text = "-";
    }
    if (cur().kind != Tok::Int && cur().kind != Tok::Number)
      fail("expected operand" + found());
    return Operand::literal(text + next().text);
  }

  std::string freshStmtId() { return "S" + std::to_string(stmtCount++); }

  Stmt parseStmt() {
    Stmt s;
    s.line = cur().line;
    if (isWord("store")) {
      ++pos;
      s.kind = StmtKind::Store;
      s.array = expectIdent();
      s.index = parseIndex();
      expectPunct(",");
      s.operands.push_back(parseOperand());
      expectPunct(";");
      s.id = freshStmtId();
      return s;
    }
    s.result = expectIdent();
    expectPunct("=");
    if (isWord("load")) {
      ++pos;
      s.kind = StmtKind::Load;
      s.array = expectIdent();
      s.index = parseIndex();
    } else if (isWord("const")) {
      ++pos;
      s.kind = StmtKind::Const;
      std::string text;
      if (isPunct("-")) {
        ++pos;
        text = "-";
      }
      if (cur().kind != Tok::Int && cur().kind != Tok::Number)
        fail("expected numeric literal" + found());
      s.literal = text + next().text;
    } else {
      s.kind = StmtKind::Compute;
      s.opcode = expectIdent();
      expectPunct("(");
      s.operands.push_back(parseOperand());
      while (isPunct(",")) {
        ++pos;
        s.operands.push_back(parseOperand());
      }
      expectPunct(")");
    }
    expectPunct(";");
    s.id = freshStmtId();
    return s;
  }

  std::vector<Token> toks;
  size_t pos = 0;
  std::vector<Scope> scopes;
  std::map<std::string, int> loopNameUses;
  int stmtCount = 0;
};

} // namespace

Kernel parseKernelUnchecked(const std::string &text) {
  return Parser(Lexer(text).run()).run();
}

Kernel parseKernel(const std::string &text) {
  Kernel k = parseKernelUnchecked(text);
  std::vector<Diagnostic> diags = validateKernel(k);
  if (!diags.empty())
    throw KernelError(std::move(diags));
  return k;
}

} // namespace pipeflow
