#include "splinter/program.hpp"

#include <cassert>
#include <cctype>
#include <cstring>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>

#include "splinter/sltext.hpp"

namespace splinter {

namespace {

// --- lexer -------------------------------------------------------------------

struct Tok {
  enum Kind { Ident, Number, Punct, End } kind;
  std::string text;
  int line, col;
};

struct Lex {
  std::string src;
  size_t pos = 0;
  int line = 1, col = 1;
  Tok cur;

  explicit Lex(std::string s) : src(std::move(s)) { next(); }

  [[noreturn]] void fail(const std::string& m) const {
    throw ParseError(m, cur.line, cur.col);
  }

  void next() {
    for (;;) {
      while (pos < src.size() && isspace(static_cast<unsigned char>(src[pos]))) {
        if (src[pos] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
        ++pos;
      }
      if (pos + 1 < src.size() && src[pos] == '/' && src[pos + 1] == '/') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    cur.line = line;
    cur.col = col;
    if (pos >= src.size()) {
      cur.kind = Tok::End;
      cur.text.clear();
      return;
    }
    auto take = [&](size_t n) {
      cur.text = src.substr(pos, n);
      pos += n;
      col += static_cast<int>(n);
    };
    char c = src[pos];
    if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = pos;
      while (j < src.size() && (isalnum(static_cast<unsigned char>(src[j])) ||
                                src[j] == '_' || src[j] == '$' || src[j] == '\''))
        ++j;
      cur.kind = Tok::Ident;
      take(j - pos);
      return;
    }
    if (isdigit(static_cast<unsigned char>(c))) {
      size_t j = pos;
      while (j < src.size() && isdigit(static_cast<unsigned char>(src[j]))) ++j;
      cur.kind = Tok::Number;
      take(j - pos);
      return;
    }
    static const char* puncts[] = {"->", "==", "!=", "<=", ">=", "&&", "||",
                                   "(",  ")",  "{",  "}",  "[",  "]",  ",",
                                   ";",  ":",  "!",  "*",  "+",  "-",  "<",
                                   ">",  "=",  "/"};
    cur.kind = Tok::Punct;
    for (const char* p : puncts) {
      size_t n = strlen(p);
      if (src.compare(pos, n, p) == 0) {
        take(n);
        return;
      }
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

  bool at(const std::string& t) const {
    return cur.kind == Tok::Punct && cur.text == t;
  }
  bool atIdent(const std::string& t) const {
    return cur.kind == Tok::Ident && cur.text == t;
  }
  bool accept(const std::string& t) {
    if (at(t)) {
      next();
      return true;
    }
    return false;
  }
  void expect(const std::string& t) {
    if (!accept(t)) fail("expected '" + t + "', found '" + cur.text + "'");
  }
  std::string ident() {
    if (cur.kind != Tok::Ident) fail("expected identifier");
    std::string s = cur.text;
    next();
    return s;
  }
  long num() {
    if (cur.kind != Tok::Number) fail("expected number");
    long v = std::stol(cur.text);
    next();
    return v;
  }
};

// --- AST ----------------------------------------------------------------------

struct Deref {
  std::string obj;
  bool dataField;
  int index;
  bool operator<(const Deref& o) const {
    return std::tie(obj, dataField, index) < std::tie(o.obj, o.dataField, o.index);
  }
};

struct Expr {  // linear data expression with data-field dereferences
  enum Kind { Num, Var, Frag, Add, Sub, Mul } kind;
  Rat num;
  std::string var;
  Deref deref;
  std::unique_ptr<Expr> a, b;

  static std::unique_ptr<Expr> mk(Kind k) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    return e;
  }
};

struct HeapRef {  // heap-typed rvalue: null, variable, or heap-field deref
  bool isDeref = false;
  HeapTerm term;
  Deref deref;
};

struct Cond {
  enum Kind { HeapCmp, DataCmp, And, Or, Not, TrueC, FalseC } kind;
  // HeapCmp
  HeapRef hl, hr;
  bool neq = false;
  // DataCmp
  std::unique_ptr<Expr> dl, dr;
  std::string op;
  std::vector<std::unique_ptr<Cond>> kids;
};

struct Stmt;
using StmtList = std::vector<std::unique_ptr<Stmt>>;

struct Stmt {
  enum Kind {
    While,
    If,
    Assert,
    Assume,
    Free,
    AssignVar,   // lhs var = rhs
    AssignField  // obj->field = rhs
  } kind;
  std::string label;
  std::unique_ptr<Cond> cond;
  StmtList body, orelse;
  std::string lhs;
  Deref lhsField;
  // rhs alternatives
  enum RKind { RNone, RNew, RNondet, RExpr, RHeap } rkind = RNone;
  int rn = 1, rm = 1;
  std::unique_ptr<Expr> rexpr;
  HeapRef rheap;
};

struct Ast {
  int ndata = 1, nsucc = 1;
  bool shapeDeclared = false;
  std::map<std::string, VarKind> decls;
  StmtList stmts;
};

// --- parser -------------------------------------------------------------------

struct SrcParser {
  Lex lx;
  Ast ast;
  ParseOptions opt;

  SrcParser(const std::string& s, const ParseOptions& o) : lx(s), opt(o) {}

  VarKind kindOf(const std::string& v) {
    auto it = ast.decls.find(v);
    if (it == ast.decls.end()) lx.fail("undeclared variable '" + v + "'");
    return it->second;
  }

  Deref parseFieldSuffix(const std::string& obj) {
    // after '->': N, D, N0, D3, ...
    std::string f = lx.ident();
    if (f.empty() || (f[0] != 'N' && f[0] != 'D'))
      lx.fail("field must start with N or D");
    Deref d;
    d.obj = obj;
    d.dataField = f[0] == 'D';
    d.index = f.size() > 1 ? std::stoi(f.substr(1)) : 0;
    int limit = d.dataField ? ast.ndata : ast.nsucc;
    if (d.index < 0 || d.index >= limit)
      throw ShapeError("field " + f + " outside record shape");
    if (kindOf(obj) != VarKind::Heap) lx.fail("'" + obj + "' is not a heap variable");
    return d;
  }

  std::unique_ptr<Expr> exprFactor() {
    if (lx.accept("-")) {
      auto e = Expr::mk(Expr::Mul);
      e->num = -1;
      e->a = exprFactor();
      // normalize: Mul with num in 'num', operand in a
      e->kind = Expr::Mul;
      return e;
    }
    if (lx.accept("(")) {
      auto e = exprAdd();
      lx.expect(")");
      return e;
    }
    if (lx.cur.kind == Tok::Number) {
      auto e = Expr::mk(Expr::Num);
      e->num = ratOf(lx.num());
      if (lx.at("/")) {
        lx.next();
        e->num /= ratOf(lx.num());
      }
      return e;
    }
    std::string id = lx.ident();
    if (lx.accept("->")) {
      auto e = Expr::mk(Expr::Frag);
      e->deref = parseFieldSuffix(id);
      if (!e->deref.dataField) lx.fail("heap field in data expression");
      return e;
    }
    if (kindOf(id) != VarKind::Data) lx.fail("'" + id + "' is not a data variable");
    auto e = Expr::mk(Expr::Var);
    e->var = id;
    return e;
  }

  std::unique_ptr<Expr> exprMul() {
    auto e = exprFactor();
    while (lx.at("*")) {
      lx.next();
      auto f = exprFactor();
      auto m = Expr::mk(Expr::Mul);
      if (e->kind == Expr::Num) {
        m->num = e->num;
        m->a = std::move(f);
      } else if (f->kind == Expr::Num) {
        m->num = f->num;
        m->a = std::move(e);
      } else {
        lx.fail("nonlinear product");
      }
      e = std::move(m);
    }
    return e;
  }

  std::unique_ptr<Expr> exprAdd() {
    auto e = exprMul();
    while (lx.at("+") || lx.at("-")) {
      bool plus = lx.at("+");
      lx.next();
      auto f = exprMul();
      auto n = Expr::mk(plus ? Expr::Add : Expr::Sub);
      n->a = std::move(e);
      n->b = std::move(f);
      e = std::move(n);
    }
    return e;
  }

  bool startsHeapRef() {
    if (lx.atIdent("null")) return true;
    if (lx.cur.kind != Tok::Ident) return false;
    auto it = ast.decls.find(lx.cur.text);
    return it != ast.decls.end() && it->second == VarKind::Heap;
  }

  HeapRef heapRef() {
    HeapRef r;
    if (lx.atIdent("null")) {
      lx.next();
      r.term = HeapTerm::null();
      return r;
    }
    std::string id = lx.ident();
    if (kindOf(id) != VarKind::Heap) lx.fail("'" + id + "' is not a heap variable");
    if (lx.accept("->")) {
      r.isDeref = true;
      r.deref = parseFieldSuffix(id);
      if (r.deref.dataField) lx.fail("data field in heap position");
      return r;
    }
    r.term = HeapTerm::var(id);
    return r;
  }

  std::unique_ptr<Cond> condPrimary() {
    if (lx.accept("!")) {
      auto c = std::make_unique<Cond>();
      c->kind = Cond::Not;
      c->kids.push_back(condPrimary());
      return c;
    }
    if (lx.accept("(")) {
      auto c = condOr();
      lx.expect(")");
      return c;
    }
    if (lx.atIdent("true")) {
      lx.next();
      auto c = std::make_unique<Cond>();
      c->kind = Cond::TrueC;
      return c;
    }
    if (lx.atIdent("false")) {
      lx.next();
      auto c = std::make_unique<Cond>();
      c->kind = Cond::FalseC;
      return c;
    }
    // heap comparison if both sides parse as heap refs; otherwise rewind
    if (startsHeapRef()) {
      auto m = std::tuple{lx.pos, lx.cur, lx.line, lx.col};
      try {
        HeapRef l = heapRef();
        if (lx.at("==") || lx.at("!=")) {
          bool neq = lx.at("!=");
          lx.next();
          HeapRef r = heapRef();
          auto c = std::make_unique<Cond>();
          c->kind = Cond::HeapCmp;
          c->hl = std::move(l);
          c->hr = std::move(r);
          c->neq = neq;
          return c;
        }
      } catch (const ParseError&) {
        // fall through to a data comparison
      }
      std::tie(lx.pos, lx.cur, lx.line, lx.col) = m;
    }
    auto c = std::make_unique<Cond>();
    c->kind = Cond::DataCmp;
    c->dl = exprAdd();
    for (const char* op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (lx.at(op)) {
        c->op = op;
        lx.next();
        break;
      }
    }
    if (c->op.empty()) lx.fail("expected comparison");
    c->dr = exprAdd();
    return c;
  }

  std::unique_ptr<Cond> condAnd() {
    auto c = condPrimary();
    while (lx.accept("&&")) {
      auto n = std::make_unique<Cond>();
      n->kind = Cond::And;
      n->kids.push_back(std::move(c));
      n->kids.push_back(condPrimary());
      c = std::move(n);
    }
    return c;
  }

  std::unique_ptr<Cond> condOr() {
    auto c = condAnd();
    while (lx.accept("||")) {
      auto n = std::make_unique<Cond>();
      n->kind = Cond::Or;
      n->kids.push_back(std::move(c));
      n->kids.push_back(condAnd());
      c = std::move(n);
    }
    return c;
  }

  void block(StmtList& out) {
    if (lx.accept("{")) {
      while (!lx.accept("}")) out.push_back(stmt());
    } else {
      out.push_back(stmt());
    }
  }

  std::unique_ptr<Stmt> stmt() {
    std::string label;
    // optional numeric or ident label "L:"
    if ((lx.cur.kind == Tok::Number || lx.cur.kind == Tok::Ident)) {
      auto save = std::tuple{lx.pos, lx.cur, lx.line, lx.col};
      std::string t = lx.cur.text;
      bool couldLabel =
          lx.cur.kind == Tok::Number ||
          (!ast.decls.count(t) && !lx.atIdent("while") && !lx.atIdent("if") &&
           !lx.atIdent("assert") && !lx.atIdent("assume") && !lx.atIdent("free") &&
           !lx.atIdent("else"));
      if (couldLabel) {
        lx.next();
        if (lx.at(":")) {
          lx.next();
          label = t;
        } else {
          std::tie(lx.pos, lx.cur, lx.line, lx.col) = save;
        }
      }
    }
    auto s = std::make_unique<Stmt>();
    s->label = label;
    if (lx.atIdent("while")) {
      lx.next();
      lx.expect("(");
      s->kind = Stmt::While;
      s->cond = condOr();
      lx.expect(")");
      block(s->body);
      return s;
    }
    if (lx.atIdent("if")) {
      lx.next();
      lx.expect("(");
      s->kind = Stmt::If;
      s->cond = condOr();
      lx.expect(")");
      block(s->body);
      if (lx.atIdent("else")) {
        lx.next();
        block(s->orelse);
      }
      return s;
    }
    if (lx.atIdent("assert") || lx.atIdent("assume")) {
      s->kind = lx.atIdent("assert") ? Stmt::Assert : Stmt::Assume;
      lx.next();
      lx.expect("(");
      s->cond = condOr();
      lx.expect(")");
      lx.expect(";");
      return s;
    }
    if (lx.atIdent("free")) {
      lx.next();
      lx.expect("(");
      s->kind = Stmt::Free;
      s->lhs = lx.ident();
      if (kindOf(s->lhs) != VarKind::Heap) lx.fail("free needs a heap variable");
      lx.expect(")");
      lx.expect(";");
      return s;
    }
    // assignment
    std::string id = lx.ident();
    if (lx.accept("->")) {
      s->kind = Stmt::AssignField;
      s->lhsField = parseFieldSuffix(id);
      lx.expect("=");
      if (s->lhsField.dataField) {
        s->rkind = Stmt::RExpr;
        s->rexpr = exprAdd();
      } else {
        s->rkind = Stmt::RHeap;
        s->rheap = heapRef();
        if (s->rheap.isDeref) lx.fail("chained dereference; use a temporary");
      }
      lx.expect(";");
      return s;
    }
    s->kind = Stmt::AssignVar;
    s->lhs = id;
    VarKind k = kindOf(id);
    lx.expect("=");
    if (lx.atIdent("new")) {
      lx.next();
      lx.expect("(");
      s->rkind = Stmt::RNew;
      s->rn = static_cast<int>(lx.num());
      lx.expect(",");
      s->rm = static_cast<int>(lx.num());
      lx.expect(")");
      if (k != VarKind::Heap) lx.fail("new assigned to non-heap variable");
      if (!opt.allowMultiShape && (s->rn != ast.ndata || s->rm != ast.nsucc))
        throw ShapeError("new(" + std::to_string(s->rn) + "," +
                         std::to_string(s->rm) + ") differs from shape(" +
                         std::to_string(ast.ndata) + "," +
                         std::to_string(ast.nsucc) + ")");
    } else if (lx.atIdent("nondet")) {
      lx.next();
      lx.expect("(");
      lx.expect(")");
      s->rkind = Stmt::RNondet;
      if (k != VarKind::Data) lx.fail("nondet assigned to non-data variable");
    } else if (k == VarKind::Heap) {
      s->rkind = Stmt::RHeap;
      s->rheap = heapRef();
    } else {
      s->rkind = Stmt::RExpr;
      s->rexpr = exprAdd();
    }
    lx.expect(";");
    return s;
  }

  void parse() {
    // header: shape + declarations, interleaved until first statement
    for (;;) {
      if (lx.atIdent("shape")) {
        lx.next();
        lx.expect("(");
        ast.ndata = static_cast<int>(lx.num());
        lx.expect(",");
        ast.nsucc = static_cast<int>(lx.num());
        lx.expect(")");
        lx.expect(";");
        ast.shapeDeclared = true;
        continue;
      }
      if (lx.atIdent("heap") || lx.atIdent("int")) {
        VarKind k = lx.atIdent("heap") ? VarKind::Heap : VarKind::Data;
        lx.next();
        ast.decls[lx.ident()] = k;
        while (lx.accept(",")) ast.decls[lx.ident()] = k;
        lx.expect(";");
        continue;
      }
      break;
    }
    while (lx.cur.kind != Tok::End) ast.stmts.push_back(stmt());
  }
};

// --- lowering -------------------------------------------------------------------

struct Branch {
  std::vector<std::tuple<HeapTerm, HeapTerm, bool>> heapAtoms;  // (l, r, neq)
  DataFormula data;
};

struct Lowerer {
  Program p;
  const Ast& ast;
  int freshCounter = 0;

  explicit Lowerer(const Ast& a) : ast(a) {
    p.ndata = a.ndata;
    p.nsucc = a.nsucc;
    p.decls = a.decls;
    p.entry = newNode();
    p.error = newNode();
  }

  int newNode() { return p.nodeCount++; }

  std::string freshData(const std::string& base) {
    std::string n;
    do {
      n = base + "$" + std::to_string(freshCounter++);
    } while (p.decls.count(n));
    p.decls[n] = VarKind::Data;
    return n;
  }

  void edge(int from, int to, Command c) { p.edges.push_back({from, to, std::move(c)}); }

  // Rewrite an Expr into a DataTerm, materializing data-field loads.
  DataTerm lowerExpr(const Expr& e, std::map<Deref, std::string>& loads) {
    switch (e.kind) {
      case Expr::Num:
        return DataTerm(e.num);
      case Expr::Var:
        return DataTerm::var(e.var);
      case Expr::Frag: {
        auto it = loads.find(e.deref);
        if (it == loads.end())
          it = loads.emplace(e.deref, freshData(e.deref.obj + "_D" +
                                                std::to_string(e.deref.index)))
                   .first;
        return DataTerm::var(it->second);
      }
      case Expr::Add:
        return lowerExpr(*e.a, loads) + lowerExpr(*e.b, loads);
      case Expr::Sub:
        return lowerExpr(*e.a, loads) - lowerExpr(*e.b, loads);
      case Expr::Mul:
        return lowerExpr(*e.a, loads) * e.num;
    }
    return DataTerm();
  }

  DataFormula dataCmp(const DataTerm& l, const std::string& op, const DataTerm& r) {
    if (op == "==") return atomEq(l, r);
    if (op == "!=") return atomNeq(l, r);
    if (op == "<=") return atomLe(l, r);
    if (op == "<") return atomLt(l, r);
    if (op == ">=") return atomGe(l, r);
    return atomGt(l, r);
  }
  static std::string flipOp(const std::string& op) {
    if (op == "==") return "!=";
    if (op == "!=") return "==";
    if (op == "<=") return ">";
    if (op == "<") return ">=";
    if (op == ">=") return "<";
    return "<=";
  }

  HeapTerm lowerHeapRef(const HeapRef& r, int& cur) {
    if (!r.isDeref) return r.term;
    // y->Ni in a condition: load into a fresh heap variable
    std::string n;
    do {
      n = r.deref.obj + "_N" + std::to_string(r.deref.index) + "$" +
          std::to_string(freshCounter++);
    } while (p.decls.count(n));
    p.decls[n] = VarKind::Heap;
    int nxt = newNode();
    edge(cur, nxt, CmdHeapLoad{n, r.deref.obj, r.deref.index});
    cur = nxt;
    return HeapTerm::var(n);
  }

  // Flatten a condition into assume branches, with loads emitted at `cur`.
  // Returns the branch list for the requested polarity; loads for both
  // polarities are shared (emitted once by the caller via prepareCond).
  std::vector<Branch> branches(const Cond& c,
                               std::map<Deref, std::string>& loads,
                               std::map<const Cond*, HeapTerm>& heapL,
                               std::map<const Cond*, HeapTerm>& heapR,
                               bool positive) {
    switch (c.kind) {
      case Cond::TrueC:
      case Cond::FalseC: {
        bool val = (c.kind == Cond::TrueC) == positive;
        Branch b;
        b.data = val ? DataFormula::top() : DataFormula::bottom();
        return {b};
      }
      case Cond::HeapCmp: {
        Branch b;
        b.data = DataFormula::top();
        bool neq = positive ? c.neq : !c.neq;
        b.heapAtoms.push_back({heapL.at(&c), heapR.at(&c), neq});
        return {b};
      }
      case Cond::DataCmp: {
        Branch b;
        DataTerm l = lowerExpr(*c.dl, loads), r = lowerExpr(*c.dr, loads);
        b.data = dataCmp(l, positive ? c.op : flipOp(c.op), r);
        return {b};
      }
      case Cond::Not:
        return branches(*c.kids[0], loads, heapL, heapR, !positive);
      case Cond::And:
      case Cond::Or: {
        bool conj = (c.kind == Cond::And) == positive;
        auto bl = branches(*c.kids[0], loads, heapL, heapR, positive);
        auto br = branches(*c.kids[1], loads, heapL, heapR, positive);
        std::vector<Branch> out;
        if (conj) {
          for (const auto& x : bl)
            for (const auto& y : br) {
              Branch b;
              b.heapAtoms = x.heapAtoms;
              b.heapAtoms.insert(b.heapAtoms.end(), y.heapAtoms.begin(),
                                 y.heapAtoms.end());
              b.data = DataFormula::conj({x.data, y.data});
              out.push_back(std::move(b));
            }
        } else {
          out = bl;
          out.insert(out.end(), br.begin(), br.end());
        }
        return out;
      }
    }
    return {};
  }

  // Emit the loads a condition needs (shared by both polarities); returns the
  // node after the loads.
  int prepareCond(const Cond& c, int cur, std::map<Deref, std::string>& loads,
                  std::map<const Cond*, HeapTerm>& heapL,
                  std::map<const Cond*, HeapTerm>& heapR) {
    if (c.kind == Cond::HeapCmp) {
      heapL[&c] = lowerHeapRef(c.hl, cur);
      heapR[&c] = lowerHeapRef(c.hr, cur);
      return cur;
    }
    if (c.kind == Cond::DataCmp) {
      // collect data derefs into loads (emitted below)
      std::function<void(const Expr&)> walk = [&](const Expr& e) {
        if (e.kind == Expr::Frag && !loads.count(e.deref))
          loads.emplace(e.deref, freshData(e.deref.obj + "_D" +
                                           std::to_string(e.deref.index)));
        if (e.a) walk(*e.a);
        if (e.b) walk(*e.b);
      };
      walk(*c.dl);
      walk(*c.dr);
      return cur;
    }
    for (const auto& k : c.kids) cur = prepareCond(*k, cur, loads, heapL, heapR);
    return cur;
  }

  int emitLoads(int cur, const std::map<Deref, std::string>& loads) {
    for (const auto& [d, var] : loads) {
      int nxt = newNode();
      edge(cur, nxt, CmdDataLoad{var, d.obj, d.index});
      cur = nxt;
    }
    return cur;
  }

  Command assumeOf(const Branch& b) {
    CmdAssume a;
    for (const auto& [l, r, neq] : b.heapAtoms) {
      if (neq)
        a.cond.addNeq(l, r);
      else
        a.cond.addEq(l, r);
    }
    a.cond.data = b.data;
    return a;
  }

  // lower a statement list starting at node cur; returns exit node
  int lower(const StmtList& stmts, int cur) {
    for (const auto& s : stmts) cur = lowerStmt(*s, cur);
    return cur;
  }

  int lowerStmt(const Stmt& s, int cur) {
    if (!s.label.empty()) p.labels[s.label] = cur;
    switch (s.kind) {
      case Stmt::While: {
        // cur is the loop head; condition loads re-emitted per iteration
        int head = cur;
        std::map<Deref, std::string> loads;
        std::map<const Cond*, HeapTerm> hl, hr;
        int afterLoads = prepareCond(*s.cond, head, loads, hl, hr);
        afterLoads = emitLoads(afterLoads, loads);
        int bodyStart = newNode(), exit = newNode();
        for (const auto& b : branches(*s.cond, loads, hl, hr, true))
          edge(afterLoads, bodyStart, assumeOf(b));
        for (const auto& b : branches(*s.cond, loads, hl, hr, false))
          edge(afterLoads, exit, assumeOf(b));
        int bodyEnd = lower(s.body, bodyStart);
        // back edge: skip to the head
        edge(bodyEnd, head, CmdAssume{});
        return exit;
      }
      case Stmt::If: {
        std::map<Deref, std::string> loads;
        std::map<const Cond*, HeapTerm> hl, hr;
        int afterLoads = prepareCond(*s.cond, cur, loads, hl, hr);
        afterLoads = emitLoads(afterLoads, loads);
        int thenStart = newNode(), elseStart = newNode(), join = newNode();
        for (const auto& b : branches(*s.cond, loads, hl, hr, true))
          edge(afterLoads, thenStart, assumeOf(b));
        for (const auto& b : branches(*s.cond, loads, hl, hr, false))
          edge(afterLoads, elseStart, assumeOf(b));
        int thenEnd = lower(s.body, thenStart);
        int elseEnd = lower(s.orelse, elseStart);
        edge(thenEnd, join, CmdAssume{});
        edge(elseEnd, join, CmdAssume{});
        return join;
      }
      case Stmt::Assert:
      case Stmt::Assume: {
        std::map<Deref, std::string> loads;
        std::map<const Cond*, HeapTerm> hl, hr;
        int afterLoads = prepareCond(*s.cond, cur, loads, hl, hr);
        afterLoads = emitLoads(afterLoads, loads);
        int next = newNode();
        if (s.kind == Stmt::Assert) {
          for (const auto& b : branches(*s.cond, loads, hl, hr, false))
            edge(afterLoads, p.error, assumeOf(b));
          for (const auto& b : branches(*s.cond, loads, hl, hr, true))
            edge(afterLoads, next, assumeOf(b));
        } else {
          for (const auto& b : branches(*s.cond, loads, hl, hr, true))
            edge(afterLoads, next, assumeOf(b));
        }
        return next;
      }
      case Stmt::Free: {
        int next = newNode();
        edge(cur, next, CmdFree{s.lhs});
        return next;
      }
      case Stmt::AssignField: {
        int next = newNode();
        if (s.lhsField.dataField) {
          std::map<Deref, std::string> loads;
          DataTerm t = lowerExpr(*s.rexpr, loads);
          int c2 = emitLoads(cur, loads);
          edge(c2, next, CmdDataStore{s.lhsField.obj, s.lhsField.index, t});
        } else {
          edge(cur, next, CmdHeapStore{s.lhsField.obj, s.lhsField.index,
                                       s.rheap.term});
        }
        return next;
      }
      case Stmt::AssignVar: {
        int next = newNode();
        switch (s.rkind) {
          case Stmt::RNew:
            edge(cur, next, CmdAlloc{s.lhs, s.rn, s.rm});
            break;
          case Stmt::RNondet:
            edge(cur, next, CmdHavoc{s.lhs});
            break;
          case Stmt::RHeap:
            if (s.rheap.isDeref) {
              edge(cur, next,
                   CmdHeapLoad{s.lhs, s.rheap.deref.obj, s.rheap.deref.index});
            } else {
              edge(cur, next, CmdAssignHeap{s.lhs, s.rheap.term});
            }
            break;
          case Stmt::RExpr: {
            std::map<Deref, std::string> loads;
            DataTerm t = lowerExpr(*s.rexpr, loads);
            if (loads.size() == 1 && t.asVar() &&
                *t.asVar() == loads.begin()->second) {
              // plain d = x->Di
              edge(cur, next,
                   CmdDataLoad{s.lhs, loads.begin()->first.obj,
                               loads.begin()->first.index});
            } else {
              int c2 = emitLoads(cur, loads);
              edge(c2, next, CmdAssignData{s.lhs, t});
            }
            break;
          }
          default:
            break;
        }
        return next;
      }
    }
    return cur;
  }
};

void pruneProgram(Program& p) {
  size_t n = static_cast<size_t>(p.nodeCount);
  std::vector<char> fromEntry(n, 0), toError(n, 0);
  // forward reachability
  std::vector<int> stack = {p.entry};
  fromEntry[p.entry] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const auto& e : p.edges)
      if (e.from == v && !fromEntry[e.to]) {
        fromEntry[e.to] = 1;
        stack.push_back(e.to);
      }
  }
  // backward from error
  stack = {p.error};
  toError[p.error] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const auto& e : p.edges)
      if (e.to == v && !toError[e.from]) {
        toError[e.from] = 1;
        stack.push_back(e.from);
      }
  }
  std::vector<Edge> kept;
  size_t dropped = 0;
  for (const auto& e : p.edges) {
    bool keep = fromEntry[e.from] && fromEntry[e.to] && toError[e.from] &&
                toError[e.to];
    if (keep)
      kept.push_back(e);
    else
      ++dropped;
  }
  if (dropped)
    p.warnings.push_back("pruned " + std::to_string(dropped) +
                         " edge(s) not on any entry-to-error path");
  p.edges = std::move(kept);
}

// --- flat (cfg) form ---------------------------------------------------------

std::string showDataTermSrc(const DataTerm& t) { return t.show(); }

}  // namespace

std::string showCommand(const Command& c) {
  std::ostringstream os;
  if (const auto* a = std::get_if<CmdAssignHeap>(&c)) {
    os << a->lhs << " = " << a->rhs.show();
  } else if (const auto* a = std::get_if<CmdAssignData>(&c)) {
    os << a->lhs << " = " << showDataTermSrc(a->rhs);
  } else if (const auto* a = std::get_if<CmdHavoc>(&c)) {
    os << a->lhs << " = nondet()";
  } else if (const auto* a = std::get_if<CmdHeapStore>(&c)) {
    os << a->obj << "->N" << a->field << " = " << a->value.show();
  } else if (const auto* a = std::get_if<CmdHeapLoad>(&c)) {
    os << a->lhs << " = " << a->obj << "->N" << a->field;
  } else if (const auto* a = std::get_if<CmdDataStore>(&c)) {
    os << a->obj << "->D" << a->field << " = " << showDataTermSrc(a->value);
  } else if (const auto* a = std::get_if<CmdDataLoad>(&c)) {
    os << a->lhs << " = " << a->obj << "->D" << a->field;
  } else if (const auto* a = std::get_if<CmdAlloc>(&c)) {
    os << a->lhs << " = new(" << a->ndata << "," << a->nsucc << ")";
  } else if (const auto* a = std::get_if<CmdFree>(&c)) {
    os << "free(" << a->obj << ")";
  } else if (const auto* a = std::get_if<CmdAssume>(&c)) {
    os << "assume(" << a->cond.show() << ")";
  }
  return os.str();
}

std::string printProgram(const Program& p) {
  std::ostringstream os;
  os << "cfg;\n";
  os << "shape(" << p.ndata << "," << p.nsucc << ");\n";
  std::vector<std::string> hv, dv;
  for (const auto& [v, k] : p.decls)
    (k == VarKind::Heap ? hv : dv).push_back(v);
  auto decl = [&](const char* kw, const std::vector<std::string>& vs) {
    if (vs.empty()) return;
    os << kw << " ";
    for (size_t i = 0; i < vs.size(); ++i) os << (i ? ", " : "") << vs[i];
    os << ";\n";
  };
  decl("heap", hv);
  decl("int", dv);
  os << "entry " << p.entry << "; error " << p.error << "; nodes "
     << p.nodeCount << ";\n";
  for (const auto& [l, v] : p.labels) os << "label " << l << " = " << v << ";\n";
  for (const auto& e : p.edges)
    os << e.from << " -> " << e.to << " : " << showCommand(e.cmd) << ";\n";
  return os.str();
}

namespace {

// parser for the flat form; command syntax matches showCommand
struct CfgParser {
  Lex lx;
  Program p;

  explicit CfgParser(const std::string& s) : lx(s) {}

  VarKind kindOf(const std::string& v) {
    auto it = p.decls.find(v);
    if (it == p.decls.end()) lx.fail("undeclared variable '" + v + "'");
    return it->second;
  }

  DataTerm term() {
    DataTerm t;
    bool neg = false;
    for (;;) {
      Rat coef = 1;
      if (lx.accept("-")) {
        coef = -1;
      }
      if (lx.cur.kind == Tok::Number) {
        Rat n = ratOf(lx.num());
        if (lx.at("/")) {
          lx.next();
          n /= ratOf(lx.num());
        }
        Rat factor = coef * n;
        if (neg) factor = -factor;
        if (lx.accept("*")) {
          std::string v = lx.ident();
          t += DataTerm::var(v) * factor;
        } else {
          t += DataTerm(factor);
        }
      } else {
        std::string v = lx.ident();
        t += DataTerm::var(v) * (neg ? -coef : coef);
      }
      if (lx.accept("+")) {
        neg = false;
        continue;
      }
      if (lx.accept("-")) {
        // subtraction handled by negating the next addend
        neg = true;
        // push back the '-' effect via loop
        // (we already consumed it)
        continue;
      }
      break;
    }
    return t;
  }

  Command command() {
    if (lx.atIdent("assume")) {
      lx.next();
      lx.expect("(");
      // reuse the formula pure syntax via a mini parse: read until matching ')'
      int depth = 1;
      std::string inner;
      while (depth > 0) {
        if (lx.cur.kind == Tok::End) lx.fail("unterminated assume");
        if (lx.at("(")) ++depth;
        if (lx.at(")")) {
          --depth;
          if (depth == 0) {
            lx.next();
            break;
          }
        }
        inner += lx.cur.text;
        inner += " ";
        lx.next();
      }
      CmdAssume a;
      // parse with the formula parser: "<inner> : emp"
      SepFormula f = parseFormula(inner.empty() ? "true : emp" : inner + " : emp");
      a.cond = f.pure;
      return a;
    }
    if (lx.atIdent("free")) {
      lx.next();
      lx.expect("(");
      std::string v = lx.ident();
      lx.expect(")");
      return CmdFree{v};
    }
    std::string id = lx.ident();
    if (lx.accept("->")) {
      std::string f = lx.ident();
      bool dataField = f[0] == 'D';
      int idx = f.size() > 1 ? std::stoi(f.substr(1)) : 0;
      lx.expect("=");
      if (dataField) return CmdDataStore{id, idx, term()};
      if (lx.atIdent("null")) {
        lx.next();
        return CmdHeapStore{id, idx, HeapTerm::null()};
      }
      return CmdHeapStore{id, idx, HeapTerm::var(lx.ident())};
    }
    lx.expect("=");
    if (lx.atIdent("new")) {
      lx.next();
      lx.expect("(");
      int n = static_cast<int>(lx.num());
      lx.expect(",");
      int m = static_cast<int>(lx.num());
      lx.expect(")");
      return CmdAlloc{id, n, m};
    }
    if (lx.atIdent("nondet")) {
      lx.next();
      lx.expect("(");
      lx.expect(")");
      return CmdHavoc{id};
    }
    if (lx.atIdent("null")) {
      lx.next();
      return CmdAssignHeap{id, HeapTerm::null()};
    }
    if (kindOf(id) == VarKind::Heap) {
      std::string rhs = lx.ident();
      if (lx.accept("->")) {
        std::string f = lx.ident();
        int idx = f.size() > 1 ? std::stoi(f.substr(1)) : 0;
        return CmdHeapLoad{id, rhs, idx};
      }
      return CmdAssignHeap{id, HeapTerm::var(rhs)};
    }
    // data: either x->Di load or a term
    if (lx.cur.kind == Tok::Ident && p.decls.count(lx.cur.text) &&
        p.decls[lx.cur.text] == VarKind::Heap) {
      std::string obj = lx.ident();
      lx.expect("->");
      std::string f = lx.ident();
      int idx = f.size() > 1 ? std::stoi(f.substr(1)) : 0;
      return CmdDataLoad{id, obj, idx};
    }
    return CmdAssignData{id, term()};
  }

  Program parse() {
    if (!lx.atIdent("cfg")) lx.fail("expected 'cfg'");
    lx.next();
    lx.expect(";");
    while (lx.cur.kind != Tok::End) {
      if (lx.atIdent("shape")) {
        lx.next();
        lx.expect("(");
        p.ndata = static_cast<int>(lx.num());
        lx.expect(",");
        p.nsucc = static_cast<int>(lx.num());
        lx.expect(")");
        lx.expect(";");
      } else if (lx.atIdent("heap") || lx.atIdent("int")) {
        VarKind k = lx.atIdent("heap") ? VarKind::Heap : VarKind::Data;
        lx.next();
        p.decls[lx.ident()] = k;
        while (lx.accept(",")) p.decls[lx.ident()] = k;
        lx.expect(";");
      } else if (lx.atIdent("entry")) {
        lx.next();
        p.entry = static_cast<int>(lx.num());
        lx.expect(";");
        if (!lx.atIdent("error")) lx.fail("expected 'error'");
        lx.next();
        p.error = static_cast<int>(lx.num());
        lx.expect(";");
        if (!lx.atIdent("nodes")) lx.fail("expected 'nodes'");
        lx.next();
        p.nodeCount = static_cast<int>(lx.num());
        lx.expect(";");
      } else if (lx.atIdent("label")) {
        lx.next();
        std::string name = lx.cur.kind == Tok::Number ? lx.cur.text : lx.cur.text;
        lx.next();
        lx.expect("=");
        p.labels[name] = static_cast<int>(lx.num());
        lx.expect(";");
      } else {
        int from = static_cast<int>(lx.num());
        lx.expect("->");
        int to = static_cast<int>(lx.num());
        lx.expect(":");
        Command c = command();
        lx.expect(";");
        p.edges.push_back({from, to, std::move(c)});
      }
    }
    return p;
  }
};

bool looksLikeCfg(const std::string& text) {
  size_t i = 0;
  while (i < text.size() && (isspace(static_cast<unsigned char>(text[i])) ||
                             (text[i] == '/' && i + 1 < text.size() &&
                              text[i + 1] == '/'))) {
    if (text[i] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else {
      ++i;
    }
  }
  return text.compare(i, 3, "cfg") == 0;
}

// --- reference interpreter for the structured source ----------------------------

struct SState {
  std::map<std::string, Rat> data;
  std::map<std::string, long> heap;  // 0 = null
  std::map<long, std::pair<std::vector<Rat>, std::vector<long>>> cells;
  long nextLoc = 1;
  size_t inputPos = 0;
  const std::vector<Rat>* inputs;
  int fuel;
  std::string status = "ok";

  Rat nextInput() {
    if (inputs && inputPos < inputs->size()) return (*inputs)[inputPos++];
    return 0;
  }
};

struct SourceInterp {
  const Ast& ast;
  SState st;

  explicit SourceInterp(const Ast& a) : ast(a) {
    for (const auto& [v, k] : a.decls) {
      if (k == VarKind::Data)
        st.data[v] = 0;
      else
        st.heap[v] = 0;
    }
  }

  bool dead() const { return st.status != "ok"; }

  std::optional<Rat> evalExpr(const Expr& e) {
    switch (e.kind) {
      case Expr::Num:
        return e.num;
      case Expr::Var:
        return st.data[e.var];
      case Expr::Frag: {
        long loc = st.heap[e.deref.obj];
        auto it = st.cells.find(loc);
        if (loc == 0 || it == st.cells.end()) {
          st.status = "memfault";
          return std::nullopt;
        }
        return it->second.first[e.deref.index];
      }
      case Expr::Add: {
        auto a = evalExpr(*e.a), b = evalExpr(*e.b);
        if (!a || !b) return std::nullopt;
        return *a + *b;
      }
      case Expr::Sub: {
        auto a = evalExpr(*e.a), b = evalExpr(*e.b);
        if (!a || !b) return std::nullopt;
        return *a - *b;
      }
      case Expr::Mul: {
        auto a = evalExpr(*e.a);
        if (!a) return std::nullopt;
        return *a * e.num;
      }
    }
    return std::nullopt;
  }

  std::optional<long> evalHeapRef(const HeapRef& r) {
    if (!r.isDeref) return r.term.isNull() ? 0 : st.heap[r.term.name];
    long loc = st.heap[r.deref.obj];
    auto it = st.cells.find(loc);
    if (loc == 0 || it == st.cells.end()) {
      st.status = "memfault";
      return std::nullopt;
    }
    return it->second.second[r.deref.index];
  }

  std::optional<bool> evalCond(const Cond& c) {
    switch (c.kind) {
      case Cond::TrueC:
        return true;
      case Cond::FalseC:
        return false;
      case Cond::HeapCmp: {
        auto l = evalHeapRef(c.hl), r = evalHeapRef(c.hr);
        if (!l || !r) return std::nullopt;
        return c.neq ? *l != *r : *l == *r;
      }
      case Cond::DataCmp: {
        auto l = evalExpr(*c.dl), r = evalExpr(*c.dr);
        if (!l || !r) return std::nullopt;
        if (c.op == "==") return *l == *r;
        if (c.op == "!=") return *l != *r;
        if (c.op == "<=") return *l <= *r;
        if (c.op == "<") return *l < *r;
        if (c.op == ">=") return *l >= *r;
        return *l > *r;
      }
      case Cond::Not: {
        auto v = evalCond(*c.kids[0]);
        if (!v) return std::nullopt;
        return !*v;
      }
      case Cond::And: {
        auto a = evalCond(*c.kids[0]);
        if (!a) return std::nullopt;
        auto b = evalCond(*c.kids[1]);
        if (!b) return std::nullopt;
        return *a && *b;
      }
      case Cond::Or: {
        auto a = evalCond(*c.kids[0]);
        if (!a) return std::nullopt;
        auto b = evalCond(*c.kids[1]);
        if (!b) return std::nullopt;
        return *a || *b;
      }
    }
    return std::nullopt;
  }

  void run(const StmtList& stmts) {
    for (const auto& s : stmts) {
      if (dead()) return;
      step(*s);
    }
  }

  void step(const Stmt& s) {
    if (--st.fuel <= 0) {
      st.status = "fuel";
      return;
    }
    switch (s.kind) {
      case Stmt::While:
        for (;;) {
          auto c = evalCond(*s.cond);
          if (!c || dead()) return;
          if (!*c) break;
          run(s.body);
          if (dead()) return;
          if (--st.fuel <= 0) {
            st.status = "fuel";
            return;
          }
        }
        break;
      case Stmt::If: {
        auto c = evalCond(*s.cond);
        if (!c || dead()) return;
        run(*c ? s.body : s.orelse);
        break;
      }
      case Stmt::Assert: {
        auto c = evalCond(*s.cond);
        if (!c || dead()) return;
        if (!*c) st.status = "error";
        break;
      }
      case Stmt::Assume: {
        auto c = evalCond(*s.cond);
        if (!c || dead()) return;
        if (!*c) st.status = "assumefail";
        break;
      }
      case Stmt::Free: {
        long loc = st.heap[s.lhs];
        if (loc == 0 || !st.cells.count(loc)) {
          st.status = "memfault";
          return;
        }
        st.cells.erase(loc);
        break;
      }
      case Stmt::AssignField: {
        long loc = st.heap[s.lhsField.obj];
        auto it = st.cells.find(loc);
        if (loc == 0 || it == st.cells.end()) {
          st.status = "memfault";
          return;
        }
        if (s.lhsField.dataField) {
          auto v = evalExpr(*s.rexpr);
          if (!v) return;
          it->second.first[s.lhsField.index] = *v;
        } else {
          auto v = evalHeapRef(s.rheap);
          if (!v) return;
          it->second.second[s.lhsField.index] = *v;
        }
        break;
      }
      case Stmt::AssignVar:
        switch (s.rkind) {
          case Stmt::RNew: {
            long loc = st.nextLoc++;
            st.cells[loc] = {std::vector<Rat>(s.rn, Rat(0)),
                             std::vector<long>(s.rm, 0)};
            st.heap[s.lhs] = loc;
            break;
          }
          case Stmt::RNondet:
            st.data[s.lhs] = st.nextInput();
            break;
          case Stmt::RHeap: {
            auto v = evalHeapRef(s.rheap);
            if (!v) return;
            st.heap[s.lhs] = *v;
            break;
          }
          case Stmt::RExpr: {
            auto v = evalExpr(*s.rexpr);
            if (!v) return;
            st.data[s.lhs] = *v;
            break;
          }
          default:
            break;
        }
        break;
    }
  }
};

}  // namespace

Program parseProgram(const std::string& text, const ParseOptions& opt) {
  if (looksLikeCfg(text)) {
    CfgParser cp(text);
    Program p = cp.parse();
    if (opt.prune) pruneProgram(p);
    return p;
  }
  SrcParser sp(text, opt);
  sp.parse();
  Lowerer lo(sp.ast);
  int last = lo.lower(sp.ast.stmts, lo.p.entry);
  (void)last;
  Program p = std::move(lo.p);
  if (opt.prune) pruneProgram(p);
  return p;
}

SourceRun interpretSource(const std::string& text, const std::vector<Rat>& inputs,
                          int fuel) {
  SrcParser sp(text, {});
  sp.parse();
  SourceInterp si(sp.ast);
  si.st.inputs = &inputs;
  si.st.fuel = fuel;
  si.run(sp.ast.stmts);
  SourceRun out;
  out.status = si.st.status;
  for (const auto& [v, k] : sp.ast.decls)
    if (k == VarKind::Data) out.finalData[v] = si.st.data[v];
  return out;
}

}  // namespace splinter
