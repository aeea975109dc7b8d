#include "splinter/sltext.hpp"

#include <cctype>
#include <cstring>
#include <optional>

namespace splinter {

namespace {

struct Token {
  enum Kind {
    Ident,
    Number,
    Punct,
    End,
  } kind;
  std::string text;
  int line, col;
};

struct Lexer {
  std::string src;
  size_t pos = 0;
  int line = 1, col = 1;
  Token cur;

  explicit Lexer(std::string s) : src(std::move(s)) { advance(); }

  void error(const std::string& msg) const {
    throw ParseError(msg, cur.line, cur.col);
  }

  void advance() {
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
      cur.kind = Token::End;
      cur.text.clear();
      return;
    }
    char c = src[pos];
    auto take = [&](size_t n) {
      cur.text = src.substr(pos, n);
      pos += n;
      col += static_cast<int>(n);
    };
    if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = pos;
      while (j < src.size() && (isalnum(static_cast<unsigned char>(src[j])) ||
                                src[j] == '_' || src[j] == '$' || src[j] == '\'' || src[j] == '#'))
        ++j;
      cur.kind = Token::Ident;
      take(j - pos);
      return;
    }
    if (isdigit(static_cast<unsigned char>(c))) {
      size_t j = pos;
      while (j < src.size() && isdigit(static_cast<unsigned char>(src[j]))) ++j;
      cur.kind = Token::Number;
      take(j - pos);
      return;
    }
    cur.kind = Token::Punct;
    static const char* puncts[] = {"|->", ":=", "==", "!=", "<=", ">=", "&&",
                                   "||",  "(",  ")",  "[",  "]",  ",",  ";",
                                   ".",   ":",  "|",  "*",  "+",  "-",  "<",
                                   ">",   "/",  "="};
    for (const char* p : puncts) {
      size_t n = strlen(p);
      if (src.compare(pos, n, p) == 0) {
        take(n);
        return;
      }
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

  struct Mark {
    size_t pos;
    Token cur;
    int line, col;
  };
  Mark mark() const { return {pos, cur, line, col}; }
  void rewind(const Mark& m) {
    pos = m.pos;
    cur = m.cur;
    line = m.line;
    col = m.col;
  }

  bool at(const std::string& t) const {
    return cur.kind == Token::Punct && cur.text == t;
  }
  bool atIdent(const std::string& t) const {
    return cur.kind == Token::Ident && cur.text == t;
  }
  bool accept(const std::string& t) {
    if (at(t)) {
      advance();
      return true;
    }
    return false;
  }
  void expect(const std::string& t) {
    if (!accept(t)) error("expected '" + t + "', found '" + cur.text + "'");
  }
  std::string ident() {
    if (cur.kind != Token::Ident) error("expected identifier");
    std::string s = cur.text;
    advance();
    return s;
  }
};

struct RawTerm {
  DataTerm term;
  bool arithmetic = false;
  bool hasNull = false;
  std::optional<std::string> soleIdent() const {
    if (arithmetic || hasNull) return std::nullopt;
    return term.asVar();
  }
};

struct RawAtom {
  RawTerm lhs, rhs;
  std::string op;
};

struct RawPure {
  enum Kind { Cmp, Data, App, TrueK, FalseK } kind;
  RawAtom cmp;
  DataFormula data;
  QueryApp app;
};

struct Parser {
  Lexer lx;
  explicit Parser(const std::string& s) : lx(s) {}

  Rat number() {
    if (lx.cur.kind != Token::Number) lx.error("expected number");
    Rat n = parseRat(lx.cur.text);
    lx.advance();
    if (lx.at("/")) {
      lx.advance();
      if (lx.cur.kind != Token::Number) lx.error("expected denominator");
      Rat d = parseRat(lx.cur.text);
      lx.advance();
      n /= d;
    }
    return n;
  }

  RawTerm rawFactor() {
    RawTerm t;
    if (lx.accept("-")) {
      t = rawFactor();
      t.term *= Rat(-1);
      t.arithmetic = true;
      return t;
    }
    if (lx.accept("(")) {
      t = rawTerm();
      lx.expect(")");
      t.arithmetic = true;
      return t;
    }
    if (lx.cur.kind == Token::Number) {
      t.term = DataTerm(number());
      t.arithmetic = true;
      return t;
    }
    if (lx.atIdent("null")) {
      lx.advance();
      t.hasNull = true;
      return t;
    }
    std::string id = lx.ident();
    t.term = DataTerm::var(id);
    return t;
  }

  RawTerm rawMul() {
    RawTerm t = rawFactor();
    while (lx.at("*")) {
      lx.advance();
      RawTerm u = rawFactor();
      if (t.term.isConstant()) {
        Rat k = t.term.constant;
        u.term *= k;
        u.arithmetic = true;
        t = u;
      } else if (u.term.isConstant()) {
        t.term *= u.term.constant;
        t.arithmetic = true;
      } else {
        lx.error("nonlinear product");
      }
    }
    return t;
  }

  RawTerm rawTerm() {
    RawTerm t = rawMul();
    while (lx.at("+") || lx.at("-")) {
      bool plus = lx.at("+");
      lx.advance();
      RawTerm u = rawMul();
      if (u.hasNull || t.hasNull) lx.error("null in arithmetic");
      if (plus)
        t.term += u.term;
      else
        t.term -= u.term;
      t.arithmetic = true;
    }
    return t;
  }

  DataFormula dataAtomFrom(const RawAtom& a) {
    if (a.lhs.hasNull || a.rhs.hasNull) lx.error("null in data comparison");
    const DataTerm &l = a.lhs.term, &r = a.rhs.term;
    if (a.op == "==" || a.op == "=") return atomEq(l, r);
    if (a.op == "!=") return atomNeq(l, r);
    if (a.op == "<=") return atomLe(l, r);
    if (a.op == "<") return atomLt(l, r);
    if (a.op == ">=") return atomGe(l, r);
    if (a.op == ">") return atomGt(l, r);
    lx.error("bad comparison operator");
    return DataFormula::top();
  }

  std::string cmpOp() {
    for (const char* op : {"==", "!=", "<=", ">=", "<", ">", "="})
      if (lx.at(op)) {
        std::string s = op;
        lx.advance();
        return s;
      }
    lx.error("expected comparison operator");
    return "";
  }

  DataFormula dataPrimary() {
    if (lx.accept("(")) {
      DataFormula f = dataOr();
      lx.expect(")");
      return f;
    }
    if (lx.atIdent("true")) {
      lx.advance();
      return DataFormula::top();
    }
    if (lx.atIdent("false")) {
      lx.advance();
      return DataFormula::bottom();
    }
    RawAtom a;
    a.lhs = rawTerm();
    a.op = cmpOp();
    a.rhs = rawTerm();
    return dataAtomFrom(a);
  }

  DataFormula dataAnd() {
    std::vector<DataFormula> fs = {dataPrimary()};
    while (lx.accept("&&")) fs.push_back(dataPrimary());
    return DataFormula::conj(std::move(fs));
  }

  DataFormula dataOr() {
    std::vector<DataFormula> fs = {dataAnd()};
    while (lx.accept("||")) fs.push_back(dataAnd());
    return DataFormula::disj(std::move(fs));
  }

  RefTerm refTermLambda() {
    lx.advance();  // 'lam'
    RefTerm r;
    r.kind = RefTerm::Kind::Lambda;
    r.params.push_back(lx.ident());
    while (lx.accept(",")) r.params.push_back(lx.ident());
    lx.expect(".");
    RefinedConj rc;
    std::vector<DataFormula> ds;
    for (;;) {
      if (lx.cur.kind == Token::Ident && !lx.atIdent("true") &&
          !lx.atIdent("false")) {
        auto m = lx.mark();
        std::string id = lx.ident();
        if (lx.at("(")) {
          lx.advance();
          std::vector<DataTerm> args;
          if (!lx.at(")")) {
            args.push_back(rawTerm().term);
            while (lx.accept(",")) args.push_back(rawTerm().term);
          }
          lx.expect(")");
          rc.apps.push_back(QueryApp{id, std::move(args)});
        } else {
          lx.rewind(m);
          ds.push_back(dataPrimary());
        }
      } else {
        ds.push_back(dataPrimary());
      }
      if (!lx.accept("&&")) break;
    }
    rc.data = DataFormula::conj(std::move(ds));
    r.body = rc;
    return r;
  }

  HeapTerm heapTerm() {
    if (lx.atIdent("null")) {
      lx.advance();
      return HeapTerm::null();
    }
    return HeapTerm::var(lx.ident());
  }

  // returns nullopt for 'emp'
  std::optional<Heaplet> heaplet() {
    if (lx.atIdent("true")) {
      lx.advance();
      return Heaplet{TrueHeap{}};
    }
    if (lx.atIdent("emp")) {
      lx.advance();
      return std::nullopt;
    }
    HeapTerm addr = heapTerm();
    if (lx.accept("|->")) {
      lx.expect("[");
      PointsTo p;
      p.addr = addr;
      if (!lx.at(";") && !lx.at("]")) {
        p.data.push_back(rawTerm().term);
        while (lx.accept(",")) p.data.push_back(rawTerm().term);
      }
      if (lx.accept(";")) {
        if (!lx.at("]")) {
          p.succ.push_back(heapTerm());
          while (lx.accept(",")) p.succ.push_back(heapTerm());
        }
      }
      lx.expect("]");
      return Heaplet{p};
    }
    if (addr.isNull()) lx.error("null cannot head a predicate");
    lx.expect("(");
    PredApp z;
    z.pred = addr.name;
    std::vector<std::variant<RefTerm, HeapTerm>> items;
    bool sawSemi = false;
    if (!lx.at(")")) {
      for (;;) {
        if (lx.atIdent("lam")) {
          items.push_back(refTermLambda());
        } else if (lx.atIdent("null")) {
          lx.advance();
          items.push_back(HeapTerm::null());
        } else {
          items.push_back(HeapTerm::var(lx.ident()));
        }
        if (lx.accept(",")) continue;
        if (lx.accept(";")) {
          sawSemi = true;
          for (auto& it : items) {
            if (std::holds_alternative<RefTerm>(it)) {
              z.refs.push_back(std::get<RefTerm>(it));
            } else {
              const HeapTerm& h = std::get<HeapTerm>(it);
              if (h.isNull()) lx.error("null is not a refinement");
              z.refs.push_back(RefTerm::mkVar(h.name, 1));
            }
          }
          items.clear();
          if (!lx.at(")")) {
            z.args.push_back(heapTerm());
            while (lx.accept(",")) z.args.push_back(heapTerm());
          }
          break;
        }
        break;
      }
    }
    if (!sawSemi) {
      for (auto& it : items) {
        if (std::holds_alternative<RefTerm>(it))
          lx.error("refinement list must be terminated by ';'");
        z.args.push_back(std::get<HeapTerm>(it));
      }
    }
    lx.expect(")");
    return Heaplet{z};
  }

  RawPure pureConjunct() {
    RawPure rp;
    if (lx.accept("(")) {
      rp.kind = RawPure::Data;
      rp.data = dataOr();
      lx.expect(")");
      return rp;
    }
    if (lx.atIdent("true")) {
      lx.advance();
      rp.kind = RawPure::TrueK;
      return rp;
    }
    if (lx.atIdent("false")) {
      lx.advance();
      rp.kind = RawPure::FalseK;
      return rp;
    }
    if (lx.cur.kind == Token::Ident && !lx.atIdent("null")) {
      auto m = lx.mark();
      std::string id = lx.ident();
      if (lx.at("(")) {
        lx.advance();
        QueryApp app;
        app.pred = id;
        if (!lx.at(")")) {
          app.args.push_back(rawTerm().term);
          while (lx.accept(",")) app.args.push_back(rawTerm().term);
        }
        lx.expect(")");
        rp.kind = RawPure::App;
        rp.app = std::move(app);
        return rp;
      }
      lx.rewind(m);
    }
    rp.kind = RawPure::Cmp;
    rp.cmp.lhs = rawTerm();
    rp.cmp.op = cmpOp();
    rp.cmp.rhs = rawTerm();
    return rp;
  }

  SepFormula formula() {
    SepFormula f;
    std::vector<std::string> bound;
    if (lx.atIdent("exists")) {
      lx.advance();
      bound.push_back(lx.ident());
      while (lx.accept(",")) bound.push_back(lx.ident());
      lx.expect(".");
    }
    std::vector<RawPure> raw;
    raw.push_back(pureConjunct());
    while (lx.accept("&&")) raw.push_back(pureConjunct());
    lx.expect(":");
    if (auto h = heaplet()) f.spatial.push_back(*h);
    while (lx.accept("*"))
      if (auto h = heaplet()) f.spatial.push_back(*h);

    // kind resolution
    std::map<std::string, VarKind> kinds;
    for (const auto& [v, k] : allVars(f)) kinds.emplace(v, k);
    for (const auto& rp : raw) {
      std::set<std::string> s;
      if (rp.kind == RawPure::App)
        rp.app.collectVars(s);
      else if (rp.kind == RawPure::Data)
        rp.data.collectVars(s);
      else if (rp.kind == RawPure::Cmp) {
        bool eqOp = rp.cmp.op == "==" || rp.cmp.op == "=" || rp.cmp.op == "!=";
        if (!eqOp || rp.cmp.lhs.arithmetic || rp.cmp.rhs.arithmetic) {
          rp.cmp.lhs.term.collectVars(s);
          rp.cmp.rhs.term.collectVars(s);
        }
      }
      for (const auto& v : s) kinds.emplace(v, VarKind::Data);
    }

    for (const auto& rp : raw) {
      switch (rp.kind) {
        case RawPure::TrueK:
          break;
        case RawPure::FalseK:
          f.pure.data = DataFormula::bottom();
          break;
        case RawPure::Data:
          f.pure.conjoinData(rp.data);
          break;
        case RawPure::App:
          f.pure.apps.push_back(rp.app);
          break;
        case RawPure::Cmp: {
          const RawAtom& a = rp.cmp;
          bool eqOp = (a.op == "==" || a.op == "=" || a.op == "!=");
          auto lhsId = a.lhs.soleIdent();
          auto rhsId = a.rhs.soleIdent();
          bool lhsHeapish =
              a.lhs.hasNull ||
              (lhsId && (!kinds.count(*lhsId) || kinds[*lhsId] == VarKind::Heap));
          bool rhsHeapish =
              a.rhs.hasNull ||
              (rhsId && (!kinds.count(*rhsId) || kinds[*rhsId] == VarKind::Heap));
          if (eqOp && lhsHeapish && rhsHeapish) {
            HeapTerm l = a.lhs.hasNull ? HeapTerm::null() : HeapTerm::var(*lhsId);
            HeapTerm r = a.rhs.hasNull ? HeapTerm::null() : HeapTerm::var(*rhsId);
            if (a.op == "!=")
              f.pure.addNeq(l, r);
            else if (!(l == r))
              f.pure.addEq(l, r);
          } else {
            f.pure.conjoinData(dataAtomFrom(a));
          }
          break;
        }
      }
    }

    std::map<std::string, VarKind> finalKinds = allVars(f);
    for (const auto& b : bound) {
      auto it = finalKinds.find(b);
      f.exists.push_back(
          {b, it == finalKinds.end() ? VarKind::Heap : it->second});
    }
    return f;
  }

  PredDef predDef(const PredRegistry& known) {
    if (!lx.atIdent("pred")) lx.error("expected 'pred'");
    lx.advance();
    PredDef def;
    def.name = lx.ident();
    lx.expect("(");
    bool inRefs = true;
    if (!lx.at(")")) {
      while (inRefs) {
        auto m = lx.mark();
        std::string id = lx.ident();
        if (lx.accept("/")) {
          if (lx.cur.kind != Token::Number) lx.error("expected arity");
          int ar = std::stoi(lx.cur.text);
          lx.advance();
          def.refParams.push_back({id, ar});
          if (lx.accept(",")) continue;
          lx.expect(";");
          inRefs = false;
        } else {
          // no refinement params at all: rewind, read heap params
          lx.rewind(m);
          inRefs = false;
        }
      }
      if (!lx.at(")")) {
        def.heapParams.push_back(lx.ident());
        while (lx.accept(",")) def.heapParams.push_back(lx.ident());
      }
    }
    lx.expect(")");
    lx.expect(":=");
    for (;;) {
      lx.expect("(");
      SepFormula c = formula();
      lx.expect(")");
      for (auto& h : c.spatial) {
        auto* z = std::get_if<PredApp>(&h);
        if (!z) continue;
        const PredDef* sig = nullptr;
        if (z->pred == def.name)
          sig = &def;
        else if (known.has(z->pred))
          sig = &known.at(z->pred);
        if (sig)
          for (size_t i = 0; i < z->refs.size() && i < sig->refParams.size(); ++i)
            if (z->refs[i].kind == RefTerm::Kind::Var)
              z->refs[i].varArity = sig->refParams[i].second;
      }
      def.cases.push_back(std::move(c));
      if (!lx.accept("|")) break;
    }
    lx.expect(";");
    return def;
  }
};

}  // namespace

SepFormula parseFormula(const std::string& text) {
  Parser p(text);
  SepFormula f = p.formula();
  if (p.lx.cur.kind != Token::End) p.lx.error("trailing input");
  return f;
}

void addPredDefs(PredRegistry& reg, const std::string& text) {
  Parser p(text);
  while (p.lx.cur.kind != Token::End) {
    PredDef d = p.predDef(reg);
    reg.add(std::move(d));
  }
}

PredRegistry parsePredDefs(const std::string& text) {
  PredRegistry reg = PredRegistry::builtins();
  addPredDefs(reg, text);
  return reg;
}

DataFormula parseDataFormula(const std::string& text) {
  Parser p(text);
  DataFormula f = p.dataOr();
  if (p.lx.cur.kind != Token::End) p.lx.error("trailing input");
  return f;
}

}  // namespace splinter
