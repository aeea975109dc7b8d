#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splinter/sltext.hpp"
#include "splinter/theory.hpp"
#include "testutil.hpp"

using namespace splinter;
using namespace tu;

namespace {

// Independent structural-recursion substitution used as the oracle for
// substHeap.
SepFormula oracleSubstHeap(const SepFormula& f, const std::string& x,
                           const HeapTerm& e) {
  REQUIRE(!f.isBound(x));
  SepFormula out = f;
  auto sub = [&](HeapTerm& t) {
    if (!t.isNull() && t.name == x) t = e;
  };
  Pure np;
  np.data = out.pure.data;
  np.apps = out.pure.apps;
  for (auto [a, b] : out.pure.eqs) {
    sub(a);
    sub(b);
    if (!(a == b)) np.addEq(a, b);
  }
  for (auto [a, b] : out.pure.neqs) {
    sub(a);
    sub(b);
    np.addNeq(a, b);
  }
  out.pure = np;
  for (auto& h : out.spatial) {
    if (auto* p = std::get_if<PointsTo>(&h)) {
      sub(p->addr);
      for (auto& s : p->succ) sub(s);
    } else if (auto* z = std::get_if<PredApp>(&h)) {
      for (auto& a : z->args) sub(a);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("substHeap basics") {
  SepFormula f = parseFormula("true : x |-> [d; null]");
  SepFormula g = substHeap(f, "x", H("y"));
  CHECK(alphaEq(g, parseFormula("true : y |-> [d; null]")));

  // bound occurrence: alpha-rename first; no free occurrence remains
  SepFormula b = parseFormula("exists x. true : x |-> [d; null]");
  SepFormula renamed = renameBound(b, "x", freshName("x", {"x", "y", "d"}));
  SepFormula after = substHeap(renamed, "x", H("y"));
  CHECK(alphaEq(after, b));

  // structural recursion oracle
  SepFormula p = parseFormula("x == z : ls(R; x, null)");
  SepFormula got = substHeap(p, "x", H("y"));
  CHECK(alphaEq(got, oracleSubstHeap(p, "x", H("y"))));
  CHECK(alphaEq(got, parseFormula("y == z : ls(R; y, null)")));
}

TEST_CASE("starConjoin") {
  SepFormula emp = parseFormula("true : emp");
  CHECK(alphaEq(starConjoin(emp, emp), emp));

  SepFormula p = parseFormula("exists a. a >= 0 : x |-> [a; null]");
  SepFormula q = parseFormula("true : ls(R; y, null)");
  SepFormula pq = starConjoin(p, q);
  CHECK(alphaEq(
      pq, parseFormula("exists a. a >= 0 : x |-> [a; null] * ls(R; y, null)")));

  // renaming case: exists a. P(a) * exists a. Q(a) keeps the two apart
  SepFormula r1 = parseFormula("exists a. a >= 0 : x |-> [a; null]");
  SepFormula r2 = parseFormula("exists a. a <= 0 : y |-> [a; null]");
  SepFormula rr = starConjoin(r1, r2);
  CHECK(rr.exists.size() == 2);
  CHECK(rr.exists[0].name != rr.exists[1].name);
  CHECK(alphaEq(rr, parseFormula("exists a, b. a >= 0 && b <= 0 : "
                                 "x |-> [a; null] * y |-> [b; null]")));
}

TEST_CASE("starConjoin commutative modulo alpha/multiset") {
  Gen gen(42);
  for (int i = 0; i < 50; ++i) {
    SepFormula p = gen.formula(), q = gen.formula();
    CHECK(alphaEq(starConjoin(p, q), starConjoin(q, p)));
  }
}

TEST_CASE("unfoldCases of ls") {
  PredRegistry reg = PredRegistry::builtins();

  SUBCASE("trivial refinement") {
    auto cases =
        unfoldCases(reg, "ls", {RefTerm::lambda({"a"}, DataFormula::top())},
                    {H("x"), H("y")});
    REQUIRE(cases.size() == 2);
    CHECK(alphaEq(cases[0], parseFormula("x == y : emp")));
    CHECK(alphaEq(cases[1],
                  parseFormula(
                      "exists d, n. x != y : x |-> [d; n] * ls(lam a. true; n, y)")));
  }

  SUBCASE("refinement carries into the data part") {
    auto cases = unfoldCases(
        reg, "ls", {RefTerm::lambda({"a"}, atomGe(V("a"), V("i")))},
        {H("x"), NIL()});
    REQUIRE(cases.size() == 2);
    std::string dvar;
    for (const auto& bv : cases[1].exists)
      if (bv.kind == VarKind::Data) dvar = bv.name;
    REQUIRE(!dvar.empty());
    CHECK(entails(cases[1].pure.data, atomGe(V(dvar), V("i"))));
  }

  SUBCASE("aliased endpoints") {
    auto cases =
        unfoldCases(reg, "ls", {RefTerm::mkVar("R", 1)}, {H("x"), H("x")});
    REQUIRE(cases.size() == 2);
    CHECK(cases[0].pure.eqs.empty());  // x == x drops to true
    CHECK(!isInconsistent(cases[0]));
    CHECK(isInconsistent(cases[1]));  // x != x
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(unfoldCases(reg, "nosuch", {}, {}), UnknownPredicate);
    CHECK_THROWS_AS(unfoldCases(reg, "ls", {}, {H("x"), H("y")}), ArityMismatch);
  }
}

TEST_CASE("erase") {
  SepFormula f = parseFormula("d >= 0 : x |-> [d; null]");
  CHECK(alphaEq(eraseData(f), parseFormula("true : x |-> [d; null]")));

  SepFormula g = parseFormula("true : ls(lam a. a >= i; x, null)");
  SepFormula ge = eraseData(g);
  CHECK(alphaEq(ge, parseFormula("true : ls(lam a. true; x, null)")));
  CHECK(isErased(ge));

  Gen gen(7);
  for (int i = 0; i < 60; ++i) {
    SepFormula h = gen.formula();
    CHECK(alphaEq(eraseData(eraseData(h)), eraseData(h)));
  }
}

TEST_CASE("saturate") {
  SUBCASE("cells: null-not-Lval and *-Partial") {
    SepFormula f = parseFormula("true : x |-> [d; n] * y |-> [e; m]");
    Saturation s = saturate(f);
    CHECK_FALSE(s.inconsistent());
    CHECK(s.provablyNeq(H("x"), NIL()));
    CHECK(s.provablyNeq(H("y"), NIL()));
    CHECK(s.provablyNeq(H("x"), H("y")));
    CHECK_FALSE(s.provablyNeq(H("n"), H("m")));
  }

  SUBCASE("transitivity") {
    SepFormula f = parseFormula("x == y && y == z : emp");
    Saturation s = saturate(f);
    CHECK(s.provablyEq(H("x"), H("z")));
    Pure c = s.closure();
    CHECK(c.eqs.count(Pure::orient(H("x"), H("z"))));
  }

  SUBCASE("null aliasing a cell is inconsistent") {
    SepFormula f = parseFormula("x == null : x |-> [d; n]");
    CHECK(saturate(f).inconsistent());
    CHECK(isInconsistent(f));
  }

  SUBCASE("fixpoint") {
    Gen gen(11);
    for (int i = 0; i < 60; ++i) {
      SepFormula f = gen.formula();
      Saturation s = saturate(f);
      if (s.inconsistent()) continue;
      SepFormula g = f;
      g.pure = s.closure();
      g.spatial = f.spatial;
      Saturation s2 = saturate(g);
      CHECK(s2.closure().show() == s.closure().show());
    }
  }
}

TEST_CASE("canonical form / parser round trip") {
  Gen gen(1234);
  for (int i = 0; i < 80; ++i) {
    SepFormula f = gen.formula();
    std::map<std::string, VarKind> fv = freeVars(f);
    std::vector<BoundVar> close;
    for (const auto& [v, k] : fv)
      if (gen.pick(0, 2) == 0) close.push_back({v, k});
    SepFormula g = existsClose(f, close);
    SepFormula reparsed = parseFormula(g.show());
    CHECK(alphaEq(reparsed, g));
  }
}

TEST_CASE("predicate definition text format") {
  PredRegistry reg = parsePredDefs(
      "pred twolist(P/1, Q/1; x, y) := (x == y : emp)"
      " | (exists d, n. x != y && P(d) : x |-> [d; n] * twolist(P, Q; n, y));");
  CHECK(reg.has("twolist"));
  CHECK(reg.has("ls"));
  const PredDef& d = reg.at("twolist");
  CHECK(d.refParams.size() == 2);
  CHECK(d.heapParams.size() == 2);
  CHECK(d.cases.size() == 2);

  auto cases = unfoldCases(reg, "twolist",
                           {RefTerm::lambda({"v"}, atomGe(V("v"), K(0))),
                            RefTerm::trivial(1)},
                           {H("p"), NIL()});
  REQUIRE(cases.size() == 2);
  std::string dvar;
  for (const auto& bv : cases[1].exists)
    if (bv.kind == VarKind::Data) dvar = bv.name;
  REQUIRE(!dvar.empty());
  CHECK(entails(cases[1].pure.data, atomGe(V(dvar), K(0))));
}

TEST_CASE("builtin bt predicate") {
  PredRegistry reg = PredRegistry::builtins();
  auto cases = unfoldCases(reg, "bt", {RefTerm::trivial(1)}, {H("t")});
  REQUIRE(cases.size() == 2);
  CHECK(alphaEq(cases[0], parseFormula("t == null : emp")));
  CHECK(cases[1].spatial.size() == 3);
}
