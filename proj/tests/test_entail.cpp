#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splinter/entail.hpp"
#include "splinter/sltext.hpp"
#include "testutil.hpp"

using namespace splinter;
using namespace tu;

namespace {

const PredRegistry& REG() {
  static PredRegistry reg = PredRegistry::builtins();
  return reg;
}

ProveResult P(const std::string& l, const std::string& r, ProveOptions opt = {}) {
  return prove(REG(), parseFormula(l), parseFormula(r), opt);
}

bool soundnessCheck(const SepFormula& l, const SepFormula& r) {
  auto cm = findCountermodel(REG(), l, r, 3, {ratOf(-1), ratOf(0), ratOf(1)});
  return !cm.has_value();
}

}  // namespace

TEST_CASE("prove: emp |- emp") {
  auto res = P("true : emp", "true : emp");
  REQUIRE(res.ok());
  CHECK(res.tree.rule == Rule::Empty);
  CHECK(checkProofTree(REG(), res.tree).ok);
}

TEST_CASE("prove: cell folds into a null-terminated list") {
  auto res = P("true : x |-> [d; null]", "true : ls(lam a. true; x, null)");
  REQUIRE(res.ok());
  auto chk = checkProofTree(REG(), res.tree);
  CHECK(chk.ok);
  CHECK(soundnessCheck(parseFormula("true : x |-> [d; null]"),
                       parseFormula("true : ls(lam a. true; x, null)")));
  bool sawNNL = false, sawFold = false;
  std::function<void(const ProofTree&)> walk = [&](const ProofTree& t) {
    if (t.rule == Rule::NullNotLval) sawNNL = true;
    if (t.rule == Rule::Fold) sawFold = true;
    for (const auto& p : t.premises) walk(p);
  };
  walk(res.tree);
  CHECK(sawNNL);
  CHECK(sawFold);
}

TEST_CASE("prove: two cells fold into a two-step list") {
  auto res = P("true : x |-> [d; y] * y |-> [e; null]",
               "true : ls(lam a. true; x, null)");
  REQUIRE(res.ok());
  CHECK(checkProofTree(REG(), res.tree).ok);
}

TEST_CASE("prove: refinement weakening via the Predicate rule") {
  auto res = P("i == 0 : ls(lam a. a >= i; x, null)",
               "true : ls(lam a. a >= 0; x, null)");
  REQUIRE(res.ok());
  CHECK(checkProofTree(REG(), res.tree).ok);
  bool sawPred = false;
  std::function<void(const ProofTree&)> walk = [&](const ProofTree& t) {
    if (t.rule == Rule::Predicate) sawPred = true;
    for (const auto& p : t.premises) walk(p);
  };
  walk(res.tree);
  CHECK(sawPred);
  CHECK_FALSE(P("true : ls(lam a. a >= 0; x, null)",
                "true : ls(lam a. a >= 1; x, null)")
                  .ok());
}

TEST_CASE("prove: the composed strengthening entailment has a countermodel") {
  auto res = P("x != null && y != null && x != y : ls(lam a. true; x, y) * ls(lam a. true; y, null)",
               "exists z. true : x |-> [a; z] * ls(R; y, null)");
  CHECK_FALSE(res.ok());
  auto cm = findCountermodel(
      REG(),
      parseFormula("x != null && y != null && x != y : ls(lam a. true; x, y) * ls(lam a. true; y, null)"),
      parseFormula("exists z. true : x |-> [a; z] * ls(R; y, null)"), 3,
      {ratOf(0)});
  CHECK(cm.has_value());
}

TEST_CASE("prove: unfolding a list known nonempty exposes its head") {
  auto res = P("x != null : ls(lam a. true; x, null) * true",
               "exists d, n. true : x |-> [d; n] * true");
  REQUIRE(res.ok());
  CHECK(checkProofTree(REG(), res.tree).ok);
}

TEST_CASE("checkTriple examples") {
  SUBCASE("alloc rule output verbatim") {
    auto tr = checkTriple(REG(), parseFormula("true : emp"), CmdAlloc{"x", 1, 1},
                          parseFormula("exists d, n. true : x |-> [d; n]"));
    REQUIRE(tr.ok());
    CHECK(checkHoareStep(REG(), tr.step).ok);
  }
  SUBCASE("unfold-justified exposure at an assume") {
    CmdAssume a;
    a.cond.addNeq(H("x"), NIL());
    SepFormula pre = parseFormula("true : ls(lam a. true; x, null) * true");
    SepFormula post = parseFormula("exists d, n. true : x |-> [d; n] * true");
    auto tr = checkTriple(REG(), pre, a, post);
    REQUIRE(tr.ok());
    CHECK(checkHoareStep(REG(), tr.step).ok);
  }
  SUBCASE("unmatched free fails") {
    auto tr = checkTriple(REG(), parseFormula("true : emp"), CmdFree{"x"},
                          parseFormula("true : emp"));
    CHECK_FALSE(tr.ok());
  }
}

TEST_CASE("findCountermodel basics") {
  SUBCASE("empty heap refutes an allocation claim") {
    auto cm = findCountermodel(REG(), parseFormula("true : emp"),
                               parseFormula("exists d, n. true : x |-> [d; n]"),
                               3, {ratOf(0)});
    REQUIRE(cm.has_value());
    CHECK(cm->cells.empty());
  }
  SUBCASE("self-loop separates a cell from ls to its own successor") {
    auto cm = findCountermodel(REG(), parseFormula("true : x |-> [d; n]"),
                               parseFormula("true : ls(lam a. true; x, n)"), 3,
                               {ratOf(-1), ratOf(0), ratOf(1)});
    REQUIRE(cm.has_value());
    CHECK(cm->heapVars.at("x") == cm->heapVars.at("n"));
    CHECK_FALSE(P("true : x |-> [d; n]", "true : ls(lam a. true; x, n)").ok());
  }
  SUBCASE("list vs single-cell exactness") {
    // the smallest countermodel is the empty list (x = null)
    auto cm = findCountermodel(
        REG(), parseFormula("true : ls(lam a. true; x, null)"),
        parseFormula("exists d. true : x |-> [d; null] * true"), 3,
        {ratOf(0)});
    REQUIRE(cm.has_value());
    CHECK(cm->cells.empty());
    // pinned nonempty: a two-cell list separates x |-> [d; null] * true
    auto cm2 = findCountermodel(
        REG(), parseFormula("x != null : ls(lam a. true; x, null)"),
        parseFormula("exists d. true : x |-> [d; null] * true"), 3,
        {ratOf(0)});
    REQUIRE(cm2.has_value());
    CHECK(cm2->cells.size() >= 2);
  }
}

TEST_CASE("unfoldCases then re-fold round-trips") {
  PredRegistry reg = REG();
  auto cases = unfoldCases(reg, "ls", {RefTerm::lambda({"a"}, atomGe(V("a"), K(0)))},
                           {H("x"), H("y")});
  for (const auto& c : cases) {
    SepFormula target = parseFormula("true : ls(lam a. a >= 0; x, y)");
    auto res = prove(reg, c, target);
    CHECK(res.ok());
    if (res.ok()) CHECK(checkProofTree(reg, res.tree).ok);
  }
}

TEST_CASE("erase preserves satisfaction downward") {
  Gen gen(31337);
  std::vector<Rat> grid = {ratOf(-2), ratOf(-1), ratOf(0), ratOf(1), ratOf(2)};
  // exhaustive at two cells over the full data domain
  for (int iter = 0; iter < 20; ++iter) {
    SepFormula f = gen.formula(2, true, true);
    SepFormula ef = eraseData(f);
    auto cm = findCountermodel(REG(), f, ef, 2, grid);
    CHECK_FALSE(cm.has_value());
  }
  // three cells with single-cell formulas (keeps the model space tractable)
  for (int iter = 0; iter < 3; ++iter) {
    SepFormula f = gen.formula(1, false, true);
    SepFormula ef = eraseData(f);
    auto cm = findCountermodel(REG(), f, ef, 3, grid);
    CHECK_FALSE(cm.has_value());
  }
}

TEST_CASE("prove soundness vs bounded countermodels on random entailments") {
  Gen gen(777);
  int proved = 0;
  for (int iter = 0; iter < 200; ++iter) {
    SepFormula l = gen.formula(2, true, false);
    SepFormula r = gen.formula(2, true, false);
    ProveOptions opt;
    opt.nodeCap = 4000;
    auto res = prove(REG(), l, r, opt);
    if (!res.ok()) continue;
    ++proved;
    CHECK(checkProofTree(REG(), res.tree).ok);
    CHECK(soundnessCheck(l, r));
  }
  CHECK(proved >= 20);
}

TEST_CASE("prove is monotone in the fold budget") {
  std::vector<std::pair<std::string, std::string>> seqs = {
      {"true : x |-> [d; y] * y |-> [e; null]", "true : ls(lam a. true; x, null)"},
      {"true : x |-> [d; null]", "true : ls(lam a. true; x, null)"},
      {"x != null : ls(lam a. true; x, null) * true",
       "exists d, n. true : x |-> [d; n] * true"},
  };
  for (const auto& [l, r] : seqs) {
    ProveOptions b2, b3;
    b2.foldBudget = 2;
    b3.foldBudget = 3;
    bool at2 = P(l, r, b2).ok();
    bool at3 = P(l, r, b3).ok();
    if (at2) CHECK(at3);
  }
}

TEST_CASE("every returned proof passes the independent checker") {
  Gen gen(4242);
  for (int iter = 0; iter < 120; ++iter) {
    SepFormula l = gen.formula(2, true, true);
    SepFormula r = gen.formula(1, true, true);
    ProveOptions opt;
    opt.nodeCap = 4000;
    auto res = prove(REG(), l, r, opt);
    if (res.ok()) {
      auto chk = checkProofTree(REG(), res.tree);
      if (!chk.ok) {
        CAPTURE(l.show());
        CAPTURE(r.show());
        CAPTURE(chk.reason);
      }
      CHECK(chk.ok);
    }
  }
}
