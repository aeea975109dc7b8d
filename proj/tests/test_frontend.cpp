#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "splinter/program.hpp"
#include "splinter/symexec.hpp"
#include "testutil.hpp"

using namespace splinter;

namespace {

const char* kRunningExample = R"(
heap x, tmp;
int i;
1: i = nondet();
   x = null;
2: while (i != 0) {
     tmp = new(1,1);
     tmp->N0 = x;
     tmp->D0 = i;
     x = tmp;
     i = i - 1;
   }
3: while (x != null) {
4:   assert(x->D0 >= 0);
     x = x->N0;
   }
)";

// Whole-program concrete walk over the CFG: at each node take the first
// enabled edge in source order. Returns (status, final data values of the
// declared variables).
struct CfgRun {
  std::string status;
  std::map<std::string, Rat> finalData;
};

CfgRun runCfg(const Program& p, const std::vector<Rat>& inputs, int fuel = 20000) {
  ConcreteState st;
  size_t inputPos = 0;
  int v = p.entry;
  CfgRun out;
  while (fuel-- > 0) {
    if (v == p.error) {
      out.status = "error";
      goto done;
    }
    {
      auto outs = p.outEdges(v);
      if (outs.empty()) {
        out.status = "ok";
        goto done;
      }
      bool moved = false;
      for (int ei : outs) {
        const Edge& e = p.edges[ei];
        if (const auto* a = std::get_if<CmdAssume>(&e.cmd)) {
          if (!evalPure(a->cond, st)) continue;
          v = e.to;
          moved = true;
          break;
        }
        auto stt = stepConcrete(e.cmd, st, inputs, inputPos);
        if (stt == ConcreteRun::Status::MemFault) {
          out.status = "memfault";
          goto done;
        }
        v = e.to;
        moved = true;
        break;
      }
      if (!moved) {
        out.status = "assumefail";
        goto done;
      }
    }
  }
  out.status = "fuel";
done:
  for (const auto& [var, k] : p.decls)
    if (k == VarKind::Data && var.find('$') == std::string::npos)
      out.finalData[var] = st.data.count(var) ? st.data[var] : Rat(0);
  return out;
}

}  // namespace

TEST_CASE("running example lowers to the expected CFG shape") {
  Program p = parseProgram(kRunningExample);
  // two loop heads and an error-reaching assert edge
  CHECK(p.labels.count("1"));
  CHECK(p.labels.count("2"));
  CHECK(p.labels.count("3"));
  CHECK(p.labels.count("4"));
  // the error node is reachable via an assume edge guarding the violation
  bool errEdge = false;
  for (const auto& e : p.edges)
    if (e.to == p.error)
      if (const auto* a = std::get_if<CmdAssume>(&e.cmd)) {
        // negated assertion: loaded field < 0
        errEdge = !a->cond.data.isTrue();
      }
  CHECK(errEdge);
  // loop head at label 2 has two outgoing assume edges (enter / exit)
  int head2 = p.labels.at("2");
  int assumes = 0;
  for (int ei : p.outEdges(head2))
    if (std::holds_alternative<CmdAssume>(p.edges[ei].cmd)) ++assumes;
  CHECK(assumes == 2);
  // entry has one outgoing edge; error none
  CHECK(p.outEdges(p.entry).size() == 1);
  CHECK(p.outEdges(p.error).empty());
}

TEST_CASE("assert(true) produces a vacuous error edge") {
  Program p = parseProgram("int i; assert(true);", {false, false});
  bool found = false;
  for (const auto& e : p.edges)
    if (e.to == p.error)
      if (const auto* a = std::get_if<CmdAssume>(&e.cmd))
        found = a->cond.data.isFalse();
  CHECK(found);
}

TEST_CASE("heap load statement lowers to a single load command") {
  Program p = parseProgram("heap x, y; int i; x = new(1,1); y = x->N0; assert(i < i);",
                           {false, false});
  bool found = false;
  for (const auto& e : p.edges)
    if (const auto* l = std::get_if<CmdHeapLoad>(&e.cmd))
      found = l->lhs == "y" && l->obj == "x" && l->field == 0;
  CHECK(found);
}

TEST_CASE("shape errors are reported at parse time") {
  CHECK_THROWS_AS(parseProgram("heap x; x = new(2,2);"), ShapeError);
  CHECK_THROWS_AS(parseProgram("heap x; int i; x = new(1,1); i = x->D3;"),
                  ShapeError);
  // multi-shape allowed behind the flag
  ParseOptions opt;
  opt.allowMultiShape = true;
  opt.prune = false;
  CHECK_NOTHROW(parseProgram("heap x; x = new(1,1);", opt));
}

TEST_CASE("print / reparse round trip is isomorphic") {
  Program p = parseProgram(kRunningExample);
  std::string flat = printProgram(p);
  Program q = parseProgram(flat);
  CHECK(printProgram(q) == flat);
  CHECK(q.entry == p.entry);
  CHECK(q.error == p.error);
  REQUIRE(q.edges.size() == p.edges.size());
  for (size_t i = 0; i < p.edges.size(); ++i) {
    CHECK(q.edges[i].from == p.edges[i].from);
    CHECK(q.edges[i].to == p.edges[i].to);
    CHECK(showCommand(q.edges[i].cmd) == showCommand(p.edges[i].cmd));
  }
}

namespace {

// random structured programs for the lowering-semantics property
std::string randomProgram(std::mt19937& rng) {
  std::uniform_int_distribution<int> d100(0, 99);
  auto pick = [&](int n) { return d100(rng) % n; };
  std::ostringstream os;
  os << "heap x, y;\nint i, j;\n";
  int n = 3 + pick(6);
  std::vector<std::string> conds = {"i <= j", "i != 0", "x == null",
                                    "x != y",  "j > 1",  "x != null"};
  std::function<void(int, int)> stmts = [&](int count, int depth) {
    for (int s = 0; s < count; ++s) {
      switch (pick(12)) {
        case 0:
          os << "i = nondet();\n";
          break;
        case 1:
          os << "i = i + " << pick(3) << ";\n";
          break;
        case 2:
          os << "j = 2*i - 1;\n";
          break;
        case 3:
          os << "x = new(1,1);\n";
          break;
        case 4:
          os << "x = null;\n";
          break;
        case 5:
          os << "y = x;\n";
          break;
        case 6:
          os << "x->D0 = i + j;\n";
          break;
        case 7:
          os << "i = x->D0;\n";
          break;
        case 8:
          os << "y = x->N0;\n";
          break;
        case 9:
          os << "free(x);\n";
          break;
        case 10:
          if (depth < 2) {
            os << "if (" << conds[pick(conds.size())] << ") {\n";
            stmts(1 + pick(2), depth + 1);
            os << "} else {\n";
            stmts(1 + pick(2), depth + 1);
            os << "}\n";
          } else {
            os << "j = j - 1;\n";
          }
          break;
        default:
          if (depth < 2 && pick(2) == 0) {
            os << "assume(i <= 4);\nwhile (i > 0) {\ni = i - 1;\n";
            stmts(1, depth + 1);
            os << "}\n";
          } else {
            os << "assert(" << conds[pick(conds.size())] << ");\n";
          }
          break;
      }
    }
  };
  stmts(n, 0);
  os << "assert(i < i - 1);\n";  // keep an error node reachable
  return os.str();
}

}  // namespace

TEST_CASE("lowering preserves concrete semantics on random programs") {
  std::mt19937 rng(20240817);
  std::uniform_int_distribution<int> val(-3, 3);
  int compared = 0;
  for (int iter = 0; iter < 100; ++iter) {
    std::string src = randomProgram(rng);
    Program p;
    try {
      ParseOptions opt;
      opt.prune = false;
      p = parseProgram(src, opt);
    } catch (const ShapeError&) {
      continue;
    }
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Rat> inputs;
      for (int k = 0; k < 8; ++k) inputs.push_back(ratOf(val(rng)));
      SourceRun ref = interpretSource(src, inputs);
      CfgRun cfg = runCfg(p, inputs);
      if (ref.status == "fuel" || cfg.status == "fuel") continue;
      ++compared;
      CHECK(cfg.status == ref.status);
      if (cfg.status == "ok" && ref.status == "ok") {
        for (const auto& [v, r] : ref.finalData) {
          REQUIRE(cfg.finalData.count(v));
          CHECK(cfg.finalData[v] == r);
        }
      }
    }
  }
  CHECK(compared > 150);
}

TEST_CASE("enumerateEdgesFrom is deterministic source order") {
  Program p = parseProgram(kRunningExample);
  auto outs = p.outEdges(p.labels.at("2"));
  REQUIRE(outs.size() == 2);
  CHECK(outs[0] < outs[1]);
  // first edge (source order) is the loop-entry branch
  const auto* a = std::get_if<CmdAssume>(&p.edges[outs[0]].cmd);
  REQUIRE(a);
  CHECK_FALSE(a->cond.data.isTrue());
}
