#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "splinter/theory.hpp"

using namespace splinter;

namespace {

DataTerm V(const std::string& v) { return DataTerm::var(v); }
DataTerm K(long n, long d = 1) { return DataTerm(ratOf(n, d)); }

DataAtom le(const DataTerm& a, const DataTerm& b) { return {a, Rel::Le, b}; }
DataAtom lt(const DataTerm& a, const DataTerm& b) { return {a, Rel::Lt, b}; }
DataAtom eq(const DataTerm& a, const DataTerm& b) { return {a, Rel::Eq, b}; }

bool pointSat(const std::vector<DataAtom>& rows,
              const std::map<std::string, Rat>& pt) {
  for (const auto& a : rows) {
    Rat s = 0;
    for (const auto& [v, c] : a.coeffs) {
      auto it = pt.find(v);
      s += c * (it == pt.end() ? Rat(0) : it->second);
    }
    if (a.rel == Rel::Le && !(s <= a.bound)) return false;
    if (a.rel == Rel::Lt && !(s < a.bound)) return false;
    if (a.rel == Rel::Eq && !(s == a.bound)) return false;
  }
  return true;
}

// Independent satisfiability oracle for systems over <=3 variables, by brute
// rational vertex enumeration. The closed relaxation is boxed so every
// nonempty region is a polytope; the centroid of all feasible vertices lies
// in the relative interior, so a strict row it does not strictly satisfy is
// an implicit equality of the region (and the strict system is empty).
bool vertexOracleSat(const LinSystem& sys) {
  std::set<std::string> varset = sys.vars();
  std::vector<std::string> vars(varset.begin(), varset.end());
  size_t n = vars.size();
  REQUIRE(n <= 3);
  if (n == 0) {
    std::map<std::string, Rat> empty;
    return pointSat(sys.rows, empty);
  }

  // closed relaxation rows (split equalities, relax strict) plus a box
  struct CRow {
    std::map<std::string, Rat> coeffs;
    Rat bound;
  };
  std::vector<CRow> closed;
  for (const auto& a : sys.rows) {
    closed.push_back({a.coeffs, a.bound});
    if (a.rel == Rel::Eq) {
      CRow m;
      for (const auto& [v, c] : a.coeffs) m.coeffs[v] = -c;
      m.bound = -a.bound;
      closed.push_back(m);
    }
  }
  const Rat box = ratOf(1000);
  for (const auto& v : vars) {
    CRow up, dn;
    up.coeffs[v] = 1;
    up.bound = box;
    dn.coeffs[v] = -1;
    dn.bound = box;
    closed.push_back(up);
    closed.push_back(dn);
  }

  auto closedSat = [&](const std::map<std::string, Rat>& pt) {
    for (const auto& r : closed) {
      Rat s = 0;
      for (const auto& [v, c] : r.coeffs) {
        auto it = pt.find(v);
        s += c * (it == pt.end() ? Rat(0) : it->second);
      }
      if (!(s <= r.bound)) return false;
    }
    return true;
  };

  // all boundary subsets of size n, solved exactly by Gaussian elimination
  size_t m = closed.size();
  std::vector<std::map<std::string, Rat>> feasible;
  auto solveSubset = [&](const std::vector<size_t>& rows) {
    size_t k = rows.size();
    std::vector<std::vector<Rat>> M(k, std::vector<Rat>(n + 1, 0));
    for (size_t i = 0; i < k; ++i) {
      const CRow& a = closed[rows[i]];
      for (size_t j = 0; j < n; ++j) {
        auto it = a.coeffs.find(vars[j]);
        M[i][j] = it == a.coeffs.end() ? Rat(0) : it->second;
      }
      M[i][n] = a.bound;
    }
    std::vector<int> pivotCol(k, -1);
    size_t row = 0;
    for (size_t col = 0; col < n && row < k; ++col) {
      size_t p = row;
      while (p < k && M[p][col] == 0) ++p;
      if (p == k) continue;
      std::swap(M[p], M[row]);
      for (size_t r2 = 0; r2 < k; ++r2) {
        if (r2 == row || M[r2][col] == 0) continue;
        Rat f = M[r2][col] / M[row][col];
        for (size_t c2 = 0; c2 <= n; ++c2) M[r2][c2] -= f * M[row][c2];
      }
      pivotCol[row] = static_cast<int>(col);
      ++row;
    }
    if (row < n) return;  // underdetermined subset: no unique vertex
    for (size_t r2 = row; r2 < k; ++r2)
      if (M[r2][n] != 0) return;
    std::map<std::string, Rat> pt;
    for (size_t j = 0; j < n; ++j) pt[vars[j]] = 0;
    for (size_t r2 = 0; r2 < row; ++r2)
      pt[vars[pivotCol[r2]]] = M[r2][n] / M[r2][pivotCol[r2]];
    if (closedSat(pt)) feasible.push_back(pt);
  };
  std::vector<size_t> subset;
  std::function<void(size_t)> rec = [&](size_t start) {
    if (subset.size() == n) {
      solveSubset(subset);
      return;
    }
    if (start == m) return;
    subset.push_back(start);
    rec(start + 1);
    subset.pop_back();
    rec(start + 1);
  };
  rec(0);

  if (feasible.empty()) return false;  // closed region empty
  std::map<std::string, Rat> centroid;
  for (const auto& v : vars) centroid[v] = 0;
  for (const auto& p : feasible)
    for (const auto& v : vars) centroid[v] += p.at(v);
  for (const auto& v : vars)
    centroid[v] /= Rat(static_cast<long>(feasible.size()));
  return pointSat(sys.rows, centroid);
}

}  // namespace

TEST_CASE("isSat trivial contradictions and empties") {
  LinSystem s1({le(V("x"), K(0)), le(K(1), V("x"))});
  auto r1 = isSat(s1);
  CHECK_FALSE(r1.sat);
  CHECK(r1.cert.verify(s1));
  // lambda = (1,1) up to scaling: both rows in support
  std::set<size_t> support;
  for (auto& e : r1.cert.entries) support.insert(e.row);
  CHECK(support == std::set<size_t>{0, 1});

  LinSystem s2;
  auto r2 = isSat(s2);
  CHECK(r2.sat);
  CHECK(r2.witness.empty());
}

TEST_CASE("isSat vertex oracle agreement on small systems") {
  LinSystem s({le(V("x") + V("y"), K(1)), le(V("x") - V("y"), K(1)),
               le(K(0) - V("x"), K(-1)), eq(V("y"), K(1, 2))});
  CHECK(isSat(s).sat == vertexOracleSat(s));

  // randomized cross-check, FM vs oracle and simplex vs FM
  std::mt19937 rng(12345);
  std::uniform_int_distribution<int> coef(-2, 2), cst(-3, 3), nrows(1, 5),
      relk(0, 2);
  const char* names[3] = {"x", "y", "z"};
  for (int iter = 0; iter < 300; ++iter) {
    LinSystem sys;
    int rc = nrows(rng);
    for (int i = 0; i < rc; ++i) {
      DataTerm t;
      for (int j = 0; j < 3; ++j) {
        int c = coef(rng);
        if (c) t += V(names[j]) * ratOf(c);
      }
      int rel = relk(rng);
      DataAtom a = rel == 0 ? le(t, K(cst(rng)))
                   : rel == 1 ? lt(t, K(cst(rng)))
                              : eq(t, K(cst(rng)));
      sys.add(a);
    }
    bool expected = vertexOracleSat(sys);
    auto got = isSat(sys);
    CHECK(got.sat == expected);
    if (!got.sat) CHECK(got.cert.verify(sys));
    forceSimplexForTests(true);
    auto got2 = isSat(sys);
    forceSimplexForTests(false);
    CHECK(got2.sat == expected);
    if (!got2.sat) CHECK(got2.cert.verify(sys));
  }
}

TEST_CASE("entails basics") {
  CHECK(entails(atomGe(V("x"), K(1)), atomGe(V("x"), K(0))));
  CHECK_FALSE(entails(atomGe(V("x"), K(0)), atomGe(V("x"), K(1))));
  // nu >= i && i = 0 |= nu >= 0
  DataFormula lhs = DataFormula::conj(
      {atomGe(V("nu"), V("i")), atomEq(V("i"), K(0))});
  CHECK(entails(lhs, atomGe(V("nu"), K(0))));
  // disjunction handling
  DataFormula d = DataFormula::disj({atomLt(V("x"), K(0)), atomGt(V("x"), K(0))});
  CHECK(entails(atomGe(V("x"), K(1)), d));
  CHECK_FALSE(entails(d, atomGe(V("x"), K(0))));
}

TEST_CASE("eliminate") {
  // textbook FM case
  DataFormula f =
      DataFormula::conj({atomLe(V("x"), V("y")), atomLe(V("y"), V("z"))});
  DataFormula g = eliminate({"y"}, f);
  CHECK(entails(g, atomLe(V("x"), V("z"))));
  CHECK(entails(atomLe(V("x"), V("z")), g));

  // substitution oracle: d' = i && d' >= 0  --> i >= 0
  DataFormula h = DataFormula::conj(
      {atomEq(V("dp"), V("i")), atomGe(V("dp"), K(0))});
  DataFormula he = eliminate({"dp"}, h);
  CHECK(entails(he, atomGe(V("i"), K(0))));
  CHECK(entails(atomGe(V("i"), K(0)), he));
  std::set<std::string> vs = he.vars();
  CHECK_FALSE(vs.count("dp"));

  // identity
  CHECK(eliminate({}, f) == f);
}

TEST_CASE("eliminate equivalence on integer grid") {
  std::mt19937 rng(777);
  std::uniform_int_distribution<int> coef(-2, 2), cst(-2, 2), nrows(1, 4);
  const char* names[3] = {"x", "y", "z"};
  for (int iter = 0; iter < 120; ++iter) {
    std::vector<DataFormula> conj;
    int rc = nrows(rng);
    for (int i = 0; i < rc; ++i) {
      DataTerm t;
      for (int j = 0; j < 3; ++j) {
        int c = coef(rng);
        if (c) t += V(names[j]) * ratOf(c);
      }
      conj.push_back(iter % 3 == 0 ? atomLt(t, K(cst(rng)))
                                   : atomLe(t, K(cst(rng))));
    }
    DataFormula f = DataFormula::conj(conj);
    DataFormula g = eliminate({"z"}, f);
    // on each (x,y) grid point: g holds iff exists z in extended grid with f
    for (int x = -2; x <= 2; ++x)
      for (int y = -2; y <= 2; ++y) {
        std::map<std::string, Rat> pt{{"x", ratOf(x)}, {"y", ratOf(y)}};
        // decide exists z. f via isSat of f-instantiated
        DataFormula fi = f.subst("x", DataTerm(ratOf(x)))
                             .subst("y", DataTerm(ratOf(y)));
        bool existsZ = false;
        for (const auto& br : fi.dnf())
          if (isSat(LinSystem(br)).sat) {
            existsZ = true;
            break;
          }
        DataFormula gi = g.subst("x", DataTerm(ratOf(x)))
                             .subst("y", DataTerm(ratOf(y)));
        bool gHolds = false;
        for (const auto& br : gi.dnf())
          if (isSat(LinSystem(br)).sat) {
            gHolds = true;
            break;
          }
        CHECK(gHolds == existsZ);
      }
  }
}

TEST_CASE("interpolate examples") {
  auto checkContract = [](const LinSystem& A, const LinSystem& B,
                          const DataFormula& I) {
    std::vector<DataFormula> ac, bc;
    for (auto& r : A.rows) ac.push_back(DataFormula::atom(r));
    for (auto& r : B.rows) bc.push_back(DataFormula::atom(r));
    CHECK(entails(DataFormula::conj(ac), I));
    CHECK(entails(DataFormula::conj({I, DataFormula::conj(bc)}),
                  DataFormula::bottom()));
  };

  {
    LinSystem A({le(V("x"), K(1))}), B({le(K(2), V("x"))});
    DataFormula I = interpolate(A, B);
    checkContract(A, B, I);
    CHECK(entails(I, atomLe(V("x"), K(1))));
    CHECK(entails(atomLe(V("x"), K(1)), I));
  }
  {
    LinSystem A({le(V("x"), V("y")), le(V("y"), K(0))}), B({le(K(1), V("x"))});
    DataFormula I = interpolate(A, B);
    checkContract(A, B, I);
    CHECK(entails(I, atomLe(V("x"), K(0))));
    CHECK(entails(atomLe(V("x"), K(0)), I));
  }
  {
    LinSystem A({eq(V("x"), K(5))}), B({le(V("x"), K(4))});
    DataFormula I = interpolate(A, B);
    checkContract(A, B, I);
    CHECK(entails(I, atomGe(V("x"), K(5))));
    CHECK(entails(atomGe(V("x"), K(5)), I));
  }
  {
    LinSystem A({le(V("x"), K(1))}), B({le(V("x"), K(5))});
    CHECK_THROWS_AS(interpolate(A, B), NotJointlyUnsat);
  }
}

TEST_CASE("interpolate randomized contract + local-variable cancellation") {
  std::mt19937 rng(999);
  std::uniform_int_distribution<int> coef(-2, 2), cst(-3, 3);
  int done = 0;
  for (int iter = 0; iter < 400 && done < 60; ++iter) {
    // A over {x, y, a}, B over {x, y, b}: shared x,y
    LinSystem A, B;
    for (int i = 0; i < 3; ++i) {
      DataTerm t = V("x") * ratOf(coef(rng)) + V("y") * ratOf(coef(rng)) +
                   V("a") * ratOf(coef(rng));
      A.add(le(t, K(cst(rng))));
      DataTerm u = V("x") * ratOf(coef(rng)) + V("y") * ratOf(coef(rng)) +
                   V("b") * ratOf(coef(rng));
      B.add(le(u, K(cst(rng))));
    }
    LinSystem joint;
    joint.rows = A.rows;
    joint.rows.insert(joint.rows.end(), B.rows.begin(), B.rows.end());
    if (isSat(joint).sat) continue;
    ++done;
    DataFormula I = interpolate(A, B);  // internal asserts check the contract
    std::set<std::string> iv = I.vars();
    CHECK_FALSE(iv.count("a"));
    CHECK_FALSE(iv.count("b"));
  }
  CHECK(done > 10);
}
