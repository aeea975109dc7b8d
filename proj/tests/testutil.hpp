#pragma once

// Shared helpers for the test suites: tiny builders and seeded random
// generators for formulas used by the property tests.

#include <random>
#include <string>
#include <vector>

#include "splinter/sepformula.hpp"

namespace tu {

using namespace splinter;

inline DataTerm V(const std::string& v) { return DataTerm::var(v); }
inline DataTerm K(long n, long d = 1) { return DataTerm(ratOf(n, d)); }
inline HeapTerm H(const std::string& v) { return HeapTerm::var(v); }
inline HeapTerm NIL() { return HeapTerm::null(); }

inline PointsTo cell(const std::string& addr, const DataTerm& d,
                     const HeapTerm& n) {
  PointsTo p;
  p.addr = H(addr);
  p.data = {d};
  p.succ = {n};
  return p;
}

inline PredApp lsApp(const RefTerm& r, const HeapTerm& a, const HeapTerm& b) {
  PredApp z;
  z.pred = "ls";
  z.refs = {r};
  z.args = {a, b};
  return z;
}

inline RefTerm lsTrivial() { return RefTerm::trivial(1); }

struct Gen {
  std::mt19937 rng;
  explicit Gen(unsigned seed) : rng(seed) {}

  int pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }

  DataTerm dataTerm(const std::vector<std::string>& dvars) {
    DataTerm t(ratOf(pick(-2, 2)));
    for (const auto& v : dvars)
      if (pick(0, 2) == 0) t += V(v) * ratOf(pick(-2, 2));
    return t;
  }

  DataFormula dataFormula(const std::vector<std::string>& dvars, int depth = 1) {
    int k = pick(0, depth > 0 ? 4 : 2);
    switch (k) {
      case 0:
        return DataFormula::top();
      case 1:
      case 2: {
        DataTerm a = dataTerm(dvars), b = dataTerm(dvars);
        int r = pick(0, 2);
        return r == 0 ? atomLe(a, b) : r == 1 ? atomLt(a, b) : atomEq(a, b);
      }
      case 3:
        return DataFormula::conj(
            {dataFormula(dvars, depth - 1), dataFormula(dvars, depth - 1)});
      default:
        return DataFormula::disj(
            {dataFormula(dvars, depth - 1), dataFormula(dvars, depth - 1)});
    }
  }

  // Random formula over heap vars {x,y,z} and data vars {a,b}; at most
  // `maxCells` points-to heaplets and possibly an ls or a TrueHeap.
  SepFormula formula(int maxCells = 2, bool allowPred = true,
                     bool allowData = true) {
    SepFormula f;
    std::vector<std::string> hv = {"x", "y", "z"};
    std::vector<std::string> dv = {"a", "b"};
    auto ht = [&]() -> HeapTerm {
      int i = pick(0, static_cast<int>(hv.size()));
      return i == static_cast<int>(hv.size()) ? NIL() : H(hv[i]);
    };
    int ncells = pick(0, maxCells);
    std::set<std::string> used;
    for (int i = 0; i < ncells; ++i) {
      std::string addr = hv[pick(0, static_cast<int>(hv.size()) - 1)];
      if (used.count(addr)) continue;  // separate cells need distinct vars
      used.insert(addr);
      f.spatial.push_back(cell(addr, allowData ? dataTerm(dv) : V("a"), ht()));
    }
    if (allowPred && pick(0, 2) == 0) {
      RefTerm r = lsTrivial();
      if (allowData && pick(0, 2) == 0)
        r = RefTerm::lambda({"nu"}, atomGe(V("nu"), K(pick(-1, 1))));
      f.spatial.push_back(lsApp(r, ht(), ht()));
    }
    if (pick(0, 3) == 0) f.spatial.push_back(TrueHeap{});
    int npure = pick(0, 2);
    for (int i = 0; i < npure; ++i) {
      HeapTerm a = ht(), b = ht();
      if (a == b) continue;
      if (pick(0, 1))
        f.pure.addEq(a, b);
      else
        f.pure.addNeq(a, b);
    }
    if (allowData && pick(0, 1)) f.pure.conjoinData(dataFormula(dv));
    return f;
  }
};

}  // namespace tu
