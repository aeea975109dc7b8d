#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "splinter/dataterm.hpp"

namespace splinter {

// Conjunction of normalized linear atoms. Equalities are kept as written and
// expanded into two inequalities inside the solvers.
struct LinSystem {
  std::vector<DataAtom> rows;

  LinSystem() = default;
  explicit LinSystem(std::vector<DataAtom> r) : rows(std::move(r)) {}
  void add(const DataAtom& a) { rows.push_back(a); }
  std::set<std::string> vars() const;
  std::string show() const;
};

// Nonnegative combination of rows witnessing unsatisfiability.
// negDir selects the ">= direction" of an equality row (-lhs <= -bound).
struct FarkasCert {
  struct Entry {
    size_t row;
    bool negDir;
    Rat lam;
  };
  std::vector<Entry> entries;

  bool empty() const { return entries.size() == 0; }
  // Recombines against the original rows: all variable coefficients must
  // cancel and the constant must be contradictory.
  bool verify(const LinSystem& sys) const;
};

struct SatResult {
  bool sat = false;
  std::map<std::string, Rat> witness;  // sat: a model
  FarkasCert cert;                     // unsat: a verified certificate
};

struct NotJointlyUnsat : std::runtime_error {
  NotJointlyUnsat() : std::runtime_error("interpolation query is satisfiable") {}
};

// Satisfiability with certificates: Fourier-Motzkin for up to 6 variables,
// exact rational simplex above. Every Unsat result carries a certificate
// that has been re-verified before returning.
SatResult isSat(const LinSystem& sys);

// phi entails psi iff every DNF branch of phi && !psi is unsatisfiable.
bool entails(const DataFormula& phi, const DataFormula& psi);

// Quantifier elimination by per-branch Fourier-Motzkin projection.
// Throws SizeBudgetExceeded when the intermediate row count passes rowCap.
DataFormula eliminate(const std::set<std::string>& vars, const DataFormula& phi,
                      size_t rowCap = 10000);

// Binary interpolation from a Farkas certificate of A union B, with greedy
// minimization of the nonzero-coefficient count. Requires joint
// unsatisfiability (throws NotJointlyUnsat otherwise). The result I
// satisfies: A => I, I && B unsat, vars(I) within vars(A) & vars(B); all
// three are asserted on every call.
DataFormula interpolate(const LinSystem& a, const LinSystem& b);

// Optional SMT-LIB-like dump of interpolation queries (--solver-trace).
void setSolverTrace(std::ostream* sink);

// Test hook: force the simplex path regardless of variable count.
void forceSimplexForTests(bool on);

}  // namespace splinter
