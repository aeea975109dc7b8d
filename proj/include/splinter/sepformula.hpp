#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "splinter/dataterm.hpp"

namespace splinter {

enum class VarKind { Heap, Data };

// A heap term is null or a heap variable. Heap and data variables live in
// disjoint namespaces.
struct HeapTerm {
  std::string name;  // empty means null

  static HeapTerm null() { return {}; }
  static HeapTerm var(std::string n) { return {std::move(n)}; }
  bool isNull() const { return name.empty(); }
  bool operator==(const HeapTerm& o) const { return name == o.name; }
  bool operator!=(const HeapTerm& o) const { return name != o.name; }
  bool operator<(const HeapTerm& o) const { return name < o.name; }
  std::string show() const { return isNull() ? "null" : name; }
};

// Conjunction of a data formula with second-order variable applications;
// the body shape of refinement terms during constraint generation.
struct RefinedConj {
  DataFormula data = DataFormula::top();
  std::vector<QueryApp> apps;

  bool isTrivial() const { return data.isTrue() && apps.empty(); }
  RefinedConj subst(const std::string& v, const DataTerm& t) const;
  void collectVars(std::set<std::string>& out) const;
  std::string show() const;
};

// Refinement term: a named refinement variable or a lambda whose body is a
// refined conjunction. Ordinary (solved) refinements have no applications.
struct RefTerm {
  enum class Kind { Var, Lambda };
  Kind kind = Kind::Lambda;
  std::string var;  // Kind::Var
  int varArity = 0;
  std::vector<std::string> params;  // Kind::Lambda
  RefinedConj body;

  static RefTerm mkVar(std::string name, int arity) {
    RefTerm r;
    r.kind = Kind::Var;
    r.var = std::move(name);
    r.varArity = arity;
    return r;
  }
  static RefTerm lambda(std::vector<std::string> ps, DataFormula f) {
    RefTerm r;
    r.params = std::move(ps);
    r.body.data = std::move(f);
    return r;
  }
  static RefTerm trivial(int arity);

  int arity() const {
    return kind == Kind::Var ? varArity : static_cast<int>(params.size());
  }
  bool isTrivialTrue() const {
    return kind == Kind::Lambda && body.isTrivial();
  }
  // Apply to argument terms; a Var application stays symbolic.
  RefinedConj apply(const std::vector<DataTerm>& args) const;
  RefTerm substData(const std::string& v, const DataTerm& t) const;
  void collectFreeDataVars(std::set<std::string>& out) const;
  std::string show() const;
  bool operator==(const RefTerm& o) const { return show() == o.show(); }
};

struct PointsTo {
  HeapTerm addr;
  std::vector<DataTerm> data;
  std::vector<HeapTerm> succ;
};

struct PredApp {
  std::string pred;
  std::vector<RefTerm> refs;
  std::vector<HeapTerm> args;
};

struct TrueHeap {};

using Heaplet = std::variant<PointsTo, PredApp, TrueHeap>;

std::string showHeaplet(const Heaplet& h);

// Pure part: heap (dis)equalities, a data formula, and (while constraints
// are being generated) second-order applications.
struct Pure {
  std::set<std::pair<HeapTerm, HeapTerm>> eqs;
  std::set<std::pair<HeapTerm, HeapTerm>> neqs;
  DataFormula data = DataFormula::top();
  std::vector<QueryApp> apps;

  static std::pair<HeapTerm, HeapTerm> orient(HeapTerm a, HeapTerm b) {
    if (b < a) std::swap(a, b);
    return {a, b};
  }
  void addEq(const HeapTerm& a, const HeapTerm& b) {
    if (!(a == b)) eqs.insert(orient(a, b));
  }
  void addNeq(const HeapTerm& a, const HeapTerm& b) { neqs.insert(orient(a, b)); }
  void conjoinData(const DataFormula& f) {
    data = DataFormula::conj({data, f});
  }
  void conjoin(const Pure& o);
  bool trivial() const {
    return eqs.empty() && neqs.empty() && data.isTrue() && apps.empty();
  }
  // reflexive disequality present?
  bool hasReflexiveNeq() const {
    for (const auto& [a, b] : neqs)
      if (a == b) return true;
    return false;
  }
  std::string show() const;
};

struct BoundVar {
  std::string name;
  VarKind kind;
  bool operator==(const BoundVar& o) const {
    return name == o.name && kind == o.kind;
  }
};

// Quantified symbolic-heap assertion: exists X. Pure : Spatial. Spatial is a
// multiset; formulas equal as multisets are equal formulas.
struct SepFormula {
  std::vector<BoundVar> exists;
  Pure pure;
  std::vector<Heaplet> spatial;

  static SepFormula emp() { return {}; }
  static SepFormula top() {  // true : true
    SepFormula f;
    f.spatial.push_back(TrueHeap{});
    return f;
  }
  static SepFormula bottom() {  // contradictory pure part
    SepFormula f;
    f.pure.data = DataFormula::bottom();
    return f;
  }

  bool isBound(const std::string& n) const {
    for (const auto& b : exists)
      if (b.name == n) return true;
    return false;
  }
  bool hasTrueHeaplet() const {
    for (const auto& h : spatial)
      if (std::holds_alternative<TrueHeap>(h)) return true;
    return false;
  }
  size_t cellCount() const {
    size_t n = 0;
    for (const auto& h : spatial)
      if (std::holds_alternative<PointsTo>(h)) ++n;
    return n;
  }
  std::string show() const;
};

// --- free variables -------------------------------------------------------

// All variables with inferred kinds; bound variables excluded.
std::map<std::string, VarKind> freeVars(const SepFormula& f);
std::map<std::string, VarKind> allVars(const SepFormula& f);

// Deterministic fresh-name generation: smallest base, base', base#2, ... not
// in avoid.
std::string freshName(const std::string& base, const std::set<std::string>& avoid);

// --- substitution and renaming -------------------------------------------

// Capture-avoiding substitution of heap term E for free heap variable x.
// Precondition: x is not bound in f (alpha-rename first).
SepFormula substHeap(const SepFormula& f, const std::string& x, const HeapTerm& e);
// Same for a data variable.
SepFormula substData(const SepFormula& f, const std::string& a, const DataTerm& t);

// Rename a bound variable (and its occurrences) to a fresh name.
SepFormula renameBound(const SepFormula& f, const std::string& oldName,
                       const std::string& newName);
// Rename all bound variables away from the given name set.
SepFormula avoidBound(const SepFormula& f, const std::set<std::string>& avoid);

// exists X. f  (the added names must not clash with f's bound names)
SepFormula existsClose(SepFormula f, const std::vector<BoundVar>& xs);

// P * Q with quantifier renaming.
SepFormula starConjoin(const SepFormula& p, const SepFormula& q);

// --- recursive predicates ---------------------------------------------------

struct UnknownPredicate : std::runtime_error {
  explicit UnknownPredicate(const std::string& n)
      : std::runtime_error("unknown predicate: " + n) {}
};
struct ArityMismatch : std::runtime_error {
  explicit ArityMismatch(const std::string& n)
      : std::runtime_error("arity mismatch for predicate: " + n) {}
};

struct PredDef {
  std::string name;
  std::vector<std::pair<std::string, int>> refParams;  // (name, arity)
  std::vector<std::string> heapParams;
  std::vector<SepFormula> cases;
};

class PredRegistry {
 public:
  // ls is always present; bt is registered for tree tests.
  static PredRegistry builtins();

  void add(PredDef def) { defs_[def.name] = std::move(def); }
  bool has(const std::string& n) const { return defs_.count(n) != 0; }
  const PredDef& at(const std::string& n) const;
  const std::map<std::string, PredDef>& all() const { return defs_; }

 private:
  std::map<std::string, PredDef> defs_;
};

// Instantiate every case of Z(refs, args), beta-reducing lambda refinements.
std::vector<SepFormula> unfoldCases(const PredRegistry& reg, const std::string& z,
                                    const std::vector<RefTerm>& refs,
                                    const std::vector<HeapTerm>& args);

// --- erasure ----------------------------------------------------------------

// Replace all refinements with trivial lambdas and all data formulas with
// true; idempotent.
SepFormula eraseData(const SepFormula& f);
bool isErased(const SepFormula& f);

// --- saturation -------------------------------------------------------------

// Saturated pure information: equivalence classes of heap terms plus all
// derivable disequalities (stated ones, null-not-Lval, *-Partial).
class Saturation {
 public:
  bool inconsistent() const { return inconsistent_; }
  bool provablyEq(const HeapTerm& a, const HeapTerm& b) const;
  bool provablyNeq(const HeapTerm& a, const HeapTerm& b) const;
  // representative of a term's class (for equality collapsing)
  HeapTerm rep(const HeapTerm& t) const;
  // full closure as a Pure (all in-class pairs, all derivable diseqs)
  Pure closure() const;
  const std::set<HeapTerm>& terms() const { return terms_; }

 private:
  friend Saturation saturate(const SepFormula& f);
  std::set<HeapTerm> terms_;
  std::map<HeapTerm, HeapTerm> parent_;
  std::set<std::pair<HeapTerm, HeapTerm>> repNeqs_;
  bool inconsistent_ = false;
  HeapTerm find(const HeapTerm& t) const;
};

Saturation saturate(const SepFormula& f);

// Heap-level inconsistency (saturation) or unsatisfiable data part. The
// second-order applications are treated as unconstrained.
bool isInconsistent(const SepFormula& f);

// --- canonical form ---------------------------------------------------------

// Deterministic alpha-renaming plus multiset normalization; formulas are
// equal iff their canonical forms print identically.
SepFormula canonical(const SepFormula& f);
bool alphaEq(const SepFormula& a, const SepFormula& b);

}  // namespace splinter
