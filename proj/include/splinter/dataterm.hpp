#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "splinter/rational.hpp"

namespace splinter {

// Linear expression over data variables: sum of coeff*var plus a constant.
// Zero coefficients are never stored; the map keeps variables in canonical
// (lexicographic) order.
struct DataTerm {
  std::map<std::string, Rat> coeffs;
  Rat constant = 0;

  DataTerm() = default;
  explicit DataTerm(const Rat& k) : constant(k) {}
  static DataTerm var(const std::string& v) {
    DataTerm t;
    t.coeffs[v] = 1;
    return t;
  }

  bool isConstant() const { return coeffs.empty(); }
  std::optional<std::string> asVar() const {
    if (constant == 0 && coeffs.size() == 1 && coeffs.begin()->second == 1)
      return coeffs.begin()->first;
    return std::nullopt;
  }

  DataTerm& operator+=(const DataTerm& o);
  DataTerm& operator-=(const DataTerm& o);
  DataTerm& operator*=(const Rat& k);
  friend DataTerm operator+(DataTerm a, const DataTerm& b) { return a += b; }
  friend DataTerm operator-(DataTerm a, const DataTerm& b) { return a -= b; }
  friend DataTerm operator*(DataTerm a, const Rat& k) { return a *= k; }

  // Capture-free substitution of a linear term for a variable.
  DataTerm subst(const std::string& v, const DataTerm& t) const;
  void collectVars(std::set<std::string>& out) const;

  bool operator==(const DataTerm& o) const {
    return constant == o.constant && coeffs == o.coeffs;
  }
  bool operator<(const DataTerm& o) const;
  std::string show() const;
};

enum class Rel { Le, Lt, Eq };

// Normalized linear atom: sum(coeffs) REL bound. Also used as the row type
// of the linear-arithmetic engine.
struct DataAtom {
  std::map<std::string, Rat> coeffs;
  Rat bound = 0;
  Rel rel = Rel::Le;

  DataAtom() = default;
  // lhs REL rhs, normalized so the constant moves to the bound.
  DataAtom(const DataTerm& lhs, Rel r, const DataTerm& rhs);

  DataTerm lhsTerm() const {
    DataTerm t;
    t.coeffs = coeffs;
    return t;
  }
  bool trivial() const { return coeffs.empty(); }
  // For a trivial atom: does "0 rel bound" hold?
  bool trivialHolds() const;

  DataAtom subst(const std::string& v, const DataTerm& t) const;
  void collectVars(std::set<std::string>& out) const;
  bool operator==(const DataAtom& o) const {
    return rel == o.rel && bound == o.bound && coeffs == o.coeffs;
  }
  bool operator<(const DataAtom& o) const;
  std::string show() const;
};

// Positive (negation-normal) combination of linear atoms. Negation exists
// only at construction time: atoms are closed under complement in LRA,
// except x = k whose complement is a disjunction.
class DataFormula {
 public:
  enum class Kind { True, False, Atom, And, Or };

  DataFormula() : kind_(Kind::True) {}
  static DataFormula top() { return DataFormula(); }
  static DataFormula bottom() {
    DataFormula f;
    f.kind_ = Kind::False;
    return f;
  }
  static DataFormula atom(DataAtom a);
  static DataFormula conj(std::vector<DataFormula> fs);
  static DataFormula disj(std::vector<DataFormula> fs);

  Kind kind() const { return kind_; }
  const DataAtom& atomValue() const { return atom_; }
  const std::vector<DataFormula>& children() const { return kids_; }

  bool isTrue() const { return kind_ == Kind::True; }
  bool isFalse() const { return kind_ == Kind::False; }

  DataFormula subst(const std::string& v, const DataTerm& t) const;
  void collectVars(std::set<std::string>& out) const;
  std::set<std::string> vars() const {
    std::set<std::string> s;
    collectVars(s);
    return s;
  }

  // Negation, pushed to atoms (stays in the positive fragment).
  DataFormula complement() const;

  // Disjunctive normal form: list of conjunctions of atoms. Throws
  // SizeBudgetExceeded if the branch count passes the cap.
  std::vector<std::vector<DataAtom>> dnf(size_t branchCap = 4096) const;

  bool operator==(const DataFormula& o) const { return show() == o.show(); }
  std::string show() const;

 private:
  Kind kind_;
  DataAtom atom_;
  std::vector<DataFormula> kids_;
};

struct SizeBudgetExceeded : std::runtime_error {
  explicit SizeBudgetExceeded(const std::string& w) : std::runtime_error(w) {}
};

// Application of a second-order (refinement or Horn) variable to data terms.
struct QueryApp {
  std::string pred;
  std::vector<DataTerm> args;

  QueryApp() = default;
  QueryApp(std::string p, std::vector<DataTerm> a)
      : pred(std::move(p)), args(std::move(a)) {}
  QueryApp subst(const std::string& v, const DataTerm& t) const;
  void collectVars(std::set<std::string>& out) const;
  bool operator==(const QueryApp& o) const {
    return pred == o.pred && args == o.args;
  }
  bool operator<(const QueryApp& o) const;
  std::string show() const;
};

// Concrete evaluation under a rational assignment (absent variables are 0).
Rat evalDataTerm(const DataTerm& t, const std::map<std::string, Rat>& env);
bool evalDataFormula(const DataFormula& f, const std::map<std::string, Rat>& env);

// Convenience builders used all over the tests.
DataFormula atomLe(const DataTerm& a, const DataTerm& b);
DataFormula atomLt(const DataTerm& a, const DataTerm& b);
DataFormula atomEq(const DataTerm& a, const DataTerm& b);
DataFormula atomGe(const DataTerm& a, const DataTerm& b);
DataFormula atomGt(const DataTerm& a, const DataTerm& b);
DataFormula atomNeq(const DataTerm& a, const DataTerm& b);

}  // namespace splinter
