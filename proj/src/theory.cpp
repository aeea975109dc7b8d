#include "splinter/theory.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>
#include <sstream>

namespace splinter {

namespace {

std::ostream* g_trace = nullptr;
bool g_forceSimplex = false;

// Internal inequality row: coeffs . vars REL bound with REL in {<=, <},
// tagged with the originating row and direction.
struct IneqRow {
  std::map<std::string, Rat> coeffs;
  Rat bound;
  bool strict = false;
  // Farkas bookkeeping: combination of original rows this one represents.
  std::map<std::pair<size_t, bool>, Rat> lam;
};

std::vector<IneqRow> expandRows(const LinSystem& sys) {
  std::vector<IneqRow> out;
  for (size_t i = 0; i < sys.rows.size(); ++i) {
    const DataAtom& a = sys.rows[i];
    IneqRow r;
    r.coeffs = a.coeffs;
    r.bound = a.bound;
    r.strict = (a.rel == Rel::Lt);
    r.lam[{i, false}] = 1;
    out.push_back(r);
    if (a.rel == Rel::Eq) {
      IneqRow n;
      for (const auto& [v, c] : a.coeffs) n.coeffs[v] = -c;
      n.bound = -a.bound;
      n.lam[{i, true}] = 1;
      out.push_back(n);
    }
  }
  return out;
}

FarkasCert certOf(const IneqRow& r) {
  FarkasCert c;
  for (const auto& [key, l] : r.lam)
    if (l != 0) c.entries.push_back({key.first, key.second, l});
  return c;
}

bool rowContradictory(const IneqRow& r) {
  if (!r.coeffs.empty()) return false;
  return r.strict ? r.bound <= 0 : r.bound < 0;
}

IneqRow combineRows(const IneqRow& a, const Rat& ka, const IneqRow& b,
                    const Rat& kb) {
  IneqRow out;
  out.strict = a.strict || b.strict;
  out.bound = ka * a.bound + kb * b.bound;
  out.coeffs = a.coeffs;
  for (auto& [v, c] : out.coeffs) c *= ka;
  for (const auto& [v, c] : b.coeffs) {
    auto it = out.coeffs.find(v);
    Rat add = kb * c;
    if (it == out.coeffs.end()) {
      if (add != 0) out.coeffs[v] = add;
    } else {
      it->second += add;
      if (it->second == 0) out.coeffs.erase(it);
    }
  }
  out.lam = a.lam;
  for (auto& [k, l] : out.lam) l *= ka;
  for (const auto& [k, l] : b.lam) out.lam[k] += kb * l;
  return out;
}

// ---------------------------------------------------------------------------
// Fourier-Motzkin with combination bookkeeping.

struct FMOutcome {
  bool sat;
  FarkasCert cert;
  std::map<std::string, Rat> witness;
  bool overflow = false;  // row budget blown; caller falls back
};

FMOutcome fourierMotzkin(const LinSystem& sys, size_t rowCap) {
  FMOutcome out;
  std::vector<IneqRow> rows = expandRows(sys);
  std::set<std::string> varset = sys.vars();
  std::vector<std::string> order(varset.begin(), varset.end());

  // Rows visible at each elimination stage, for witness reconstruction.
  std::vector<std::vector<IneqRow>> stages;

  for (const auto& v : order) {
    stages.push_back(rows);
    std::vector<IneqRow> pos, neg, zero;
    for (auto& r : rows) {
      auto it = r.coeffs.find(v);
      if (it == r.coeffs.end())
        zero.push_back(std::move(r));
      else if (it->second > 0)
        pos.push_back(std::move(r));
      else
        neg.push_back(std::move(r));
    }
    rows = std::move(zero);
    for (const auto& p : pos)
      for (const auto& n : neg) {
        Rat a = p.coeffs.at(v);     // > 0
        Rat c = -n.coeffs.at(v);    // > 0
        IneqRow comb = combineRows(p, c, n, a);
        comb.coeffs.erase(v);
        if (rowContradictory(comb)) {
          out.sat = false;
          out.cert = certOf(comb);
          return out;
        }
        if (!comb.coeffs.empty() || comb.strict || comb.bound < 0)
          rows.push_back(std::move(comb));
        if (rows.size() > rowCap) {
          out.overflow = true;
          return out;
        }
      }
    for (const auto& r : rows)
      if (rowContradictory(r)) {
        out.sat = false;
        out.cert = certOf(r);
        return out;
      }
  }

  for (const auto& r : rows)
    if (rowContradictory(r)) {
      out.sat = false;
      out.cert = certOf(r);
      return out;
    }

  // Satisfiable: back-substitute a witness, last eliminated variable first.
  out.sat = true;
  std::map<std::string, Rat> w;
  for (size_t k = order.size(); k-- > 0;) {
    const std::string& v = order[k];
    std::optional<Rat> lo, hi;
    bool loStrict = false, hiStrict = false;
    for (const auto& r : stages[k]) {
      auto it = r.coeffs.find(v);
      if (it == r.coeffs.end()) continue;
      // a*v + rest <= bound, with later variables already assigned.
      Rat rest = -r.bound;
      for (const auto& [u, c] : r.coeffs) {
        if (u == v) continue;
        auto wu = w.find(u);
        assert(wu != w.end());
        rest += c * wu->second;
      }
      // a*v <= -rest  (rest currently holds sum - bound)
      Rat a = it->second;
      Rat b = -rest / a;
      if (a > 0) {
        if (!hi || b < *hi || (b == *hi && r.strict)) {
          hi = b;
          hiStrict = r.strict;
        }
      } else {
        if (!lo || b > *lo || (b == *lo && r.strict)) {
          lo = b;
          loStrict = r.strict;
        }
      }
    }
    Rat val;
    if (lo && hi) {
      if (*lo == *hi)
        val = *lo;  // both non-strict by FM soundness
      else
        val = (*lo + *hi) / 2;
    } else if (lo) {
      val = loStrict ? *lo + 1 : *lo;
    } else if (hi) {
      val = hiStrict ? *hi - 1 : *hi;
    } else {
      val = 0;
    }
    w[v] = val;
  }
  out.witness = std::move(w);
  return out;
}

// ---------------------------------------------------------------------------
// Exact rational simplex (general simplex with bounds and delta-rationals).

struct DeltaRat {
  Rat v = 0, d = 0;
  DeltaRat() = default;
  DeltaRat(Rat a, Rat b) : v(std::move(a)), d(std::move(b)) {}
  bool operator<(const DeltaRat& o) const {
    return v != o.v ? v < o.v : d < o.d;
  }
  bool operator==(const DeltaRat& o) const { return v == o.v && d == o.d; }
  bool operator<=(const DeltaRat& o) const { return *this < o || *this == o; }
  DeltaRat operator+(const DeltaRat& o) const { return {v + o.v, d + o.d}; }
  DeltaRat operator-(const DeltaRat& o) const { return {v - o.v, d - o.d}; }
  DeltaRat scaled(const Rat& k) const { return {v * k, d * k}; }
};

struct Bound {
  DeltaRat val;
  size_t row;
  bool negDir;
};

struct Simplex {
  // Variables 0..nVars-1 are problem variables, the rest slacks.
  size_t nProblem = 0;
  std::vector<std::string> names;
  std::vector<std::optional<Bound>> lower, upper;
  std::vector<DeltaRat> beta;
  // tableau: for each basic var, its expression over nonbasic vars.
  std::map<size_t, std::map<size_t, Rat>> tableau;  // basic -> (var -> coeff)
  std::vector<bool> isBasic;

  FarkasCert conflict;
  bool unsat = false;

  void addBound(size_t var, bool isLower, const DeltaRat& val, size_t row,
                bool negDir) {
    auto& slot = isLower ? lower[var] : upper[var];
    bool tighter = !slot || (isLower ? slot->val < val : val < slot->val);
    if (tighter) slot = Bound{val, row, negDir};
  }

  DeltaRat rowValue(const std::map<size_t, Rat>& expr) const {
    DeltaRat s;
    for (const auto& [j, c] : expr) s = s + beta[j].scaled(c);
    return s;
  }

  void pivot(size_t bi, size_t nj) {
    auto expr = tableau[bi];
    Rat a = expr[nj];
    // nj = (bi - sum_{k != nj} expr_k x_k) / a
    std::map<size_t, Rat> njExpr;
    njExpr[bi] = Rat(1) / a;
    for (const auto& [k, c] : expr)
      if (k != nj) {
        Rat nc = -c / a;
        if (nc != 0) njExpr[k] = nc;
      }
    tableau.erase(bi);
    isBasic[bi] = false;
    isBasic[nj] = true;
    // substitute nj in all other rows
    for (auto& [b, e] : tableau) {
      auto it = e.find(nj);
      if (it == e.end()) continue;
      Rat k = it->second;
      e.erase(it);
      for (const auto& [u, c] : njExpr) {
        e[u] += k * c;
        if (e[u] == 0) e.erase(u);
      }
    }
    tableau[nj] = std::move(njExpr);
  }

  void update(size_t nonbasic, const DeltaRat& val) {
    DeltaRat delta = val - beta[nonbasic];
    beta[nonbasic] = val;
    for (const auto& [b, e] : tableau) {
      auto it = e.find(nonbasic);
      if (it != e.end()) beta[b] = beta[b] + delta.scaled(it->second);
    }
  }

  void pivotAndUpdate(size_t bi, size_t nj, const DeltaRat& val) {
    Rat a = tableau[bi].at(nj);
    DeltaRat theta = (val - beta[bi]).scaled(Rat(1) / a);
    beta[bi] = val;
    beta[nj] = beta[nj] + theta;
    for (const auto& [b, e] : tableau) {
      if (b == bi) continue;
      auto it = e.find(nj);
      if (it != e.end()) beta[b] = beta[b] + theta.scaled(it->second);
    }
    pivot(bi, nj);
  }

  void makeConflict(size_t bi, bool violatedLower) {
    // basic bi violates a bound and no pivot column exists.
    FarkasCert c;
    const auto& expr = tableau[bi];
    auto addEntry = [&c](const Bound& b, const Rat& lam, bool lowerSide) {
      // lower bound of v: (-form <= -val) is the negDir side of its row when
      // the row stored the <= direction, encoded by b.negDir already.
      c.entries.push_back({b.row, b.negDir, lam});
      (void)lowerSide;
    };
    if (violatedLower) {
      addEntry(*lower[bi], 1, true);
      for (const auto& [j, a] : expr) {
        if (a > 0)
          addEntry(*upper[j], a, false);
        else
          addEntry(*lower[j], -a, true);
      }
    } else {
      addEntry(*upper[bi], 1, false);
      for (const auto& [j, a] : expr) {
        if (a > 0)
          addEntry(*lower[j], a, true);
        else
          addEntry(*upper[j], -a, false);
      }
    }
    // merge duplicate entries
    std::map<std::pair<size_t, bool>, Rat> merged;
    for (const auto& e : c.entries) merged[{e.row, e.negDir}] += e.lam;
    conflict.entries.clear();
    for (const auto& [k, l] : merged)
      if (l != 0) conflict.entries.push_back({k.first, k.second, l});
    unsat = true;
  }

  bool check() {
    for (;;) {
      // smallest violating basic (Bland)
      size_t bi = SIZE_MAX;
      bool violLower = false;
      for (const auto& [b, e] : tableau) {
        if (lower[b] && beta[b] < lower[b]->val) {
          if (b < bi) {
            bi = b;
            violLower = true;
          }
        } else if (upper[b] && upper[b]->val < beta[b]) {
          if (b < bi) {
            bi = b;
            violLower = false;
          }
        }
      }
      if (bi == SIZE_MAX) return true;
      const auto& expr = tableau[bi];
      size_t nj = SIZE_MAX;
      if (violLower) {
        for (const auto& [j, a] : expr) {
          bool can = (a > 0 && (!upper[j] || beta[j] < upper[j]->val)) ||
                     (a < 0 && (!lower[j] || lower[j]->val < beta[j]));
          if (can && j < nj) nj = j;
        }
        if (nj == SIZE_MAX) {
          makeConflict(bi, true);
          return false;
        }
        pivotAndUpdate(bi, nj, lower[bi]->val);
      } else {
        // decrease bi: a>0 needs x_j above its lower, a<0 below its upper
        for (const auto& [j, a] : expr) {
          bool can = (a > 0 && (!lower[j] || lower[j]->val < beta[j])) ||
                     (a < 0 && (!upper[j] || beta[j] < upper[j]->val));
          if (can && j < nj) nj = j;
        }
        if (nj == SIZE_MAX) {
          makeConflict(bi, false);
          return false;
        }
        pivotAndUpdate(bi, nj, upper[bi]->val);
      }
    }
  }
};

SatResult simplexSat(const LinSystem& sys) {
  SatResult res;
  Simplex sx;
  std::map<std::string, size_t> varIdx;
  std::set<std::string> vs = sys.vars();
  for (const auto& v : vs) {
    varIdx[v] = sx.names.size();
    sx.names.push_back(v);
  }
  sx.nProblem = sx.names.size();
  size_t total = sx.nProblem + sys.rows.size();
  sx.lower.resize(total);
  sx.upper.resize(total);
  sx.beta.resize(total);
  sx.isBasic.assign(total, false);

  for (size_t i = 0; i < sys.rows.size(); ++i) {
    const DataAtom& a = sys.rows[i];
    size_t sv = sx.nProblem + i;  // one slack per row
    std::map<size_t, Rat> expr;
    for (const auto& [v, c] : a.coeffs) expr[varIdx[v]] = c;
    sx.tableau[sv] = std::move(expr);
    sx.isBasic[sv] = true;
    switch (a.rel) {
      case Rel::Le:
        sx.addBound(sv, false, {a.bound, 0}, i, false);
        break;
      case Rel::Lt:
        sx.addBound(sv, false, {a.bound, -1}, i, false);
        break;
      case Rel::Eq:
        sx.addBound(sv, false, {a.bound, 0}, i, false);
        sx.addBound(sv, true, {a.bound, 0}, i, true);
        break;
    }
  }
  // initialize nonbasic assignment within bounds (all problem vars free -> 0)
  for (auto& [b, e] : sx.tableau) sx.beta[b] = sx.rowValue(e);

  if (!sx.check()) {
    res.sat = false;
    res.cert = sx.conflict;
    return res;
  }

  // materialize delta
  Rat delta = 1;
  auto evalRow = [&](const DataAtom& a) {
    DeltaRat s;
    for (const auto& [v, c] : a.coeffs) s = s + sx.beta[varIdx[v]].scaled(c);
    return s;
  };
  for (const auto& a : sys.rows) {
    DeltaRat s = evalRow(a);
    // need s.v + s.d*delta REL bound
    if (s.d > 0) {
      Rat room = (a.bound - s.v) / s.d;
      if (room <= 0) room = 1;  // s.d>0 with no room cannot happen when sat
      if (room / 2 < delta) delta = room / 2;
      if (delta <= 0) delta = room / 2;
    }
  }
  if (delta <= 0) delta = Rat(1, 2);
  for (size_t j = 0; j < sx.nProblem; ++j)
    res.witness[sx.names[j]] = sx.beta[j].v + sx.beta[j].d * delta;
  res.sat = true;
  return res;
}

bool witnessSatisfies(const LinSystem& sys,
                      const std::map<std::string, Rat>& w) {
  for (const auto& a : sys.rows) {
    Rat s = 0;
    for (const auto& [v, c] : a.coeffs) {
      auto it = w.find(v);
      Rat val = it == w.end() ? Rat(0) : it->second;
      s += c * val;
    }
    switch (a.rel) {
      case Rel::Le:
        if (!(s <= a.bound)) return false;
        break;
      case Rel::Lt:
        if (!(s < a.bound)) return false;
        break;
      case Rel::Eq:
        if (!(s == a.bound)) return false;
        break;
    }
  }
  return true;
}

}  // namespace

std::set<std::string> LinSystem::vars() const {
  std::set<std::string> out;
  for (const auto& r : rows) r.collectVars(out);
  return out;
}

std::string LinSystem::show() const {
  std::ostringstream os;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i) os << " && ";
    os << rows[i].show();
  }
  return os.str();
}

bool FarkasCert::verify(const LinSystem& sys) const {
  if (entries.empty()) return false;
  std::map<std::string, Rat> coeffs;
  Rat c = 0;
  bool strictUsed = false;
  for (const auto& e : entries) {
    if (e.lam < 0) return false;
    if (e.lam == 0) continue;
    if (e.row >= sys.rows.size()) return false;
    const DataAtom& a = sys.rows[e.row];
    if (e.negDir && a.rel != Rel::Eq) return false;
    Rat sign = e.negDir ? Rat(-1) : Rat(1);
    for (const auto& [v, k] : a.coeffs) {
      coeffs[v] += e.lam * sign * k;
      if (coeffs[v] == 0) coeffs.erase(v);
    }
    c += e.lam * sign * a.bound;
    if (a.rel == Rel::Lt) strictUsed = true;
  }
  if (!coeffs.empty()) return false;
  return c < 0 || (c <= 0 && strictUsed);
}

SatResult isSat(const LinSystem& sys) {
  // quick scan for trivially contradictory constant rows
  for (size_t i = 0; i < sys.rows.size(); ++i) {
    const DataAtom& a = sys.rows[i];
    if (a.trivial() && !a.trivialHolds()) {
      SatResult r;
      r.sat = false;
      if (a.rel == Rel::Eq)
        r.cert.entries.push_back({i, a.bound > 0, 1});
      else
        r.cert.entries.push_back({i, false, 1});
      assert(r.cert.verify(sys));
      return r;
    }
  }
  size_t nv = sys.vars().size();
  SatResult res;
  if (nv <= 6 && !g_forceSimplex) {
    FMOutcome fm = fourierMotzkin(sys, 50000);
    if (!fm.overflow) {
      res.sat = fm.sat;
      res.witness = std::move(fm.witness);
      res.cert = std::move(fm.cert);
      if (res.sat)
        assert(witnessSatisfies(sys, res.witness));
      else
        assert(res.cert.verify(sys));
      return res;
    }
  }
  res = simplexSat(sys);
  if (res.sat)
    assert(witnessSatisfies(sys, res.witness));
  else
    assert(res.cert.verify(sys));
  return res;
}

bool entails(const DataFormula& phi, const DataFormula& psi) {
  DataFormula q = DataFormula::conj({phi, psi.complement()});
  for (const auto& branch : q.dnf()) {
    LinSystem sys(branch);
    if (isSat(sys).sat) return false;
  }
  return true;
}

DataFormula eliminate(const std::set<std::string>& vars,
                      const DataFormula& phi, size_t rowCap) {
  if (vars.empty()) return phi;
  std::vector<DataFormula> branches;
  for (const auto& branch : phi.dnf()) {
    // project this conjunction
    std::vector<IneqRow> rows = expandRows(LinSystem(branch));
    bool contradictory = false;
    for (const auto& v : vars) {
      std::vector<IneqRow> pos, neg, keep;
      for (auto& r : rows) {
        auto it = r.coeffs.find(v);
        if (it == r.coeffs.end())
          keep.push_back(std::move(r));
        else if (it->second > 0)
          pos.push_back(std::move(r));
        else
          neg.push_back(std::move(r));
      }
      rows = std::move(keep);
      for (const auto& p : pos)
        for (const auto& n : neg) {
          Rat a = p.coeffs.at(v), c = -n.coeffs.at(v);
          IneqRow comb = combineRows(p, c, n, a);
          comb.coeffs.erase(v);
          if (rowContradictory(comb)) contradictory = true;
          if (!comb.coeffs.empty() || comb.strict || comb.bound < 0)
            rows.push_back(std::move(comb));
          if (rows.size() > rowCap)
            throw SizeBudgetExceeded("eliminate row cap exceeded");
        }
      if (contradictory) break;
    }
    if (contradictory) continue;
    bool bad = false;
    std::set<DataAtom> atoms;
    for (const auto& r : rows) {
      if (rowContradictory(r)) {
        bad = true;
        break;
      }
      if (r.coeffs.empty()) continue;  // trivially true
      DataAtom a;
      a.coeffs = r.coeffs;
      a.bound = r.bound;
      a.rel = r.strict ? Rel::Lt : Rel::Le;
      atoms.insert(a);
    }
    if (bad) continue;
    // re-pair x <= b with -x <= -b into equalities for readability
    std::vector<DataFormula> conjs;
    std::set<DataAtom> used;
    for (const auto& a : atoms) {
      if (used.count(a)) continue;
      if (a.rel == Rel::Le) {
        DataAtom mir;
        for (const auto& [v, c] : a.coeffs) mir.coeffs[v] = -c;
        mir.bound = -a.bound;
        mir.rel = Rel::Le;
        if (atoms.count(mir) && !used.count(mir)) {
          DataAtom eq = a;
          eq.rel = Rel::Eq;
          conjs.push_back(DataFormula::atom(eq));
          used.insert(a);
          used.insert(mir);
          continue;
        }
      }
      conjs.push_back(DataFormula::atom(a));
      used.insert(a);
    }
    branches.push_back(DataFormula::conj(std::move(conjs)));
  }
  return DataFormula::disj(std::move(branches));
}

DataFormula interpolate(const LinSystem& a, const LinSystem& b) {
  LinSystem joint;
  joint.rows = a.rows;
  joint.rows.insert(joint.rows.end(), b.rows.begin(), b.rows.end());
  if (g_trace) {
    *g_trace << "(interpolate\n  (A " << a.show() << ")\n  (B " << b.show()
             << "))\n";
  }
  SatResult r = isSat(joint);
  if (r.sat) throw NotJointlyUnsat();

  // Sparsity pass: greedily drop support rows and re-solve (kept when the
  // remaining system is still unsatisfiable). Fewer nonzero coefficients
  // generalize better.
  FarkasCert cert = r.cert;
  bool improved = true;
  std::set<size_t> removed;
  while (improved) {
    improved = false;
    std::set<size_t> support;
    for (const auto& e : cert.entries) support.insert(e.row);
    for (size_t drop : support) {
      if (removed.count(drop)) continue;
      LinSystem sub;
      std::vector<size_t> back;  // sub row -> joint row
      for (size_t i = 0; i < joint.rows.size(); ++i) {
        if (i == drop || removed.count(i)) continue;
        sub.rows.push_back(joint.rows[i]);
        back.push_back(i);
      }
      SatResult rr = isSat(sub);
      if (!rr.sat) {
        removed.insert(drop);
        cert.entries.clear();
        for (const auto& e : rr.cert.entries)
          cert.entries.push_back({back[e.row], e.negDir, e.lam});
        improved = true;
        break;
      }
    }
  }
  assert(cert.verify(joint));

  // Interpolant = A-part combination.
  std::map<std::string, Rat> coeffs;
  Rat bound = 0;
  bool strict = false;
  bool any = false;
  for (const auto& e : cert.entries) {
    if (e.row >= a.rows.size()) continue;  // B-side
    if (e.lam == 0) continue;
    any = true;
    const DataAtom& row = a.rows[e.row];
    Rat sign = e.negDir ? Rat(-1) : Rat(1);
    for (const auto& [v, c] : row.coeffs) {
      coeffs[v] += e.lam * sign * c;
      if (coeffs[v] == 0) coeffs.erase(v);
    }
    bound += e.lam * sign * row.bound;
    if (row.rel == Rel::Lt) strict = true;
  }
  DataFormula itp;
  if (!any) {
    itp = DataFormula::top();
  } else {
    DataAtom atom;
    atom.coeffs = coeffs;
    atom.bound = bound;
    atom.rel = strict ? Rel::Lt : Rel::Le;
    itp = DataFormula::atom(atom);
  }

  // Contract checks, on every call.
  std::vector<DataFormula> aConj, bConj;
  for (const auto& row : a.rows) aConj.push_back(DataFormula::atom(row));
  for (const auto& row : b.rows) bConj.push_back(DataFormula::atom(row));
  DataFormula af = DataFormula::conj(aConj), bf = DataFormula::conj(bConj);
  assert(entails(af, itp));
  assert(entails(DataFormula::conj({itp, bf}), DataFormula::bottom()));
  {
    std::set<std::string> av, bv, iv;
    for (const auto& row : a.rows) row.collectVars(av);
    for (const auto& row : b.rows) row.collectVars(bv);
    itp.collectVars(iv);
    for (const auto& v : iv) assert(av.count(v) && bv.count(v));
  }
  if (g_trace) *g_trace << "(result " << itp.show() << ")\n";
  return itp;
}

void setSolverTrace(std::ostream* sink) { g_trace = sink; }
void forceSimplexForTests(bool on) { g_forceSimplex = on; }

}  // namespace splinter
