// Independent validation of proof objects: every node is re-checked against
// its rule's side conditions using only saturation and the arithmetic
// engine. No code is shared with the proof search.

#include <algorithm>
#include <functional>
#include <sstream>

#include "splinter/entail.hpp"
#include "splinter/symexec.hpp"
#include "splinter/theory.hpp"

namespace splinter {

namespace {

CheckResult fail(const std::string& why) { return {false, why}; }
CheckResult ok() { return {}; }

SepFormula pureOnly(const Pure& p) {
  SepFormula f;
  f.pure = p;
  return f;
}

bool appSubset(const std::vector<QueryApp>& sub, const std::vector<QueryApp>& sup) {
  for (const auto& a : sub) {
    bool found = false;
    for (const auto& b : sup)
      if (a == b) found = true;
    if (!found) return false;
  }
  return true;
}

// Pi |= Pi' over pure parts alone.
bool pureEntails(const Pure& l, const Pure& r) {
  Saturation sat = saturate(pureOnly(l));
  for (const auto& [a, b] : r.eqs)
    if (!sat.provablyEq(a, b)) return false;
  for (const auto& [a, b] : r.neqs)
    if (!sat.provablyNeq(a, b)) return false;
  if (!r.data.isTrue() && !entails(l.data, r.data)) return false;
  if (!appSubset(r.apps, l.apps)) return false;
  return true;
}

std::string showSeq(const Sequent& s) {
  return s.lhs.show() + "  |-  " + s.rhs.show();
}

bool sameFormula(const SepFormula& a, const SepFormula& b) {
  return alphaEq(a, b);
}

std::vector<std::string> sortedAtoms(const SepFormula& f) {
  std::vector<std::string> v;
  for (const auto& h : f.spatial) v.push_back(showHeaplet(h));
  std::sort(v.begin(), v.end());
  return v;
}

bool refSlotEntails(const Pure& lhsPure, const RefTerm& tl, const RefTerm& tr) {
  if (tr.isTrivialTrue()) return true;
  if (tl.kind == RefTerm::Kind::Var || tr.kind == RefTerm::Kind::Var)
    return tl.show() == tr.show();
  if (!tl.body.apps.empty() || !tr.body.apps.empty())
    return tl.show() == tr.show();
  if (tl.params.size() != tr.params.size()) return false;
  DataFormula bl = tl.body.data, br = tr.body.data;
  for (size_t i = 0; i < tl.params.size(); ++i) {
    std::string shared = "#nu" + std::to_string(i);
    bl = bl.subst(tl.params[i], DataTerm::var(shared));
    br = br.subst(tr.params[i], DataTerm::var(shared));
  }
  return entails(DataFormula::conj({bl, lhsPure.data}), br);
}

struct Checker {
  const PredRegistry& reg;

  CheckResult node(const ProofTree& t) {
    switch (t.rule) {
      case Rule::Empty: {
        if (!t.premises.empty()) return fail("Empty with premises");
        if (!t.conclusion.lhs.spatial.empty() ||
            !t.conclusion.rhs.spatial.empty())
          return fail("Empty on non-empty spatial parts");
        if (!pureEntails(t.conclusion.lhs.pure, t.conclusion.rhs.pure))
          return fail("Empty: pure side condition: " + showSeq(t.conclusion));
        return ok();
      }
      case Rule::True: {
        if (!t.premises.empty()) return fail("True with premises");
        if (t.conclusion.rhs.spatial.size() != 1 ||
            !std::holds_alternative<TrueHeap>(t.conclusion.rhs.spatial[0]))
          return fail("True: consequent is not the true heaplet");
        if (!pureEntails(t.conclusion.lhs.pure, t.conclusion.rhs.pure))
          return fail("True: pure side condition");
        return ok();
      }
      case Rule::PointsTo: {
        if (!t.premises.empty()) return fail("Points-to with premises");
        const auto* l = t.conclusion.lhs.spatial.size() == 1
                            ? std::get_if<PointsTo>(&t.conclusion.lhs.spatial[0])
                            : nullptr;
        const auto* r = t.conclusion.rhs.spatial.size() == 1
                            ? std::get_if<PointsTo>(&t.conclusion.rhs.spatial[0])
                            : nullptr;
        if (!l || !r) return fail("Points-to: not single cells");
        if (!(l->addr == r->addr)) return fail("Points-to: address mismatch");
        if (l->succ.size() != r->succ.size() || l->data.size() != r->data.size())
          return fail("Points-to: arity mismatch");
        for (size_t i = 0; i < l->succ.size(); ++i)
          if (!(l->succ[i] == r->succ[i]))
            return fail("Points-to: successor mismatch");
        bool erased = isErased(t.conclusion.lhs) && isErased(t.conclusion.rhs);
        for (size_t i = 0; i < l->data.size(); ++i) {
          if (l->data[i] == r->data[i]) continue;
          bool wild = std::find(t.wildDataPositions.begin(),
                                t.wildDataPositions.end(),
                                i) != t.wildDataPositions.end();
          if (!wild) return fail("Points-to: data mismatch");
          if (erased) continue;  // erased fragment: fields carry no meaning
          // otherwise the antecedent must entail the equality
          if (!entails(t.conclusion.lhs.pure.data,
                       atomEq(l->data[i], r->data[i])))
            return fail("Points-to: data fields not provably equal");
        }
        if (!pureEntails(t.conclusion.lhs.pure, t.conclusion.rhs.pure))
          return fail("Points-to: pure side condition");
        return ok();
      }
      case Rule::Predicate: {
        if (!t.premises.empty()) return fail("Predicate with premises");
        const auto* l = t.conclusion.lhs.spatial.size() == 1
                            ? std::get_if<PredApp>(&t.conclusion.lhs.spatial[0])
                            : nullptr;
        const auto* r = t.conclusion.rhs.spatial.size() == 1
                            ? std::get_if<PredApp>(&t.conclusion.rhs.spatial[0])
                            : nullptr;
        if (!l || !r) return fail("Predicate: not single applications");
        if (l->pred != r->pred || l->args.size() != r->args.size())
          return fail("Predicate: head mismatch");
        for (size_t i = 0; i < l->args.size(); ++i)
          if (!(l->args[i] == r->args[i]))
            return fail("Predicate: argument mismatch");
        if (l->refs.size() != r->refs.size())
          return fail("Predicate: refinement arity");
        for (size_t i = 0; i < l->refs.size(); ++i)
          if (!refSlotEntails(t.conclusion.lhs.pure, l->refs[i], r->refs[i]))
            return fail("Predicate: refinement entailment fails");
        if (!pureEntails(t.conclusion.lhs.pure, t.conclusion.rhs.pure))
          return fail("Predicate: pure side condition");
        return ok();
      }
      case Rule::Inconsistent: {
        if (!t.premises.empty()) return fail("Inconsistent with premises");
        if (!isInconsistent(t.conclusion.lhs))
          return fail("Inconsistent: antecedent is satisfiable-looking");
        return ok();
      }
      case Rule::Star: {
        if (t.premises.empty()) return fail("Star without premises");
        std::vector<std::string> lparts, rparts;
        for (const auto& p : t.premises) {
          if (!(p.conclusion.lhs.pure.show() == t.conclusion.lhs.pure.show()))
            return fail("Star: antecedent pure changed");
          if (!(p.conclusion.rhs.pure.show() == t.conclusion.rhs.pure.show()))
            return fail("Star: consequent pure changed");
          for (const auto& h : p.conclusion.lhs.spatial)
            lparts.push_back(showHeaplet(h));
          for (const auto& h : p.conclusion.rhs.spatial)
            rparts.push_back(showHeaplet(h));
          CheckResult sub = node(p);
          if (!sub.ok) return sub;
        }
        std::sort(lparts.begin(), lparts.end());
        std::sort(rparts.begin(), rparts.end());
        if (lparts != sortedAtoms(t.conclusion.lhs))
          return fail("Star: antecedent heaplets not partitioned");
        if (rparts != sortedAtoms(t.conclusion.rhs))
          return fail("Star: consequent heaplets not partitioned");
        return ok();
      }
      case Rule::Substitution: {
        if (t.premises.size() != 1) return fail("Substitution premises");
        // side condition: antecedent pure entails var == term
        if (t.substIsHeap) {
          Saturation sat = saturate(pureOnly(t.conclusion.lhs.pure));
          if (!sat.provablyEq(HeapTerm::var(t.substVar), t.substHeap))
            return fail("Substitution: equality not entailed");
        } else {
          if (!entails(t.conclusion.lhs.pure.data,
                       atomEq(DataTerm::var(t.substVar), t.substData)))
            return fail("Substitution: data equality not entailed");
        }
        SepFormula el =
            t.substIsHeap ? substHeap(t.conclusion.lhs, t.substVar, t.substHeap)
                          : substData(t.conclusion.lhs, t.substVar, t.substData);
        SepFormula er = t.conclusion.rhs;
        if (!er.isBound(t.substVar))
          er = t.substIsHeap ? substHeap(er, t.substVar, t.substHeap)
                             : substData(er, t.substVar, t.substData);
        if (!sameFormula(el, t.premises[0].conclusion.lhs))
          return fail("Substitution: premise antecedent mismatch");
        if (!sameFormula(er, t.premises[0].conclusion.rhs))
          return fail("Substitution: premise consequent mismatch");
        return node(t.premises[0]);
      }
      case Rule::ExistsLeft: {
        if (t.premises.size() != 1) return fail("Exists-left premises");
        bool found = false;
        for (const auto& b : t.conclusion.lhs.exists)
          if (b.name == t.elOld) found = true;
        if (!found) return fail("Exists-left: no such binder");
        std::map<std::string, VarKind> fv = freeVars(t.conclusion.lhs);
        std::map<std::string, VarKind> fv2 = freeVars(t.conclusion.rhs);
        if (fv.count(t.elNew) || fv2.count(t.elNew))
          return fail("Exists-left: renamed variable not fresh");
        SepFormula renamed = renameBound(t.conclusion.lhs, t.elOld, t.elNew);
        // drop the binder
        SepFormula expected = renamed;
        expected.exists.erase(
            std::remove_if(expected.exists.begin(), expected.exists.end(),
                           [&](const BoundVar& b) { return b.name == t.elNew; }),
            expected.exists.end());
        if (!sameFormula(expected, t.premises[0].conclusion.lhs))
          return fail("Exists-left: premise mismatch");
        if (!sameFormula(t.conclusion.rhs, t.premises[0].conclusion.rhs))
          return fail("Exists-left: consequent changed");
        return node(t.premises[0]);
      }
      case Rule::ExistsRight: {
        if (t.premises.size() != 1) return fail("Exists-right premises");
        if (t.conclusion.rhs.exists.empty() ||
            t.conclusion.rhs.exists.front().name != t.exVar)
          return fail("Exists-right: binder mismatch");
        SepFormula inst = t.conclusion.rhs;
        inst.exists.erase(inst.exists.begin());
        inst = t.exIsHeap ? substHeap(inst, t.exVar, t.exHeapWitness)
                          : substData(inst, t.exVar, t.exDataWitness);
        if (!sameFormula(inst, t.premises[0].conclusion.rhs))
          return fail("Exists-right: premise mismatch");
        if (!sameFormula(t.conclusion.lhs, t.premises[0].conclusion.lhs))
          return fail("Exists-right: antecedent changed");
        return node(t.premises[0]);
      }
      case Rule::NullNotLval: {
        if (t.premises.size() != 1) return fail("null-not-Lval premises");
        if (t.atomIndex >= t.conclusion.lhs.spatial.size())
          return fail("null-not-Lval: bad index");
        const auto* c = std::get_if<PointsTo>(
            &t.conclusion.lhs.spatial[t.atomIndex]);
        if (!c) return fail("null-not-Lval: not a cell");
        SepFormula expected = t.conclusion.lhs;
        expected.pure.addNeq(c->addr, HeapTerm::null());
        if (!sameFormula(expected, t.premises[0].conclusion.lhs))
          return fail("null-not-Lval: premise mismatch");
        if (!sameFormula(t.conclusion.rhs, t.premises[0].conclusion.rhs))
          return fail("null-not-Lval: consequent changed");
        return node(t.premises[0]);
      }
      case Rule::StarPartial: {
        if (t.premises.size() != 1) return fail("*-Partial premises");
        size_t i = t.atomIndex;
        size_t j = static_cast<size_t>(t.caseIndex);
        if (i >= t.conclusion.lhs.spatial.size() ||
            j >= t.conclusion.lhs.spatial.size() || i == j)
          return fail("*-Partial: bad indices");
        const auto* a = std::get_if<PointsTo>(&t.conclusion.lhs.spatial[i]);
        const auto* b = std::get_if<PointsTo>(&t.conclusion.lhs.spatial[j]);
        if (!a || !b) return fail("*-Partial: not cells");
        SepFormula expected = t.conclusion.lhs;
        expected.pure.addNeq(a->addr, b->addr);
        if (!sameFormula(expected, t.premises[0].conclusion.lhs))
          return fail("*-Partial: premise mismatch");
        if (!sameFormula(t.conclusion.rhs, t.premises[0].conclusion.rhs))
          return fail("*-Partial: consequent changed");
        return node(t.premises[0]);
      }
      case Rule::Fold: {
        if (t.premises.size() != 1) return fail("Fold premises");
        if (t.atomIndex >= t.conclusion.rhs.spatial.size())
          return fail("Fold: bad index");
        const auto* z =
            std::get_if<PredApp>(&t.conclusion.rhs.spatial[t.atomIndex]);
        if (!z) return fail("Fold: not a predicate");
        std::vector<SepFormula> cases;
        try {
          cases = unfoldCases(reg, z->pred, z->refs, z->args);
        } catch (const std::exception& e) {
          return fail(std::string("Fold: ") + e.what());
        }
        if (t.caseIndex < 0 || t.caseIndex >= static_cast<int>(cases.size()))
          return fail("Fold: bad case");
        SepFormula cs = cases[static_cast<size_t>(t.caseIndex)];
        SepFormula expected = t.conclusion.rhs;
        expected.spatial.erase(expected.spatial.begin() +
                               static_cast<long>(t.atomIndex));
        std::set<std::string> avoid;
        for (const auto& [v, k] : allVars(expected)) avoid.insert(v);
        for (const auto& [v, k] : allVars(t.conclusion.lhs)) avoid.insert(v);
        cs = avoidBound(cs, avoid);
        expected.pure.conjoin(SepFormula{{}, cs.pure, {}}.pure);
        for (const auto& h : cs.spatial) expected.spatial.push_back(h);
        for (const auto& b : cs.exists) expected.exists.push_back(b);
        if (!sameFormula(expected, t.premises[0].conclusion.rhs))
          return fail("Fold: premise mismatch");
        if (!sameFormula(t.conclusion.lhs, t.premises[0].conclusion.lhs))
          return fail("Fold: antecedent changed");
        return node(t.premises[0]);
      }
      case Rule::Unfold: {
        if (t.atomIndex >= t.conclusion.lhs.spatial.size())
          return fail("Unfold: bad index");
        const auto* z =
            std::get_if<PredApp>(&t.conclusion.lhs.spatial[t.atomIndex]);
        if (!z) return fail("Unfold: not a predicate");
        std::vector<SepFormula> cases;
        try {
          cases = unfoldCases(reg, z->pred, z->refs, z->args);
        } catch (const std::exception& e) {
          return fail(std::string("Unfold: ") + e.what());
        }
        if (t.premises.size() != cases.size())
          return fail("Unfold: premise per case required");
        for (size_t ci = 0; ci < cases.size(); ++ci) {
          SepFormula expected = t.conclusion.lhs;
          expected.spatial.erase(expected.spatial.begin() +
                                 static_cast<long>(t.atomIndex));
          SepFormula cs = cases[ci];
          std::set<std::string> avoid;
          for (const auto& [v, k] : allVars(expected)) avoid.insert(v);
          for (const auto& [v, k] : allVars(t.conclusion.rhs)) avoid.insert(v);
          cs = avoidBound(cs, avoid);
          expected.pure.conjoin(cs.pure);
          for (const auto& h : cs.spatial) expected.spatial.push_back(h);
          for (const auto& b : cs.exists) expected.exists.push_back(b);
          if (!sameFormula(expected, t.premises[ci].conclusion.lhs))
            return fail("Unfold: premise mismatch for case " +
                        std::to_string(ci));
          if (!sameFormula(t.conclusion.rhs, t.premises[ci].conclusion.rhs))
            return fail("Unfold: consequent changed");
          CheckResult sub = node(t.premises[ci]);
          if (!sub.ok) return sub;
        }
        return ok();
      }
    }
    return fail("unknown rule");
  }
};

}  // namespace

CheckResult checkProofTree(const PredRegistry& reg, const ProofTree& t) {
  Checker c{reg};
  return c.node(t);
}

CheckResult checkHoareStep(const PredRegistry& reg, const HoareStep& s) {
  if (s.exposureNeeded) {
    if (!alphaEq(s.exposure.conclusion.lhs, s.pre) ||
        !alphaEq(s.exposure.conclusion.rhs, s.exposedPre))
      return fail("exposure proof proves the wrong sequent");
    CheckResult ex = checkProofTree(reg, s.exposure);
    if (!ex.ok) return ex;
  } else if (!alphaEq(s.exposedPre, s.pre)) {
    return fail("exposed precondition differs without a proof");
  }
  auto sp = execCmd(s.cmd, s.exposedPre);
  if (!sp) return fail("command undefined on the exposed precondition");
  if (!alphaEq(*sp, s.strongestPost))
    return fail("strongest post does not match the rule output");
  if (!alphaEq(s.consequence.conclusion.lhs, s.strongestPost) ||
      !alphaEq(s.consequence.conclusion.rhs, s.post))
    return fail("consequence proof proves the wrong sequent");
  return checkProofTree(reg, s.consequence);
}

// ---------------------------------------------------------------------------
// bounded models

std::string BoundedModel::show() const {
  std::ostringstream os;
  os << "stack:";
  for (const auto& [v, l] : heapVars) os << " " << v << "=" << (l ? "l" + std::to_string(l) : "null");
  for (const auto& [v, r] : dataVars) os << " " << v << "=" << showRat(r);
  os << " heap:";
  for (const auto& [l, rec] : cells) {
    os << " l" << l << "->[";
    for (size_t i = 0; i < rec.first.size(); ++i)
      os << (i ? "," : "") << showRat(rec.first[i]);
    os << ";";
    for (size_t i = 0; i < rec.second.size(); ++i)
      os << (i ? "," : "")
         << (rec.second[i] ? "l" + std::to_string(rec.second[i]) : "null");
    os << "]";
  }
  return os.str();
}

namespace {

struct Evaluator {
  const PredRegistry& reg;
  const BoundedModel& m;
  std::vector<Rat> grid;
  int unfoldFuel;

  // case instantiation is pure in the application; cache it across calls
  const std::vector<SepFormula>* casesOf(const PredApp& z) const {
    thread_local std::map<std::string, std::vector<SepFormula>> cache;
    std::string key = showHeaplet(Heaplet{z});
    auto it = cache.find(key);
    if (it != cache.end()) return &it->second;
    try {
      auto cs = unfoldCases(reg, z.pred, z.refs, z.args);
      return &cache.emplace(key, std::move(cs)).first->second;
    } catch (const std::exception&) {
      return nullptr;
    }
  }

  long heapVal(const HeapTerm& t, const std::map<std::string, long>& env) const {
    if (t.isNull()) return 0;
    auto it = env.find(t.name);
    if (it != env.end()) return it->second;
    auto jt = m.heapVars.find(t.name);
    return jt == m.heapVars.end() ? 0 : jt->second;
  }

  Rat dataVal(const DataTerm& t, const std::map<std::string, Rat>& env) const {
    Rat s = t.constant;
    for (const auto& [v, c] : t.coeffs) {
      auto it = env.find(v);
      if (it != env.end()) {
        s += c * it->second;
        continue;
      }
      auto jt = m.dataVars.find(v);
      s += c * (jt == m.dataVars.end() ? Rat(0) : jt->second);
    }
    return s;
  }

  bool pureHolds(const Pure& p, const std::map<std::string, long>& henv,
                 const std::map<std::string, Rat>& denv) const {
    if (!p.apps.empty()) return false;  // evaluator handles reduced formulas
    for (const auto& [a, b] : p.eqs)
      if (heapVal(a, henv) != heapVal(b, henv)) return false;
    for (const auto& [a, b] : p.neqs)
      if (heapVal(a, henv) == heapVal(b, henv)) return false;
    std::map<std::string, Rat> full;
    for (const auto& [v, r] : m.dataVars) full[v] = r;
    for (const auto& [v, r] : denv) full[v] = r;
    DataFormula f = p.data;
    return evalDataFormula(f, full);
  }

  // cover the heap domain with the atoms
  bool cover(std::vector<Heaplet> atoms, std::set<long> dom,
             std::map<std::string, long> henv, std::map<std::string, Rat> denv,
             int fuel) const {
    if (fuel < 0) return false;
    if (atoms.empty()) return dom.empty();
    Heaplet h = atoms.back();
    atoms.pop_back();
    if (std::holds_alternative<TrueHeap>(h)) {
      // true absorbs any sub-heap: enumerate subsets
      std::vector<long> locs(dom.begin(), dom.end());
      size_t n = locs.size();
      for (size_t mask = 0; mask < (1u << n); ++mask) {
        std::set<long> rest;
        for (size_t i = 0; i < n; ++i)
          if (!(mask & (1u << i))) rest.insert(locs[i]);
        if (cover(atoms, rest, henv, denv, fuel)) return true;
      }
      return false;
    }
    if (const auto* p = std::get_if<PointsTo>(&h)) {
      long loc = heapVal(p->addr, henv);
      if (loc == 0 || !dom.count(loc)) return false;
      auto it = m.cells.find(loc);
      if (it == m.cells.end()) return false;
      const auto& rec = it->second;
      if (rec.first.size() != p->data.size() ||
          rec.second.size() != p->succ.size())
        return false;
      for (size_t i = 0; i < p->data.size(); ++i)
        if (dataVal(p->data[i], denv) != rec.first[i]) return false;
      for (size_t i = 0; i < p->succ.size(); ++i)
        if (heapVal(p->succ[i], henv) != rec.second[i]) return false;
      std::set<long> rest = dom;
      rest.erase(loc);
      return cover(atoms, rest, henv, denv, fuel);
    }
    const auto& z = std::get<PredApp>(h);
    const auto* casesPtr = casesOf(z);
    if (!casesPtr) return false;
    for (const auto& cs : *casesPtr) {
      // enumerate case binders, then require the case pure and recurse with
      // the case atoms appended
      std::function<bool(size_t, std::map<std::string, long>,
                         std::map<std::string, Rat>)>
          assign = [&](size_t bi, std::map<std::string, long> he,
                       std::map<std::string, Rat> de) -> bool {
        if (bi == cs.exists.size()) {
          if (!pureHolds(cs.pure, he, de)) return false;
          std::vector<Heaplet> next = atoms;
          for (const auto& hh : cs.spatial) next.push_back(hh);
          return cover(next, dom, he, de, fuel - 1);
        }
        const BoundVar& b = cs.exists[bi];
        if (b.kind == VarKind::Heap) {
          std::vector<long> cands = {0};
          for (const auto& [l, rec] : m.cells) cands.push_back(l);
          for (long c : cands) {
            auto he2 = he;
            he2[b.name] = c;
            if (assign(bi + 1, he2, de)) return true;
          }
          return false;
        }
        for (const auto& g : grid) {
          auto de2 = de;
          de2[b.name] = g;
          if (assign(bi + 1, he, de2)) return true;
        }
        return false;
      };
      if (assign(0, henv, denv)) return true;
    }
    return false;
  }
};

}  // namespace

bool boundedSat(const PredRegistry& reg, const SepFormula& f,
                const BoundedModel& m) {
  std::vector<Rat> grid;
  {
    std::set<Rat> g = {Rat(0)};
    for (const auto& [v, r] : m.dataVars) g.insert(r);
    for (const auto& [l, rec] : m.cells)
      for (const auto& r : rec.first) g.insert(r);
    grid.assign(g.begin(), g.end());
  }
  Evaluator ev{reg, m, grid, static_cast<int>(m.cells.size()) + 2};
  // outer binders: same enumeration as case binders
  std::function<bool(size_t, std::map<std::string, long>,
                     std::map<std::string, Rat>)>
      assign = [&](size_t bi, std::map<std::string, long> he,
                   std::map<std::string, Rat> de) -> bool {
    if (bi == f.exists.size()) {
      if (!ev.pureHolds(f.pure, he, de)) return false;
      std::set<long> dom;
      for (const auto& [l, rec] : m.cells) dom.insert(l);
      std::vector<Heaplet> atoms = f.spatial;
      std::reverse(atoms.begin(), atoms.end());
      return ev.cover(atoms, dom, he, de, ev.unfoldFuel + 4);
    }
    const BoundVar& b = f.exists[bi];
    if (b.kind == VarKind::Heap) {
      std::vector<long> cands = {0};
      for (const auto& [l, rec] : m.cells) cands.push_back(l);
      for (long c : cands) {
        auto he2 = he;
        he2[b.name] = c;
        if (assign(bi + 1, he2, de)) return true;
      }
      return false;
    }
    for (const auto& g : ev.grid) {
      auto de2 = de;
      de2[b.name] = g;
      if (assign(bi + 1, he, de2)) return true;
    }
    return false;
  };
  return assign(0, {}, {});
}

std::optional<BoundedModel> findCountermodel(const PredRegistry& reg,
                                             const SepFormula& p,
                                             const SepFormula& q, int heapBound,
                                             const std::vector<Rat>& gridIn) {
  // In the erased fragment data fields and data variables carry no meaning,
  // so a degenerate grid decides the same entailments much faster.
  std::vector<Rat> grid = gridIn;
  if (isErased(p) && isErased(q)) {
    bool constantField = false;
    auto scan = [&](const SepFormula& f) {
      for (const auto& h : f.spatial)
        if (const auto* c = std::get_if<PointsTo>(&h))
          for (const auto& d : c->data)
            if (!d.asVar().has_value()) constantField = true;
    };
    scan(p);
    scan(q);
    if (!constantField) grid = {Rat(0)};
  }
  // free variables of both formulas
  std::map<std::string, VarKind> fv = freeVars(p);
  for (const auto& [v, k] : freeVars(q)) fv.emplace(v, k);
  std::vector<std::string> hvars, dvars;
  for (const auto& [v, k] : fv)
    (k == VarKind::Heap ? hvars : dvars).push_back(v);

  // shape from the formulas (fall back to 1,1)
  size_t ndata = 1, nsucc = 1;
  bool sawCell = false;
  auto scanShape = [&](const SepFormula& f) {
    for (const auto& h : f.spatial)
      if (const auto* c = std::get_if<PointsTo>(&h)) {
        ndata = c->data.size();
        nsucc = c->succ.size();
        sawCell = true;
      }
  };
  scanShape(p);
  scanShape(q);
  if (!sawCell)
    for (const auto& [name, def] : reg.all()) {
      for (const auto& cs : def.cases)
        for (const auto& h : cs.spatial)
          if (const auto* c = std::get_if<PointsTo>(&h)) {
            ndata = c->data.size();
            nsucc = c->succ.size();
          }
      break;  // first registry entry decides the default
    }

  // exact cell count when P pins it
  bool pHasPred = false, pHasTrue = p.hasTrueHeaplet();
  for (const auto& h : p.spatial)
    if (std::holds_alternative<PredApp>(h)) pHasPred = true;
  size_t minCells = 0, maxCells = static_cast<size_t>(heapBound);
  if (!pHasPred && !pHasTrue) minCells = maxCells = p.cellCount();
  if (maxCells > static_cast<size_t>(heapBound)) return std::nullopt;

  BoundedModel m;
  // enumerate heap sizes, cell contents, then stacks
  std::function<std::optional<BoundedModel>(size_t)> withSize =
      [&](size_t ncells) -> std::optional<BoundedModel> {
    // cells at locations 1..ncells; enumerate record contents
    std::vector<long> locs;
    for (size_t i = 1; i <= ncells; ++i) locs.push_back(static_cast<long>(i));
    // each cell: data fields from grid, succ fields from locs+null
    size_t dChoices = 1, sChoices = 1;
    for (size_t i = 0; i < ndata; ++i) dChoices *= grid.size();
    for (size_t i = 0; i < nsucc; ++i) sChoices *= (ncells + 1);
    size_t perCell = dChoices * sChoices;
    size_t total = 1;
    for (size_t i = 0; i < ncells; ++i) {
      if (total > 2000000 / (perCell ? perCell : 1)) return std::nullopt;
      total *= perCell;
    }
    std::vector<size_t> cellIdx(ncells, 0);
    for (size_t iter = 0; iter < (total ? total : 1); ++iter) {
      BoundedModel cand;
      size_t rest = iter;
      for (size_t ci = 0; ci < ncells; ++ci) {
        size_t code = rest % perCell;
        rest /= perCell;
        std::vector<Rat> data;
        std::vector<long> succ;
        size_t dcode = code % dChoices;
        size_t scode = code / dChoices;
        for (size_t i = 0; i < ndata; ++i) {
          data.push_back(grid[dcode % grid.size()]);
          dcode /= grid.size();
        }
        for (size_t i = 0; i < nsucc; ++i) {
          size_t pick = scode % (ncells + 1);
          scode /= (ncells + 1);
          succ.push_back(pick == 0 ? 0 : locs[pick - 1]);
        }
        cand.cells[locs[ci]] = {data, succ};
      }
      // enumerate stacks
      size_t hChoices = ncells + 1;
      size_t hTotal = 1;
      for (size_t i = 0; i < hvars.size(); ++i) hTotal *= hChoices;
      size_t dTotal = 1;
      for (size_t i = 0; i < dvars.size(); ++i) dTotal *= grid.size();
      for (size_t hcode = 0; hcode < hTotal; ++hcode) {
        size_t hrest = hcode;
        for (size_t i = 0; i < hvars.size(); ++i) {
          size_t pick = hrest % hChoices;
          hrest /= hChoices;
          cand.heapVars[hvars[i]] = pick == 0 ? 0 : locs[pick - 1];
        }
        for (size_t dcode = 0; dcode < dTotal; ++dcode) {
          size_t drest = dcode;
          for (size_t i = 0; i < dvars.size(); ++i) {
            cand.dataVars[dvars[i]] = grid[drest % grid.size()];
            drest /= grid.size();
          }
          if (boundedSat(reg, p, cand) && !boundedSat(reg, q, cand))
            return cand;
        }
      }
    }
    return std::nullopt;
  };
  for (size_t n = minCells; n <= maxCells; ++n) {
    auto res = withSize(n);
    if (res) return res;
  }
  return std::nullopt;
}

}  // namespace splinter
