#include "splinter/entail.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "splinter/symexec.hpp"
#include "splinter/theory.hpp"

namespace splinter {

const char* ruleName(Rule r) {
  switch (r) {
    case Rule::Empty: return "Empty";
    case Rule::True: return "True";
    case Rule::PointsTo: return "Points-to";
    case Rule::Star: return "Star";
    case Rule::Substitution: return "Substitution";
    case Rule::ExistsLeft: return "Exists-left";
    case Rule::ExistsRight: return "Exists-right";
    case Rule::NullNotLval: return "null-not-Lval";
    case Rule::StarPartial: return "*-Partial";
    case Rule::Fold: return "Fold";
    case Rule::Unfold: return "Unfold";
    case Rule::Predicate: return "Predicate";
    case Rule::Inconsistent: return "Inconsistent";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// helpers

bool pureDataHolds(const DataFormula& lhs, const DataFormula& rhs) {
  if (rhs.isTrue()) return true;
  return entails(lhs, rhs);
}

// Instantiate case `ci` of a predicate application with given refs/args.
SepFormula instCase(const PredRegistry& reg, const PredApp& z, int ci) {
  auto cases = unfoldCases(reg, z.pred, z.refs, z.args);
  return cases[static_cast<size_t>(ci)];
}

// Replace lhs heaplet at `idx` by the instantiated case; case existentials
// hoist into the formula's binder list (renamed fresh).
SepFormula textUnfold(const PredRegistry& reg, const SepFormula& f, size_t idx,
                      int ci, std::vector<BoundVar>* introduced = nullptr) {
  const auto& z = std::get<PredApp>(f.spatial[idx]);
  SepFormula cs = instCase(reg, z, ci);
  std::set<std::string> avoid;
  for (const auto& [v, k] : allVars(f)) avoid.insert(v);
  cs = avoidBound(cs, avoid);
  SepFormula out = f;
  out.spatial.erase(out.spatial.begin() + static_cast<long>(idx));
  for (const auto& b : cs.exists) {
    out.exists.push_back(b);
    if (introduced) introduced->push_back(b);
  }
  out.pure.conjoin(cs.pure);
  for (const auto& h : cs.spatial) out.spatial.push_back(h);
  return out;
}

// Case selection info against a saturated antecedent.
struct CaseInfo {
  bool refuted = false;   // pure of the case contradicts the antecedent
  bool provable = false;  // pure of the case follows from the antecedent
};

CaseInfo caseInfo(const PredRegistry& reg, const Saturation& sat,
                  const DataFormula& lhsData, const PredApp& z, int ci) {
  CaseInfo info;
  SepFormula cs = instCase(reg, z, ci);
  // only the quantifier-free pure part of the case is decidable here
  bool allProvable = true;
  for (const auto& [a, b] : cs.pure.eqs) {
    bool bound = false;
    for (const auto& bv : cs.exists)
      if ((!a.isNull() && a.name == bv.name) || (!b.isNull() && b.name == bv.name))
        bound = true;
    if (bound) {
      allProvable = false;
      continue;
    }
    if (sat.provablyNeq(a, b)) info.refuted = true;
    if (!sat.provablyEq(a, b)) allProvable = false;
  }
  for (const auto& [a, b] : cs.pure.neqs) {
    bool bound = false;
    for (const auto& bv : cs.exists)
      if ((!a.isNull() && a.name == bv.name) || (!b.isNull() && b.name == bv.name))
        bound = true;
    if (bound) {
      allProvable = false;
      continue;
    }
    if (sat.provablyEq(a, b)) info.refuted = true;
    if (!sat.provablyNeq(a, b)) allProvable = false;
  }
  (void)lhsData;
  info.provable = allProvable && !info.refuted;
  return info;
}

// ---------------------------------------------------------------------------
// matcher

struct RAtom {
  int id;
  Heaplet h;
  int depth = 0;  // fold-chain depth from an original consequent atom
  bool done = false;
  enum class How { None, Cell, Pred, Folded, TrueAbsorb } how = How::None;
  int lhsIdx = -1;
  int caseIdx = -1;
  std::vector<int> kidIds;
  std::vector<size_t> wilds;
};

struct FoldRec {
  int rhsId;
  int caseIdx;
  std::vector<BoundVar> freshBinders;  // matcher names for the case binders
};

struct MatchState {
  // fixed
  const PredRegistry* reg = nullptr;
  ProveOptions opt;
  Pure lhsPure;
  std::vector<std::pair<int, Heaplet>> lhsAtoms;
  bool erasedMode = false;
  int maxDepth = 4;

  // mutable
  std::vector<bool> consumed;
  std::vector<RAtom> ratoms;
  std::map<std::string, VarKind> flexKind;
  std::map<std::string, HeapTerm> heapBind;
  std::map<std::string, DataTerm> dataBind;
  std::vector<std::pair<std::pair<HeapTerm, HeapTerm>, bool>> pureObl;
  std::vector<DataFormula> dataObl;
  std::vector<std::pair<RefTerm, RefTerm>> refObl;
  std::vector<FoldRec> foldLog;
  size_t* effort = nullptr;

  bool isFlex(const std::string& v) const { return flexKind.count(v) != 0; }

  HeapTerm resolveH(HeapTerm t) const {
    int guard = 0;
    while (!t.isNull() && guard++ < 64) {
      auto it = heapBind.find(t.name);
      if (it == heapBind.end()) break;
      t = it->second;
    }
    return t;
  }

  DataTerm resolveD(const DataTerm& t) const {
    DataTerm cur = t;
    for (int guard = 0; guard < 64; ++guard) {
      bool changed = false;
      for (const auto& [v, c] : cur.coeffs) {
        auto it = dataBind.find(v);
        if (it != dataBind.end()) {
          cur = cur.subst(v, it->second);
          changed = true;
          break;
        }
      }
      if (!changed) break;
    }
    return cur;
  }

  DataFormula resolveF(const DataFormula& f) const {
    DataFormula cur = f;
    std::set<std::string> vs = cur.vars();
    for (const auto& v : vs) {
      auto it = dataBind.find(v);
      if (it != dataBind.end()) cur = cur.subst(v, it->second);
    }
    // second pass for chained bindings
    vs = cur.vars();
    for (const auto& v : vs) {
      auto it = dataBind.find(v);
      if (it != dataBind.end()) cur = cur.subst(v, resolveD(it->second));
    }
    return cur;
  }

  bool bindHeap(const std::string& v, const HeapTerm& t) {
    HeapTerm r = resolveH(t);
    if (!r.isNull() && r.name == v) return true;
    heapBind[v] = r;
    return true;
  }
  bool bindData(const std::string& v, const DataTerm& t) {
    DataTerm r = resolveD(t);
    if (r.coeffs.count(v)) return false;  // occurs check
    dataBind[v] = r;
    return true;
  }
};

struct Matcher {
  const PredRegistry& reg;
  ProveOptions opt;
  size_t effort = 0;

  explicit Matcher(const PredRegistry& r, const ProveOptions& o)
      : reg(r), opt(o) {}

  bool outOfBudget() const { return effort > opt.nodeCap; }

  // pick the next pending atom by priority; -1 if none
  int nextPending(const MatchState& st) const {
    int best = -1, bestPri = 99;
    for (const auto& r : st.ratoms) {
      if (r.done) continue;
      int pri;
      if (std::holds_alternative<PointsTo>(r.h)) {
        HeapTerm a = st.resolveH(std::get<PointsTo>(r.h).addr);
        bool ground = a.isNull() || !st.isFlex(a.name);
        pri = ground ? 0 : 2;
      } else if (std::holds_alternative<PredApp>(r.h)) {
        const auto& z = std::get<PredApp>(r.h);
        bool ground = true;
        for (const auto& a : z.args) {
          HeapTerm t = st.resolveH(a);
          if (!t.isNull() && st.isFlex(t.name)) ground = false;
        }
        pri = ground ? 1 : 3;
      } else {
        pri = 4;  // TrueHeap last
      }
      if (pri < bestPri) {
        bestPri = pri;
        best = r.id;
      }
    }
    return best;
  }

  // try to unify one rhs cell with one lhs cell
  bool unifyCell(MatchState& st, RAtom& r, size_t lhsIdx) {
    const auto& cell = std::get<PointsTo>(st.lhsAtoms[lhsIdx].second);
    const auto& want = std::get<PointsTo>(r.h);
    if (cell.data.size() != want.data.size() ||
        cell.succ.size() != want.succ.size())
      return false;
    HeapTerm a = st.resolveH(want.addr);
    if (a.isNull()) return false;
    if (st.isFlex(a.name)) {
      if (!st.bindHeap(a.name, cell.addr)) return false;
    } else if (!(a == cell.addr)) {
      return false;
    }
    for (size_t i = 0; i < want.succ.size(); ++i) {
      HeapTerm s = st.resolveH(want.succ[i]);
      if (!s.isNull() && st.isFlex(s.name)) {
        if (!st.bindHeap(s.name, cell.succ[i])) return false;
      } else if (!(s == st.resolveH(cell.succ[i]))) {
        return false;
      }
    }
    for (size_t i = 0; i < want.data.size(); ++i) {
      DataTerm d = st.resolveD(want.data[i]);
      DataTerm t = cell.data[i];
      auto dv = d.asVar();
      if (dv && st.isFlex(*dv)) {
        if (!st.bindData(*dv, t)) return false;
        continue;
      }
      if (d == t) continue;
      if (st.erasedMode && dv && !st.isFlex(*dv)) {
        r.wilds.push_back(i);  // erased fragment: field carries no meaning
        continue;
      }
      // implicit substitution: provably equal under the antecedent data
      st.dataObl.push_back(atomEq(d, t));
      r.wilds.push_back(i);
    }
    st.consumed[lhsIdx] = true;
    r.how = RAtom::How::Cell;
    r.lhsIdx = static_cast<int>(lhsIdx);
    r.done = true;
    return true;
  }

  bool unifyPred(MatchState& st, RAtom& r, size_t lhsIdx) {
    const auto& zl = std::get<PredApp>(st.lhsAtoms[lhsIdx].second);
    const auto& zr = std::get<PredApp>(r.h);
    if (zl.pred != zr.pred || zl.args.size() != zr.args.size() ||
        zl.refs.size() != zr.refs.size())
      return false;
    for (size_t i = 0; i < zr.args.size(); ++i) {
      HeapTerm a = st.resolveH(zr.args[i]);
      HeapTerm b = st.resolveH(zl.args[i]);
      if (!a.isNull() && st.isFlex(a.name)) {
        if (!st.bindHeap(a.name, b)) return false;
      } else if (!(a == b)) {
        return false;
      }
    }
    for (size_t i = 0; i < zr.refs.size(); ++i)
      st.refObl.push_back({zl.refs[i], zr.refs[i]});
    st.consumed[lhsIdx] = true;
    r.how = RAtom::How::Pred;
    r.lhsIdx = static_cast<int>(lhsIdx);
    r.done = true;
    return true;
  }

  // fold r (a PredApp) by case ci: spawn the case body as new rhs atoms
  bool applyFold(MatchState& st, RAtom& r, int ci) {
    const auto& z = std::get<PredApp>(r.h);
    // resolve arguments first so the case instantiates with current bindings
    PredApp zr = z;
    for (auto& a : zr.args) a = st.resolveH(a);
    SepFormula cs;
    try {
      cs = instCase(reg, zr, ci);
    } catch (const std::exception&) {
      return false;
    }
    // rename case existentials to fresh flex vars (avoid everything in sight
    // so the tree builder can reuse the same names capture-free)
    std::set<std::string> avoid;
    for (const auto& [v, k] : st.flexKind) avoid.insert(v);
    for (const auto& [v, c] : st.heapBind) avoid.insert(v);
    for (const auto& [v, c] : st.dataBind) avoid.insert(v);
    for (const auto& [id, h] : st.lhsAtoms) {
      SepFormula tmp;
      tmp.spatial.push_back(h);
      for (const auto& [v, k] : allVars(tmp)) avoid.insert(v);
      (void)id;
    }
    {
      SepFormula tmp;
      tmp.pure = st.lhsPure;
      for (const auto& [v, k] : allVars(tmp)) avoid.insert(v);
    }
    for (const auto& ra : st.ratoms) {
      SepFormula tmp;
      tmp.spatial.push_back(ra.h);
      for (const auto& [v, k] : allVars(tmp)) avoid.insert(v);
    }
    for (const auto& [v, k] : allVars(cs)) avoid.insert(v);
    SepFormula inst = cs;
    std::vector<BoundVar> fresh;
    for (const auto& b : cs.exists) {
      std::string nn = freshName(b.name + "$f", avoid);
      avoid.insert(nn);
      inst = renameBound(inst, b.name, nn);
      fresh.push_back({nn, b.kind});
    }
    inst.exists.clear();
    for (const auto& b : fresh) st.flexKind[b.name] = b.kind;
    // pure obligations
    for (const auto& [a, bb] : inst.pure.eqs) st.pureObl.push_back({{a, bb}, false});
    for (const auto& [a, bb] : inst.pure.neqs) st.pureObl.push_back({{a, bb}, true});
    if (!inst.pure.data.isTrue()) st.dataObl.push_back(inst.pure.data);
    for (const auto& app : inst.pure.apps) {
      // unreduced second-order application: only trivially fine when the
      // slot is a named variable matched syntactically later; reject here
      (void)app;
      return false;
    }
    // spawn kids (take copies first: push_back invalidates the reference)
    int rid = r.id;
    int rdepth = r.depth;
    r.how = RAtom::How::Folded;
    r.caseIdx = ci;
    r.done = true;
    for (const auto& h : inst.spatial) {
      RAtom kid;
      kid.id = static_cast<int>(st.ratoms.size());
      kid.h = h;
      kid.depth = rdepth + 1;
      st.ratoms.push_back(kid);
      st.ratoms[static_cast<size_t>(rid)].kidIds.push_back(kid.id);
    }
    st.foldLog.push_back({rid, ci, fresh});
    return true;
  }

  // final checks once every atom is matched
  bool validate(MatchState& st) {
    // leftover lhs atoms need a consequent true
    bool hasTrue = false;
    for (auto& r : st.ratoms)
      if (std::holds_alternative<TrueHeap>(r.h)) hasTrue = true;
    for (size_t i = 0; i < st.lhsAtoms.size(); ++i)
      if (!st.consumed[i] && !hasTrue) return false;
    // unresolved flex variables: bind via equality obligations, then defaults
    for (const auto& [pair, isNeq] : st.pureObl) {
      if (isNeq) continue;
      HeapTerm a = st.resolveH(pair.first), b = st.resolveH(pair.second);
      if (!a.isNull() && st.isFlex(a.name) && !(b == a)) st.bindHeap(a.name, b);
      else if (!b.isNull() && st.isFlex(b.name) && !(a == b))
        st.bindHeap(b.name, a);
    }
    for (auto& [v, k] : st.flexKind) {
      if (k == VarKind::Heap) {
        HeapTerm r = st.resolveH(HeapTerm::var(v));
        if (!r.isNull() && r.name == v) st.heapBind[v] = HeapTerm::null();
      } else {
        DataTerm r = st.resolveD(DataTerm::var(v));
        if (r.asVar() && *r.asVar() == v) st.dataBind[v] = DataTerm(Rat(0));
      }
    }
    // heap pure obligations
    Saturation sat = saturate(pureOnly(st.lhsPure));
    for (const auto& [pair, isNeq] : st.pureObl) {
      HeapTerm a = st.resolveH(pair.first), b = st.resolveH(pair.second);
      if (isNeq) {
        if (!sat.provablyNeq(a, b)) return false;
      } else {
        if (!sat.provablyEq(a, b)) return false;
      }
    }
    // data obligations
    std::vector<DataFormula> obls;
    for (const auto& d : st.dataObl) obls.push_back(st.resolveF(d));
    if (!pureDataHolds(st.lhsPure.data, DataFormula::conj(obls))) return false;
    // refinement obligations
    for (const auto& [tl, tr] : st.refObl) {
      if (!checkRefEntail(st, tl, tr)) return false;
    }
    return true;
  }

  static SepFormula pureOnly(const Pure& p) {
    SepFormula f;
    f.pure = p;
    return f;
  }

  bool checkRefEntail(const MatchState& st, const RefTerm& tl, const RefTerm& tr) {
    if (tr.isTrivialTrue()) return true;
    if (tl.kind == RefTerm::Kind::Var || tr.kind == RefTerm::Kind::Var)
      return tl.show() == tr.show();
    if (!tl.body.apps.empty() || !tr.body.apps.empty())
      return tl.show() == tr.show();
    if (tl.params.size() != tr.params.size()) return false;
    // rename both to shared parameters and check phi_l && Pi |= phi_r
    DataFormula bl = tl.body.data, br = tr.body.data;
    for (size_t i = 0; i < tl.params.size(); ++i) {
      std::string shared = "#nu" + std::to_string(i);
      bl = bl.subst(tl.params[i], DataTerm::var(shared));
      br = br.subst(tr.params[i], DataTerm::var(shared));
    }
    return entails(DataFormula::conj({st.resolveF(bl), st.lhsPure.data}),
                   st.resolveF(br));
  }

  // depth-first with copied state at choice points
  std::optional<MatchState> solve(MatchState st) {
    if (++effort > opt.nodeCap) return std::nullopt;
    int id = nextPending(st);
    if (id < 0) return validate(st) ? std::optional<MatchState>(std::move(st))
                                    : std::nullopt;
    RAtom& r = st.ratoms[static_cast<size_t>(id)];
    if (std::holds_alternative<TrueHeap>(r.h)) {
      // absorbs leftovers at build time
      r.how = RAtom::How::TrueAbsorb;
      r.done = true;
      return solve(std::move(st));
    }
    if (std::holds_alternative<PointsTo>(r.h)) {
      for (size_t i = 0; i < st.lhsAtoms.size(); ++i) {
        if (st.consumed[i]) continue;
        if (!std::holds_alternative<PointsTo>(st.lhsAtoms[i].second)) continue;
        MatchState next = st;
        if (unifyCell(next, next.ratoms[static_cast<size_t>(id)], i)) {
          auto res = solve(std::move(next));
          if (res) return res;
        }
        if (outOfBudget()) return std::nullopt;
      }
      return std::nullopt;
    }
    // PredApp: direct matches first, then folds
    const auto& z = std::get<PredApp>(r.h);
    for (size_t i = 0; i < st.lhsAtoms.size(); ++i) {
      if (st.consumed[i]) continue;
      if (!std::holds_alternative<PredApp>(st.lhsAtoms[i].second)) continue;
      MatchState next = st;
      if (unifyPred(next, next.ratoms[static_cast<size_t>(id)], i)) {
        auto res = solve(std::move(next));
        if (res) return res;
      }
      if (outOfBudget()) return std::nullopt;
    }
    if (r.depth < st.maxDepth) {
      // case order: provable pure first, then merely consistent
      size_t ncases = 0;
      try {
        ncases = reg.at(z.pred).cases.size();
      } catch (const UnknownPredicate&) {
        return std::nullopt;
      }
      Saturation sat = saturate(pureOnly(st.lhsPure));
      PredApp zr = z;
      for (auto& a : zr.args) a = st.resolveH(a);
      bool anyFlex = false;
      for (const auto& a : zr.args)
        if (!a.isNull() && st.isFlex(a.name)) anyFlex = true;
      std::vector<std::pair<int, int>> order;  // (tier, case)
      for (size_t ci = 0; ci < ncases; ++ci) {
        CaseInfo info;
        if (!anyFlex)
          info = caseInfo(reg, sat, st.lhsPure.data, zr, static_cast<int>(ci));
        if (info.refuted) continue;
        order.push_back({info.provable ? 0 : 1, static_cast<int>(ci)});
      }
      std::stable_sort(order.begin(), order.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [tier, ci] : order) {
        MatchState next = st;
        if (applyFold(next, next.ratoms[static_cast<size_t>(id)], ci)) {
          auto res = solve(std::move(next));
          if (res) return res;
        }
        if (outOfBudget()) return std::nullopt;
      }
    }
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// proof construction from a successful match

struct TreeBuilder {
  const PredRegistry& reg;
  const MatchState& st;
  SepFormula lhs;               // collapsed, saturated, quantifier-free
  std::vector<int> lhsIds;      // atom identities parallel to lhs.spatial

  HeapTerm wit(const std::string& v, VarKind k) const {
    if (k == VarKind::Heap) {
      auto it = st.heapBind.find(v);
      return it == st.heapBind.end() ? HeapTerm::null() : st.resolveH(it->second);
    }
    return HeapTerm::null();
  }

  // apply all final bindings to a formula (flex vars disappear)
  SepFormula applyBindings(SepFormula f) const {
    for (const auto& [v, k] : st.flexKind) {
      if (f.isBound(v)) continue;
      if (k == VarKind::Heap) {
        auto it = st.heapBind.find(v);
        if (it != st.heapBind.end()) f = substHeap(f, v, st.resolveH(it->second));
      } else {
        auto it = st.dataBind.find(v);
        if (it != st.dataBind.end()) f = substData(f, v, st.resolveD(it->second));
      }
    }
    return f;
  }

  // Build the proof of lhs |- rhsTop where rhsTop is the original consequent
  // (with its binder list). Assumes the match succeeded.
  ProofTree build(const SepFormula& rhsTop) { return buildExRight(rhsTop, 0); }

  // instantiate binders front-first, then continue with folds
  ProofTree buildExRight(const SepFormula& rhs, size_t foldPos) {
    if (rhs.exists.empty()) return buildFolds(applyBindings(rhs), foldPos);
    ProofTree node;
    node.rule = Rule::ExistsRight;
    BoundVar b = rhs.exists.front();
    node.exVar = b.name;
    node.exIsHeap = b.kind == VarKind::Heap;
    node.conclusion = {lhs, rhs};
    node.lhsIds = lhsIds;
    SepFormula inst = rhs;
    inst.exists.erase(inst.exists.begin());
    if (b.kind == VarKind::Heap) {
      auto it = st.heapBind.find(b.name);
      HeapTerm w =
          it == st.heapBind.end() ? HeapTerm::null() : st.resolveH(it->second);
      node.exHeapWitness = w;
      inst = substHeap(inst, b.name, w);
    } else {
      auto it = st.dataBind.find(b.name);
      DataTerm w =
          it == st.dataBind.end() ? DataTerm(Rat(0)) : st.resolveD(it->second);
      node.exDataWitness = w;
      inst = substData(inst, b.name, w);
    }
    node.premises.push_back(buildExRight(inst, foldPos));
    return node;
  }

  // rhsBare: binder-free, fully resolved consequent at the current stage
  ProofTree buildFolds(SepFormula rhsBare, size_t foldPos) {
    if (foldPos >= st.foldLog.size()) return buildStar(rhsBare);
    const FoldRec& fr = st.foldLog[foldPos];
    std::vector<int> liveIds = liveAtomIds(foldPos);
    size_t pos = 0;
    for (; pos < liveIds.size(); ++pos)
      if (liveIds[pos] == fr.rhsId) break;
    assert(pos < rhsBare.spatial.size());

    ProofTree node;
    node.rule = Rule::Fold;
    node.atomIndex = pos;
    node.caseIndex = fr.caseIdx;
    node.conclusion = {lhs, rhsBare};
    node.lhsIds = lhsIds;

    // premise: atom replaced by its case instance, quantified by the
    // matcher's fresh binder names (so witnesses line up by name)
    PredApp z = std::get<PredApp>(rhsBare.spatial[pos]);
    SepFormula cs = instCase(reg, z, fr.caseIdx);
    SepFormula inst = cs;
    assert(cs.exists.size() == fr.freshBinders.size());
    for (size_t i = 0; i < cs.exists.size(); ++i)
      inst = renameBound(inst, inst.exists[i].name, fr.freshBinders[i].name);
    SepFormula quantified = rhsBare;
    quantified.spatial.erase(quantified.spatial.begin() + static_cast<long>(pos));
    quantified.pure.conjoin(stripBinders(inst).pure);
    for (const auto& h : inst.spatial) quantified.spatial.push_back(h);
    for (const auto& b : fr.freshBinders) quantified.exists.push_back(b);
    node.premises.push_back(buildExRight(quantified, foldPos + 1));
    return node;
  }

  static SepFormula stripBinders(SepFormula f) {
    f.exists.clear();
    return f;
  }

  // ids of rhs atoms alive (unfolded ones removed, kids appended) just
  // before fold number `foldPos` happens
  std::vector<int> liveAtomIds(size_t foldPos) const {
    std::vector<int> live;
    size_t created = 0;
    // roots are ids 0..nRoots-1 in order; find how many roots there are:
    // roots are atoms with depth 0
    for (const auto& r : st.ratoms)
      if (r.depth == 0) ++created;
    for (size_t i = 0; i < created; ++i) live.push_back(static_cast<int>(i));
    size_t next = created;
    for (size_t f = 0; f < foldPos; ++f) {
      const FoldRec& fr = st.foldLog[f];
      // remove folded id, append its kids
      live.erase(std::remove(live.begin(), live.end(), fr.rhsId), live.end());
      for (int kid : st.ratoms[static_cast<size_t>(fr.rhsId)].kidIds) {
        live.push_back(kid);
        (void)next;
      }
    }
    return live;
  }

  // terminal: one Star node with a premise per rhs atom
  ProofTree buildStar(const SepFormula& rhsFinal) {
    std::vector<int> live = liveAtomIds(st.foldLog.size());
    ProofTree star;
    star.rule = Rule::Star;
    star.conclusion = {lhs, rhsFinal};
    star.lhsIds = lhsIds;

    if (live.empty()) {
      // emp |- emp
      ProofTree leaf;
      leaf.rule = Rule::Empty;
      leaf.conclusion = {lhs, rhsFinal};
      leaf.lhsIds = lhsIds;
      return leaf;
    }

    std::vector<bool> used(lhs.spatial.size(), false);
    for (size_t pos = 0; pos < live.size(); ++pos) {
      const RAtom& r = st.ratoms[static_cast<size_t>(live[pos])];
      ProofTree leaf;
      SepFormula plhs, prhs;
      plhs.pure = lhs.pure;
      prhs.pure = rhsFinal.pure;
      assert(pos < rhsFinal.spatial.size());
      prhs.spatial.push_back(rhsFinal.spatial[pos]);
      switch (r.how) {
        case RAtom::How::Cell: {
          leaf.rule = Rule::PointsTo;
          plhs.spatial.push_back(lhs.spatial[static_cast<size_t>(r.lhsIdx)]);
          leaf.lhsIds = {lhsIds[static_cast<size_t>(r.lhsIdx)]};
          leaf.consumedLhsId = lhsIds[static_cast<size_t>(r.lhsIdx)];
          leaf.wildDataPositions = r.wilds;
          used[static_cast<size_t>(r.lhsIdx)] = true;
          break;
        }
        case RAtom::How::Pred: {
          leaf.rule = Rule::Predicate;
          plhs.spatial.push_back(lhs.spatial[static_cast<size_t>(r.lhsIdx)]);
          leaf.lhsIds = {lhsIds[static_cast<size_t>(r.lhsIdx)]};
          leaf.consumedLhsId = lhsIds[static_cast<size_t>(r.lhsIdx)];
          used[static_cast<size_t>(r.lhsIdx)] = true;
          break;
        }
        case RAtom::How::TrueAbsorb: {
          leaf.rule = Rule::True;
          // leftovers attached below after the loop marks used cells
          break;
        }
        default:
          assert(false && "unmatched rhs atom in builder");
      }
      leaf.conclusion = {plhs, prhs};
      star.premises.push_back(std::move(leaf));
    }
    // attach leftovers to the first True premise
    for (size_t pos = 0; pos < live.size(); ++pos) {
      const RAtom& r = st.ratoms[static_cast<size_t>(live[pos])];
      if (r.how != RAtom::How::TrueAbsorb) continue;
      ProofTree& leaf = star.premises[pos];
      for (size_t i = 0; i < lhs.spatial.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        leaf.conclusion.lhs.spatial.push_back(lhs.spatial[i]);
        leaf.lhsIds.push_back(lhsIds[i]);
      }
      break;
    }
    if (star.premises.size() == 1) return std::move(star.premises[0]);
    return star;
  }
};

// ---------------------------------------------------------------------------
// top-level recursive prover

struct Prover {
  const PredRegistry& reg;
  ProveOptions opt;
  size_t effort = 0;

  Prover(const PredRegistry& r, const ProveOptions& o) : reg(r), opt(o) {}

  std::optional<ProofTree> proveSeq(SepFormula lhs, SepFormula rhs,
                                    std::vector<int> lhsIds, int unfoldFuel) {
    if (++effort > opt.nodeCap) return std::nullopt;

    // 1. strip antecedent binders
    if (!lhs.exists.empty()) {
      if (opt.restrictForColouring) return std::nullopt;
      BoundVar b = lhs.exists.front();
      std::set<std::string> avoid;
      for (const auto& [v, k] : allVars(lhs)) avoid.insert(v);
      for (const auto& [v, k] : allVars(rhs)) avoid.insert(v);
      std::string nn = freshName(b.name, avoid);
      SepFormula renamed = renameBound(lhs, b.name, nn);
      renamed.exists.erase(renamed.exists.begin());
      ProofTree node;
      node.rule = Rule::ExistsLeft;
      node.elOld = b.name;
      node.elNew = nn;
      node.conclusion = {lhs, rhs};
      node.lhsIds = lhsIds;
      auto sub = proveSeq(std::move(renamed), rhs, lhsIds, unfoldFuel);
      if (!sub) return std::nullopt;
      node.premises.push_back(std::move(*sub));
      return node;
    }

    // 2. saturation facts as explicit rule applications
    {
      std::vector<size_t> cellIdx;
      for (size_t i = 0; i < lhs.spatial.size(); ++i)
        if (std::holds_alternative<PointsTo>(lhs.spatial[i])) cellIdx.push_back(i);
      for (size_t i : cellIdx) {
        const auto& c = std::get<PointsTo>(lhs.spatial[i]);
        auto key = Pure::orient(c.addr, HeapTerm::null());
        if (!lhs.pure.neqs.count(key)) {
          if (opt.restrictForColouring) return std::nullopt;
          ProofTree node;
          node.rule = Rule::NullNotLval;
          node.atomIndex = i;
          node.conclusion = {lhs, rhs};
          node.lhsIds = lhsIds;
          SepFormula stronger = lhs;
          stronger.pure.addNeq(c.addr, HeapTerm::null());
          auto sub = proveSeq(std::move(stronger), rhs, lhsIds, unfoldFuel);
          if (!sub) return std::nullopt;
          node.premises.push_back(std::move(*sub));
          return node;
        }
      }
      for (size_t ii = 0; ii < cellIdx.size(); ++ii)
        for (size_t jj = ii + 1; jj < cellIdx.size(); ++jj) {
          const auto& a = std::get<PointsTo>(lhs.spatial[cellIdx[ii]]);
          const auto& b = std::get<PointsTo>(lhs.spatial[cellIdx[jj]]);
          if (a.addr == b.addr) {
            // two cells at one address: antecedent inconsistent
            if (opt.restrictForColouring) return std::nullopt;
            SepFormula stronger = lhs;
            stronger.pure.addNeq(a.addr, b.addr);  // reflexive: inconsistent
            ProofTree node;
            node.rule = Rule::StarPartial;
            node.atomIndex = cellIdx[ii];
            node.caseIndex = static_cast<int>(cellIdx[jj]);
            node.conclusion = {lhs, rhs};
            node.lhsIds = lhsIds;
            auto sub = proveSeq(std::move(stronger), rhs, lhsIds, unfoldFuel);
            if (!sub) return std::nullopt;
            node.premises.push_back(std::move(*sub));
            return node;
          }
          auto key = Pure::orient(a.addr, b.addr);
          if (!lhs.pure.neqs.count(key)) {
            if (opt.restrictForColouring) return std::nullopt;
            ProofTree node;
            node.rule = Rule::StarPartial;
            node.atomIndex = cellIdx[ii];
            node.caseIndex = static_cast<int>(cellIdx[jj]);
            node.conclusion = {lhs, rhs};
            node.lhsIds = lhsIds;
            SepFormula stronger = lhs;
            stronger.pure.addNeq(a.addr, b.addr);
            auto sub = proveSeq(std::move(stronger), rhs, lhsIds, unfoldFuel);
            if (!sub) return std::nullopt;
            node.premises.push_back(std::move(*sub));
            return node;
          }
        }
    }

    // 3. collapse equalities (Substitution)
    for (const auto& [a, b] : lhs.pure.eqs) {
      // rewrite the non-null side to the other
      HeapTerm from = a, to = b;
      if (from.isNull()) std::swap(from, to);
      if (from.isNull()) continue;
      if (opt.restrictForColouring && false) return std::nullopt;
      ProofTree node;
      node.rule = Rule::Substitution;
      node.substVar = from.name;
      node.substIsHeap = true;
      node.substHeap = to;
      node.conclusion = {lhs, rhs};
      node.lhsIds = lhsIds;
      SepFormula nl = substHeap(lhs, from.name, to);
      SepFormula nr = rhs.isBound(from.name) ? rhs : substHeap(rhs, from.name, to);
      auto sub = proveSeq(std::move(nl), std::move(nr), lhsIds, unfoldFuel);
      if (!sub) return std::nullopt;
      node.premises.push_back(std::move(*sub));
      return node;
    }

    // 4. inconsistent antecedent closes everything
    if (!opt.restrictForColouring && isInconsistent(lhs)) {
      ProofTree node;
      node.rule = Rule::Inconsistent;
      node.conclusion = {lhs, rhs};
      node.lhsIds = lhsIds;
      return node;
    }

    // 5. determined unfolding of antecedent predicates
    if (!opt.restrictForColouring && unfoldFuel > 0) {
      Saturation sat = saturate(lhs);
      for (size_t i = 0; i < lhs.spatial.size(); ++i) {
        const auto* z = std::get_if<PredApp>(&lhs.spatial[i]);
        if (!z) continue;
        size_t ncases = reg.at(z->pred).cases.size();
        int alive = 0;
        for (size_t ci = 0; ci < ncases; ++ci) {
          CaseInfo info = caseInfo(reg, sat, lhs.pure.data, *z, static_cast<int>(ci));
          if (!info.refuted) ++alive;
        }
        if (alive > 1 || ncases <= 1) continue;
        ProofTree node;
        node.rule = Rule::Unfold;
        node.atomIndex = i;
        node.conclusion = {lhs, rhs};
        node.lhsIds = lhsIds;
        // fresh ids for spawned atoms; nested preds inherit fresh ids
        for (size_t ci = 0; ci < ncases; ++ci) {
          SepFormula branch = textUnfold(reg, lhs, i, static_cast<int>(ci));
          std::vector<int> ids;
          for (size_t j = 0; j < lhs.spatial.size(); ++j)
            if (j != i) ids.push_back(lhsIds[j]);
          for (size_t j = lhs.spatial.size() - 1; j < branch.spatial.size(); ++j)
            ids.push_back(nextFreshId_++);
          auto sub = proveSeq(branch, rhs, ids, unfoldFuel - 1);
          if (!sub) return std::nullopt;
          node.premises.push_back(std::move(*sub));
        }
        return node;
      }
    }

    // 6. core matching
    MatchState st;
    st.reg = &reg;
    st.opt = opt;
    st.lhsPure = lhs.pure;
    for (size_t i = 0; i < lhs.spatial.size(); ++i)
      st.lhsAtoms.push_back({lhsIds[i], lhs.spatial[i]});
    st.consumed.assign(lhs.spatial.size(), false);
    st.erasedMode = isErased(lhs) && isErased(rhs);
    st.maxDepth = static_cast<int>(lhs.spatial.size()) + opt.foldBudget;
    for (const auto& b : rhs.exists) st.flexKind[b.name] = b.kind;
    SepFormula rhsBody = rhs;
    rhsBody.exists.clear();
    for (size_t i = 0; i < rhsBody.spatial.size(); ++i) {
      RAtom r;
      r.id = static_cast<int>(i);
      r.h = rhsBody.spatial[i];
      r.depth = 0;
      st.ratoms.push_back(r);
    }
    for (const auto& [a, b] : rhsBody.pure.eqs) st.pureObl.push_back({{a, b}, false});
    for (const auto& [a, b] : rhsBody.pure.neqs) st.pureObl.push_back({{a, b}, true});
    if (!rhsBody.pure.data.isTrue()) st.dataObl.push_back(rhsBody.pure.data);
    if (!rhsBody.pure.apps.empty()) return std::nullopt;

    Matcher m(reg, opt);
    m.effort = effort;
    auto sol = m.solve(std::move(st));
    effort = m.effort;
    if (!sol) return std::nullopt;

    TreeBuilder tb{reg, *sol, lhs, lhsIds};
    return tb.build(rhs);
  }

  int nextFreshId_ = 1000000;
};

}  // namespace

ProveResult prove(const PredRegistry& reg, const SepFormula& lhs,
                  const SepFormula& rhs, const ProveOptions& opt) {
  Prover pr(reg, opt);
  std::vector<int> ids;
  for (size_t i = 0; i < lhs.spatial.size(); ++i) ids.push_back(static_cast<int>(i));
  auto t = pr.proveSeq(lhs, rhs, ids, opt.foldBudget + static_cast<int>(lhs.spatial.size()));
  ProveResult res;
  if (t) {
    res.status = ProveResult::Status::Proved;
    res.tree = std::move(*t);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Hoare triples

namespace {

const std::string* objOf(const Command& c) {
  if (const auto* a = std::get_if<CmdFree>(&c)) return &a->obj;
  if (const auto* a = std::get_if<CmdHeapStore>(&c)) return &a->obj;
  if (const auto* a = std::get_if<CmdHeapLoad>(&c)) return &a->obj;
  if (const auto* a = std::get_if<CmdDataStore>(&c)) return &a->obj;
  if (const auto* a = std::get_if<CmdDataLoad>(&c)) return &a->obj;
  return nullptr;
}

}  // namespace

TripleResult checkTriple(const PredRegistry& reg, const SepFormula& pre,
                         const Command& c, const SepFormula& post,
                         const ProveOptions& opt) {
  TripleResult out;
  out.step.cmd = c;
  out.step.pre = pre;
  out.step.post = post;

  SepFormula exposed = pre;
  const std::string* obj = objOf(c);
  if (obj) {
    int guard = 0;
    while (!findCell(exposed, *obj) && guard++ < 8) {
      // unfold a determined predicate that can expose the cell
      Saturation sat = saturate(exposed);
      bool progress = false;
      for (size_t i = 0; i < exposed.spatial.size() && !progress; ++i) {
        const auto* z = std::get_if<PredApp>(&exposed.spatial[i]);
        if (!z) continue;
        size_t ncases = reg.at(z->pred).cases.size();
        std::vector<int> alive;
        for (size_t ci = 0; ci < ncases; ++ci) {
          CaseInfo info = caseInfo(reg, sat, exposed.pure.data, *z,
                                   static_cast<int>(ci));
          if (!info.refuted) alive.push_back(static_cast<int>(ci));
        }
        if (alive.size() != 1) continue;
        exposed = textUnfold(reg, exposed, i, alive[0]);
        progress = true;
      }
      if (!progress) break;
    }
    if (!findCell(exposed, *obj)) return out;  // Unknown
  }

  out.step.exposureNeeded = !alphaEq(exposed, pre);
  if (out.step.exposureNeeded) {
    ProveResult ex = prove(reg, pre, exposed, opt);
    if (!ex.ok()) return out;
    out.step.exposure = std::move(ex.tree);
  }
  out.step.exposedPre = exposed;

  auto sp = execCmd(c, exposed);
  if (!sp) return out;
  out.step.strongestPost = *sp;

  ProveResult cons = prove(reg, *sp, post, opt);
  if (!cons.ok()) return out;
  out.step.consequence = std::move(cons.tree);
  out.status = TripleResult::Status::Valid;
  return out;
}

}  // namespace splinter
