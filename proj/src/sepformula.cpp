#include "splinter/sepformula.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "splinter/theory.hpp"

namespace splinter {

// --- RefinedConj / RefTerm --------------------------------------------------

RefinedConj RefinedConj::subst(const std::string& v, const DataTerm& t) const {
  RefinedConj out;
  out.data = data.subst(v, t);
  out.apps.reserve(apps.size());
  for (const auto& a : apps) out.apps.push_back(a.subst(v, t));
  return out;
}

void RefinedConj::collectVars(std::set<std::string>& out) const {
  data.collectVars(out);
  for (const auto& a : apps) a.collectVars(out);
}

std::string RefinedConj::show() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& a : apps) {
    if (!first) os << " && ";
    os << a.show();
    first = false;
  }
  if (!data.isTrue() || first) {
    if (!first) os << " && ";
    os << data.show();
  }
  return os.str();
}

RefTerm RefTerm::trivial(int arity) {
  RefTerm r;
  for (int i = 0; i < arity; ++i) r.params.push_back("_v" + std::to_string(i));
  return r;
}

RefinedConj RefTerm::apply(const std::vector<DataTerm>& args) const {
  if (kind == Kind::Var) {
    if (static_cast<int>(args.size()) != varArity) throw ArityMismatch(var);
    RefinedConj rc;
    rc.apps.push_back(QueryApp{var, args});
    return rc;
  }
  if (args.size() != params.size()) throw ArityMismatch("<lambda>");
  // simultaneous substitution via placeholders
  RefinedConj rc = body;
  for (size_t i = 0; i < params.size(); ++i)
    rc = rc.subst(params[i], DataTerm::var("#arg" + std::to_string(i)));
  for (size_t i = 0; i < params.size(); ++i)
    rc = rc.subst("#arg" + std::to_string(i), args[i]);
  return rc;
}

RefTerm RefTerm::substData(const std::string& v, const DataTerm& t) const {
  if (kind == Kind::Var) return *this;
  for (const auto& p : params)
    if (p == v) return *this;  // shadowed
  RefTerm out = *this;
  out.body = body.subst(v, t);
  return out;
}

void RefTerm::collectFreeDataVars(std::set<std::string>& out) const {
  if (kind == Kind::Var) return;
  std::set<std::string> s;
  body.collectVars(s);
  for (const auto& p : params) s.erase(p);
  out.insert(s.begin(), s.end());
}

std::string RefTerm::show() const {
  if (kind == Kind::Var) return var;
  // print with positional parameter names, so alpha-variants print alike
  RefinedConj rc = body;
  std::set<std::string> freeInBody;
  rc.collectVars(freeInBody);
  for (const auto& p : params) freeInBody.erase(p);
  std::vector<std::string> names;
  for (size_t i = 0; i < params.size(); ++i) {
    std::string nn = "nu" + (params.size() > 1 ? std::to_string(i) : "");
    while (freeInBody.count(nn)) nn += "_";
    rc = rc.subst(params[i], DataTerm::var("#p" + std::to_string(i)));
    names.push_back(nn);
  }
  for (size_t i = 0; i < params.size(); ++i)
    rc = rc.subst("#p" + std::to_string(i), DataTerm::var(names[i]));
  std::ostringstream os;
  os << "lam ";
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) os << ", ";
    os << names[i];
  }
  os << ". " << rc.show();
  return os.str();
}

// --- Pure / heaplets ---------------------------------------------------------

void Pure::conjoin(const Pure& o) {
  eqs.insert(o.eqs.begin(), o.eqs.end());
  neqs.insert(o.neqs.begin(), o.neqs.end());
  conjoinData(o.data);
  apps.insert(apps.end(), o.apps.begin(), o.apps.end());
}

std::string Pure::show() const {
  std::ostringstream os;
  bool first = true;
  auto put = [&](const std::string& s) {
    if (!first) os << " && ";
    os << s;
    first = false;
  };
  for (const auto& [a, b] : eqs) put(a.show() + " == " + b.show());
  for (const auto& [a, b] : neqs) put(a.show() + " != " + b.show());
  for (const auto& a : apps) put(a.show());
  if (!data.isTrue() || first) put(data.show());
  return os.str();
}

std::string showHeaplet(const Heaplet& h) {
  if (std::holds_alternative<TrueHeap>(h)) return "true";
  if (const auto* p = std::get_if<PointsTo>(&h)) {
    std::ostringstream os;
    os << p->addr.show() << " |-> [";
    for (size_t i = 0; i < p->data.size(); ++i) {
      if (i) os << ", ";
      os << p->data[i].show();
    }
    os << "; ";
    for (size_t i = 0; i < p->succ.size(); ++i) {
      if (i) os << ", ";
      os << p->succ[i].show();
    }
    os << "]";
    return os.str();
  }
  const auto& z = std::get<PredApp>(h);
  std::ostringstream os;
  os << z.pred << "(";
  for (size_t i = 0; i < z.refs.size(); ++i) {
    if (i) os << ", ";
    os << z.refs[i].show();
  }
  if (!z.refs.empty()) os << "; ";
  for (size_t i = 0; i < z.args.size(); ++i) {
    if (i) os << ", ";
    os << z.args[i].show();
  }
  os << ")";
  return os.str();
}

std::string SepFormula::show() const {
  std::ostringstream os;
  if (!exists.empty()) {
    os << "exists ";
    for (size_t i = 0; i < exists.size(); ++i) {
      if (i) os << ", ";
      os << exists[i].name;
    }
    os << ". ";
  }
  os << pure.show() << " : ";
  if (spatial.empty()) {
    os << "emp";
  } else {
    for (size_t i = 0; i < spatial.size(); ++i) {
      if (i) os << " * ";
      os << showHeaplet(spatial[i]);
    }
  }
  return os.str();
}

// --- variable collection ----------------------------------------------------

namespace {

void collectVarsInto(const SepFormula& f, std::map<std::string, VarKind>& out) {
  auto heap = [&](const HeapTerm& t) {
    if (!t.isNull()) out.emplace(t.name, VarKind::Heap);
  };
  auto dataTerm = [&](const DataTerm& t) {
    for (const auto& [v, c] : t.coeffs) out.emplace(v, VarKind::Data);
  };
  for (const auto& [a, b] : f.pure.eqs) {
    heap(a);
    heap(b);
  }
  for (const auto& [a, b] : f.pure.neqs) {
    heap(a);
    heap(b);
  }
  {
    std::set<std::string> dv;
    f.pure.data.collectVars(dv);
    for (const auto& q : f.pure.apps) q.collectVars(dv);
    for (const auto& v : dv) out.emplace(v, VarKind::Data);
  }
  for (const auto& h : f.spatial) {
    if (const auto* p = std::get_if<PointsTo>(&h)) {
      heap(p->addr);
      for (const auto& d : p->data) dataTerm(d);
      for (const auto& s : p->succ) heap(s);
    } else if (const auto* z = std::get_if<PredApp>(&h)) {
      for (const auto& a : z->args) heap(a);
      for (const auto& r : z->refs) {
        std::set<std::string> fv;
        r.collectFreeDataVars(fv);
        for (const auto& v : fv) out.emplace(v, VarKind::Data);
      }
    }
  }
}

}  // namespace

std::map<std::string, VarKind> allVars(const SepFormula& f) {
  std::map<std::string, VarKind> out;
  collectVarsInto(f, out);
  return out;
}

std::map<std::string, VarKind> freeVars(const SepFormula& f) {
  std::map<std::string, VarKind> out = allVars(f);
  for (const auto& b : f.exists) out.erase(b.name);
  return out;
}

std::string freshName(const std::string& base, const std::set<std::string>& avoid) {
  std::string stem = base;
  auto pos = stem.find('#');
  if (pos != std::string::npos) stem = stem.substr(0, pos);
  if (stem.empty()) stem = "v";
  if (!avoid.count(stem)) return stem;
  for (int k = 1;; ++k) {
    std::string cand = stem + "#" + std::to_string(k);
    if (!avoid.count(cand)) return cand;
  }
}

// --- substitution ------------------------------------------------------------

namespace {

HeapTerm substHT(const HeapTerm& t, const std::string& x, const HeapTerm& e) {
  return (!t.isNull() && t.name == x) ? e : t;
}

}  // namespace

SepFormula substHeap(const SepFormula& f, const std::string& x, const HeapTerm& e) {
  assert(!f.isBound(x));
  SepFormula out;
  out.exists = f.exists;
  out.pure.data = f.pure.data;
  out.pure.apps = f.pure.apps;
  for (const auto& [a, b] : f.pure.eqs) {
    HeapTerm na = substHT(a, x, e), nb = substHT(b, x, e);
    if (!(na == nb)) out.pure.addEq(na, nb);
  }
  for (const auto& [a, b] : f.pure.neqs)
    out.pure.addNeq(substHT(a, x, e), substHT(b, x, e));
  for (const auto& h : f.spatial) {
    if (const auto* p = std::get_if<PointsTo>(&h)) {
      PointsTo np = *p;
      np.addr = substHT(np.addr, x, e);
      for (auto& s : np.succ) s = substHT(s, x, e);
      out.spatial.push_back(np);
    } else if (const auto* z = std::get_if<PredApp>(&h)) {
      PredApp nz = *z;
      for (auto& a : nz.args) a = substHT(a, x, e);
      out.spatial.push_back(nz);
    } else {
      out.spatial.push_back(h);
    }
  }
  return out;
}

SepFormula substData(const SepFormula& f, const std::string& a, const DataTerm& t) {
  assert(!f.isBound(a));
  SepFormula out;
  out.exists = f.exists;
  out.pure.eqs = f.pure.eqs;
  out.pure.neqs = f.pure.neqs;
  out.pure.data = f.pure.data.subst(a, t);
  for (const auto& q : f.pure.apps) out.pure.apps.push_back(q.subst(a, t));
  for (const auto& h : f.spatial) {
    if (const auto* p = std::get_if<PointsTo>(&h)) {
      PointsTo np = *p;
      for (auto& d : np.data) d = d.subst(a, t);
      out.spatial.push_back(np);
    } else if (const auto* z = std::get_if<PredApp>(&h)) {
      PredApp nz = *z;
      for (auto& r : nz.refs) r = r.substData(a, t);
      out.spatial.push_back(nz);
    } else {
      out.spatial.push_back(h);
    }
  }
  return out;
}

SepFormula renameBound(const SepFormula& f, const std::string& oldName,
                       const std::string& newName) {
  VarKind kind = VarKind::Heap;
  bool found = false;
  for (const auto& b : f.exists)
    if (b.name == oldName) {
      kind = b.kind;
      found = true;
    }
  if (!found || oldName == newName) return f;
  SepFormula body = f;
  body.exists.clear();
  body = kind == VarKind::Heap
             ? substHeap(body, oldName, HeapTerm::var(newName))
             : substData(body, oldName, DataTerm::var(newName));
  for (const auto& b : f.exists)
    body.exists.push_back(b.name == oldName ? BoundVar{newName, b.kind} : b);
  return body;
}

SepFormula avoidBound(const SepFormula& f, const std::set<std::string>& avoid) {
  SepFormula out = f;
  std::set<std::string> taken = avoid;
  for (const auto& b : f.exists) taken.insert(b.name);
  std::vector<BoundVar> originals = f.exists;
  for (const auto& b : originals) {
    if (avoid.count(b.name)) {
      std::string nn = freshName(b.name, taken);
      taken.insert(nn);
      out = renameBound(out, b.name, nn);
    }
  }
  return out;
}

SepFormula existsClose(SepFormula f, const std::vector<BoundVar>& xs) {
  for (const auto& x : xs) {
    assert(!f.isBound(x.name));
    f.exists.push_back(x);
  }
  return f;
}

SepFormula starConjoin(const SepFormula& p, const SepFormula& q) {
  std::set<std::string> pFree, qFree;
  for (const auto& [v, k] : freeVars(p)) pFree.insert(v);
  for (const auto& [v, k] : freeVars(q)) qFree.insert(v);

  SepFormula pr = avoidBound(p, qFree);
  std::set<std::string> avoidQ = pFree;
  for (const auto& b : pr.exists) avoidQ.insert(b.name);
  SepFormula qr = avoidBound(q, avoidQ);

  SepFormula out;
  out.exists = pr.exists;
  for (const auto& b : qr.exists) out.exists.push_back(b);
  out.pure = pr.pure;
  out.pure.conjoin(qr.pure);
  out.spatial = pr.spatial;
  out.spatial.insert(out.spatial.end(), qr.spatial.begin(), qr.spatial.end());
  return out;
}

// --- recursive predicates -----------------------------------------------------

const PredDef& PredRegistry::at(const std::string& n) const {
  auto it = defs_.find(n);
  if (it == defs_.end()) throw UnknownPredicate(n);
  return it->second;
}

namespace {

// Substitute a refinement term for a refinement variable: occurrences live in
// pure.apps and inside the refinement slots of predicate applications.
SepFormula substRefVar(const SepFormula& f, const std::string& rv,
                       const RefTerm& rep) {
  SepFormula out = f;
  std::vector<QueryApp> apps;
  std::vector<DataFormula> conj = {f.pure.data};
  for (const auto& q : f.pure.apps) {
    if (q.pred != rv) {
      apps.push_back(q);
      continue;
    }
    RefinedConj rc = rep.apply(q.args);
    conj.push_back(rc.data);
    for (const auto& a : rc.apps) apps.push_back(a);
  }
  out.pure.data = DataFormula::conj(conj);
  out.pure.apps = std::move(apps);
  for (auto& h : out.spatial) {
    auto* z = std::get_if<PredApp>(&h);
    if (!z) continue;
    for (auto& r : z->refs) {
      if (r.kind == RefTerm::Kind::Var) {
        if (r.var == rv) r = rep;
      } else {
        std::vector<QueryApp> keep;
        std::vector<DataFormula> cs = {r.body.data};
        for (const auto& q : r.body.apps) {
          if (q.pred != rv) {
            keep.push_back(q);
            continue;
          }
          RefinedConj rc = rep.apply(q.args);
          cs.push_back(rc.data);
          for (const auto& a : rc.apps) keep.push_back(a);
        }
        r.body.data = DataFormula::conj(cs);
        r.body.apps = std::move(keep);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<SepFormula> unfoldCases(const PredRegistry& reg, const std::string& z,
                                    const std::vector<RefTerm>& refs,
                                    const std::vector<HeapTerm>& args) {
  const PredDef& def = reg.at(z);
  if (refs.size() != def.refParams.size() || args.size() != def.heapParams.size())
    throw ArityMismatch(z);
  for (size_t i = 0; i < refs.size(); ++i)
    if (refs[i].arity() != def.refParams[i].second) throw ArityMismatch(z);

  std::set<std::string> avoid;
  for (const auto& a : args)
    if (!a.isNull()) avoid.insert(a.name);
  for (const auto& r : refs) {
    std::set<std::string> fv;
    r.collectFreeDataVars(fv);
    avoid.insert(fv.begin(), fv.end());
  }

  std::vector<SepFormula> out;
  for (const auto& c : def.cases) {
    SepFormula inst = avoidBound(c, avoid);
    for (size_t i = 0; i < def.heapParams.size(); ++i)
      inst = substHeap(inst, def.heapParams[i],
                       HeapTerm::var("#h" + std::to_string(i)));
    for (size_t i = 0; i < def.heapParams.size(); ++i)
      inst = substHeap(inst, "#h" + std::to_string(i), args[i]);
    for (size_t i = 0; i < def.refParams.size(); ++i)
      inst = substRefVar(inst, def.refParams[i].first, refs[i]);
    out.push_back(std::move(inst));
  }
  return out;
}

// --- erasure -------------------------------------------------------------------

SepFormula eraseData(const SepFormula& f) {
  SepFormula out;
  out.exists = f.exists;
  out.pure.eqs = f.pure.eqs;
  out.pure.neqs = f.pure.neqs;
  for (const auto& h : f.spatial) {
    if (const auto* z = std::get_if<PredApp>(&h)) {
      PredApp nz = *z;
      for (auto& r : nz.refs) r = RefTerm::trivial(r.arity());
      out.spatial.push_back(nz);
    } else {
      out.spatial.push_back(h);
    }
  }
  return out;
}

bool isErased(const SepFormula& f) {
  if (!f.pure.data.isTrue() || !f.pure.apps.empty()) return false;
  for (const auto& h : f.spatial)
    if (const auto* z = std::get_if<PredApp>(&h))
      for (const auto& r : z->refs)
        if (!r.isTrivialTrue()) return false;
  return true;
}

// --- saturation -----------------------------------------------------------------

HeapTerm Saturation::find(const HeapTerm& t) const {
  HeapTerm cur = t;
  auto it = parent_.find(cur);
  while (it != parent_.end() && !(it->second == cur)) {
    cur = it->second;
    it = parent_.find(cur);
  }
  return cur;
}

HeapTerm Saturation::rep(const HeapTerm& t) const {
  if (!terms_.count(t)) return t;
  return find(t);
}

bool Saturation::provablyEq(const HeapTerm& a, const HeapTerm& b) const {
  if (a == b) return true;
  if (inconsistent_) return true;
  if (!terms_.count(a) || !terms_.count(b)) return false;
  return find(a) == find(b);
}

bool Saturation::provablyNeq(const HeapTerm& a, const HeapTerm& b) const {
  if (inconsistent_) return true;
  if (a == b) return false;
  if (!terms_.count(a) || !terms_.count(b)) return false;
  auto p = Pure::orient(find(a), find(b));
  return repNeqs_.count(p) != 0;
}

Pure Saturation::closure() const {
  Pure out;
  std::map<HeapTerm, std::vector<HeapTerm>> classes;
  for (const auto& t : terms_) classes[find(t)].push_back(t);
  for (const auto& [r, members] : classes)
    for (size_t i = 0; i < members.size(); ++i)
      for (size_t j = i + 1; j < members.size(); ++j)
        out.addEq(members[i], members[j]);
  for (const auto& [ra, rb] : repNeqs_)
    for (const auto& a : classes[ra])
      for (const auto& b : classes[rb]) out.addNeq(a, b);
  if (inconsistent_) out.data = DataFormula::bottom();
  return out;
}

Saturation saturate(const SepFormula& f) {
  Saturation s;
  auto touch = [&](const HeapTerm& t) {
    if (s.terms_.insert(t).second) s.parent_[t] = t;
  };
  touch(HeapTerm::null());
  for (const auto& [a, b] : f.pure.eqs) {
    touch(a);
    touch(b);
  }
  for (const auto& [a, b] : f.pure.neqs) {
    touch(a);
    touch(b);
  }
  std::vector<HeapTerm> cellAddrs;
  for (const auto& h : f.spatial) {
    if (const auto* p = std::get_if<PointsTo>(&h)) {
      touch(p->addr);
      for (const auto& t : p->succ) touch(t);
      cellAddrs.push_back(p->addr);
    } else if (const auto* z = std::get_if<PredApp>(&h)) {
      for (const auto& t : z->args) touch(t);
    }
  }
  std::function<HeapTerm(HeapTerm)> find = [&](HeapTerm t) {
    while (!(s.parent_[t] == t)) t = s.parent_[t];
    return t;
  };
  auto unite = [&](const HeapTerm& a, const HeapTerm& b) {
    HeapTerm ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (rb.isNull() || (!ra.isNull() && rb.name < ra.name)) std::swap(ra, rb);
    s.parent_[rb] = ra;
  };
  for (const auto& [a, b] : f.pure.eqs) unite(a, b);

  auto addNeq = [&](const HeapTerm& a, const HeapTerm& b) {
    HeapTerm ra = find(a), rb = find(b);
    if (ra == rb) {
      s.inconsistent_ = true;
      return;
    }
    s.repNeqs_.insert(Pure::orient(ra, rb));
  };
  for (const auto& [a, b] : f.pure.neqs) addNeq(a, b);
  for (size_t i = 0; i < cellAddrs.size(); ++i) {
    addNeq(cellAddrs[i], HeapTerm::null());
    for (size_t j = i + 1; j < cellAddrs.size(); ++j)
      addNeq(cellAddrs[i], cellAddrs[j]);
  }
  std::set<std::pair<HeapTerm, HeapTerm>> norm;
  for (const auto& [a, b] : s.repNeqs_) {
    HeapTerm ra = find(a), rb = find(b);
    if (ra == rb) s.inconsistent_ = true;
    norm.insert(Pure::orient(ra, rb));
  }
  s.repNeqs_ = std::move(norm);
  for (const auto& t : s.terms_) s.parent_[t] = find(t);
  return s;
}

bool isInconsistent(const SepFormula& f) {
  Saturation s = saturate(f);
  if (s.inconsistent()) return true;
  if (f.pure.hasReflexiveNeq()) return true;
  try {
    for (const auto& branch : f.pure.data.dnf())
      if (isSat(LinSystem(branch)).sat) return false;
    return true;
  } catch (const SizeBudgetExceeded&) {
    return false;
  }
}

// --- canonical form ---------------------------------------------------------------

namespace {

std::string maskedHeapletKey(const Heaplet& h, const std::set<std::string>& bound) {
  std::string raw = showHeaplet(h);
  std::string out;
  size_t i = 0;
  while (i < raw.size()) {
    if (isalpha(static_cast<unsigned char>(raw[i])) || raw[i] == '_' ||
        raw[i] == '#') {
      size_t j = i;
      while (j < raw.size() && (isalnum(static_cast<unsigned char>(raw[j])) ||
                                raw[j] == '_' || raw[j] == '#' || raw[j] == '$' || raw[j] == '\''))
        ++j;
      std::string id = raw.substr(i, j - i);
      out += bound.count(id) ? "?" : id;
      i = j;
    } else {
      out += raw[i++];
    }
  }
  return out;
}

}  // namespace

namespace {

DataFormula sortedData(const DataFormula& f) {
  using K = DataFormula::Kind;
  if (f.kind() != K::And && f.kind() != K::Or) return f;
  std::vector<DataFormula> kids;
  for (const auto& c : f.children()) kids.push_back(sortedData(c));
  std::sort(kids.begin(), kids.end(),
            [](const DataFormula& a, const DataFormula& b) {
              return a.show() < b.show();
            });
  kids.erase(std::unique(kids.begin(), kids.end(),
                         [](const DataFormula& a, const DataFormula& b) {
                           return a.show() == b.show();
                         }),
             kids.end());
  return f.kind() == K::And ? DataFormula::conj(std::move(kids))
                            : DataFormula::disj(std::move(kids));
}

SepFormula normalizeSorted(SepFormula g) {
  std::stable_sort(g.spatial.begin(), g.spatial.end(),
                   [](const Heaplet& a, const Heaplet& b) {
                     return showHeaplet(a) < showHeaplet(b);
                   });
  std::sort(g.exists.begin(), g.exists.end(),
            [](const BoundVar& a, const BoundVar& b) { return a.name < b.name; });
  g.pure.data = sortedData(g.pure.data);
  std::sort(g.pure.apps.begin(), g.pure.apps.end());
  return g;
}

}  // namespace

SepFormula canonical(const SepFormula& f) {
  SepFormula cur = f;
  std::set<std::string> avoid;
  for (const auto& [v, k] : allVars(cur)) avoid.insert(v);
  std::vector<BoundVar> originals = cur.exists;
  std::vector<std::string> ph;
  for (size_t i = 0; i < originals.size(); ++i) {
    std::string tmp = "#c" + std::to_string(i);
    while (avoid.count(tmp)) tmp += "x";
    avoid.insert(tmp);
    cur = renameBound(cur, originals[i].name, tmp);
    ph.push_back(tmp);
  }
  std::set<std::string> freeNames;
  for (const auto& [v, kk] : freeVars(cur)) freeNames.insert(v);
  auto target = [&](VarKind kind, size_t rank) {
    std::string nn = (kind == VarKind::Heap ? "_h" : "_d") + std::to_string(rank);
    while (freeNames.count(nn)) nn += "x";
    return nn;
  };
  size_t k = ph.size();
  if (k <= 6) {
    // exact: minimum printed form over all binder orderings
    std::vector<size_t> perm(k);
    for (size_t i = 0; i < k; ++i) perm[i] = i;
    std::optional<std::string> best;
    SepFormula bestF;
    do {
      SepFormula g = cur;
      for (size_t rank = 0; rank < k; ++rank) {
        const BoundVar& b = cur.exists[perm[rank]];
        std::string nn = target(b.kind, rank);
        g = renameBound(g, b.name, nn);
      }
      g = normalizeSorted(std::move(g));
      std::string s = g.show();
      if (!best || s < *best) {
        best = s;
        bestF = g;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (!best) return normalizeSorted(std::move(cur));
    return bestF;
  }
  // heuristic ranking for large binder counts: order by first occurrence in a
  // masked-key-sorted body, iterated to a fixpoint
  for (int pass = 0; pass < 3; ++pass) {
    // re-placeholder so rank assignment cannot collide with current names
    std::vector<BoundVar> bs = cur.exists;
    for (size_t i = 0; i < bs.size(); ++i)
      cur = renameBound(cur, bs[i].name,
                        "#q" + std::to_string(pass) + "_" + std::to_string(i));
    std::set<std::string> bound;
    for (const auto& b : cur.exists) bound.insert(b.name);
    std::stable_sort(cur.spatial.begin(), cur.spatial.end(),
                     [&](const Heaplet& a, const Heaplet& b) {
                       return maskedHeapletKey(a, bound) <
                              maskedHeapletKey(b, bound);
                     });
    std::string body = cur.pure.show();
    for (const auto& h : cur.spatial) body += "|" + showHeaplet(h);
    std::vector<std::pair<size_t, size_t>> pos;
    for (size_t i = 0; i < cur.exists.size(); ++i) {
      size_t p = body.find(cur.exists[i].name);
      pos.push_back({p == std::string::npos ? body.size() + i : p, i});
    }
    std::sort(pos.begin(), pos.end());
    SepFormula next = cur;
    for (size_t rank = 0; rank < pos.size(); ++rank) {
      const auto& b = cur.exists[pos[rank].second];
      next = renameBound(next, b.name, target(b.kind, rank));
    }
    std::sort(next.exists.begin(), next.exists.end(),
              [](const BoundVar& a, const BoundVar& b) { return a.name < b.name; });
    bool stable = next.show() == cur.show();
    cur = next;
    if (stable) break;
  }
  return normalizeSorted(std::move(cur));
}

bool alphaEq(const SepFormula& a, const SepFormula& b) {
  return canonical(a).show() == canonical(b).show();
}

// --- builtins ----------------------------------------------------------------------

PredRegistry PredRegistry::builtins() {
  PredRegistry reg;
  {
    // ls(R; x, y) := (x == y : emp)
    //              | (exists d, n. x != y && R(d) : x |-> [d; n] * ls(R; n, y))
    PredDef ls;
    ls.name = "ls";
    ls.refParams = {{"R", 1}};
    ls.heapParams = {"x", "y"};
    SepFormula base;
    base.pure.addEq(HeapTerm::var("x"), HeapTerm::var("y"));
    ls.cases.push_back(base);
    SepFormula rec;
    rec.exists = {{"d", VarKind::Data}, {"n", VarKind::Heap}};
    rec.pure.addNeq(HeapTerm::var("x"), HeapTerm::var("y"));
    rec.pure.apps.push_back(QueryApp{"R", {DataTerm::var("d")}});
    PointsTo cell;
    cell.addr = HeapTerm::var("x");
    cell.data = {DataTerm::var("d")};
    cell.succ = {HeapTerm::var("n")};
    rec.spatial.push_back(cell);
    PredApp rest;
    rest.pred = "ls";
    rest.refs = {RefTerm::mkVar("R", 1)};
    rest.args = {HeapTerm::var("n"), HeapTerm::var("y")};
    rec.spatial.push_back(rest);
    ls.cases.push_back(rec);
    reg.add(std::move(ls));
  }
  {
    // bt(Q; x) over records with one data and two heap fields:
    // (x == null : emp) | (exists d, l, r. Q(d) : x |-> [d; l, r] * bt(Q; l) * bt(Q; r))
    PredDef bt;
    bt.name = "bt";
    bt.refParams = {{"Q", 1}};
    bt.heapParams = {"x"};
    SepFormula base;
    base.pure.addEq(HeapTerm::var("x"), HeapTerm::null());
    bt.cases.push_back(base);
    SepFormula rec;
    rec.exists = {{"d", VarKind::Data}, {"l", VarKind::Heap}, {"r", VarKind::Heap}};
    rec.pure.apps.push_back(QueryApp{"Q", {DataTerm::var("d")}});
    PointsTo cell;
    cell.addr = HeapTerm::var("x");
    cell.data = {DataTerm::var("d")};
    cell.succ = {HeapTerm::var("l"), HeapTerm::var("r")};
    rec.spatial.push_back(cell);
    PredApp lsub;
    lsub.pred = "bt";
    lsub.refs = {RefTerm::mkVar("Q", 1)};
    lsub.args = {HeapTerm::var("l")};
    PredApp rsub = lsub;
    rsub.args = {HeapTerm::var("r")};
    rec.spatial.push_back(lsub);
    rec.spatial.push_back(rsub);
    bt.cases.push_back(rec);
    reg.add(std::move(bt));
  }
  return reg;
}

}  // namespace splinter
