#include "splinter/symexec.hpp"

#include <cassert>

namespace splinter {

namespace {

std::set<std::string> avoidSet(const SepFormula& s) {
  std::set<std::string> avoid;
  for (const auto& [v, k] : allVars(s)) avoid.insert(v);
  return avoid;
}

// Rename program variable `x` to a fresh primed copy throughout; returns the
// fresh name. The formula keeps describing the pre-state value under the new
// name while `x` is rebound by the caller.
std::string primeVar(SepFormula& s, const std::string& x, VarKind kind) {
  std::set<std::string> avoid = avoidSet(s);
  avoid.insert(x);
  std::string nx = freshName(x, avoid);
  if (kind == VarKind::Heap)
    s = substHeap(s, x, HeapTerm::var(nx));
  else
    s = substData(s, x, DataTerm::var(nx));
  s.exists.push_back({nx, kind});
  return nx;
}

}  // namespace

std::optional<size_t> findCell(const SepFormula& s, const std::string& x) {
  Saturation sat = saturate(s);
  HeapTerm xt = HeapTerm::var(x);
  for (size_t i = 0; i < s.spatial.size(); ++i) {
    const auto* p = std::get_if<PointsTo>(&s.spatial[i]);
    if (!p) continue;
    if (sat.provablyEq(p->addr, xt)) return i;
  }
  return std::nullopt;
}

std::optional<SepFormula> execCmd(const Command& c, const SepFormula& s) {
  if (const auto* a = std::get_if<CmdAssignHeap>(&c)) {
    SepFormula out = s;
    HeapTerm rhs = a->rhs;
    std::string nx = primeVar(out, a->lhs, VarKind::Heap);
    if (!rhs.isNull() && rhs.name == a->lhs) rhs = HeapTerm::var(nx);
    out.pure.addEq(HeapTerm::var(a->lhs), rhs);
    return out;
  }
  if (const auto* a = std::get_if<CmdAssignData>(&c)) {
    SepFormula out = s;
    std::string na = primeVar(out, a->lhs, VarKind::Data);
    DataTerm rhs = a->rhs.subst(a->lhs, DataTerm::var(na));
    out.pure.conjoinData(atomEq(DataTerm::var(a->lhs), rhs));
    return out;
  }
  if (const auto* a = std::get_if<CmdHavoc>(&c)) {
    SepFormula out = s;
    primeVar(out, a->lhs, VarKind::Data);
    return out;
  }
  if (const auto* a = std::get_if<CmdAssume>(&c)) {
    SepFormula out = s;
    out.pure.conjoin(a->cond);
    return out;
  }
  if (const auto* a = std::get_if<CmdAlloc>(&c)) {
    SepFormula out = s;
    primeVar(out, a->lhs, VarKind::Heap);
    PointsTo cell;
    cell.addr = HeapTerm::var(a->lhs);
    std::set<std::string> avoid = avoidSet(out);
    for (int i = 0; i < a->ndata; ++i) {
      std::string d = freshName("d", avoid);
      avoid.insert(d);
      out.exists.push_back({d, VarKind::Data});
      cell.data.push_back(DataTerm::var(d));
    }
    for (int i = 0; i < a->nsucc; ++i) {
      std::string n = freshName("n", avoid);
      avoid.insert(n);
      out.exists.push_back({n, VarKind::Heap});
      cell.succ.push_back(HeapTerm::var(n));
    }
    out.spatial.push_back(cell);
    return out;
  }
  if (const auto* a = std::get_if<CmdFree>(&c)) {
    auto idx = findCell(s, a->obj);
    if (!idx) return std::nullopt;
    SepFormula out = s;
    out.spatial.erase(out.spatial.begin() + static_cast<long>(*idx));
    // disequalities to every remaining cell address
    for (const auto& h : out.spatial)
      if (const auto* p = std::get_if<PointsTo>(&h))
        out.pure.addNeq(HeapTerm::var(a->obj), p->addr);
    return out;
  }
  if (const auto* a = std::get_if<CmdHeapStore>(&c)) {
    auto idx = findCell(s, a->obj);
    if (!idx) return std::nullopt;
    if (a->field < 0 ||
        a->field >= static_cast<int>(
                        std::get<PointsTo>(s.spatial[*idx]).succ.size()))
      return std::nullopt;
    SepFormula out = s;
    PointsTo& cell = std::get<PointsTo>(out.spatial[*idx]);
    cell.addr = HeapTerm::var(a->obj);
    cell.succ[a->field] = a->value;
    return out;
  }
  if (const auto* a = std::get_if<CmdDataStore>(&c)) {
    auto idx = findCell(s, a->obj);
    if (!idx) return std::nullopt;
    if (a->field < 0 ||
        a->field >= static_cast<int>(
                        std::get<PointsTo>(s.spatial[*idx]).data.size()))
      return std::nullopt;
    SepFormula out = s;
    PointsTo& cell = std::get<PointsTo>(out.spatial[*idx]);
    cell.addr = HeapTerm::var(a->obj);
    cell.data[a->field] = a->value;
    return out;
  }
  if (const auto* a = std::get_if<CmdHeapLoad>(&c)) {
    auto idx = findCell(s, a->obj);
    if (!idx) return std::nullopt;
    const PointsTo& pre = std::get<PointsTo>(s.spatial[*idx]);
    if (a->field < 0 || a->field >= static_cast<int>(pre.succ.size()))
      return std::nullopt;
    SepFormula out = s;
    std::string ny = primeVar(out, a->lhs, VarKind::Heap);
    HeapTerm val = std::get<PointsTo>(out.spatial[*idx]).succ[a->field];
    (void)ny;
    out.pure.addEq(HeapTerm::var(a->lhs), val);
    return out;
  }
  if (const auto* a = std::get_if<CmdDataLoad>(&c)) {
    auto idx = findCell(s, a->obj);
    if (!idx) return std::nullopt;
    const PointsTo& pre = std::get<PointsTo>(s.spatial[*idx]);
    if (a->field < 0 || a->field >= static_cast<int>(pre.data.size()))
      return std::nullopt;
    SepFormula out = s;
    std::string na = primeVar(out, a->lhs, VarKind::Data);
    DataTerm val = std::get<PointsTo>(out.spatial[*idx]).data[a->field];
    (void)na;
    out.pure.conjoinData(atomEq(DataTerm::var(a->lhs), val));
    return out;
  }
  return std::nullopt;
}

ExecSeq execPath(const Path& pi) {
  ExecSeq seq;
  seq.states.push_back(SepFormula::emp());
  for (size_t i = 0; i < pi.size(); ++i) {
    auto next = execCmd(pi.cmd(i), seq.states.back());
    if (!next) break;
    seq.states.push_back(std::move(*next));
    seq.k = i + 1;
  }
  return seq;
}

bool evalPure(const Pure& cond, const ConcreteState& st) {
  auto locOf = [&](const HeapTerm& t) -> long {
    if (t.isNull()) return 0;
    auto it = st.heapVars.find(t.name);
    return it == st.heapVars.end() ? 0 : it->second;
  };
  for (const auto& [a, b] : cond.eqs)
    if (locOf(a) != locOf(b)) return false;
  for (const auto& [a, b] : cond.neqs)
    if (locOf(a) == locOf(b)) return false;
  return evalDataFormula(cond.data, st.data);
}

ConcreteRun::Status stepConcrete(const Command& c, ConcreteState& st,
                                 const std::vector<Rat>& inputs,
                                 size_t& inputPos) {
  auto nextInput = [&]() -> Rat {
    return inputPos < inputs.size() ? inputs[inputPos++] : Rat(0);
  };
  auto dataOf = [&](const DataTerm& t) { return evalDataTerm(t, st.data); };
  auto locOf = [&](const HeapTerm& t) -> long {
    if (t.isNull()) return 0;
    auto it = st.heapVars.find(t.name);
    return it == st.heapVars.end() ? 0 : it->second;
  };
  using St = ConcreteRun::Status;
  if (const auto* a = std::get_if<CmdAssignHeap>(&c)) {
    st.heapVars[a->lhs] = locOf(a->rhs);
  } else if (const auto* a = std::get_if<CmdAssignData>(&c)) {
    st.data[a->lhs] = dataOf(a->rhs);
  } else if (const auto* a = std::get_if<CmdHavoc>(&c)) {
    st.data[a->lhs] = nextInput();
  } else if (const auto* a = std::get_if<CmdAssume>(&c)) {
    if (!evalPure(a->cond, st)) return St::AssumeFail;
  } else if (const auto* a = std::get_if<CmdAlloc>(&c)) {
    long loc = st.nextLoc++;
    st.cells[loc] = {std::vector<Rat>(a->ndata, Rat(0)),
                     std::vector<long>(a->nsucc, 0)};
    st.heapVars[a->lhs] = loc;
  } else if (const auto* a = std::get_if<CmdFree>(&c)) {
    long loc = locOf(HeapTerm::var(a->obj));
    if (loc == 0 || !st.cells.count(loc)) return St::MemFault;
    st.cells.erase(loc);
  } else if (const auto* a = std::get_if<CmdHeapStore>(&c)) {
    long loc = locOf(HeapTerm::var(a->obj));
    auto it = st.cells.find(loc);
    if (loc == 0 || it == st.cells.end()) return St::MemFault;
    it->second.second[a->field] = locOf(a->value);
  } else if (const auto* a = std::get_if<CmdHeapLoad>(&c)) {
    long loc = locOf(HeapTerm::var(a->obj));
    auto it = st.cells.find(loc);
    if (loc == 0 || it == st.cells.end()) return St::MemFault;
    st.heapVars[a->lhs] = it->second.second[a->field];
  } else if (const auto* a = std::get_if<CmdDataStore>(&c)) {
    long loc = locOf(HeapTerm::var(a->obj));
    auto it = st.cells.find(loc);
    if (loc == 0 || it == st.cells.end()) return St::MemFault;
    it->second.first[a->field] = dataOf(a->value);
  } else if (const auto* a = std::get_if<CmdDataLoad>(&c)) {
    long loc = locOf(HeapTerm::var(a->obj));
    auto it = st.cells.find(loc);
    if (loc == 0 || it == st.cells.end()) return St::MemFault;
    st.data[a->lhs] = it->second.first[a->field];
  }
  return St::Ok;
}

ConcreteRun runConcrete(const Path& pi, const std::vector<Rat>& inputs) {
  ConcreteRun run;
  size_t inputPos = 0;
  for (size_t i = 0; i < pi.size(); ++i) {
    auto st = stepConcrete(pi.cmd(i), run.state, inputs, inputPos);
    if (st != ConcreteRun::Status::Ok) {
      run.status = st;
      run.step = i;
      return run;
    }
  }
  return run;
}

}  // namespace splinter
