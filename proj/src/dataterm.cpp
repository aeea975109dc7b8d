#include "splinter/dataterm.hpp"

#include <algorithm>
#include <sstream>

namespace splinter {

DataTerm& DataTerm::operator+=(const DataTerm& o) {
  for (const auto& [v, c] : o.coeffs) {
    auto it = coeffs.find(v);
    if (it == coeffs.end()) {
      if (c != 0) coeffs[v] = c;
    } else {
      it->second += c;
      if (it->second == 0) coeffs.erase(it);
    }
  }
  constant += o.constant;
  return *this;
}

DataTerm& DataTerm::operator-=(const DataTerm& o) {
  DataTerm neg = o;
  neg *= Rat(-1);
  return *this += neg;
}

DataTerm& DataTerm::operator*=(const Rat& k) {
  if (k == 0) {
    coeffs.clear();
    constant = 0;
    return *this;
  }
  for (auto& [v, c] : coeffs) c *= k;
  constant *= k;
  return *this;
}

DataTerm DataTerm::subst(const std::string& v, const DataTerm& t) const {
  auto it = coeffs.find(v);
  if (it == coeffs.end()) return *this;
  DataTerm out = *this;
  Rat k = it->second;
  out.coeffs.erase(v);
  DataTerm scaled = t;
  scaled *= k;
  out += scaled;
  return out;
}

void DataTerm::collectVars(std::set<std::string>& out) const {
  for (const auto& [v, c] : coeffs) out.insert(v);
}

bool DataTerm::operator<(const DataTerm& o) const {
  if (constant != o.constant) return constant < o.constant;
  return std::lexicographical_compare(
      coeffs.begin(), coeffs.end(), o.coeffs.begin(), o.coeffs.end(),
      [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
      });
}

std::string DataTerm::show() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, c] : coeffs) {
    if (first) {
      if (c == 1)
        os << v;
      else if (c == -1)
        os << "-" << v;
      else
        os << showRat(c) << "*" << v;
      first = false;
    } else {
      if (c > 0)
        os << " + " << (c == 1 ? "" : showRat(c) + "*") << v;
      else {
        Rat p = -c;
        os << " - " << (p == 1 ? "" : showRat(p) + "*") << v;
      }
    }
  }
  if (first) {
    os << showRat(constant);
  } else if (constant != 0) {
    if (constant > 0)
      os << " + " << showRat(constant);
    else
      os << " - " << showRat(Rat(-constant));
  }
  return os.str();
}

DataAtom::DataAtom(const DataTerm& lhs, Rel r, const DataTerm& rhs) {
  DataTerm d = lhs;
  d -= rhs;
  coeffs = d.coeffs;
  bound = -d.constant;
  rel = r;
}

bool DataAtom::trivialHolds() const {
  switch (rel) {
    case Rel::Le: return 0 <= bound;
    case Rel::Lt: return 0 < bound;
    case Rel::Eq: return 0 == bound;
  }
  return false;
}

DataAtom DataAtom::subst(const std::string& v, const DataTerm& t) const {
  auto it = coeffs.find(v);
  if (it == coeffs.end()) return *this;
  DataTerm lhs;
  lhs.coeffs = coeffs;
  lhs.constant = -bound;
  lhs = lhs.subst(v, t);
  DataAtom out;
  out.coeffs = lhs.coeffs;
  out.bound = -lhs.constant;
  out.rel = rel;
  return out;
}

void DataAtom::collectVars(std::set<std::string>& out) const {
  for (const auto& [v, c] : coeffs) out.insert(v);
}

bool DataAtom::operator<(const DataAtom& o) const {
  if (rel != o.rel) return rel < o.rel;
  if (bound != o.bound) return bound < o.bound;
  DataTerm a = lhsTerm(), b = o.lhsTerm();
  return a < b;
}

std::string DataAtom::show() const {
  std::ostringstream os;
  DataTerm t = lhsTerm();
  os << t.show();
  switch (rel) {
    case Rel::Le: os << " <= "; break;
    case Rel::Lt: os << " < "; break;
    case Rel::Eq: os << " == "; break;
  }
  os << showRat(bound);
  return os.str();
}

DataFormula DataFormula::atom(DataAtom a) {
  if (a.trivial()) return a.trivialHolds() ? top() : bottom();
  DataFormula f;
  f.kind_ = Kind::Atom;
  f.atom_ = std::move(a);
  return f;
}

DataFormula DataFormula::conj(std::vector<DataFormula> fs) {
  std::vector<DataFormula> kids;
  for (auto& f : fs) {
    if (f.isFalse()) return bottom();
    if (f.isTrue()) continue;
    if (f.kind_ == Kind::And)
      for (auto& k : f.kids_) kids.push_back(std::move(k));
    else
      kids.push_back(std::move(f));
  }
  if (kids.empty()) return top();
  if (kids.size() == 1) return kids[0];
  DataFormula f;
  f.kind_ = Kind::And;
  f.kids_ = std::move(kids);
  return f;
}

DataFormula DataFormula::disj(std::vector<DataFormula> fs) {
  std::vector<DataFormula> kids;
  for (auto& f : fs) {
    if (f.isTrue()) return top();
    if (f.isFalse()) continue;
    if (f.kind_ == Kind::Or)
      for (auto& k : f.kids_) kids.push_back(std::move(k));
    else
      kids.push_back(std::move(f));
  }
  if (kids.empty()) return bottom();
  if (kids.size() == 1) return kids[0];
  DataFormula f;
  f.kind_ = Kind::Or;
  f.kids_ = std::move(kids);
  return f;
}

DataFormula DataFormula::subst(const std::string& v, const DataTerm& t) const {
  switch (kind_) {
    case Kind::True:
    case Kind::False: return *this;
    case Kind::Atom: return atom(atom_.subst(v, t));
    case Kind::And:
    case Kind::Or: {
      std::vector<DataFormula> kids;
      kids.reserve(kids_.size());
      for (const auto& k : kids_) kids.push_back(k.subst(v, t));
      return kind_ == Kind::And ? conj(std::move(kids)) : disj(std::move(kids));
    }
  }
  return *this;
}

void DataFormula::collectVars(std::set<std::string>& out) const {
  if (kind_ == Kind::Atom) atom_.collectVars(out);
  for (const auto& k : kids_) k.collectVars(out);
}

DataFormula DataFormula::complement() const {
  switch (kind_) {
    case Kind::True: return bottom();
    case Kind::False: return top();
    case Kind::Atom: {
      const DataAtom& a = atom_;
      DataTerm t = a.lhsTerm();
      DataTerm b(a.bound);
      switch (a.rel) {
        case Rel::Le: return atomGt(t, b);
        case Rel::Lt: return atomGe(t, b);
        case Rel::Eq: return disj({atomLt(t, b), atomGt(t, b)});
      }
      return bottom();
    }
    case Kind::And:
    case Kind::Or: {
      std::vector<DataFormula> kids;
      kids.reserve(kids_.size());
      for (const auto& k : kids_) kids.push_back(k.complement());
      return kind_ == Kind::And ? disj(std::move(kids)) : conj(std::move(kids));
    }
  }
  return bottom();
}

std::vector<std::vector<DataAtom>> DataFormula::dnf(size_t branchCap) const {
  switch (kind_) {
    case Kind::True: return {{}};
    case Kind::False: return {};
    case Kind::Atom: return {{atom_}};
    case Kind::Or: {
      std::vector<std::vector<DataAtom>> out;
      for (const auto& k : kids_) {
        auto sub = k.dnf(branchCap);
        for (auto& b : sub) out.push_back(std::move(b));
        if (out.size() > branchCap)
          throw SizeBudgetExceeded("dnf branch cap exceeded");
      }
      return out;
    }
    case Kind::And: {
      std::vector<std::vector<DataAtom>> out = {{}};
      for (const auto& k : kids_) {
        auto sub = k.dnf(branchCap);
        std::vector<std::vector<DataAtom>> next;
        for (const auto& a : out)
          for (const auto& b : sub) {
            auto row = a;
            row.insert(row.end(), b.begin(), b.end());
            next.push_back(std::move(row));
            if (next.size() > branchCap)
              throw SizeBudgetExceeded("dnf branch cap exceeded");
          }
        out = std::move(next);
        if (out.empty()) return out;
      }
      return out;
    }
  }
  return {};
}

std::string DataFormula::show() const {
  switch (kind_) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return atom_.show();
    case Kind::And:
    case Kind::Or: {
      std::ostringstream os;
      os << "(";
      for (size_t i = 0; i < kids_.size(); ++i) {
        if (i) os << (kind_ == Kind::And ? " && " : " || ");
        os << kids_[i].show();
      }
      os << ")";
      return os.str();
    }
  }
  return "?";
}

QueryApp QueryApp::subst(const std::string& v, const DataTerm& t) const {
  QueryApp out = *this;
  for (auto& a : out.args) a = a.subst(v, t);
  return out;
}

void QueryApp::collectVars(std::set<std::string>& out) const {
  for (const auto& a : args) a.collectVars(out);
}

bool QueryApp::operator<(const QueryApp& o) const {
  if (pred != o.pred) return pred < o.pred;
  return std::lexicographical_compare(args.begin(), args.end(), o.args.begin(),
                                      o.args.end());
}

std::string QueryApp::show() const {
  std::ostringstream os;
  os << pred << "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    os << args[i].show();
  }
  os << ")";
  return os.str();
}

Rat evalDataTerm(const DataTerm& t, const std::map<std::string, Rat>& env) {
  Rat s = t.constant;
  for (const auto& [v, c] : t.coeffs) {
    auto it = env.find(v);
    s += c * (it == env.end() ? Rat(0) : it->second);
  }
  return s;
}

bool evalDataFormula(const DataFormula& f, const std::map<std::string, Rat>& env) {
  using K = DataFormula::Kind;
  switch (f.kind()) {
    case K::True:
      return true;
    case K::False:
      return false;
    case K::Atom: {
      const DataAtom& a = f.atomValue();
      Rat s = 0;
      for (const auto& [v, c] : a.coeffs) {
        auto it = env.find(v);
        s += c * (it == env.end() ? Rat(0) : it->second);
      }
      switch (a.rel) {
        case Rel::Le: return s <= a.bound;
        case Rel::Lt: return s < a.bound;
        case Rel::Eq: return s == a.bound;
      }
      return false;
    }
    case K::And:
      for (const auto& k : f.children())
        if (!evalDataFormula(k, env)) return false;
      return true;
    case K::Or:
      for (const auto& k : f.children())
        if (evalDataFormula(k, env)) return true;
      return false;
  }
  return false;
}

DataFormula atomLe(const DataTerm& a, const DataTerm& b) {
  return DataFormula::atom(DataAtom(a, Rel::Le, b));
}
DataFormula atomLt(const DataTerm& a, const DataTerm& b) {
  return DataFormula::atom(DataAtom(a, Rel::Lt, b));
}
DataFormula atomEq(const DataTerm& a, const DataTerm& b) {
  return DataFormula::atom(DataAtom(a, Rel::Eq, b));
}
DataFormula atomGe(const DataTerm& a, const DataTerm& b) { return atomLe(b, a); }
DataFormula atomGt(const DataTerm& a, const DataTerm& b) { return atomLt(b, a); }
DataFormula atomNeq(const DataTerm& a, const DataTerm& b) {
  return DataFormula::disj({atomLt(a, b), atomLt(b, a)});
}

}  // namespace splinter
