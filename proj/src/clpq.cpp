#include "ecrv/clpq.hpp"

#include <algorithm>
#include <sstream>

namespace ecrv::clpq {

using ecrv::ToString;

// ---------------------------------------------------------------- LinExpr

LinExpr LinExpr::Var(VarId v, Rational coeff) {
  LinExpr e;
  if (coeff != 0) e.coeffs_[v] = std::move(coeff);
  return e;
}

Rational LinExpr::coeff(VarId v) const {
  auto it = coeffs_.find(v);
  return it == coeffs_.end() ? Rational(0) : it->second;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  for (const auto& [v, c] : o.coeffs_) {
    Rational& mine = coeffs_[v];
    mine += c;
    if (mine == 0) coeffs_.erase(v);
  }
  constant_ += o.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [v, c] : o.coeffs_) {
    Rational& mine = coeffs_[v];
    mine -= c;
    if (mine == 0) coeffs_.erase(v);
  }
  constant_ -= o.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(const Rational& k) {
  if (k == 0) {
    coeffs_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto& [v, c] : coeffs_) c *= k;
  constant_ *= k;
  return *this;
}

LinExpr LinExpr::Substitute(VarId v, const LinExpr& e) const {
  auto it = coeffs_.find(v);
  if (it == coeffs_.end()) return *this;
  Rational c = it->second;
  LinExpr out = *this;
  out.coeffs_.erase(v);
  out += e * c;
  return out;
}

Rational LinExpr::Evaluate(const std::map<VarId, Rational>& point) const {
  Rational sum = constant_;
  for (const auto& [v, c] : coeffs_) {
    auto it = point.find(v);
    if (it != point.end()) sum += c * it->second;
  }
  return sum;
}

// ----------------------------------------------------------- LinConstraint

LinConstraint LinConstraint::Make(const LinExpr& lhs, Op op, const LinExpr& rhs) {
  switch (op) {
    case Op::kEq:
      return {lhs - rhs, Rel::kEq};
    case Op::kNe:
      return {lhs - rhs, Rel::kNe};
    case Op::kLt:
      return {lhs - rhs, Rel::kLt};
    case Op::kLe:
      return {lhs - rhs, Rel::kLe};
    case Op::kGt:
      return {rhs - lhs, Rel::kLt};
    case Op::kGe:
      return {rhs - lhs, Rel::kLe};
  }
  return {};
}

namespace {

bool ConstantHolds(const Rational& k, Rel rel) {
  switch (rel) {
    case Rel::kEq:
      return k == 0;
    case Rel::kNe:
      return k != 0;
    case Rel::kLt:
      return k < 0;
    case Rel::kLe:
      return k <= 0;
  }
  return false;
}

}  // namespace

bool LinConstraint::is_trivially_true() const {
  return expr.is_constant() && ConstantHolds(expr.constant(), rel);
}

bool LinConstraint::is_trivially_false() const {
  return expr.is_constant() && !ConstantHolds(expr.constant(), rel);
}

std::set<VarId> LinConstraint::vars() const {
  std::set<VarId> out;
  for (const auto& [v, c] : expr.coeffs()) out.insert(v);
  return out;
}

LinConstraint LinConstraint::Canonical() const {
  if (expr.is_constant()) return *this;
  Rational lead = expr.coeffs().begin()->second;
  Rational scale = 1 / abs(lead);
  if (rel == Rel::kEq || rel == Rel::kNe) scale = 1 / lead;
  return {expr * scale, rel};
}

bool LinConstraint::Holds(const std::map<VarId, Rational>& point) const {
  return ConstantHolds(expr.Evaluate(point), rel);
}

// -------------------------------------------------------- Fourier-Motzkin

namespace {

// Canonical rows keyed by coefficient vector; keeps only the tightest row per
// direction. Returns false if a constant row is violated.
struct RowSet {
  std::map<std::map<VarId, Rational>, LinConstraint> rows;
  bool ok = true;

  void Insert(const LinConstraint& raw) {
    if (!ok) return;
    if (raw.expr.is_constant()) {
      if (!ConstantHolds(raw.expr.constant(), raw.rel)) ok = false;
      return;
    }
    LinConstraint c = raw.Canonical();
    auto [it, inserted] = rows.emplace(c.expr.coeffs(), c);
    if (inserted) return;
    LinConstraint& cur = it->second;
    // Larger constant is tighter for `sum + k rel 0`.
    if (c.expr.constant() > cur.expr.constant() ||
        (c.expr.constant() == cur.expr.constant() && c.rel == Rel::kLt)) {
      cur = c;
    }
  }
};

bool FeasibleInequalities(Conjunction rows_in) {
  RowSet set;
  for (const auto& r : rows_in) set.Insert(r);
  if (!set.ok) return false;
  while (true) {
    if (set.rows.empty()) return true;
    std::map<VarId, std::pair<size_t, size_t>> counts;
    for (const auto& [k, r] : set.rows) {
      for (const auto& [v, c] : r.expr.coeffs()) {
        if (c > 0) {
          ++counts[v].first;
        } else {
          ++counts[v].second;
        }
      }
    }
    VarId best = counts.begin()->first;
    size_t best_cost = SIZE_MAX;
    for (const auto& [v, pn] : counts) {
      size_t cost = pn.first * pn.second;
      if (cost < best_cost) {
        best_cost = cost;
        best = v;
      }
    }
    std::vector<LinConstraint> pos, neg;
    RowSet next;
    for (const auto& [k, r] : set.rows) {
      Rational c = r.expr.coeff(best);
      if (c > 0) {
        pos.push_back(r);
      } else if (c < 0) {
        neg.push_back(r);
      } else {
        next.Insert(r);
      }
    }
    for (const auto& p : pos) {
      Rational a = p.expr.coeff(best);
      for (const auto& n : neg) {
        Rational b = -n.expr.coeff(best);
        LinConstraint combo{p.expr * b + n.expr * a,
                            (p.rel == Rel::kLt || n.rel == Rel::kLt) ? Rel::kLt : Rel::kLe};
        next.Insert(combo);
        if (!next.ok) return false;
      }
    }
    if (!next.ok) return false;
    set = std::move(next);
  }
}

// Splits `cs` into equalities and inequalities; eliminates equalities by
// substitution. Returns false if a constant contradiction shows up.
bool EliminateEqualities(const Conjunction& cs, Conjunction& eqs_out, Conjunction& ineqs,
                         const std::set<VarId>* keep) {
  Conjunction eqs;
  for (const auto& c : cs) {
    if (c.rel == Rel::kNe) throw std::invalid_argument("disequality in conjunction");
    if (c.rel == Rel::kEq) {
      eqs.push_back(c);
    } else {
      ineqs.push_back(c);
    }
  }
  while (!eqs.empty()) {
    LinConstraint eq = eqs.back();
    eqs.pop_back();
    if (eq.expr.is_constant()) {
      if (eq.expr.constant() != 0) return false;
      continue;
    }
    // Prefer eliminating a variable outside `keep`, largest id first.
    std::optional<VarId> pivot;
    for (auto it = eq.expr.coeffs().rbegin(); it != eq.expr.coeffs().rend(); ++it) {
      if (!keep || !keep->count(it->first)) {
        pivot = it->first;
        break;
      }
    }
    if (!pivot) {
      eqs_out.push_back(eq);
      continue;
    }
    Rational a = eq.expr.coeff(*pivot);
    LinExpr rest = eq.expr;
    rest = rest.Substitute(*pivot, LinExpr());
    LinExpr value = rest * (Rational(-1) / a);
    for (auto& e : eqs) e.expr = e.expr.Substitute(*pivot, value);
    for (auto& e : eqs_out) e.expr = e.expr.Substitute(*pivot, value);
    for (auto& i : ineqs) i.expr = i.expr.Substitute(*pivot, value);
  }
  for (const auto& e : eqs_out) {
    if (e.is_trivially_false()) return false;
  }
  for (const auto& i : ineqs) {
    if (i.is_trivially_false()) return false;
  }
  return true;
}

Conjunction FMEliminate(Conjunction rows, VarId v) {
  Conjunction pos, neg, out;
  for (auto& r : rows) {
    Rational c = r.expr.coeff(v);
    if (c > 0) {
      pos.push_back(r);
    } else if (c < 0) {
      neg.push_back(r);
    } else {
      out.push_back(r);
    }
  }
  for (const auto& p : pos) {
    Rational a = p.expr.coeff(v);
    for (const auto& n : neg) {
      Rational b = -n.expr.coeff(v);
      out.push_back({p.expr * b + n.expr * a,
                     (p.rel == Rel::kLt || n.rel == Rel::kLt) ? Rel::kLt : Rel::kLe});
    }
  }
  RowSet set;
  for (const auto& r : out) set.Insert(r);
  Conjunction result;
  if (!set.ok) {
    result.push_back({LinExpr(Rational(1)), Rel::kLe});
    return result;
  }
  for (auto& [k, r] : set.rows) result.push_back(r);
  return result;
}

}  // namespace

bool IsSatisfiable(const Conjunction& cs) {
  Conjunction eqs, ineqs;
  if (!EliminateEqualities(cs, eqs, ineqs, nullptr)) return false;
  return FeasibleInequalities(std::move(ineqs));
}

Conjunction RemoveRedundant(const Conjunction& cs) {
  Conjunction eqs, rows;
  {
    RowSet set;
    for (const auto& c : cs) {
      if (c.is_trivially_true()) continue;
      if (c.rel == Rel::kEq) {
        LinConstraint k = c.Canonical();
        if (std::find(eqs.begin(), eqs.end(), k) == eqs.end()) eqs.push_back(k);
      } else {
        set.Insert(c);
      }
    }
    for (auto& [k, r] : set.rows) rows.push_back(r);
  }
  // Drop inequalities implied by everything else.
  for (size_t i = 0; i < rows.size();) {
    Conjunction others = eqs;
    for (size_t j = 0; j < rows.size(); ++j) {
      if (j != i) others.push_back(rows[j]);
    }
    bool implied = true;
    for (const auto& neg : Negate(rows[i])) {
      Conjunction test = others;
      test.push_back(neg);
      if (IsSatisfiable(test)) {
        implied = false;
        break;
      }
    }
    if (implied) {
      rows.erase(rows.begin() + static_cast<long>(i));
    } else {
      ++i;
    }
  }
  // Pairs e <= 0 and -e <= 0 collapse into e = 0.
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = i + 1; j < rows.size(); ++j) {
      if (rows[i].rel == Rel::kLe && rows[j].rel == Rel::kLe &&
          rows[i].expr == -rows[j].expr) {
        eqs.push_back(LinConstraint{rows[i].expr, Rel::kEq}.Canonical());
        rows.erase(rows.begin() + static_cast<long>(j));
        rows.erase(rows.begin() + static_cast<long>(i));
        --i;
        break;
      }
    }
  }
  Conjunction out = eqs;
  out.insert(out.end(), rows.begin(), rows.end());
  std::stable_sort(out.begin(), out.end(), [](const LinConstraint& a, const LinConstraint& b) {
    auto va = a.vars(), vb = b.vars();
    if (va != vb) return va < vb;
    if (a.rel != b.rel) return a.rel == Rel::kEq;
    // Lower bounds (negative leading coefficient) before upper bounds.
    return a.expr.coeffs().begin()->second < b.expr.coeffs().begin()->second;
  });
  return out;
}

Conjunction ProjectConjunction(const Conjunction& cs, const std::set<VarId>& keep) {
  Conjunction eqs, ineqs;
  if (!EliminateEqualities(cs, eqs, ineqs, &keep)) {
    return {LinConstraint{LinExpr(Rational(1)), Rel::kLe}};
  }
  std::set<VarId> drop;
  for (const auto& r : ineqs) {
    for (const auto& [v, c] : r.expr.coeffs()) {
      if (!keep.count(v)) drop.insert(v);
    }
  }
  while (!drop.empty()) {
    VarId best = *drop.begin();
    size_t best_cost = SIZE_MAX;
    for (VarId v : drop) {
      size_t p = 0, n = 0;
      for (const auto& r : ineqs) {
        Rational c = r.expr.coeff(v);
        if (c > 0) ++p;
        if (c < 0) ++n;
      }
      if (p * n < best_cost) {
        best_cost = p * n;
        best = v;
      }
    }
    ineqs = FMEliminate(std::move(ineqs), best);
    drop.erase(best);
  }
  Conjunction all = eqs;
  all.insert(all.end(), ineqs.begin(), ineqs.end());
  for (const auto& c : all) {
    if (c.is_trivially_false()) return {LinConstraint{LinExpr(Rational(1)), Rel::kLe}};
  }
  return RemoveRedundant(all);
}

std::vector<LinConstraint> Negate(const LinConstraint& c) {
  switch (c.rel) {
    case Rel::kEq:
      return {{c.expr, Rel::kLt}, {-c.expr, Rel::kLt}};
    case Rel::kNe:
      return {{c.expr, Rel::kEq}};
    case Rel::kLt:
      return {{-c.expr, Rel::kLe}};
    case Rel::kLe:
      return {{-c.expr, Rel::kLt}};
  }
  return {};
}

std::vector<Conjunction> Complement(const Conjunction& conj) {
  std::vector<Conjunction> out;
  Conjunction prefix;
  for (const auto& c : conj) {
    if (c.is_trivially_true()) continue;
    if (c.rel == Rel::kNe) throw std::invalid_argument("disequality in conjunction");
    for (const auto& neg : Negate(c)) {
      Conjunction d = prefix;
      d.push_back(neg);
      if (IsSatisfiable(d)) out.push_back(std::move(d));
    }
    if (c.is_trivially_false()) break;
    prefix.push_back(c);
  }
  return out;
}

// -------------------------------------------------------- ConstraintStore

bool ConstraintStore::Add(const LinConstraint& c_in) {
  if (unsat_) return false;
  if (c_in.rel == Rel::kNe) throw std::invalid_argument("disequality added to store");
  LinConstraint c = c_in;
  for (const auto& [v, e] : solved_) {
    if (c.expr.mentions(v)) c.expr = c.expr.Substitute(v, e);
  }
  if (c.expr.is_constant()) {
    if (!ConstantHolds(c.expr.constant(), c.rel)) unsat_ = true;
    return !unsat_;
  }
  if (c.rel == Rel::kEq) {
    VarId pivot = c.expr.coeffs().rbegin()->first;
    Rational a = c.expr.coeff(pivot);
    LinExpr value = c.expr.Substitute(pivot, LinExpr()) * (Rational(-1) / a);
    Substitute(pivot, value);
    solved_[pivot] = value;
  } else if (!AddInequality(c)) {
    unsat_ = true;
    return false;
  }
  if (!CheckFeasible()) unsat_ = true;
  return !unsat_;
}

bool ConstraintStore::AddAll(const Conjunction& cs) {
  for (const auto& c : cs) {
    if (!Add(c)) return false;
  }
  return true;
}

void ConstraintStore::Substitute(VarId v, const LinExpr& e) {
  for (auto& [w, expr] : solved_) {
    if (expr.mentions(v)) expr = expr.Substitute(v, e);
  }
  Conjunction pending;
  auto b = bounds_.find(v);
  if (b != bounds_.end()) {
    LinExpr x = LinExpr::Var(v);
    if (b->second.lo) {
      pending.push_back({LinExpr(*b->second.lo) - x, b->second.lo_strict ? Rel::kLt : Rel::kLe});
    }
    if (b->second.hi) {
      pending.push_back({x - LinExpr(*b->second.hi), b->second.hi_strict ? Rel::kLt : Rel::kLe});
    }
    bounds_.erase(b);
  }
  Conjunction keep;
  for (auto& r : ineqs_) {
    if (r.expr.mentions(v)) {
      pending.push_back(r);
    } else {
      keep.push_back(r);
    }
  }
  ineqs_ = std::move(keep);
  for (auto& r : pending) {
    r.expr = r.expr.Substitute(v, e);
    if (!AddInequality(r)) unsat_ = true;
  }
}

bool ConstraintStore::AddInequality(const LinConstraint& c) {
  if (c.expr.is_constant()) return ConstantHolds(c.expr.constant(), c.rel);
  if (c.expr.coeffs().size() == 1) {
    auto [v, a] = *c.expr.coeffs().begin();
    Rational value = -c.expr.constant() / a;
    bool strict = c.rel == Rel::kLt;
    Bound& b = bounds_[v];
    if (a > 0) {
      if (!b.hi || value < *b.hi || (value == *b.hi && strict)) {
        b.hi = value;
        b.hi_strict = strict;
      }
    } else {
      if (!b.lo || value > *b.lo || (value == *b.lo && strict)) {
        b.lo = value;
        b.lo_strict = strict;
      }
    }
    if (b.lo && b.hi &&
        (*b.lo > *b.hi || (*b.lo == *b.hi && (b.lo_strict || b.hi_strict)))) {
      return false;
    }
    return true;
  }
  LinConstraint k = c.Canonical();
  if (std::find(ineqs_.begin(), ineqs_.end(), k) == ineqs_.end()) ineqs_.push_back(k);
  return true;
}

bool ConstraintStore::CheckFeasible() {
  if (unsat_) return false;
  for (const auto& [v, b] : bounds_) {
    if (b.lo && b.hi && (*b.lo > *b.hi || (*b.lo == *b.hi && (b.lo_strict || b.hi_strict)))) {
      return false;
    }
  }
  if (ineqs_.empty()) return true;
  return FeasibleInequalities(Inequalities());
}

Conjunction ConstraintStore::Inequalities() const {
  Conjunction out;
  for (const auto& [v, b] : bounds_) {
    LinExpr x = LinExpr::Var(v);
    if (b.lo) out.push_back({LinExpr(*b.lo) - x, b.lo_strict ? Rel::kLt : Rel::kLe});
    if (b.hi) out.push_back({x - LinExpr(*b.hi), b.hi_strict ? Rel::kLt : Rel::kLe});
  }
  out.insert(out.end(), ineqs_.begin(), ineqs_.end());
  return out;
}

Conjunction ConstraintStore::Constraints() const {
  Conjunction out;
  if (unsat_) {
    out.push_back({LinExpr(Rational(1)), Rel::kLe});
    return out;
  }
  for (const auto& [v, e] : solved_) out.push_back({LinExpr::Var(v) - e, Rel::kEq});
  Conjunction in = Inequalities();
  out.insert(out.end(), in.begin(), in.end());
  return out;
}

bool ConstraintStore::Entails(const LinConstraint& c) const {
  if (unsat_) return true;
  if (c.is_trivially_true()) return true;
  for (const auto& neg : Negate(c)) {
    ConstraintStore probe = *this;
    if (probe.Add(neg)) return false;
  }
  return true;
}

bool ConstraintStore::EntailsAll(const Conjunction& cs) const {
  return std::all_of(cs.begin(), cs.end(), [&](const auto& c) { return Entails(c); });
}

bool ConstraintStore::CompatibleWith(const Conjunction& cs) const {
  ConstraintStore probe = *this;
  return probe.AddAll(cs);
}

Conjunction ConstraintStore::Project(const std::set<VarId>& vars) const {
  return ProjectConjunction(Constraints(), vars);
}

std::set<VarId> ConstraintStore::Vars() const {
  std::set<VarId> out;
  for (const auto& c : Constraints()) {
    for (const auto& [v, k] : c.expr.coeffs()) out.insert(v);
  }
  return out;
}

bool ConstraintStore::Mentions(VarId v) const {
  if (solved_.count(v) || bounds_.count(v)) return true;
  for (const auto& [w, e] : solved_) {
    if (e.mentions(v)) return true;
  }
  for (const auto& r : ineqs_) {
    if (r.expr.mentions(v)) return true;
  }
  return false;
}

std::optional<Rational> ConstraintStore::FixedValue(VarId v) const {
  if (unsat_) return std::nullopt;
  if (auto it = solved_.find(v); it != solved_.end() && it->second.is_constant()) {
    return it->second.constant();
  }
  if (auto it = bounds_.find(v); it != bounds_.end()) {
    const Bound& b = it->second;
    if (b.lo && b.hi && *b.lo == *b.hi) return *b.lo;
  }
  if (!Mentions(v)) return std::nullopt;
  for (const auto& c : Project({v})) {
    if (c.rel == Rel::kEq && c.expr.coeffs().size() == 1) {
      return -c.expr.constant() / c.expr.coeff(v);
    }
  }
  return std::nullopt;
}

std::optional<LinExpr> ConstraintStore::SolvedExpr(VarId v) const {
  auto it = solved_.find(v);
  if (it == solved_.end()) return std::nullopt;
  return it->second;
}

std::map<VarId, Rational> ConstraintStore::Witness() const {
  std::map<VarId, Rational> point;
  ConstraintStore work = *this;
  std::set<VarId> free;
  for (VarId v : Vars()) {
    if (!solved_.count(v)) free.insert(v);
  }
  for (VarId v : free) {
    Conjunction proj = work.Project({v});
    std::optional<Rational> lo, hi;
    bool lo_strict = false, hi_strict = false;
    std::optional<Rational> exact;
    for (const auto& c : proj) {
      Rational a = c.expr.coeff(v);
      if (a == 0) continue;
      Rational value = -c.expr.constant() / a;
      if (c.rel == Rel::kEq) {
        exact = value;
      } else if (a > 0) {
        if (!hi || value < *hi) {
          hi = value;
          hi_strict = c.rel == Rel::kLt;
        }
      } else {
        if (!lo || value > *lo) {
          lo = value;
          lo_strict = c.rel == Rel::kLt;
        }
      }
    }
    Rational pick;
    if (exact) {
      pick = *exact;
    } else if (lo && hi) {
      pick = (!lo_strict) ? *lo : (!hi_strict ? *hi : Midpoint(*lo, *hi));
    } else if (lo) {
      pick = lo_strict ? *lo + 1 : *lo;
    } else if (hi) {
      pick = hi_strict ? *hi - 1 : *hi;
    } else {
      pick = 0;
    }
    work.Add({LinExpr::Var(v) - LinExpr(pick), Rel::kEq});
    point[v] = pick;
  }
  for (const auto& [v, e] : solved_) point[v] = e.Evaluate(point);
  return point;
}

std::string ConstraintStore::Fingerprint() const {
  std::vector<std::string> parts;
  auto name = [](VarId v) { return "_" + std::to_string(v); };
  for (const auto& c : Constraints()) parts.push_back(ToString(c.Canonical(), name));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) out += p + ";";
  return out;
}

size_t ConstraintStore::size() const {
  size_t n = solved_.size() + ineqs_.size();
  for (const auto& [v, b] : bounds_) n += (b.lo ? 1 : 0) + (b.hi ? 1 : 0);
  return n;
}

// --------------------------------------------------------------- crossing

std::optional<Rational> SolveCrossing(const Rational& coeff_t, const Rational& offset,
                                      const Rational& target, const Window& window) {
  if (coeff_t == 0) {
    if (offset == target) {
      throw DegenerateSlopeError("constant expression equals target everywhere");
    }
    return std::nullopt;
  }
  Rational t = (target - offset) / coeff_t;
  t.canonicalize();
  if (!(t > window.after)) return std::nullopt;
  if (window.until && t > *window.until) return std::nullopt;
  return t;
}

// --------------------------------------------------------------- printing

namespace {

std::string TermText(const Rational& c, const std::string& var, bool first) {
  std::ostringstream out;
  Rational mag = abs(c);
  if (first) {
    if (c < 0) out << "-";
  } else {
    out << (c < 0 ? " - " : " + ");
  }
  if (mag != 1) out << ToString(mag) << "*";
  out << var;
  return out.str();
}

std::string RelText(Rel rel, bool flipped) {
  switch (rel) {
    case Rel::kEq:
      return "#=";
    case Rel::kNe:
      return "#\\=";
    case Rel::kLt:
      return flipped ? "#>" : "#<";
    case Rel::kLe:
      return flipped ? "#>=" : "#=<";
  }
  return "?";
}

}  // namespace

std::string ToString(const LinExpr& e, const VarNamer& name) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [v, c] : e.coeffs()) {
    out << TermText(c, name(v), first);
    first = false;
  }
  if (first) {
    out << ToString(e.constant());
  } else if (e.constant() != 0) {
    out << (e.constant() < 0 ? " - " : " + ") << ToString(Rational(abs(e.constant())));
  }
  return out.str();
}

std::string ToString(const LinConstraint& c, const VarNamer& name) {
  if (c.expr.is_constant()) {
    return ToString(c.expr.constant()) + " " + RelText(c.rel, false) + " 0";
  }
  if (c.expr.coeffs().size() == 1) {
    auto [v, a] = *c.expr.coeffs().begin();
    Rational value = -c.expr.constant() / a;
    if (a > 0 || c.rel == Rel::kEq || c.rel == Rel::kNe) {
      return name(v) + " " + RelText(c.rel, false) + " " + ToString(value);
    }
    return ToString(value) + " " + RelText(c.rel, false) + " " + name(v);
  }
  LinExpr lhs = c.expr;
  Rational rhs = -lhs.constant();
  lhs -= LinExpr(lhs.constant());
  bool flipped = false;
  if (lhs.coeffs().begin()->second < 0) {
    lhs *= Rational(-1);
    rhs = -rhs;
    flipped = c.rel == Rel::kLt || c.rel == Rel::kLe;
  }
  return ToString(lhs, name) + " " + RelText(c.rel, flipped) + " " + ToString(rhs);
}

Bounds BoundsOf(const ConstraintStore& s, VarId v) {
  Bounds b;
  if (auto f = s.FixedValue(v)) {
    b.eq = b.lo = b.hi = f;
    return b;
  }
  for (const auto& c : s.Project({v})) {
    Rational a = c.expr.coeff(v);
    if (a == 0) continue;
    Rational value = -c.expr.constant() / a;
    bool strict = c.rel == Rel::kLt;
    if (c.rel == Rel::kEq) {
      b.eq = b.lo = b.hi = value;
      b.lo_strict = b.hi_strict = false;
      return b;
    }
    if (c.rel == Rel::kNe) continue;
    if (a > 0) {
      if (!b.hi || value < *b.hi || (value == *b.hi && strict)) {
        b.hi = value;
        b.hi_strict = strict;
      }
    } else if (!b.lo || value > *b.lo || (value == *b.lo && strict)) {
      b.lo = value;
      b.lo_strict = strict;
    }
  }
  return b;
}

}  // namespace ecrv::clpq
