#include "solver.hpp"

#include <algorithm>

namespace ecrv::detail {

using clpq::LinConstraint;
using clpq::LinExpr;
using Op = clpq::LinConstraint::Op;

int State::Fresh(int n) {
  int base = next_var;
  next_var += n;
  bind.resize(static_cast<size_t>(next_var));
  return base;
}

Term Deref(const Term& t, const State& st) {
  Term cur = t;
  while (cur.is_var()) {
    size_t id = static_cast<size_t>(cur.var_id());
    if (id >= st.bind.size() || !st.bind[id]) break;
    cur = *st.bind[id];
  }
  return cur;
}

Term Resolve(const Term& t, const State& st) {
  Term d = Deref(t, st);
  if (d.is_var()) {
    if (auto v = st.store.FixedValue(d.var_id())) return Term::Num(*v);
    return d;
  }
  if (!d.is_compound()) return d;
  std::vector<Term> args;
  args.reserve(d.arity());
  for (const Term& a : d.args()) args.push_back(Resolve(a, st));
  return Term::Compound(d.name(), std::move(args));
}

LinExpr ToLin(const Term& t, const State& st) {
  Term d = Deref(t, st);
  switch (d.kind()) {
    case Term::Kind::kVar:
      return LinExpr::Var(d.var_id());
    case Term::Kind::kNum:
      return LinExpr(d.num());
    case Term::Kind::kSym:
      throw EngineError("non-numeric term in arithmetic: " + ToString(d));
    case Term::Kind::kCompound:
      break;
  }
  const std::string& f = d.name();
  if (f == "neg" && d.arity() == 1) return -ToLin(d.arg(0), st);
  if (!d.is_arith() || d.arity() != 2) {
    throw EngineError("non-numeric term in arithmetic: " + ToString(Resolve(d, st)));
  }
  LinExpr a = ToLin(d.arg(0), st), b = ToLin(d.arg(1), st);
  if (f == "+") return a + b;
  if (f == "-") return a - b;
  if (f == "*") {
    if (a.is_constant()) return b * a.constant();
    if (b.is_constant()) return a * b.constant();
    throw clpq::NonLinearError("non-linear expression " + ToString(Resolve(d, st)));
  }
  if (!b.is_constant()) {
    throw clpq::NonLinearError("non-linear expression " + ToString(Resolve(d, st)));
  }
  if (b.constant() == 0) throw EngineError("division by zero in " + ToString(Resolve(d, st)));
  return a * (Rational(1) / b.constant());
}

Term LinToTerm(const LinExpr& e) {
  std::optional<Term> acc;
  for (const auto& [v, c] : e.coeffs()) {
    Term x = Term::Var(v);
    Term part = c == 1 ? x : Term::Compound("*", {Term::Num(c), x});
    acc = acc ? Term::Compound("+", {*acc, part}) : part;
  }
  if (!acc) return Term::Num(e.constant());
  if (e.constant() > 0) return Term::Compound("+", {*acc, Term::Num(e.constant())});
  if (e.constant() < 0) return Term::Compound("-", {*acc, Term::Num(-e.constant())});
  return *acc;
}

std::optional<Rational> ConstValue(const Term& t, const State& st) {
  Term d = Deref(t, st);
  if (d.is_num()) return d.num();
  if (!d.is_var() && !d.is_arith()) return std::nullopt;
  LinExpr e;
  try {
    e = ToLin(d, st);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  Rational value = e.constant();
  for (const auto& [v, c] : e.coeffs()) {
    auto fixed = st.store.FixedValue(v);
    if (!fixed) return std::nullopt;
    value += c * *fixed;
  }
  return value;
}

namespace {

bool Occurs(int v, const Term& t, const State& st) {
  Term d = Deref(t, st);
  if (d.is_var()) return d.var_id() == v;
  if (!d.is_compound()) return false;
  for (const Term& a : d.args()) {
    if (Occurs(v, a, st)) return true;
  }
  return false;
}

bool IsNumeric(const Term& t) { return t.is_num() || t.is_arith(); }

bool BindVar(int v, const Term& t, State& st) {
  auto& slot = st.bind[static_cast<size_t>(v)];
  if (t.is_var()) {
    slot = t;
    if (st.store.Mentions(v) || st.store.Mentions(t.var_id())) {
      return st.store.Add(LinConstraint::Make(LinExpr::Var(v), Op::kEq, LinExpr::Var(t.var_id())));
    }
    return true;
  }
  if (IsNumeric(t)) {
    LinExpr e = ToLin(t, st);
    if (!Occurs(v, t, st)) slot = t;
    return st.store.Add(LinConstraint::Make(LinExpr::Var(v), Op::kEq, e));
  }
  if (st.store.Mentions(v) || Occurs(v, t, st)) return false;
  slot = t;
  return true;
}

}  // namespace

bool Unify(const Term& a_in, const Term& b_in, State& st) {
  Term a = Deref(a_in, st), b = Deref(b_in, st);
  if (a.is_var() && b.is_var() && a.var_id() == b.var_id()) return true;
  if (a.is_var()) return BindVar(a.var_id(), b, st);
  if (b.is_var()) return BindVar(b.var_id(), a, st);
  if (IsNumeric(a) || IsNumeric(b)) {
    if (!IsNumeric(a) || !IsNumeric(b)) return false;
    if (a.is_num() && b.is_num()) return a.num() == b.num();
    return st.store.Add(LinConstraint::Make(ToLin(a, st), Op::kEq, ToLin(b, st)));
  }
  if (a.is_sym() || b.is_sym()) return a.is_sym() && b.is_sym() && a.name() == b.name();
  if (a.name() != b.name() || a.arity() != b.arity()) return false;
  for (size_t i = 0; i < a.arity(); ++i) {
    if (!Unify(a.arg(i), b.arg(i), st)) return false;
  }
  return true;
}

Term Renamed(const Term& t, int offset) { return offset == 0 ? t : OffsetVars(t, offset); }

Literal Renamed(const Literal& l, int offset) {
  Literal out = l;
  out.atom = Renamed(l.atom, offset);
  return out;
}

ProofPtr RenameProof(const ProofPtr& p, int offset) {
  if (offset == 0) return p;
  auto n = std::make_shared<ProofNode>(*p);
  n->goal = Renamed(p->goal, offset);
  if (p->rule != "triggered") {
    for (auto& c : n->children) c = RenameProof(c, offset);
  }
  return n;
}

ProofPtr Finalize(const ProofPtr& p, const State& st) {
  auto n = std::make_shared<ProofNode>(*p);
  n->goal = Resolve(p->goal, st);
  if (p->rule != "triggered") {
    for (auto& c : n->children) c = Finalize(c, st);
  }
  return n;
}

Term ConstraintTerm(const LinConstraint& c) {
  LinExpr lhs, rhs;
  for (const auto& [v, k] : c.expr.coeffs()) {
    if (k > 0) {
      lhs += LinExpr::Var(v, k);
    } else {
      rhs += LinExpr::Var(v, -k);
    }
  }
  if (c.expr.constant() > 0) {
    lhs += LinExpr(c.expr.constant());
  } else {
    rhs += LinExpr(-c.expr.constant());
  }
  const char* op = "#=";
  switch (c.rel) {
    case clpq::Rel::kEq: op = "#="; break;
    case clpq::Rel::kNe: op = "#\\="; break;
    case clpq::Rel::kLt: op = "#<"; break;
    case clpq::Rel::kLe: op = "#=<"; break;
  }
  return Term::Compound(op, {LinToTerm(lhs), LinToTerm(rhs)});
}

clpq::Conjunction RenameConj(const clpq::Conjunction& cs, int offset) {
  if (offset == 0) return cs;
  clpq::Conjunction out;
  out.reserve(cs.size());
  for (const auto& c : cs) {
    LinExpr e(c.expr.constant());
    for (const auto& [v, k] : c.expr.coeffs()) e += LinExpr::Var(v + offset, k);
    out.push_back({e, c.rel});
  }
  return out;
}

bool IsGroundProof(const ProofNode& p) {
  if (!p.goal.is_ground()) return false;
  if (p.rule == "triggered") return true;
  return std::all_of(p.children.begin(), p.children.end(),
                     [](const ProofPtr& c) { return IsGroundProof(*c); });
}

// ---------------------------------------------------------------- Solver

namespace {

Term Holds(const Term& f, const Term& t) { return Term::Compound("holdsAt", {f, t}); }
Term Clipped(const Term& t1, const Term& f, const Term& t2) {
  return Term::Compound("clipped", {t1, f, t2});
}
Term Less(const Term& a, const Term& b) { return Term::Compound("#<", {a, b}); }

std::string ClauseRule(const Clause& c) {
  return (c.body.empty() ? "fact:" : "clause:") + std::to_string(c.id);
}

bool EventMatches(const Clause& c, const Term& event) {
  const Term& pat = c.event();
  if (pat.is_var()) return true;
  return pat.name() == event.name() && pat.arity() == event.arity();
}

}  // namespace

const std::vector<const Clause*>& Solver::Lookup(const Index& idx, const std::string& key) {
  static const std::vector<const Clause*> kEmpty;
  auto it = idx.find(key);
  return it == idx.end() ? kEmpty : it->second;
}

Solver::Solver(const ClosedTimeline& tl, QueryStats* stats, bool cache, bool checkpoints,
               size_t usable_segments)
    : tl_(tl),
      m_(*tl.model),
      stats_(stats),
      cache_(cache && tl.var_base == 0),
      checkpoints_(checkpoints),
      usable_segments_(std::min(usable_segments, tl.segments.size())) {
  for (const Clause& c : m_.clauses) {
    switch (c.kind) {
      case Clause::Kind::kInitiates:
        initiates_[c.fluent().functor()].push_back(&c);
        break;
      case Clause::Kind::kTerminates:
        terminates_[c.fluent().functor()].push_back(&c);
        break;
      case Clause::Kind::kReleases:
        releases_[c.fluent().functor()].push_back(&c);
        break;
      case Clause::Kind::kTrajectory:
        trajectories_[c.functional_fluent().functor()].push_back(&c);
        break;
      case Clause::Kind::kInitiallyP:
        initially_[c.head.arg(0).functor()].push_back(&c);
        break;
      case Clause::Kind::kUser:
        user_[c.head.functor() + "/" + std::to_string(c.head.arity())].push_back(&c);
        break;
      default:
        break;
    }
  }
  if (tl_.ground) {
    for (const auto& e : tl_.events) times_.push_back(e.time.constant());
  }
}

size_t Solver::FirstAfter(const std::optional<Rational>& t1) const {
  if (!tl_.ground || !t1) return 0;
  return static_cast<size_t>(std::upper_bound(times_.begin(), times_.end(), *t1) - times_.begin());
}

ProofPtr Solver::OccurrenceProof(const TimedEvent& e) const {
  Term goal = Term::Compound("happens", {e.event, LinToTerm(e.time)});
  if (e.triggered) return MakeProof("triggered", goal, {e.proof});
  return MakeProof("narrative", goal);
}

std::vector<ConjSol> Solver::SolveConj(const std::vector<Literal>& body, const State& st,
                                       int depth) {
  std::vector<ConjSol> cur;
  cur.push_back({st, {}});
  for (const Literal& lit : body) {
    std::vector<ConjSol> next;
    for (auto& cs : cur) {
      for (auto& sol : SolveLit(lit, cs.st, depth)) {
        ConjSol n{std::move(sol.st), cs.proofs};
        n.proofs.push_back(std::move(sol.proof));
        next.push_back(std::move(n));
      }
    }
    cur = std::move(next);
    if (cur.empty()) break;
  }
  return cur;
}

std::optional<std::string> Solver::CacheKey(const Literal& lit, const State& st,
                                            std::vector<int>* vars) const {
  Term r = Resolve(lit.atom, st);
  std::map<int, Term> rename;
  bool mentioned = false;
  ForEachVar(r, [&](const Term& v) {
    if (rename.count(v.var_id())) return;
    if (st.store.Mentions(v.var_id())) mentioned = true;
    int k = static_cast<int>(rename.size());
    rename.emplace(v.var_id(), Term::Var(k, "_" + std::to_string(k)));
    vars->push_back(v.var_id());
  });
  if (mentioned) return std::nullopt;
  std::function<Term(const Term&)> sub = [&](const Term& t) -> Term {
    if (t.is_var()) return rename.at(t.var_id());
    if (!t.is_compound()) return t;
    std::vector<Term> args;
    for (const Term& a : t.args()) args.push_back(sub(a));
    return Term::Compound(t.name(), std::move(args));
  };
  return std::string(lit.negated ? "not " : "") + ToString(sub(r));
}

std::vector<Sol> Solver::SolveLit(const Literal& lit, const State& st, int depth) {
  if (depth > tl_.options.depth) {
    throw DepthExceeded("goal depth bound " + std::to_string(tl_.options.depth) +
                        " exceeded at " + ToString(Resolve(lit.atom, st)));
  }
  if (lit.kind == Literal::Kind::kConstraint) return SolveConstraint(lit.atom, st);

  std::vector<int> key_vars;
  std::optional<std::string> key;
  if (cache_) {
    key = CacheKey(lit, st, &key_vars);
    if (key) {
      auto it = table_.find(*key);
      if (it != table_.end()) {
        if (stats_) ++stats_->cache.hits;
        std::vector<Sol> out;
        for (const auto& [values, proof] : it->second.solutions) {
          State s = st;
          bool ok = true;
          for (size_t i = 0; ok && i < key_vars.size(); ++i) {
            ok = Unify(Term::Var(key_vars[i]), values[i], s);
          }
          if (ok) out.push_back({std::move(s), proof});
        }
        return out;
      }
      if (stats_) ++stats_->cache.misses;
    }
  }
  if (stats_) ++stats_->expansions;

  std::vector<Sol> sols;
  if (lit.negated) {
    sols = SolveNot(lit, st, depth);
  } else {
    switch (lit.kind) {
      case Literal::Kind::kHolds:
        sols = SolveHolds(lit.atom, st, depth);
        break;
      case Literal::Kind::kHappens:
        sols = SolveHappens(lit.atom, st);
        break;
      case Literal::Kind::kInitiallyP:
        sols = SolveInitially(lit.atom, st);
        break;
      default:
        sols = SolveUser(lit.atom, st, depth);
        break;
    }
  }

  if (key) {
    CacheEntry entry;
    bool storable = true;
    for (const Sol& s : sols) {
      std::vector<Term> values;
      for (int v : key_vars) {
        Term r = Resolve(Term::Var(v), s.st);
        if (!r.is_ground()) storable = false;
        values.push_back(r);
      }
      ProofPtr p = Finalize(s.proof, s.st);
      if (!IsGroundProof(*p)) storable = false;
      if (!storable) break;
      entry.solutions.emplace_back(std::move(values), std::move(p));
    }
    if (storable) {
      if (sols.empty() && stats_) ++stats_->cache.stored_failures;
      table_.emplace(*key, std::move(entry));
    }
  }
  return sols;
}

std::vector<Sol> Solver::SolveConstraint(const Term& atom, const State& st) {
  Op op = ConstraintOp(atom.name());
  LinExpr lhs = ToLin(atom.arg(0), st), rhs = ToLin(atom.arg(1), st);
  std::vector<Op> cases;
  if (op == Op::kNe) {
    cases = {Op::kLt, Op::kGt};
  } else {
    cases = {op};
  }
  std::vector<Sol> out;
  for (Op o : cases) {
    State s = st;
    if (s.store.Add(LinConstraint::Make(lhs, o, rhs))) {
      out.push_back({std::move(s), MakeProof("constraint", atom)});
    }
  }
  return out;
}

std::vector<Sol> Solver::SolveHappens(const Term& atom, const State& st) {
  Term e = Deref(atom.arg(0), st);
  const Term& t = atom.arg(1);
  std::optional<Rational> tc = ConstValue(t, st);
  size_t begin = 0, end = tl_.events.size();
  if (tl_.ground && tc) {
    begin = static_cast<size_t>(std::lower_bound(times_.begin(), times_.end(), *tc) - times_.begin());
    end = static_cast<size_t>(std::upper_bound(times_.begin(), times_.end(), *tc) - times_.begin());
  }
  std::vector<Sol> out;
  for (size_t i = begin; i < end; ++i) {
    const TimedEvent& ev = tl_.events[i];
    if (!e.is_var() && (e.name() != ev.event.name() || e.arity() != ev.event.arity())) continue;
    State s = st;
    if (!Unify(e, ev.event, s) || !Unify(t, LinToTerm(ev.time), s)) continue;
    out.push_back({std::move(s), OccurrenceProof(ev)});
  }
  return out;
}

std::vector<Sol> Solver::SolveInitially(const Term& atom, const State& st) {
  Term f = Deref(atom.arg(0), st);
  std::vector<const Clause*> cands;
  if (f.is_var()) {
    for (const auto& [k, cs] : initially_) cands.insert(cands.end(), cs.begin(), cs.end());
  } else {
    cands = Lookup(initially_, f.functor());
  }
  std::vector<Sol> out;
  for (const Clause* c : cands) {
    State s = st;
    Term h = Renamed(c->head, s.Fresh(c->var_count));
    if (!Unify(h.arg(0), f, s)) continue;
    out.push_back({std::move(s), MakeProof("initiallyP", h)});
  }
  return out;
}

std::vector<Sol> Solver::SolveClause(const Clause& c, const Term& head, const State& st,
                                     int depth) {
  State s = st;
  int off = s.Fresh(c.var_count);
  Term h = Renamed(c.head, off);
  if (!Unify(h, head, s)) return {};
  std::vector<Literal> body;
  for (const Literal& l : c.body) body.push_back(Renamed(l, off));
  std::vector<Sol> out;
  for (auto& cs : SolveConj(body, s, depth + 1)) {
    out.push_back({std::move(cs.st), MakeProof(ClauseRule(c), h, std::move(cs.proofs))});
  }
  return out;
}

std::vector<Sol> Solver::SolveUser(const Term& atom, const State& st, int depth) {
  Term a = Deref(atom, st);
  std::vector<Sol> out;
  for (const Clause* c : Lookup(user_, a.functor() + "/" + std::to_string(a.arity()))) {
    for (auto& s : SolveClause(*c, a, st, depth)) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sol> Solver::SolveNot(const Literal& lit, const State& st, int depth) {
  Literal pos = lit;
  pos.negated = false;
  std::vector<State> inner;
  for (auto& s : SolveLit(pos, st, depth + 1)) inner.push_back(std::move(s.st));
  std::vector<Sol> out;
  for (auto& b : Negate({st, {}}, inner)) {
    out.push_back({std::move(b.st), MakeProof("not", lit.atom, std::move(b.constraints), true)});
  }
  return out;
}

std::vector<Solver::Negated> Solver::Negate(const Negated& outer,
                                            const std::vector<State>& inner) {
  std::vector<Negated> branches{outer};
  const int n_outer = outer.st.next_var;
  for (const State& s : inner) {
    clpq::Conjunction extra;
    for (int v = 0; v < n_outer; ++v) {
      if (outer.st.bind[static_cast<size_t>(v)]) continue;
      if (!s.bind[static_cast<size_t>(v)]) continue;
      Term b = Deref(Term::Var(v), s);
      if (b.is_var()) {
        if (b.var_id() < n_outer && b.var_id() != v) {
          extra.push_back(LinConstraint::Make(LinExpr::Var(v), Op::kEq, LinExpr::Var(b.var_id())));
        }
        continue;
      }
      if (IsNumeric(b)) continue;  // the store already holds the equality
      throw EngineError("negation cannot be decided without grounding: it would bind " +
                        ToString(Resolve(Term::Var(v), s)));
    }
    std::set<int> keep;
    for (int v : s.store.Vars()) {
      if (v < n_outer) keep.insert(v);
    }
    clpq::Conjunction proj = s.store.Project(keep);
    proj.insert(proj.end(), extra.begin(), extra.end());
    proj = clpq::RemoveRedundant(proj);

    std::vector<Negated> next;
    for (auto& b : branches) {
      clpq::Conjunction delta;
      for (const auto& c : proj) {
        if (!b.st.store.Entails(c)) delta.push_back(c);
      }
      if (delta.empty()) continue;  // holds wherever b does
      if (!b.st.store.CompatibleWith(delta)) {
        next.push_back(std::move(b));
        continue;
      }
      for (const auto& disjunct : clpq::Complement(delta)) {
        Negated nb = b;
        if (!nb.st.store.AddAll(disjunct)) continue;
        for (const auto& c : disjunct) nb.constraints.push_back(MakeProof("constraint", ConstraintTerm(c)));
        next.push_back(std::move(nb));
      }
    }
    branches = std::move(next);
    if (branches.empty()) break;
  }
  return branches;
}

std::vector<Solver::Clipper> Solver::BooleanClippers(const Term& fluent) const {
  std::vector<Clipper> out;
  for (const Clause* c : Lookup(terminates_, fluent.functor())) out.push_back({c, fluent});
  for (const Clause* c : Lookup(releases_, fluent.functor())) out.push_back({c, fluent});
  return out;
}

std::vector<Solver::Clipper> Solver::StateClippers(const Term& state) const {
  std::vector<Clipper> out = BooleanClippers(state);
  for (const Clause* c : Lookup(initiates_, state.functor())) out.push_back({c, state});
  return out;
}

std::vector<Solver::Clipper> Solver::ValueClippers(const std::string& name) const {
  std::vector<Clipper> out;
  std::set<const Clause*> seen;
  auto add = [&](const std::vector<const Clause*>& cs) {
    for (const Clause* c : cs) {
      if (seen.insert(c).second) out.push_back({c, std::nullopt});
    }
  };
  add(Lookup(initiates_, name));
  add(Lookup(terminates_, name));
  add(Lookup(releases_, name));
  bool snapshot = m_.HasSnapshot(name);
  for (const Clause* tr : Lookup(trajectories_, name)) {
    std::string s = tr->state_fluent().functor();
    add(Lookup(initiates_, s));
    if (snapshot) add(Lookup(terminates_, s));
  }
  return out;
}

std::vector<Solver::Negated> Solver::NotClipped(const State& st, const Term& t1, const Term& t2,
                                                const std::vector<Clipper>& clippers,
                                                int depth) {
  std::vector<Negated> branches{{st, {}}};
  if (clippers.empty()) return branches;
  const bool closed = tl_.options.mutant_closed_clipping;
  std::optional<Rational> t1c = ConstValue(t1, st);
  for (size_t i = FirstAfter(t1c); i < tl_.events.size(); ++i) {
    const TimedEvent& ev = tl_.events[i];
    bool any = std::any_of(clippers.begin(), clippers.end(),
                           [&](const Clipper& c) { return EventMatches(*c.clause, ev.event); });
    if (!any) continue;
    if (tl_.ground) {
      // Later events are later in time: once every branch ends before this
      // event, none of the remaining ones can clip.
      bool past = std::all_of(branches.begin(), branches.end(), [&](const Negated& b) {
        return b.st.store.Entails(
            LinConstraint::Make(ToLin(t2, b.st), closed ? Op::kLt : Op::kLe, ev.time));
      });
      if (past) break;
    }
    for (const Clipper& cl : clippers) {
      if (!EventMatches(*cl.clause, ev.event)) continue;
      std::vector<Negated> next;
      for (auto& b : branches) {
        State s = b.st;
        int off = s.Fresh(cl.clause->var_count);
        Term h = Renamed(cl.clause->head, off);
        Term tc = LinToTerm(ev.time);
        bool ok = Unify(h.arg(0), ev.event, s) && (!cl.fluent || Unify(h.arg(1), *cl.fluent, s)) &&
                  Unify(h.arg(2), tc, s) &&
                  s.store.Add(LinConstraint::Make(ToLin(t1, s), Op::kLt, ev.time)) &&
                  s.store.Add(LinConstraint::Make(ev.time, closed ? Op::kLe : Op::kLt, ToLin(t2, s)));
        std::vector<State> inner;
        if (ok) {
          std::vector<Literal> body;
          for (const Literal& l : cl.clause->body) body.push_back(Renamed(l, off));
          for (auto& cs : SolveConj(body, s, depth + 1)) inner.push_back(std::move(cs.st));
        }
        if (inner.empty()) {
          next.push_back(std::move(b));
          continue;
        }
        for (auto& nb : Negate(b, inner)) next.push_back(std::move(nb));
      }
      branches = std::move(next);
      if (branches.empty()) return branches;
    }
  }
  return branches;
}

std::optional<Rational> Solver::Cutoff(const Term& t, const State& st) const {
  if (auto c = ConstValue(t, st)) return c;
  Term d = Deref(t, st);
  if (hint_ && d.is_var() && d.var_id() == hint_var_) return hint_;
  return std::nullopt;
}

std::vector<Sol> Solver::SolveHolds(const Term& atom, const State& st, int depth) {
  Term f = Deref(atom.arg(0), st);
  const Term& t = atom.arg(1);
  if (f.is_var()) throw EngineError("holdsAt with an unbound fluent");
  if (!m_.IsFluent(f.functor())) return {};
  State s = st;
  LinExpr lt = ToLin(t, s);
  if (!s.store.Add(LinConstraint::Make(LinExpr(Rational(0)), Op::kLe, lt)) ||
      !s.store.Add(LinConstraint::Make(lt, Op::kLe, LinExpr(tl_.horizon)))) {
    return {};
  }
  if (checkpoints_ && usable_segments_ > 0) {
    if (auto tc = ConstValue(t, s)) {
      if (auto sols = FromCheckpoint(f, t, *tc, s)) return std::move(*sols);
    }
  }
  if (m_.IsFunctional(f.functor()) && f.arity() == 1) return SolveValue(f, t, s, depth);
  return SolveBoolean(f, t, s, depth);
}

std::optional<std::vector<Sol>> Solver::FromCheckpoint(const Term& f, const Term& t,
                                                       const Rational& at, const State& st) {
  const Segment* seg = nullptr;
  for (size_t i = 0; i < usable_segments_; ++i) {
    if (tl_.segments[i].Contains(at)) {
      seg = &tl_.segments[i];
      break;
    }
  }
  if (!seg) return std::nullopt;
  std::vector<Sol> out;
  auto it = seg->entries.find(f.functor());
  if (it == seg->entries.end()) return out;
  Term goal = Holds(f, t);
  for (const CheckpointEntry& e : it->second) {
    State s = st;
    int off = s.Fresh(e.var_count);
    if (!s.store.AddAll(RenameConj(e.constraints, off))) continue;
    if (!Unify(Renamed(e.time, off), t, s)) continue;
    if (!Unify(Renamed(e.fluent, off), f, s)) continue;
    out.push_back({std::move(s), MakeProof("checkpoint", goal, {RenameProof(e.proof, off)})});
  }
  return out;
}

std::vector<Sol> Solver::SolveBoolean(const Term& f, const Term& t, const State& st, int depth) {
  std::vector<Sol> out;
  Term goal = Holds(f, t);
  Term zero = Term::Num(0);
  for (const Clause* c : Lookup(initially_, f.functor())) {
    State s = st;
    Term h = Renamed(c->head, s.Fresh(c->var_count));
    if (!Unify(h.arg(0), f, s)) continue;
    ProofPtr leaf = MakeProof("initiallyP", h);
    for (auto& nb : NotClipped(s, zero, t, BooleanClippers(f), depth)) {
      ProofPtr neg = MakeProof("not_clipped", Clipped(zero, f, t), std::move(nb.constraints), true);
      out.push_back({std::move(nb.st), MakeProof("holds_initially", goal, {leaf, neg})});
    }
  }
  const auto& inits = Lookup(initiates_, f.functor());
  if (inits.empty()) return out;
  std::optional<Rational> tc = Cutoff(t, st);
  for (const TimedEvent& ev : tl_.events) {
    if (tc && ev.time.is_constant() && ev.time.constant() >= *tc) {
      if (tl_.ground) break;
      continue;
    }
    for (const Clause* c : inits) {
      if (!EventMatches(*c, ev.event)) continue;
      State s = st;
      int off = s.Fresh(c->var_count);
      Term h = Renamed(c->head, off);
      Term t1 = LinToTerm(ev.time);
      if (!Unify(h.arg(0), ev.event, s) || !Unify(h.arg(1), f, s) || !Unify(h.arg(2), t1, s)) continue;
      if (!s.store.Add(LinConstraint::Make(ev.time, Op::kLt, ToLin(t, s)))) continue;
      std::vector<Literal> body;
      for (const Literal& l : c->body) body.push_back(Renamed(l, off));
      for (auto& cs : SolveConj(body, s, depth + 1)) {
        ProofPtr clause = MakeProof(ClauseRule(*c), h, cs.proofs);
        for (auto& nb : NotClipped(cs.st, t1, t, BooleanClippers(f), depth)) {
          ProofPtr neg = MakeProof("not_clipped", Clipped(t1, f, t), std::move(nb.constraints), true);
          out.push_back({std::move(nb.st),
                         MakeProof("holds_initiated", goal,
                                   {OccurrenceProof(ev), clause, MakeProof("constraint", Less(t1, t)), neg})});
        }
      }
    }
  }
  return out;
}

std::vector<Sol> Solver::SolveValue(const Term& f, const Term& t, const State& st, int depth) {
  std::vector<Sol> out;
  const std::string name = f.functor();
  Term goal = Holds(f, t);
  Term any = Term::Sym(name);
  Term zero = Term::Num(0);
  std::vector<Clipper> clippers = ValueClippers(name);
  std::optional<Rational> tc = Cutoff(t, st);
  auto before = [&](const TimedEvent& ev) {
    return !(tc && ev.time.is_constant() && ev.time.constant() >= *tc);
  };

  // Inertial value from initiallyP.
  for (const Clause* c : Lookup(initially_, name)) {
    State s = st;
    Term h = Renamed(c->head, s.Fresh(c->var_count));
    if (!Unify(h.arg(0), f, s)) continue;
    ProofPtr leaf = MakeProof("initiallyP", h);
    for (auto& nb : NotClipped(s, zero, t, clippers, depth)) {
      ProofPtr neg = MakeProof("not_clipped_value", Clipped(zero, any, t), std::move(nb.constraints), true);
      out.push_back({std::move(nb.st), MakeProof("value_initially", goal, {leaf, neg})});
    }
  }

  // Inertial value set by an initiates rule.
  const auto& inits = Lookup(initiates_, name);
  for (const TimedEvent& ev : tl_.events) {
    if (inits.empty()) break;
    if (!before(ev)) continue;
    for (const Clause* c : inits) {
      if (!EventMatches(*c, ev.event)) continue;
      State s = st;
      int off = s.Fresh(c->var_count);
      Term h = Renamed(c->head, off);
      Term t1 = LinToTerm(ev.time);
      if (!Unify(h.arg(0), ev.event, s) || !Unify(h.arg(1), f, s) || !Unify(h.arg(2), t1, s)) continue;
      if (!s.store.Add(LinConstraint::Make(ev.time, Op::kLt, ToLin(t, s)))) continue;
      std::vector<Literal> body;
      for (const Literal& l : c->body) body.push_back(Renamed(l, off));
      for (auto& cs : SolveConj(body, s, depth + 1)) {
        ProofPtr clause = MakeProof(ClauseRule(*c), h, cs.proofs);
        for (auto& nb : NotClipped(cs.st, t1, t, clippers, depth)) {
          ProofPtr neg = MakeProof("not_clipped_value", Clipped(t1, any, t), std::move(nb.constraints), true);
          out.push_back({std::move(nb.st),
                         MakeProof("value_initiated", goal,
                                   {OccurrenceProof(ev), clause, MakeProof("constraint", Less(t1, t)), neg})});
        }
      }
    }
  }

  // Trajectories of a state that holds since T1.
  for (const Clause* tr : Lookup(trajectories_, name)) {
    State base = st;
    int toff = base.Fresh(tr->var_count);
    Term th = Renamed(tr->head, toff);
    if (!Unify(th.arg(2), f, base) || !Unify(th.arg(3), t, base)) continue;
    const Term& state = th.arg(0);
    std::vector<Literal> tbody;
    for (const Literal& l : tr->body) tbody.push_back(Renamed(l, toff));
    auto finish = [&](State s, std::vector<ProofPtr> start, const Term& t1) {
      if (!s.store.Add(LinConstraint::Make(ToLin(t1, s), Op::kLt, ToLin(t, s)))) return;
      start.push_back(MakeProof("constraint", Less(t1, t)));
      for (auto& nb : NotClipped(s, t1, t, StateClippers(state), depth)) {
        ProofPtr neg = MakeProof("not_stopped", Clipped(t1, state, t), nb.constraints, true);
        for (auto& cs : SolveConj(tbody, nb.st, depth + 1)) {
          std::vector<ProofPtr> kids = start;
          kids.push_back(neg);
          kids.push_back(MakeProof(ClauseRule(*tr), th, std::move(cs.proofs)));
          out.push_back({std::move(cs.st), MakeProof("value_trajectory", goal, std::move(kids))});
        }
      }
    };
    Term sd = Deref(state, base);
    if (sd.is_var()) continue;
    for (const Clause* ip : Lookup(initially_, sd.functor())) {
      State s = base;
      Term ih = Renamed(ip->head, s.Fresh(ip->var_count));
      if (!Unify(ih.arg(0), state, s) || !Unify(th.arg(1), zero, s)) continue;
      finish(std::move(s), {MakeProof("initiallyP", ih)}, zero);
    }
    for (const TimedEvent& ev : tl_.events) {
      if (!before(ev)) continue;
      for (const Clause* c : Lookup(initiates_, sd.functor())) {
        if (!EventMatches(*c, ev.event)) continue;
        State s = base;
        int off = s.Fresh(c->var_count);
        Term h = Renamed(c->head, off);
        Term t1 = LinToTerm(ev.time);
        if (!Unify(h.arg(0), ev.event, s) || !Unify(h.arg(1), state, s) || !Unify(h.arg(2), t1, s) ||
            !Unify(th.arg(1), t1, s)) {
          continue;
        }
        std::vector<Literal> body;
        for (const Literal& l : c->body) body.push_back(Renamed(l, off));
        for (auto& cs : SolveConj(body, s, depth + 1)) {
          finish(std::move(cs.st), {OccurrenceProof(ev), MakeProof(ClauseRule(*c), h, cs.proofs)}, t1);
        }
      }
    }
  }

  // Snapshot: a terminated trajectory leaves its final value in place.
  if (m_.HasSnapshot(name)) {
    std::set<std::string> states;
    for (const Clause* tr : Lookup(trajectories_, name)) states.insert(tr->state_fluent().functor());
    for (const TimedEvent& ev : tl_.events) {
      if (!before(ev)) continue;
      for (const std::string& sname : states) {
        for (const Clause* c : Lookup(terminates_, sname)) {
          if (!EventMatches(*c, ev.event)) continue;
          State s = st;
          int off = s.Fresh(c->var_count);
          Term h = Renamed(c->head, off);
          Term t1 = LinToTerm(ev.time);
          if (!Unify(h.arg(0), ev.event, s) || !Unify(h.arg(2), t1, s)) continue;
          if (!s.store.Add(LinConstraint::Make(ev.time, Op::kLt, ToLin(t, s)))) continue;
          std::vector<Literal> body;
          for (const Literal& l : c->body) body.push_back(Renamed(l, off));
          Literal at = Literal::Classify(Holds(f, t1), false);
          for (auto& cs : SolveConj(body, s, depth + 1)) {
            ProofPtr clause = MakeProof(ClauseRule(*c), h, cs.proofs);
            for (auto& v : SolveLit(at, cs.st, depth + 1)) {
              for (auto& nb : NotClipped(v.st, t1, t, clippers, depth)) {
                ProofPtr neg = MakeProof("not_clipped_value", Clipped(t1, any, t), std::move(nb.constraints), true);
                out.push_back({std::move(nb.st),
                               MakeProof("value_snapshot", goal,
                                         {OccurrenceProof(ev), clause, MakeProof("constraint", Less(t1, t)),
                                          v.proof, neg})});
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace ecrv::detail
