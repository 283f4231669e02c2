// Proof replay. Clause steps are matched against the model, leaves against
// the timeline, and negation nodes by re-enumerating every candidate clipper
// over the whole event set.

#include <functional>

#include "ecrv/engine.hpp"
#include "solver.hpp"

namespace ecrv {

using clpq::LinConstraint;
using clpq::LinExpr;
using detail::State;
using detail::ToLin;
using Op = clpq::LinConstraint::Op;

namespace {

int MaxVar(const Term& t) {
  if (t.is_var()) return t.var_id();
  int m = -1;
  if (t.is_compound()) {
    for (const Term& a : t.args()) m = std::max(m, MaxVar(a));
  }
  return m;
}

bool Numeric(const Term& t) { return t.is_var() || t.is_num() || t.is_arith(); }

class Replayer {
 public:
  Replayer(const ClosedTimeline& tl) : tl_(tl), m_(*tl.model) {}

  bool Check(const ProofNode& p, const clpq::ConstraintStore& store) {
    ++nodes;
    bool ok = CheckNode(p, store);
    if (!ok && message.empty()) message = "step " + p.rule + " fails for " + ToString(p.goal);
    return ok;
  }

  size_t nodes = 0;
  std::string message;

 private:
  // Terms denote the same value under the store.
  bool Same(const Term& a, const Term& b, const clpq::ConstraintStore& store) const {
    if (a == b) return true;
    if (Numeric(a) && Numeric(b)) {
      State s;
      try {
        return store.Entails(LinConstraint::Make(ToLin(a, s), Op::kEq, ToLin(b, s)));
      } catch (const std::exception&) {
        return false;
      }
    }
    if (!a.is_compound() || !b.is_compound() || a.name() != b.name() || a.arity() != b.arity()) {
      return false;
    }
    for (size_t i = 0; i < a.arity(); ++i) {
      if (!Same(a.arg(i), b.arg(i), store)) return false;
    }
    return true;
  }

  struct Matcher {
    std::map<int, Term> sub;
    std::vector<std::pair<Term, Term>> deferred;
  };

  static Term Apply(const Term& t, const std::map<int, Term>& sub, bool* open) {
    if (t.is_var()) {
      auto it = sub.find(t.var_id());
      if (it != sub.end()) return it->second;
      *open = true;
      return t;
    }
    if (!t.is_compound()) return t;
    std::vector<Term> args;
    for (const Term& a : t.args()) args.push_back(Apply(a, sub, open));
    return Term::Compound(t.name(), std::move(args));
  }

  // One-way match of a clause-local pattern onto an instance.
  bool Match(const Term& pat, const Term& inst, Matcher& mt, const clpq::ConstraintStore& store) const {
    if (pat.is_var()) {
      auto it = mt.sub.find(pat.var_id());
      if (it == mt.sub.end()) {
        mt.sub.emplace(pat.var_id(), inst);
        return true;
      }
      return Same(it->second, inst, store);
    }
    if (pat.is_compound() && inst.is_compound() && pat.name() == inst.name() && pat.arity() == inst.arity()) {
      for (size_t i = 0; i < pat.arity(); ++i) {
        if (!Match(pat.arg(i), inst.arg(i), mt, store)) return false;
      }
      return true;
    }
    if ((pat.is_num() || pat.is_arith()) && Numeric(inst)) {
      mt.deferred.emplace_back(pat, inst);
      return true;
    }
    return pat == inst;
  }

  bool Settle(Matcher& mt, const clpq::ConstraintStore& store) const {
    for (const auto& [pat, inst] : mt.deferred) {
      bool open = false;
      Term t = Apply(pat, mt.sub, &open);
      if (open || !Same(t, inst, store)) return false;
    }
    return true;
  }

  const Clause* ClauseOf(const std::string& rule) const {
    std::string digits;
    if (rule.rfind("clause:", 0) == 0) digits = rule.substr(7);
    if (rule.rfind("fact:", 0) == 0) digits = rule.substr(5);
    if (digits.empty()) return nullptr;
    size_t id = std::stoul(digits);
    return id < m_.clauses.size() ? &m_.clauses[id] : nullptr;
  }

  bool CheckClause(const Clause& c, const ProofNode& p, const clpq::ConstraintStore& store) {
    if (c.body.size() != p.children.size()) return false;
    Matcher mt;
    if (!Match(c.head, p.goal, mt, store)) return false;
    for (size_t i = 0; i < c.body.size(); ++i) {
      const Literal& l = c.body[i];
      const ProofNode& child = *p.children[i];
      if (l.negated != child.negated) return false;
      if (l.kind == Literal::Kind::kConstraint && child.rule != "constraint") return false;
      if (!Match(l.atom, child.goal, mt, store)) return false;
    }
    if (!Settle(mt, store)) return false;
    for (const auto& child : p.children) {
      if (!Check(*child, store)) return false;
    }
    return true;
  }

  bool CheckConstraint(const Term& g, const clpq::ConstraintStore& store) const {
    if (!g.is_compound() || g.arity() != 2 || !IsConstraintOp(g.name())) return false;
    State s;
    return store.Entails(LinConstraint::Make(ToLin(g.arg(0), s), ConstraintOp(g.name()), ToLin(g.arg(1), s)));
  }

  bool CheckOccurrence(const ProofNode& p, const clpq::ConstraintStore& store) {
    if (p.goal.name() != "happens" || p.goal.arity() != 2) return false;
    bool trig = p.rule == "triggered";
    State s;
    for (const TimedEvent& e : tl_.events) {
      if (e.triggered != trig || e.event != p.goal.arg(0)) continue;
      if (!store.Entails(LinConstraint::Make(ToLin(p.goal.arg(1), s), Op::kEq, e.time))) continue;
      if (!trig) return p.children.empty();
      if (p.children.size() != 1 || !e.proof_store) continue;
      const Clause* c = ClauseOf(p.children[0]->rule);
      if (!c || c->id != e.rule) continue;
      Replayer sub(tl_);
      if (sub.Check(*p.children[0], *e.proof_store) && Same(p.children[0]->goal.arg(0), e.event, *e.proof_store)) {
        nodes += sub.nodes;
        return true;
      }
    }
    return false;
  }

  bool IsOccurrence(const ProofNode& p) const { return p.rule == "narrative" || p.rule == "triggered"; }

  // Clause node of the given kind whose head is kind(E, F, T1).
  const Clause* KindClause(const ProofNode& p, Clause::Kind kind) const {
    const Clause* c = ClauseOf(p.rule);
    return c && c->kind == kind ? c : nullptr;
  }

  bool CheckLess(const ProofNode& p, const Term& a, const Term& b, const clpq::ConstraintStore& store) {
    return p.rule == "constraint" && p.goal.name() == "#<" && Same(p.goal.arg(0), a, store) &&
           Same(p.goal.arg(1), b, store) && CheckConstraint(p.goal, store);
  }

  bool CheckWindowNode(const ProofNode& p, const std::string& rule, const Term& t1, const Term& f,
                       const Term& t2, const clpq::ConstraintStore& store) {
    return p.rule == rule && p.negated && p.goal.name() == "clipped" && p.goal.arity() == 3 &&
           Same(p.goal.arg(0), t1, store) && Same(p.goal.arg(1), f, store) && Same(p.goal.arg(2), t2, store) &&
           Check(p, store);
  }

  // Start of a persistence: occurrence + initiates clause + T1 < T.
  bool CheckStart(const ProofNode& occ, const ProofNode& clause, const ProofNode& less, const Term& f,
                  const Term& t, Clause::Kind kind, bool fluent_exact, const clpq::ConstraintStore& store) {
    if (!IsOccurrence(occ) || !KindClause(clause, kind)) return false;
    const Term& h = clause.goal;
    if (h.arity() != 3 || !Same(h.arg(0), occ.goal.arg(0), store) || !Same(h.arg(2), occ.goal.arg(1), store)) {
      return false;
    }
    if (fluent_exact ? !Same(h.arg(1), f, store) : h.arg(1).functor() != f.functor()) return false;
    return Check(occ, store) && Check(clause, store) && CheckLess(less, occ.goal.arg(1), t, store);
  }

  bool CheckNode(const ProofNode& p, const clpq::ConstraintStore& store) {
    const std::string& r = p.rule;
    if (r == "constraint") return p.children.empty() && CheckConstraint(p.goal, store);
    if (IsOccurrence(p)) return CheckOccurrence(p, store);
    if (const Clause* c = ClauseOf(r)) return CheckClause(*c, p, store);
    if (r == "initiallyP") {
      for (const Clause* c : m_.OfKind(Clause::Kind::kInitiallyP)) {
        Matcher mt;
        if (Match(c->head, p.goal, mt, store) && Settle(mt, store)) return true;
      }
      return false;
    }
    if (r == "not") return CheckNot(p, store);
    if (r == "not_clipped" || r == "not_stopped" || r == "not_clipped_value") return CheckWindow(p, store);
    if (p.goal.name() != "holdsAt" || p.goal.arity() != 2) return false;
    const Term& f = p.goal.arg(0);
    const Term& t = p.goal.arg(1);
    const auto& k = p.children;
    Term zero = Term::Num(0);
    if (r == "checkpoint") {
      return k.size() == 1 && Same(k[0]->goal, p.goal, store) && Check(*k[0], store);
    }
    if (r == "holds_initially" || r == "value_initially") {
      bool value = r == "value_initially";
      if (k.size() != 2 || k[0]->rule != "initiallyP" || !Same(k[0]->goal.arg(0), f, store)) return false;
      Term what = value ? Term::Sym(f.functor()) : f;
      return Check(*k[0], store) &&
             CheckWindowNode(*k[1], value ? "not_clipped_value" : "not_clipped", zero, what, t, store);
    }
    if (r == "holds_initiated" || r == "value_initiated") {
      bool value = r == "value_initiated";
      if (k.size() != 4) return false;
      Term what = value ? Term::Sym(f.functor()) : f;
      return CheckStart(*k[0], *k[1], *k[2], f, t, Clause::Kind::kInitiates, true, store) &&
             CheckWindowNode(*k[3], value ? "not_clipped_value" : "not_clipped", k[0]->goal.arg(1), what, t,
                             store);
    }
    if (r == "value_trajectory") {
      if (k.size() != 4 && k.size() != 5) return false;
      const ProofNode& traj = *k.back();
      const Clause* tc = KindClause(traj, Clause::Kind::kTrajectory);
      if (!tc) return false;
      const Term& th = traj.goal;
      if (!Same(th.arg(2), f, store) || !Same(th.arg(3), t, store)) return false;
      const Term& state = th.arg(0);
      Term t1 = th.arg(1);
      bool start;
      if (k.size() == 4) {
        start = k[0]->rule == "initiallyP" && Same(k[0]->goal.arg(0), state, store) && Same(t1, zero, store) &&
                Check(*k[0], store) && CheckLess(*k[1], zero, t, store);
      } else {
        start = CheckStart(*k[0], *k[1], *k[2], state, t, Clause::Kind::kInitiates, true, store) &&
                Same(t1, k[0]->goal.arg(1), store);
      }
      return start && CheckWindowNode(*k[k.size() - 2], "not_stopped", t1, state, t, store) &&
             Check(traj, store);
    }
    if (r == "value_snapshot") {
      if (k.size() != 5 || !m_.HasSnapshot(f.functor())) return false;
      const ProofNode& term = *k[1];
      bool governing = false;
      for (const Clause* tr : m_.OfKind(Clause::Kind::kTrajectory)) {
        if (tr->functional_fluent().functor() == f.functor() && term.goal.arity() == 3 &&
            tr->state_fluent().functor() == term.goal.arg(1).functor()) {
          governing = true;
        }
      }
      const Term& t1 = k[0]->goal.arg(1);
      return governing &&
             CheckStart(*k[0], term, *k[2], term.goal.arg(1), t, Clause::Kind::kTerminates, true, store) &&
             Same(k[3]->goal, Term::Compound("holdsAt", {f, t1}), store) && Check(*k[3], store) &&
             CheckWindowNode(*k[4], "not_clipped_value", t1, Term::Sym(f.functor()), t, store);
    }
    return false;
  }

  State StateFor(const Term& goal, const clpq::ConstraintStore& store) const {
    int top = MaxVar(goal);
    for (int v : store.Vars()) top = std::max(top, v);
    State s;
    s.Fresh(top + 1);
    s.store = store;
    return s;
  }

  bool LeavesEntailed(const ProofNode& p, const clpq::ConstraintStore& store) {
    for (const auto& c : p.children) {
      if (c->rule != "constraint" || !Check(*c, store)) return false;
    }
    return true;
  }

  bool CheckNot(const ProofNode& p, const clpq::ConstraintStore& store) {
    if (!p.negated || !LeavesEntailed(p, store)) return false;
    State s = StateFor(p.goal, store);
    detail::Solver sv(tl_, nullptr, false, false, 0);
    return sv.SolveLit(Literal::Classify(p.goal, false), s, 0).empty();
  }

  bool CheckWindow(const ProofNode& p, const clpq::ConstraintStore& store) {
    if (!p.negated || p.goal.name() != "clipped" || p.goal.arity() != 3 || !LeavesEntailed(p, store)) {
      return false;
    }
    const Term& t1 = p.goal.arg(0);
    const Term& f = p.goal.arg(1);
    const Term& t2 = p.goal.arg(2);
    const std::string name = f.functor();
    struct Candidate {
      const Clause* clause;
      bool exact;  // clause fluent must unify with f
    };
    std::vector<Candidate> cands;
    auto add = [&](Clause::Kind kind, const std::string& fluent, bool exact) {
      for (const Clause* c : m_.OfKind(kind)) {
        if (c->fluent().functor() == fluent) cands.push_back({c, exact});
      }
    };
    if (p.rule == "not_clipped_value") {
      add(Clause::Kind::kInitiates, name, false);
      add(Clause::Kind::kTerminates, name, false);
      add(Clause::Kind::kReleases, name, false);
      std::set<std::string> states;
      for (const Clause* tr : m_.OfKind(Clause::Kind::kTrajectory)) {
        if (tr->functional_fluent().functor() == name) states.insert(tr->state_fluent().functor());
      }
      for (const auto& s : states) {
        add(Clause::Kind::kInitiates, s, false);
        if (m_.HasSnapshot(name)) add(Clause::Kind::kTerminates, s, false);
      }
    } else {
      add(Clause::Kind::kTerminates, name, true);
      add(Clause::Kind::kReleases, name, true);
      if (p.rule == "not_stopped") add(Clause::Kind::kInitiates, name, true);
    }
    const bool closed = tl_.options.mutant_closed_clipping;
    detail::Solver sv(tl_, nullptr, false, false, 0);
    State base = StateFor(p.goal, store);
    for (const TimedEvent& ev : tl_.events) {
      for (const Candidate& c : cands) {
        State s = base;
        int off = s.Fresh(c.clause->var_count);
        Term h = detail::Renamed(c.clause->head, off);
        if (!detail::Unify(h.arg(0), ev.event, s) || (c.exact && !detail::Unify(h.arg(1), f, s)) ||
            !detail::Unify(h.arg(2), detail::LinToTerm(ev.time), s) ||
            !s.store.Add(LinConstraint::Make(ToLin(t1, s), Op::kLt, ev.time)) ||
            !s.store.Add(LinConstraint::Make(ev.time, closed ? Op::kLe : Op::kLt, ToLin(t2, s)))) {
          continue;
        }
        std::vector<Literal> body;
        for (const Literal& l : c.clause->body) body.push_back(detail::Renamed(l, off));
        if (!sv.SolveConj(body, s, 0).empty()) {
          message = "clipper " + ToString(ev.event) + " lies in the window of " + ToString(p.goal);
          return false;
        }
      }
    }
    return true;
  }

  const ClosedTimeline& tl_;
  const DomainModel& m_;
};

}  // namespace

ReplayResult ReplayProof(const ClosedTimeline& tl, const ProofNode& proof,
                         const clpq::ConstraintStore& store) {
  Replayer r(tl);
  ReplayResult out;
  try {
    out.ok = r.Check(proof, store);
  } catch (const std::exception& e) {
    out.ok = false;
    r.message = e.what();
  }
  out.nodes = r.nodes;
  if (!out.ok) out.message = r.message;
  return out;
}

ReplayResult ReplayAnswer(const ClosedTimeline& tl, const Answer& a) {
  ReplayResult out;
  for (const auto& p : a.proofs) {
    ReplayResult r = ReplayProof(tl, *p, a.store);
    out.nodes += r.nodes;
    if (!r.ok) {
      out.ok = false;
      out.message = r.message;
      break;
    }
  }
  return out;
}

}  // namespace ecrv
