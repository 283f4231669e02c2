#include "ecrv/oracle.hpp"

#include <algorithm>
#include <sstream>

namespace ecrv {

using clpq::LinConstraint;
using clpq::LinExpr;
using Op = clpq::LinConstraint::Op;

namespace {

constexpr int kMaxDepth = 200;

// ------------------------------------------------------------- matching

struct Env {
  std::map<int, Term> bind;  // var -> var, symbol or compound; numbers live in the store
  clpq::ConstraintStore store;
  int next = 0;
};

Term Walk(Term t, const Env& e) {
  while (t.is_var()) {
    auto it = e.bind.find(t.var_id());
    if (it == e.bind.end()) break;
    t = it->second;
  }
  return t;
}

LinExpr Lin(const Term& t, const Env& e);

// Substitutes variables the store pins to a value.
LinExpr Concrete(const LinExpr& x, const Env& e) {
  LinExpr out(x.constant());
  for (const auto& [v, c] : x.coeffs()) {
    if (auto f = e.store.FixedValue(v)) {
      out += LinExpr(*f * c);
    } else {
      out += LinExpr::Var(v, c);
    }
  }
  return out;
}

LinExpr Lin(const Term& raw, const Env& e) {
  Term t = Walk(raw, e);
  if (t.is_var()) return LinExpr::Var(t.var_id());
  if (t.is_num()) return LinExpr(t.num());
  if (!t.is_arith()) throw OracleUnsupported("non-numeric term in arithmetic: " + ToString(t));
  const std::string& f = t.name();
  if (f == "neg") return -Lin(t.arg(0), e);
  LinExpr a = Lin(t.arg(0), e), b = Lin(t.arg(1), e);
  if (f == "+") return a + b;
  if (f == "-") return a - b;
  a = Concrete(a, e);
  b = Concrete(b, e);
  if (f == "*") {
    if (a.is_constant()) return b * a.constant();
    if (b.is_constant()) return a * b.constant();
    throw OracleUnsupported("non-linear product " + ToString(t));
  }
  if (!b.is_constant() || b.constant() == 0) throw OracleUnsupported("unsupported division " + ToString(t));
  return a * (Rational(1) / b.constant());
}

bool Numeric(const Term& t) { return t.is_num() || t.is_arith(); }

bool Unify(const Term& x, const Term& y, Env& e) {
  Term a = Walk(x, e), b = Walk(y, e);
  if (a.is_var() && b.is_var()) {
    if (a.var_id() == b.var_id()) return true;
    if (e.store.Mentions(a.var_id())) {
      if (!e.store.Mentions(b.var_id())) std::swap(a, b);
      else return e.store.Add(LinConstraint::Make(LinExpr::Var(a.var_id()), Op::kEq, LinExpr::Var(b.var_id())));
    }
    e.bind[a.var_id()] = b;
    return true;
  }
  if (a.is_var() || b.is_var()) {
    if (!a.is_var()) std::swap(a, b);
    if (Numeric(b)) return e.store.Add(LinConstraint::Make(LinExpr::Var(a.var_id()), Op::kEq, Lin(b, e)));
    if (e.store.Mentions(a.var_id())) return false;
    e.bind[a.var_id()] = b;
    return true;
  }
  if (Numeric(a) || Numeric(b)) {
    if (!Numeric(a) || !Numeric(b)) return false;
    return e.store.Add(LinConstraint::Make(Lin(a, e), Op::kEq, Lin(b, e)));
  }
  if (a.is_sym() || b.is_sym()) return a.is_sym() && b.is_sym() && a.name() == b.name();
  if (a.name() != b.name() || a.arity() != b.arity()) return false;
  for (size_t i = 0; i < a.arity(); ++i) {
    if (!Unify(a.arg(i), b.arg(i), e)) return false;
  }
  return true;
}

// Full substitution; pinned numeric variables become numbers.
Term Resolve(const Term& raw, const Env& e) {
  Term t = Walk(raw, e);
  if (t.is_var()) {
    if (auto v = e.store.FixedValue(t.var_id())) return Term::Num(*v);
    return t;
  }
  if (t.is_arith()) {
    LinExpr l = Concrete(Lin(t, e), e);
    if (l.is_constant()) return Term::Num(l.constant());
  }
  if (!t.is_compound()) return t;
  std::vector<Term> args;
  for (const Term& a : t.args()) args.push_back(Resolve(a, e));
  return Term::Compound(t.name(), std::move(args));
}

Literal Renamed(const Literal& l, int off) {
  Literal r = l;
  r.atom = OffsetVars(l.atom, off);
  return r;
}

// ------------------------------------------------------------- regimes

// A functional value a + s*t, valid for times after `start`.
struct Regime {
  Rational a, s;
  Rational start;
  std::optional<Term> state;  // governing state instance of a trajectory

  Rational At(const Rational& t) const { return a + s * t; }
};

struct Held {
  Term fluent;
  Rational start;
};

// Fluent states over [0,0] or (lo, hi].
struct Phase {
  Rational lo, hi;
  bool closed_lo = false;
  std::map<std::string, Held> holding;
  std::map<std::string, std::vector<Regime>> values;

  bool Contains(const Rational& t) const { return (closed_lo ? lo <= t : lo < t) && t <= hi; }
};

struct Sim {
  const DomainModel& m;
  Rational horizon;
  std::vector<SampledEvent> events;
  std::vector<Phase> phases;

  const Phase& PhaseAt(const Rational& t) const {
    for (const Phase& p : phases) {
      if (p.Contains(t)) return p;
    }
    throw OracleUnsupported("state at " + ToString(t) + " is not simulated yet");
  }

  bool Functional(const Term& f) const { return m.IsFunctional(f.functor()) && f.arity() == 1; }

  // Bodies are solved against `cur`; `tvar` ranges over it symbolically.
  struct Ctx {
    const Phase* cur;
    int tvar;
  };

  void Solve(const std::vector<Literal>& lits, size_t i, Env env, const Ctx& ctx, int depth,
             std::vector<Env>& out) const {
    if (depth > kMaxDepth) throw OracleUnsupported("body nesting too deep");
    if (i == lits.size()) {
      out.push_back(std::move(env));
      return;
    }
    for (Env& e : Literal1(lits[i], env, ctx, depth)) Solve(lits, i + 1, std::move(e), ctx, depth, out);
  }

  std::vector<Env> Literal1(const Literal& l, const Env& env, const Ctx& ctx, int depth) const {
    if (!l.negated) return Positive(l, env, ctx, depth);
    Term resolved = Resolve(l.atom, env);
    bool closed = resolved.is_ground();
    if (ctx.tvar >= 0) {
      ForEachVar(resolved, [&](const Term&) { closed = false; });
    }
    if (!closed) throw OracleUnsupported("negation over unbound variables: " + ToString(l));
    Literal pos = l;
    pos.negated = false;
    pos.atom = resolved;
    if (Positive(pos, env, ctx, depth).empty()) return {env};
    return {};
  }

  std::vector<Env> Positive(const Literal& l, const Env& env, const Ctx& ctx, int depth) const {
    std::vector<Env> out;
    const Term& atom = l.atom;
    switch (l.kind) {
      case Literal::Kind::kConstraint: {
        Op op = ConstraintOp(atom.name());
        LinExpr a = Lin(atom.arg(0), env), b = Lin(atom.arg(1), env);
        if (op == Op::kNe) {
          for (Op o : {Op::kLt, Op::kGt}) {
            Env e = env;
            if (e.store.Add(LinConstraint::Make(a, o, b))) out.push_back(std::move(e));
          }
        } else {
          Env e = env;
          if (e.store.Add(LinConstraint::Make(a, op, b))) out.push_back(std::move(e));
        }
        return out;
      }
      case Literal::Kind::kInitiallyP:
        for (const Clause* c : m.OfKind(Clause::Kind::kInitiallyP)) {
          Env e = env;
          int off = e.next;
          e.next += c->var_count;
          if (!Unify(OffsetVars(c->head, off).arg(0), atom.arg(0), e)) continue;
          std::vector<Literal> body;
          for (const Literal& b : c->body) body.push_back(Renamed(b, off));
          Solve(body, 0, std::move(e), ctx, depth + 1, out);
        }
        return out;
      case Literal::Kind::kHappens:
        for (const SampledEvent& ev : events) {
          Env e = env;
          if (Unify(atom.arg(0), ev.event, e) && Unify(atom.arg(1), Term::Num(ev.time), e)) out.push_back(std::move(e));
        }
        return out;
      case Literal::Kind::kHolds:
        return Holds(atom, env, ctx);
      case Literal::Kind::kUser:
        for (const Clause* c : m.OfKind(Clause::Kind::kUser)) {
          if (c->head.functor() != atom.functor() || c->head.arity() != atom.arity()) continue;
          Env e = env;
          int off = e.next;
          e.next += c->var_count;
          if (!Unify(OffsetVars(c->head, off), atom, e)) continue;
          std::vector<Literal> body;
          for (const Literal& b : c->body) body.push_back(Renamed(b, off));
          Solve(body, 0, std::move(e), ctx, depth + 1, out);
        }
        return out;
    }
    return out;
  }

  std::vector<Env> Holds(const Term& atom, const Env& env, const Ctx& ctx) const {
    std::vector<Env> out;
    Term f = Walk(atom.arg(0), env);
    if (f.is_var()) throw OracleUnsupported("holdsAt with an unbound fluent");
    if (!m.IsFluent(f.functor())) return out;
    Term tw = Walk(atom.arg(1), env);
    const Phase* phase = nullptr;
    LinExpr at;
    if (tw.is_var() && tw.var_id() == ctx.tvar) {
      phase = ctx.cur;
      at = LinExpr::Var(ctx.tvar);
    } else {
      at = Concrete(Lin(tw, env), env);
      if (!at.is_constant()) throw OracleUnsupported("holdsAt at a symbolic time " + ToString(tw));
      if (at.constant() < 0 || at.constant() > horizon) return out;
      phase = &PhaseAt(at.constant());
    }
    if (Functional(f)) {
      auto it = phase->values.find(f.functor());
      if (it == phase->values.end()) return out;
      for (const Regime& r : it->second) {
        Env e = env;
        LinExpr v = at * r.s + LinExpr(r.a);
        if (e.store.Add(LinConstraint::Make(Lin(f.arg(0), e), Op::kEq, v))) out.push_back(std::move(e));
      }
      return out;
    }
    for (const auto& [text, h] : phase->holding) {
      Env e = env;
      if (Unify(f, h.fluent, e)) out.push_back(std::move(e));
    }
    return out;
  }

  // ------------------------------------------------------------ effects

  struct Effects {
    std::vector<Term> initiated, terminated, released;
  };

  // Fluent instances affected by the events at `b`, given the state at `b`.
  Effects EffectsAt(const Rational& b) const {
    Effects fx;
    const Phase& at = PhaseAt(b);
    Ctx ctx{&at, -1};
    struct Kind {
      Clause::Kind kind;
      std::vector<Term>* out;
    };
    for (const Kind& k : {Kind{Clause::Kind::kInitiates, &fx.initiated}, Kind{Clause::Kind::kTerminates, &fx.terminated},
                          Kind{Clause::Kind::kReleases, &fx.released}}) {
      for (const SampledEvent& ev : events) {
        if (ev.time != b) continue;
        for (const Clause* c : m.OfKind(k.kind)) {
          Env e;
          e.next = c->var_count;
          const Term& h = c->head;
          if (!Unify(h.arg(0), ev.event, e) || !Unify(h.arg(2), Term::Num(b), e)) continue;
          std::vector<Env> sols;
          Solve(c->body, 0, std::move(e), ctx, 0, sols);
          for (const Env& s : sols) k.out->push_back(Resolve(h.arg(1), s));
        }
      }
    }
    return fx;
  }

  static bool Matches(const Term& pattern, const Term& instance) {
    Env e;
    int top = 0;
    ForEachVar(pattern, [&](const Term& v) { top = std::max(top, v.var_id() + 1); });
    e.next = top;
    return Unify(pattern, instance, e);
  }

  static bool AnyNamed(const std::vector<Term>& ts, const std::string& name) {
    return std::any_of(ts.begin(), ts.end(), [&](const Term& t) { return t.functor() == name; });
  }

  // Trajectory regimes of `name` for `state` starting at `b`.
  std::vector<Regime> Trajectories(const std::string& name, const Term& state, const Rational& b) const {
    std::vector<Regime> out;
    const Phase& at = PhaseAt(b);
    for (const Clause* tr : m.OfKind(Clause::Kind::kTrajectory)) {
      if (tr->functional_fluent().functor() != name) continue;
      Env e;
      e.next = tr->var_count;
      const Term& h = tr->head;
      if (!Unify(h.arg(0), state, e) || !Unify(h.arg(1), Term::Num(b), e)) continue;
      int t2 = e.next++;
      int x = e.next++;
      if (!Unify(h.arg(3), Term::Var(t2), e)) continue;
      std::vector<Env> sols;
      Solve(tr->body, 0, std::move(e), Ctx{&at, -1}, 0, sols);
      for (Env& s : sols) {
        if (!s.store.Add(LinConstraint::Make(LinExpr::Var(x), Op::kEq, Lin(h.arg(2).arg(0), s)))) continue;
        // Two samples fix the line.
        std::optional<Rational> v[2];
        for (int k = 0; k < 2; ++k) {
          clpq::ConstraintStore probe = s.store;
          if (probe.Add(LinConstraint::Make(LinExpr::Var(t2), Op::kEq, LinExpr(b + Rational(k + 1))))) {
            v[k] = probe.FixedValue(x);
          }
        }
        if (!v[0] || !v[1]) throw OracleUnsupported("trajectory of " + name + " is not a function of time");
        Regime r;
        r.s = *v[1] - *v[0];
        r.a = *v[0] - r.s * (b + Rational(1));
        r.start = b;
        r.state = Resolve(state, s);
        out.push_back(std::move(r));
      }
    }
    return out;
  }

  // State just after `b` from the state at `b` and the events at `b`.
  Phase After(const Rational& b, const Rational& hi) const {
    const Phase& prev = PhaseAt(b);
    Effects fx = EffectsAt(b);
    Phase next;
    next.lo = b;
    next.hi = hi;
    next.holding = prev.holding;
    next.values = prev.values;

    auto stops = [&](const Term& inst) {
      for (const auto* list : {&fx.terminated, &fx.released}) {
        for (const Term& t : *list) {
          if (Matches(t, inst)) return true;
        }
      }
      return false;
    };
    for (auto it = next.holding.begin(); it != next.holding.end();) {
      if (it->second.start < b && stops(it->second.fluent)) {
        it = next.holding.erase(it);
      } else {
        ++it;
      }
    }
    // States (re)started at b; at 0 the initial ones start too.
    std::vector<Term> started;
    for (const Term& t : fx.initiated) {
      if (Functional(t)) continue;
      if (!t.is_ground()) throw OracleUnsupported("non-ground initiated fluent " + ToString(t));
      next.holding[ToString(t)] = Held{t, b};
      started.push_back(t);
    }
    if (b == 0) {
      for (const auto& [text, h] : prev.holding) started.push_back(h.fluent);
    }

    for (const auto& [name, sig] : m.fluents) {
      if (!sig.functional) continue;
      std::set<std::string> governing;
      for (const Clause* tr : m.OfKind(Clause::Kind::kTrajectory)) {
        if (tr->functional_fluent().functor() == name) governing.insert(tr->state_fluent().functor());
      }
      bool snapshot = m.HasSnapshot(name);
      bool clipped = AnyNamed(fx.initiated, name) || AnyNamed(fx.terminated, name) || AnyNamed(fx.released, name);
      for (const std::string& s : governing) {
        clipped = clipped || AnyNamed(fx.initiated, s) || (snapshot && AnyNamed(fx.terminated, s));
      }
      std::vector<Regime> regimes;
      for (const Regime& r : prev.values.count(name) ? prev.values.at(name) : std::vector<Regime>{}) {
        if (r.start == b) {
          regimes.push_back(r);
        } else if (r.state) {
          bool restarted = std::any_of(fx.initiated.begin(), fx.initiated.end(),
                                       [&](const Term& t) { return Matches(t, *r.state); });
          if (!restarted && !stops(*r.state)) regimes.push_back(r);
        } else if (!clipped) {
          regimes.push_back(r);
        }
      }
      for (const Term& t : fx.initiated) {
        if (t.functor() != name || !Functional(t)) continue;
        if (!t.arg(0).is_num()) throw OracleUnsupported("non-numeric initiated value " + ToString(t));
        regimes.push_back(Regime{t.arg(0).num(), Rational(0), b, std::nullopt});
      }
      for (const Term& st : started) {
        if (!governing.count(st.functor())) continue;
        for (Regime& r : Trajectories(name, st, b)) regimes.push_back(std::move(r));
      }
      if (snapshot) {
        bool ends = false;
        for (const std::string& s : governing) ends = ends || AnyNamed(fx.terminated, s);
        auto pv = prev.values.find(name);
        if (ends && pv != prev.values.end()) {
          for (const Regime& r : pv->second) regimes.push_back(Regime{r.At(b), Rational(0), b, std::nullopt});
        }
      }
      next.values[name] = std::move(regimes);
    }
    return next;
  }

  // ----------------------------------------------------------- triggers

  struct Firing {
    Term event;
    Rational time;
  };

  std::set<Rational> Occupied(const std::string& text) const {
    std::set<Rational> out;
    for (const SampledEvent& ev : events) {
      if (ToString(ev.event) == text) out.insert(ev.time);
    }
    return out;
  }

  // Earliest admissible time in the region of `t`; same choice rule as the
  // engine's closure: the fixed value, else an unoccupied closed lower bound,
  // else the midpoint up to the next occupied time.
  static std::optional<Rational> Choose(const clpq::ConstraintStore& s, int t, const std::set<Rational>& occupied) {
    clpq::Bounds iv = clpq::BoundsOf(s, t);
    if (iv.eq) return occupied.count(*iv.eq) ? std::nullopt : iv.eq;
    if (!iv.lo || !iv.hi) return std::nullopt;
    if (!iv.lo_strict && !occupied.count(*iv.lo)) return iv.lo;
    Rational hi = *iv.hi;
    if (auto it = occupied.upper_bound(*iv.lo); it != occupied.end() && *it < hi) hi = *it;
    if (hi <= *iv.lo) return std::nullopt;
    Rational mid = Midpoint(*iv.lo, hi);
    if (occupied.count(mid)) return std::nullopt;
    if (!s.CompatibleWith({LinConstraint::Make(LinExpr::Var(t), Op::kEq, LinExpr(mid))})) return std::nullopt;
    return mid;
  }

  std::optional<Firing> Earliest(const Phase& p) const {
    std::optional<Firing> best;
    for (const Clause* c : m.OfKind(Clause::Kind::kTrigger)) {
      Env e;
      e.next = c->var_count;
      int t = e.next++;
      const Term& h = c->head;
      if (!Unify(h.arg(1), Term::Var(t), e)) continue;
      LinExpr tv = LinExpr::Var(t);
      bool in = p.closed_lo ? e.store.Add(LinConstraint::Make(tv, Op::kEq, LinExpr(p.lo)))
                            : e.store.Add(LinConstraint::Make(LinExpr(p.lo), Op::kLt, tv)) &&
                                  e.store.Add(LinConstraint::Make(tv, Op::kLe, LinExpr(p.hi)));
      if (!in) continue;
      std::vector<Env> sols;
      Solve(c->body, 0, std::move(e), Ctx{&p, t}, 0, sols);
      for (const Env& s : sols) {
        Term ev = Resolve(h.arg(0), s);
        if (!ev.is_ground()) throw OracleUnsupported("trigger produces a non-ground event " + ToString(ev));
        auto pick = Choose(s.store, t, Occupied(ToString(ev)));
        if (pick && (!best || *pick < best->time)) best = Firing{ev, *pick};
      }
    }
    return best;
  }

  void Insert(SampledEvent ev) {
    auto it = std::upper_bound(events.begin(), events.end(), ev.time,
                               [](const Rational& t, const SampledEvent& e) { return t < e.time; });
    events.insert(it, std::move(ev));
  }

  std::optional<Rational> NextEventAfter(const Rational& b) const {
    for (const SampledEvent& ev : events) {
      if (ev.time > b) return ev.time;
    }
    return std::nullopt;
  }
};

}  // namespace

SampledTrace Simulate(const DomainModel& model, const Narrative& n, const Rational& dt, int zeno_bound) {
  if (dt <= 0) throw std::invalid_argument("oracle step must be positive, got " + ToString(dt));
  Sim sim{model, n.horizon, {}, {}};
  for (const Occurrence& o : n.occurrences) sim.Insert(SampledEvent{o.event, o.time, false});

  int fired = 0;
  std::vector<std::string> recent;
  auto fire = [&](const Sim::Firing& f) {
    if (fired >= zeno_bound) throw ZenoError(zeno_bound, recent);
    ++fired;
    recent.push_back(ToString(f.event) + "@" + ToString(f.time));
    if (recent.size() > 5) recent.erase(recent.begin());
    sim.Insert(SampledEvent{f.event, f.time, true});
  };

  Phase zero;
  zero.closed_lo = true;
  for (const Term& f : model.InitialFacts()) {
    if (sim.Functional(f)) {
      if (!f.arg(0).is_num()) throw OracleUnsupported("non-numeric initial value " + ToString(f));
      zero.values[f.functor()].push_back(Regime{f.arg(0).num(), Rational(0), Rational(0), std::nullopt});
    } else {
      zero.holding[ToString(f)] = Held{f, Rational(0)};
    }
  }
  sim.phases.push_back(zero);
  while (auto f = sim.Earliest(sim.phases.back())) fire(*f);

  Rational b(0);
  while (b < n.horizon) {
    Rational hi = std::min(sim.NextEventAfter(b).value_or(n.horizon), n.horizon);
    sim.phases.push_back(sim.After(b, hi));
    while (auto f = sim.Earliest(sim.phases.back())) {
      fire(*f);
      sim.phases.back().hi = std::min(sim.phases.back().hi, f->time);
    }
    b = sim.phases.back().hi;
  }

  SampledTrace trace;
  trace.dt = dt;
  trace.horizon = n.horizon;
  trace.events = sim.events;
  std::set<Rational> grid;
  for (Rational t(0); t <= n.horizon; t += dt) grid.insert(t);
  grid.insert(n.horizon);
  for (const SampledEvent& ev : sim.events) {
    if (ev.time <= n.horizon) grid.insert(ev.time);
  }
  for (const Rational& t : grid) {
    const Phase& p = sim.PhaseAt(t);
    SamplePoint pt;
    pt.time = t;
    for (const auto& [text, h] : p.holding) pt.holding.insert(text);
    for (const auto& [name, regimes] : p.values) {
      std::set<Rational> vs;
      for (const Regime& r : regimes) vs.insert(r.At(t));
      pt.values[name] = {vs.begin(), vs.end()};
    }
    for (const auto& [name, sig] : model.fluents) {
      if (sig.functional) pt.values.try_emplace(name);
    }
    trace.points.push_back(std::move(pt));
  }
  return trace;
}

std::string SampledTrace::ToCsv() const {
  std::ostringstream out;
  out << "time,fluent,value\n";
  for (const SamplePoint& p : points) {
    for (const std::string& h : p.holding) out << ToString(p.time) << ",\"" << h << "\",true\n";
    for (const auto& [name, vs] : p.values) {
      if (vs.empty()) out << ToString(p.time) << "," << name << ",none\n";
      for (const Rational& v : vs) out << ToString(p.time) << "," << name << "," << ToString(v) << "\n";
    }
  }
  return out.str();
}

namespace {

std::string Values(const std::vector<Rational>& vs) {
  if (vs.empty()) return "none";
  std::string s;
  for (const Rational& v : vs) s += (s.empty() ? "" : "|") + ToString(v);
  return s;
}

std::string Instances(const std::set<std::string>& s) {
  std::string out;
  for (const std::string& i : s) out += (out.empty() ? "" : "|") + i;
  return out.empty() ? "none" : out;
}

}  // namespace

std::vector<Discrepancy> CrossCheck(const ClosedTimeline& tl, const SampledTrace& trace) {
  std::vector<Discrepancy> out;
  const DomainModel& m = *tl.model;

  std::multiset<std::string> engine_events, oracle_events;
  for (const TimedEvent& ev : tl.events) {
    auto t = ev.ground_time();
    engine_events.insert(ToString(ev.event) + "@" + (t ? ToString(*t) : std::string("?")));
  }
  for (const SampledEvent& ev : trace.events) oracle_events.insert(ToString(ev.event) + "@" + ToString(ev.time));
  if (engine_events != oracle_events) {
    std::string e, o;
    for (const auto& s : engine_events) e += (e.empty() ? "" : " ") + s;
    for (const auto& s : oracle_events) o += (o.empty() ? "" : " ") + s;
    out.push_back({Rational(0), "happens", e, o});
  }

  for (const SamplePoint& p : trace.points) {
    for (const auto& [name, sig] : m.fluents) {
      if (sig.functional) {
        std::vector<Rational> engine;
        try {
          engine.push_back(ValueAt(tl, name, p.time).value);
        } catch (const NoValueError&) {
        } catch (const MultiValueError& e) {
          engine = e.values();
          std::sort(engine.begin(), engine.end());
          engine.erase(std::unique(engine.begin(), engine.end()), engine.end());
        }
        auto it = p.values.find(name);
        std::vector<Rational> oracle = it == p.values.end() ? std::vector<Rational>{} : it->second;
        if (engine != oracle) out.push_back({p.time, name, Values(engine), Values(oracle)});
        continue;
      }
      std::set<std::string> engine, oracle;
      if (sig.arity == 0) {
        if (HoldsAt(tl, Term::Sym(name), p.time).holds) engine.insert(name);
      } else {
        std::vector<Term> args;
        std::vector<std::string> names;
        for (size_t i = 0; i < sig.arity; ++i) {
          names.push_back("A" + std::to_string(i));
          args.push_back(Term::Var(static_cast<int>(i), names.back()));
        }
        Term f = Term::Compound(name, args);
        Literal l = Literal::Classify(Term::Compound("holdsAt", {f, Term::Num(p.time)}), false);
        for (const Answer& a : Query(tl, {l}, names)) {
          std::vector<Term> vals;
          for (const std::string& n : names) {
            auto b = std::find_if(a.bindings.begin(), a.bindings.end(), [&](const auto& x) { return x.first == n; });
            vals.push_back(b == a.bindings.end() ? Term::Sym("_") : b->second);
          }
          engine.insert(ToString(Term::Compound(name, vals)));
        }
      }
      for (const std::string& h : p.holding) {
        Term t = ParseTerm(h);
        if (t.functor() == name && t.arity() == sig.arity) oracle.insert(h);
      }
      if (engine != oracle) out.push_back({p.time, name, Instances(engine), Instances(oracle)});
    }
  }
  return out;
}

}  // namespace ecrv
