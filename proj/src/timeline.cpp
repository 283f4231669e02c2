#include <algorithm>
#include <functional>

#include "ecrv/engine.hpp"
#include "solver.hpp"

namespace ecrv {

using clpq::LinConstraint;
using clpq::LinExpr;
using detail::ConstValue;
using detail::Finalize;
using detail::LinToTerm;
using detail::Resolve;
using detail::Solver;
using detail::State;
using detail::ToLin;
using detail::Unify;
using Op = clpq::LinConstraint::Op;

ZenoError::ZenoError(int bound, std::vector<std::string> last_events)
    : std::runtime_error("Zeno bound " + std::to_string(bound) +
                         " reached: trigger rules keep firing"),
      bound_(bound),
      last_events_(std::move(last_events)) {}

MultiValueError::MultiValueError(const std::string& fluent, std::vector<Rational> values)
    : std::runtime_error([&] {
        std::string s = "fluent " + fluent + " has several values:";
        for (const auto& v : values) s += " " + ToString(v);
        return s;
      }()),
      values_(std::move(values)) {}

std::optional<Rational> TimedEvent::ground_time() const {
  if (time.is_constant()) return time.constant();
  return std::nullopt;
}

bool Segment::Contains(const Rational& t) const {
  if (closed_lo) return lo <= t && t <= hi;
  return lo < t && t <= hi;
}

void ClosedTimeline::AddEvent(TimedEvent e) {
  if (!e.time.is_constant()) ground = false;
  if (!ground) {
    events.push_back(std::move(e));
    return;
  }
  auto it = std::upper_bound(events.begin(), events.end(), e.time.constant(),
                             [](const Rational& t, const TimedEvent& x) { return t < x.time.constant(); });
  events.insert(it, std::move(e));
}

std::vector<Rational> ClosedTimeline::Boundaries() const {
  std::vector<Rational> out{Rational(0)};
  for (const auto& e : events) {
    if (auto t = e.ground_time(); t && *t <= horizon && *t != out.back()) out.push_back(*t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::string EventText(const TimedEvent& e, const std::vector<std::string>& names) {
  clpq::VarNamer namer = [&](int v) {
    return v < static_cast<int>(names.size()) ? names[static_cast<size_t>(v)] : "_G" + std::to_string(v);
  };
  return ToString(e.event) + "@" + clpq::ToString(e.time, namer);
}

void CheckUsable(const DomainModel& m) {
  for (const auto& d : ValidateModel(m)) {
    if (d.severity == Diagnostic::Severity::kError) {
      throw ModelError("line " + std::to_string(d.pos.line) + ": " + d.message);
    }
  }
  CheckStratification(m);
}

// Earliest admissible time for a trigger solution that is not already an
// occurrence of the same event. Unattained or occupied minima fall back to
// the midpoint between the infimum and the next obstacle.
std::optional<Rational> ChooseTime(const State& st, const Term& time,
                                   const std::set<Rational>& occupied) {
  if (auto c = ConstValue(time, st)) {
    if (occupied.count(*c)) return std::nullopt;
    return c;
  }
  State s = st;
  int z = s.Fresh(1);
  if (!s.store.Add(LinConstraint::Make(LinExpr::Var(z), Op::kEq, ToLin(time, s)))) return std::nullopt;
  clpq::Bounds iv = clpq::BoundsOf(s.store, z);
  if (iv.eq) {
    if (occupied.count(*iv.eq)) return std::nullopt;
    return iv.eq;
  }
  if (!iv.lo || !iv.hi) return std::nullopt;
  if (!iv.lo_strict && !occupied.count(*iv.lo)) return iv.lo;
  Rational b = *iv.hi;
  if (auto it = occupied.upper_bound(*iv.lo); it != occupied.end() && *it < b) b = *it;
  if (b <= *iv.lo) return std::nullopt;
  Rational mid = Midpoint(*iv.lo, b);
  if (occupied.count(mid)) return std::nullopt;
  if (!s.store.CompatibleWith({LinConstraint::Make(LinExpr::Var(z), Op::kEq, LinExpr(mid))})) {
    return std::nullopt;
  }
  return mid;
}

std::string ClauseRule(const Clause& c) {
  return (c.body.empty() ? "fact:" : "clause:") + std::to_string(c.id);
}

std::vector<const Clause*> Triggers(const DomainModel& m, const std::set<int>* only) {
  std::vector<const Clause*> out;
  for (const Clause* c : m.OfKind(Clause::Kind::kTrigger)) {
    if (!only || only->count(c->id)) out.push_back(c);
  }
  return out;
}

void AddConflicts(ClosedTimeline& tl) {
  const DomainModel& m = *tl.model;
  auto inits = m.OfKind(Clause::Kind::kInitiates);
  auto terms = m.OfKind(Clause::Kind::kTerminates);
  if (inits.empty() || terms.empty() || !tl.ground) return;
  Solver sv(tl, nullptr, false, false, 0);
  std::set<std::string> seen;
  for (size_t i = 0; i < tl.events.size(); ++i) {
    for (size_t j = 0; j < tl.events.size(); ++j) {
      if (i == j || tl.events[i].time != tl.events[j].time) continue;
      const TimedEvent& a = tl.events[i];
      const TimedEvent& b = tl.events[j];
      for (const Clause* ci : inits) {
        for (const Clause* ct : terms) {
          State s;
          int oi = s.Fresh(ci->var_count);
          int ot = s.Fresh(ct->var_count);
          Term hi = detail::Renamed(ci->head, oi), ht = detail::Renamed(ct->head, ot);
          Term t = LinToTerm(a.time);
          if (!Unify(hi.arg(0), a.event, s) || !Unify(ht.arg(0), b.event, s) || !Unify(hi.arg(2), t, s) ||
              !Unify(ht.arg(2), t, s) || !Unify(hi.arg(1), ht.arg(1), s)) {
            continue;
          }
          std::vector<Literal> body;
          for (const Literal& l : ci->body) body.push_back(detail::Renamed(l, oi));
          for (const Literal& l : ct->body) body.push_back(detail::Renamed(l, ot));
          for (const auto& cs : sv.SolveConj(body, s, 0)) {
            std::string msg = "ModelConflict: " + ToString(a.event) + " initiates and " + ToString(b.event) +
                              " terminates " + ToString(Resolve(hi.arg(1), cs.st)) + " at " +
                              ToString(a.time.constant());
            if (seen.insert(msg).second) tl.diagnostics.push_back({Diagnostic::Severity::kError, msg, {}});
          }
        }
      }
    }
  }
}

}  // namespace

ClosedTimeline MakeTimeline(std::shared_ptr<const DomainModel> model, const Narrative& n,
                            const EngineOptions& options) {
  ClosedTimeline tl;
  tl.model = std::move(model);
  tl.options = options;
  tl.horizon = n.horizon;
  for (const auto& o : n.occurrences) {
    TimedEvent e;
    e.event = o.event;
    e.time = LinExpr(o.time);
    e.pos = o.pos;
    tl.AddEvent(std::move(e));
  }
  return tl;
}

void CloseTimeline(ClosedTimeline& tl, const std::set<int>* only_rules) {
  CheckUsable(*tl.model);
  if (!tl.ground) throw EngineError("ground closure of a timeline with symbolic event times");
  auto triggers = Triggers(*tl.model, only_rules);
  int added = 0;
  std::vector<std::string> recent;
  std::optional<Rational> previous;
  struct Candidate {
    Rational time;
    Term event;
    ProofPtr proof;
    std::shared_ptr<const clpq::ConstraintStore> store;
    int rule;
  };
  while (!triggers.empty()) {
    Solver sv(tl, nullptr, tl.options.cache, false, 0);
    std::map<std::string, std::set<Rational>> occupied;
    for (const auto& e : tl.events) occupied[ToString(e.event)].insert(e.time.constant());

    // Earliest firing no later than `ceiling`, if any. Initiations at or
    // after the best pick so far cannot produce an earlier one.
    auto scan = [&](std::optional<Rational> ceiling) {
      std::optional<Candidate> best;
      for (const Clause* c : triggers) {
        State st;
        st.Fresh(c->var_count);
        const Term& when = c->head.arg(1);
        LinExpr lt = ToLin(when, st);
        if (!st.store.Add(LinConstraint::Make(LinExpr(Rational(0)), Op::kLe, lt)) ||
            !st.store.Add(LinConstraint::Make(lt, Op::kLe, LinExpr(tl.horizon)))) {
          continue;
        }
        std::optional<Rational> bound = ceiling;
        if (best && (!bound || best->time < *bound)) bound = best->time;
        sv.SetHint(when.is_var() ? when.var_id() : -1, bound);
        for (auto& cs : sv.SolveConj(c->body, st, 0)) {
          Term ev = Resolve(c->head.arg(0), cs.st);
          if (!ev.is_ground()) {
            throw EngineError("trigger rule at line " + std::to_string(c->pos.line) +
                              " derives the non-ground event " + ToString(ev));
          }
          std::optional<Rational> pick = ChooseTime(cs.st, when, occupied[ToString(ev)]);
          if (!pick || (best && best->time <= *pick)) continue;
          State fin = cs.st;
          if (!Unify(when, Term::Num(*pick), fin)) continue;
          best = Candidate{*pick, ev, Finalize(MakeProof(ClauseRule(*c), c->head, cs.proofs), fin),
                           std::make_shared<const clpq::ConstraintStore>(fin.store), c->id};
        }
      }
      return best;
    };
    std::optional<Candidate> best;
    if (previous) best = scan(previous);
    if (!best || best->time > *previous) best = scan(std::nullopt);
    if (!best) break;
    if (added >= tl.options.zeno_bound) throw ZenoError(tl.options.zeno_bound, std::move(recent));
    previous = best->time;
    TimedEvent e;
    e.event = best->event;
    e.time = LinExpr(best->time);
    e.triggered = true;
    e.rule = best->rule;
    e.proof = best->proof;
    e.proof_store = best->store;
    recent.push_back(EventText(e, tl.hyp_names));
    if (recent.size() > 5) recent.erase(recent.begin());
    tl.AddEvent(std::move(e));
    ++tl.triggered;
    ++added;
  }
  AddConflicts(tl);
}

ClosedTimeline TriggerClosure(std::shared_ptr<const DomainModel> model, const Narrative& n,
                              const EngineOptions& options, const std::set<int>* only_rules) {
  ClosedTimeline tl = MakeTimeline(std::move(model), n, options);
  CloseTimeline(tl, only_rules);
  return tl;
}

// ------------------------------------------------------- symbolic closure

namespace {

struct SymCandidate {
  Term event;
  LinExpr time;
  clpq::Conjunction delta;  // conditions on the hypothesis variables
  ProofPtr proof;
  std::shared_ptr<const clpq::ConstraintStore> store;
  int rule;
};

std::set<int> HypVars(const ClosedTimeline& tl) {
  std::set<int> out;
  for (int i = 0; i < tl.var_base; ++i) out.insert(i);
  return out;
}

// Cartesian product of disjunctions, pruned by satisfiability.
std::vector<clpq::ConstraintStore> Expand(const clpq::ConstraintStore& base,
                                          const std::vector<std::vector<clpq::Conjunction>>& choices) {
  std::vector<clpq::ConstraintStore> cur{base};
  for (const auto& options : choices) {
    std::vector<clpq::ConstraintStore> next;
    for (const auto& s : cur) {
      for (const auto& opt : options) {
        clpq::ConstraintStore n = s;
        if (n.AddAll(opt)) next.push_back(std::move(n));
      }
    }
    cur = std::move(next);
    if (cur.empty()) break;
  }
  return cur;
}

std::vector<clpq::Conjunction> ComplementOrEmpty(const clpq::Conjunction& delta) {
  if (delta.empty()) return {};
  return clpq::Complement(delta);
}

std::vector<SymCandidate> SymbolicCandidates(const ClosedTimeline& tl) {
  std::vector<SymCandidate> out;
  Solver sv(tl, nullptr, false, false, 0);
  std::set<int> hyp = HypVars(tl);
  for (const Clause* c : Triggers(*tl.model, nullptr)) {
    State st;
    st.store = tl.base_store;
    st.Fresh(tl.var_base);
    int off = st.Fresh(c->var_count);
    Term head = detail::Renamed(c->head, off);
    const Term& when = head.arg(1);
    LinExpr lt = ToLin(when, st);
    if (!st.store.Add(LinConstraint::Make(LinExpr(Rational(0)), Op::kLe, lt)) ||
        !st.store.Add(LinConstraint::Make(lt, Op::kLe, LinExpr(tl.horizon)))) {
      continue;
    }
    std::vector<Literal> body;
    for (const Literal& l : c->body) body.push_back(detail::Renamed(l, off));
    for (auto& cs : sv.SolveConj(body, st, 0)) {
      Term ev = Resolve(head.arg(0), cs.st);
      if (!ev.is_ground()) throw EngineError("trigger derives the non-ground event " + ToString(ev));
      State s = cs.st;
      int z = s.Fresh(1);
      s.store.Add(LinConstraint::Make(LinExpr::Var(z), Op::kEq, ToLin(when, s)));
      std::set<int> keep = hyp;
      keep.insert(z);
      std::optional<LinExpr> time;
      for (const auto& k : s.store.Project(keep)) {
        Rational a = k.expr.coeff(z);
        if (k.rel != clpq::Rel::kEq || a == 0) continue;
        LinExpr rest = k.expr - LinExpr::Var(z, a);
        time = rest * (Rational(-1) / a);
        break;
      }
      if (!time) {
        throw AbductionError("the time of triggered event " + ToString(ev) +
                             " is not determined by the hypothesized event times");
      }
      SymCandidate cand;
      cand.event = ev;
      cand.time = *time;
      for (const auto& k : clpq::RemoveRedundant(cs.st.store.Project(hyp))) {
        if (!tl.base_store.Entails(k)) cand.delta.push_back(k);
      }
      State fin = cs.st;
      cand.proof = Finalize(MakeProof(ClauseRule(*c), head, cs.proofs), fin);
      cand.store = std::make_shared<const clpq::ConstraintStore>(fin.store);
      cand.rule = c->id;
      out.push_back(std::move(cand));
    }
  }
  return out;
}

}  // namespace

std::vector<ClosedTimeline> SymbolicClosure(const ClosedTimeline& seed) {
  CheckUsable(*seed.model);
  std::vector<ClosedTimeline> done;
  std::vector<std::pair<ClosedTimeline, int>> pending{{seed, 0}};
  while (!pending.empty()) {
    auto [tl, added] = std::move(pending.back());
    pending.pop_back();
    std::vector<SymCandidate> raw = SymbolicCandidates(tl);

    // An occurrence of the same event at the same time is not a new event:
    // drop it where that is forced, split on either side where it is possible.
    std::vector<SymCandidate> cands;
    for (auto& c : raw) {
      std::vector<SymCandidate> pieces{c};
      for (const auto& e : tl.events) {
        if (e.event != c.event) continue;
        std::vector<SymCandidate> next;
        for (auto& p : pieces) {
          clpq::ConstraintStore s = tl.base_store;
          if (!s.AddAll(p.delta)) continue;
          LinConstraint same = LinConstraint::Make(p.time, Op::kEq, e.time);
          if (s.Entails(same)) continue;
          if (!s.CompatibleWith({same})) {
            next.push_back(p);
            continue;
          }
          for (Op side : {Op::kLt, Op::kGt}) {
            SymCandidate q = p;
            q.delta.push_back(LinConstraint::Make(p.time, side, e.time));
            next.push_back(std::move(q));
          }
        }
        pieces = std::move(next);
      }
      for (auto& p : pieces) cands.push_back(std::move(p));
    }

    // Nothing fires.
    {
      std::vector<std::vector<clpq::Conjunction>> choices;
      bool forced = false;
      for (const auto& c : cands) {
        auto comp = ComplementOrEmpty(c.delta);
        if (comp.empty()) {
          forced = true;
          break;
        }
        choices.push_back(std::move(comp));
      }
      if (!forced) {
        for (auto& store : Expand(tl.base_store, choices)) {
          ClosedTimeline out = tl;
          out.base_store = std::move(store);
          done.push_back(std::move(out));
        }
      }
    }
    // Candidate i fires first.
    for (size_t i = 0; i < cands.size(); ++i) {
      std::vector<std::vector<clpq::Conjunction>> choices;
      choices.push_back({cands[i].delta});
      for (size_t d = 0; d < cands.size(); ++d) {
        if (d == i) continue;
        std::vector<clpq::Conjunction> opts = ComplementOrEmpty(cands[d].delta);
        clpq::Conjunction later = cands[d].delta;
        later.push_back(LinConstraint::Make(cands[i].time, d < i ? Op::kLt : Op::kLe, cands[d].time));
        opts.push_back(std::move(later));
        choices.push_back(std::move(opts));
      }
      for (auto& store : Expand(tl.base_store, choices)) {
        if (added >= tl.options.zeno_bound) {
          TimedEvent last;
          last.event = cands[i].event;
          last.time = cands[i].time;
          throw ZenoError(tl.options.zeno_bound, {EventText(last, tl.hyp_names)});
        }
        ClosedTimeline out = tl;
        out.base_store = std::move(store);
        TimedEvent e;
        e.event = cands[i].event;
        e.time = cands[i].time;
        e.triggered = true;
        e.rule = cands[i].rule;
        e.proof = cands[i].proof;
        e.proof_store = cands[i].store;
        out.AddEvent(std::move(e));
        ++out.triggered;
        pending.emplace_back(std::move(out), added + 1);
      }
    }
  }
  return done;
}

// ------------------------------------------------------------------ query

std::string Answer::VarName(int id) const {
  for (const auto& [name, v] : named) {
    if (v == id) return name;
  }
  return "_G" + std::to_string(id);
}

std::vector<std::string> Answer::ResidualText() const {
  std::vector<std::string> out;
  clpq::VarNamer namer = [this](int v) { return VarName(v); };
  for (const auto& c : residual) out.push_back(clpq::ToString(c, namer));
  return out;
}

std::string Answer::ToText() const {
  std::string out;
  for (const auto& [name, t] : bindings) out += name + " = " + ToString(t) + "\n";
  for (const auto& r : ResidualText()) out += r + "\n";
  if (out.empty()) out = "true\n";
  return out;
}

QueryContext DefaultContext(const ClosedTimeline& tl) {
  QueryContext ctx;
  ctx.store = tl.base_store;
  for (int i = 0; i < tl.var_base; ++i) ctx.named[tl.hyp_names[static_cast<size_t>(i)]] = i;
  ctx.next_var = tl.var_base;
  return ctx;
}

namespace {

Term Substitute(const Term& t, const std::vector<Term>& vars) {
  if (t.is_var()) return vars[static_cast<size_t>(t.var_id())];
  if (!t.is_compound()) return t;
  std::vector<Term> args;
  for (const Term& a : t.args()) args.push_back(Substitute(a, vars));
  return Term::Compound(t.name(), std::move(args));
}

Term Simplify(const Term& t) {
  if (t.is_arith() && t.is_ground()) {
    State s;
    return Term::Num(ToLin(t, s).constant());
  }
  return t;
}

Term NameVars(const Term& t, const std::function<std::string(int)>& name) {
  if (t.is_var()) return Term::Var(t.var_id(), name(t.var_id()));
  if (!t.is_compound()) return t;
  std::vector<Term> args;
  for (const Term& a : t.args()) args.push_back(NameVars(a, name));
  return Term::Compound(t.name(), std::move(args));
}

ProofPtr NameProof(const ProofPtr& p, const std::function<std::string(int)>& name) {
  auto n = std::make_shared<ProofNode>(*p);
  n->goal = NameVars(p->goal, name);
  if (p->rule != "triggered") {
    for (auto& c : n->children) c = NameProof(c, name);
  }
  return n;
}

std::vector<Answer> QueryImpl(const ClosedTimeline& tl, const std::vector<Literal>& goal,
                              const std::vector<std::string>& names, QueryStats* stats,
                              const QueryContext* ctx_in, bool cache, size_t usable_segments) {
  QueryContext ctx = ctx_in ? *ctx_in : DefaultContext(tl);
  State st;
  st.store = ctx.store;
  st.Fresh(ctx.next_var);
  std::vector<Term> vars;
  std::vector<std::pair<std::string, int>> order;
  for (const std::string& n : names) {
    bool anonymous = n.empty() || n[0] == '_';
    int id;
    if (!anonymous && ctx.named.count(n)) {
      id = ctx.named.at(n);
    } else {
      id = st.Fresh(1);
      if (!anonymous) ctx.named[n] = id;
    }
    vars.push_back(Term::Var(id, n));
    if (!anonymous) order.emplace_back(n, id);
  }
  std::vector<Literal> lits;
  for (const Literal& l : goal) {
    Literal r = l;
    r.atom = Substitute(l.atom, vars);
    lits.push_back(std::move(r));
  }

  Solver sv(tl, stats, cache, tl.options.use_checkpoints, usable_segments);
  std::vector<Answer> out;
  for (auto& cs : sv.SolveConj(lits, st, 0)) {
    Answer a;
    a.named = ctx.named;
    a.next_var = cs.st.next_var;
    std::set<int> free;
    for (const auto& [name, id] : a.named) {
      Term r = Resolve(Term::Var(id), cs.st);
      if (r.is_var() && r.var_id() == id) {
        free.insert(id);
      } else if (std::any_of(order.begin(), order.end(), [&](const auto& o) { return o.first == name; })) {
        a.bindings.emplace_back(name, Simplify(r));
      }
    }
    // Keep bindings in goal order.
    std::stable_sort(a.bindings.begin(), a.bindings.end(), [&](const auto& x, const auto& y) {
      auto pos = [&](const std::string& n) {
        return std::find_if(order.begin(), order.end(), [&](const auto& o) { return o.first == n; }) - order.begin();
      };
      return pos(x.first) < pos(y.first);
    });
    a.residual = clpq::RemoveRedundant(cs.st.store.Project(free));
    std::function<std::string(int)> namer = [&a](int v) { return a.VarName(v); };
    for (auto& b : a.bindings) b.second = NameVars(b.second, namer);
    for (const auto& p : cs.proofs) a.proofs.push_back(NameProof(Finalize(p, cs.st), namer));
    a.store = cs.st.store;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

std::vector<Answer> Query(const ClosedTimeline& tl, const std::vector<Literal>& goal,
                          const std::vector<std::string>& names, QueryStats* stats,
                          const QueryContext* ctx) {
  return QueryImpl(tl, goal, names, stats, ctx, tl.options.cache, tl.segments.size());
}

std::vector<Answer> Query(const ClosedTimeline& tl, const std::string& goal, QueryStats* stats) {
  std::vector<std::string> names;
  std::vector<Literal> lits = ParseGoal(goal, &names);
  return Query(tl, lits, names, stats);
}

std::pair<std::vector<Answer>, CacheStats> SolveWithCache(const ClosedTimeline& tl,
                                                          const std::vector<Literal>& goal,
                                                          const std::vector<std::string>& names,
                                                          bool enabled, QueryStats* stats) {
  QueryStats local;
  QueryStats* s = stats ? stats : &local;
  auto answers = QueryImpl(tl, goal, names, s, nullptr, enabled, tl.segments.size());
  return {std::move(answers), s->cache};
}

HoldsResult HoldsAt(const ClosedTimeline& tl, const Term& fluent, const Rational& t,
                    QueryStats* stats) {
  Term atom = Term::Compound("holdsAt", {fluent, Term::Num(t)});
  std::vector<Literal> pos{Literal::Classify(atom, false)};
  auto answers = Query(tl, pos, {}, stats);
  HoldsResult r;
  if (!answers.empty()) {
    r.holds = true;
    r.proof = answers[0].proofs[0];
    r.store = answers[0].store;
    return r;
  }
  std::vector<Literal> neg{Literal::Classify(atom, true)};
  auto nots = Query(tl, neg, {}, stats);
  if (!nots.empty()) {
    r.proof = nots[0].proofs[0];
    r.store = nots[0].store;
  } else {
    r.proof = MakeProof("not", atom, {}, true);
  }
  return r;
}

ValueResult ValueAt(const ClosedTimeline& tl, const std::string& fluent, const Rational& t,
                    QueryStats* stats) {
  if (!tl.model->IsFunctional(fluent)) {
    throw NoValueError(fluent + " is not a functional fluent");
  }
  Term f = Term::Compound(fluent, {Term::Var(0, "V")});
  std::vector<Literal> goal{Literal::Classify(Term::Compound("holdsAt", {f, Term::Num(t)}), false)};
  auto answers = Query(tl, goal, {"V"}, stats);
  std::vector<Rational> values;
  const Answer* first = nullptr;
  for (const auto& a : answers) {
    for (const auto& [name, term] : a.bindings) {
      if (name != "V" || !term.is_num()) continue;
      if (std::find(values.begin(), values.end(), term.num()) == values.end()) {
        values.push_back(term.num());
        if (!first) first = &a;
      }
    }
  }
  if (values.empty()) throw NoValueError("no value for " + fluent + " at " + ToString(t));
  if (values.size() > 1) throw MultiValueError(fluent, values);
  return {values[0], first->proofs[0], first->store};
}

// ------------------------------------------------------------- checkpoint

void Checkpoint(ClosedTimeline& tl) {
  tl.segments.clear();
  tl.checkpoints.clear();
  std::vector<Rational> bounds = tl.Boundaries();
  std::vector<Segment> plan;
  plan.push_back({Rational(0), Rational(0), true, {}});
  for (size_t i = 0; i < bounds.size(); ++i) {
    Rational hi = i + 1 < bounds.size() ? bounds[i + 1] : tl.horizon;
    if (hi > bounds[i]) plan.push_back({bounds[i], hi, false, {}});
  }

  const DomainModel& m = *tl.model;
  for (Segment& seg : plan) {
    for (const auto& [name, sig] : m.fluents) {
      std::vector<Term> args;
      std::vector<std::string> names{"T"};
      for (size_t k = 0; k < sig.arity; ++k) {
        args.push_back(Term::Var(static_cast<int>(k + 1)));
        names.push_back("A" + std::to_string(k));
      }
      Term f = Term::Compound(name, args);
      Term t = Term::Var(0, "T");
      std::vector<Literal> goal{Literal::Classify(Term::Compound("holdsAt", {f, t}), false)};
      if (seg.closed_lo) {
        goal.push_back(Literal::Classify(Term::Compound("#=", {t, Term::Num(seg.lo)}), false));
      } else {
        goal.push_back(Literal::Classify(Term::Compound("#<", {Term::Num(seg.lo), t}), false));
        goal.push_back(Literal::Classify(Term::Compound("#=<", {t, Term::Num(seg.hi)}), false));
      }
      for (const Answer& a : QueryImpl(tl, goal, names, nullptr, nullptr, tl.options.cache,
                                       tl.segments.size())) {
        std::vector<Term> vars;
        for (size_t k = 0; k < names.size(); ++k) {
          int id = a.named.at(names[k]);
          Term v = Term::Var(id, names[k]);
          for (const auto& [n, b] : a.bindings) {
            if (n == names[k]) v = b;
          }
          vars.push_back(v);
        }
        CheckpointEntry e;
        e.time = vars[0];
        e.fluent = Substitute(f, vars);
        e.constraints = a.store.Constraints();
        e.proof = a.proofs[0];
        e.var_count = a.next_var;
        seg.entries[name].push_back(std::move(e));
      }
    }
    tl.segments.push_back(std::move(seg));
  }

  for (size_t i = 0; i < bounds.size(); ++i) {
    BoundaryCheckpoint cp;
    cp.time = bounds[i];
    Rational next = i + 1 < bounds.size() ? bounds[i + 1] : tl.horizon;
    Rational after = next > bounds[i] ? Midpoint(bounds[i], next) : bounds[i];
    for (const auto& [name, sig] : m.fluents) {
      if (sig.functional) {
        FluentState fs;
        try {
          ValueResult at = ValueAt(tl, name, bounds[i]);
          fs.value = at.value;
          fs.holds = true;
        } catch (const NoValueError&) {
        } catch (const MultiValueError& e) {
          tl.diagnostics.push_back({Diagnostic::Severity::kError,
                                    std::string("MultiValue at ") + ToString(bounds[i]) + ": " + e.what(), {}});
        }
        try {
          Rational a = ValueAt(tl, name, after).value;
          Rational b = ValueAt(tl, name, next).value;
          fs.varying = next > bounds[i] && a != b;
        } catch (const NoValueError&) {
        } catch (const MultiValueError& e) {
          tl.diagnostics.push_back({Diagnostic::Severity::kError,
                                    std::string("MultiValue after ") + ToString(bounds[i]) + ": " + e.what(), {}});
        }
        cp.fluents[name] = fs;
        continue;
      }
      std::vector<Term> args;
      std::vector<std::string> names;
      for (size_t k = 0; k < sig.arity; ++k) {
        args.push_back(Term::Var(static_cast<int>(k)));
        names.push_back("A" + std::to_string(k));
      }
      Term f = Term::Compound(name, args);
      std::vector<Literal> goal{Literal::Classify(Term::Compound("holdsAt", {f, Term::Num(after)}), false)};
      auto answers = Query(tl, goal, names);
      if (sig.arity == 0) {
        cp.fluents[name].holds = !answers.empty();
        continue;
      }
      for (const Answer& a : answers) {
        std::vector<Term> vars;
        for (const auto& n : names) {
          Term v = Term::Var(a.named.at(n), n);
          for (const auto& [bn, b] : a.bindings) {
            if (bn == n) v = b;
          }
          vars.push_back(v);
        }
        cp.fluents[ToString(Substitute(f, vars))].holds = true;
      }
    }
    tl.checkpoints.push_back(std::move(cp));
  }
}

}  // namespace ecrv
