#include "ecrv/validate.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <sstream>
#include <thread>

#include "solver.hpp"

namespace ecrv {

using clpq::LinConstraint;
using clpq::LinExpr;
using Op = clpq::LinConstraint::Op;

namespace {

Term Var(int id, const std::string& name) { return Term::Var(id, name); }

Literal Lit(Term atom, bool negated = false) { return Literal::Classify(std::move(atom), negated); }

Term Holds(const Term& f, const Term& t) { return Term::Compound("holdsAt", {f, t}); }

std::string WhenText(const Postcondition& p) {
  return std::string(p.when == Postcondition::When::kAt ? "at " : "by ") + ToString(p.time);
}

Rational AsNumber(const Term& t, SourcePos pos, const std::string& what) {
  if (!t.is_num()) throw ParseError(pos, what + " must be a rational number");
  return t.num();
}

}  // namespace

std::vector<Literal> Postcondition::Goal(std::vector<std::string>* names) const {
  std::vector<Literal> out;
  Term t = Var(0, "T");
  *names = {"T"};
  switch (kind) {
    case Kind::kHolds:
      out.push_back(Lit(Holds(subject, t)));
      break;
    case Kind::kNotHolds:
      out.push_back(Lit(Holds(subject, t), true));
      break;
    case Kind::kValue: {
      names->push_back("V");
      out.push_back(Lit(Holds(Term::Compound(subject.name(), {Var(1, "V")}), t)));
      out.push_back(Lit(Term::Compound("#=", {Var(1, "V"), Term::Num(expected)})));
      break;
    }
    case Kind::kHappens:
      out.push_back(Lit(Term::Compound("happens", {subject, t})));
      break;
    case Kind::kRaw: {
      // Clause-local variables shift up by one; T maps to variable 0.
      std::function<Term(const Term&)> shift = [&](const Term& x) -> Term {
        if (x.is_var()) {
          if (x.name() == "T") return t;
          std::string n = x.name();
          auto it = std::find(names->begin(), names->end(), n);
          if (it == names->end() || n.empty() || n[0] == '_') {
            names->push_back(n.empty() ? "_" : n);
            return Var(static_cast<int>(names->size()) - 1, n);
          }
          return Var(static_cast<int>(it - names->begin()), n);
        }
        if (!x.is_compound()) return x;
        std::vector<Term> args;
        for (const Term& a : x.args()) args.push_back(shift(a));
        return Term::Compound(x.name(), std::move(args));
      };
      out.push_back(Lit(shift(subject), negated));
      break;
    }
  }
  out.push_back(Lit(Term::Compound(when == When::kAt ? "#=" : "#=<", {t, Term::Num(time)})));
  if (when == When::kBy) out.push_back(Lit(Term::Compound("#>=", {t, Term::Num(0)})));
  return out;
}

Scenario ParseScenario(const std::string& text, const std::string& name) {
  Scenario s;
  s.name = name;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    if (line[0] != '%') break;
    size_t b = line.find_first_not_of("% ");
    if (b == std::string::npos) continue;
    if (!s.provenance.empty()) s.provenance += "\n";
    s.provenance += line.substr(b);
  }

  std::string narrative;
  for (const Clause& c : ParseClauses(text)) {
    if (c.head.functor() != "expect") {
      narrative += ToString(c) + "\n";
      continue;
    }
    if (c.head.arity() != 2 || !c.body.empty()) {
      throw ParseError(c.pos, "expectations are facts expect(Goal, at(T)) or expect(Goal, by(T))");
    }
    const Term& g = c.head.arg(0);
    const Term& w = c.head.arg(1);
    Postcondition p;
    p.pos = c.pos;
    if (!w.is_compound() || w.arity() != 1 || (w.name() != "at" && w.name() != "by")) {
      throw ParseError(c.pos, "expected at(T) or by(T)", {"at/1", "by/1"});
    }
    p.when = w.name() == "at" ? Postcondition::When::kAt : Postcondition::When::kBy;
    p.time = AsNumber(w.arg(0), c.pos, "expectation time");
    const std::string f = g.functor();
    if (f == "holds" && g.arity() == 1) {
      p.kind = Postcondition::Kind::kHolds;
      p.subject = g.arg(0);
    } else if (f == "not_holds" && g.arity() == 1) {
      p.kind = Postcondition::Kind::kNotHolds;
      p.subject = g.arg(0);
    } else if (f == "value" && g.arity() == 2) {
      p.kind = Postcondition::Kind::kValue;
      if (!g.arg(0).is_sym()) throw ParseError(c.pos, "value/2 takes a fluent name");
      p.subject = g.arg(0);
      p.expected = AsNumber(g.arg(1), c.pos, "expected value");
    } else if (f == "happens" && g.arity() == 1) {
      p.kind = Postcondition::Kind::kHappens;
      p.subject = g.arg(0);
    } else if (f == "not" && g.arity() == 1) {
      p.kind = Postcondition::Kind::kRaw;
      p.subject = g.arg(0);
      p.negated = true;
    } else {
      p.kind = Postcondition::Kind::kRaw;
      p.subject = g;
    }
    p.text = ToString(g) + " " + WhenText(p);
    s.postconditions.push_back(std::move(p));
  }
  s.narrative = ParseNarrative(narrative);
  for (const auto& p : s.postconditions) {
    if (p.time < 0 || p.time > s.narrative.horizon) {
      throw ParseError(p.pos, "expectation time " + ToString(p.time) + " outside [0, horizon]");
    }
  }
  return s;
}

std::string VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kConsistent: return "consistent";
    case Verdict::kInconsistent: return "inconsistent";
    case Verdict::kPass: return "pass";
    case Verdict::kViolation: return "violation";
    case Verdict::kError: return "error";
  }
  return "error";
}

nlohmann::json Report::ToJson() const {
  nlohmann::json j;
  j["name"] = name;
  j["verdict"] = VerdictName(verdict);
  j["results"] = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json x{{"postcondition", r.text}, {"ok", r.ok}};
    if (!r.explanation.empty()) x["explanation"] = r.explanation;
    if (r.actual) x["actual"] = ToString(*r.actual);
    if (r.proof) x["proof"] = ProofToJson(*r.proof);
    j["results"].push_back(std::move(x));
  }
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [k, v] : witness) w[k] = ToString(v);
  j["witness"] = w;
  j["proofs"] = nlohmann::json::array();
  for (const auto& p : proofs) j["proofs"].push_back(ProofToJson(*p));
  j["notes"] = notes;
  j["diagnostics"] = nlohmann::json::array();
  for (const auto& d : diagnostics) {
    j["diagnostics"].push_back({{"severity", SeverityName(d.severity)}, {"message", d.message}});
  }
  if (!error.empty()) j["error"] = error;
  j["stats"] = {{"expansions", stats.expansions},
                {"cache_hits", stats.cache.hits},
                {"cache_misses", stats.cache.misses},
                {"stored_failures", stats.cache.stored_failures}};
  return j;
}

std::string Report::ToText() const {
  std::string out = name + ": " + VerdictName(verdict) + "\n";
  for (const auto& r : results) {
    out += std::string(r.ok ? "  ok    " : "  FAIL  ") + r.text;
    if (!r.explanation.empty()) out += "  (" + r.explanation + ")";
    out += "\n";
  }
  if (!witness.empty()) {
    out += "  witness:";
    for (const auto& [k, v] : witness) out += " " + k + "=" + ToString(v);
    out += "\n";
  }
  for (const auto& n : notes) out += "  note: " + n + "\n";
  for (const auto& d : diagnostics) out += "  " + SeverityName(d.severity) + ": " + d.message + "\n";
  if (!error.empty()) out += "  error: " + error + "\n";
  return out;
}

namespace {

PostconditionResult Evaluate(const ClosedTimeline& tl, const Postcondition& p) {
  PostconditionResult r;
  r.text = p.text;
  bool at = p.when == Postcondition::When::kAt;
  if (at && p.kind == Postcondition::Kind::kValue) {
    try {
      ValueResult v = ValueAt(tl, p.subject.name(), p.time);
      r.actual = v.value;
      r.ok = v.value == p.expected;
      r.proof = v.proof;
      r.store = v.store;
      if (!r.ok) r.explanation = "actual value " + ToString(v.value);
    } catch (const NoValueError& e) {
      r.explanation = e.what();
    } catch (const MultiValueError& e) {
      r.explanation = e.what();
    }
    return r;
  }
  if (at && (p.kind == Postcondition::Kind::kHolds || p.kind == Postcondition::Kind::kNotHolds)) {
    HoldsResult h = HoldsAt(tl, p.subject, p.time);
    r.ok = h.holds == (p.kind == Postcondition::Kind::kHolds);
    r.proof = h.proof;
    r.store = h.store;
    if (!r.ok) r.explanation = ToString(p.subject) + (h.holds ? " holds" : " does not hold") + " at " + ToString(p.time);
    return r;
  }
  std::vector<std::string> names;
  auto answers = Query(tl, p.Goal(&names), names);
  r.ok = !answers.empty();
  if (r.ok) {
    r.proof = answers[0].proofs[0];
    r.store = answers[0].store;
    return r;
  }
  r.explanation = "no derivation " + WhenText(p);
  if (p.kind == Postcondition::Kind::kValue) {
    try {
      ValueResult v = ValueAt(tl, p.subject.name(), p.time);
      r.actual = v.value;
      r.explanation += "; value at " + ToString(p.time) + " is " + ToString(v.value);
    } catch (const std::exception&) {
    }
  }
  return r;
}

double Since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Report CheckScenario(std::shared_ptr<const DomainModel> model, const Scenario& s,
                     const EngineOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  Report rep;
  rep.name = s.name;
  try {
    ClosedTimeline tl = TriggerClosure(model, s.narrative, options);
    rep.diagnostics = tl.diagnostics;

    // All expectations as one conjunction; variables are kept apart by
    // anonymous names.
    std::vector<Literal> conj;
    std::vector<std::string> names;
    for (const auto& p : s.postconditions) {
      std::vector<std::string> local;
      std::vector<Literal> g = p.Goal(&local);
      int off = static_cast<int>(names.size());
      for (auto& l : g) conj.push_back(detail::Renamed(l, off));
      for (size_t i = 0; i < local.size(); ++i) names.push_back("_");
    }
    bool joint = true;
    if (!conj.empty()) {
      auto [answers, cache] = SolveWithCache(tl, conj, names, options.cache, &rep.stats);
      joint = !answers.empty();
    }
    bool all = true;
    for (const auto& p : s.postconditions) {
      rep.results.push_back(Evaluate(tl, p));
      all = all && rep.results.back().ok;
    }
    if (joint != all) rep.notes.push_back("joint and individual evaluation of the expectations disagree");
    rep.verdict = joint && all ? Verdict::kConsistent : Verdict::kInconsistent;
  } catch (const std::exception& e) {
    rep.verdict = Verdict::kError;
    rep.error = e.what();
  }
  rep.seconds = Since(t0);
  return rep;
}

PropertySpec ParseProperty(const std::string& text) {
  PropertySpec p;
  std::string t = text;
  t.erase(0, t.find_first_not_of(" \t"));
  if (t.rfind("goal(", 0) == 0) {
    size_t close = t.rfind(')');
    if (close == std::string::npos || close < 5) throw ParseError({1, 1}, "unterminated goal(...)");
    p.name = "goal";
    p.kind = RawGoal{t.substr(5, close - 5)};
    std::vector<std::string> names;
    ParseGoal(std::get<RawGoal>(p.kind).text, &names);
    return p;
  }
  Term term = ParseTerm(text);
  auto number = [&](size_t i) {
    const Term& a = term.arg(i);
    if (!a.is_num() || a.num() < 0) {
      throw std::invalid_argument("property argument " + ToString(a) + " must be a non-negative number");
    }
    return a.num();
  };
  if (term.functor() == "overdose" && term.arity() == 2) {
    p.name = ToString(term);
    p.kind = Overdose{number(0), number(1)};
  } else if (term.functor() == "overdose" && term.arity() == 3 && term.arg(2).is_sym()) {
    p.name = ToString(term);
    p.kind = Overdose{number(0), number(1), term.arg(2).name()};
  } else if (term.functor() == "response" && term.arity() == 3) {
    if (!term.arg(0).is_ground() || !term.arg(1).is_ground()) {
      throw std::invalid_argument("response events must be ground");
    }
    p.name = ToString(term);
    p.kind = ResponseTime{term.arg(0), term.arg(1), number(2)};
  } else {
    throw std::invalid_argument("unknown property " + ToString(term) +
                                "; expected overdose(M, W), response(E1, E2, D) or goal(...)");
  }
  return p;
}

namespace {

// v(t) = slope * t + offset on (lo, hi], or at the single point 0.
struct Piece {
  Rational lo, hi;
  bool point = false;
  Rational slope, offset;
};

std::vector<Piece> Pieces(const ClosedTimeline& tl, const std::string& fluent) {
  std::vector<Piece> out;
  Piece zero;
  zero.point = true;
  zero.offset = ValueAt(tl, fluent, Rational(0)).value;
  out.push_back(zero);
  std::vector<Rational> b = tl.Boundaries();
  if (b.back() < tl.horizon) b.push_back(tl.horizon);
  for (size_t i = 0; i + 1 < b.size(); ++i) {
    Piece p;
    p.lo = b[i];
    p.hi = b[i + 1];
    Rational mid = Midpoint(p.lo, p.hi);
    Rational vh = ValueAt(tl, fluent, p.hi).value;
    Rational vm = ValueAt(tl, fluent, mid).value;
    p.slope = (vh - vm) / (p.hi - mid);
    p.offset = vh - p.slope * p.hi;
    out.push_back(p);
  }
  return out;
}

void Within(clpq::ConstraintStore& s, const Piece& p, int v) {
  LinExpr x = LinExpr::Var(v);
  if (p.point) {
    s.Add(LinConstraint::Make(x, Op::kEq, LinExpr(Rational(0))));
    return;
  }
  s.Add(LinConstraint::Make(LinExpr(p.lo), Op::kLt, x));
  s.Add(LinConstraint::Make(x, Op::kLe, LinExpr(p.hi)));
}

// Smallest attained value of v, or an interior point when the infimum is open.
std::optional<Rational> Earliest(const clpq::ConstraintStore& s, int v) {
  clpq::Bounds b = clpq::BoundsOf(s, v);
  if (b.eq) return b.eq;
  if (b.lo && !b.lo_strict) return b.lo;
  if (b.lo && b.hi) return Midpoint(*b.lo, *b.hi);
  return std::nullopt;
}

void CheckOverdose(const ClosedTimeline& tl, const Overdose& od, Report& rep) {
  if (!tl.model->IsFunctional(od.fluent)) throw NoValueError(od.fluent + " is not a functional fluent");
  std::vector<Piece> pieces = Pieces(tl, od.fluent);
  const int t1 = 0, t2 = 1, z = 2;
  struct Best {
    Rational sup;
    bool attained;
    clpq::ConstraintStore store;
  };
  std::optional<Best> best;
  for (size_t i = 0; i < pieces.size(); ++i) {
    for (size_t j = i; j < pieces.size(); ++j) {
      clpq::ConstraintStore s;
      Within(s, pieces[i], t1);
      Within(s, pieces[j], t2);
      LinExpr a = LinExpr::Var(t1), b = LinExpr::Var(t2);
      LinExpr delivered = b * pieces[j].slope + LinExpr(pieces[j].offset) - a * pieces[i].slope -
                          LinExpr(pieces[i].offset);
      if (!s.Add(LinConstraint::Make(a, Op::kLt, b)) ||
          !s.Add(LinConstraint::Make(b - a, Op::kLe, LinExpr(od.window))) ||
          !s.Add(LinConstraint::Make(LinExpr::Var(z), Op::kEq, delivered)) ||
          !s.Add(LinConstraint::Make(LinExpr::Var(z), Op::kGt, LinExpr(od.max_volume)))) {
        continue;
      }
      clpq::Bounds zb = clpq::BoundsOf(s, z);
      if (!zb.hi) throw EngineError("unbounded delivered volume");
      bool attained = !zb.hi_strict;
      // Largest excess first; among equal ones the earlier window pair.
      if (!best || *zb.hi > best->sup || (*zb.hi == best->sup && attained && !best->attained)) {
        best = Best{*zb.hi, attained, s};
      }
    }
  }
  if (!best) {
    rep.verdict = Verdict::kPass;
    return;
  }
  clpq::ConstraintStore s = best->store;
  Rational target = best->attained ? best->sup : Midpoint(od.max_volume, best->sup);
  s.Add(LinConstraint::Make(LinExpr::Var(z), best->attained ? Op::kEq : Op::kGe, LinExpr(target)));
  auto w1 = Earliest(s, t1);
  if (w1) s.Add(LinConstraint::Make(LinExpr::Var(t1), Op::kEq, LinExpr(*w1)));
  auto w2 = w1 ? Earliest(s, t2) : std::nullopt;
  if (!w2) throw EngineError("no witness point for an overdose window");
  ValueResult v1 = ValueAt(tl, od.fluent, *w1);
  ValueResult v2 = ValueAt(tl, od.fluent, *w2);
  rep.verdict = Verdict::kViolation;
  rep.witness = {{"T1", *w1}, {"T2", *w2}, {"V1", v1.value}, {"V2", v2.value}, {"delivered", v2.value - v1.value}};
  rep.proofs = {v1.proof, v2.proof};
  if (!(v2.value - v1.value > od.max_volume && *w1 < *w2 && *w2 - *w1 <= od.window)) {
    rep.notes.push_back("witness does not re-verify against value queries");
  }
}

void CheckResponse(const ClosedTimeline& tl, const ResponseTime& rt, Report& rep) {
  rep.verdict = Verdict::kPass;
  for (const auto& e : tl.events) {
    if (e.event != rt.trigger) continue;
    Rational t = e.time.constant();
    Rational deadline = t + rt.deadline;
    bool answered = std::any_of(tl.events.begin(), tl.events.end(), [&](const TimedEvent& r) {
      return r.event == rt.response && r.time.constant() >= t && r.time.constant() <= deadline;
    });
    if (answered) continue;
    if (deadline > tl.horizon) {
      rep.notes.push_back(ToString(rt.trigger) + " at " + ToString(t) + ": deadline " + ToString(deadline) +
                          " lies beyond the horizon; not decidable on this narrative");
      continue;
    }
    rep.verdict = Verdict::kViolation;
    rep.witness = {{"trigger", t}, {"deadline", deadline}};
    if (e.proof) rep.proofs.push_back(e.proof);
    return;
  }
}

void CheckRaw(const ClosedTimeline& tl, const RawGoal& g, Report& rep) {
  std::vector<std::string> names;
  std::vector<Literal> lits = ParseGoal(g.text, &names);
  auto answers = SolveWithCache(tl, lits, names, tl.options.cache, &rep.stats).first;
  if (answers.empty()) {
    rep.verdict = Verdict::kPass;
    return;
  }
  const Answer& a = answers.front();
  rep.verdict = Verdict::kViolation;
  for (const auto& [n, t] : a.bindings) {
    if (t.is_num()) rep.witness.emplace_back(n, t.num());
  }
  for (const auto& r : a.ResidualText()) rep.notes.push_back("residual " + r);
  rep.proofs = a.proofs;
}

}  // namespace

Report CheckProperty(const ClosedTimeline& tl, const PropertySpec& p) {
  auto t0 = std::chrono::steady_clock::now();
  Report rep;
  rep.name = p.name;
  rep.diagnostics = tl.diagnostics;
  try {
    if (const auto* od = std::get_if<Overdose>(&p.kind)) {
      CheckOverdose(tl, *od, rep);
    } else if (const auto* rt = std::get_if<ResponseTime>(&p.kind)) {
      CheckResponse(tl, *rt, rep);
    } else {
      CheckRaw(tl, std::get<RawGoal>(p.kind), rep);
    }
  } catch (const NoValueError&) {
    throw;
  } catch (const std::exception& e) {
    rep.verdict = Verdict::kError;
    rep.error = e.what();
  }
  rep.seconds = Since(t0);
  return rep;
}

Report CheckProperty(std::shared_ptr<const DomainModel> model, const Narrative& n,
                     const PropertySpec& p, const EngineOptions& options) {
  ClosedTimeline tl = TriggerClosure(std::move(model), n, options);
  return CheckProperty(tl, p);
}

nlohmann::json SummaryReport::ToJson() const {
  nlohmann::json j;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(r.ToJson());
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [v, n] : counts) c[VerdictName(v)] = n;
  j["counts"] = c;
  return j;
}

SummaryReport Sweep(std::shared_ptr<const DomainModel> model, const std::vector<NamedNarrative>& narratives,
                    const PropertySpec& p, const EngineOptions& options, unsigned threads) {
  if (narratives.empty()) throw MissingInput("sweep needs at least one narrative");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  SummaryReport out;
  out.reports.resize(narratives.size());
  auto run = [&](size_t i) {
    Report r;
    try {
      r = CheckProperty(model, narratives[i].narrative, p, options);
    } catch (const std::exception& e) {
      r.verdict = Verdict::kError;
      r.error = e.what();
    }
    r.name = narratives[i].name;
    out.reports[i] = std::move(r);
  };
  // Fixed-size batches keep at most `threads` checks in flight; results land
  // in their input slot.
  for (size_t start = 0; start < narratives.size(); start += threads) {
    std::vector<std::future<void>> batch;
    for (size_t i = start; i < std::min(narratives.size(), start + threads); ++i) {
      batch.push_back(std::async(std::launch::async, run, i));
    }
    for (auto& f : batch) f.get();
  }
  for (const auto& r : out.reports) ++out.counts[r.verdict];
  return out;
}

StagedResult StagedRun(std::shared_ptr<const DomainModel> model, const Narrative& n,
                       const std::vector<std::set<int>>& stages, const EngineOptions& options) {
  StagedResult out;
  Narrative cur = n;
  std::optional<Rational> latest;  // latest materialized triggered event
  out.timeline = MakeTimeline(model, cur, options);
  for (size_t k = 0; k < stages.size(); ++k) {
    ClosedTimeline tl = MakeTimeline(model, cur, options);
    CloseTimeline(tl, &stages[k]);
    std::optional<Rational> stage_latest = latest;
    for (const auto& e : tl.events) {
      if (!e.triggered) continue;
      Rational t = e.time.constant();
      if (latest && t < *latest) {
        out.warnings.push_back({Diagnostic::Severity::kWarning,
                                "StageOrderWarning: stage " + std::to_string(k + 1) + " fires " +
                                    ToString(e.event) + " at " + ToString(t) +
                                    ", before an event materialized by an earlier stage at " + ToString(*latest),
                                {}});
      }
      if (!stage_latest || t > *stage_latest) stage_latest = t;
      cur.occurrences.push_back({e.event, t, {}});
    }
    latest = stage_latest;
    std::stable_sort(cur.occurrences.begin(), cur.occurrences.end(),
                     [](const Occurrence& a, const Occurrence& b) { return a.time < b.time; });
    out.timeline = std::move(tl);
  }
  return out;
}

}  // namespace ecrv
