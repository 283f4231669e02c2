#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "ecrv/validate.hpp"
#include "support.hpp"

using namespace ecrv;
using ecrv::test::Corpus;
using ecrv::test::Gen;
using ecrv::test::N1;
using ecrv::test::N1Timeline;
using ecrv::test::Pca;
using ecrv::test::Q;

namespace {

const std::string kHeader = "happens(patient_bolus_delivery_started, 2).\nhorizon(10).\n";

Report Scenario1(const std::string& expectations) {
  return CheckScenario(Pca(), ParseScenario(kHeader + expectations));
}

Rational Witness(const Report& r, const std::string& name) {
  for (const auto& [k, v] : r.witness) {
    if (k == name) return v;
  }
  FAIL("missing witness " << name);
  return {};
}

bool HasNote(const Report& r, const std::string& text) {
  return std::any_of(r.notes.begin(), r.notes.end(),
                     [&](const std::string& n) { return n.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("the bolus scenario delivers 25 units by 8") {
  Report ok = Scenario1("expect(value(total_drug_delivered, 25), at(8)).\n");
  CHECK(ok.verdict == Verdict::kConsistent);
  REQUIRE(ok.results.size() == 1);
  CHECK(ok.results[0].ok);

  Report bad = Scenario1("expect(value(total_drug_delivered, 24), at(8)).\n");
  CHECK(bad.verdict == Verdict::kInconsistent);
  REQUIRE(bad.results.size() == 1);
  CHECK_FALSE(bad.results[0].ok);
  REQUIRE(bad.results[0].actual);
  CHECK(*bad.results[0].actual == 25);
  CHECK(bad.results[0].explanation.find("actual value 25") != std::string::npos);
}

TEST_CASE("an empty narrative keeps the initial state") {
  Report r = CheckScenario(Pca(), ParseScenario("horizon(10).\n"
                                                "expect(value(total_drug_delivered, 0), at(0)).\n"
                                                "expect(value(total_drug_delivered, 0), at(10)).\n"
                                                "expect(not_holds(patient_bolus_delivery_enabled), at(5)).\n"));
  CHECK(r.verdict == Verdict::kConsistent);

  auto model = std::make_shared<const DomainModel>(ParseDomain("fluent(idle). initiallyP(idle)."));
  Report idle = CheckScenario(model, ParseScenario("horizon(3).\nexpect(holds(idle), at(0)).\n"));
  CHECK(idle.verdict == Verdict::kConsistent);
}

TEST_CASE("corpus scenarios") {
  Scenario sunny = ParseScenario(Corpus("sunny_day.scn"), "sunny_day");
  CHECK(sunny.provenance.find("UC-1") != std::string::npos);
  CHECK(sunny.postconditions.size() == 19);
  Report r = CheckScenario(Pca(), sunny);
  CHECK(r.verdict == Verdict::kConsistent);
  for (const auto& pc : r.results) CHECK_MESSAGE(pc.ok, pc.text);

  Report bad = CheckScenario(Pca(), ParseScenario(Corpus("seeded_bad.scn"), "seeded_bad"));
  CHECK(bad.verdict == Verdict::kInconsistent);
  REQUIRE(bad.results.size() == 3);
  CHECK(bad.results[0].ok);
  CHECK_FALSE(bad.results[1].ok);
  CHECK(bad.results[2].ok);
  CHECK(bad.ToText().find("actual value 25") != std::string::npos);
}

TEST_CASE("overdose windows") {
  Report v = CheckProperty(N1Timeline(), ParseProperty("overdose(9, 2)"));
  REQUIRE(v.verdict == Verdict::kViolation);
  CHECK(Witness(v, "T1") == 2);
  CHECK(Witness(v, "T2") == 4);
  CHECK(Witness(v, "V1") == 0);
  CHECK(Witness(v, "V2") == 10);
  CHECK(Witness(v, "delivered") == 10);
  CHECK(v.notes.empty());
  CHECK(v.proofs.size() == 2);

  CHECK(CheckProperty(N1Timeline(), ParseProperty("overdose(10, 2)")).verdict == Verdict::kPass);
  CHECK(CheckProperty(N1Timeline(), ParseProperty("overdose(25, 10)")).verdict == Verdict::kPass);
  CHECK(CheckProperty(N1Timeline(), ParseProperty("overdose(49/2, 10)")).verdict == Verdict::kViolation);
}

TEST_CASE("response deadlines") {
  CHECK(CheckProperty(N1Timeline(), ParseProperty("response(patient_bolus_delivery_started, patient_bolus_completed, 5)"))
            .verdict == Verdict::kPass);
  Report late =
      CheckProperty(N1Timeline(), ParseProperty("response(patient_bolus_delivery_started, patient_bolus_completed, 4)"));
  CHECK(late.verdict == Verdict::kViolation);
  CHECK(Witness(late, "trigger") == 2);
  CHECK(Witness(late, "deadline") == 6);

  Narrative n = ParseNarrative("happens(patient_bolus_delivery_started, 8). horizon(10).");
  Report open = CheckProperty(Pca(), n, ParseProperty("response(patient_bolus_delivery_started, patient_bolus_completed, 5)"));
  CHECK(open.verdict == Verdict::kPass);
  CHECK(HasNote(open, "beyond the horizon"));

  CHECK_THROWS_AS(ParseProperty("response(X, patient_bolus_completed, 5)"), std::invalid_argument);
  CHECK_THROWS_AS(ParseProperty("liveness(a)"), std::invalid_argument);
}

TEST_CASE("raw goal properties") {
  CHECK(CheckProperty(N1Timeline(), ParseProperty("goal(holdsAt(total_drug_delivered(V), 10), V #> 25)")).verdict ==
        Verdict::kPass);
  CHECK(CheckProperty(N1Timeline(), ParseProperty("goal(holdsAt(patient_bolus_delivery_enabled, T), T #> 7)")).verdict ==
        Verdict::kPass);
  CHECK(CheckProperty(N1Timeline(), ParseProperty("goal(holdsAt(patient_bolus_delivery_enabled, T), T #> 6)"))
            .verdict == Verdict::kViolation);
}

TEST_CASE("sweeps") {
  std::vector<NamedNarrative> ns;
  for (const char* f : {"sunny_1.nrt", "sunny_2.nrt", "sunny_3.nrt"}) ns.push_back({f, ParseNarrative(Corpus(f))});
  SummaryReport s = Sweep(Pca(), ns, ParseProperty("overdose(9, 2)"));
  REQUIRE(s.reports.size() == 3);
  CHECK(s.counts[Verdict::kViolation] == 3);
  CHECK(s.reports[1].name == "sunny_2.nrt");
  CHECK(Sweep(Pca(), ns, ParseProperty("overdose(10, 2)")).counts[Verdict::kPass] == 3);
  CHECK_THROWS_AS(Sweep(Pca(), {}, ParseProperty("overdose(9, 2)")), MissingInput);
}

TEST_CASE("a Zeno narrative stays in its own report") {
  auto model = std::make_shared<const DomainModel>(ParseDomain(
      "fluent(armed). fluent(on). fluent(off).\n"
      "event(arm). event(switch_on). event(switch_off).\n"
      "initiates(arm, armed, T).\n"
      "initiates(switch_on, on, T). terminates(switch_on, off, T).\n"
      "initiates(switch_off, off, T). terminates(switch_off, on, T).\n"
      "initiallyP(off).\n"
      "happens(switch_on, T) :- holdsAt(armed, T), holdsAt(off, T).\n"
      "happens(switch_off, T) :- holdsAt(armed, T), holdsAt(on, T).\n"));
  std::vector<NamedNarrative> ns{
      {"quiet", ParseNarrative("horizon(5).")},
      {"armed", ParseNarrative("happens(arm, 1). horizon(5).")},
      {"late", ParseNarrative("happens(arm, 5). horizon(5).")},
  };
  EngineOptions o;
  o.zeno_bound = 50;
  SummaryReport s = Sweep(model, ns, ParseProperty("goal(holdsAt(on, T))"), o, 2);
  REQUIRE(s.reports.size() == 3);
  CHECK(s.reports[0].verdict == Verdict::kPass);
  CHECK(s.reports[1].verdict == Verdict::kError);
  CHECK_FALSE(s.reports[1].error.empty());
  CHECK(s.reports[2].verdict == Verdict::kPass);
  CHECK(s.counts[Verdict::kError] == 1);
}

namespace {

std::vector<std::string> Events(const ClosedTimeline& tl) {
  std::vector<std::string> out;
  for (const auto& e : tl.events) out.push_back(ToString(e.event) + "@" + ToString(e.time.constant()));
  std::sort(out.begin(), out.end());
  return out;
}

std::set<int> TriggerIds(const DomainModel& m, const std::string& event) {
  std::set<int> out;
  for (const Clause* c : m.OfKind(Clause::Kind::kTrigger)) {
    if (c->head.arg(0).functor() == event) out.insert(c->id);
  }
  return out;
}

}  // namespace

TEST_CASE("staged closure") {
  const DomainModel& m = *Pca();
  std::set<int> completed = TriggerIds(m, "patient_bolus_completed");
  std::set<int> stopped = TriggerIds(m, "patient_bolus_delivery_stopped");
  REQUIRE(completed.size() == 1);
  REQUIRE(stopped.size() == 1);
  std::set<int> all = completed;
  all.insert(stopped.begin(), stopped.end());

  ClosedTimeline direct = N1Timeline();
  StagedResult two = StagedRun(Pca(), N1(), {completed, stopped});
  CHECK(Events(two.timeline) == Events(direct));
  CHECK(two.warnings.empty());
  CHECK(ValueAt(two.timeline, "total_drug_delivered", Q(9)).value == 25);

  StagedResult one = StagedRun(Pca(), N1(), {all});
  CHECK(Events(one.timeline) == Events(direct));

  auto model = std::make_shared<const DomainModel>(ParseDomain(
      "event(early). event(late).\n"
      "happens(late, T) :- T #= 5.\n"
      "happens(early, T) :- T #= 1.\n"));
  StagedResult adversarial =
      StagedRun(model, ParseNarrative("horizon(10)."), {TriggerIds(*model, "late"), TriggerIds(*model, "early")});
  REQUIRE(adversarial.warnings.size() == 1);
  CHECK(adversarial.warnings[0].message.rfind("StageOrderWarning: stage 2", 0) == 0);
  CHECK(adversarial.warnings[0].severity == Diagnostic::Severity::kWarning);
}

TEST_CASE("property: scenario verdicts ignore postcondition order") {
  Gen g(41);
  std::string sunny = Corpus("sunny_day.scn");
  std::string bad = Corpus("seeded_bad.scn");
  for (int i = 0; i < 12; ++i) {
    Scenario s = ParseScenario(g.Coin() ? sunny : bad);
    Verdict before = CheckScenario(Pca(), s).verdict;
    std::shuffle(s.postconditions.begin(), s.postconditions.end(), std::mt19937(g.Int(0, 1 << 20)));
    Report after = CheckScenario(Pca(), s);
    CHECK(after.verdict == before);
    for (const auto& r : after.results) {
      auto it = std::find_if(s.postconditions.begin(), s.postconditions.end(),
                             [&](const Postcondition& p) { return p.text == r.text; });
      CHECK(it != s.postconditions.end());
    }
  }
}

namespace {

// On/off delivery at a constant rate with a snapshot while off.
struct Pump {
  Rational rate;
  std::vector<Rational> switches;  // start, stop, start, ...
  Rational horizon;

  std::string Model() const {
    return "fluent(on). fluent(total(X)). event(start). event(stop).\n"
           "initiates(start, on, T). terminates(stop, on, T).\n"
           "trajectory(on, T1, total(X), T2) :- rate(R), holdsAt(total(S), T1), X #= S + (T2 - T1) * R.\n"
           "initiallyP(total(0)).\nrate(" +
           ToString(rate) + ").\n";
  }
  Narrative Events() const {
    Narrative n;
    for (size_t i = 0; i < switches.size(); ++i) {
      n.occurrences.push_back({Term::Sym(i % 2 ? "stop" : "start"), switches[i], {}});
    }
    n.horizon = horizon;
    return n;
  }
  // Delivered volume at t, integrated directly.
  Rational At(const Rational& t) const {
    Rational v = 0;
    for (size_t i = 0; i < switches.size(); i += 2) {
      Rational lo = switches[i];
      Rational hi = i + 1 < switches.size() ? switches[i + 1] : horizon;
      if (t <= lo) break;
      v += (std::min<Rational>(t, hi) - lo) * rate;
    }
    return v;
  }
  // Largest v(T2) - v(T1) over 0 <= T1 < T2 <= min(T1 + W, H). v does not
  // decrease, so T2 = min(T1 + W, H), and the window difference is linear
  // between points where T1 or T1 + W meets a switch or an end.
  Rational MaxWindow(const Rational& w) const {
    std::vector<Rational> cands{Rational(0), std::max<Rational>(Rational(0), horizon - w)};
    for (const Rational& s : switches) {
      cands.push_back(s);
      cands.push_back(s - w);
    }
    Rational best = 0;
    for (const Rational& t1 : cands) {
      if (t1 < 0 || t1 >= horizon) continue;
      Rational t2 = std::min<Rational>(t1 + w, horizon);
      best = std::max<Rational>(best, At(t2) - At(t1));
    }
    return best;
  }
};

Pump RandomPump(Gen& g) {
  Pump p;
  p.rate = g.Frac(0, 6, 4);
  Rational t = 0;
  int k = g.Int(1, 4);
  for (int i = 0; i < k; ++i) {
    t += g.Frac(1, 3, 3);
    if (t <= 0) t = Q(1, 2);
    p.switches.push_back(t);
  }
  p.horizon = t + g.Frac(1, 4, 2);
  return p;
}

}  // namespace

TEST_CASE("property: overdose verdicts match a breakpoint search") {
  Gen g(42);
  int violations = 0, passes = 0;
  for (int i = 0; i < 100; ++i) {
    Pump p = RandomPump(g);
    auto model = std::make_shared<const DomainModel>(ParseDomain(p.Model()));
    ClosedTimeline tl = TriggerClosure(model, p.Events());
    Rational w = g.Frac(1, 4, 3);
    Rational max = p.MaxWindow(w);
    // Just below, exactly at and above the largest window volume.
    Rational m = max - g.Frac(0, 2, 5);
    if (m < 0) m = 0;
    if (g.Coin(30)) m = max;
    CAPTURE(p.Model());
    CAPTURE(Serialize(p.Events()));
    CAPTURE(ToString(w));
    CAPTURE(ToString(m));
    CAPTURE(ToString(max));
    for (const Rational& t : {Rational(0), p.horizon, Midpoint(Rational(0), p.horizon)}) {
      REQUIRE(ValueAt(tl, "total", t).value == p.At(t));
    }
    PropertySpec spec;
    spec.name = "overdose";
    spec.kind = Overdose{m, w, "total"};
    Report r = CheckProperty(tl, spec);
    if (max > m) {
      ++violations;
      REQUIRE(r.verdict == Verdict::kViolation);
      CHECK(Witness(r, "delivered") == max);
      Rational t1 = Witness(r, "T1"), t2 = Witness(r, "T2");
      CHECK(t1 >= 0);
      CHECK(t1 < t2);
      CHECK(t2 <= p.horizon);
      CHECK(t2 - t1 <= w);
      CHECK(p.At(t2) - p.At(t1) == Witness(r, "delivered"));
      CHECK(r.notes.empty());
    } else {
      ++passes;
      CHECK(r.verdict == Verdict::kPass);
    }
  }
  CHECK(violations > 20);
  CHECK(passes > 10);
}

TEST_CASE("property: overdose witnesses re-verify as queries and scenarios") {
  Gen g(43);
  for (int i = 0; i < 30; ++i) {
    Pump p = RandomPump(g);
    if (p.rate == 0) p.rate = 1;
    auto model = std::make_shared<const DomainModel>(ParseDomain(p.Model()));
    ClosedTimeline tl = TriggerClosure(model, p.Events());
    Rational w = g.Frac(1, 3, 2);
    PropertySpec spec{"overdose", Overdose{Rational(0), w, "total"}};
    Report r = CheckProperty(tl, spec);
    if (r.verdict != Verdict::kViolation) continue;
    Rational t1 = Witness(r, "T1"), t2 = Witness(r, "T2");
    Rational v1 = Witness(r, "V1"), v2 = Witness(r, "V2");
    std::string goal = "holdsAt(total(" + ToString(v1) + "), " + ToString(t1) + "), holdsAt(total(" + ToString(v2) +
                       "), " + ToString(t2) + ")";
    CAPTURE(goal);
    CHECK_FALSE(Query(tl, goal).empty());

    Scenario s;
    s.narrative = p.Events();
    s.postconditions = ParseScenario("horizon(" + ToString(p.horizon) + ").\n" + "expect(value(total, " + ToString(v1) +
                                     "), at(" + ToString(t1) + ")).\n" + "expect(value(total, " + ToString(v2) +
                                     "), at(" + ToString(t2) + ")).\n")
                           .postconditions;
    CHECK(CheckScenario(model, s).verdict == Verdict::kConsistent);
  }
}

TEST_CASE("property: sweep counts equal the individual verdicts") {
  Gen g(44);
  for (int round = 0; round < 5; ++round) {
    std::vector<NamedNarrative> ns;
    int k = g.Int(1, 6);
    for (int i = 0; i < k; ++i) {
      Narrative n;
      n.horizon = Q(g.Int(6, 14));
      int starts = g.Int(0, 2);
      Rational t = 0;
      for (int j = 0; j < starts; ++j) {
        t += g.Frac(1, 6, 2);
        if (t >= n.horizon) break;
        n.occurrences.push_back({Term::Sym("patient_bolus_delivery_started"), t, {}});
      }
      ns.push_back({"n" + std::to_string(i), n});
    }
    PropertySpec p = ParseProperty("overdose(" + std::to_string(g.Int(5, 30)) + ", " + std::to_string(g.Int(1, 6)) + ")");
    SummaryReport s = Sweep(Pca(), ns, p, {}, static_cast<unsigned>(g.Int(1, 4)));
    std::map<Verdict, size_t> expected;
    for (size_t i = 0; i < ns.size(); ++i) {
      Report r;
      try {
        r = CheckProperty(Pca(), ns[i].narrative, p);
      } catch (const std::exception&) {
        r.verdict = Verdict::kError;
      }
      ++expected[r.verdict];
      CHECK(s.reports[i].verdict == r.verdict);
      CHECK(s.reports[i].name == ns[i].name);
    }
    CHECK(s.counts == expected);
  }
}
