#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ecrv/oracle.hpp"
#include "support.hpp"

using namespace ecrv;
using ecrv::test::Corpus;
using ecrv::test::Gen;
using ecrv::test::N1;
using ecrv::test::Pca;
using ecrv::test::Q;

namespace {

const SamplePoint& At(const SampledTrace& tr, const Rational& t) {
  for (const SamplePoint& p : tr.points) {
    if (p.time == t) return p;
  }
  FAIL("no sample at " << ToString(t));
  return tr.points.front();
}

std::vector<Rational> Values(const SampledTrace& tr, const Rational& t, const std::string& f) {
  auto it = At(tr, t).values.find(f);
  return it == At(tr, t).values.end() ? std::vector<Rational>{} : it->second;
}

std::string Describe(const std::vector<Discrepancy>& ds) {
  std::string s;
  for (const Discrepancy& d : ds) {
    s += ToString(d.time) + " " + d.fluent + " engine=" + d.engine + " oracle=" + d.oracle + "\n";
  }
  return s;
}

std::vector<Discrepancy> Check(std::shared_ptr<const DomainModel> m, const Narrative& n, const Rational& dt,
                               bool mutant = false) {
  EngineOptions o;
  o.mutant_closed_clipping = mutant;
  return CrossCheck(TriggerClosure(m, n, o), Simulate(*m, n, dt));
}

const int kBound = 40;

// True when both sides run away; a one-sided ZenoError fails the check.
bool BothZeno(std::shared_ptr<const DomainModel> m, const Narrative& n, const Rational& dt) {
  EngineOptions o;
  o.zeno_bound = kBound;
  bool engine = false, oracle = false;
  try {
    TriggerClosure(m, n, o);
  } catch (const ZenoError&) {
    engine = true;
  }
  try {
    Simulate(*m, n, dt, kBound);
  } catch (const ZenoError&) {
    oracle = true;
  }
  CHECK(engine == oracle);
  return engine || oracle;
}

}  // namespace

TEST_CASE("simulating the bolus narrative") {
  SampledTrace tr = Simulate(*Pca(), N1(), Q(1, 4));
  CHECK(tr.points.size() == 41);
  CHECK(Values(tr, Q(4), "total_drug_delivered") == std::vector<Rational>{Q(10)});
  CHECK(Values(tr, Q(9, 4), "total_drug_delivered") == std::vector<Rational>{Q(5, 4)});
  CHECK(Values(tr, Q(8), "total_drug_delivered") == std::vector<Rational>{Q(25)});
  CHECK(Values(tr, Q(10), "total_drug_delivered") == std::vector<Rational>{Q(25)});
  CHECK(Values(tr, Q(0), "vtbi") == std::vector<Rational>{Q(20)});
  CHECK(At(tr, Q(7)).holding.count("patient_bolus_delivery_enabled") == 1);
  CHECK(At(tr, Q(29, 4)).holding.count("patient_bolus_delivery_enabled") == 0);

  std::vector<std::string> events;
  for (const SampledEvent& e : tr.events) {
    events.push_back(ToString(e.event) + "@" + ToString(e.time) + (e.triggered ? "*" : ""));
  }
  CHECK(events == std::vector<std::string>{"patient_bolus_delivery_started@2", "patient_bolus_completed@7*",
                                           "patient_bolus_delivery_stopped@7*"});

  // A crossing between grid points is still found exactly.
  SampledTrace coarse = Simulate(*Pca(), ParseNarrative("happens(patient_bolus_delivery_started, 1/3). horizon(9)."), Q(2));
  REQUIRE(coarse.events.size() == 3);
  CHECK(coarse.events[1].time == Q(16, 3));
  CHECK(Values(coarse, Q(16, 3), "total_drug_delivered") == std::vector<Rational>{Q(25)});
}

TEST_CASE("degenerate inputs") {
  auto empty = std::make_shared<const DomainModel>(ParseDomain("fluent(a). fluent(b(X)). event(e)."));
  Narrative n;
  n.horizon = 3;
  SampledTrace tr = Simulate(*empty, n, Q(1));
  CHECK(tr.points.size() == 4);
  for (const SamplePoint& p : tr.points) {
    CHECK(p.holding.empty());
    for (const auto& [f, vs] : p.values) CHECK(vs.empty());
  }
  CHECK(tr.events.empty());
  CHECK(CrossCheck(TriggerClosure(empty, n), tr).empty());

  CHECK_THROWS_AS(Simulate(*Pca(), N1(), Q(0)), std::invalid_argument);
  CHECK_THROWS_AS(Simulate(*Pca(), N1(), Q(-1)), std::invalid_argument);
  auto toggle = std::make_shared<const DomainModel>(ParseDomain(Corpus("toggle.ec")));
  CHECK_THROWS_AS(Simulate(*toggle, ParseNarrative(Corpus("toggle.nrt")), Q(1), 50), ZenoError);
}

TEST_CASE("the corpus agrees with the engine at every step size") {
  for (const char* f : {"n1.nrt", "sunny_1.nrt", "sunny_2.nrt", "sunny_3.nrt"}) {
    for (Rational dt : {Q(1), Q(1, 2), Q(1, 4), Q(1, 3)}) {
      CAPTURE(f);
      CAPTURE(ToString(dt));
      auto ds = Check(Pca(), ParseNarrative(Corpus(f)), dt);
      CHECK_MESSAGE(ds.empty(), Describe(ds));
    }
  }
}

TEST_CASE("closed clipping is caught at event instants") {
  auto ds = Check(Pca(), N1(), Q(1, 4), true);
  REQUIRE_FALSE(ds.empty());
  bool at_event = false;
  for (const Discrepancy& d : ds) at_event = at_event || d.time == 2 || d.time == 7;
  CHECK(at_event);
}

TEST_CASE("csv output") {
  SampledTrace tr = Simulate(*Pca(), N1(), Q(1));
  std::string csv = tr.ToCsv();
  CHECK(csv.rfind("time,fluent,value\n", 0) == 0);
  CHECK(csv.find("\n4,total_drug_delivered,10\n") != std::string::npos);
  CHECK(csv.find("\n5,\"patient_bolus_delivery_enabled\",true\n") != std::string::npos);
  CHECK(csv.find("\n0,patient_bolus_drug_delivered,none\n") != std::string::npos);
}

namespace {

// A reservoir that drains while `open`, closing itself at a random level,
// plus boolean fluents with conditional effects.
struct World {
  Rational rate, cap;
  int flags = 0;
  std::string model;
  Narrative narrative;
};

World MakeWorld(Gen& g) {
  World w;
  w.rate = g.Frac(1, 4, 3);
  w.cap = g.Frac(1, 12, 2);
  w.flags = g.Int(1, 3);
  std::string& m = w.model;
  m = "fluent(open). fluent(level(X)). event(valve_open). event(valve_shut). event(full).\n"
      "initiates(valve_open, open, T). terminates(valve_shut, open, T).\n"
      "trajectory(open, T1, level(X), T2) :- holdsAt(level(S), T1), X #= S + (T2 - T1) * " +
      ToString(w.rate) + ".\n"
      "initiallyP(level(0)).\n"
      "happens(full, T) :- holdsAt(open, T), holdsAt(level(X), T), X #= " +
      ToString(w.cap) + ".\n"
      "happens(valve_shut, T) :- happens(full, T).\n";
  for (int f = 0; f < w.flags; ++f) {
    std::string n = "f" + std::to_string(f);
    m += "fluent(" + n + "). event(e" + std::to_string(f) + ").\n";
    m += std::string(g.Coin() ? "initiates" : "terminates") + "(e" + std::to_string(f) + ", " + n + ", T)";
    if (g.Coin()) m += " :- holdsAt(" + std::string(g.Coin() ? "open" : "f0") + ", T)";
    m += ".\n";
    if (g.Coin(40)) m += "initiates(full, " + n + ", T).\n";
    if (g.Coin(40)) m += "initiallyP(" + n + ").\n";
  }
  w.narrative.horizon = Q(g.Int(6, 14));
  int k = g.Int(1, 5);
  for (int i = 0; i < k; ++i) {
    Rational t = g.Frac(1, 5, 3) * (w.narrative.horizon / 5);
    std::string e = g.Pick(std::vector<std::string>{"valve_open", "valve_shut", "e0", "e" + std::to_string(w.flags - 1)});
    w.narrative.occurrences.push_back({Term::Sym(e), t, {}});
  }
  std::stable_sort(w.narrative.occurrences.begin(), w.narrative.occurrences.end(),
                   [](const Occurrence& a, const Occurrence& b) { return a.time < b.time; });
  return w;
}

}  // namespace

TEST_CASE("property: halving the step keeps every shared sample") {
  Gen g(51);
  int runaway = 0;
  for (int i = 0; i < 30; ++i) {
    World w = MakeWorld(g);
    auto m = std::make_shared<const DomainModel>(ParseDomain(w.model));
    Rational dt = g.Frac(1, 2, 2);
    if (BothZeno(m, w.narrative, dt)) {
      ++runaway;
      continue;
    }
    SampledTrace coarse = Simulate(*m, w.narrative, dt);
    SampledTrace fine = Simulate(*m, w.narrative, dt / 2);
    CAPTURE(w.model);
    CAPTURE(Serialize(w.narrative));
    REQUIRE(coarse.events.size() == fine.events.size());
    for (size_t k = 0; k < coarse.events.size(); ++k) {
      CHECK(coarse.events[k].time == fine.events[k].time);
      CHECK(ToString(coarse.events[k].event) == ToString(fine.events[k].event));
    }
    size_t shared = 0;
    for (const SamplePoint& p : coarse.points) {
      const SamplePoint& q = At(fine, p.time);
      CHECK(p.holding == q.holding);
      CHECK(p.values == q.values);
      ++shared;
    }
    CHECK(shared == coarse.points.size());
    CHECK(fine.points.size() > coarse.points.size());
  }
  CHECK(runaway < 10);
}

TEST_CASE("property: random narratives agree with the engine") {
  Gen g(52);
  int with_triggers = 0, runaway = 0;
  for (int i = 0; i < 60; ++i) {
    World w = MakeWorld(g);
    auto m = std::make_shared<const DomainModel>(ParseDomain(w.model));
    CAPTURE(w.model);
    CAPTURE(Serialize(w.narrative));
    Rational dt = g.Pick(std::vector<Rational>{Q(1), Q(1, 2), Q(1, 3), Q(1, 4)});
    CAPTURE(ToString(dt));
    if (BothZeno(m, w.narrative, dt)) {
      ++runaway;
      continue;
    }
    auto ds = Check(m, w.narrative, dt);
    CHECK_MESSAGE(ds.empty(), Describe(ds));
    ClosedTimeline tl = TriggerClosure(m, w.narrative);
    with_triggers += std::any_of(tl.events.begin(), tl.events.end(), [](const TimedEvent& e) { return e.triggered; });
  }
  // Bolus narratives with random requests.
  for (int i = 0; i < 20; ++i) {
    Narrative n;
    n.horizon = Q(g.Int(8, 20));
    Rational t = 0;
    for (int k = g.Int(1, 3); k > 0; --k) {
      t += g.Frac(1, 8, 3);
      if (t < n.horizon) n.occurrences.push_back({Term::Sym("patient_bolus_delivery_started"), t, {}});
    }
    CAPTURE(Serialize(n));
    auto ds = Check(Pca(), n, Q(1, 2));
    CHECK_MESSAGE(ds.empty(), Describe(ds));
  }
  CHECK(with_triggers > 10);
  CHECK(runaway < 15);
  MESSAGE("runaway models: " << runaway);
}
