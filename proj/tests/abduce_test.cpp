#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ecrv/abduce.hpp"
#include "support.hpp"

using namespace ecrv;
using ecrv::test::Gen;
using ecrv::test::N1Timeline;
using ecrv::test::Pca;
using ecrv::test::Q;
using clpq::LinConstraint;
using clpq::LinExpr;
using Op = clpq::LinConstraint::Op;

namespace {

const char* kStarted = "patient_bolus_delivery_started";

Narrative Empty(long horizon = 10) {
  Narrative n;
  n.horizon = horizon;
  return n;
}

AbducibleSpec Start(Rational lo, Rational hi, int max = 1, std::string name = "Ts") {
  AbducibleSpec s;
  s.event = Term::Sym(kStarted);
  s.lo = lo;
  s.hi = hi;
  s.max_count = max;
  s.name = std::move(name);
  return s;
}

std::vector<AbducedSolution> Abduce(const std::string& goal, const std::vector<AbducibleSpec>& specs,
                                    const Narrative& n = Empty()) {
  std::vector<std::string> names;
  auto lits = ParseGoal(goal, &names);
  return AbduceEvents(Pca(), n, lits, names, specs);
}

// Regions are compared by mutual entailment.
bool SameRegion(const clpq::Conjunction& a, const clpq::Conjunction& b) {
  clpq::ConstraintStore sa, sb;
  sa.AddAll(a);
  sb.AddAll(b);
  return sa.EntailsAll(b) && sb.EntailsAll(a);
}

LinExpr V(int id) { return LinExpr::Var(id); }
LinExpr K(long n) { return LinExpr(Q(n)); }

// A point of the hypothesis region, with the other hypotheses fixed first.
std::map<int, Rational> Sample(Gen& g, const AbducedSolution& s) {
  clpq::ConstraintStore st;
  st.AddAll(s.region);
  std::map<int, Rational> point;
  for (const Hypothesis& h : s.hypotheses) {
    clpq::Bounds b = clpq::BoundsOf(st, h.var);
    Rational v;
    if (b.eq) {
      v = *b.eq;
    } else {
      REQUIRE(b.lo);
      REQUIRE(b.hi);
      // Interior point; an attained bound now and then.
      int k = g.Int(0, 10);
      if (k == 0 && !b.lo_strict) {
        v = *b.lo;
      } else if (k == 10 && !b.hi_strict) {
        v = *b.hi;
      } else {
        v = *b.lo + (*b.hi - *b.lo) * Q(g.Int(1, 15), 16);
      }
    }
    st.Add(LinConstraint::Make(V(h.var), Op::kEq, LinExpr(v)));
    point[h.var] = v;
  }
  return point;
}

bool ProvesAt(const AbducedSolution& s, const std::map<int, Rational>& point, const std::string& goal,
              const Narrative& base) {
  Narrative n = base;
  for (const Hypothesis& h : s.hypotheses) n.occurrences.push_back({h.event, point.at(h.var), {}});
  std::stable_sort(n.occurrences.begin(), n.occurrences.end(),
                   [](const Occurrence& a, const Occurrence& b) { return a.time < b.time; });
  ClosedTimeline tl = TriggerClosure(Pca(), n);
  return !Query(tl, goal).empty();
}

}  // namespace

TEST_CASE("abducing the bolus start that completes by 9") {
  auto sols = Abduce("happens(patient_bolus_completed, T), T #=< 9", {Start(Q(0), Q(10))});
  REQUIRE(sols.size() == 1);
  const AbducedSolution& s = sols[0];
  REQUIRE(s.hypotheses.size() == 1);
  CHECK(s.hypotheses[0].name == "Ts");
  CHECK(SameRegion(s.region, {LinConstraint::Make(K(0), Op::kLe, V(0)), LinConstraint::Make(V(0), Op::kLe, K(4))}));
  CHECK(s.RegionText() == std::vector<std::string>{"0 #=< Ts", "Ts #=< 4"});
  // Completion at Ts + 5.
  REQUIRE(s.answer.bindings.size() == 1);
  CHECK(ToString(s.answer.bindings[0].second) == "Ts + 5");
  CHECK(ReplayAnswer(s.timeline, s.answer).ok);
}

TEST_CASE("an already provable goal needs no hypotheses") {
  Narrative n = ParseNarrative("happens(patient_bolus_delivery_started, 2). horizon(10).");
  auto sols = Abduce("happens(patient_bolus_completed, T)", {Start(Q(0), Q(10))}, n);
  REQUIRE_FALSE(sols.empty());
  CHECK(sols.front().hypotheses.empty());
  CHECK(sols.size() == 1);
}

TEST_CASE("unsatisfiable goals exhaust the search") {
  CHECK_THROWS_AS(Abduce("holdsAt(total_drug_delivered(99), 0)", {Start(Q(0), Q(10), 2)}), SearchExhausted);
}

TEST_CASE("abducible windows are validated") {
  CHECK_THROWS_AS(Abduce("happens(patient_bolus_completed, T)", {Start(Q(0), Q(11))}), std::invalid_argument);
  CHECK_THROWS_AS(Abduce("happens(patient_bolus_completed, T)", {Start(Q(3), Q(2))}), std::invalid_argument);
  AbducibleSpec open = Start(Q(0), Q(5));
  open.event = ParseTerm("start(X)");
  CHECK_THROWS_AS(Abduce("happens(patient_bolus_completed, T)", {open}), std::invalid_argument);
}

TEST_CASE("overdose parameter regions") {
  ClosedTimeline tl = N1Timeline();
  const std::string window =
      "holdsAt(total_drug_delivered(V1), T1), holdsAt(total_drug_delivered(V2), T2), T1 #< T2, "
      "T2 - T1 #=< W, V2 - V1 #> M, M #>= 0, ";
  auto region = [&](const std::string& extra) {
    std::vector<std::string> names;
    auto goal = ParseGoal(window + extra, &names);
    return AbduceParameters(tl, goal, names, {"M"});
  };
  auto w2 = region("W #= 2");
  REQUIRE(w2.size() == 1);
  int m = w2[0].witness.named.at("M");
  CHECK(SameRegion(w2[0].region, {LinConstraint::Make(K(0), Op::kLe, V(m)), LinConstraint::Make(V(m), Op::kLt, K(10))}));

  auto w6 = region("W #= 6");
  REQUIRE(w6.size() == 1);
  m = w6[0].witness.named.at("M");
  CHECK(SameRegion(w6[0].region, {LinConstraint::Make(K(0), Op::kLe, V(m)), LinConstraint::Make(V(m), Op::kLt, K(25))}));

  CHECK(region("W #= 2, M #= 25").empty());
}

TEST_CASE("refining an abduced solution") {
  auto sols = Abduce("happens(patient_bolus_completed, T), T #=< 9", {Start(Q(0), Q(10))});
  REQUIRE(sols.size() == 1);
  auto later = Refine(sols[0], "Ts #>= 3");
  REQUIRE(later);
  CHECK(later->RegionText() == std::vector<std::string>{"3 #=< Ts", "Ts #=< 4"});
  CHECK_FALSE(Refine(sols[0], "Ts #>= 5"));

  // The snapshot of 25 holds one unit after completion for every start in
  // [0, 4]: completion at Ts + 5 <= 9 and Ts + 6 <= 10.
  auto snap = Refine(sols[0], "holdsAt(total_drug_delivered(25), Ts + 6)");
  REQUIRE(snap);
  CHECK(snap->RegionText() == std::vector<std::string>{"0 #=< Ts", "Ts #=< 4"});
  auto at = [](const Rational& ts) {
    Narrative n = Empty();
    n.occurrences.push_back({Term::Sym(kStarted), ts, {}});
    return TriggerClosure(Pca(), n);
  };
  for (Rational ts : {Q(1, 3), Q(2), Q(4)}) {
    CHECK(ValueAt(at(ts), "total_drug_delivered", ts + 6).value == 25);
  }
  // Clipping windows are open at 0, so a start at 0 leaves the initial value
  // in place next to the snapshot.
  CHECK_THROWS_AS(ValueAt(at(Q(0)), "total_drug_delivered", Q(6)), MultiValueError);
  CHECK_FALSE(Query(at(Q(0)), "holdsAt(total_drug_delivered(25), 6)").empty());

  // One store serves every use site along the chain.
  auto chain = Refine(*later, "holdsAt(total_drug_delivered(V), Ts + 1), V #>= 5");
  REQUIRE(chain);
  ReplayResult r = ReplayAnswer(chain->timeline, chain->answer);
  CHECK_MESSAGE(r.ok, r.message);
  CHECK(chain->answer.store.EntailsAll(chain->region));
}

TEST_CASE("property: every sampled point of an abduced region proves the goal") {
  Gen g(31);
  struct Case {
    std::string goal;
    std::vector<AbducibleSpec> specs;
    Narrative base;
  };
  std::vector<Case> cases{
      {"happens(patient_bolus_completed, T), T #=< 9", {Start(Q(0), Q(10))}, Empty()},
      {"holdsAt(total_drug_delivered(V), 8), V #>= 15", {Start(Q(0), Q(8))}, Empty()},
      {"holdsAt(patient_bolus_delivery_enabled, 6)", {Start(Q(0), Q(10))}, Empty()},
      {"holdsAt(total_drug_delivered(V), 10), V #>= 30", {Start(Q(0), Q(10), 2, "S")}, Empty()},
  };
  size_t checked = 0;
  for (const Case& c : cases) {
    CAPTURE(c.goal);
    for (const AbducedSolution& s : Abduce(c.goal, c.specs, c.base)) {
      for (int k = 0; k < 20; ++k) {
        auto point = Sample(g, s);
        CHECK(ProvesAt(s, point, c.goal, c.base));
        ++checked;
      }
    }
  }
  CHECK(checked >= 80);
}

TEST_CASE("property: solutions are minimal and stay inside their windows") {
  Gen g(32);
  for (int i = 0; i < 8; ++i) {
    Rational lo = Q(g.Int(0, 3)), hi = lo + Q(g.Int(3, 6));
    int max = g.Int(1, 3);
    std::string goal = g.Coin() ? "holdsAt(total_drug_delivered(V), 10), V #>= " + std::to_string(g.Int(5, 40))
                                : "happens(patient_bolus_completed, T)";
    CAPTURE(goal);
    std::vector<AbducedSolution> sols;
    try {
      sols = Abduce(goal, {Start(lo, hi, max, "S")});
    } catch (const SearchExhausted&) {
      continue;
    }
    std::vector<size_t> sizes;
    for (const AbducedSolution& s : sols) {
      CHECK(static_cast<int>(s.hypotheses.size()) <= max);
      clpq::ConstraintStore st;
      st.AddAll(s.region);
      for (const Hypothesis& h : s.hypotheses) {
        CHECK(st.Entails(LinConstraint::Make(LinExpr(lo), Op::kLe, V(h.var))));
        CHECK(st.Entails(LinConstraint::Make(V(h.var), Op::kLe, LinExpr(hi))));
      }
      // One abducible, so multisets nest by size.
      for (size_t earlier : sizes) CHECK(s.hypotheses.size() <= earlier);
      sizes.push_back(s.hypotheses.size());
    }
    std::set<size_t> distinct(sizes.begin(), sizes.end());
    CHECK(distinct.size() <= 1);
  }
}
