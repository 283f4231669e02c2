#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ecrv/model.hpp"
#include "support.hpp"

using namespace ecrv;
using ecrv::test::Corpus;
using ecrv::test::Gen;
using ecrv::test::Q;

namespace {

// The PCA listing without the pump configuration facts.
std::string Listing() {
  std::string text = Corpus("pca_bolus.ec");
  return text.substr(0, text.find("% Pump configuration."));
}

size_t Errors(const std::vector<Diagnostic>& ds) {
  return static_cast<size_t>(std::count_if(ds.begin(), ds.end(), [](const Diagnostic& d) {
    return d.severity == Diagnostic::Severity::kError;
  }));
}

bool Mentions(const std::vector<Diagnostic>& ds, const std::string& text) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.message.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("the bolus listing parses with the expected shape") {
  DomainModel m = ParseDomain(Listing());
  CHECK(m.fluents.size() == 4);
  CHECK(m.events.size() == 3);
  CHECK(m.CountKind(Clause::Kind::kInitiates) == 1);
  CHECK(m.CountKind(Clause::Kind::kTerminates) == 1);
  CHECK(m.CountKind(Clause::Kind::kTrajectory) == 2);
  CHECK(m.CountKind(Clause::Kind::kTrigger) == 2);
  CHECK(m.fluents.at("vtbi").implicit);
  CHECK(m.IsFunctional("total_drug_delivered"));
  CHECK_FALSE(m.IsFunctional("patient_bolus_delivery_enabled"));
  CHECK(Errors(ValidateModel(m)) == 0);
  CHECK_NOTHROW(CheckStratification(m));
}

TEST_CASE("empty text and malformed clauses") {
  DomainModel m = ParseDomain("");
  CHECK(m.clauses.empty());
  try {
    ParseDomain("initiates(e, f, T)");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos().line == 1);
    CHECK(e.pos().col == 19);
    CHECK(std::find(e.expected().begin(), e.expected().end(), "'.'") != e.expected().end());
  }
  CHECK_THROWS_AS(ParseDomain("fluent(f).\ninitiates(e, f T)."), ParseError);
}

TEST_CASE("narratives") {
  Narrative n = ParseNarrative("happens(patient_bolus_delivery_started, 2). horizon(10).");
  REQUIRE(n.occurrences.size() == 1);
  CHECK(ToString(n.occurrences[0].event) == "patient_bolus_delivery_started");
  CHECK(n.occurrences[0].time == 2);
  CHECK(n.horizon == 10);

  Narrative empty = ParseNarrative("horizon(0).");
  CHECK(empty.occurrences.empty());
  CHECK(empty.horizon == 0);

  CHECK_THROWS_AS(ParseNarrative("happens(e, -1). horizon(5)."), NegativeTimeError);
  CHECK_THROWS_AS(ParseNarrative("happens(e, 1)."), MissingHorizonError);

  Narrative mixed = ParseNarrative("happens(b, 2.5). happens(a, 1/3). happens(c, 1/3). horizon(4).");
  REQUIRE(mixed.occurrences.size() == 3);
  CHECK(mixed.occurrences[0].time == Q(1, 3));
  CHECK(ToString(mixed.occurrences[0].event) == "a");
  CHECK(ToString(mixed.occurrences[1].event) == "c");
  CHECK(mixed.occurrences[2].time == Q(5, 2));
}

TEST_CASE("validation diagnostics") {
  DomainModel undeclared = ParseDomain("event(e).\ninitiates(e, foo, T).\n");
  auto ds = ValidateModel(undeclared);
  CHECK(Errors(ds) == 1);
  CHECK(Mentions(ds, "undeclared fluent foo"));

  DomainModel nonlinear = ParseDomain(
      "fluent(on). fluent(level(X)).\n"
      "trajectory(on, T1, level(X), T2) :- X #= T2 * T2.\n");
  auto dn = ValidateModel(nonlinear);
  CHECK(Errors(dn) >= 1);
  CHECK(Mentions(dn, "non-linear expression"));
}

TEST_CASE("stratification") {
  CHECK_NOTHROW(CheckStratification(ParseDomain(Listing())));
  CHECK_NOTHROW(CheckStratification(ParseDomain("p :- q. q :- r. r.")));
  try {
    CheckStratification(ParseDomain("p :- not q. q :- not p."));
    FAIL("expected NonStratifiedError");
  } catch (const NonStratifiedError& e) {
    std::set<std::string> cycle(e.cycle().begin(), e.cycle().end());
    CHECK(cycle.count("p") == 1);
    CHECK(cycle.count("q") == 1);
  }
}

TEST_CASE("corpus files round-trip") {
  for (const char* f : {"pca_bolus.ec", "toggle.ec"}) {
    CAPTURE(f);
    DomainModel a = ParseDomain(Corpus(f));
    DomainModel b = ParseDomain(Serialize(a));
    CHECK(StructurallyEqual(a, b));
  }
  for (const char* f : {"n1.nrt", "sunny_1.nrt", "sunny_2.nrt", "sunny_3.nrt", "toggle.nrt"}) {
    CAPTURE(f);
    Narrative a = ParseNarrative(Corpus(f));
    Narrative b = ParseNarrative(Serialize(a));
    CHECK(Serialize(a) == Serialize(b));
    CHECK(a.horizon == b.horizon);
  }
}

namespace {

// Random well-formed model over declared names; `extra` adds one rule with an
// undeclared fluent.
std::string RandomModel(Gen& g, std::set<std::string>* fluents, std::set<std::string>* events,
                        std::vector<Rational>* rates, const std::string& extra = "") {
  std::string text;
  int nf = g.Int(1, 4), ne = g.Int(1, 4);
  for (int i = 0; i < nf; ++i) {
    fluents->insert("f" + std::to_string(i));
    text += "fluent(f" + std::to_string(i) + ").\n";
  }
  for (int i = 0; i < ne; ++i) {
    events->insert("e" + std::to_string(i));
    text += "event(e" + std::to_string(i) + ").\n";
  }
  int rules = g.Int(1, 6);
  for (int i = 0; i < rules; ++i) {
    std::string f = "f" + std::to_string(g.Int(0, nf - 1));
    std::string e = "e" + std::to_string(g.Int(0, ne - 1));
    std::string kind = g.Pick(std::vector<std::string>{"initiates", "terminates", "releases"});
    text += kind + "(" + e + ", " + f + ", T)";
    if (g.Coin(40)) text += " :- holdsAt(f" + std::to_string(g.Int(0, nf - 1)) + ", T)";
    text += ".\n";
  }
  if (g.Coin()) text += "initiallyP(f" + std::to_string(g.Int(0, nf - 1)) + ").\n";
  int nr = g.Int(0, 3);
  for (int i = 0; i < nr; ++i) {
    Rational r = g.Frac(-5, 5, 9);
    rates->push_back(r);
    text += "rate" + std::to_string(i) + "(" + ToString(r) + ").\n";
  }
  return text + extra;
}

}  // namespace

TEST_CASE("property: names in generated models resolve to one declaration") {
  Gen g(11);
  for (int i = 0; i < 100; ++i) {
    std::set<std::string> fl, ev;
    std::vector<Rational> rates;
    bool broken = g.Coin(30);
    std::string text = RandomModel(g, &fl, &ev, &rates, broken ? "initiates(e0, ghost, T).\n" : "");
    DomainModel m = ParseDomain(text);
    auto ds = ValidateModel(m);
    CAPTURE(text);
    if (broken) {
      CHECK(Errors(ds) == 1);
      CHECK(Mentions(ds, "undeclared fluent ghost"));
      continue;
    }
    CHECK(Errors(ds) == 0);
    for (const Clause& c : m.clauses) {
      if (c.kind != Clause::Kind::kInitiates && c.kind != Clause::Kind::kTerminates &&
          c.kind != Clause::Kind::kReleases) {
        continue;
      }
      CHECK(m.fluents.count(c.fluent().functor()) == 1);
      CHECK(m.events.count(c.event().functor()) == 1);
      CHECK(fl.count(c.fluent().functor()) == 1);
    }
    CHECK(m.fluents.size() == fl.size());
    CHECK(m.events.size() == ev.size());
  }
}

TEST_CASE("property: generated models round-trip with exact rationals") {
  Gen g(12);
  for (int i = 0; i < 100; ++i) {
    std::set<std::string> fl, ev;
    std::vector<Rational> rates;
    DomainModel a = ParseDomain(RandomModel(g, &fl, &ev, &rates));
    std::string text = Serialize(a);
    DomainModel b = ParseDomain(text);
    CHECK(StructurallyEqual(a, b));
    std::vector<Rational> seen;
    for (const Clause& c : b.clauses) {
      if (c.kind == Clause::Kind::kUser && c.head.arity() == 1 && c.head.arg(0).is_num()) {
        seen.push_back(c.head.arg(0).num());
      }
    }
    CHECK(seen == rates);
    for (const Rational& r : rates) CHECK(text.find(ToString(r)) != std::string::npos);
  }
}
