// Requirements validation: scenario consistency and safety properties.
//
// Scenario files are narratives plus expectations:
//
//   % UC-3: patient requests a bolus.
//   happens(patient_bolus_delivery_started, 2).
//   horizon(10).
//   expect(value(total_drug_delivered, 25), at(8)).
//   expect(holds(patient_bolus_delivery_enabled), at(4)).
//   expect(not_holds(patient_bolus_delivery_enabled), at(8)).
//   expect(happens(patient_bolus_completed), by(9)).
//
// Any other expectation term is a raw literal in which the variable T
// stands for the time. Leading comment lines are the scenario's provenance.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ecrv/engine.hpp"

namespace ecrv {

class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Postcondition {
  enum class Kind { kHolds, kNotHolds, kValue, kHappens, kRaw };
  enum class When { kAt, kBy };
  Kind kind = Kind::kRaw;
  When when = When::kAt;
  Rational time;
  Term subject;        // fluent, value name, event or raw literal atom
  Rational expected;   // kValue
  bool negated = false;  // kRaw
  std::string text;
  SourcePos pos;

  // Literals over the time variable T (index 0 of the returned names).
  std::vector<Literal> Goal(std::vector<std::string>* names) const;
};

struct Scenario {
  std::string name;
  Narrative narrative;
  std::vector<Postcondition> postconditions;
  std::string provenance;
};

Scenario ParseScenario(const std::string& text, const std::string& name = "scenario");

enum class Verdict { kConsistent, kInconsistent, kPass, kViolation, kError };
std::string VerdictName(Verdict v);

struct PostconditionResult {
  std::string text;
  bool ok = false;
  std::string explanation;
  std::optional<Rational> actual;
  ProofPtr proof;
  clpq::ConstraintStore store;
};

struct Report {
  std::string name;
  Verdict verdict = Verdict::kError;
  std::vector<PostconditionResult> results;
  // Named witness quantities, e.g. T1, T2, delivered.
  std::vector<std::pair<std::string, Rational>> witness;
  std::vector<ProofPtr> proofs;
  std::vector<std::string> notes;
  std::vector<Diagnostic> diagnostics;
  std::string error;
  double seconds = 0;  // wall time; not part of the JSON form
  QueryStats stats;

  nlohmann::json ToJson() const;
  std::string ToText() const;
};

// The expectations are checked together as one conjunctive query; each one
// is then evaluated on its own for the per-postcondition results.
Report CheckScenario(std::shared_ptr<const DomainModel> model, const Scenario& s,
                     const EngineOptions& options = {});

struct Overdose {
  Rational max_volume;
  Rational window;
  std::string fluent = "total_drug_delivered";
};
struct ResponseTime {
  Term trigger;
  Term response;
  Rational deadline;
};
struct RawGoal {
  std::string text;  // success is a violation
};
struct PropertySpec {
  std::string name;
  std::variant<Overdose, ResponseTime, RawGoal> kind;
};

// Parses "overdose(M, W)", "response(Trigger, Response, D)" or
// "goal(<literals>)". Throws ParseError or std::invalid_argument.
PropertySpec ParseProperty(const std::string& text);

Report CheckProperty(const ClosedTimeline& tl, const PropertySpec& p);
Report CheckProperty(std::shared_ptr<const DomainModel> model, const Narrative& n,
                     const PropertySpec& p, const EngineOptions& options = {});

struct NamedNarrative {
  std::string name;
  Narrative narrative;
};

struct SummaryReport {
  std::vector<Report> reports;  // in input order
  std::map<Verdict, size_t> counts;
  nlohmann::json ToJson() const;
};

// Narratives are checked concurrently; errors stay in their own report.
// Throws MissingInput on an empty list.
SummaryReport Sweep(std::shared_ptr<const DomainModel> model, const std::vector<NamedNarrative>& narratives,
                    const PropertySpec& p, const EngineOptions& options = {}, unsigned threads = 0);

struct StagedResult {
  ClosedTimeline timeline;
  std::vector<Diagnostic> warnings;  // StageOrderWarning
};

// Trigger closure one rule subset at a time; each stage's triggered events
// become plain narrative facts for the next.
StagedResult StagedRun(std::shared_ptr<const DomainModel> model, const Narrative& n,
                       const std::vector<std::set<int>>& stages, const EngineOptions& options = {});

}  // namespace ecrv
