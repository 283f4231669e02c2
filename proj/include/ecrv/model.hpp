// Event Calculus domain models and narratives, and the clause-syntax parser
// that reads them.
//
// Model files (`.ec`) are logic-programming clauses:
//
//   fluent(patient_bolus_delivery_enabled).
//   initiates(patient_bolus_delivery_started, patient_bolus_delivery_enabled, T).
//   trajectory(S, T1, total(X), T2) :- rate(R), X #= (T2 - T1) * R.
//   happens(done, T) :- holdsAt(level(10), T).
//
// Constraint literals use `#=`, `#\=`, `#<`, `#=<`, `#>`, `#>=`. Negation is
// written `not p(...)`. Comments run from `%` to end of line.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecrv/clpq.hpp"
#include "ecrv/rational.hpp"
#include "ecrv/term.hpp"

namespace ecrv {

struct SourcePos {
  int line = 0;
  int col = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourcePos pos, std::string message, std::vector<std::string> expected = {});
  SourcePos pos() const { return pos_; }
  const std::vector<std::string>& expected() const { return expected_; }
  const std::string& detail() const { return detail_; }

 private:
  SourcePos pos_;
  std::string detail_;
  std::vector<std::string> expected_;
};

class NegativeTimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingHorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a model with error-severity diagnostics is handed to the engine.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonStratifiedError : public std::runtime_error {
 public:
  explicit NonStratifiedError(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

struct Literal {
  enum class Kind { kHolds, kHappens, kConstraint, kInitiallyP, kUser };
  Kind kind = Kind::kUser;
  bool negated = false;
  // holdsAt(F, T), happens(E, T), initiallyP(F), p(...), or for constraints
  // the compound op(Lhs, Rhs) with op one of "#=", "#\\=", "#<", "#=<", "#>",
  // "#>=".
  Term atom;
  SourcePos pos;

  static Literal Classify(Term atom, bool negated, SourcePos pos = {});
};

bool IsConstraintOp(const std::string& functor);
clpq::LinConstraint::Op ConstraintOp(const std::string& functor);

struct Clause {
  enum class Kind {
    kFluentDecl,
    kEventDecl,
    kInitiates,
    kTerminates,
    kReleases,
    kTrajectory,
    kTrigger,
    kInitiallyP,
    kHorizon,
    kUser,
  };
  Kind kind = Kind::kUser;
  Term head;
  std::vector<Literal> body;
  // Variables are numbered 0..var_count-1 within the clause.
  int var_count = 0;
  std::vector<std::string> var_names;
  SourcePos pos;
  int id = 0;  // index in DomainModel::clauses

  // initiates/terminates/releases(E, F, T)
  const Term& event() const { return head.arg(0); }
  const Term& fluent() const { return head.arg(1); }
  // trajectory(S, T1, F, T2)
  const Term& state_fluent() const { return head.arg(0); }
  const Term& functional_fluent() const { return head.arg(2); }
};

std::string ToString(const Clause& c);
std::string ToString(const Literal& l);

struct FluentSignature {
  std::string name;
  size_t arity = 0;
  // Arity-1 fluents carry a numeric value in their argument; the others are
  // boolean states (possibly parameterized by symbolic arguments).
  bool functional = false;
  bool implicit = false;  // declared only through an initiallyP/1 reference
};

struct EventSignature {
  std::string name;
  size_t arity = 0;
};

class DomainModel {
 public:
  std::vector<Clause> clauses;
  std::map<std::string, FluentSignature> fluents;
  std::map<std::string, EventSignature> events;

  std::vector<const Clause*> OfKind(Clause::Kind k) const;
  bool IsFluent(const std::string& name) const { return fluents.count(name) != 0; }
  bool IsFunctional(const std::string& name) const;
  // A trajectory-governed functional fluent whose value persists after the
  // trajectory ends (it has an initial value and no explicit initiates rule).
  bool HasSnapshot(const std::string& fluent) const;
  // Ground initiallyP facts.
  std::vector<Term> InitialFacts() const;
  size_t CountKind(Clause::Kind k) const;
};

struct Occurrence {
  Term event;  // ground
  Rational time;
  SourcePos pos;
};

struct Narrative {
  std::vector<Occurrence> occurrences;  // sorted ascending by time, stable
  Rational horizon;
};

struct Diagnostic {
  enum class Severity { kError, kWarning, kInfo };
  Severity severity = Severity::kError;
  std::string message;
  SourcePos pos;
};

std::string SeverityName(Diagnostic::Severity s);

// Parses a model. Throws ParseError; no partial model is returned.
DomainModel ParseDomain(const std::string& text);
// Parses `happens(e, t).` and `horizon(h).` facts.
Narrative ParseNarrative(const std::string& text);
// Parses a conjunction of literals (the query syntax), optional final `.`.
// Named variables are numbered from 0 in order of appearance; `names` receives
// their names.
std::vector<Literal> ParseGoal(const std::string& text, std::vector<std::string>* names);
// Parses a single term.
Term ParseTerm(const std::string& text);

// Raw clauses of any file in the clause syntax; used by scenario files.
std::vector<Clause> ParseClauses(const std::string& text);

std::string Serialize(const DomainModel& m);
std::string Serialize(const Narrative& n);

std::vector<Diagnostic> ValidateModel(const DomainModel& m);
bool HasErrors(const std::vector<Diagnostic>& ds);
// Throws NonStratifiedError naming the predicates on a cycle through negation.
void CheckStratification(const DomainModel& m);

// Parsed clause equality up to source positions.
bool StructurallyEqual(const DomainModel& a, const DomainModel& b);

}  // namespace ecrv
