// Goal-directed Basic Event Calculus over a closed timeline.
//
// Axioms (t1 < t strictly; clipping windows are open):
//   holdsAt(F, T)  <- initiallyP(F), not clipped(0, F, T)
//   holdsAt(F, T)  <- happens(E, T1), initiates(E, F, T1), T1 < T,
//                     not clipped(T1, F, T)
// A functional fluent F(V) additionally takes its value from
//   - a trajectory of a state S initiated at T1 < T and not stopped (or
//     re-initiated) in (T1, T);
//   - a snapshot: when S is terminated at T1 < T, F keeps its value at T1.
//     Applies to trajectory-governed fluents that have an initial value and
//     no initiates rule of their own.
// Clippers of a functional F are events that initiate, terminate or release
// any F(_), events that initiate a governing state, and (with a snapshot)
// events that terminate one.
//
// Negation is constructive: the solutions of the negated goal are enumerated
// over the finite event set and the complement of each one's constraints is
// asserted.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecrv/clpq.hpp"
#include "ecrv/model.hpp"
#include "ecrv/proof.hpp"

namespace ecrv {

class ZenoError : public std::runtime_error {
 public:
  ZenoError(int bound, std::vector<std::string> last_events);
  int bound() const { return bound_; }
  const std::vector<std::string>& last_events() const { return last_events_; }

 private:
  int bound_;
  std::vector<std::string> last_events_;
};

class DepthExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MultiValueError : public std::runtime_error {
 public:
  MultiValueError(const std::string& fluent, std::vector<Rational> values);
  const std::vector<Rational>& values() const { return values_; }

 private:
  std::vector<Rational> values_;
};

// Floundering negation, non-numeric arithmetic, unbound fluents.
class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A symbolic trigger whose time is not a linear function of the hypotheses.
class AbductionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  int zeno_bound = 1000;
  int depth = 10000;
  bool cache = true;
  bool use_checkpoints = true;
  // Mutation used to validate the oracle: a clipper at exactly t clips at t.
  bool mutant_closed_clipping = false;
};

struct TimedEvent {
  Term event;  // ground
  clpq::LinExpr time;
  bool triggered = false;
  int rule = -1;  // trigger clause id
  // Trigger proof, valid under proof_store.
  ProofPtr proof;
  std::shared_ptr<const clpq::ConstraintStore> proof_store;
  SourcePos pos;

  std::optional<Rational> ground_time() const;
};

struct CacheStats {
  size_t hits = 0;
  size_t misses = 0;
  size_t stored_failures = 0;
};

struct QueryStats {
  size_t expansions = 0;
  CacheStats cache;
};

struct Answer {
  // Named variables bound to a term (ground, or containing other variables).
  std::vector<std::pair<std::string, Term>> bindings;
  // Constraints over the unbound named variables.
  clpq::Conjunction residual;
  // One proof per goal literal.
  std::vector<ProofPtr> proofs;
  // Full final store; proofs are checked against it.
  clpq::ConstraintStore store;
  std::map<std::string, int> named;
  int next_var = 0;

  std::string VarName(int id) const;
  std::vector<std::string> ResidualText() const;
  // `T = 7` lines followed by residual constraints.
  std::string ToText() const;
};

struct CheckpointEntry {
  Term fluent;
  Term time;
  clpq::Conjunction constraints;
  ProofPtr proof;
  int var_count = 0;
};

// Times in [lo, hi] when closed_lo, else (lo, hi].
struct Segment {
  Rational lo, hi;
  bool closed_lo = false;
  std::map<std::string, std::vector<CheckpointEntry>> entries;
  bool Contains(const Rational& t) const;
};

struct FluentState {
  bool holds = false;
  std::optional<Rational> value;  // at the segment's sample point
  bool varying = false;           // value follows a trajectory
};

// State just after `time` (at the horizon itself for a final boundary).
struct BoundaryCheckpoint {
  Rational time;
  std::map<std::string, FluentState> fluents;
};

struct ClosedTimeline {
  std::shared_ptr<const DomainModel> model;
  EngineOptions options;
  Rational horizon;
  // Ground timelines keep events sorted by time, ties in insertion order.
  std::vector<TimedEvent> events;
  bool ground = true;
  // Hypothesis variables of abduction have ids [0, var_base).
  int var_base = 0;
  std::vector<std::string> hyp_names;
  clpq::ConstraintStore base_store;
  std::vector<Segment> segments;
  std::vector<BoundaryCheckpoint> checkpoints;
  std::vector<Diagnostic> diagnostics;
  size_t triggered = 0;

  void AddEvent(TimedEvent e);
  // 0 and every distinct ground event time, ascending.
  std::vector<Rational> Boundaries() const;
  bool checkpointed() const { return !segments.empty(); }
};

// Narrative events only; no trigger rules applied.
ClosedTimeline MakeTimeline(std::shared_ptr<const DomainModel> model, const Narrative& n,
                            const EngineOptions& options = {});

// Chronological fixpoint of the trigger rules. `only_rules` restricts the
// trigger clauses used (by clause id). Throws ZenoError, ModelError and
// NonStratifiedError.
ClosedTimeline TriggerClosure(std::shared_ptr<const DomainModel> model, const Narrative& n,
                              const EngineOptions& options = {},
                              const std::set<int>* only_rules = nullptr);
// Continues the fixpoint on an existing ground timeline.
void CloseTimeline(ClosedTimeline& tl, const std::set<int>* only_rules = nullptr);

// Closure of a timeline whose hypothesized events have symbolic times. Each
// returned timeline is one case of the trigger analysis; its base_store
// holds the case's conditions on the hypothesis variables.
std::vector<ClosedTimeline> SymbolicClosure(const ClosedTimeline& seed);

struct QueryContext {
  clpq::ConstraintStore store;
  std::map<std::string, int> named;
  int next_var = 0;
};

QueryContext DefaultContext(const ClosedTimeline& tl);

std::vector<Answer> Query(const ClosedTimeline& tl, const std::vector<Literal>& goal,
                          const std::vector<std::string>& names, QueryStats* stats = nullptr,
                          const QueryContext* ctx = nullptr);
std::vector<Answer> Query(const ClosedTimeline& tl, const std::string& goal,
                          QueryStats* stats = nullptr);

// Query with the cache forced on or off.
std::pair<std::vector<Answer>, CacheStats> SolveWithCache(const ClosedTimeline& tl,
                                                          const std::vector<Literal>& goal,
                                                          const std::vector<std::string>& names,
                                                          bool enabled,
                                                          QueryStats* stats = nullptr);

struct HoldsResult {
  bool holds = false;
  ProofPtr proof;
  clpq::ConstraintStore store;
};

struct ValueResult {
  Rational value;
  ProofPtr proof;
  clpq::ConstraintStore store;
};

HoldsResult HoldsAt(const ClosedTimeline& tl, const Term& fluent, const Rational& t,
                    QueryStats* stats = nullptr);
// `fluent` is a functional fluent name or a term whose last argument is
// replaced by the value variable.
ValueResult ValueAt(const ClosedTimeline& tl, const std::string& fluent, const Rational& t,
                    QueryStats* stats = nullptr);

// Fills segments and per-boundary checkpoints. Adds error diagnostics for
// boundaries where a functional fluent has several values.
void Checkpoint(ClosedTimeline& tl);

struct ReplayResult {
  bool ok = true;
  size_t nodes = 0;
  std::string message;
};

// Re-checks every step of `proof` under `store`: clause instances match their
// clause, constraint leaves are entailed, leaves exist in the timeline or the
// model, and for negation nodes no candidate derivation is compatible with
// the store.
ReplayResult ReplayProof(const ClosedTimeline& tl, const ProofNode& proof,
                         const clpq::ConstraintStore& store);
ReplayResult ReplayAnswer(const ClosedTimeline& tl, const Answer& a);

}  // namespace ecrv
