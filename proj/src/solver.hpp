// Search state and the literal solver shared by queries, trigger closure,
// checkpointing and proof replay. Not installed.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecrv/engine.hpp"

namespace ecrv::detail {

struct State {
  std::vector<std::optional<Term>> bind;  // indexed by variable id
  clpq::ConstraintStore store;
  int next_var = 0;

  int Fresh(int n);
};

struct Sol {
  State st;
  ProofPtr proof;
};

struct ConjSol {
  State st;
  std::vector<ProofPtr> proofs;
};

Term Deref(const Term& t, const State& st);
// Substitutes bindings everywhere; unbound variables pinned by the store
// become numbers.
Term Resolve(const Term& t, const State& st);
clpq::LinExpr ToLin(const Term& t, const State& st);
Term LinToTerm(const clpq::LinExpr& e);
std::optional<Rational> ConstValue(const Term& t, const State& st);
bool Unify(const Term& a, const Term& b, State& st);
Term Renamed(const Term& t, int offset);
Literal Renamed(const Literal& l, int offset);
ProofPtr RenameProof(const ProofPtr& p, int offset);
// Resolves every goal in the tree. Children of `triggered` nodes keep their
// own variable space.
ProofPtr Finalize(const ProofPtr& p, const State& st);
Term ConstraintTerm(const clpq::LinConstraint& c);
clpq::Conjunction RenameConj(const clpq::Conjunction& cs, int offset);
bool IsGroundProof(const ProofNode& p);

class Solver {
 public:
  Solver(const ClosedTimeline& tl, QueryStats* stats, bool cache, bool checkpoints,
         size_t usable_segments);

  std::vector<ConjSol> SolveConj(const std::vector<Literal>& body, const State& st, int depth);
  std::vector<Sol> SolveLit(const Literal& lit, const State& st, int depth);

  // Solutions of `head :- body` for clause `c` unified with `head`.
  std::vector<Sol> SolveClause(const Clause& c, const Term& head, const State& st, int depth);

  struct Clipper {
    const Clause* clause;
    std::optional<Term> fluent;  // nullopt: any instance of the clause's fluent
  };
  struct Negated {
    State st;
    std::vector<ProofPtr> constraints;
  };
  // Branches where no clipper event lies in the window (t1, t2).
  std::vector<Negated> NotClipped(const State& st, const Term& t1, const Term& t2,
                                  const std::vector<Clipper>& clippers, int depth);
  // Branches of `outer` in which none of `inner` holds.
  std::vector<Negated> Negate(const Negated& outer, const std::vector<State>& inner);

  std::vector<Clipper> BooleanClippers(const Term& fluent) const;
  std::vector<Clipper> StateClippers(const Term& state) const;
  std::vector<Clipper> ValueClippers(const std::string& name) const;

  const ClosedTimeline& timeline() const { return tl_; }

  // Initiations at or after `bound` are skipped for holdsAt goals whose time
  // is variable `var`. Sound only when such solutions are not wanted.
  void SetHint(int var, std::optional<Rational> bound) {
    hint_var_ = var;
    hint_ = std::move(bound);
  }

 private:
  std::vector<Sol> SolveHolds(const Term& atom, const State& st, int depth);
  std::vector<Sol> SolveBoolean(const Term& f, const Term& t, const State& st, int depth);
  std::vector<Sol> SolveValue(const Term& f, const Term& t, const State& st, int depth);
  std::vector<Sol> SolveHappens(const Term& atom, const State& st);
  std::vector<Sol> SolveInitially(const Term& atom, const State& st);
  std::vector<Sol> SolveUser(const Term& atom, const State& st, int depth);
  std::vector<Sol> SolveConstraint(const Term& atom, const State& st);
  std::vector<Sol> SolveNot(const Literal& lit, const State& st, int depth);
  std::optional<std::vector<Sol>> FromCheckpoint(const Term& f, const Term& t,
                                                 const Rational& at, const State& st);
  // Events at or after the returned time cannot initiate for time t.
  std::optional<Rational> Cutoff(const Term& t, const State& st) const;
  ProofPtr OccurrenceProof(const TimedEvent& e) const;
  // Index of the first event strictly after t1, when events are ground.
  size_t FirstAfter(const std::optional<Rational>& t1) const;

  std::optional<std::string> CacheKey(const Literal& lit, const State& st,
                                      std::vector<int>* vars) const;

  struct CacheEntry {
    std::vector<std::pair<std::vector<Term>, ProofPtr>> solutions;
  };

  const ClosedTimeline& tl_;
  const DomainModel& m_;
  QueryStats* stats_;
  bool cache_;
  bool checkpoints_;
  size_t usable_segments_;
  int hint_var_ = -1;
  std::optional<Rational> hint_;
  using Index = std::map<std::string, std::vector<const Clause*>>;
  static const std::vector<const Clause*>& Lookup(const Index& idx, const std::string& key);

  std::unordered_map<std::string, CacheEntry> table_;
  Index initiates_, terminates_, releases_, trajectories_, initially_, user_;
  std::vector<Rational> times_;  // ground event times, when tl_.ground
};

}  // namespace ecrv::detail
