// Exact linear constraints over the rationals.
//
// A ConstraintStore is a conjunction of linear equalities and (strict or
// non-strict) inequalities. Equalities are kept in solved form (Gaussian
// elimination); inequalities are decided with Fourier-Motzkin elimination,
// which handles strict inequalities exactly by tracking strictness through
// every combination step. Disequalities never enter a store: callers split
// them into `<` / `>` cases (see Complement).

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecrv/rational.hpp"

namespace ecrv::clpq {

using VarId = int;

class NonLinearError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSlopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sum(coeff * var) + constant
class LinExpr {
 public:
  LinExpr() = default;
  explicit LinExpr(Rational constant) : constant_(std::move(constant)) {}
  static LinExpr Var(VarId v, Rational coeff = 1);

  const std::map<VarId, Rational>& coeffs() const { return coeffs_; }
  const Rational& constant() const { return constant_; }
  Rational coeff(VarId v) const;
  bool is_constant() const { return coeffs_.empty(); }
  bool mentions(VarId v) const { return coeffs_.count(v) != 0; }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(const Rational& k);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(LinExpr a, const Rational& k) { return a *= k; }
  friend LinExpr operator-(LinExpr a) { return a *= Rational(-1); }
  friend bool operator==(const LinExpr& a, const LinExpr& b) {
    return a.coeffs_ == b.coeffs_ && a.constant_ == b.constant_;
  }

  // Replaces `v` by `e`.
  LinExpr Substitute(VarId v, const LinExpr& e) const;
  Rational Evaluate(const std::map<VarId, Rational>& point) const;

 private:
  std::map<VarId, Rational> coeffs_;
  Rational constant_;
};

enum class Rel { kEq, kNe, kLt, kLe };

// `expr rel 0`. Build with Make(); `>` and `>=` are normalized by swapping
// sides.
struct LinConstraint {
  LinExpr expr;
  Rel rel = Rel::kLe;

  enum class Op { kEq, kNe, kLt, kLe, kGt, kGe };
  static LinConstraint Make(const LinExpr& lhs, Op op, const LinExpr& rhs);

  bool is_trivially_true() const;
  bool is_trivially_false() const;
  std::set<VarId> vars() const;
  // Positive rescaling so the smallest-id coefficient has magnitude 1 (and is
  // positive for equalities). Solution set unchanged.
  LinConstraint Canonical() const;
  bool Holds(const std::map<VarId, Rational>& point) const;

  friend bool operator==(const LinConstraint& a, const LinConstraint& b) {
    return a.rel == b.rel && a.expr == b.expr;
  }
};

using Conjunction = std::vector<LinConstraint>;
using VarNamer = std::function<std::string(VarId)>;

class ConstraintStore {
 public:
  ConstraintStore() = default;

  // Conjoins `c`. Returns false (and marks the store UNSAT) when the result is
  // infeasible. Throws std::invalid_argument for kNe.
  bool Add(const LinConstraint& c);
  bool AddAll(const Conjunction& cs);

  bool unsat() const { return unsat_; }
  bool IsSatisfiable() const { return !unsat_; }
  // True iff every solution of the store satisfies `c` (kNe allowed).
  bool Entails(const LinConstraint& c) const;
  bool EntailsAll(const Conjunction& cs) const;
  // True iff the store conjoined with `cs` is feasible.
  bool CompatibleWith(const Conjunction& cs) const;

  // Constraints over `vars` only, with exactly the projected solution set.
  Conjunction Project(const std::set<VarId>& vars) const;
  // Every constraint of the store, equalities first.
  Conjunction Constraints() const;
  std::set<VarId> Vars() const;
  bool Mentions(VarId v) const;
  // Value of `v` if the store pins it to a single rational.
  std::optional<Rational> FixedValue(VarId v) const;
  // Linear expression for `v` in terms of other variables, if an equality
  // solved for `v` is recorded.
  std::optional<LinExpr> SolvedExpr(VarId v) const;

  // One satisfying assignment (strict bounds respected). Empty map if the
  // store has no variables. Requires a satisfiable store.
  std::map<VarId, Rational> Witness() const;

  // Order-independent text form, used as a cache key component.
  std::string Fingerprint() const;
  size_t size() const;

 private:
  void Substitute(VarId v, const LinExpr& e);
  bool AddInequality(const LinConstraint& c);
  bool CheckFeasible();
  Conjunction Inequalities() const;

  struct Bound {
    std::optional<Rational> lo, hi;
    bool lo_strict = false, hi_strict = false;
  };

  std::map<VarId, LinExpr> solved_;
  std::map<VarId, Bound> bounds_;
  Conjunction ineqs_;
  bool unsat_ = false;
};

// Feasibility of a conjunction of `=`, `<`, `<=` constraints.
bool IsSatisfiable(const Conjunction& cs);
// Fourier-Motzkin projection of a conjunction onto `keep`.
Conjunction ProjectConjunction(const Conjunction& cs, const std::set<VarId>& keep);
// Removes constraints implied by the others and duplicate bounds.
Conjunction RemoveRedundant(const Conjunction& cs);

// Disjoint cover of the complement of `conj`: [not c1], [c1, not c2], ...
// Disjuncts that are trivially false are dropped.
std::vector<Conjunction> Complement(const Conjunction& conj);
// The disjuncts of `not c` (two for an equality).
std::vector<LinConstraint> Negate(const LinConstraint& c);

// Bounds of one variable implied by a store. `eq` is set when it is fixed.
struct Bounds {
  std::optional<Rational> lo, hi, eq;
  bool lo_strict = false, hi_strict = false;
};
Bounds BoundsOf(const ConstraintStore& s, VarId v);

struct Window {
  Rational after;              // exclusive lower bound
  std::optional<Rational> until;  // inclusive upper bound
};

// Unique T in the window with coeff_t * T + offset == target.
// Returns nullopt when there is no such T. Throws DegenerateSlopeError when
// coeff_t is zero and offset == target (every T is a solution).
std::optional<Rational> SolveCrossing(const Rational& coeff_t, const Rational& offset,
                                      const Rational& target, const Window& window);

// DSL rendering: `2 #< T`, `T #=< 7`, `T2 - T1 #= 5`.
std::string ToString(const LinExpr& e, const VarNamer& name);
std::string ToString(const LinConstraint& c, const VarNamer& name);

}  // namespace ecrv::clpq
