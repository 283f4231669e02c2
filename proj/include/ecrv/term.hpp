// Logic terms shared by the parser, the engine and the oracle.
//
// A term is a variable, a rational number, a symbolic constant or a compound
// f(t1, ..., tn). Arithmetic is represented with the reserved functors
// "+", "-", "*", "/" and "neg" (unary minus), so `(T2 - T1) * Rate` is the
// compound *(-(T2, T1), Rate). Terms are immutable and cheap to copy.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ecrv/rational.hpp"

namespace ecrv {

class Term {
 public:
  enum class Kind { kVar, kNum, kSym, kCompound };

  Term() : kind_(Kind::kSym) {}

  static Term Var(int id, std::string name = {});
  static Term Num(Rational value);
  static Term Sym(std::string name);
  static Term Compound(std::string functor, std::vector<Term> args);

  Kind kind() const { return kind_; }
  bool is_var() const { return kind_ == Kind::kVar; }
  bool is_num() const { return kind_ == Kind::kNum; }
  bool is_sym() const { return kind_ == Kind::kSym; }
  bool is_compound() const { return kind_ == Kind::kCompound; }

  int var_id() const { return var_id_; }
  // Variable display name, symbol name, or compound functor.
  const std::string& name() const { return name_; }
  const Rational& num() const { return num_; }
  const std::vector<Term>& args() const;
  size_t arity() const { return args_ ? args_->size() : 0; }
  const Term& arg(size_t i) const { return (*args_)[i]; }

  // Name of a predicate-like term: functor of a compound or a bare symbol.
  // Empty for numbers and variables.
  std::string functor() const;
  bool is_arith() const;
  bool is_ground() const;

  // Structural equality. Variables compare by id; numbers by value.
  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b);

 private:
  Kind kind_;
  int var_id_ = -1;
  std::string name_;
  Rational num_;
  std::shared_ptr<const std::vector<Term>> args_;
};

bool IsArithFunctor(const std::string& f);

// DSL rendering. Variables print by name when they have one, else `_G<id>`.
std::string ToString(const Term& t);

// Applies `f` to every variable occurrence.
template <typename F>
void ForEachVar(const Term& t, F&& f) {
  if (t.is_var()) {
    f(t);
  } else if (t.is_compound()) {
    for (const Term& a : t.args()) ForEachVar(a, f);
  }
}

// Returns a copy of `t` with every variable id shifted by `offset`.
Term OffsetVars(const Term& t, int offset);

}  // namespace ecrv
