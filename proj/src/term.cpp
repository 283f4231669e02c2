#include "ecrv/term.hpp"

#include <cctype>
#include <sstream>

namespace ecrv {

std::optional<Rational> ParseRational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  std::string_view body = text.substr(i);
  if (body.empty()) return std::nullopt;
  auto all_digits = [](std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
  };
  Rational value;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    std::string_view num = body.substr(0, slash), den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) return std::nullopt;
    mpz_class d{std::string(den)};
    if (d == 0) return std::nullopt;
    value = Rational(mpz_class(std::string(num)), d);
  } else if (auto dot = body.find('.'); dot != std::string_view::npos) {
    std::string_view whole = body.substr(0, dot), frac = body.substr(dot + 1);
    if (!all_digits(whole) || !all_digits(frac)) return std::nullopt;
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    value = Rational(mpz_class(std::string(whole) + std::string(frac)), scale);
  } else {
    if (!all_digits(body)) return std::nullopt;
    value = Rational(mpz_class(std::string(body)));
  }
  value.canonicalize();
  if (negative) value = -value;
  return value;
}

std::string ToString(const Rational& q) {
  Rational c = q;
  c.canonicalize();
  return c.get_str();
}

Term Term::Var(int id, std::string name) {
  Term t;
  t.kind_ = Kind::kVar;
  t.var_id_ = id;
  t.name_ = std::move(name);
  return t;
}

Term Term::Num(Rational value) {
  Term t;
  t.kind_ = Kind::kNum;
  value.canonicalize();
  t.num_ = std::move(value);
  return t;
}

Term Term::Sym(std::string name) {
  Term t;
  t.kind_ = Kind::kSym;
  t.name_ = std::move(name);
  return t;
}

Term Term::Compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return Sym(std::move(functor));
  Term t;
  t.kind_ = Kind::kCompound;
  t.name_ = std::move(functor);
  t.args_ = std::make_shared<const std::vector<Term>>(std::move(args));
  return t;
}

const std::vector<Term>& Term::args() const {
  static const std::vector<Term> kEmpty;
  return args_ ? *args_ : kEmpty;
}

std::string Term::functor() const {
  if (kind_ == Kind::kSym || kind_ == Kind::kCompound) return name_;
  return {};
}

bool IsArithFunctor(const std::string& f) {
  return f == "+" || f == "-" || f == "*" || f == "/" || f == "neg";
}

bool Term::is_arith() const {
  return kind_ == Kind::kCompound && IsArithFunctor(name_);
}

bool Term::is_ground() const {
  bool ground = true;
  ForEachVar(*this, [&](const Term&) { ground = false; });
  return ground;
}

bool operator==(const Term& a, const Term& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case Term::Kind::kVar:
      return a.var_id_ == b.var_id_;
    case Term::Kind::kNum:
      return a.num_ == b.num_;
    case Term::Kind::kSym:
      return a.name_ == b.name_;
    case Term::Kind::kCompound:
      if (a.name_ != b.name_ || a.arity() != b.arity()) return false;
      for (size_t i = 0; i < a.arity(); ++i) {
        if (a.arg(i) != b.arg(i)) return false;
      }
      return true;
  }
  return false;
}

bool operator<(const Term& a, const Term& b) {
  if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
  switch (a.kind_) {
    case Term::Kind::kVar:
      return a.var_id_ < b.var_id_;
    case Term::Kind::kNum:
      return a.num_ < b.num_;
    case Term::Kind::kSym:
      return a.name_ < b.name_;
    case Term::Kind::kCompound:
      if (a.name_ != b.name_) return a.name_ < b.name_;
      if (a.arity() != b.arity()) return a.arity() < b.arity();
      for (size_t i = 0; i < a.arity(); ++i) {
        if (a.arg(i) != b.arg(i)) return a.arg(i) < b.arg(i);
      }
      return false;
  }
  return false;
}

namespace {

bool IsPlainAtom(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

int Precedence(const Term& t) {
  if (!t.is_arith()) return 3;
  const std::string& f = t.name();
  if (f == "neg") return 2;
  if (f == "*" || f == "/") return 1;
  return 0;
}

bool IsRelation(const std::string& f) {
  return f == "#=" || f == "#\\=" || f == "#<" || f == "#=<" || f == "#>" || f == "#>=";
}

void Render(const Term& t, std::ostringstream& out);

void RenderOperand(const Term& t, int min_prec, std::ostringstream& out) {
  bool paren = Precedence(t) < min_prec ||
               (t.is_num() && t.num() < 0 && min_prec > 0) ||
               (t.is_num() && t.num().get_den() != 1 && min_prec > 1);
  if (paren) out << '(';
  Render(t, out);
  if (paren) out << ')';
}

void Render(const Term& t, std::ostringstream& out) {
  switch (t.kind()) {
    case Term::Kind::kVar:
      if (!t.name().empty()) {
        out << t.name();
      } else {
        out << "_G" << t.var_id();
      }
      return;
    case Term::Kind::kNum:
      out << ToString(t.num());
      return;
    case Term::Kind::kSym:
      if (IsPlainAtom(t.name())) {
        out << t.name();
      } else {
        out << '\'';
        for (char c : t.name()) {
          if (c == '\'' || c == '\\') out << '\\';
          out << c;
        }
        out << '\'';
      }
      return;
    case Term::Kind::kCompound:
      break;
  }
  if (t.arity() == 2 && IsRelation(t.name())) {
    Render(t.arg(0), out);
    out << ' ' << t.name() << ' ';
    Render(t.arg(1), out);
    return;
  }
  if (t.is_arith()) {
    const std::string& f = t.name();
    if (f == "neg") {
      out << '-';
      RenderOperand(t.arg(0), 2, out);
      return;
    }
    int prec = Precedence(t);
    RenderOperand(t.arg(0), prec, out);
    out << ' ' << f << ' ';
    // Right operand binds tighter: a - (b - c), a / (b * c).
    RenderOperand(t.arg(1), prec + 1, out);
    return;
  }
  Render(Term::Sym(t.name()), out);
  out << '(';
  for (size_t i = 0; i < t.arity(); ++i) {
    if (i) out << ", ";
    Render(t.arg(i), out);
  }
  out << ')';
}

}  // namespace

std::string ToString(const Term& t) {
  std::ostringstream out;
  Render(t, out);
  return out.str();
}

Term OffsetVars(const Term& t, int offset) {
  if (t.is_var()) return Term::Var(t.var_id() + offset, t.name());
  if (!t.is_compound()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const Term& a : t.args()) args.push_back(OffsetVars(a, offset));
  return Term::Compound(t.name(), std::move(args));
}

}  // namespace ecrv
