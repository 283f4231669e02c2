// Tokenizer and recursive-descent parser for the clause syntax.

#include <cctype>
#include <map>
#include <sstream>

#include "ecrv/model.hpp"

namespace ecrv {

ParseError::ParseError(SourcePos pos, std::string message, std::vector<std::string> expected)
    : std::runtime_error([&] {
        std::ostringstream out;
        out << pos.line << ":" << pos.col << ": " << message;
        if (!expected.empty()) {
          out << " (expected ";
          for (size_t i = 0; i < expected.size(); ++i) {
            if (i) out << ", ";
            out << expected[i];
          }
          out << ")";
        }
        return out.str();
      }()),
      pos_(pos),
      detail_(std::move(message)),
      expected_(std::move(expected)) {}

namespace {

enum class Tok { kAtom, kVar, kNumber, kString, kPunct, kEnd };

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  std::vector<Token> Run() {
    std::vector<Token> out;
    while (true) {
      SkipSpace();
      SourcePos pos{line_, col_};
      if (i_ >= text_.size()) {
        out.push_back({Tok::kEnd, "", pos});
        return out;
      }
      char c = text_[i_];
      if (std::islower(static_cast<unsigned char>(c))) {
        out.push_back({Tok::kAtom, Ident(), pos});
      } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back({Tok::kVar, Ident(), pos});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        out.push_back({Tok::kNumber, Number(), pos});
      } else if (c == '\'' || c == '"') {
        out.push_back({Tok::kString, Quoted(c, pos), pos});
      } else {
        out.push_back({Tok::kPunct, Punct(pos), pos});
      }
    }
  }

 private:
  void Advance() {
    if (text_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void SkipSpace() {
    while (i_ < text_.size()) {
      char c = text_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        Advance();
      } else if (c == '%') {
        while (i_ < text_.size() && text_[i_] != '\n') Advance();
      } else {
        return;
      }
    }
  }

  std::string Ident() {
    std::string s;
    while (i_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[i_])) || text_[i_] == '_')) {
      s += text_[i_];
      Advance();
    }
    return s;
  }

  std::string Number() {
    std::string s;
    while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) {
      s += text_[i_];
      Advance();
    }
    // A '.' is a decimal point only when a digit follows; otherwise it ends
    // the clause.
    if (i_ + 1 < text_.size() && text_[i_] == '.' &&
        std::isdigit(static_cast<unsigned char>(text_[i_ + 1]))) {
      s += '.';
      Advance();
      while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) {
        s += text_[i_];
        Advance();
      }
    }
    return s;
  }

  std::string Quoted(char quote, SourcePos pos) {
    Advance();
    std::string s;
    while (i_ < text_.size() && text_[i_] != quote) {
      if (text_[i_] == '\\' && i_ + 1 < text_.size()) Advance();
      s += text_[i_];
      Advance();
    }
    if (i_ >= text_.size()) throw ParseError(pos, "unterminated quoted text");
    Advance();
    return s;
  }

  std::string Punct(SourcePos pos) {
    static const char* kMulti[] = {"#\\=", "#=<", "#>=", "#=", "#<", "#>", ":-", "\\+"};
    for (const char* m : kMulti) {
      std::string_view sv(m);
      if (text_.compare(i_, sv.size(), sv) == 0) {
        for (size_t k = 0; k < sv.size(); ++k) Advance();
        return std::string(sv);
      }
    }
    char c = text_[i_];
    if (std::string_view("(),.+-*/[]").find(c) != std::string_view::npos) {
      Advance();
      return std::string(1, c);
    }
    throw ParseError(pos, std::string("unexpected character '") + c + "'");
  }

  const std::string& text_;
  size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(Lexer(text).Run()) {}

  bool AtEnd() const { return Peek().kind == Tok::kEnd; }

  Clause ParseClause() {
    BeginClause();
    Clause c;
    c.pos = Peek().pos;
    c.head = ParseExpr();
    if (c.head.is_var() || c.head.is_num() || c.head.is_arith()) {
      throw ParseError(c.pos, "clause head must be an atom or compound term");
    }
    if (IsPunct(":-")) {
      Next();
      c.body = ParseBody();
    }
    Expect(".");
    c.var_count = static_cast<int>(var_names_.size());
    c.var_names = var_names_;
    return c;
  }

  std::vector<Literal> ParseGoalText(std::vector<std::string>* names) {
    BeginClause();
    std::vector<Literal> body = ParseBody();
    if (IsPunct(".")) Next();
    if (!AtEnd()) throw ParseError(Peek().pos, "unexpected trailing input", {"end of input"});
    if (names) *names = var_names_;
    return body;
  }

  Term ParseSingleTerm() {
    BeginClause();
    Term t = ParseExpr();
    if (Peek().kind == Tok::kPunct && IsConstraintOp(Peek().text)) {
      std::string op = Next().text;
      t = Term::Compound(op, {t, ParseExpr()});
    }
    if (IsPunct(".")) Next();
    if (!AtEnd()) throw ParseError(Peek().pos, "unexpected trailing input", {"end of input"});
    return t;
  }

 private:
  const Token& Peek() const { return toks_[pos_]; }
  Token Next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool IsPunct(std::string_view p) const {
    return Peek().kind == Tok::kPunct && Peek().text == p;
  }

  void Expect(std::string_view p) {
    if (!IsPunct(p)) {
      const Token& t = Peek();
      std::string got = t.kind == Tok::kEnd ? "end of input" : "'" + t.text + "'";
      throw ParseError(t.pos, "unexpected " + got, {"'" + std::string(p) + "'"});
    }
    Next();
  }

  void BeginClause() {
    vars_.clear();
    var_names_.clear();
  }

  Term MakeVar(const std::string& name) {
    if (name == "_") {
      int id = static_cast<int>(var_names_.size());
      var_names_.push_back("_");
      return Term::Var(id, "_");
    }
    auto it = vars_.find(name);
    if (it != vars_.end()) return Term::Var(it->second, name);
    int id = static_cast<int>(var_names_.size());
    vars_[name] = id;
    var_names_.push_back(name);
    return Term::Var(id, name);
  }

  std::vector<Literal> ParseBody() {
    std::vector<Literal> body;
    body.push_back(ParseLiteral());
    while (IsPunct(",")) {
      Next();
      body.push_back(ParseLiteral());
    }
    return body;
  }

  Literal ParseLiteral() {
    SourcePos pos = Peek().pos;
    bool negated = false;
    if ((Peek().kind == Tok::kAtom && Peek().text == "not" &&
         toks_[pos_ + 1].kind == Tok::kAtom) ||
        IsPunct("\\+")) {
      Next();
      negated = true;
    }
    Term lhs = ParseExpr();
    if (Peek().kind == Tok::kPunct && IsConstraintOp(Peek().text)) {
      std::string op = Next().text;
      Term rhs = ParseExpr();
      if (negated) throw ParseError(pos, "negated constraints are not supported; use the complementary operator");
      return Literal::Classify(Term::Compound(op, {lhs, rhs}), false, pos);
    }
    if (lhs.is_var() || lhs.is_num() || lhs.is_arith()) {
      throw ParseError(pos, "expected a literal",
                       {"atom", "constraint operator"});
    }
    if (negated && lhs.functor() == "not" && lhs.arity() == 1) lhs = lhs.arg(0);
    if (!negated && lhs.functor() == "not" && lhs.arity() == 1) {
      negated = true;
      lhs = lhs.arg(0);
    }
    return Literal::Classify(lhs, negated, pos);
  }

  Term ParseExpr() {
    Term t = ParseProduct();
    while (IsPunct("+") || IsPunct("-")) {
      SourcePos pos = Peek().pos;
      std::string op = Next().text;
      t = Fold(op, {t, ParseProduct()}, pos);
    }
    return t;
  }

  Term ParseProduct() {
    Term t = ParseUnary();
    while (IsPunct("*") || IsPunct("/")) {
      SourcePos pos = Peek().pos;
      std::string op = Next().text;
      t = Fold(op, {t, ParseUnary()}, pos);
    }
    return t;
  }

  Term ParseUnary() {
    if (IsPunct("-")) {
      SourcePos pos = Peek().pos;
      Next();
      return Fold("neg", {ParseUnary()}, pos);
    }
    return ParsePrimary();
  }

  Term ParsePrimary() {
    const Token& t = Peek();
    switch (t.kind) {
      case Tok::kNumber: {
        Token tok = Next();
        auto q = ParseRational(tok.text);
        if (!q) throw ParseError(tok.pos, "malformed number '" + tok.text + "'");
        return Term::Num(*q);
      }
      case Tok::kVar:
        return MakeVar(Next().text);
      case Tok::kString:
        return Term::Sym(Next().text);
      case Tok::kAtom: {
        std::string name = Next().text;
        if (!IsPunct("(")) return Term::Sym(name);
        Next();
        std::vector<Term> args;
        args.push_back(ParseExpr());
        while (IsPunct(",")) {
          Next();
          args.push_back(ParseExpr());
        }
        Expect(")");
        return Term::Compound(name, std::move(args));
      }
      case Tok::kPunct:
        if (t.text == "(") {
          Next();
          Term inner = ParseExpr();
          Expect(")");
          return inner;
        }
        break;
      case Tok::kEnd:
        break;
    }
    std::string got = t.kind == Tok::kEnd ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.pos, "unexpected " + got, {"atom", "variable", "number", "'('"});
  }

  // Folds arithmetic on numeric literals so `1/3` and `-2` are numbers.
  static Term Fold(const std::string& op, std::vector<Term> args, SourcePos pos) {
    bool all_num = true;
    for (const Term& a : args) all_num = all_num && a.is_num();
    if (!all_num) return Term::Compound(op, std::move(args));
    if (op == "neg") return Term::Num(-args[0].num());
    const Rational& a = args[0].num();
    const Rational& b = args[1].num();
    if (op == "+") return Term::Num(a + b);
    if (op == "-") return Term::Num(a - b);
    if (op == "*") return Term::Num(a * b);
    if (b == 0) throw ParseError(pos, "division by zero");
    return Term::Num(a / b);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::map<std::string, int> vars_;
  std::vector<std::string> var_names_;
};

}  // namespace

bool IsConstraintOp(const std::string& f) {
  return f == "#=" || f == "#\\=" || f == "#<" || f == "#=<" || f == "#>" || f == "#>=";
}

clpq::LinConstraint::Op ConstraintOp(const std::string& f) {
  using Op = clpq::LinConstraint::Op;
  if (f == "#=") return Op::kEq;
  if (f == "#\\=") return Op::kNe;
  if (f == "#<") return Op::kLt;
  if (f == "#=<") return Op::kLe;
  if (f == "#>") return Op::kGt;
  return Op::kGe;
}

Literal Literal::Classify(Term atom, bool negated, SourcePos pos) {
  Literal l;
  l.negated = negated;
  l.pos = pos;
  std::string f = atom.functor();
  if (IsConstraintOp(f) && atom.arity() == 2) {
    l.kind = Kind::kConstraint;
  } else if (f == "holdsAt" && atom.arity() == 2) {
    l.kind = Kind::kHolds;
  } else if (f == "happens" && atom.arity() == 2) {
    l.kind = Kind::kHappens;
  } else if (f == "initiallyP" && atom.arity() == 1) {
    l.kind = Kind::kInitiallyP;
  } else {
    l.kind = Kind::kUser;
  }
  l.atom = std::move(atom);
  return l;
}

std::vector<Clause> ParseClauses(const std::string& text) {
  Parser p(text);
  std::vector<Clause> out;
  while (!p.AtEnd()) out.push_back(p.ParseClause());
  return out;
}

std::vector<Literal> ParseGoal(const std::string& text, std::vector<std::string>* names) {
  Parser p(text);
  if (p.AtEnd()) throw ParseError({1, 1}, "empty goal", {"literal"});
  return p.ParseGoalText(names);
}

Term ParseTerm(const std::string& text) {
  Parser p(text);
  return p.ParseSingleTerm();
}

}  // namespace ecrv
