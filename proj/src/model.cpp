#include "ecrv/model.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace ecrv {

NonStratifiedError::NonStratifiedError(std::vector<std::string> cycle)
    : std::runtime_error([&] {
        std::string s = "non-stratified negation through cycle:";
        for (const auto& p : cycle) s += " " + p;
        return s;
      }()),
      cycle_(std::move(cycle)) {}

std::string SeverityName(Diagnostic::Severity s) {
  switch (s) {
    case Diagnostic::Severity::kError:
      return "error";
    case Diagnostic::Severity::kWarning:
      return "warning";
    case Diagnostic::Severity::kInfo:
      return "info";
  }
  return "error";
}

std::string ToString(const Literal& l) {
  std::string s = l.negated ? "not " : "";
  if (l.kind == Literal::Kind::kConstraint) {
    return s + ToString(l.atom.arg(0)) + " " + l.atom.functor() + " " + ToString(l.atom.arg(1));
  }
  return s + ToString(l.atom);
}

std::string ToString(const Clause& c) {
  std::string s = ToString(c.head);
  for (size_t i = 0; i < c.body.size(); ++i) {
    s += i == 0 ? " :-\n    " : ",\n    ";
    s += ToString(c.body[i]);
  }
  return s + ".";
}

namespace {

Clause::Kind ClassifyHead(const Term& head) {
  std::string f = head.functor();
  size_t n = head.arity();
  if (f == "fluent" && n == 1) return Clause::Kind::kFluentDecl;
  if (f == "event" && n == 1) return Clause::Kind::kEventDecl;
  if (f == "initiates" && n == 3) return Clause::Kind::kInitiates;
  if (f == "terminates" && n == 3) return Clause::Kind::kTerminates;
  if (f == "releases" && n == 3) return Clause::Kind::kReleases;
  if (f == "trajectory" && n == 4) return Clause::Kind::kTrajectory;
  if (f == "happens" && n == 2) return Clause::Kind::kTrigger;
  if (f == "initiallyP" && n == 1) return Clause::Kind::kInitiallyP;
  return Clause::Kind::kUser;
}

void DeclareImplicit(DomainModel& m, const Term& f) {
  std::string name = f.functor();
  if (name.empty() || m.fluents.count(name)) return;
  m.fluents[name] = {name, f.arity(), f.arity() == 1, true};
}

}  // namespace

std::vector<const Clause*> DomainModel::OfKind(Clause::Kind k) const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses) {
    if (c.kind == k) out.push_back(&c);
  }
  return out;
}

size_t DomainModel::CountKind(Clause::Kind k) const {
  return static_cast<size_t>(
      std::count_if(clauses.begin(), clauses.end(), [&](const Clause& c) { return c.kind == k; }));
}

bool DomainModel::IsFunctional(const std::string& name) const {
  auto it = fluents.find(name);
  return it != fluents.end() && it->second.functional;
}

bool DomainModel::HasSnapshot(const std::string& fluent) const {
  bool governed = false, initial = false;
  for (const auto& c : clauses) {
    if (c.kind == Clause::Kind::kTrajectory && c.functional_fluent().functor() == fluent) {
      governed = true;
    }
    if (c.kind == Clause::Kind::kInitiallyP && c.head.arg(0).functor() == fluent) {
      initial = true;
    }
    if (c.kind == Clause::Kind::kInitiates && c.fluent().functor() == fluent) return false;
  }
  return governed && initial;
}

std::vector<Term> DomainModel::InitialFacts() const {
  std::vector<Term> out;
  for (const auto& c : clauses) {
    if (c.kind == Clause::Kind::kInitiallyP && c.body.empty()) out.push_back(c.head.arg(0));
  }
  return out;
}

DomainModel ParseDomain(const std::string& text) {
  DomainModel m;
  m.clauses = ParseClauses(text);
  for (size_t i = 0; i < m.clauses.size(); ++i) {
    Clause& c = m.clauses[i];
    c.id = static_cast<int>(i);
    c.kind = ClassifyHead(c.head);
    if (c.kind == Clause::Kind::kFluentDecl) {
      const Term& f = c.head.arg(0);
      if (f.is_sym() || f.is_compound()) {
        std::string name = f.functor();
        if (!m.fluents.count(name) || m.fluents[name].implicit) {
          m.fluents[name] = {name, f.arity(), f.arity() == 1, false};
        }
      }
    } else if (c.kind == Clause::Kind::kEventDecl) {
      const Term& e = c.head.arg(0);
      if (e.is_sym() || e.is_compound()) {
        if (!m.events.count(e.functor())) m.events[e.functor()] = {e.functor(), e.arity()};
      }
    }
  }
  // initiallyP/1 references declare parameter fluents (e.g. vtbi(V)).
  for (const auto& c : m.clauses) {
    if (c.kind == Clause::Kind::kInitiallyP) DeclareImplicit(m, c.head.arg(0));
    for (const auto& l : c.body) {
      if (l.kind == Literal::Kind::kInitiallyP) DeclareImplicit(m, l.atom.arg(0));
    }
  }
  return m;
}

Narrative ParseNarrative(const std::string& text) {
  Narrative n;
  bool have_horizon = false;
  for (const Clause& c : ParseClauses(text)) {
    if (!c.body.empty()) throw ParseError(c.pos, "narrative clauses must be facts");
    const std::string f = c.head.functor();
    if (f == "horizon" && c.head.arity() == 1) {
      if (have_horizon) throw ParseError(c.pos, "duplicate horizon");
      if (!c.head.arg(0).is_num()) throw ParseError(c.pos, "horizon must be a rational number");
      n.horizon = c.head.arg(0).num();
      if (n.horizon < 0) throw NegativeTimeError("negative horizon " + ToString(n.horizon));
      have_horizon = true;
    } else if (f == "happens" && c.head.arity() == 2) {
      const Term& e = c.head.arg(0);
      const Term& t = c.head.arg(1);
      if (!e.is_ground() || e.is_num()) throw ParseError(c.pos, "event must be ground");
      if (!t.is_num()) throw ParseError(c.pos, "time must be a rational number");
      if (t.num() < 0) {
        throw NegativeTimeError(std::to_string(c.pos.line) + ":" + std::to_string(c.pos.col) +
                                ": negative time " + ToString(t.num()));
      }
      n.occurrences.push_back({e, t.num(), c.pos});
    } else {
      throw ParseError(c.pos, "unexpected narrative clause " + f, {"happens/2", "horizon/1"});
    }
  }
  if (!have_horizon) throw MissingHorizonError("narrative has no horizon(...) fact");
  for (const auto& o : n.occurrences) {
    if (o.time > n.horizon) {
      throw ParseError(o.pos, "occurrence time " + ToString(o.time) + " beyond horizon");
    }
  }
  std::stable_sort(n.occurrences.begin(), n.occurrences.end(),
                   [](const Occurrence& a, const Occurrence& b) { return a.time < b.time; });
  return n;
}

std::string Serialize(const DomainModel& m) {
  std::string out;
  for (const auto& c : m.clauses) out += ToString(c) + "\n";
  return out;
}

std::string Serialize(const Narrative& n) {
  std::string out;
  for (const auto& o : n.occurrences) {
    out += "happens(" + ToString(o.event) + ", " + ToString(o.time) + ").\n";
  }
  out += "horizon(" + ToString(n.horizon) + ").\n";
  return out;
}

bool StructurallyEqual(const DomainModel& a, const DomainModel& b) {
  if (a.clauses.size() != b.clauses.size()) return false;
  for (size_t i = 0; i < a.clauses.size(); ++i) {
    const Clause& x = a.clauses[i];
    const Clause& y = b.clauses[i];
    if (x.kind != y.kind || x.head != y.head || x.var_count != y.var_count ||
        x.body.size() != y.body.size()) {
      return false;
    }
    for (size_t j = 0; j < x.body.size(); ++j) {
      if (x.body[j].kind != y.body[j].kind || x.body[j].negated != y.body[j].negated ||
          x.body[j].atom != y.body[j].atom) {
        return false;
      }
    }
  }
  return a.fluents.size() == b.fluents.size() && a.events.size() == b.events.size();
}

// ------------------------------------------------------------- validation

namespace {

class Validator {
 public:
  explicit Validator(const DomainModel& m) : m_(m) {
    for (const auto& c : m.clauses) {
      if (c.kind == Clause::Kind::kUser) defined_.insert(Key(c.head));
    }
  }

  std::vector<Diagnostic> Run() {
    CheckDeclarations();
    for (const auto& c : m_.clauses) CheckClause(c);
    return std::move(out_);
  }

 private:
  static std::string Key(const Term& t) { return t.functor() + "/" + std::to_string(t.arity()); }

  void Error(SourcePos pos, std::string msg) {
    out_.push_back({Diagnostic::Severity::kError, std::move(msg), pos});
  }
  void Warn(SourcePos pos, std::string msg) {
    out_.push_back({Diagnostic::Severity::kWarning, std::move(msg), pos});
  }

  void CheckDeclarations() {
    std::map<std::string, size_t> fl, ev;
    for (const auto& c : m_.clauses) {
      if (c.kind == Clause::Kind::kFluentDecl || c.kind == Clause::Kind::kEventDecl) {
        const Term& t = c.head.arg(0);
        if (!(t.is_sym() || t.is_compound())) {
          Error(c.pos, "declaration needs a name");
          continue;
        }
        auto& seen = c.kind == Clause::Kind::kFluentDecl ? fl : ev;
        auto [it, fresh] = seen.emplace(t.functor(), t.arity());
        if (!fresh && it->second != t.arity()) {
          Error(c.pos, "arity conflict for " + t.functor() + ": declared " +
                           std::to_string(it->second) + " and " + std::to_string(t.arity()));
        }
      }
    }
  }

  void CheckFluent(const Term& f, SourcePos pos) {
    if (f.is_var()) return;
    std::string name = f.functor();
    auto it = m_.fluents.find(name);
    if (name.empty() || it == m_.fluents.end()) {
      Error(pos, "undeclared fluent " + (name.empty() ? ToString(f) : name));
      return;
    }
    if (it->second.arity != f.arity()) {
      Error(pos, "arity conflict for fluent " + name + ": declared " +
                     std::to_string(it->second.arity) + ", used " + std::to_string(f.arity()));
    }
  }

  void CheckEvent(const Term& e, SourcePos pos) {
    if (e.is_var()) return;
    std::string name = e.functor();
    auto it = m_.events.find(name);
    if (name.empty() || it == m_.events.end()) {
      Error(pos, "undeclared event " + (name.empty() ? ToString(e) : name));
      return;
    }
    if (it->second.arity != e.arity()) {
      Error(pos, "arity conflict for event " + name + ": declared " +
                     std::to_string(it->second.arity) + ", used " + std::to_string(e.arity()));
    }
  }

  // Variables bound by non-constraint literals act as data (parameters) and
  // may multiply other expressions without breaking linearity.
  static std::set<int> DataVars(const Clause& c) {
    std::set<int> data;
    auto add = [&](const Term& t) { ForEachVar(t, [&](const Term& v) { data.insert(v.var_id()); }); };
    for (const auto& l : c.body) {
      switch (l.kind) {
        case Literal::Kind::kHolds:
          add(l.atom.arg(0));
          break;
        case Literal::Kind::kHappens:
          add(l.atom.arg(0));
          if (l.atom.arg(1).is_var()) add(l.atom.arg(1));
          break;
        case Literal::Kind::kInitiallyP:
        case Literal::Kind::kUser:
          if (!l.negated) add(l.atom);
          break;
        case Literal::Kind::kConstraint:
          break;
      }
    }
    return data;
  }

  // True if `t` is linear given that `data` variables are constants.
  static bool Linear(const Term& t, const std::set<int>& data) {
    if (!t.is_arith()) return true;
    auto constant = [&](const Term& x) {
      bool ok = true;
      ForEachVar(x, [&](const Term& v) { ok = ok && data.count(v.var_id()); });
      return ok;
    };
    for (const Term& a : t.args()) {
      if (!Linear(a, data)) return false;
    }
    if (t.name() == "*") return constant(t.arg(0)) || constant(t.arg(1));
    if (t.name() == "/") return constant(t.arg(1));
    return true;
  }

  void CheckClause(const Clause& c) {
    switch (c.kind) {
      case Clause::Kind::kInitiates:
      case Clause::Kind::kTerminates:
      case Clause::Kind::kReleases:
        CheckEvent(c.event(), c.pos);
        CheckFluent(c.fluent(), c.pos);
        break;
      case Clause::Kind::kTrajectory: {
        CheckFluent(c.state_fluent(), c.pos);
        CheckFluent(c.functional_fluent(), c.pos);
        std::string target = c.functional_fluent().functor();
        if (m_.IsFluent(target) && !m_.IsFunctional(target)) {
          Error(c.pos, "trajectory target " + target + " is not a functional fluent");
        }
        break;
      }
      case Clause::Kind::kTrigger:
        CheckEvent(c.head.arg(0), c.pos);
        break;
      case Clause::Kind::kInitiallyP:
        CheckFluent(c.head.arg(0), c.pos);
        break;
      default:
        break;
    }
    for (const auto& l : c.body) {
      switch (l.kind) {
        case Literal::Kind::kHolds:
          CheckFluent(l.atom.arg(0), l.pos);
          break;
        case Literal::Kind::kHappens:
          CheckEvent(l.atom.arg(0), l.pos);
          break;
        case Literal::Kind::kInitiallyP:
          CheckFluent(l.atom.arg(0), l.pos);
          break;
        case Literal::Kind::kUser:
          if (!defined_.count(Key(l.atom))) {
            Warn(l.pos, "undefined predicate " + Key(l.atom));
          }
          break;
        case Literal::Kind::kConstraint:
          break;
      }
    }
    CheckHeadVars(c);
    CheckLinearity(c);
  }

  void CheckHeadVars(const Clause& c) {
    if (c.kind == Clause::Kind::kFluentDecl || c.kind == Clause::Kind::kEventDecl) return;
    std::set<int> time_vars;
    auto mark_time = [&](const Term& t) {
      if (t.is_var()) time_vars.insert(t.var_id());
    };
    switch (c.kind) {
      case Clause::Kind::kInitiates:
      case Clause::Kind::kTerminates:
      case Clause::Kind::kReleases:
        mark_time(c.head.arg(2));
        break;
      case Clause::Kind::kTrajectory:
        mark_time(c.head.arg(1));
        mark_time(c.head.arg(3));
        break;
      case Clause::Kind::kTrigger:
        mark_time(c.head.arg(1));
        break;
      default:
        break;
    }
    std::set<int> body_vars;
    for (const auto& l : c.body) {
      ForEachVar(l.atom, [&](const Term& v) { body_vars.insert(v.var_id()); });
    }
    std::set<int> reported;
    ForEachVar(c.head, [&](const Term& v) {
      int id = v.var_id();
      if (v.name() == "_" || time_vars.count(id) || body_vars.count(id) || reported.count(id)) {
        return;
      }
      // Initiates/terminates heads may leave event/fluent arguments open to be
      // matched against the narrative.
      if (c.kind == Clause::Kind::kInitiates || c.kind == Clause::Kind::kTerminates ||
          c.kind == Clause::Kind::kReleases) {
        bool in_event = false;
        ForEachVar(c.event(), [&](const Term& w) { in_event = in_event || w.var_id() == id; });
        if (in_event) return;
      }
      reported.insert(id);
      Error(c.pos, "head variable " + v.name() + " does not appear in the body");
    });
  }

  void CheckLinearity(const Clause& c) {
    std::set<int> data = DataVars(c);
    for (const auto& l : c.body) {
      if (l.kind != Literal::Kind::kConstraint) continue;
      if (!Linear(l.atom.arg(0), data) || !Linear(l.atom.arg(1), data)) {
        Error(l.pos, "non-linear expression " + ToString(l));
      }
    }
  }

  const DomainModel& m_;
  std::set<std::string> defined_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> ValidateModel(const DomainModel& m) { return Validator(m).Run(); }

bool HasErrors(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::kError; });
}

void CheckStratification(const DomainModel& m) {
  // Dependency graph over user predicates. Event Calculus predicates are
  // time-indexed and excluded: their recursion always refers to earlier
  // instants.
  std::map<std::string, std::vector<std::pair<std::string, bool>>> edges;
  auto key = [](const Term& t) { return t.functor() + "/" + std::to_string(t.arity()); };
  for (const auto& c : m.clauses) {
    if (c.kind != Clause::Kind::kUser) continue;
    std::string head = key(c.head);
    edges[head];
    for (const auto& l : c.body) {
      if (l.kind == Literal::Kind::kUser) edges[head].push_back({key(l.atom), l.negated});
    }
  }
  // Tarjan SCC.
  std::map<std::string, int> index, low;
  std::map<std::string, bool> on_stack;
  std::vector<std::string> stack;
  std::map<std::string, int> component;
  int counter = 0, comp_count = 0;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const auto& [w, neg] : edges[v]) {
      if (!index.count(w)) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      while (true) {
        std::string w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component[w] = comp_count;
        if (w == v) break;
      }
      ++comp_count;
    }
  };
  std::vector<std::string> nodes;
  for (const auto& [v, e] : edges) nodes.push_back(v);
  for (const auto& v : nodes) {
    if (!index.count(v)) visit(v);
  }
  for (const auto& [v, es] : edges) {
    for (const auto& [w, neg] : es) {
      if (neg && component[v] == component[w]) {
        std::vector<std::string> cycle;
        for (const auto& [x, comp] : component) {
          if (comp == component[v]) cycle.push_back(x.substr(0, x.rfind('/')));
        }
        throw NonStratifiedError(cycle);
      }
    }
  }
}

}  // namespace ecrv
