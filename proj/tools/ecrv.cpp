// ecrv: command-line front end.
//
// Exit codes: 0 pass, 1 finding (inconsistent scenario, violation, no
// answer, discrepancy), 2 error.

#include <unistd.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ecrv/abduce.hpp"
#include "ecrv/oracle.hpp"
#include "ecrv/validate.hpp"

namespace {

using namespace ecrv;
using nlohmann::json;

constexpr int kPass = 0;
constexpr int kFinding = 1;
constexpr int kError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  bool json = false;
  bool proof = false;
  bool stats = false;
  bool no_cache = false;
  int zeno_bound = 1000;
  int depth = 10000;

  EngineOptions Options() const {
    EngineOptions o;
    o.zeno_bound = zeno_bound;
    o.depth = depth;
    o.cache = !no_cache;
    return o;
  }
};

bool Color() {
  const char* env = std::getenv("ECRV_COLOR");
  if (env && std::string(env) == "0") return false;
  return isatty(STDOUT_FILENO);
}

std::string Paint(const std::string& s, const char* code) {
  return Color() ? std::string("\033[") + code + "m" + s + "\033[0m" : s;
}

std::string ReadFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::shared_ptr<const DomainModel> LoadModel(const std::string& path) {
  auto m = std::make_shared<DomainModel>(ParseDomain(ReadFile(path)));
  std::vector<Diagnostic> ds = ValidateModel(*m);
  if (HasErrors(ds)) {
    std::string msg = path + ": invalid model";
    for (const auto& d : ds) {
      if (d.severity == Diagnostic::Severity::kError) {
        msg += "\n  " + std::to_string(d.pos.line) + ":" + std::to_string(d.pos.col) + ": " + d.message;
      }
    }
    throw UsageError(msg);
  }
  return m;
}

Narrative LoadNarrative(const std::string& path) { return ParseNarrative(ReadFile(path)); }

json StatsJson(const QueryStats& s) {
  return {{"expansions", s.expansions},
          {"cache_hits", s.cache.hits},
          {"cache_misses", s.cache.misses},
          {"stored_failures", s.cache.stored_failures}};
}

std::string StatsText(const QueryStats& s) {
  return "expansions " + std::to_string(s.expansions) + ", cache hits " + std::to_string(s.cache.hits) +
         ", misses " + std::to_string(s.cache.misses) + ", stored failures " +
         std::to_string(s.cache.stored_failures) + "\n";
}

void Print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string VerdictText(Verdict v) {
  std::string s = VerdictName(v);
  switch (v) {
    case Verdict::kConsistent:
    case Verdict::kPass:
      return Paint(s, "32");
    case Verdict::kError:
      return Paint(s, "31;1");
    default:
      return Paint(s, "31");
  }
}

// Report text with the verdict colored and the proofs only on request.
std::string ReportText(const Report& r, const Flags& f) {
  std::string text = r.ToText();
  std::string name = VerdictName(r.verdict);
  if (auto at = text.find(name); at != std::string::npos) text.replace(at, name.size(), VerdictText(r.verdict));
  if (f.proof) {
    for (const auto& p : r.proofs) text += ProofToText(*p);
  }
  if (f.stats) text += StatsText(r.stats);
  return text;
}

int ExitFor(const std::vector<Report>& reports) {
  int code = kPass;
  for (const Report& r : reports) {
    if (r.verdict == Verdict::kError) return kError;
    if (r.verdict == Verdict::kInconsistent || r.verdict == Verdict::kViolation) code = kFinding;
  }
  return code;
}

// ------------------------------------------------------------------ check

struct CheckArgs {
  std::string model;
  std::vector<std::string> files;
  std::string property;
};

int Check(const CheckArgs& a, const Flags& f) {
  auto model = LoadModel(a.model);
  std::vector<Report> reports;
  for (const std::string& path : a.files) {
    bool scenario = path.size() > 4 && path.substr(path.size() - 4) == ".scn";
    if (scenario) {
      reports.push_back(CheckScenario(model, ParseScenario(ReadFile(path), path), f.Options()));
    } else {
      if (a.property.empty()) throw UsageError(path + ": a narrative needs --property");
      Report r = CheckProperty(model, LoadNarrative(path), ParseProperty(a.property), f.Options());
      r.name = path;
      reports.push_back(std::move(r));
    }
  }
  if (f.json) {
    json j = json::array();
    for (const Report& r : reports) {
      json x = r.ToJson();
      if (!f.proof) {
        x.erase("proofs");
        for (auto& res : x["results"]) res.erase("proof");
      }
      if (!f.stats) x.erase("stats");
      j.push_back(std::move(x));
    }
    Print({{"reports", j}});
  } else {
    for (const Report& r : reports) std::cout << ReportText(r, f);
  }
  return ExitFor(reports);
}

// ------------------------------------------------------------------ query

void RequireDeclared(const DomainModel& m, const std::vector<Literal>& goal) {
  for (const Literal& l : goal) {
    if (l.kind != Literal::Kind::kHolds) continue;
    const Term& fl = l.atom.arg(0);
    if (fl.is_var()) continue;
    if (!m.IsFluent(fl.functor())) throw UsageError("undeclared fluent " + fl.functor());
  }
}

struct QueryArgs {
  std::string model, narrative, goal;
};

int RunQuery(const QueryArgs& a, const Flags& f) {
  auto model = LoadModel(a.model);
  std::vector<std::string> names;
  std::vector<Literal> goal = ParseGoal(a.goal, &names);
  RequireDeclared(*model, goal);
  ClosedTimeline tl = TriggerClosure(model, LoadNarrative(a.narrative), f.Options());
  if (tl.options.use_checkpoints) Checkpoint(tl);
  QueryStats stats;
  std::vector<Answer> answers = Query(tl, goal, names, &stats);
  if (f.json) {
    json j;
    j["answers"] = json::array();
    for (const Answer& ans : answers) {
      json x;
      json b = json::object();
      for (const auto& [n, t] : ans.bindings) b[n] = ToString(t);
      x["bindings"] = b;
      x["residual"] = ans.ResidualText();
      if (f.proof) {
        x["proof"] = json::array();
        for (const auto& p : ans.proofs) x["proof"].push_back(ProofToJson(*p));
      }
      j["answers"].push_back(std::move(x));
    }
    if (f.stats) j["stats"] = StatsJson(stats);
    Print(j);
  } else {
    if (answers.empty()) std::cout << Paint("no", "31") << "\n";
    for (size_t i = 0; i < answers.size(); ++i) {
      if (i > 0) std::cout << ";\n";
      std::string text = answers[i].ToText();
      std::cout << (text.empty() ? "true\n" : text);
      if (f.proof) {
        for (const auto& p : answers[i].proofs) std::cout << ProofToText(*p, 1);
      }
    }
    if (f.stats) std::cout << StatsText(stats);
  }
  return answers.empty() ? kFinding : kPass;
}

// ----------------------------------------------------------------- abduce

// "<event> in [lo, hi] [max N] [as Name]"
AbducibleSpec ParseAbducible(const std::string& text) {
  auto in = text.rfind(" in [");
  auto close = text.find(']', in == std::string::npos ? 0 : in);
  if (in == std::string::npos || close == std::string::npos) {
    throw UsageError("abducible \"" + text + "\": expected \"<event> in [lo, hi] [max N] [as Name]\"");
  }
  AbducibleSpec s;
  s.event = ParseTerm(text.substr(0, in));
  std::string window = text.substr(in + 5, close - in - 5);
  auto comma = window.find(',');
  if (comma == std::string::npos) throw UsageError("abducible \"" + text + "\": window needs two bounds");
  auto trim = [](std::string x) {
    x.erase(0, x.find_first_not_of(" \t"));
    x.erase(x.find_last_not_of(" \t") + 1);
    return x;
  };
  std::string lo = trim(window.substr(0, comma)), hi = trim(window.substr(comma + 1));
  for (const std::string& b : {lo, hi}) {
    if (b == "inf" || b == "+inf" || b == "infinity" || b == "-inf") {
      throw UsageError("abducible \"" + text + "\": unbounded window; give a finite [lo, hi]");
    }
  }
  auto l = ParseRational(lo), h = ParseRational(hi);
  if (!l || !h) throw UsageError("abducible \"" + text + "\": bounds must be rationals");
  s.lo = *l;
  s.hi = *h;
  std::istringstream rest(text.substr(close + 1));
  std::string word;
  while (rest >> word) {
    if (word == "max") {
      if (!(rest >> s.max_count)) throw UsageError("abducible \"" + text + "\": max needs a count");
    } else if (word == "as") {
      if (!(rest >> s.name)) throw UsageError("abducible \"" + text + "\": as needs a name");
    } else {
      throw UsageError("abducible \"" + text + "\": unexpected \"" + word + "\"");
    }
  }
  return s;
}

struct AbduceArgs {
  std::string model, narrative, goal;
  std::vector<std::string> abducibles, params;
};

int Abduce(const AbduceArgs& a, const Flags& f) {
  if (a.abducibles.empty() && a.params.empty()) throw UsageError("abduce needs --abducible or --param");
  std::vector<AbducibleSpec> specs;
  for (const std::string& s : a.abducibles) specs.push_back(ParseAbducible(s));
  auto model = LoadModel(a.model);
  Narrative n = LoadNarrative(a.narrative);
  std::vector<std::string> names;
  std::vector<Literal> goal = ParseGoal(a.goal, &names);
  RequireDeclared(*model, goal);
  for (const AbducibleSpec& s : specs) {
    try {
      CheckSpec(s, n.horizon);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  json j;
  std::string text;
  bool found = false;
  if (!specs.empty()) {
    j["solutions"] = json::array();
    try {
      for (const AbducedSolution& s : AbduceEvents(model, n, goal, names, specs, f.Options())) {
        found = true;
        json x = s.ToJson();
        if (!f.proof) x.erase("proof");
        j["solutions"].push_back(std::move(x));
        text += "solution:";
        for (const Hypothesis& h : s.hypotheses) text += " happens(" + ToString(h.event) + ", " + h.name + ")";
        text += "\n";
        for (const std::string& c : s.RegionText()) text += "  " + c + "\n";
        for (const auto& [bn, bt] : s.answer.bindings) text += "  " + bn + " = " + ToString(bt) + "\n";
        if (f.proof) {
          for (const auto& p : s.answer.proofs) text += ProofToText(*p, 1);
        }
      }
    } catch (const SearchExhausted& e) {
      text += std::string(e.what()) + "\n";
      j["message"] = e.what();
    }
  }
  if (!a.params.empty()) {
    ClosedTimeline tl = TriggerClosure(model, n, f.Options());
    j["regions"] = json::array();
    for (const ParameterRegion& r : AbduceParameters(tl, goal, names, a.params)) {
      found = true;
      j["regions"].push_back(r.RegionText());
      text += "region:\n";
      for (const std::string& c : r.RegionText()) text += "  " + c + "\n";
    }
  }
  if (f.json) {
    Print(j);
  } else {
    std::cout << (found ? text : text + Paint("no solution", "31") + "\n");
  }
  return found ? kPass : kFinding;
}

// ----------------------------------------------------------------- oracle

struct OracleArgs {
  std::string model, narrative, dt, trace_out;
  bool mutant = false;
};

int Oracle(const OracleArgs& a, const Flags& f) {
  auto dt = ParseRational(a.dt);
  if (!dt || *dt <= 0) throw UsageError("--dt must be a positive rational, got " + a.dt);
  auto model = LoadModel(a.model);
  Narrative n = LoadNarrative(a.narrative);
  EngineOptions o = f.Options();
  o.mutant_closed_clipping = a.mutant;
  SampledTrace trace = Simulate(*model, n, *dt, o.zeno_bound);
  if (!a.trace_out.empty()) {
    std::ofstream out(a.trace_out);
    if (!out) throw UsageError("cannot write " + a.trace_out);
    out << trace.ToCsv();
  }
  ClosedTimeline tl = TriggerClosure(model, n, o);
  std::vector<Discrepancy> ds = CrossCheck(tl, trace);
  if (f.json) {
    json j;
    j["points"] = trace.points.size();
    j["discrepancies"] = json::array();
    for (const Discrepancy& d : ds) {
      j["discrepancies"].push_back(
          {{"time", ToString(d.time)}, {"fluent", d.fluent}, {"engine", d.engine}, {"oracle", d.oracle}});
    }
    Print(j);
  } else {
    for (const Discrepancy& d : ds) {
      std::cout << Paint("discrepancy", "31") << " t=" << ToString(d.time) << " " << d.fluent
                << ": engine " << d.engine << ", oracle " << d.oracle << "\n";
    }
    std::cout << trace.points.size() << " points, " << ds.size() << " discrepancies\n";
  }
  return ds.empty() ? kPass : kFinding;
}

// ---------------------------------------------------------------- explain

void CollectProofs(const json& j, std::vector<ProofPtr>& out) {
  if (j.is_object()) {
    if (j.contains("rule") && j.contains("goal")) {
      out.push_back(ProofFromJson(j));
      return;
    }
    for (const auto& [k, v] : j.items()) CollectProofs(v, out);
  } else if (j.is_array()) {
    for (const auto& v : j) CollectProofs(v, out);
  }
}

int Explain(const std::string& path) {
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
  std::vector<ProofPtr> proofs;
  CollectProofs(j, proofs);
  if (proofs.empty()) throw UsageError(path + ": no proof found");
  for (const auto& p : proofs) std::cout << ProofToText(*p);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event Calculus reasoner over exact rational time"};
  app.require_subcommand(1);
  Flags flags;
  auto common = [&flags](CLI::App* c) {
    c->add_flag("--json", flags.json, "JSON output");
    c->add_flag("--proof", flags.proof, "Include proof trees");
    c->add_flag("--stats", flags.stats, "Print goal expansion and cache counters");
    c->add_flag("--no-cache", flags.no_cache, "Disable the goal cache");
    c->add_option("--zeno-bound", flags.zeno_bound, "Maximum triggered events")->check(CLI::PositiveNumber);
    c->add_option("--depth", flags.depth, "Goal depth bound")->check(CLI::PositiveNumber);
  };

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "Check scenarios (.scn) or a property over narratives");
  c_check->add_option("model", check.model, "Model file")->required();
  c_check->add_option("files", check.files, "Scenario or narrative files")->required();
  c_check->add_option("--property", check.property, "overdose(M, W) | response(E1, E2, D) | goal(...)");
  common(c_check);

  QueryArgs query;
  auto* c_query = app.add_subcommand("query", "Answer a goal over a narrative");
  c_query->add_option("model", query.model)->required();
  c_query->add_option("narrative", query.narrative)->required();
  c_query->add_option("goal", query.goal)->required();
  common(c_query);

  AbduceArgs abduce;
  auto* c_abduce = app.add_subcommand("abduce", "Abduce event times or goal parameters");
  c_abduce->add_option("model", abduce.model)->required();
  c_abduce->add_option("narrative", abduce.narrative)->required();
  c_abduce->add_option("--goal", abduce.goal)->required();
  c_abduce->add_option("--abducible", abduce.abducibles, "\"event in [lo, hi] [max N] [as Name]\"");
  c_abduce->add_option("--param", abduce.params, "Goal variable to solve for");
  common(c_abduce);

  OracleArgs oracle;
  auto* c_oracle = app.add_subcommand("oracle", "Cross-check the engine against the forward simulator");
  c_oracle->add_option("model", oracle.model)->required();
  c_oracle->add_option("narrative", oracle.narrative)->required();
  c_oracle->add_option("--dt", oracle.dt, "Sampling step")->required();
  c_oracle->add_option("--trace-out", oracle.trace_out, "Write the sampled trace as CSV");
  c_oracle->add_flag("--mutant-closed-clipping", oracle.mutant, "Run the engine with closed clipping windows")
      ->group("");
  common(c_oracle);

  std::string explain_path;
  auto* c_explain = app.add_subcommand("explain", "Render proofs saved in a JSON file");
  c_explain->add_option("file", explain_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (*c_check) return Check(check, flags);
    if (*c_query) return RunQuery(query, flags);
    if (*c_abduce) return Abduce(abduce, flags);
    if (*c_oracle) return Oracle(oracle, flags);
    if (*c_explain) return Explain(explain_path);
  } catch (const ParseError& e) {
    std::cerr << "ecrv: parse error at " << e.pos().line << ":" << e.pos().col << ": " << e.what() << "\n";
  } catch (const ZenoError& e) {
    std::cerr << "ecrv: " << e.what() << "\n";
    for (const auto& ev : e.last_events()) std::cerr << "  " << ev << "\n";
  } catch (const std::exception& e) {
    std::cerr << "ecrv: " << e.what() << "\n";
  }
  return kError;
}
