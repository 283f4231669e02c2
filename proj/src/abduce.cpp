#include "ecrv/abduce.hpp"

#include <algorithm>
#include <functional>

namespace ecrv {

using clpq::LinConstraint;
using clpq::LinExpr;
using Op = clpq::LinConstraint::Op;

void CheckSpec(const AbducibleSpec& s, const Rational& horizon) {
  if (!s.event.is_ground()) {
    throw std::invalid_argument("abducible event " + ToString(s.event) + " must be ground");
  }
  if (s.max_count < 1) throw std::invalid_argument("abducible max_count must be at least 1");
  if (s.lo < 0 || s.hi < s.lo || s.hi > horizon) {
    throw std::invalid_argument("abducible window [" + ToString(s.lo) + ", " + ToString(s.hi) +
                                "] must lie within [0, " + ToString(horizon) + "]");
  }
}

namespace {

clpq::VarNamer Namer(const Answer& a) {
  return [&a](int v) { return a.VarName(v); };
}

std::vector<std::string> Texts(const clpq::Conjunction& cs, const Answer& a) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(clpq::ToString(c, Namer(a)));
  return out;
}

clpq::Conjunction RegionOf(const Answer& a, int hyp_count) {
  std::set<int> keep;
  for (int i = 0; i < hyp_count; ++i) keep.insert(i);
  for (const auto& r : a.residual) {
    for (const auto& [v, c] : r.expr.coeffs()) {
      std::string n = a.VarName(v);
      bool bound = std::any_of(a.bindings.begin(), a.bindings.end(), [&](const auto& b) { return b.first == n; });
      if (!bound) keep.insert(v);
    }
  }
  return clpq::RemoveRedundant(a.store.Project(keep));
}

using Multiset = std::vector<std::string>;  // sorted event texts

bool Contains(const Multiset& big, const Multiset& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// Every way to pick counts c_i <= max_count summing to k.
void Assignments(const std::vector<AbducibleSpec>& specs, size_t i, int k, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  if (i == specs.size()) {
    if (k == 0) out.push_back(cur);
    return;
  }
  for (int c = 0; c <= std::min(k, specs[i].max_count); ++c) {
    cur.push_back(c);
    Assignments(specs, i + 1, k - c, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<std::string> AbducedSolution::RegionText() const { return Texts(region, answer); }

std::vector<std::string> ParameterRegion::RegionText() const { return Texts(region, witness); }

nlohmann::json AbducedSolution::ToJson() const {
  nlohmann::json j;
  j["hypotheses"] = nlohmann::json::array();
  for (const auto& h : hypotheses) {
    std::string time = h.name;
    if (auto v = answer.store.FixedValue(h.var)) time = ToString(*v);
    j["hypotheses"].push_back({{"event", ToString(h.event)}, {"time", time}});
  }
  j["region"] = RegionText();
  nlohmann::json b = nlohmann::json::object();
  for (const auto& [n, t] : answer.bindings) b[n] = ToString(t);
  j["bindings"] = b;
  j["proof"] = nlohmann::json::array();
  for (const auto& p : answer.proofs) j["proof"].push_back(ProofToJson(*p));
  return j;
}

std::vector<AbducedSolution> AbduceEvents(std::shared_ptr<const DomainModel> model,
                                          const Narrative& partial,
                                          const std::vector<Literal>& goal,
                                          const std::vector<std::string>& names,
                                          const std::vector<AbducibleSpec>& specs,
                                          const EngineOptions& options) {
  for (const auto& s : specs) CheckSpec(s, partial.horizon);
  int total = 0;
  for (const auto& s : specs) total += s.max_count;

  std::vector<AbducedSolution> out;
  std::vector<Multiset> found;
  for (int k = 0; k <= total; ++k) {
    std::vector<std::vector<int>> assignments;
    std::vector<int> cur;
    Assignments(specs, 0, k, cur, assignments);
    for (const auto& counts : assignments) {
      ClosedTimeline seed = MakeTimeline(model, partial, options);
      std::vector<Hypothesis> hyps;
      Multiset events;
      for (size_t i = 0; i < specs.size(); ++i) {
        for (int n = 0; n < counts[i]; ++n) {
          Hypothesis h;
          h.event = specs[i].event;
          h.var = static_cast<int>(hyps.size());
          if (specs[i].name.empty()) {
            h.name = "H" + std::to_string(h.var + 1);
          } else {
            h.name = specs[i].name + (specs[i].max_count > 1 ? std::to_string(n + 1) : "");
          }
          LinExpr t = LinExpr::Var(h.var);
          seed.base_store.Add(LinConstraint::Make(LinExpr(specs[i].lo), Op::kLe, t));
          seed.base_store.Add(LinConstraint::Make(t, Op::kLe, LinExpr(specs[i].hi)));
          // Copies of one abducible are ordered; equal times would be one event.
          if (n > 0) seed.base_store.Add(LinConstraint::Make(LinExpr::Var(h.var - 1), Op::kLt, t));
          events.push_back(ToString(h.event));
          hyps.push_back(std::move(h));
        }
      }
      std::sort(events.begin(), events.end());
      if (std::any_of(found.begin(), found.end(), [&](const Multiset& f) { return Contains(events, f); })) {
        continue;
      }
      seed.var_base = static_cast<int>(hyps.size());
      for (const auto& h : hyps) {
        seed.hyp_names.push_back(h.name);
        TimedEvent e;
        e.event = h.event;
        e.time = LinExpr::Var(h.var);
        seed.AddEvent(std::move(e));
      }
      std::vector<ClosedTimeline> cases;
      if (hyps.empty()) {
        ClosedTimeline tl = seed;
        CloseTimeline(tl);
        cases.push_back(std::move(tl));
      } else {
        cases = SymbolicClosure(seed);
      }
      bool any = false;
      for (auto& tl : cases) {
        for (auto& a : Query(tl, goal, names)) {
          AbducedSolution s;
          s.hypotheses = hyps;
          s.region = RegionOf(a, seed.var_base);
          s.answer = std::move(a);
          s.timeline = tl;
          out.push_back(std::move(s));
          any = true;
        }
      }
      if (any) found.push_back(events);
    }
  }
  if (out.empty()) throw SearchExhausted("no explanation with at most " + std::to_string(total) + " hypothesized events");
  return out;
}

std::vector<ParameterRegion> AbduceParameters(const ClosedTimeline& tl,
                                              const std::vector<Literal>& goal,
                                              const std::vector<std::string>& names,
                                              const std::vector<std::string>& params) {
  std::vector<ParameterRegion> pieces;
  for (auto& a : Query(tl, goal, names)) {
    std::set<int> keep;
    for (const auto& p : params) {
      auto it = a.named.find(p);
      if (it == a.named.end()) throw std::invalid_argument("parameter " + p + " does not occur in the goal");
      keep.insert(it->second);
    }
    ParameterRegion r;
    r.region = clpq::RemoveRedundant(a.store.Project(keep));
    r.witness = std::move(a);
    pieces.push_back(std::move(r));
  }
  // A piece is dropped if another piece contains it; of two equal pieces
  // the first stays.
  auto within = [](const clpq::Conjunction& inner, const clpq::Conjunction& outer) {
    clpq::ConstraintStore s;
    if (!s.AddAll(inner)) return true;
    return std::all_of(outer.begin(), outer.end(), [&](const LinConstraint& c) { return s.Entails(c); });
  };
  std::vector<ParameterRegion> out;
  for (size_t i = 0; i < pieces.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < pieces.size() && !dominated; ++j) {
      if (i == j || !within(pieces[i].region, pieces[j].region)) continue;
      dominated = !within(pieces[j].region, pieces[i].region) || j < i;
    }
    if (!dominated) out.push_back(std::move(pieces[i]));
  }
  return out;
}

std::optional<AbducedSolution> Refine(const AbducedSolution& s, const std::vector<Literal>& extra,
                                      const std::vector<std::string>& names) {
  QueryContext ctx;
  ctx.store = s.answer.store;
  ctx.named = s.answer.named;
  ctx.next_var = s.answer.next_var;
  auto answers = Query(s.timeline, extra, names, nullptr, &ctx);
  if (answers.empty()) return std::nullopt;
  AbducedSolution out = s;
  Answer& a = answers.front();
  // Earlier proofs stay valid: the store only grew.
  std::vector<ProofPtr> proofs = s.answer.proofs;
  proofs.insert(proofs.end(), a.proofs.begin(), a.proofs.end());
  std::vector<std::pair<std::string, Term>> bindings;
  for (const auto& [n, id] : a.named) {
    if (auto v = a.store.FixedValue(id)) {
      bindings.emplace_back(n, Term::Num(*v));
    } else {
      auto has = [&n = n](const auto& b) { return b.first == n; };
      auto fresh = std::find_if(a.bindings.begin(), a.bindings.end(), has);
      auto old = std::find_if(s.answer.bindings.begin(), s.answer.bindings.end(), has);
      if (fresh != a.bindings.end()) {
        bindings.push_back(*fresh);
      } else if (old != s.answer.bindings.end()) {
        bindings.push_back(*old);
      }
    }
  }
  a.bindings = std::move(bindings);
  a.proofs = std::move(proofs);
  out.region = RegionOf(a, static_cast<int>(s.hypotheses.size()));
  out.answer = std::move(a);
  return out;
}

std::optional<AbducedSolution> Refine(const AbducedSolution& s, const std::string& extra) {
  std::vector<std::string> names;
  std::vector<Literal> lits = ParseGoal(extra, &names);
  return Refine(s, lits, names);
}

}  // namespace ecrv
