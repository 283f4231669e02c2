// Abduction of event occurrences and of property parameters.
//
// Hypothesized events get symbolic times: variables [0, k) of the timeline,
// bounded by their windows. The trigger closure is computed case by case over
// those variables, so every solution carries one store that constrains all
// hypothesized times and goal parameters together.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecrv/engine.hpp"

namespace ecrv {

class SearchExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AbducibleSpec {
  Term event;  // ground
  Rational lo, hi;
  int max_count = 1;
  // Time variable name; numbered when max_count > 1. Empty: H1, H2, ...
  std::string name;
};

// Throws std::invalid_argument unless 0 <= lo <= hi <= horizon, the event is
// ground and max_count >= 1.
void CheckSpec(const AbducibleSpec& s, const Rational& horizon);

struct Hypothesis {
  Term event;
  int var = 0;
  std::string name;
};

struct AbducedSolution {
  std::vector<Hypothesis> hypotheses;
  ClosedTimeline timeline;
  Answer answer;  // answer.store is the single shared store
  // Constraints over the hypothesis times and unbound goal variables.
  clpq::Conjunction region;

  std::vector<std::string> RegionText() const;
  nlohmann::json ToJson() const;
};

// Minimal explanations first: hypothesis count 0, 1, 2, ..., skipping event
// multisets that contain an earlier solution's. Throws SearchExhausted when
// no count up to the spec bounds yields a solution.
std::vector<AbducedSolution> AbduceEvents(std::shared_ptr<const DomainModel> model,
                                          const Narrative& partial,
                                          const std::vector<Literal>& goal,
                                          const std::vector<std::string>& names,
                                          const std::vector<AbducibleSpec>& specs,
                                          const EngineOptions& options = {});

struct ParameterRegion {
  clpq::Conjunction region;
  Answer witness;
  std::vector<std::string> RegionText() const;
};

// Regions over `params` (goal variable names) in which the goal succeeds.
// Regions contained in another one are dropped.
std::vector<ParameterRegion> AbduceParameters(const ClosedTimeline& tl,
                                              const std::vector<Literal>& goal,
                                              const std::vector<std::string>& names,
                                              const std::vector<std::string>& params);

// Extends the solution's store with `extra`; variables of the solution keep
// their names. nullopt when the extension is unsatisfiable.
std::optional<AbducedSolution> Refine(const AbducedSolution& s, const std::vector<Literal>& extra,
                                      const std::vector<std::string>& names);
std::optional<AbducedSolution> Refine(const AbducedSolution& s, const std::string& extra);

}  // namespace ecrv
