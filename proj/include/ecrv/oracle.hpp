// Forward discrete-time simulator used to cross-check the engine.
//
// Between consecutive event times every fluent is in a fixed regime: a
// boolean fluent holds or not, a functional fluent has zero or more linear
// values a + s*t. The simulator walks those intervals in order, applies the
// events at each boundary and fires trigger rules at the earliest time their
// bodies hold, solving threshold crossings exactly. It evaluates rule bodies
// with its own matcher and shares only the parser and the rational
// arithmetic with the engine.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecrv/engine.hpp"

namespace ecrv {

// A body form the simulator does not evaluate (for example negation over the
// trigger time).
class OracleUnsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SamplePoint {
  Rational time;
  std::set<std::string> holding;                          // boolean instances
  std::map<std::string, std::vector<Rational>> values;    // functional fluents
};

struct SampledEvent {
  Term event;
  Rational time;
  bool triggered = false;
};

struct SampledTrace {
  Rational dt;
  Rational horizon;
  std::vector<SampledEvent> events;  // chronological
  std::vector<SamplePoint> points;   // grid: multiples of dt, event times, horizon

  // time,fluent,value rows; a holding boolean instance has value true.
  std::string ToCsv() const;
};

// Throws std::invalid_argument for dt <= 0, ZenoError past zeno_bound
// triggered events, OracleUnsupported for bodies outside its fragment.
SampledTrace Simulate(const DomainModel& model, const Narrative& n, const Rational& dt,
                      int zeno_bound = 1000);

struct Discrepancy {
  Rational time;
  std::string fluent;
  std::string engine;
  std::string oracle;
};

// Compares events and every fluent at every grid point of the trace.
std::vector<Discrepancy> CrossCheck(const ClosedTimeline& tl, const SampledTrace& trace);

}  // namespace ecrv
