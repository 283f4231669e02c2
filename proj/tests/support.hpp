// Shared fixtures: corpus loading and a seeded generator.

#pragma once

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "ecrv/engine.hpp"

namespace ecrv::test {

inline std::string Corpus(const std::string& file) {
  std::ifstream f(std::string(ECRV_CORPUS_DIR) + "/" + file);
  if (!f) throw std::runtime_error("missing corpus file " + file);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::shared_ptr<const DomainModel> Pca() {
  static auto m = std::make_shared<const DomainModel>(ParseDomain(Corpus("pca_bolus.ec")));
  return m;
}

inline Narrative N1() { return ParseNarrative(Corpus("n1.nrt")); }

inline ClosedTimeline N1Timeline(EngineOptions o = {}) { return TriggerClosure(Pca(), N1(), o); }

inline Rational Q(long n, long d = 1) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

// Deterministic generator; every property test states its seed.
class Gen {
 public:
  explicit Gen(unsigned seed) : rng_(seed) {}
  int Int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool Coin(int percent = 50) { return Int(1, 100) <= percent; }
  Rational Frac(int lo, int hi, int max_den) {
    int d = Int(1, max_den);
    Rational r(Int(lo * d, hi * d), d);
    r.canonicalize();
    return r;
  }
  template <typename T>
  const T& Pick(const std::vector<T>& v) { return v[static_cast<size_t>(Int(0, static_cast<int>(v.size()) - 1))]; }

 private:
  std::mt19937 rng_;
};

}  // namespace ecrv::test
