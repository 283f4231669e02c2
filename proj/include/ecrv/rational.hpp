// Exact rational arithmetic used for every time point and fluent quantity.

#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>

namespace ecrv {

using Rational = mpq_class;

// Accepts integers ("12", "-3"), fractions ("1/3") and decimals ("0.25",
// "-1.5"). Decimals are converted exactly. Returns nullopt on malformed text
// or a zero denominator.
std::optional<Rational> ParseRational(std::string_view text);

// Canonical text form: "7", "-1/3". Never a decimal approximation.
std::string ToString(const Rational& q);

inline Rational Midpoint(const Rational& a, const Rational& b) {
  Rational m = (a + b) / 2;
  m.canonicalize();
  return m;
}

}  // namespace ecrv
