#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace dip {

using Rational = mpq_class;
using BigInt = mpz_class;

// Parses "p", "-p", "p/q". Rejects floats and anything else.
std::optional<Rational> parse_rational(const std::string& s);

// Canonical form: "p" when the denominator is 1, else "p/q".
std::string rational_str(const Rational& q);

inline double to_double(const Rational& q) { return q.get_d(); }

} // namespace dip
