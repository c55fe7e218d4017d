#pragma once

#include "dip/interval.hpp"

namespace dip {

// Certified elementary-function enclosures. Each result is an interval that
// provably contains the true value; width shrinks as `sig` grows. Series
// remainders are bounded explicitly (alternating-series or geometric tails),
// never estimated.

Ival exp_point(const Dyadic& x, size_t sig);
Ival exp_iv(const Ival& x, size_t sig);

Ival erf_point(const Dyadic& x, size_t sig);
Ival erf_iv(const Ival& x, size_t sig);

// Natural log of a positive rational.
Ival ln_rational(const Rational& q, size_t sig);

// Cached constants at >= sig bits.
Ival const_sqrt2(size_t sig);
Ival const_ln2(size_t sig);
Ival const_inv_sqrt_2pi(size_t sig); // 1/sqrt(2*pi)
Ival const_two_over_sqrt_pi(size_t sig);
Ival const_pi(size_t sig);

} // namespace dip
