#pragma once

#include <gmpxx.h>

#include <string>

#include "dip/rational.hpp"

namespace dip {

enum class Round { Down, Up };

inline Round flip(Round d) { return d == Round::Down ? Round::Up : Round::Down; }

// Dyadic rational man * 2^exp. Addition, subtraction and multiplication are
// exact; division and precision capping round in a caller-chosen direction.
// All enclosure arithmetic in the quadrature engine bottoms out here.
class Dyadic {
public:
    Dyadic() : man_(0), exp_(0) {}
    explicit Dyadic(long v) : man_(v), exp_(0) { normalize(); }
    Dyadic(BigInt man, long exp) : man_(std::move(man)), exp_(exp) { normalize(); }

    static Dyadic zero() { return Dyadic(); }
    static Dyadic one() { return Dyadic(1); }
    // 2^e
    static Dyadic pow2(long e) { return Dyadic(BigInt(1), e); }

    const BigInt& man() const { return man_; }
    long exp() const { return exp_; }
    bool is_zero() const { return man_ == 0; }
    int sign() const { return sgn(man_); }

    // Number of significant bits of the mantissa (0 for zero).
    size_t sig_bits() const { return man_ == 0 ? 0 : mpz_sizeinbase(man_.get_mpz_t(), 2); }

    Dyadic operator-() const { return Dyadic(-man_, exp_); }
    Dyadic operator+(const Dyadic& o) const;
    Dyadic operator-(const Dyadic& o) const { return *this + (-o); }
    Dyadic operator*(const Dyadic& o) const { return Dyadic(man_ * o.man_, exp_ + o.exp_); }

    // Exact scaling by 2^e.
    Dyadic mul_pow2(long e) const { return Dyadic(man_, exp_ + e); }

    int cmp(const Dyadic& o) const;
    bool operator<(const Dyadic& o) const { return cmp(o) < 0; }
    bool operator<=(const Dyadic& o) const { return cmp(o) <= 0; }
    bool operator>(const Dyadic& o) const { return cmp(o) > 0; }
    bool operator>=(const Dyadic& o) const { return cmp(o) >= 0; }
    bool operator==(const Dyadic& o) const { return cmp(o) == 0; }
    bool operator!=(const Dyadic& o) const { return cmp(o) != 0; }

    // Rounds to at most `sig` significant bits, directed.
    Dyadic round(size_t sig, Round dir) const;

    // Directed quotient with `sig` significant bits. o must be nonzero.
    static Dyadic div(const Dyadic& a, const Dyadic& o, size_t sig, Round dir);

    static Dyadic from_rational(const Rational& q, size_t sig, Round dir);
    // Exact conversion (dyadic values are rational).
    Rational to_rational() const;
    double to_double() const;
    std::string str() const; // debug: decimal approximation

    // Midpoint of a and b rounded to a dyadic exactly representable with a
    // short mantissa (plain average; exact).
    static Dyadic mid(const Dyadic& a, const Dyadic& b);

private:
    void normalize(); // strip trailing zero bits from man_ into exp_
    BigInt man_;
    long exp_;
};

Dyadic min(const Dyadic& a, const Dyadic& b);
Dyadic max(const Dyadic& a, const Dyadic& b);
Dyadic abs(const Dyadic& a);

// Directed square root: result r satisfies r*r <= x (Down) or r*r >= x (Up).
// Requires x >= 0.
Dyadic sqrt_dyadic(const Dyadic& x, size_t sig, Round dir);

} // namespace dip
