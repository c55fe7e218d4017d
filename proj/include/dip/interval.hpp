#pragma once

#include <stdexcept>

#include "dip/dyadic.hpp"

namespace dip {

// Closed interval [lo, hi] with exact dyadic endpoints. Every operation
// rounds outward at the given significand width, so containment of the true
// real value is preserved through arbitrary compositions.
struct Ival {
    Dyadic lo, hi;

    Ival() = default;
    explicit Ival(const Dyadic& p) : lo(p), hi(p) {}
    Ival(Dyadic l, Dyadic h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo > hi) throw std::logic_error("Ival: lo > hi");
    }

    static Ival point(long v) { return Ival(Dyadic(v)); }
    static Ival zero() { return Ival(Dyadic()); }
    static Ival from_rational(const Rational& q, size_t sig) {
        return Ival(Dyadic::from_rational(q, sig, Round::Down),
                    Dyadic::from_rational(q, sig, Round::Up));
    }

    Dyadic width() const { return hi - lo; }
    bool is_point() const { return lo == hi; }
    bool contains(const Dyadic& x) const { return lo <= x && x <= hi; }
    bool contains(const Rational& q) const {
        return lo.to_rational() <= q && q <= hi.to_rational();
    }
    bool intersects(const Ival& o) const { return lo <= o.hi && o.lo <= hi; }

    Ival round(size_t sig) const {
        return Ival(lo.round(sig, Round::Down), hi.round(sig, Round::Up));
    }
};

inline Ival operator-(const Ival& a) { return Ival(-a.hi, -a.lo); }

inline Ival iadd(const Ival& a, const Ival& b, size_t sig) {
    return Ival((a.lo + b.lo).round(sig, Round::Down), (a.hi + b.hi).round(sig, Round::Up));
}

inline Ival isub(const Ival& a, const Ival& b, size_t sig) { return iadd(a, -b, sig); }

inline Ival imul(const Ival& a, const Ival& b, size_t sig) {
    if (b.lo == b.hi) { // point operand fast path
        if (b.lo.sign() >= 0)
            return Ival((a.lo * b.lo).round(sig, Round::Down),
                        (a.hi * b.lo).round(sig, Round::Up));
        return Ival((a.hi * b.lo).round(sig, Round::Down),
                    (a.lo * b.lo).round(sig, Round::Up));
    }
    if (a.lo == a.hi) return imul(b, a, sig);
    Dyadic p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    Dyadic lo = min(min(p1, p2), min(p3, p4));
    Dyadic hi = max(max(p1, p2), max(p3, p4));
    return Ival(lo.round(sig, Round::Down), hi.round(sig, Round::Up));
}

// Division; b must not straddle zero.
inline Ival idiv(const Ival& a, const Ival& b, size_t sig) {
    if (b.lo.sign() <= 0 && b.hi.sign() >= 0)
        throw std::domain_error("idiv: divisor straddles zero");
    if (b.lo == b.hi) { // point divisor fast path
        if (b.lo.sign() > 0)
            return Ival(Dyadic::div(a.lo, b.lo, sig, Round::Down),
                        Dyadic::div(a.hi, b.lo, sig, Round::Up));
        return Ival(Dyadic::div(a.hi, b.lo, sig, Round::Down),
                    Dyadic::div(a.lo, b.lo, sig, Round::Up));
    }
    Dyadic q1 = Dyadic::div(a.lo, b.lo, sig, Round::Down);
    Dyadic q2 = Dyadic::div(a.lo, b.hi, sig, Round::Down);
    Dyadic q3 = Dyadic::div(a.hi, b.lo, sig, Round::Down);
    Dyadic q4 = Dyadic::div(a.hi, b.hi, sig, Round::Down);
    Dyadic lo = min(min(q1, q2), min(q3, q4));
    Dyadic u1 = Dyadic::div(a.lo, b.lo, sig, Round::Up);
    Dyadic u2 = Dyadic::div(a.lo, b.hi, sig, Round::Up);
    Dyadic u3 = Dyadic::div(a.hi, b.lo, sig, Round::Up);
    Dyadic u4 = Dyadic::div(a.hi, b.hi, sig, Round::Up);
    Dyadic hi = max(max(u1, u2), max(u3, u4));
    return Ival(lo, hi);
}

inline Ival ihull(const Ival& a, const Ival& b) {
    return Ival(min(a.lo, b.lo), max(a.hi, b.hi));
}

// Intersection; empty intersection is a caller bug here.
inline Ival imeet(const Ival& a, const Ival& b) {
    return Ival(max(a.lo, b.lo), min(a.hi, b.hi));
}

inline Ival isqrt(const Ival& a, size_t sig) {
    return Ival(sqrt_dyadic(max(a.lo, Dyadic()), sig, Round::Down),
                sqrt_dyadic(max(a.hi, Dyadic()), sig, Round::Up));
}

// max(a, 0) applied interval-wise.
inline Ival iclamp_nonneg(const Ival& a) {
    return Ival(max(a.lo, Dyadic()), max(a.hi, Dyadic()));
}

} // namespace dip
