#include "dip/dyadic.hpp"

#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dip {

std::optional<Rational> parse_rational(const std::string& s) {
    if (s.empty()) return std::nullopt;
    size_t slash = s.find('/');
    auto is_int = [](const std::string& t) {
        if (t.empty()) return false;
        size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
        if (i == t.size()) return false;
        for (; i < t.size(); ++i)
            if (!isdigit(static_cast<unsigned char>(t[i]))) return false;
        return true;
    };
    try {
        if (slash == std::string::npos) {
            if (!is_int(s)) return std::nullopt;
            return Rational(BigInt(s));
        }
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (!is_int(num) || !is_int(den)) return std::nullopt;
        BigInt d(den);
        if (d == 0) return std::nullopt;
        Rational q(BigInt(num), d);
        q.canonicalize();
        return q;
    } catch (...) {
        return std::nullopt;
    }
}

std::string rational_str(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

void Dyadic::normalize() {
    if (man_ == 0) {
        exp_ = 0;
        return;
    }
    unsigned long tz = mpz_scan1(man_.get_mpz_t(), 0);
    if (tz > 0) {
        mpz_fdiv_q_2exp(man_.get_mpz_t(), man_.get_mpz_t(), tz);
        exp_ += static_cast<long>(tz);
    }
}

Dyadic Dyadic::operator+(const Dyadic& o) const {
    if (man_ == 0) return o;
    if (o.man_ == 0) return *this;
    long e = std::min(exp_, o.exp_);
    BigInt a = man_, b = o.man_;
    if (exp_ > e) mpz_mul_2exp(a.get_mpz_t(), a.get_mpz_t(), exp_ - e);
    if (o.exp_ > e) mpz_mul_2exp(b.get_mpz_t(), b.get_mpz_t(), o.exp_ - e);
    return Dyadic(a + b, e);
}

int Dyadic::cmp(const Dyadic& o) const {
    int sa = sgn(man_), sb = sgn(o.man_);
    if (sa != sb) return sa < sb ? -1 : 1;
    if (sa == 0) return 0;
    Dyadic d = *this - o;
    return d.sign();
}

Dyadic Dyadic::round(size_t sig, Round dir) const {
    size_t bits = sig_bits();
    if (bits <= sig) return *this;
    long shift = static_cast<long>(bits - sig);
    BigInt m;
    if (dir == Round::Down)
        mpz_fdiv_q_2exp(m.get_mpz_t(), man_.get_mpz_t(), shift);
    else
        mpz_cdiv_q_2exp(m.get_mpz_t(), man_.get_mpz_t(), shift);
    return Dyadic(m, exp_ + shift);
}

Dyadic Dyadic::div(const Dyadic& a, const Dyadic& o, size_t sig, Round dir) {
    if (o.man_ == 0) throw std::domain_error("Dyadic::div by zero");
    if (a.man_ == 0) return Dyadic();
    long la = static_cast<long>(a.sig_bits());
    long lb = static_cast<long>(o.sig_bits());
    long t = lb - la + static_cast<long>(sig) + 2;
    if (t < 0) t = 0;
    BigInt n = a.man_;
    mpz_mul_2exp(n.get_mpz_t(), n.get_mpz_t(), t);
    BigInt q;
    if (dir == Round::Down)
        mpz_fdiv_q(q.get_mpz_t(), n.get_mpz_t(), o.man_.get_mpz_t());
    else
        mpz_cdiv_q(q.get_mpz_t(), n.get_mpz_t(), o.man_.get_mpz_t());
    return Dyadic(q, a.exp_ - o.exp_ - t).round(sig, dir);
}

Dyadic Dyadic::from_rational(const Rational& q, size_t sig, Round dir) {
    Dyadic num(BigInt(q.get_num()), 0);
    Dyadic den(BigInt(q.get_den()), 0);
    return div(num, den, sig, dir);
}

Rational Dyadic::to_rational() const {
    Rational r(man_);
    if (exp_ >= 0) {
        BigInt p;
        mpz_mul_2exp(p.get_mpz_t(), BigInt(1).get_mpz_t(), exp_);
        return r * Rational(p);
    }
    BigInt p;
    mpz_mul_2exp(p.get_mpz_t(), BigInt(1).get_mpz_t(), -exp_);
    Rational out = r / Rational(p);
    out.canonicalize();
    return out;
}

double Dyadic::to_double() const {
    // Clamp through a rounded 53-bit mantissa to avoid overflow surprises.
    Dyadic r = round(53, Round::Down);
    double m = r.man().get_d();
    return std::ldexp(m, static_cast<int>(std::max<long>(std::min<long>(r.exp(), 4000), -4000)));
}

std::string Dyadic::str() const {
    std::ostringstream os;
    os << to_double();
    return os.str();
}

Dyadic Dyadic::mid(const Dyadic& a, const Dyadic& b) { return (a + b).mul_pow2(-1); }

Dyadic min(const Dyadic& a, const Dyadic& b) { return a <= b ? a : b; }
Dyadic max(const Dyadic& a, const Dyadic& b) { return a >= b ? a : b; }
Dyadic abs(const Dyadic& a) { return a.sign() < 0 ? -a : a; }

Dyadic sqrt_dyadic(const Dyadic& x, size_t sig, Round dir) {
    if (x.sign() < 0) throw std::domain_error("sqrt of negative dyadic");
    if (x.is_zero()) return Dyadic();
    // x = m * 2^e; force e - t even and m << t to carry >= 2*sig+4 bits.
    long bits = static_cast<long>(x.sig_bits());
    long t = std::max<long>(0, 2 * static_cast<long>(sig) + 4 - bits);
    if ((x.exp() - t) % 2 != 0) ++t;
    BigInt m = x.man();
    mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), t);
    BigInt r;
    mpz_sqrt(r.get_mpz_t(), m.get_mpz_t()); // floor sqrt
    long half = (x.exp() - t) / 2;
    if (dir == Round::Down) return Dyadic(r, half).round(sig, Round::Down);
    return Dyadic(r + 1, half).round(sig, Round::Up);
}

} // namespace dip
