#include "dip/realfuncs.hpp"

#include <map>
#include <mutex>

namespace dip {

namespace {

// Working precisions are rounded up to 64-bit buckets so cached constants at
// a given precision are reused across calls.
size_t bucket(size_t sig) { return (sig + 63) & ~size_t{63}; }

// Fixed-point ball at scale 2^-F: the represented set is [(m-e)2^-F, (m+e)2^-F].
// All series run on these to keep mpz temporaries in place; only the final
// conversion produces dyadic endpoints.
struct Ball {
    mpz_class m, e;
};

struct BallTmp {
    mpz_class t1, t2;
};

// z = x * y at common scale F (z may alias x)
void ball_mul(Ball& z, const Ball& x, const Ball& y, long F, BallTmp& tmp) {
    // error: (|xm| ye + |ym| xe + xe ye) >> F, plus 1 for the floor
    mpz_abs(tmp.t1.get_mpz_t(), x.m.get_mpz_t());
    tmp.t1 *= y.e;
    mpz_abs(tmp.t2.get_mpz_t(), y.m.get_mpz_t());
    tmp.t2 *= x.e;
    tmp.t1 += tmp.t2;
    mpz_addmul(tmp.t1.get_mpz_t(), x.e.get_mpz_t(), y.e.get_mpz_t());
    mpz_fdiv_q_2exp(tmp.t1.get_mpz_t(), tmp.t1.get_mpz_t(), F);
    tmp.t1 += 2;
    mpz_mul(tmp.t2.get_mpz_t(), x.m.get_mpz_t(), y.m.get_mpz_t());
    mpz_fdiv_q_2exp(z.m.get_mpz_t(), tmp.t2.get_mpz_t(), F);
    mpz_swap(z.e.get_mpz_t(), tmp.t1.get_mpz_t());
}

void ball_div_ui(Ball& z, const Ball& x, unsigned long k) {
    mpz_fdiv_q_ui(z.m.get_mpz_t(), x.m.get_mpz_t(), k);
    mpz_cdiv_q_ui(z.e.get_mpz_t(), x.e.get_mpz_t(), k);
    z.e += 1;
}

Ival ball_to_ival(const Ball& b, long F, size_t sig) {
    return Ival(Dyadic(BigInt(b.m - b.e), -F).round(sig, Round::Down),
                Dyadic(BigInt(b.m + b.e), -F).round(sig, Round::Up));
}

// x as an exact fixed-point integer at scale F (requires F + x.exp() >= 0).
mpz_class dyadic_fixed(const Dyadic& x, long F) {
    mpz_class m = x.man();
    long sh = F + x.exp();
    if (sh >= 0)
        mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), sh);
    else
        mpz_fdiv_q_2exp(m.get_mpz_t(), m.get_mpz_t(), -sh); // caller adds 1 ulp
    return m;
}

Ival exp_point_nonneg(const Dyadic& x, size_t sig) {
    if (x.is_zero()) return Ival::point(1);
    // Halve until the reduced argument is <= 1/2, then square back.
    long mag = static_cast<long>(x.sig_bits()) + x.exp(); // x < 2^mag
    long s = std::max<long>(0, mag + 1);
    size_t wsig = bucket(sig + static_cast<size_t>(s) + 16);
    const long F = static_cast<long>(wsig);
    Dyadic r = x.mul_pow2(-s);

    BallTmp tmp;
    Ball arg;
    arg.m = dyadic_fixed(r, F);
    arg.e = (F + r.exp() >= 0) ? 0 : 1;
    Ball term;
    term.m = 1;
    mpz_mul_2exp(term.m.get_mpz_t(), term.m.get_mpz_t(), F); // 1.0
    term.e = 0;
    Ball sum = term;
    mpz_class cut(1);
    mpz_mul_2exp(cut.get_mpz_t(), cut.get_mpz_t(), F - static_cast<long>(sig) - 12);
    bool done = false;
    for (unsigned long n = 1; n < 10000; ++n) {
        ball_mul(term, term, arg, F, tmp);
        ball_div_ui(term, term, n);
        sum.m += term.m;
        sum.e += term.e;
        mpz_abs(tmp.t1.get_mpz_t(), term.m.get_mpz_t());
        tmp.t1 += term.e;
        if (tmp.t1 < cut) {
            // remainder <= term (geometric ratio <= 1/2 for r <= 1/2)
            sum.e += tmp.t1;
            done = true;
            break;
        }
    }
    if (!done) throw std::runtime_error("exp series: no convergence");
    Ival e = ball_to_ival(sum, F, wsig);
    for (long i = 0; i < s; ++i) e = imul(e, e, wsig);
    return e.round(sig);
}

} // namespace

Ival exp_point(const Dyadic& x, size_t sig) {
    if (x.sign() >= 0) return exp_point_nonneg(x, sig);
    Ival pos = exp_point_nonneg(-x, sig + 8);
    return idiv(Ival::point(1), pos, sig);
}

Ival exp_iv(const Ival& x, size_t sig) {
    return Ival(exp_point(x.lo, sig).lo, exp_point(x.hi, sig).hi);
}

Ival const_pi(size_t sig) {
    static std::mutex mu;
    static std::map<size_t, Ival> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(sig);
    if (it != cache.end()) return it->second;
    size_t wsig = sig + 16;
    // Machin: pi = 16*atan(1/5) - 4*atan(1/239); atan by alternating series.
    auto atan_inv = [&](long q) {
        Ival z = idiv(Ival::point(1), Ival::point(q), wsig);
        Ival z2 = imul(z, z, wsig);
        Ival sum = z;
        Ival pw = z;
        Dyadic cut = Dyadic::pow2(-static_cast<long>(wsig) - 2);
        for (long k = 1; k < 10000; ++k) {
            pw = imul(pw, z2, wsig);
            Ival term = idiv(pw, Ival::point(2 * k + 1), wsig);
            // alternating with strictly decreasing terms: bracket by +-term
            if (k % 2 == 1)
                sum = isub(sum, term, wsig);
            else
                sum = iadd(sum, term, wsig);
            if (term.hi < cut) {
                sum = Ival((sum.lo - term.hi).round(wsig, Round::Down),
                           (sum.hi + term.hi).round(wsig, Round::Up));
                return sum;
            }
        }
        throw std::runtime_error("atan series: no convergence");
    };
    Ival pi = isub(imul(Ival::point(16), atan_inv(5), wsig),
                   imul(Ival::point(4), atan_inv(239), wsig), wsig)
                  .round(sig);
    cache[sig] = pi;
    return pi;
}

Ival erf_point(const Dyadic& x, size_t sig) {
    if (x.is_zero()) return Ival::zero();
    if (x.sign() < 0) return -erf_point(-x, sig);
    Dyadic eight(8);
    if (x >= eight) {
        // 1 - erf(x) <= exp(-x^2)/(x*sqrt(pi)); positive, so [1-b, 1].
        size_t wsig = sig + 8;
        Ival ex = exp_point(-(x * x), wsig);
        Ival denom = imul(Ival(x), isqrt(const_pi(wsig), wsig), wsig);
        Ival bound = idiv(ex, denom, wsig);
        return Ival((Dyadic(1) - bound.hi).round(sig, Round::Down), Dyadic(1));
    }
    // erf(x) = 2/sqrt(pi) * sum_k (-1)^k x^(2k+1) / (k! (2k+1)).
    // Work with enough guard bits to absorb the series' internal growth.
    double xd = x.to_double();
    size_t wsig = bucket(sig + 16 + static_cast<size_t>(1.4427 * xd * xd) + 8);
    const long F = static_cast<long>(wsig);

    BallTmp tmp;
    Ball xb;
    xb.m = dyadic_fixed(x, F);
    xb.e = (F + x.exp() >= 0) ? 0 : 1;
    Ball x2;
    ball_mul(x2, xb, xb, F, tmp);
    Ball a = xb; // running magnitude x^(2k+1)/k!
    Ball sum = xb;
    Ball term;
    mpz_class cut(1);
    mpz_mul_2exp(cut.get_mpz_t(), cut.get_mpz_t(), F - static_cast<long>(sig) - 12);
    bool done = false;
    for (unsigned long k = 1; k < 20000; ++k) {
        ball_mul(a, a, x2, F, tmp);
        ball_div_ui(a, a, k);
        ball_div_ui(term, a, 2 * k + 1);
        if (k % 2 == 1)
            sum.m -= term.m;
        else
            sum.m += term.m;
        sum.e += term.e;
        // terms strictly decrease once k > x^2; the first omitted bounds the tail
        mpz_abs(tmp.t1.get_mpz_t(), term.m.get_mpz_t());
        tmp.t1 += term.e;
        if (static_cast<double>(k) > xd * xd + 1.0 && tmp.t1 < cut) {
            sum.e += tmp.t1;
            done = true;
            break;
        }
    }
    if (!done) throw std::runtime_error("erf series: no convergence");
    Ival s = ball_to_ival(sum, F, wsig);
    return imul(s, const_two_over_sqrt_pi(wsig), wsig).round(sig);
}

Ival erf_iv(const Ival& x, size_t sig) {
    return Ival(erf_point(x.lo, sig).lo, erf_point(x.hi, sig).hi);
}

namespace {

// 2*atanh(z) for exact rational z in [0, 1/2); certified geometric tail.
Ival atanh2_rational(const Rational& z, size_t wsig) {
    if (z == 0) return Ival::zero();
    Ival zi = Ival::from_rational(z, wsig);
    Ival z2 = imul(zi, zi, wsig);
    Ival sum = zi;
    Ival pw = zi;
    Dyadic cut = Dyadic::pow2(-static_cast<long>(wsig) - 2);
    for (long k = 1; k < 20000; ++k) {
        pw = imul(pw, z2, wsig);
        Ival term = idiv(pw, Ival::point(2 * k + 1), wsig);
        sum = iadd(sum, term, wsig);
        if (term.hi < cut) {
            // tail <= term * z^2/(1-z^2) <= term for z <= 1/2... use z2.hi/(1-z2.hi)
            Dyadic ratio_num = term.hi * z2.hi;
            Dyadic denom = Dyadic(1) - z2.hi;
            Dyadic tail = Dyadic::div(ratio_num, denom, wsig, Round::Up);
            sum = Ival(sum.lo, (sum.hi + tail).round(wsig, Round::Up));
            return imul(sum, Ival::point(2), wsig);
        }
    }
    throw std::runtime_error("atanh series: no convergence");
}

} // namespace

Ival const_ln2(size_t sig) {
    static std::mutex mu;
    static std::map<size_t, Ival> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(sig);
    if (it != cache.end()) return it->second;
    Ival v = atanh2_rational(Rational(1, 3), sig + 8).round(sig);
    cache[sig] = v;
    return v;
}

Ival ln_rational(const Rational& q, size_t sig) {
    if (q <= 0) throw std::domain_error("ln of non-positive rational");
    size_t wsig = sig + 16;
    // q = m * 2^e with m in [1, 2)
    long e = 0;
    Rational m = q;
    while (m >= 2) { m /= 2; ++e; }
    while (m < 1) { m *= 2; --e; }
    Rational z = (m - 1) / (m + 1); // in [0, 1/3)
    Ival lnm = atanh2_rational(z, wsig);
    Ival result = iadd(lnm, imul(Ival::point(e), const_ln2(wsig), wsig), wsig);
    return result.round(sig);
}

Ival const_sqrt2(size_t sig) {
    return Ival(sqrt_dyadic(Dyadic(2), sig, Round::Down), sqrt_dyadic(Dyadic(2), sig, Round::Up));
}

Ival const_inv_sqrt_2pi(size_t sig) {
    static std::mutex mu;
    static std::map<size_t, Ival> cache;
    {
        std::lock_guard<std::mutex> lk(mu);
        auto it = cache.find(sig);
        if (it != cache.end()) return it->second;
    }
    size_t wsig = sig + 8;
    Ival two_pi = imul(Ival::point(2), const_pi(wsig), wsig);
    Ival v = idiv(Ival::point(1), isqrt(two_pi, wsig), sig);
    std::lock_guard<std::mutex> lk(mu);
    cache[sig] = v;
    return v;
}

Ival const_two_over_sqrt_pi(size_t sig) {
    static std::mutex mu;
    static std::map<size_t, Ival> cache;
    {
        std::lock_guard<std::mutex> lk(mu);
        auto it = cache.find(sig);
        if (it != cache.end()) return it->second;
    }
    size_t wsig = sig + 8;
    Ival v = idiv(Ival::point(2), isqrt(const_pi(wsig), wsig), sig);
    std::lock_guard<std::mutex> lk(mu);
    cache[sig] = v;
    return v;
}

} // namespace dip
