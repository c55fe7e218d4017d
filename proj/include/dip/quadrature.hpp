#pragma once

#include "dip/integrals.hpp"
#include "dip/interval.hpp"

namespace dip {

struct QuadPolicy {
    size_t sig = 64;               // working significand bits
    long node_budget = 1000000;    // point evaluations per plan
    bool force_adaptive_leaf = false; // bypass the CDF fast path (testing)
};

// Rigorous pointwise density and CDF enclosures for one sampled variable,
// materialized at a fixed eps.
class DensityKernel {
public:
    DensityKernel() = default;
    DensityKernel(const DistSpec& d, const Rational& eps, size_t sig);

    DistKind kind() const { return kind_; }
    const Rational& mean() const { return mu_; }

    // Enclosure of the density over [a, b] (sharp: unimodal at the mean).
    Ival pdf_range(const Dyadic& a, const Dyadic& b) const;
    Ival pdf_point(const Dyadic& x) const { return pdf_range(x, x); }
    // Enclosure of the derivative of the density over [a, b].
    Ival pdf_deriv_range(const Dyadic& a, const Dyadic& b) const;
    // Enclosure of the integral of the density over [a, b], a <= b.
    Ival mass(const Dyadic& a, const Dyadic& b) const;
    // CDF enclosure at a point.
    Ival cdf(const Dyadic& x) const;

private:
    DistKind kind_ = DistKind::Gaussian;
    Rational mu_;
    size_t sig_ = 64;
    Ival b_;         // scale
    Ival inv_b_;     // 1/b
    Ival coef_;      // density peak value
    Ival erf_scale_; // Gaussian: 1/(b*sqrt(2))
};

// Evaluates an integral plan to a certified enclosure of width <= target
// (unless the node budget runs out, reported via `conforming`).
struct EvalResult {
    Ival value;
    bool conforming = true;
    long nodes_used = 0;
};

EvalResult eval_plan(const IntegralPlan& plan, const Rational& eps,
                     const Dyadic& target_width, const QuadPolicy& policy);

// e^x for rational x; width shrinks with sig.
Ival enclose_exp(const Rational& x, size_t sig);

// Outward-rounded product (used for the e^{eps_prv} scaling).
Ival scale(const Ival& e, const Ival& f, size_t sig);

} // namespace dip
