#pragma once

#include "dip/interval.hpp"
#include "dip/semantics.hpp"

namespace dip {

// max-of (lower) or min-of (upper) list of affine expressions over outer
// integration variables. Box truncation constants are stored separately so
// term lists carry only guard-derived bounds.
struct AffineBound {
    std::vector<AffineExpr> terms; // may be empty (box-only bound)
    Dyadic box;                    // truncation constant, always active
    bool is_upper = false;         // min-of for uppers, max-of for lowers
};

struct PlanNode {
    enum class Kind { Integral, Product };
    Kind kind = Kind::Integral;

    // Integral
    std::string var;
    DistSpec dist;
    AffineBound lower, upper;
    std::vector<PlanNode> body; // product of inner factors; empty = leaf

    // Product
    std::vector<PlanNode> factors;

    int depth() const;
};

struct ThresholdInfo {
    std::map<std::string, Dyadic> th; // per-variable threshold
    Rational tail_slack = 0;          // certified upper bound on total tail mass
};

struct IntegralPlan {
    PlanNode root; // Product node
    Rational tail_slack = 0;
    bool zero = false; // infeasible or zero-measure path
    int depth() const { return zero ? 0 : root.depth(); }
};

enum class ThresholdMode { Fixed, Adaptive };

struct ThresholdPolicy {
    ThresholdMode mode = ThresholdMode::Fixed;
    Rational fixed_gauss = 4;
    Rational fixed_laplace = 8;
};

// Picks per-variable truncation thresholds. In adaptive mode the per-variable
// tail bounds sum to at most `tail_budget`. In fixed mode the given thresholds
// are used and the slack is the certified tail mass they leave behind.
ThresholdInfo choose_threshold(const GuardSystem& gs, const ThresholdPolicy& policy,
                               const Rational& tail_budget, size_t sig);

// Builds the truncated nested-integral plan for one path. With optimize the
// dependency graph is factored by GenExpr; otherwise the layers nest fully in
// sampling order.
IntegralPlan build_plan(const GuardSystem& gs, const Rational& eps,
                        const ThresholdInfo& th, bool optimize, size_t sig);

struct DepthStats {
    int max_depth = 0;
    double avg_depth = 0.0;
};

DepthStats depth_stats(const std::vector<IntegralPlan>& plans);

// Scale of the distribution once eps is fixed: b = a/eps.
inline Rational dist_scale(const DistSpec& d, const Rational& eps) {
    return d.scale_num / eps;
}

// Standard deviation as an enclosure (sqrt(2)*b for Laplace).
Ival dist_sigma(const DistSpec& d, const Rational& eps, size_t sig);

// Certified upper bound on the two-sided tail mass P(|X - mu| > th*sigma)
// for a standardized threshold. Independent of mu and sigma.
Rational tail_mass_upper(DistKind kind, const Dyadic& th, size_t sig);

} // namespace dip
