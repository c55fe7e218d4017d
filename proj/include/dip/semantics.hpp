#pragma once

#include <variant>

#include "dip/ast.hpp"

namespace dip {

struct DistSpec {
    DistKind kind = DistKind::Gaussian;
    Rational mean;
    Rational scale_num; // a in a/eps; the scale materializes once eps is fixed

    bool operator==(const DistSpec& o) const {
        return kind == o.kind && mean == o.mean && scale_num == o.scale_num;
    }
};

// Symbolic binding of a real variable: the sampled distribution for
// independent variables, an affine form over independents for dependent ones.
using BetaVal = std::variant<DistSpec, AffineExpr>;

struct SymState {
    std::map<std::string, Rational> alpha;
    std::map<std::string, BetaVal> beta;
    std::vector<std::string> sample_order; // independents in sampling order
    std::vector<BExpr> guards;
};

struct FinalState {
    SymState st;
    std::vector<BExpr> g_const; // domain-only comparisons
    std::vector<BExpr> g_rand;  // comparisons mentioning a real variable
};

using Valuation = std::map<std::string, Rational>;

// All final states of p started from input valuation `input`.
std::vector<FinalState> exec_program(const Program& p, const Valuation& input);

// Final states matching output valuation o.
std::vector<FinalState> run(const Valuation& u, const Valuation& o, const Program& p);

bool eval_const(const FinalState& fs);

bool cmp_eval(const Rational& a, Cmp c, const Rational& b);

// Linear constraint over independent random variables, normalized to
// `expr cmp 0` with cmp in {Lt, Le, Eq, Ne}.
struct LinConstraint {
    AffineExpr expr;
    Cmp cmp = Cmp::Lt;
};

struct GuardSystem {
    std::vector<std::string> vars; // independents mentioned, sampling order
    std::map<std::string, DistSpec> dist;
    std::vector<LinConstraint> constraints;
    bool infeasible = false;   // some constant guard folded to false
    bool zero_measure = false; // an equality constraint over a random affine
};

// Requires eval_const(fs); substitutes dependents away and normalizes.
GuardSystem to_guard_system(const FinalState& fs);

std::vector<Valuation> enumerate_valuations(const std::vector<DomainDecl>& decls);
std::string valuation_key(const Valuation& v);

} // namespace dip
