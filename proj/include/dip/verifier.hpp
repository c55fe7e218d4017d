#pragma once

#include <optional>

#include "dip/quadrature.hpp"

namespace dip {

enum class Verdict { DP, NotDP, Unknown };

std::string verdict_str(Verdict v, bool strict_mode = false);

struct VerificationParams {
    Rational eps = Rational(1, 2); // privacy parameter
    Rational eps_prv = Rational(1, 2);
    Rational delta = Rational(1, 100);
    unsigned rho = 16;     // precision in bits
    unsigned max_rho = 32; // refinement cap
    ThresholdPolicy thresholds;
    bool optimize = true;
    bool strict = false; // strict DP (< instead of <=)
    size_t sig = 64;     // working significand bits; doubles on refinement
    long node_budget = 1000000;
    int jobs = 1;
    bool use_store = true; // memoization toggle (testing)
};

struct AdjacencyRelation {
    std::vector<std::pair<Valuation, Valuation>> pairs; // ordered (u, u')
};

struct ComputeEntry {
    Ival enclosure;
    bool conforming = true;
    Rational tail_slack = 0;
};

// Insert-once memo for plain and scaled output probabilities.
class ProbabilityStore {
public:
    const ComputeEntry* find_plain(const std::string& key) const;
    const ComputeEntry* find_scaled(const std::string& key) const;
    void put_plain(const std::string& key, ComputeEntry e);
    void put_scaled(const std::string& key, ComputeEntry e);
    void clear();
    Rational max_tail_slack() const;

private:
    std::map<std::string, ComputeEntry> plain_, scaled_;
};

struct PairCheck {
    Valuation u, u2;
    Rational delta_min = 0, delta_max = 0;
    Verdict result = Verdict::Unknown;
    // outputs with positive certified contribution to delta_min
    std::vector<std::pair<Valuation, Rational>> counterexample_outputs;
};

struct Report {
    Verdict verdict = Verdict::Unknown;
    unsigned precision_used = 0;
    std::vector<PairCheck> pairs;
    std::optional<std::pair<Valuation, Valuation>> counterexample;
    Rational tail_slack = 0; // max total tail slack over computed entries
    DepthStats depth;
    long timings_ms = 0;
    bool strict_mode = false;
    bool at_max_precision = false; // Unknown at the refinement cap
    std::string to_json() const;
};

// rho-approximation of Pr[eps,u,o,p]; in adaptive mode the result width is at
// most 2^-rho. target_scale shrinks the internal budget so a later e^{eps_prv}
// scaling still meets the caller's width contract.
ComputeEntry compute(const Program& p, const Valuation& u, const Valuation& o,
                     unsigned rho, const VerificationParams& vp, long extra_bits = 0);

// e^{eps_prv} * Pr[eps,u,o,p] from an already computed plain entry.
ComputeEntry compute_scale(const ComputeEntry& plain, unsigned rho,
                           const VerificationParams& vp);

PairCheck verify_pair(const Valuation& u, const Valuation& u2, const Rational& delta,
                      const std::vector<Valuation>& outputs, const ProbabilityStore& store,
                      bool strict);

Report verify_dp(const Program& p, const AdjacencyRelation& adj,
                 const VerificationParams& vp, unsigned rho, size_t sig);

Report verify_with_refinement(const Program& p, const AdjacencyRelation& adj,
                              const VerificationParams& vp);

// Test oracle: brute-forces the subset definition of DP over the outputs that
// have visible mass and compares with the per-output rephrasing. Returns false
// only when both procedures are decisive and disagree.
bool check_rephrasing(const Program& p, const AdjacencyRelation& adj,
                      const VerificationParams& vp);

// Plans for every final state of p on input u (used for stats and dumps).
std::vector<IntegralPlan> plans_for_input(const Program& p, const Valuation& u,
                                          const VerificationParams& vp);

} // namespace dip
