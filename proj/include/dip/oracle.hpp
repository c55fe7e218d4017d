#pragma once

#include "dip/semantics.hpp"

namespace dip {

struct McEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    long sample_count = 0;
    uint64_t seed = 0;
};

// Concrete seeded execution: runs the program `samples` times with real
// Gaussian/Laplace draws and counts how often the output equals o.
McEstimate mc_prob(const Program& p, const Rational& eps, const Valuation& u,
                   const Valuation& o, long samples, uint64_t seed);

// One pass, full histogram over outputs (keyed by valuation_key).
std::map<std::string, long> mc_histogram(const Program& p, const Rational& eps,
                                         const Valuation& u, long samples, uint64_t seed);

} // namespace dip
