#pragma once

#include <optional>

#include "dip/verifier.hpp"

namespace dip {

enum class BenchFamily {
    SvtGauss, SvtLaplace, SvtMix1, SvtMix2,
    SvtGaussGe, SvtLaplaceGe, SvtMix1Ge, SvtMix2Ge,
    SvtGaussLeaky1, SvtGaussLeaky2, SvtGaussGeLeaky1, SvtGaussGeLeaky2,
    SvtLaplaceLeaky3, SvtLaplaceLeaky4, SvtLaplaceLeaky5, SvtLaplaceLeaky6,
    NoisyMaxGauss, NoisyMaxLaplace, NoisyMinGauss, NoisyMinLaplace,
    KMinMaxGauss, KMinMaxLaplace,
    MRange,
};

struct BenchmarkSpec {
    BenchFamily family = BenchFamily::SvtGauss;
    int n = 2;              // input length
    int k = 2;              // k-Min-Max prefix length (k >= 2)
    int m = 2;              // m-Range dimensions
    int c = 1;              // SVT: stop after c top outputs
    Rational threshold = 0; // T
    Rational sens = 1;      // sensitivity parameter
};

struct UnsupportedSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DeltaOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Emits DiPGauss source text for the given benchmark.
std::string emit(const BenchmarkSpec& spec);

// Certified upper endpoint of 5 eps^2/32 + (sqrt(5)/2) eps sqrt(ln(1/delta)).
Rational svt_gauss_budget(const Rational& eps, const Rational& delta, size_t sig = 96);

// Ordered pairs over {0,1}^n inputs named q1..qn.
AdjacencyRelation adjacency_all(int n);
AdjacencyRelation adjacency_single(int n);
AdjacencyRelation adjacency_from_json(const std::string& text);

std::optional<BenchFamily> family_from_name(const std::string& name);
std::string family_name(BenchFamily f);
std::vector<BenchFamily> all_families();

} // namespace dip
