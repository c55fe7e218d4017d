#include "dip/benchmarks.hpp"

#include <sstream>

#include <json.hpp>

#include "dip/realfuncs.hpp"

namespace dip {

namespace {

struct Emit {
    std::ostringstream os;
    int indent = 0;
    void line(const std::string& s) {
        for (int i = 0; i < indent; ++i) os << "  ";
        os << s << "\n";
    }
};

std::string rat(const Rational& q) { return rational_str(q); }

const char* dist_name(DistKind k) { return k == DistKind::Gaussian ? "gauss" : "lap"; }

struct SvtShape {
    DistKind threshold_dist = DistKind::Gaussian;
    bool noisy_threshold = true;
    DistKind query_dist = DistKind::Gaussian;
    bool noisy_query = true;
    Rational threshold_scale; // a in a/eps
    Rational query_scale;
    bool top_when_ge = true; // top when query >= threshold (Ge variants flip)
    bool exit_on_top = true; // stop after c tops
};

// Shared SVT emitter. All outputs are pre-assigned bottom; the per-iteration
// branch writes top and either stops or continues depending on the variant.
void emit_svt_iter(Emit& e, const SvtShape& s, int i, int n, int tops, int c) {
    if (i > n) return;
    std::string q = "q" + std::to_string(i);
    std::string out = "out" + std::to_string(i);
    std::string guard;
    if (s.noisy_query) {
        std::string r = "r" + std::to_string(i);
        e.line(r + " ~ " + dist_name(s.query_dist) + "(" + q + ", " +
               rat(s.query_scale) + "/eps);");
        std::string rhs = s.noisy_threshold ? "rT" : "t";
        guard = r + (s.top_when_ge ? " >= " : " <= ") + rhs;
    } else {
        // raw query against the (noisy) threshold: rT <= q_i encodes q_i >= rT
        guard = std::string("rT") + (s.top_when_ge ? " <= " : " >= ") + q;
    }
    e.line("if (" + guard + ") {");
    ++e.indent;
    e.line(out + " := 1;");
    if (!s.exit_on_top || tops + 1 < c) emit_svt_iter(e, s, i + 1, n, tops + 1, c);
    --e.indent;
    if (i + 1 <= n) {
        e.line("} else {");
        ++e.indent;
        emit_svt_iter(e, s, i + 1, n, tops, c);
        --e.indent;
    }
    e.line("}");
}

std::string emit_svt(const BenchmarkSpec& spec, const SvtShape& s) {
    Emit e;
    for (int i = 1; i <= spec.n; ++i)
        e.line("input q" + std::to_string(i) + " in {0, 1};");
    for (int i = 1; i <= spec.n; ++i)
        e.line("output out" + std::to_string(i) + " in {0, 1};");
    for (int i = 1; i <= spec.n; ++i)
        e.line("out" + std::to_string(i) + " := 0;");
    e.line("t := " + rat(spec.threshold) + ";");
    if (s.noisy_threshold)
        e.line("rT ~ " + std::string(dist_name(s.threshold_dist)) + "(t, " +
               rat(s.threshold_scale) + "/eps);");
    emit_svt_iter(e, s, 1, spec.n, 0, spec.c);
    return e.os.str();
}

void emit_nm_tree(Emit& e, int champ, int next, int n, bool maximize) {
    if (next > n) {
        e.line("out := " + std::to_string(champ) + ";");
        return;
    }
    std::string rc = "r" + std::to_string(champ);
    std::string rn = "r" + std::to_string(next);
    e.line("if (" + rn + (maximize ? " > " : " < ") + rc + ") {");
    ++e.indent;
    emit_nm_tree(e, next, next + 1, n, maximize);
    --e.indent;
    e.line("} else {");
    ++e.indent;
    emit_nm_tree(e, champ, next + 1, n, maximize);
    --e.indent;
    e.line("}");
}

std::string emit_noisy_extreme(const BenchmarkSpec& spec, DistKind dist, bool maximize) {
    Emit e;
    for (int i = 1; i <= spec.n; ++i)
        e.line("input q" + std::to_string(i) + " in {0, 1};");
    std::string dom = "{1";
    for (int i = 2; i <= spec.n; ++i) dom += ", " + std::to_string(i);
    dom += "}";
    e.line("output out in " + dom + ";");
    Rational scale = dist == DistKind::Gaussian ? Rational(4) * spec.sens : Rational(2);
    for (int i = 1; i <= spec.n; ++i)
        e.line("r" + std::to_string(i) + " ~ " + dist_name(dist) + "(q" +
               std::to_string(i) + ", " + rat(scale) + "/eps);");
    emit_nm_tree(e, 1, 2, spec.n, maximize);
    return e.os.str();
}

void emit_kmm_query(Emit& e, const BenchmarkSpec& spec, DistKind dist, int i) {
    if (i > spec.n) return;
    std::string r = "r" + std::to_string(i);
    std::string out = "out" + std::to_string(i);
    std::string mn = "min" + std::to_string(spec.k);
    std::string mx = "max" + std::to_string(spec.k);
    e.line(r + " ~ " + dist_name(dist) + "(q" + std::to_string(i) + ", 4/eps);");
    e.line("if (" + r + " >= " + mn + ") {");
    ++e.indent;
    e.line("if (" + r + " < " + mx + ") {");
    ++e.indent;
    e.line(out + " := 0;");
    emit_kmm_query(e, spec, dist, i + 1); // in range: continue
    --e.indent;
    e.line("} else {");
    ++e.indent;
    e.line(out + " := 1;"); // above range: stop
    --e.indent;
    e.line("}");
    --e.indent;
    e.line("} else {");
    ++e.indent;
    e.line("if (" + r + " < " + mx + ") {");
    ++e.indent;
    e.line(out + " := 0;"); // below range: stop
    --e.indent;
    e.line("} else {");
    ++e.indent;
    e.line("skip;"); // empty region; falls through as in the pseudocode
    emit_kmm_query(e, spec, dist, i + 1);
    --e.indent;
    e.line("}");
    --e.indent;
    e.line("}");
}

std::string emit_kmm(const BenchmarkSpec& spec, DistKind dist) {
    if (spec.k < 2) throw UnsupportedSpec("k-Min-Max requires k >= 2");
    if (spec.n < spec.k + 1) throw UnsupportedSpec("k-Min-Max requires n > k");
    Emit e;
    for (int i = 1; i <= spec.n; ++i)
        e.line("input q" + std::to_string(i) + " in {0, 1};");
    for (int i = 1; i <= spec.n; ++i)
        e.line("output out" + std::to_string(i) + " in {0, 1, 2};");
    for (int i = 1; i <= spec.n; ++i)
        e.line("out" + std::to_string(i) + " := 2;");
    Rational prefix_scale = Rational(4) * Rational(spec.k);
    e.line("r1 ~ " + std::string(dist_name(dist)) + "(q1, " + rat(prefix_scale) +
           "/eps);");
    e.line("min1 := r1;");
    e.line("max1 := r1;");
    for (int j = 2; j <= spec.k; ++j) {
        std::string r = "r" + std::to_string(j);
        std::string pm = std::to_string(j - 1), cm = std::to_string(j);
        e.line(r + " ~ " + dist_name(dist) + "(q" + std::to_string(j) + ", " +
               rat(prefix_scale) + "/eps);");
        e.line("if (" + r + " > max" + pm + ") {");
        ++e.indent;
        e.line("if (" + r + " > min" + pm + ") {");
        ++e.indent;
        e.line("max" + cm + " := " + r + ";");
        e.line("min" + cm + " := min" + pm + ";");
        --e.indent;
        e.line("} else {");
        ++e.indent;
        e.line("max" + cm + " := max" + pm + ";");
        e.line("min" + cm + " := min" + pm + ";");
        --e.indent;
        e.line("}");
        --e.indent;
        e.line("} else {");
        ++e.indent;
        e.line("if (" + r + " < min" + pm + ") {");
        ++e.indent;
        e.line("min" + cm + " := " + r + ";");
        e.line("max" + cm + " := max" + pm + ";");
        --e.indent;
        e.line("} else {");
        ++e.indent;
        e.line("min" + cm + " := min" + pm + ";");
        e.line("max" + cm + " := max" + pm + ";");
        --e.indent;
        e.line("}");
        --e.indent;
        e.line("}");
    }
    emit_kmm_query(e, spec, dist, spec.k + 1);
    return e.os.str();
}

void emit_mrange_iter(Emit& e, const BenchmarkSpec& spec, int i, int j) {
    if (i > spec.n) return;
    int next_i = j == spec.m ? i + 1 : i;
    int next_j = j == spec.m ? 1 : j + 1;
    int idx = spec.m * (i - 1) + j;
    std::string r = "r" + std::to_string(idx);
    std::string out = "out" + std::to_string(idx);
    std::string low = "low" + std::to_string(j);
    std::string high = "high" + std::to_string(j);
    e.line(r + " ~ lap(q" + std::to_string(idx) + ", 4/eps);");
    e.line("if (" + r + " >= " + low + ") {");
    ++e.indent;
    e.line("if (" + r + " < " + high + ") {");
    ++e.indent;
    emit_mrange_iter(e, spec, next_i, next_j); // in range: continue
    --e.indent;
    e.line("} else {");
    ++e.indent;
    e.line(out + " := 1;"); // above: stop
    --e.indent;
    e.line("}");
    --e.indent;
    e.line("} else {");
    ++e.indent;
    e.line("if (" + r + " < " + high + ") {");
    ++e.indent;
    e.line(out + " := 0;"); // below: stop
    --e.indent;
    e.line("} else {");
    ++e.indent;
    e.line(out + " := 0;"); // noisy range is empty: stop
    --e.indent;
    e.line("}");
    --e.indent;
    e.line("}");
}

std::string emit_mrange(const BenchmarkSpec& spec) {
    if (spec.m < 1) throw UnsupportedSpec("m-Range requires m >= 1");
    Emit e;
    int total = spec.m * spec.n;
    for (int i = 1; i <= total; ++i)
        e.line("input q" + std::to_string(i) + " in {0, 1};");
    for (int i = 1; i <= total; ++i)
        e.line("output out" + std::to_string(i) + " in {0, 1, 2};");
    e.line("t := " + rat(spec.threshold) + ";");
    for (int i = 1; i <= total; ++i)
        e.line("out" + std::to_string(i) + " := 2;");
    Rational tscale = Rational(4) * Rational(spec.m);
    for (int j = 1; j <= spec.m; ++j) {
        e.line("low" + std::to_string(j) + " ~ lap(t, " + rat(tscale) + "/eps);");
        e.line("high" + std::to_string(j) + " ~ lap(t, " + rat(tscale) + "/eps);");
    }
    emit_mrange_iter(e, spec, 1, 1);
    return e.os.str();
}

} // namespace

std::string emit(const BenchmarkSpec& spec) {
    if (spec.n < 1) throw UnsupportedSpec("input length must be >= 1");
    if (spec.c < 1) throw UnsupportedSpec("c must be >= 1");
    const Rational D = spec.sens;
    SvtShape s;
    switch (spec.family) {
        case BenchFamily::SvtGauss:
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            return emit_svt(spec, s);
        case BenchFamily::SvtLaplace:
            s.threshold_dist = s.query_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            return emit_svt(spec, s);
        case BenchFamily::SvtMix1:
            s.threshold_dist = DistKind::Laplace;
            s.query_dist = DistKind::Gaussian;
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            return emit_svt(spec, s);
        case BenchFamily::SvtMix2:
            s.threshold_dist = DistKind::Gaussian;
            s.query_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            return emit_svt(spec, s);
        case BenchFamily::SvtGaussGe:
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            s.top_when_ge = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtLaplaceGe:
            s.threshold_dist = s.query_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            s.top_when_ge = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtMix1Ge:
            s.threshold_dist = DistKind::Laplace;
            s.query_dist = DistKind::Gaussian;
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            s.top_when_ge = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtMix2Ge:
            s.threshold_dist = DistKind::Gaussian;
            s.query_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.query_scale = 4 * D;
            s.top_when_ge = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtGaussLeaky1:
            s.noisy_threshold = false;
            s.query_scale = 2 * D;
            return emit_svt(spec, s);
        case BenchFamily::SvtGaussLeaky2:
            s.threshold_scale = 2 * D;
            s.noisy_query = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtGaussGeLeaky1:
            s.noisy_threshold = false;
            s.query_scale = 2 * D;
            s.top_when_ge = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtGaussGeLeaky2:
            s.threshold_scale = 2 * D;
            s.noisy_query = false;
            s.top_when_ge = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtLaplaceLeaky3:
            s.threshold_dist = s.query_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.query_scale = 2 * D * Rational(spec.c);
            return emit_svt(spec, s);
        case BenchFamily::SvtLaplaceLeaky4:
            s.threshold_dist = s.query_dist = DistKind::Laplace;
            s.threshold_scale = 4 * D;
            s.query_scale = 4 * D / 3;
            return emit_svt(spec, s);
        case BenchFamily::SvtLaplaceLeaky5:
            s.threshold_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.noisy_query = false;
            s.exit_on_top = false;
            return emit_svt(spec, s);
        case BenchFamily::SvtLaplaceLeaky6:
            s.threshold_dist = s.query_dist = DistKind::Laplace;
            s.threshold_scale = 2 * D;
            s.query_scale = 2 * D;
            s.exit_on_top = false;
            return emit_svt(spec, s);
        case BenchFamily::NoisyMaxGauss:
            return emit_noisy_extreme(spec, DistKind::Gaussian, true);
        case BenchFamily::NoisyMaxLaplace:
            return emit_noisy_extreme(spec, DistKind::Laplace, true);
        case BenchFamily::NoisyMinGauss:
            return emit_noisy_extreme(spec, DistKind::Gaussian, false);
        case BenchFamily::NoisyMinLaplace:
            return emit_noisy_extreme(spec, DistKind::Laplace, false);
        case BenchFamily::KMinMaxGauss:
            return emit_kmm(spec, DistKind::Gaussian);
        case BenchFamily::KMinMaxLaplace:
            return emit_kmm(spec, DistKind::Laplace);
        case BenchFamily::MRange:
            return emit_mrange(spec);
    }
    throw UnsupportedSpec("unknown family");
}

Rational svt_gauss_budget(const Rational& eps, const Rational& delta, size_t sig) {
    if (eps <= 0) throw DeltaOutOfRange("eps must be positive");
    if (delta <= 0 || delta > 1) throw DeltaOutOfRange("delta must be in (0, 1]");
    Rational first = 5 * eps * eps / 32;
    if (delta == 1) return first;
    Ival lninv = ln_rational(Rational(1) / delta, sig);
    Ival root = isqrt(Ival(max(lninv.lo, Dyadic()), lninv.hi), sig);
    Ival sqrt5 = Ival(sqrt_dyadic(Dyadic(5), sig, Round::Down),
                      sqrt_dyadic(Dyadic(5), sig, Round::Up));
    Ival epsi = Ival::from_rational(eps, sig);
    Ival second = imul(imul(sqrt5, epsi, sig), root, sig);
    return first + second.hi.mul_pow2(-1).to_rational();
}

AdjacencyRelation adjacency_all(int n) {
    AdjacencyRelation adj;
    std::vector<Valuation> inputs;
    std::vector<DomainDecl> decls;
    for (int i = 1; i <= n; ++i)
        decls.push_back({"q" + std::to_string(i), {Rational(0), Rational(1)}});
    inputs = enumerate_valuations(decls);
    for (auto& a : inputs)
        for (auto& b : inputs)
            if (a != b) adj.pairs.push_back({a, b});
    return adj;
}

AdjacencyRelation adjacency_single(int n) {
    AdjacencyRelation adj;
    Valuation zero, one;
    for (int i = 1; i <= n; ++i) {
        zero["q" + std::to_string(i)] = 0;
        one["q" + std::to_string(i)] = i == n ? 1 : 0;
    }
    adj.pairs.push_back({zero, one});
    adj.pairs.push_back({one, zero});
    return adj;
}

AdjacencyRelation adjacency_from_json(const std::string& text) {
    AdjacencyRelation adj;
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_array()) throw std::runtime_error("adjacency file: expected a JSON array");
    for (auto& e : j) {
        Valuation u, u2;
        for (auto& [k, v] : e.at("u").items()) {
            auto q = parse_rational(v.get<std::string>());
            if (!q) throw std::runtime_error("adjacency file: bad rational");
            u[k] = *q;
        }
        for (auto& [k, v] : e.at("u2").items()) {
            auto q = parse_rational(v.get<std::string>());
            if (!q) throw std::runtime_error("adjacency file: bad rational");
            u2[k] = *q;
        }
        adj.pairs.push_back({u, u2});
    }
    return adj;
}

namespace {
const std::pair<BenchFamily, const char*> kFamilyNames[] = {
    {BenchFamily::SvtGauss, "svt-gauss"},
    {BenchFamily::SvtLaplace, "svt-laplace"},
    {BenchFamily::SvtMix1, "svt-mix1"},
    {BenchFamily::SvtMix2, "svt-mix2"},
    {BenchFamily::SvtGaussGe, "svt-gauss-ge"},
    {BenchFamily::SvtLaplaceGe, "svt-laplace-ge"},
    {BenchFamily::SvtMix1Ge, "svt-mix1-ge"},
    {BenchFamily::SvtMix2Ge, "svt-mix2-ge"},
    {BenchFamily::SvtGaussLeaky1, "svt-gauss-leaky-1"},
    {BenchFamily::SvtGaussLeaky2, "svt-gauss-leaky-2"},
    {BenchFamily::SvtGaussGeLeaky1, "svt-gauss-ge-leaky-1"},
    {BenchFamily::SvtGaussGeLeaky2, "svt-gauss-ge-leaky-2"},
    {BenchFamily::SvtLaplaceLeaky3, "svt-laplace-leaky-3"},
    {BenchFamily::SvtLaplaceLeaky4, "svt-laplace-leaky-4"},
    {BenchFamily::SvtLaplaceLeaky5, "svt-laplace-leaky-5"},
    {BenchFamily::SvtLaplaceLeaky6, "svt-laplace-leaky-6"},
    {BenchFamily::NoisyMaxGauss, "noisy-max-gauss"},
    {BenchFamily::NoisyMaxLaplace, "noisy-max-laplace"},
    {BenchFamily::NoisyMinGauss, "noisy-min-gauss"},
    {BenchFamily::NoisyMinLaplace, "noisy-min-laplace"},
    {BenchFamily::KMinMaxGauss, "k-min-max-gauss"},
    {BenchFamily::KMinMaxLaplace, "k-min-max-laplace"},
    {BenchFamily::MRange, "m-range"},
};
} // namespace

std::optional<BenchFamily> family_from_name(const std::string& name) {
    for (auto& [f, n] : kFamilyNames)
        if (name == n) return f;
    return std::nullopt;
}

std::string family_name(BenchFamily f) {
    for (auto& [g, n] : kFamilyNames)
        if (g == f) return n;
    return "?";
}

std::vector<BenchFamily> all_families() {
    std::vector<BenchFamily> out;
    for (auto& [f, n] : kFamilyNames) out.push_back(f);
    return out;
}

} // namespace dip
