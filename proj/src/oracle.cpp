#include "dip/oracle.hpp"

#include <cmath>
#include <random>

namespace dip {

namespace {

// Gaussian via the polar (Marsaglia) method and Laplace via inverse CDF, both
// driven by a pinned mt19937_64 stream so estimates are seed-deterministic.
struct Sampler {
    std::mt19937_64 rng;
    bool have_spare = false;
    double spare = 0.0;

    explicit Sampler(uint64_t seed) : rng(seed) {}

    double uniform01() {
        // 53-bit uniform in (0,1)
        uint64_t r = rng();
        return (static_cast<double>(r >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double gaussian(double mu, double sigma) {
        if (have_spare) {
            have_spare = false;
            return mu + sigma * spare;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare = v * f;
        have_spare = true;
        return mu + sigma * u * f;
    }

    double laplace(double mu, double b) {
        double u = uniform01() - 0.5;
        return mu - b * std::copysign(1.0, u) * std::log1p(-2.0 * std::fabs(u));
    }
};

struct ConcreteState {
    std::map<std::string, Rational> dom;
    std::map<std::string, double> real;
};

void run_stmt(const StmtPtr& s, ConcreteState& st, Sampler& rng, double eps) {
    switch (s->kind) {
        case Stmt::Kind::Skip:
            break;
        case Stmt::Kind::DomAssign:
            st.dom[s->dom_var] = s->dom_value;
            break;
        case Stmt::Kind::Sample: {
            double mean = to_double(st.dom.at(s->mean_var));
            double scale = to_double(s->scale_num) / eps;
            st.real[s->real_var] = s->dist == DistKind::Gaussian
                                       ? rng.gaussian(mean, scale)
                                       : rng.laplace(mean, scale);
            break;
        }
        case Stmt::Kind::RealAssign: {
            double v = to_double(s->rhs.constant);
            for (auto& [var, c] : s->rhs.coeffs) v += to_double(c) * st.real.at(var);
            st.real[s->real_var] = v;
            break;
        }
        case Stmt::Kind::Block:
            for (auto& t : s->stmts) run_stmt(t, st, rng, eps);
            break;
        case Stmt::Kind::If: {
            auto side = [&](const BOperand& op) {
                if (op.is_dom) return to_double(st.dom.at(op.dom_var));
                double v = to_double(op.real.constant);
                for (auto& [var, c] : op.real.coeffs) v += to_double(c) * st.real.at(var);
                return v;
            };
            double a = side(s->cond.lhs), b = side(s->cond.rhs);
            bool taken = false;
            switch (s->cond.cmp) {
                case Cmp::Eq: taken = a == b; break;
                case Cmp::Ne: taken = a != b; break;
                case Cmp::Le: taken = a <= b; break;
                case Cmp::Lt: taken = a < b; break;
                case Cmp::Ge: taken = a >= b; break;
                case Cmp::Gt: taken = a > b; break;
            }
            run_stmt(taken ? s->then_branch : s->else_branch, st, rng, eps);
            break;
        }
    }
}

} // namespace

std::map<std::string, long> mc_histogram(const Program& p, const Rational& eps,
                                         const Valuation& u, long samples, uint64_t seed) {
    std::map<std::string, long> hist;
    Sampler rng(seed);
    double e = to_double(eps);
    for (long i = 0; i < samples; ++i) {
        ConcreteState st;
        st.dom = u;
        run_stmt(p.body, st, rng, e);
        Valuation out;
        for (auto& d : p.outputs) {
            auto it = st.dom.find(d.name);
            if (it != st.dom.end()) out[d.name] = it->second;
        }
        ++hist[valuation_key(out)];
    }
    return hist;
}

McEstimate mc_prob(const Program& p, const Rational& eps, const Valuation& u,
                   const Valuation& o, long samples, uint64_t seed) {
    McEstimate est;
    est.sample_count = samples;
    est.seed = seed;
    auto hist = mc_histogram(p, eps, u, samples, seed);
    long hits = 0;
    auto it = hist.find(valuation_key(o));
    if (it != hist.end()) hits = it->second;
    est.mean = static_cast<double>(hits) / static_cast<double>(samples);
    est.standard_error =
        std::sqrt(std::max(est.mean * (1.0 - est.mean), 0.0) / static_cast<double>(samples));
    return est;
}

} // namespace dip
