#include "dip/quadrature.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "dip/realfuncs.hpp"

namespace dip {

DensityKernel::DensityKernel(const DistSpec& d, const Rational& eps, size_t sig)
    : kind_(d.kind), mu_(d.mean), sig_(sig) {
    Rational b = dist_scale(d, eps);
    b_ = Ival::from_rational(b, sig);
    inv_b_ = idiv(Ival::point(1), b_, sig);
    if (kind_ == DistKind::Gaussian) {
        coef_ = imul(inv_b_, const_inv_sqrt_2pi(sig), sig);
        erf_scale_ = idiv(Ival::point(1), imul(b_, const_sqrt2(sig), sig), sig);
    } else {
        coef_ = imul(inv_b_, Ival::from_rational(Rational(1, 2), sig), sig);
    }
}

namespace {

Ival neg_half_square(const Ival& z, size_t sig) {
    Ival z2 = imul(z, z, sig);
    return Ival((-z2.hi).mul_pow2(-1), (-z2.lo).mul_pow2(-1));
}

} // namespace

Ival DensityKernel::pdf_range(const Dyadic& a, const Dyadic& b) const {
    Ival mu = Ival::from_rational(mu_, sig_);
    auto at = [&](const Dyadic& x) {
        Ival z = imul(isub(Ival(x), mu, sig_), inv_b_, sig_);
        if (kind_ == DistKind::Gaussian)
            return imul(coef_, exp_iv(neg_half_square(z, sig_), sig_), sig_);
        Dyadic zl = abs(z.lo), zh = abs(z.hi);
        Dyadic amin = z.contains(Dyadic()) ? Dyadic() : min(zl, zh);
        Dyadic amax = max(zl, zh);
        return imul(coef_, exp_iv(Ival(-amax, -amin), sig_), sig_);
    };
    if (a == b) return at(a);
    Ival pa = at(a), pb = at(b);
    Rational ar = a.to_rational(), br = b.to_rational();
    bool straddle = ar <= mu_ && mu_ <= br;
    Dyadic lo = min(pa.lo, pb.lo);
    Dyadic hi = straddle ? coef_.hi : max(pa.hi, pb.hi);
    return Ival(min(lo, hi), hi);
}

Ival DensityKernel::pdf_deriv_range(const Dyadic& a, const Dyadic& b) const {
    Ival f = pdf_range(a, b);
    if (kind_ == DistKind::Gaussian) {
        Ival mu = Ival::from_rational(mu_, sig_);
        Ival dist = isub(Ival(a, b), mu, sig_);
        Ival ib2 = imul(inv_b_, inv_b_, sig_);
        return -imul(imul(dist, ib2, sig_), f, sig_);
    }
    Ival fb = imul(f, inv_b_, sig_);
    Rational ar = a.to_rational(), br = b.to_rational();
    if (br <= mu_) return fb;  // left of the mean: increasing
    if (ar >= mu_) return -fb; // right: decreasing
    return ihull(fb, -fb);     // kink at the mean
}

Ival DensityKernel::cdf(const Dyadic& x) const {
    Ival mu = Ival::from_rational(mu_, sig_);
    if (kind_ == DistKind::Gaussian) {
        Ival arg = imul(isub(Ival(x), mu, sig_), erf_scale_, sig_);
        Ival e = erf_iv(arg, sig_);
        Ival v = iadd(Ival::point(1), e, sig_);
        Dyadic lo = max(v.lo.mul_pow2(-1), Dyadic());
        Dyadic hi = min(v.hi.mul_pow2(-1), Dyadic(1));
        return Ival(min(lo, hi), hi);
    }
    Rational xr = x.to_rational();
    Ival z = imul(isub(Ival(x), mu, sig_), inv_b_, sig_);
    if (xr <= mu_) {
        Ival e = exp_iv(Ival(min(z.lo, Dyadic()), min(z.hi, Dyadic())), sig_);
        Dyadic lo = max(e.lo.mul_pow2(-1), Dyadic());
        Dyadic hi = min(e.hi.mul_pow2(-1), Dyadic(1));
        return Ival(min(lo, hi), hi);
    }
    Ival e = exp_iv(Ival(min(-z.hi, Dyadic()), min(-z.lo, Dyadic())), sig_);
    Dyadic lo = (Dyadic(1) - e.hi.mul_pow2(-1)).round(sig_, Round::Down);
    Dyadic hi = (Dyadic(1) - e.lo.mul_pow2(-1)).round(sig_, Round::Up);
    lo = max(lo, Dyadic());
    hi = min(hi, Dyadic(1));
    return Ival(min(lo, hi), hi);
}

Ival DensityKernel::mass(const Dyadic& a, const Dyadic& b) const {
    if (a >= b) return Ival::zero();
    Ival ca = cdf(a), cb = cdf(b);
    Dyadic lo = max((cb.lo - ca.hi).round(sig_, Round::Down), Dyadic());
    Dyadic hi = min((cb.hi - ca.lo).round(sig_, Round::Up), Dyadic(1));
    return Ival(min(lo, hi), max(lo, hi));
}

namespace {

using Env = std::map<std::string, Ival>;

struct RunCtx {
    const QuadPolicy* pol = nullptr;
    long nodes = 0;
    bool over() const { return nodes > pol->node_budget; }
};

Ival affine_env_eval(const AffineExpr& e, const Env& env, size_t sig) {
    Ival acc = Ival::from_rational(e.constant, sig);
    for (auto& [v, c] : e.coeffs) {
        auto it = env.find(v);
        if (it == env.end()) throw std::logic_error("unbound variable in bound: " + v);
        acc = iadd(acc, imul(Ival::from_rational(c, sig), it->second, sig), sig);
    }
    return acc;
}

Ival eval_bound(const AffineBound& b, const Env& env, size_t sig) {
    Ival acc(b.box);
    for (auto& t : b.terms) {
        Ival ti = affine_env_eval(t, env, sig);
        if (b.is_upper)
            acc = Ival(min(acc.lo, ti.lo), min(acc.hi, ti.hi));
        else
            acc = Ival(max(acc.lo, ti.lo), max(acc.hi, ti.hi));
    }
    return acc;
}

struct Piece {
    Dyadic a, b;
    Ival fa;      // integrand at a
    Ival contrib; // enclosure of the piece integral
    uint64_t stamp = 0;
};

struct HeapEnt {
    Dyadic w;
    size_t idx;
    uint64_t stamp;
    bool operator<(const HeapEnt& o) const {
        int c = w.cmp(o.w);
        if (c != 0) return c < 0;
        return idx > o.idx;
    }
};

struct NodeEval {
    const PlanNode* node = nullptr;
    DensityKernel kernel;
    std::vector<NodeEval> children;
    bool leaf = false;
    bool closed = true;

    // persistent table for closed nodes; pieces sorted whenever prefix is valid
    std::vector<Piece> pieces;
    std::vector<Ival> prefix;
    Dyadic achieved = Dyadic(1); // total width after last refinement
    uint64_t stamp_counter = 0;
};

void collect_subtree(const PlanNode& n, std::set<std::string>& vars,
                     std::set<std::string>& refs) {
    if (n.kind == PlanNode::Kind::Product) {
        for (auto& f : n.factors) collect_subtree(f, vars, refs);
        return;
    }
    vars.insert(n.var);
    for (auto& t : n.lower.terms)
        for (auto& [v, c] : t.coeffs) refs.insert(v);
    for (auto& t : n.upper.terms)
        for (auto& [v, c] : t.coeffs) refs.insert(v);
    for (auto& c : n.body) collect_subtree(c, vars, refs);
}

NodeEval build_eval(const PlanNode& n, const Rational& eps, const QuadPolicy& pol) {
    NodeEval e;
    e.node = &n;
    e.kernel = DensityKernel(n.dist, eps, pol.sig);
    e.leaf = n.body.empty();
    for (auto& c : n.body) e.children.push_back(build_eval(c, eps, pol));
    std::set<std::string> vars{n.var}, refs;
    for (auto& c : n.body) collect_subtree(c, vars, refs);
    e.closed = true;
    for (auto& r : refs)
        if (!vars.count(r)) { e.closed = false; break; }
    return e;
}

Ival query(NodeEval& ne, const Ival& lo_limit, const Ival& up_limit, const Env& env,
           const Dyadic& tol, RunCtx& ctx, size_t sig);

Ival integrand_range(NodeEval& ne, const Ival& span, const Env& env, const Dyadic& tol,
                     RunCtx& ctx, size_t sig) {
    ++ctx.nodes;
    Ival acc = ne.kernel.pdf_range(span.lo, span.hi);
    Env env2 = env;
    env2[ne.node->var] = span;
    for (auto& c : ne.children) {
        Ival l = eval_bound(c.node->lower, env2, sig);
        Ival u = eval_bound(c.node->upper, env2, sig);
        acc = imul(acc, query(c, l, u, env2, tol, ctx, sig), sig);
    }
    return iclamp_nonneg(acc);
}

// Derivative of a child's value w.r.t. a moving limit: the child integrand at
// the limit, or 0 once the limit leaves the child's truncation box.
Ival boundary_density(NodeEval& child, const Ival& at, const Env& env, const Dyadic& tol,
                      RunCtx& ctx, size_t sig) {
    Dyadic blo = child.node->lower.box, bhi = child.node->upper.box;
    if (at.hi < blo || at.lo > bhi) return Ival::zero();
    Ival clipped(max(at.lo, blo), min(at.hi, bhi));
    Ival v = integrand_range(child, clipped, env, tol, ctx, sig);
    if (at.lo < blo || at.hi > bhi) v = ihull(v, Ival::zero());
    return v;
}

Ival slope_hull(const AffineBound& b, const std::string& var, size_t sig) {
    Ival acc = Ival::zero(); // the box term has slope 0
    for (auto& t : b.terms) {
        auto it = t.coeffs.find(var);
        Rational c = it == t.coeffs.end() ? Rational(0) : it->second;
        acc = ihull(acc, Ival::from_rational(c, sig));
    }
    return acc;
}

// Product of the children's values at a point of the integration variable.
Ival g_point(NodeEval& ne, const Dyadic& x, const Env& env, const Dyadic& tol,
             RunCtx& ctx, size_t sig) {
    ++ctx.nodes;
    Ival acc = Ival::point(1);
    Env env2 = env;
    env2[ne.node->var] = Ival(x);
    for (auto& c : ne.children) {
        Ival l = eval_bound(c.node->lower, env2, sig);
        Ival u = eval_bound(c.node->upper, env2, sig);
        acc = imul(acc, query(c, l, u, env2, tol, ctx, sig), sig);
    }
    return iclamp_nonneg(acc);
}

// Enclosure of the piece integral int_a^b pdf(y) * g(y) dy, where g is the
// product of the children's values. Anchored on the layer's mass so child
// enclosure widths enter the total error weighted by probability mass, not by
// box width:
//   int_s pdf*g = g(a) * mass(s) + int_s pdf * (g - g(a)),
// and g(y) - g(a) lies in [0, w] * g'([a,b]).
Ival piece_contrib(NodeEval& ne, const Dyadic& a, const Dyadic& b, const Ival& ga,
                   const Env& env, const Dyadic& tol_child, RunCtx& ctx, size_t sig) {
    Dyadic w = b - a;
    Ival span(a, b);
    Dyadic coarse = Dyadic::pow2(-10);

    Ival mass = ne.kernel.mass(a, b);
    ++ctx.nodes;
    if (ne.children.empty())
        return mass; // plain density layer: the mass is exact enough

    Env env2 = env;
    env2[ne.node->var] = span;
    std::vector<Ival> g;
    g.reserve(ne.children.size());
    for (auto& c : ne.children) {
        Ival l = eval_bound(c.node->lower, env2, sig);
        Ival u = eval_bound(c.node->upper, env2, sig);
        Ival gi = query(c, l, u, env2, max(tol_child, coarse), ctx, sig);
        if (gi.hi.is_zero()) return Ival::zero(); // region empty across the span
        g.push_back(gi);
    }
    Ival prod = Ival::point(1);
    for (auto& gi : g) prod = imul(prod, gi, sig);
    Ival hull_form = imul(mass, prod, sig);

    // derivative of g over the span
    Ival gderiv = Ival::zero();
    for (size_t i = 0; i < ne.children.size(); ++i) {
        NodeEval& c = ne.children[i];
        Ival su = slope_hull(c.node->upper, ne.node->var, sig);
        Ival sl = slope_hull(c.node->lower, ne.node->var, sig);
        Ival gp = Ival::zero();
        if (su.lo != su.hi || !su.lo.is_zero()) {
            Ival ur = eval_bound(c.node->upper, env2, sig);
            gp = iadd(gp, imul(su, boundary_density(c, ur, env2, coarse, ctx, sig), sig),
                      sig);
        }
        if (sl.lo != sl.hi || !sl.lo.is_zero()) {
            Ival lr = eval_bound(c.node->lower, env2, sig);
            gp = isub(gp, imul(sl, boundary_density(c, lr, env2, coarse, ctx, sig), sig),
                      sig);
        }
        if (gp.lo.is_zero() && gp.hi.is_zero()) continue;
        Ival rest = Ival::point(1);
        for (size_t j = 0; j < g.size(); ++j)
            if (j != i) rest = imul(rest, g[j], sig);
        gderiv = iadd(gderiv, imul(gp, rest, sig), sig);
    }
    Ival dg = imul(Ival(w), gderiv, sig);
    Ival remainder(min(dg.lo, Dyadic()), max(dg.hi, Dyadic()));
    Ival taylor = imul(mass, iadd(ga, remainder, sig), sig);

    if (taylor.intersects(hull_form)) return imeet(taylor, hull_form);
    return hull_form;
}

void sort_and_prefix(NodeEval& ne, size_t sig) {
    std::sort(ne.pieces.begin(), ne.pieces.end(),
              [](const Piece& x, const Piece& y) { return x.a < y.a; });
    ne.prefix.assign(ne.pieces.size() + 1, Ival::zero());
    for (size_t i = 0; i < ne.pieces.size(); ++i)
        ne.prefix[i + 1] = iadd(ne.prefix[i], ne.pieces[i].contrib, sig);
    ne.achieved = ne.prefix.back().width();
}

// Refines until the summed piece widths drop under tol (or the budget runs
// out); leaves pieces sorted with a valid prefix.
void refine_node(NodeEval& ne, const Dyadic& dom_lo, const Dyadic& dom_hi, const Env& env,
                 const Dyadic& tol, RunCtx& ctx, size_t sig) {
    if (dom_lo >= dom_hi) {
        ne.pieces.clear();
        ne.prefix.assign(1, Ival::zero());
        ne.achieved = Dyadic();
        return;
    }
    Dyadic w = dom_hi - dom_lo;
    Dyadic tol_child =
        max(tol.mul_pow2(-3), Dyadic::pow2(-static_cast<long>(sig) + 8));

    if (ne.pieces.empty()) {
        const int k0 = 16;
        Dyadic step = w.mul_pow2(-4);
        Dyadic a = dom_lo;
        for (int i = 0; i < k0; ++i) {
            Dyadic b = (i == k0 - 1) ? dom_hi : a + step;
            Piece p;
            p.a = a;
            p.b = b;
            p.fa = g_point(ne, a, env, tol_child, ctx, sig);
            p.contrib = piece_contrib(ne, a, b, p.fa, env, tol_child, ctx, sig);
            p.stamp = ne.stamp_counter++;
            ne.pieces.push_back(std::move(p));
            a = b;
        }
    }

    Dyadic total;
    std::priority_queue<HeapEnt> heap;
    for (size_t i = 0; i < ne.pieces.size(); ++i) {
        Dyadic pw = ne.pieces[i].contrib.width();
        total = total + pw;
        heap.push({pw, i, ne.pieces[i].stamp});
    }

    while (total > tol && !ctx.over()) {
        while (!heap.empty()) {
            const HeapEnt& top = heap.top();
            if (top.idx < ne.pieces.size() && ne.pieces[top.idx].stamp == top.stamp)
                break;
            heap.pop();
        }
        if (heap.empty()) break;
        HeapEnt top = heap.top();
        heap.pop();
        size_t idx = top.idx;
        Dyadic mid = Dyadic::mid(ne.pieces[idx].a, ne.pieces[idx].b);
        if (mid <= ne.pieces[idx].a || mid >= ne.pieces[idx].b) continue;

        Piece right;
        right.a = mid;
        right.b = ne.pieces[idx].b;
        right.fa = g_point(ne, mid, env, tol_child, ctx, sig);
        right.contrib = piece_contrib(ne, mid, right.b, right.fa, env, tol_child, ctx, sig);
        right.stamp = ne.stamp_counter++;

        Dyadic old_w = ne.pieces[idx].contrib.width();
        ne.pieces[idx].b = mid;
        ne.pieces[idx].contrib =
            piece_contrib(ne, ne.pieces[idx].a, mid, ne.pieces[idx].fa, env, tol_child,
                          ctx, sig);
        ne.pieces[idx].stamp = ne.stamp_counter++;

        total = total - old_w + ne.pieces[idx].contrib.width() + right.contrib.width();
        heap.push({ne.pieces[idx].contrib.width(), idx, ne.pieces[idx].stamp});
        ne.pieces.push_back(std::move(right));
        heap.push({ne.pieces.back().contrib.width(), ne.pieces.size() - 1,
                   ne.pieces.back().stamp});
    }
    sort_and_prefix(ne, sig);
}

Ival cum_at(const NodeEval& ne, const Dyadic& t) {
    if (ne.pieces.empty()) return Ival::zero();
    if (t <= ne.pieces.front().a) return Ival::zero();
    if (t >= ne.pieces.back().b) return ne.prefix.back();
    size_t lo = 0, hi = ne.pieces.size();
    while (lo + 1 < hi) {
        size_t mid = (lo + hi) / 2;
        if (ne.pieces[mid].a <= t)
            lo = mid;
        else
            hi = mid;
    }
    return Ival(ne.prefix[lo].lo, ne.prefix[lo + 1].hi);
}

Ival assemble(const NodeEval& ne, const Ival& lo_limit, const Ival& up_limit, size_t sig) {
    Ival cu_lo = cum_at(ne, up_limit.lo), cu_hi = cum_at(ne, up_limit.hi);
    Ival cl_lo = cum_at(ne, lo_limit.lo), cl_hi = cum_at(ne, lo_limit.hi);
    Dyadic lo = max((cu_lo.lo - cl_hi.hi).round(sig, Round::Down), Dyadic());
    Dyadic hi = max((cu_hi.hi - cl_lo.lo).round(sig, Round::Up), Dyadic());
    return Ival(min(lo, hi), hi);
}

Ival query(NodeEval& ne, const Ival& lo_limit, const Ival& up_limit, const Env& env,
           const Dyadic& tol, RunCtx& ctx, size_t sig) {
    if (lo_limit.lo >= up_limit.hi) return Ival::zero();
    if (ne.leaf && !ctx.pol->force_adaptive_leaf) {
        ++ctx.nodes;
        const DensityKernel& k = ne.kernel;
        Dyadic lo;
        if (lo_limit.hi < up_limit.lo) lo = k.mass(lo_limit.hi, up_limit.lo).lo;
        Dyadic hi;
        if (lo_limit.lo < up_limit.hi) hi = k.mass(lo_limit.lo, up_limit.hi).hi;
        return Ival(min(lo, hi), hi);
    }
    Dyadic blo = ne.node->lower.box, bhi = ne.node->upper.box;
    if (ne.closed) {
        Dyadic half = tol.mul_pow2(-1);
        if (ne.prefix.empty() || ne.achieved > half)
            refine_node(ne, blo, bhi, Env{}, half, ctx, sig);
        return assemble(ne, lo_limit, up_limit, sig);
    }
    // open node: evaluate over the queried span only
    Dyadic dlo = max(blo, lo_limit.lo), dhi = min(bhi, up_limit.hi);
    if (dlo >= dhi) return Ival::zero();
    NodeEval tmp;
    tmp.node = ne.node;
    tmp.kernel = ne.kernel;
    tmp.children = std::move(ne.children);
    tmp.leaf = ne.leaf;
    tmp.closed = false;
    refine_node(tmp, dlo, dhi, env, tol.mul_pow2(-1), ctx, sig);
    ne.children = std::move(tmp.children);
    return assemble(tmp, lo_limit, up_limit, sig);
}

} // namespace

Ival enclose_exp(const Rational& x, size_t sig) {
    Ival xi = Ival::from_rational(x, sig + 8);
    return exp_iv(xi, sig);
}

Ival scale(const Ival& e, const Ival& f, size_t sig) { return imul(e, f, sig); }

EvalResult eval_plan(const IntegralPlan& plan, const Rational& eps,
                     const Dyadic& target_width, const QuadPolicy& policy) {
    EvalResult res;
    if (plan.zero) {
        res.value = Ival::zero();
        return res;
    }
    const auto& factors = plan.root.factors;
    if (factors.empty()) {
        res.value = Ival::point(1);
        return res;
    }
    RunCtx ctx;
    ctx.pol = &policy;
    const size_t sig = policy.sig;
    size_t k = factors.size();
    Dyadic tol_f =
        Dyadic::div(target_width, Dyadic(static_cast<long>(2 * k)), sig, Round::Down);
    std::vector<NodeEval> evals;
    evals.reserve(k);
    for (auto& f : factors) evals.push_back(build_eval(f, eps, policy));
    Ival acc = Ival::point(1);
    for (auto& ne : evals) {
        Ival l = eval_bound(ne.node->lower, Env{}, sig);
        Ival u = eval_bound(ne.node->upper, Env{}, sig);
        Ival v = query(ne, l, u, Env{}, tol_f, ctx, sig);
        v = imeet(iclamp_nonneg(v), Ival(Dyadic(0), Dyadic(1)));
        acc = imul(acc, v, sig);
    }
    res.value = acc;
    res.nodes_used = ctx.nodes;
    res.conforming = acc.width() <= target_width && !ctx.over();
    return res;
}

} // namespace dip
