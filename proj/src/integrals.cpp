#include "dip/integrals.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "dip/realfuncs.hpp"

namespace dip {

int PlanNode::depth() const {
    if (kind == Kind::Product) {
        int d = 0;
        for (auto& f : factors) d = std::max(d, f.depth());
        return d;
    }
    int inner = 0;
    for (auto& c : body) inner = std::max(inner, c.depth());
    return 1 + inner;
}

Ival dist_sigma(const DistSpec& d, const Rational& eps, size_t sig) {
    Rational b = dist_scale(d, eps);
    Ival bi = Ival::from_rational(b, sig);
    if (d.kind == DistKind::Gaussian) return bi;
    return imul(bi, const_sqrt2(sig), sig);
}

Rational tail_mass_upper(DistKind kind, const Dyadic& th, size_t sig) {
    if (kind == DistKind::Gaussian) {
        // exact two-sided tail 1 - erf(th/sqrt(2)); also the Chernoff form
        // 2 e^{-th^2/2}; keep the smaller certified upper bound
        Ival arg = imul(Ival(th), idiv(Ival::point(1), const_sqrt2(sig), sig), sig);
        Dyadic exact_hi = (Dyadic(1) - erf_iv(arg, sig).lo).round(sig, Round::Up);
        Ival chern = imul(Ival::point(2), exp_point(-(th * th).mul_pow2(-1), sig), sig);
        Dyadic hi = min(exact_hi, chern.hi);
        return max(hi, Dyadic()).to_rational();
    }
    // Laplace: exact tail e^{-th*sqrt(2)}
    Ival arg = imul(Ival(th), const_sqrt2(sig), sig);
    return max(exp_point(-arg.lo, sig).hi, Dyadic()).to_rational();
}

ThresholdInfo choose_threshold(const GuardSystem& gs, const ThresholdPolicy& policy,
                               const Rational& tail_budget, size_t sig) {
    ThresholdInfo info;
    size_t n = gs.vars.size();
    if (n == 0) return info;

    if (policy.mode == ThresholdMode::Fixed) {
        Dyadic thg = Dyadic::from_rational(policy.fixed_gauss, sig, Round::Up);
        Dyadic thl = Dyadic::from_rational(policy.fixed_laplace, sig, Round::Up);
        Rational slack = 0;
        for (auto& v : gs.vars) {
            DistKind k = gs.dist.at(v).kind;
            Dyadic th = k == DistKind::Gaussian ? thg : thl;
            info.th[v] = th;
            slack += tail_mass_upper(k, th, sig);
        }
        info.tail_slack = slack;
        return info;
    }

    Rational budget = tail_budget / Rational(static_cast<long>(n));
    Rational slack = 0;
    for (auto& v : gs.vars) {
        DistKind k = gs.dist.at(v).kind;
        Dyadic th;
        if (k == DistKind::Gaussian) {
            // smallest th with 2 e^{-th^2/2} <= budget: th = sqrt(2 ln(2/budget))
            Ival ln = ln_rational(Rational(2) / budget, sig);
            Dyadic arg = max((ln.hi.mul_pow2(1)), Dyadic());
            th = sqrt_dyadic(arg, sig, Round::Up);
        } else {
            // e^{-th sqrt2} <= budget: th = ln(1/budget)/sqrt(2)
            Ival ln = ln_rational(Rational(1) / budget, sig);
            th = Dyadic::div(max(ln.hi, Dyadic()), const_sqrt2(sig).lo, sig, Round::Up);
        }
        th = max(th, Dyadic(1));
        info.th[v] = th;
        slack += std::min(budget, tail_mass_upper(k, th, sig));
    }
    info.tail_slack = slack;
    return info;
}

namespace {

struct SolvedTerm {
    std::string pivot;
    bool upper;      // true: pivot <= term, false: pivot >= term
    AffineExpr term; // over the other variables
};

// Interval evaluation of an affine over per-variable boxes.
Ival affine_box_eval(const AffineExpr& e, const std::map<std::string, Ival>& boxes,
                     size_t sig) {
    Ival acc = Ival::from_rational(e.constant, sig);
    for (auto& [v, c] : e.coeffs) {
        Ival ci = Ival::from_rational(c, sig);
        acc = iadd(acc, imul(ci, boxes.at(v), sig), sig);
    }
    return acc;
}

// True when lo <= hi is provable: either over the variable boxes or as a
// positive multiple of one of the path constraints (which all hold on the
// integration region).
bool provably_le(const AffineExpr& lo, const AffineExpr& hi,
                 const std::map<std::string, Ival>& boxes,
                 const std::vector<LinConstraint>& constraints, size_t sig) {
    AffineExpr diff = hi - lo;
    if (diff.is_constant()) return diff.constant >= 0;
    Ival rng = affine_box_eval(diff, boxes, sig);
    if (rng.lo.sign() >= 0) return true;
    for (auto& c : constraints) {
        // c.expr <= 0, so -c.expr >= 0; check diff == lambda * (-c.expr), lambda > 0
        if (c.cmp != Cmp::Lt && c.cmp != Cmp::Le) continue;
        AffineExpr neg = c.expr.scaled(-1);
        if (neg.coeffs.empty()) continue;
        auto it = neg.coeffs.begin();
        auto jt = diff.coeffs.find(it->first);
        if (jt == diff.coeffs.end()) continue;
        Rational lambda = jt->second / it->second;
        if (lambda <= 0) continue;
        if (neg.scaled(lambda) == diff) return true;
    }
    return false;
}

struct GraphCtx {
    std::vector<std::string> vars; // sampling order
    std::map<std::string, size_t> index;
    std::map<std::string, std::vector<AffineExpr>> uppers, lowers;
    std::map<std::string, std::set<std::string>> in_edges; // var <- referenced
};

// Attachment of constraints to pivot variables. Preferring the variable that
// receives an upper bound keeps threshold-style systems shallow after
// factoring; the innermost rule is the acyclic fallback.
bool assign_pivots(const GuardSystem& gs, bool prefer_upper, GraphCtx& g) {
    g.uppers.clear();
    g.lowers.clear();
    g.in_edges.clear();
    for (auto& v : g.vars) {
        g.in_edges[v];
        g.uppers[v];
        g.lowers[v];
    }
    for (auto& c : gs.constraints) {
        std::string pivot;
        size_t best = 0;
        bool found = false;
        if (prefer_upper) {
            for (auto& [v, coef] : c.expr.coeffs) {
                if (coef <= 0) continue;
                size_t idx = g.index.at(v);
                if (!found || idx > best) { best = idx; pivot = v; found = true; }
            }
        }
        if (!found) {
            for (auto& [v, coef] : c.expr.coeffs) {
                size_t idx = g.index.at(v);
                if (!found || idx > best) { best = idx; pivot = v; found = true; }
            }
        }
        Rational cp = c.expr.coeffs.at(pivot);
        AffineExpr rest = c.expr;
        rest.coeffs.erase(pivot);
        AffineExpr term = rest.scaled(Rational(-1) / cp);
        if (cp > 0)
            g.uppers[pivot].push_back(term);
        else
            g.lowers[pivot].push_back(term);
        for (auto& [v, coef] : term.coeffs) g.in_edges[pivot].insert(v);
    }
    // acyclicity check (Kahn)
    std::map<std::string, size_t> indeg;
    for (auto& v : g.vars) indeg[v] = g.in_edges[v].size();
    std::vector<std::string> ready;
    for (auto& v : g.vars)
        if (indeg[v] == 0) ready.push_back(v);
    size_t seen = 0;
    std::map<std::string, std::vector<std::string>> out_edges;
    for (auto& [v, ins] : g.in_edges)
        for (auto& u : ins) out_edges[u].push_back(v);
    while (!ready.empty()) {
        std::string v = ready.back();
        ready.pop_back();
        ++seen;
        for (auto& w : out_edges[v])
            if (--indeg[w] == 0) ready.push_back(w);
    }
    return seen == g.vars.size();
}

// Removes bound terms implied by another term of the same list (or the box).
void prune_dominated(GraphCtx& g, const GuardSystem& gs,
                     const std::map<std::string, Ival>& boxes,
                     const std::map<std::string, Dyadic>& box_lo,
                     const std::map<std::string, Dyadic>& box_hi, size_t sig) {
    for (auto& v : g.vars) {
        auto prune = [&](std::vector<AffineExpr>& terms, bool upper) {
            std::vector<bool> dead(terms.size(), false);
            for (size_t j = 0; j < terms.size(); ++j) {
                // dominated by the box constant?
                AffineExpr boxe;
                boxe.constant = upper ? box_hi.at(v).to_rational() : box_lo.at(v).to_rational();
                bool dom = upper ? provably_le(boxe, terms[j], boxes, gs.constraints, sig)
                                 : provably_le(terms[j], boxe, boxes, gs.constraints, sig);
                if (dom) { dead[j] = true; continue; }
                for (size_t i = 0; i < terms.size() && !dead[j]; ++i) {
                    if (i == j || dead[i]) continue;
                    bool d = upper ? provably_le(terms[i], terms[j], boxes, gs.constraints, sig)
                                   : provably_le(terms[j], terms[i], boxes, gs.constraints, sig);
                    if (d && i > j && terms[i] == terms[j]) continue; // keep one copy
                    dead[j] = d;
                }
            }
            std::vector<AffineExpr> kept;
            for (size_t j = 0; j < terms.size(); ++j)
                if (!dead[j]) kept.push_back(terms[j]);
            terms = std::move(kept);
        };
        prune(g.uppers[v], true);
        prune(g.lowers[v], false);
    }
    // rebuild edges from surviving terms
    for (auto& v : g.vars) {
        g.in_edges[v].clear();
        for (auto& t : g.uppers[v])
            for (auto& [u, c] : t.coeffs) g.in_edges[v].insert(u);
        for (auto& t : g.lowers[v])
            for (auto& [u, c] : t.coeffs) g.in_edges[v].insert(u);
    }
}

PlanNode make_leaf(const std::string& v, const GuardSystem& gs, const GraphCtx& g,
                   const std::map<std::string, Dyadic>& box_lo,
                   const std::map<std::string, Dyadic>& box_hi) {
    PlanNode n;
    n.kind = PlanNode::Kind::Integral;
    n.var = v;
    n.dist = gs.dist.at(v);
    n.lower = AffineBound{g.lowers.at(v), box_lo.at(v), false};
    n.upper = AffineBound{g.uppers.at(v), box_hi.at(v), true};
    return n;
}

PlanNode gen_expr(std::vector<std::string> nodes, const GuardSystem& gs, const GraphCtx& g,
                  const std::map<std::string, Dyadic>& box_lo,
                  const std::map<std::string, Dyadic>& box_hi) {
    std::set<std::string> in_set(nodes.begin(), nodes.end());

    // weakly connected components
    std::map<std::string, std::string> parent;
    for (auto& v : nodes) parent[v] = v;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (auto& v : nodes)
        for (auto& u : g.in_edges.at(v))
            if (in_set.count(u)) parent[find(u)] = find(v);
    std::map<std::string, std::vector<std::string>> comps;
    for (auto& v : nodes) comps[find(v)].push_back(v);

    if (comps.size() > 1) {
        // order components by earliest sampled member
        std::vector<std::vector<std::string>> ordered;
        for (auto& [root, members] : comps) ordered.push_back(members);
        std::sort(ordered.begin(), ordered.end(),
                  [&](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                      size_t ia = g.vars.size(), ib = g.vars.size();
                      for (auto& v : a) ia = std::min(ia, g.index.at(v));
                      for (auto& v : b) ib = std::min(ib, g.index.at(v));
                      return ia < ib;
                  });
        PlanNode prod;
        prod.kind = PlanNode::Kind::Product;
        for (auto& comp : ordered)
            prod.factors.push_back(gen_expr(comp, gs, g, box_lo, box_hi));
        return prod;
    }

    if (nodes.size() == 1) return make_leaf(nodes[0], gs, g, box_lo, box_hi);

    // peel source nodes (no incoming edge within the subgraph) as outer layers
    std::vector<std::string> sources, rest;
    for (auto& v : nodes) {
        bool src = true;
        for (auto& u : g.in_edges.at(v))
            if (in_set.count(u)) { src = false; break; }
        (src ? sources : rest).push_back(v);
    }
    std::sort(sources.begin(), sources.end(),
              [&](const std::string& a, const std::string& b) {
                  return g.index.at(a) < g.index.at(b);
              });
    PlanNode inner = gen_expr(rest, gs, g, box_lo, box_hi);
    std::vector<PlanNode> body;
    if (inner.kind == PlanNode::Kind::Product)
        body = std::move(inner.factors);
    else
        body.push_back(std::move(inner));
    for (auto it = sources.rbegin(); it != sources.rend(); ++it) {
        PlanNode layer = make_leaf(*it, gs, g, box_lo, box_hi);
        layer.body = std::move(body);
        body.clear();
        body.push_back(std::move(layer));
    }
    return std::move(body.front());
}

} // namespace

IntegralPlan build_plan(const GuardSystem& gs, const Rational& eps,
                        const ThresholdInfo& th, bool optimize, size_t sig) {
    IntegralPlan plan;
    plan.tail_slack = th.tail_slack;
    plan.zero = gs.infeasible || gs.zero_measure;

    GraphCtx g;
    g.vars = gs.vars;
    for (size_t i = 0; i < g.vars.size(); ++i) g.index[g.vars[i]] = i;

    std::map<std::string, Dyadic> box_lo, box_hi;
    std::map<std::string, Ival> boxes;
    for (auto& v : gs.vars) {
        const DistSpec& d = gs.dist.at(v);
        Ival mu = Ival::from_rational(d.mean, sig);
        Ival half = imul(Ival(th.th.at(v)), dist_sigma(d, eps, sig), sig);
        Ival lo = isub(mu, half, sig), hi = iadd(mu, half, sig);
        box_lo[v] = lo.lo;
        box_hi[v] = hi.hi;
        boxes[v] = Ival(lo.lo, hi.hi);
    }

    bool acyclic = assign_pivots(gs, optimize, g);
    if (!acyclic) assign_pivots(gs, false, g); // innermost attachment is a DAG
    prune_dominated(g, gs, boxes, box_lo, box_hi, sig);

    PlanNode root;
    root.kind = PlanNode::Kind::Product;
    if (!gs.vars.empty()) {
        if (optimize) {
            PlanNode e = gen_expr(gs.vars, gs, g, box_lo, box_hi);
            if (e.kind == PlanNode::Kind::Product)
                root = std::move(e);
            else
                root.factors.push_back(std::move(e));
        } else {
            // full nesting in sampling order
            std::vector<PlanNode> body;
            for (auto it = gs.vars.rbegin(); it != gs.vars.rend(); ++it) {
                PlanNode layer = make_leaf(*it, gs, g, box_lo, box_hi);
                layer.body = std::move(body);
                body.clear();
                body.push_back(std::move(layer));
            }
            root.factors.push_back(std::move(body.front()));
        }
    }
    plan.root = std::move(root);
    return plan;
}

DepthStats depth_stats(const std::vector<IntegralPlan>& plans) {
    DepthStats s;
    if (plans.empty()) return s;
    long total = 0;
    for (auto& p : plans) {
        int d = p.root.depth();
        s.max_depth = std::max(s.max_depth, d);
        total += d;
    }
    s.avg_depth = static_cast<double>(total) / static_cast<double>(plans.size());
    return s;
}

} // namespace dip
