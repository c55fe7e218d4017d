#include "dip/semantics.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace dip {

namespace {

void exec_stmt(const StmtPtr& s, std::vector<SymState>& states) {
    switch (s->kind) {
        case Stmt::Kind::Skip:
            break;
        case Stmt::Kind::DomAssign:
            for (auto& st : states) st.alpha[s->dom_var] = s->dom_value;
            break;
        case Stmt::Kind::Sample:
            for (auto& st : states) {
                DistSpec d{s->dist, st.alpha.at(s->mean_var), s->scale_num};
                st.beta[s->real_var] = d;
                st.sample_order.push_back(s->real_var);
            }
            break;
        case Stmt::Kind::RealAssign:
            for (auto& st : states) {
                // replace dependent variables by their stored affine forms
                AffineExpr e;
                e.constant = s->rhs.constant;
                for (auto& [v, c] : s->rhs.coeffs) {
                    auto it = st.beta.find(v);
                    if (it != st.beta.end() &&
                        std::holds_alternative<AffineExpr>(it->second)) {
                        e = e + std::get<AffineExpr>(it->second).scaled(c);
                    } else {
                        e.add_term(v, c);
                    }
                }
                st.beta[s->real_var] = e;
            }
            break;
        case Stmt::Kind::Block:
            for (auto& t : s->stmts) exec_stmt(t, states);
            break;
        case Stmt::Kind::If: {
            std::vector<SymState> then_states = states;
            for (auto& st : then_states) st.guards.push_back(s->cond);
            exec_stmt(s->then_branch, then_states);
            std::vector<SymState> else_states = std::move(states);
            for (auto& st : else_states) st.guards.push_back(s->cond.negated());
            exec_stmt(s->else_branch, else_states);
            states = std::move(then_states);
            states.insert(states.end(), else_states.begin(), else_states.end());
            break;
        }
    }
}

bool operand_is_dom(const BOperand& o) { return o.is_dom; }

} // namespace

std::vector<FinalState> exec_program(const Program& p, const Valuation& input) {
    SymState init;
    init.alpha = input;
    std::vector<SymState> states{init};
    exec_stmt(p.body, states);
    std::vector<FinalState> out;
    out.reserve(states.size());
    for (auto& st : states) {
        FinalState fs;
        fs.st = std::move(st);
        for (auto& g : fs.st.guards) {
            if (operand_is_dom(g.lhs) && operand_is_dom(g.rhs))
                fs.g_const.push_back(g);
            else
                fs.g_rand.push_back(g);
        }
        out.push_back(std::move(fs));
    }
    return out;
}

std::vector<FinalState> run(const Valuation& u, const Valuation& o, const Program& p) {
    std::vector<FinalState> all = exec_program(p, u);
    std::vector<FinalState> out;
    for (auto& fs : all) {
        bool match = true;
        for (auto& [var, val] : o) {
            auto it = fs.st.alpha.find(var);
            if (it == fs.st.alpha.end() || it->second != val) {
                match = false;
                break;
            }
        }
        if (match) out.push_back(fs);
    }
    return out;
}

bool cmp_eval(const Rational& a, Cmp c, const Rational& b) {
    switch (c) {
        case Cmp::Eq: return a == b;
        case Cmp::Ne: return a != b;
        case Cmp::Le: return a <= b;
        case Cmp::Lt: return a < b;
        case Cmp::Ge: return a >= b;
        case Cmp::Gt: return a > b;
    }
    return false;
}

bool eval_const(const FinalState& fs) {
    for (auto& g : fs.g_const) {
        const Rational& a = fs.st.alpha.at(g.lhs.dom_var);
        const Rational& b = fs.st.alpha.at(g.rhs.dom_var);
        if (!cmp_eval(a, g.cmp, b)) return false;
    }
    return true;
}

GuardSystem to_guard_system(const FinalState& fs) {
    GuardSystem gs;
    const SymState& st = fs.st;

    auto resolve = [&](const BOperand& o) -> AffineExpr {
        AffineExpr e;
        if (o.is_dom) {
            e.constant = st.alpha.at(o.dom_var);
            return e;
        }
        e.constant = o.real.constant;
        for (auto& [v, c] : o.real.coeffs) {
            auto it = st.beta.find(v);
            if (it != st.beta.end() && std::holds_alternative<AffineExpr>(it->second))
                e = e + std::get<AffineExpr>(it->second).scaled(c);
            else
                e.add_term(v, c);
        }
        return e;
    };

    std::vector<std::string> order = st.sample_order;
    auto order_index = [&](const std::string& v) {
        return std::find(order.begin(), order.end(), v) - order.begin();
    };

    std::set<std::string> used;
    std::set<std::string> seen_keys;
    for (auto& g : fs.g_rand) {
        AffineExpr expr = resolve(g.lhs) - resolve(g.rhs);
        Cmp c = g.cmp;
        // normalize to expr cmp 0 with cmp in {Lt, Le, Eq, Ne}
        if (c == Cmp::Gt) { expr = expr.scaled(-1); c = Cmp::Lt; }
        if (c == Cmp::Ge) { expr = expr.scaled(-1); c = Cmp::Le; }
        if (expr.is_constant()) {
            if (!cmp_eval(expr.constant, c, Rational(0))) gs.infeasible = true;
            continue;
        }
        if (c == Cmp::Eq) { gs.zero_measure = true; continue; }
        if (c == Cmp::Ne) continue; // complement of a null set
        // scale so the leading coefficient (earliest sampled var) has |coeff| = 1
        std::string lead;
        long best = std::numeric_limits<long>::max();
        for (auto& [v, coef] : expr.coeffs) {
            long idx = order_index(v);
            if (idx < best) { best = idx; lead = v; }
        }
        Rational lc = expr.coeffs.at(lead);
        Rational scale = lc < 0 ? Rational(-1) / lc : Rational(1) / lc;
        expr = expr.scaled(scale); // positive scale keeps direction

        std::string key = cmp_str(c) + "|" + rational_str(expr.constant);
        for (auto& [v, coef] : expr.coeffs) key += "|" + v + ":" + rational_str(coef);
        if (!seen_keys.insert(key).second) continue;

        for (auto& [v, coef] : expr.coeffs) used.insert(v);
        gs.constraints.push_back({std::move(expr), c});
    }

    for (auto& v : order) {
        if (!used.count(v)) continue;
        gs.vars.push_back(v);
        gs.dist[v] = std::get<DistSpec>(st.beta.at(v));
    }
    return gs;
}

std::vector<Valuation> enumerate_valuations(const std::vector<DomainDecl>& decls) {
    std::vector<Valuation> out{Valuation{}};
    for (auto& d : decls) {
        std::vector<Valuation> next;
        next.reserve(out.size() * d.values.size());
        for (auto& v : out) {
            for (auto& val : d.values) {
                Valuation w = v;
                w[d.name] = val;
                next.push_back(std::move(w));
            }
        }
        out = std::move(next);
    }
    return out;
}

std::string valuation_key(const Valuation& v) {
    std::string s;
    for (auto& [k, q] : v) {
        s += k;
        s += "=";
        s += rational_str(q);
        s += ";";
    }
    return s;
}

} // namespace dip
