#include <set>

#include "dip/ast.hpp"

namespace dip {

namespace {

struct Walker {
    std::set<std::string> assigned;      // definitely assigned on every path here
    std::set<std::string> real_assigned; // possibly assigned on some path here
    std::vector<std::string> trail;

    std::string path() const {
        std::string s;
        for (size_t i = 0; i < trail.size(); ++i) {
            if (i) s += " -> ";
            s += trail[i];
        }
        return s;
    }

    void read(const std::string& v) {
        if (!assigned.count(v)) throw UseBeforeAssign(v, path());
    }
    void read_operand(const BOperand& o) {
        if (o.is_dom) {
            read(o.dom_var);
        } else {
            for (auto& [v, c] : o.real.coeffs) read(v);
        }
    }

    void walk(const StmtPtr& s) {
        switch (s->kind) {
            case Stmt::Kind::Skip:
                break;
            case Stmt::Kind::DomAssign:
                assigned.insert(s->dom_var);
                break;
            case Stmt::Kind::Sample:
                read(s->mean_var);
                if (real_assigned.count(s->real_var))
                    throw DoubleRealAssign(s->real_var, path());
                assigned.insert(s->real_var);
                real_assigned.insert(s->real_var);
                break;
            case Stmt::Kind::RealAssign:
                for (auto& [v, c] : s->rhs.coeffs) read(v);
                if (real_assigned.count(s->real_var))
                    throw DoubleRealAssign(s->real_var, path());
                assigned.insert(s->real_var);
                real_assigned.insert(s->real_var);
                break;
            case Stmt::Kind::Block:
                for (auto& t : s->stmts) walk(t);
                break;
            case Stmt::Kind::If: {
                read_operand(s->cond.lhs);
                read_operand(s->cond.rhs);
                Walker then_w = *this;
                then_w.trail.push_back("then(" + bexpr_str(s->cond) + ")");
                then_w.walk(s->then_branch);
                Walker else_w = *this;
                else_w.trail.push_back("else(" + bexpr_str(s->cond) + ")");
                else_w.walk(s->else_branch);
                // definite: intersection; possible: union
                std::set<std::string> def;
                for (auto& v : then_w.assigned)
                    if (else_w.assigned.count(v)) def.insert(v);
                assigned = std::move(def);
                real_assigned = then_w.real_assigned;
                real_assigned.insert(else_w.real_assigned.begin(), else_w.real_assigned.end());
                break;
            }
        }
    }
};

} // namespace

void validate(const Program& p) {
    for (auto& i : p.inputs)
        if (p.find_output(i.name)) throw InOutOverlap(i.name);
    Walker w;
    for (auto& i : p.inputs) w.assigned.insert(i.name);
    w.walk(p.body);
}

} // namespace dip
