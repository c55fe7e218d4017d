#include <sstream>

#include "dip/ast.hpp"

namespace dip {

namespace {

void append_signed(std::ostringstream& os, bool first, const Rational& coef,
                   const std::string& body) {
    Rational a = coef < 0 ? Rational(-coef) : coef;
    std::string mag;
    if (body.empty())
        mag = rational_str(a);
    else if (a == 1)
        mag = body;
    else
        mag = rational_str(a) + "*" + body;
    if (first) {
        os << (coef < 0 ? "-" : "") << mag;
    } else {
        os << (coef < 0 ? " - " : " + ") << mag;
    }
}

} // namespace

std::string affine_str(const AffineExpr& e) {
    std::ostringstream os;
    bool first = true;
    for (auto& [v, c] : e.coeffs) {
        append_signed(os, first, c, v);
        first = false;
    }
    if (e.constant != 0 || first) {
        append_signed(os, first, e.constant, "");
    }
    return os.str();
}

namespace {

std::string operand_str(const BOperand& o) {
    return o.is_dom ? o.dom_var : affine_str(o.real);
}

} // namespace

std::string bexpr_str(const BExpr& b) {
    return operand_str(b.lhs) + " " + cmp_str(b.cmp) + " " + operand_str(b.rhs);
}

namespace {

void print_stmt(std::ostringstream& os, const StmtPtr& s, int indent) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    switch (s->kind) {
        case Stmt::Kind::DomAssign:
            os << pad << s->dom_var << " := " << rational_str(s->dom_value) << ";\n";
            break;
        case Stmt::Kind::Sample:
            os << pad << s->real_var << " ~ "
               << (s->dist == DistKind::Gaussian ? "gauss" : "lap") << "(" << s->mean_var
               << ", " << rational_str(s->scale_num) << "/eps);\n";
            break;
        case Stmt::Kind::RealAssign:
            os << pad << s->real_var << " := " << affine_str(s->rhs) << ";\n";
            break;
        case Stmt::Kind::Skip:
            os << pad << "skip;\n";
            break;
        case Stmt::Kind::If: {
            os << pad << "if (" << bexpr_str(s->cond) << ") {\n";
            for (auto& t : s->then_branch->stmts) print_stmt(os, t, indent + 1);
            bool empty_else = s->else_branch->kind == Stmt::Kind::Block &&
                              s->else_branch->stmts.empty();
            if (empty_else) {
                os << pad << "}\n";
            } else {
                os << pad << "} else {\n";
                for (auto& t : s->else_branch->stmts) print_stmt(os, t, indent + 1);
                os << pad << "}\n";
            }
            break;
        }
        case Stmt::Kind::Block:
            for (auto& t : s->stmts) print_stmt(os, t, indent);
            break;
    }
}

} // namespace

std::string pretty_print(const Program& p) {
    std::ostringstream os;
    auto decl = [&](const char* kw, const DomainDecl& d) {
        os << kw << " " << d.name << " in {";
        for (size_t i = 0; i < d.values.size(); ++i) {
            if (i) os << ", ";
            os << rational_str(d.values[i]);
        }
        os << "};\n";
    };
    for (auto& d : p.inputs) decl("input", d);
    for (auto& d : p.outputs) decl("output", d);
    if (p.body) print_stmt(os, p.body, 0);
    return os.str();
}

} // namespace dip
