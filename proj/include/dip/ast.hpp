#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dip/rational.hpp"

namespace dip {

// Affine form over real variables: sum of coeff*var plus a constant.
// Real expressions are closed under the grammar (r | qR | R+R | R+q), so the
// affine map is the canonical representation.
struct AffineExpr {
    std::map<std::string, Rational> coeffs; // nonzero coefficients only
    Rational constant = 0;

    bool is_constant() const { return coeffs.empty(); }
    bool single_var_identity() const {
        return coeffs.size() == 1 && coeffs.begin()->second == 1 && constant == 0;
    }

    void add_term(const std::string& var, const Rational& c) {
        if (c == 0) return;
        auto it = coeffs.find(var);
        if (it == coeffs.end()) {
            coeffs[var] = c;
        } else {
            it->second += c;
            if (it->second == 0) coeffs.erase(it);
        }
    }

    AffineExpr operator+(const AffineExpr& o) const {
        AffineExpr r = *this;
        r.constant += o.constant;
        for (auto& [v, c] : o.coeffs) r.add_term(v, c);
        return r;
    }
    AffineExpr operator-(const AffineExpr& o) const { return *this + o.scaled(-1); }
    AffineExpr scaled(const Rational& q) const {
        AffineExpr r;
        if (q == 0) return r;
        r.constant = constant * q;
        for (auto& [v, c] : coeffs) r.coeffs[v] = c * q;
        return r;
    }
    bool operator==(const AffineExpr& o) const {
        return constant == o.constant && coeffs == o.coeffs;
    }
};

enum class Cmp { Eq, Ne, Le, Lt, Ge, Gt };

// Flipped comparison used for else-branches.
Cmp negate_cmp(Cmp c);
std::string cmp_str(Cmp c);

// One side of a comparison: either a real affine expression or a domain variable.
struct BOperand {
    bool is_dom = false;
    AffineExpr real;     // when !is_dom
    std::string dom_var; // when is_dom

    static BOperand dom(std::string v) {
        BOperand b;
        b.is_dom = true;
        b.dom_var = std::move(v);
        return b;
    }
    static BOperand affine(AffineExpr e) {
        BOperand b;
        b.real = std::move(e);
        return b;
    }
    bool operator==(const BOperand& o) const {
        return is_dom == o.is_dom && (is_dom ? dom_var == o.dom_var : real == o.real);
    }
};

struct BExpr {
    BOperand lhs;
    Cmp cmp = Cmp::Eq;
    BOperand rhs;

    BExpr negated() const { return BExpr{lhs, negate_cmp(cmp), rhs}; }
    bool operator==(const BExpr& o) const {
        return cmp == o.cmp && lhs == o.lhs && rhs == o.rhs;
    }
};

enum class DistKind { Gaussian, Laplace };

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
    enum class Kind { DomAssign, Sample, RealAssign, If, Skip, Block };
    Kind kind = Kind::Skip;

    // DomAssign: var := value
    std::string dom_var;
    Rational dom_value;

    // Sample: real_var ~ dist(mean_var, scale_num/eps)
    DistKind dist = DistKind::Gaussian;
    std::string real_var;
    std::string mean_var;
    Rational scale_num;

    // RealAssign: real_var := rhs
    AffineExpr rhs;

    // If
    BExpr cond;
    StmtPtr then_branch, else_branch;

    // Block
    std::vector<StmtPtr> stmts;

    static StmtPtr mk_dom_assign(std::string v, Rational d);
    static StmtPtr mk_sample(DistKind k, std::string r, std::string mean, Rational a);
    static StmtPtr mk_real_assign(std::string r, AffineExpr e);
    static StmtPtr mk_if(BExpr c, StmtPtr t, StmtPtr e);
    static StmtPtr mk_skip();
    static StmtPtr mk_block(std::vector<StmtPtr> ss);
};

struct DomainDecl {
    std::string name;
    std::vector<Rational> values; // ordered, duplicate-free
};

struct Program {
    std::vector<DomainDecl> inputs;
    std::vector<DomainDecl> outputs;
    StmtPtr body;

    const DomainDecl* find_input(const std::string& n) const;
    const DomainDecl* find_output(const std::string& n) const;
};

// --- errors ---

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(int l, int c, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(l) + ":" + std::to_string(c) +
                             ": " + msg),
          line(l), col(c) {}
};
struct DomainError : ParseError {
    using ParseError::ParseError;
};
struct ScaleError : ParseError {
    using ParseError::ParseError;
};

struct ValidateError : std::runtime_error {
    std::string var;
    std::string path;
    ValidateError(const std::string& kind, std::string v, std::string p)
        : std::runtime_error(kind + ": variable '" + v + "'" +
                             (p.empty() ? std::string() : " on path [" + p + "]")),
          var(std::move(v)), path(std::move(p)) {}
};
struct UseBeforeAssign : ValidateError {
    UseBeforeAssign(std::string v, std::string p)
        : ValidateError("use before assignment", std::move(v), std::move(p)) {}
};
struct DoubleRealAssign : ValidateError {
    DoubleRealAssign(std::string v, std::string p)
        : ValidateError("real variable assigned twice", std::move(v), std::move(p)) {}
};
struct InOutOverlap : ValidateError {
    explicit InOutOverlap(std::string v)
        : ValidateError("input/output overlap", std::move(v), "") {}
};

Program parse(const std::string& source);
std::string pretty_print(const Program& p);
std::string bexpr_str(const BExpr& b);
std::string affine_str(const AffineExpr& e);
void validate(const Program& p);

} // namespace dip
