#include <algorithm>
#include <cctype>
#include <set>

#include "dip/ast.hpp"

namespace dip {

Cmp negate_cmp(Cmp c) {
    switch (c) {
        case Cmp::Lt: return Cmp::Ge;
        case Cmp::Le: return Cmp::Gt;
        case Cmp::Gt: return Cmp::Le;
        case Cmp::Ge: return Cmp::Lt;
        case Cmp::Eq: return Cmp::Ne;
        case Cmp::Ne: return Cmp::Eq;
    }
    return Cmp::Eq;
}

std::string cmp_str(Cmp c) {
    switch (c) {
        case Cmp::Eq: return "=";
        case Cmp::Ne: return "!=";
        case Cmp::Le: return "<=";
        case Cmp::Lt: return "<";
        case Cmp::Ge: return ">=";
        case Cmp::Gt: return ">";
    }
    return "?";
}

StmtPtr Stmt::mk_dom_assign(std::string v, Rational d) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::DomAssign;
    s->dom_var = std::move(v);
    s->dom_value = std::move(d);
    return s;
}
StmtPtr Stmt::mk_sample(DistKind k, std::string r, std::string mean, Rational a) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Sample;
    s->dist = k;
    s->real_var = std::move(r);
    s->mean_var = std::move(mean);
    s->scale_num = std::move(a);
    return s;
}
StmtPtr Stmt::mk_real_assign(std::string r, AffineExpr e) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::RealAssign;
    s->real_var = std::move(r);
    s->rhs = std::move(e);
    return s;
}
StmtPtr Stmt::mk_if(BExpr c, StmtPtr t, StmtPtr e) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::If;
    s->cond = std::move(c);
    s->then_branch = std::move(t);
    s->else_branch = std::move(e);
    return s;
}
StmtPtr Stmt::mk_skip() {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Skip;
    return s;
}
StmtPtr Stmt::mk_block(std::vector<StmtPtr> ss) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Block;
    s->stmts = std::move(ss);
    return s;
}

const DomainDecl* Program::find_input(const std::string& n) const {
    for (auto& d : inputs)
        if (d.name == n) return &d;
    return nullptr;
}
const DomainDecl* Program::find_output(const std::string& n) const {
    for (auto& d : outputs)
        if (d.name == n) return &d;
    return nullptr;
}

namespace {

enum class Tok {
    Ident, Int,
    LBrace, RBrace, LParen, RParen, LBracket, RBracket,
    Comma, Semi, Plus, Minus, Star, Slash,
    Assign, Tilde,
    Eq, Ne, Le, Lt, Ge, Gt,
    End
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto push = [&](Tok k, std::string t, int l, int c) { out.push_back({k, std::move(t), l, c}); };
    while (i < src.size()) {
        char ch = src[i];
        if (ch == '\n') { ++line; col = 1; ++i; continue; }
        if (isspace(static_cast<unsigned char>(ch))) { ++col; ++i; continue; }
        if (ch == '#') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        int l = line, c = col;
        if (isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            push(Tok::Ident, src.substr(i, j - i), l, c);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (isdigit(static_cast<unsigned char>(ch))) {
            size_t j = i;
            while (j < src.size() && isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && (src[j] == '.' || src[j] == 'e' || src[j] == 'E'))
                throw ParseError(l, c, "float literals are not accepted; write an exact rational p/q");
            push(Tok::Int, src.substr(i, j - i), l, c);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        auto two = [&](char a, char b) {
            return ch == a && i + 1 < src.size() && src[i + 1] == b;
        };
        if (two(':', '=')) { push(Tok::Assign, ":=", l, c); i += 2; col += 2; continue; }
        if (two('!', '=')) { push(Tok::Ne, "!=", l, c); i += 2; col += 2; continue; }
        if (two('<', '=')) { push(Tok::Le, "<=", l, c); i += 2; col += 2; continue; }
        if (two('>', '=')) { push(Tok::Ge, ">=", l, c); i += 2; col += 2; continue; }
        switch (ch) {
            case '{': push(Tok::LBrace, "{", l, c); break;
            case '}': push(Tok::RBrace, "}", l, c); break;
            case '(': push(Tok::LParen, "(", l, c); break;
            case ')': push(Tok::RParen, ")", l, c); break;
            case '[': push(Tok::LBracket, "[", l, c); break;
            case ']': push(Tok::RBracket, "]", l, c); break;
            case ',': push(Tok::Comma, ",", l, c); break;
            case ';': push(Tok::Semi, ";", l, c); break;
            case '+': push(Tok::Plus, "+", l, c); break;
            case '-': push(Tok::Minus, "-", l, c); break;
            case '*': push(Tok::Star, "*", l, c); break;
            case '/': push(Tok::Slash, "/", l, c); break;
            case '=': push(Tok::Eq, "=", l, c); break;
            case '<': push(Tok::Lt, "<", l, c); break;
            case '>': push(Tok::Gt, ">", l, c); break;
            case '~': push(Tok::Tilde, "~", l, c); break;
            default:
                throw ParseError(l, c, std::string("unexpected character '") + ch + "'");
        }
        ++i;
        ++col;
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

enum class VarKind { Dom, Real };

class Parser {
public:
    Parser(std::vector<Token> toks, std::map<std::string, VarKind>& symbols)
        : toks_(std::move(toks)), symbols_(symbols) {}

    Program parse_program() {
        Program p;
        while (at_ident("input") || at_ident("output")) {
            bool is_input = cur().text == "input";
            next();
            DomainDecl d = parse_domain_decl();
            if (symbols_.count(d.name))
                throw ParseError(cur().line, cur().col, "duplicate declaration of '" + d.name + "'");
            symbols_[d.name] = VarKind::Dom;
            (is_input ? p.inputs : p.outputs).push_back(std::move(d));
        }
        std::vector<StmtPtr> stmts;
        while (cur().kind != Tok::End) stmts.push_back(parse_stmt());
        p.body = Stmt::mk_block(std::move(stmts));
        return p;
    }

    StmtPtr parse_stmt();

private:
    const Token& cur() const { return toks_[pos_]; }
    const Token& peek(size_t k = 1) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    void next() { if (pos_ + 1 < toks_.size()) ++pos_; }
    bool at_ident(const std::string& kw) const {
        return cur().kind == Tok::Ident && cur().text == kw;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(cur().line, cur().col, msg);
    }
    void expect(Tok k, const std::string& what) {
        if (cur().kind != k) fail("expected " + what);
        next();
    }
    std::string expect_ident() {
        if (cur().kind != Tok::Ident) fail("expected identifier");
        std::string s = cur().text;
        next();
        return s;
    }

    Rational parse_rational_lit() {
        bool neg = false;
        if (cur().kind == Tok::Minus) { neg = true; next(); }
        if (cur().kind != Tok::Int) fail("expected integer or rational literal");
        BigInt num(cur().text);
        next();
        BigInt den(1);
        if (cur().kind == Tok::Slash && peek().kind == Tok::Int) {
            next();
            den = BigInt(cur().text);
            next();
            if (den == 0) fail("zero denominator");
        }
        Rational q(num, den);
        q.canonicalize();
        return neg ? Rational(-q) : q;
    }

    DomainDecl parse_domain_decl() {
        DomainDecl d;
        d.name = expect_ident();
        if (!at_ident("in")) fail("expected 'in'");
        next();
        int l = cur().line, c = cur().col;
        expect(Tok::LBrace, "'{'");
        if (cur().kind == Tok::RBrace) throw DomainError(l, c, "empty domain for '" + d.name + "'");
        while (true) {
            Rational v = parse_rational_lit();
            if (std::find(d.values.begin(), d.values.end(), v) != d.values.end())
                throw DomainError(l, c, "duplicate domain value for '" + d.name + "'");
            d.values.push_back(v);
            if (cur().kind == Tok::Comma) { next(); continue; }
            break;
        }
        expect(Tok::RBrace, "'}'");
        expect(Tok::Semi, "';'");
        return d;
    }

    VarKind kind_of(const std::string& v) {
        auto it = symbols_.find(v);
        if (it == symbols_.end()) fail("unknown variable '" + v + "'");
        return it->second;
    }
    void classify(const std::string& v, VarKind k) {
        auto it = symbols_.find(v);
        if (it == symbols_.end()) {
            symbols_[v] = k;
        } else if (it->second != k) {
            fail("variable '" + v + "' used as both domain and real");
        }
    }

    // Affine expression over identifiers; idents collected for later kind checks.
    AffineExpr parse_affine(std::vector<std::string>& idents) {
        AffineExpr e;
        bool first = true;
        while (true) {
            Rational sign = 1;
            if (cur().kind == Tok::Plus) { next(); }
            else if (cur().kind == Tok::Minus) { sign = -1; next(); }
            else if (!first) break;
            if (cur().kind == Tok::Int) {
                Rational q = sign * parse_rational_lit_nosign();
                if (cur().kind == Tok::Star) {
                    next();
                    std::string v = expect_ident();
                    idents.push_back(v);
                    e.add_term(v, q);
                } else if (cur().kind == Tok::Ident) {
                    std::string v = expect_ident();
                    idents.push_back(v);
                    e.add_term(v, q);
                } else {
                    e.constant += q;
                }
            } else if (cur().kind == Tok::Ident) {
                std::string v = expect_ident();
                idents.push_back(v);
                e.add_term(v, sign);
            } else {
                fail("expected term");
            }
            first = false;
            if (cur().kind != Tok::Plus && cur().kind != Tok::Minus) break;
        }
        return e;
    }

    Rational parse_rational_lit_nosign() {
        if (cur().kind != Tok::Int) fail("expected number");
        BigInt num(cur().text);
        next();
        BigInt den(1);
        if (cur().kind == Tok::Slash && peek().kind == Tok::Int) {
            next();
            den = BigInt(cur().text);
            next();
            if (den == 0) fail("zero denominator");
        }
        Rational q(num, den);
        q.canonicalize();
        return q;
    }

    BOperand parse_operand() {
        std::vector<std::string> idents;
        int l = cur().line, c = cur().col;
        AffineExpr e = parse_affine(idents);
        if (e.single_var_identity()) {
            const std::string& v = e.coeffs.begin()->first;
            if (kind_of(v) == VarKind::Dom) return BOperand::dom(v);
            return BOperand::affine(e);
        }
        for (auto& v : idents)
            if (kind_of(v) == VarKind::Dom)
                throw ParseError(l, c, "domain variable '" + v + "' inside a real expression");
        if (e.is_constant())
            throw ParseError(l, c, "comparison operand must mention a variable");
        return BOperand::affine(e);
    }

    Cmp parse_cmp() {
        switch (cur().kind) {
            case Tok::Eq: next(); return Cmp::Eq;
            case Tok::Ne: next(); return Cmp::Ne;
            case Tok::Le: next(); return Cmp::Le;
            case Tok::Lt: next(); return Cmp::Lt;
            case Tok::Ge: next(); return Cmp::Ge;
            case Tok::Gt: next(); return Cmp::Gt;
            default: fail("expected comparator");
        }
    }

    BExpr parse_bexpr() {
        BExpr b;
        b.lhs = parse_operand();
        b.cmp = parse_cmp();
        b.rhs = parse_operand();
        return b;
    }

    StmtPtr parse_block() {
        expect(Tok::LBrace, "'{'");
        std::vector<StmtPtr> ss;
        while (cur().kind != Tok::RBrace) ss.push_back(parse_stmt());
        expect(Tok::RBrace, "'}'");
        return Stmt::mk_block(std::move(ss));
    }

    StmtPtr parse_sample(const std::string& target) {
        // at 'gauss' or 'lap'
        DistKind k = cur().text == "gauss" ? DistKind::Gaussian : DistKind::Laplace;
        int l = cur().line, c = cur().col;
        next();
        expect(Tok::LParen, "'('");
        std::string mean = expect_ident();
        if (kind_of(mean) != VarKind::Dom)
            throw ParseError(l, c, "sampling mean must be a domain variable");
        expect(Tok::Comma, "','");
        Rational a = parse_rational_lit();
        if (a <= 0) throw ScaleError(l, c, "distribution scale must be positive");
        expect(Tok::Slash, "'/'");
        if (!at_ident("eps")) fail("expected 'eps' in scale");
        next();
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
        classify(target, VarKind::Real);
        return Stmt::mk_sample(k, target, mean, a);
    }

    StmtPtr parse_for();

    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::map<std::string, VarKind>& symbols_;
};

StmtPtr Parser::parse_stmt() {
    if (at_ident("skip")) {
        next();
        expect(Tok::Semi, "';'");
        return Stmt::mk_skip();
    }
    if (at_ident("if")) {
        next();
        expect(Tok::LParen, "'('");
        BExpr cond = parse_bexpr();
        expect(Tok::RParen, "')'");
        StmtPtr then_b = parse_block();
        StmtPtr else_b;
        if (at_ident("else")) {
            next();
            else_b = parse_block();
        } else {
            else_b = Stmt::mk_block({});
        }
        if (cur().kind == Tok::Semi) next();
        return Stmt::mk_if(std::move(cond), std::move(then_b), std::move(else_b));
    }
    if (at_ident("for")) return parse_for();
    if (cur().kind == Tok::Ident) {
        std::string name = cur().text;
        next();
        if (cur().kind == Tok::Tilde) {
            next();
            if (!at_ident("gauss") && !at_ident("lap"))
                fail("expected 'gauss' or 'lap' after '~'");
            return parse_sample(name);
        }
        if (cur().kind == Tok::Assign) {
            next();
            std::vector<std::string> idents;
            int l = cur().line, c = cur().col;
            AffineExpr e = parse_affine(idents);
            expect(Tok::Semi, "';'");
            if (e.is_constant()) {
                classify(name, VarKind::Dom);
                return Stmt::mk_dom_assign(name, e.constant);
            }
            for (auto& v : idents)
                if (kind_of(v) != VarKind::Real)
                    throw ParseError(l, c, "domain variable '" + v + "' inside a real expression");
            classify(name, VarKind::Real);
            return Stmt::mk_real_assign(name, e);
        }
        fail("expected ':=' or '~' after identifier");
    }
    fail("expected statement");
}

StmtPtr Parser::parse_for() {
    next(); // for
    std::string loopvar = expect_ident();
    expect(Tok::Eq, "'='");
    if (cur().kind != Tok::Int) fail("for bound must be an integer literal");
    long lo = std::stol(cur().text);
    next();
    if (!at_ident("to")) fail("expected 'to'");
    next();
    if (cur().kind != Tok::Int) fail("for bound must be an integer literal");
    long hi = std::stol(cur().text);
    next();
    if (cur().kind != Tok::LBrace) fail("expected '{'");
    // capture balanced body tokens
    int depth = 0;
    size_t start = pos_;
    do {
        if (cur().kind == Tok::LBrace) ++depth;
        if (cur().kind == Tok::RBrace) --depth;
        if (cur().kind == Tok::End) fail("unterminated for body");
        next();
    } while (depth > 0);
    std::vector<Token> body(toks_.begin() + start + 1, toks_.begin() + pos_ - 1);

    // real/dom assignment targets inside the body (non-subscripted) get fresh
    // names per iteration
    std::set<std::string> targets;
    for (size_t i = 0; i + 1 < body.size(); ++i) {
        if (body[i].kind == Tok::Ident &&
            (body[i + 1].kind == Tok::Assign || body[i + 1].kind == Tok::Tilde) &&
            body[i].text != loopvar)
            targets.insert(body[i].text);
    }

    std::vector<StmtPtr> out;
    for (long k = lo; k <= hi; ++k) {
        std::vector<Token> subst;
        for (size_t i = 0; i < body.size(); ++i) {
            const Token& t = body[i];
            if (t.kind == Tok::Ident && t.text == loopvar) {
                subst.push_back({Tok::Int, std::to_string(k), t.line, t.col});
                continue;
            }
            if (t.kind == Tok::Ident && i + 1 < body.size() &&
                body[i + 1].kind == Tok::LBracket) {
                // name [ idx ] -> name_idx ; idx is loopvar or int, with +/- int
                size_t j = i + 2;
                auto idx_val = [&](const Token& tk) -> long {
                    if (tk.kind == Tok::Int) return std::stol(tk.text);
                    if (tk.kind == Tok::Ident && tk.text == loopvar) return k;
                    throw ParseError(tk.line, tk.col, "unsupported subscript");
                };
                if (j >= body.size()) throw ParseError(t.line, t.col, "bad subscript");
                long v = idx_val(body[j]);
                ++j;
                if (j < body.size() &&
                    (body[j].kind == Tok::Plus || body[j].kind == Tok::Minus)) {
                    bool minus = body[j].kind == Tok::Minus;
                    ++j;
                    if (j >= body.size()) throw ParseError(t.line, t.col, "bad subscript");
                    long w = idx_val(body[j]);
                    v = minus ? v - w : v + w;
                    ++j;
                }
                if (j >= body.size() || body[j].kind != Tok::RBracket)
                    throw ParseError(t.line, t.col, "expected ']'");
                subst.push_back({Tok::Ident, t.text + "_" + std::to_string(v), t.line, t.col});
                i = j;
                continue;
            }
            if (t.kind == Tok::Ident && targets.count(t.text)) {
                subst.push_back({Tok::Ident, t.text + "_" + std::to_string(k), t.line, t.col});
                continue;
            }
            subst.push_back(t);
        }
        subst.push_back({Tok::End, "", 0, 0});
        Parser sub(std::move(subst), symbols_);
        while (sub.cur().kind != Tok::End) out.push_back(sub.parse_stmt());
    }
    return Stmt::mk_block(std::move(out));
}

} // namespace

Program parse(const std::string& source) {
    std::map<std::string, VarKind> symbols;
    Parser p(lex(source), symbols);
    return p.parse_program();
}

} // namespace dip
