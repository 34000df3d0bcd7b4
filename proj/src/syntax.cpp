#include "perpl/syntax.hpp"

#include <cctype>
#include <functional>
#include <set>
#include <sstream>

namespace perpl {

namespace {

enum class Tok { Ident, Keyword, Number, Symbol, End };

struct Token {
    Tok kind;
    std::string text;
    SourcePos pos;
};

const std::set<std::string> keywords = {"define", "data", "case", "of",  "if",     "then", "else", "let",
                                        "in",     "amb",  "factor", "fail", "fold", "unfold", "and"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

std::vector<Token> lex(const std::string &src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1, col = 1, depth = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto fail = [&](const std::string &msg) { throw Error(Stage::Parse, {line, col}, msg); };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '(' && i + 1 < src.size() && src[i + 1] == '*') {
            SourcePos start{line, col};
            int nest = 0;
            do {
                if (i + 1 < src.size() && src[i] == '(' && src[i + 1] == '*') {
                    ++nest;
                    advance(2);
                } else if (i + 1 < src.size() && src[i] == '*' && src[i + 1] == ')') {
                    --nest;
                    advance(2);
                } else if (i < src.size()) {
                    advance(1);
                } else {
                    throw Error(Stage::Parse, start, "unterminated comment");
                }
            } while (nest > 0);
            continue;
        }
        SourcePos pos{line, col};
        // A token in column 1 ends the previous item, as if preceded by ';'.
        if (col == 1 && !out.empty() && depth == 0) out.push_back({Tok::Symbol, ";", pos});
        if (c == '(') ++depth;
        if (c == ')' && depth > 0) --depth;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            std::string text = src.substr(i, j - i);
            out.push_back({keywords.count(text) ? Tok::Keyword : Tok::Ident, text, pos});
            advance(j - i);
            continue;
        }
        if (digit(c)) {
            std::size_t j = i;
            while (j < src.size() && digit(src[j])) ++j;
            // After a projection dot the number is a plain index, so `x.1.2` stays two projections.
            bool after_dot = !out.empty() && out.back().kind == Tok::Symbol && out.back().text == ".";
            if (!after_dot && j + 1 < src.size() && (src[j] == '.' || src[j] == '/') && digit(src[j + 1])) {
                ++j;
                while (j < src.size() && digit(src[j])) ++j;
            }
            out.push_back({Tok::Number, src.substr(i, j - i), pos});
            advance(j - i);
            continue;
        }
        static const char *two[] = {"==", "=>", "->"};
        bool matched = false;
        for (auto s : two) {
            if (src.compare(i, 2, s) == 0) {
                out.push_back({Tok::Symbol, s, pos});
                advance(2);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string("=|.,()<>\\:;*+&").find(c) != std::string::npos) {
            out.push_back({Tok::Symbol, std::string(1, c), pos});
            advance(1);
            continue;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    out.push_back({Tok::End, "", {line, col}});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    SurfaceProgram program() {
        SurfaceProgram p;
        std::set<std::string> def_names, type_names, ctor_names;
        while (true) {
            if (is_kw("data")) {
                auto d = data_decl();
                if (!type_names.insert(d.name).second || d.name == "Bool" || d.name == "Unit")
                    throw Error(Stage::Parse, d.pos, "duplicate datatype '" + d.name + "'");
                for (auto &c : d.ctors)
                    if (!ctor_names.insert(c.name).second || c.name == "true" || c.name == "false")
                        throw Error(Stage::Parse, c.pos, "duplicate constructor '" + c.name + "'");
                p.data.push_back(std::move(d));
            } else if (is_kw("define")) {
                auto d = define();
                if (!def_names.insert(d.name).second)
                    throw Error(Stage::Parse, d.pos, "duplicate definition '" + d.name + "'");
                p.defines.push_back(std::move(d));
            } else {
                break;
            }
            while (is_sym(";")) next();
        }
        if (peek().kind == Tok::End) throw Error(Stage::Parse, peek().pos, "missing main expression");
        p.main = expr();
        while (is_sym(";")) next();
        if (peek().kind != Tok::End) fail_here("unexpected '" + peek().text + "' after main expression");
        return p;
    }

private:
    std::vector<Token> toks_;
    std::size_t at_ = 0;

    const Token &peek(std::size_t k = 0) const { return toks_[std::min(at_ + k, toks_.size() - 1)]; }
    Token next() { return toks_[at_ < toks_.size() - 1 ? at_++ : at_]; }
    bool is_kw(const char *k, std::size_t off = 0) const {
        return peek(off).kind == Tok::Keyword && peek(off).text == k;
    }
    bool is_sym(const char *s, std::size_t off = 0) const {
        return peek(off).kind == Tok::Symbol && peek(off).text == s;
    }
    [[noreturn]] void fail_here(const std::string &msg) const { throw Error(Stage::Parse, peek().pos, msg); }

    std::string describe(const Token &t) const {
        if (t.kind == Tok::End) return "end of input";
        return "'" + t.text + "'";
    }

    void expect_sym(const char *s) {
        if (!is_sym(s)) fail_here(std::string("expected '") + s + "' but found " + describe(peek()));
        next();
    }
    void expect_kw(const char *k) {
        if (!is_kw(k)) fail_here(std::string("expected '") + k + "' but found " + describe(peek()));
        next();
    }
    std::string ident(const char *what) {
        if (peek().kind != Tok::Ident) fail_here(std::string("expected ") + what + " but found " + describe(peek()));
        return next().text;
    }

    SData data_decl() {
        SData d;
        d.pos = next().pos;
        d.name = ident("datatype name");
        expect_sym("=");
        if (is_sym("|")) next();
        do {
            SCtor c;
            c.pos = peek().pos;
            c.name = ident("constructor name");
            while (type_atom_start()) c.args.push_back(type_atom());
            d.ctors.push_back(std::move(c));
        } while (is_sym("|") && (next(), true));
        return d;
    }

    SDefine define() {
        SDefine d;
        d.pos = next().pos;
        d.name = ident("identifier after 'define'");
        while (true) {
            if (peek().kind == Tok::Ident) {
                d.params.push_back({next().text, nullptr});
            } else if (is_sym("(") && peek(1).kind == Tok::Ident) {
                next();
                SParam prm{next().text, nullptr};
                if (is_sym(":")) {
                    next();
                    prm.type = type();
                }
                expect_sym(")");
                d.params.push_back(std::move(prm));
            } else {
                break;
            }
        }
        if (is_sym(":")) {
            next();
            d.ret = type();
        }
        expect_sym("=");
        d.body = expr();
        return d;
    }

    // Types.
    bool type_atom_start() const {
        return peek().kind == Tok::Ident || is_sym("(");
    }

    STypePtr type_atom() {
        auto t = std::make_shared<SType>();
        t->pos = peek().pos;
        if (is_sym("(")) {
            next();
            auto inner = type();
            expect_sym(")");
            return inner;
        }
        std::string n = ident("type");
        if (n == "Unit") {
            t->kind = STypeKind::Unit;
        } else if (n == "Bool") {
            t->kind = STypeKind::Bool;
        } else {
            t->kind = STypeKind::Name;
            t->name = n;
        }
        return t;
    }

    STypePtr type_level(int level) {
        static const char *ops[] = {"+", "&", "*"};
        static const STypeKind kinds[] = {STypeKind::Sum, STypeKind::With, STypeKind::Tensor};
        if (level == 3) return type_atom();
        SourcePos pos = peek().pos;
        auto first = type_level(level + 1);
        if (!is_sym(ops[level])) return first;
        auto t = std::make_shared<SType>();
        t->kind = kinds[level];
        t->pos = pos;
        t->args.push_back(first);
        while (is_sym(ops[level])) {
            next();
            t->args.push_back(type_level(level + 1));
        }
        return t;
    }

    STypePtr type() {
        SourcePos pos = peek().pos;
        auto dom = type_level(0);
        if (!is_sym("->")) return dom;
        next();
        auto t = std::make_shared<SType>();
        t->kind = STypeKind::Arrow;
        t->pos = pos;
        t->args = {dom, type()};
        return t;
    }

    // Expressions.
    SExprPtr mk(SExprKind k, SourcePos pos) {
        auto e = std::make_shared<SExpr>();
        e->kind = k;
        e->pos = pos;
        return e;
    }

    std::string binder() {
        if (peek().kind != Tok::Ident) fail_here("expected variable name but found " + describe(peek()));
        return next().text;
    }

    SExprPtr expr() {
        SourcePos pos = peek().pos;
        if (is_kw("let")) {
            next();
            if (is_sym("(")) {
                next();
                auto e = mk(SExprKind::LetTuple, pos);
                if (!is_sym(")")) {
                    e->binders.push_back(binder());
                    while (is_sym(",")) {
                        next();
                        e->binders.push_back(binder());
                    }
                }
                expect_sym(")");
                expect_sym("=");
                e->kids.push_back(expr());
                expect_kw("in");
                e->kids.push_back(expr());
                return e;
            }
            auto e = mk(SExprKind::Let, pos);
            e->name = binder();
            if (is_sym(":")) {
                next();
                e->type = type();
            }
            expect_sym("=");
            e->kids.push_back(expr());
            expect_kw("in");
            e->kids.push_back(expr());
            return e;
        }
        if (is_sym("\\")) {
            next();
            auto e = mk(SExprKind::Lam, pos);
            e->name = binder();
            if (is_sym(":")) {
                next();
                e->type = type();
            }
            expect_sym(".");
            e->kids.push_back(expr());
            return e;
        }
        if (is_kw("if")) {
            next();
            auto e = mk(SExprKind::If, pos);
            e->kids.push_back(expr());
            expect_kw("then");
            e->kids.push_back(expr());
            expect_kw("else");
            e->kids.push_back(expr());
            return e;
        }
        if (is_kw("factor")) {
            next();
            auto e = mk(SExprKind::Factor, pos);
            if (peek().kind != Tok::Number) fail_here("expected weight after 'factor' but found " + describe(peek()));
            auto w = next();
            try {
                e->weight = parse_rational(w.text);
            } catch (const std::invalid_argument &) {
                throw Error(Stage::Parse, w.pos, "malformed weight '" + w.text + "'");
            }
            expect_kw("in");
            e->kids.push_back(expr());
            return e;
        }
        if (is_kw("case")) {
            next();
            auto e = mk(SExprKind::Case, pos);
            if (is_kw("unfold")) {
                next();
                e->unfold = true;
            }
            e->kids.push_back(expr());
            expect_kw("of");
            if (is_sym("|")) next();
            do {
                SArm arm;
                arm.pos = peek().pos;
                if (is_kw("fail")) fail_here("expected constructor pattern");
                arm.ctor = ident("constructor pattern");
                while (peek().kind == Tok::Ident) arm.vars.push_back(next().text);
                expect_sym("=>");
                arm.body = expr();
                e->arms.push_back(std::move(arm));
            } while (is_sym("|") && (next(), true));
            return e;
        }
        return and_expr();
    }

    SExprPtr and_expr() {
        SourcePos pos = peek().pos;
        auto l = eq_expr();
        if (!is_kw("and")) return l;
        next();
        auto e = mk(SExprKind::And, pos);
        e->kids = {l, and_operand()};
        return e;
    }

    SExprPtr and_operand() { return and_expr(); }

    SExprPtr eq_expr() {
        SourcePos pos = peek().pos;
        auto l = app_expr();
        if (!is_sym("==")) return l;
        next();
        auto e = mk(SExprKind::Eq, pos);
        e->kids = {l, app_expr()};
        return e;
    }

    bool atom_start() const {
        auto &t = peek();
        if (t.kind == Tok::Ident) return true;
        if (t.kind == Tok::Keyword) return t.text == "fail";
        return is_sym("(") || is_sym("<");
    }

    SExprPtr app_expr() {
        SourcePos pos = peek().pos;
        if (is_kw("amb")) {
            next();
            auto e = mk(SExprKind::Amb, pos);
            if (!atom_start()) fail_here("expected two arguments to 'amb'");
            e->kids.push_back(postfix());
            if (!atom_start()) fail_here("expected two arguments to 'amb'");
            e->kids.push_back(postfix());
            return e;
        }
        if (is_kw("fold")) {
            next();
            auto e = mk(SExprKind::Fold, pos);
            e->kids.push_back(app_expr());
            return e;
        }
        if (!atom_start()) fail_here("expected expression but found " + describe(peek()));
        auto f = postfix();
        while (atom_start()) {
            auto a = mk(SExprKind::App, pos);
            a->kids = {f, postfix()};
            f = a;
        }
        return f;
    }

    SExprPtr postfix() {
        auto e = atom();
        while (is_sym(".") && peek(1).kind == Tok::Number) {
            SourcePos pos = peek().pos;
            next();
            auto t = next();
            std::size_t i = 0;
            for (char c : t.text) {
                if (!digit(c)) throw Error(Stage::Parse, t.pos, "projection index must be an integer");
                i = i * 10 + (c - '0');
            }
            if (i == 0) throw Error(Stage::Parse, t.pos, "projection indices start at 1");
            auto p = mk(SExprKind::Proj, pos);
            p->index = i - 1;
            p->kids.push_back(e);
            e = p;
        }
        return e;
    }

    SExprPtr atom() {
        SourcePos pos = peek().pos;
        if (peek().kind == Tok::Ident) {
            auto e = mk(SExprKind::Var, pos);
            e->name = next().text;
            return e;
        }
        if (is_kw("fail")) {
            next();
            return mk(SExprKind::Fail, pos);
        }
        if (is_sym("(")) {
            next();
            if (is_sym(")")) {
                next();
                return mk(SExprKind::Tuple, pos);
            }
            auto first = expr();
            if (is_sym(")")) {
                next();
                return first;
            }
            auto e = mk(SExprKind::Tuple, pos);
            e->kids.push_back(first);
            while (is_sym(",")) {
                next();
                e->kids.push_back(expr());
            }
            expect_sym(")");
            return e;
        }
        if (is_sym("<")) {
            next();
            auto e = mk(SExprKind::AddTuple, pos);
            e->kids.push_back(expr());
            while (is_sym(",")) {
                next();
                e->kids.push_back(expr());
            }
            expect_sym(">");
            return e;
        }
        fail_here("expected expression but found " + describe(peek()));
    }
};

// Printing. Levels: 0 open expression, 1 and-operand, 2 eq-operand, 3 application, 4 atom.
void print_type(std::ostream &os, const STypePtr &t, int ctx) {
    auto nary = [&](const char *op, int prec) {
        if (prec < ctx) os << "(";
        for (std::size_t i = 0; i < t->args.size(); ++i) {
            if (i) os << " " << op << " ";
            print_type(os, t->args[i], prec + 1);
        }
        if (prec < ctx) os << ")";
    };
    switch (t->kind) {
    case STypeKind::Unit: os << "Unit"; return;
    case STypeKind::Bool: os << "Bool"; return;
    case STypeKind::Name: os << t->name; return;
    case STypeKind::Arrow:
        if (ctx > 0) os << "(";
        print_type(os, t->args[0], 1);
        os << " -> ";
        print_type(os, t->args[1], 0);
        if (ctx > 0) os << ")";
        return;
    case STypeKind::Sum: nary("+", 1); return;
    case STypeKind::With: nary("&", 2); return;
    case STypeKind::Tensor: nary("*", 3); return;
    }
}

void print_expr(std::ostream &os, const SExprPtr &e, int ctx);

void print_open(std::ostream &os, const SExprPtr &e, int ctx, const std::function<void()> &body) {
    if (ctx > 0) os << "(";
    body();
    if (ctx > 0) os << ")";
    (void)e;
}

void print_expr(std::ostream &os, const SExprPtr &e, int ctx) {
    switch (e->kind) {
    case SExprKind::Var: os << e->name; return;
    case SExprKind::Fail: os << "fail"; return;
    case SExprKind::Tuple:
    case SExprKind::AddTuple: {
        bool add = e->kind == SExprKind::AddTuple;
        os << (add ? "<" : "(");
        for (std::size_t i = 0; i < e->kids.size(); ++i) {
            if (i) os << ", ";
            print_expr(os, e->kids[i], 0);
        }
        os << (add ? ">" : ")");
        return;
    }
    case SExprKind::Proj:
        print_expr(os, e->kids[0], 4);
        os << "." << e->index + 1;
        return;
    case SExprKind::App:
        if (ctx > 3) os << "(";
        print_expr(os, e->kids[0], 3);
        os << " ";
        print_expr(os, e->kids[1], 4);
        if (ctx > 3) os << ")";
        return;
    case SExprKind::Amb:
    case SExprKind::Fold:
        // Neither may be followed by further arguments, so they print as atoms-in-parens
        // whenever they are not at application level or looser.
        if (ctx > 2) os << "(";
        if (e->kind == SExprKind::Amb) {
            os << "amb ";
            print_expr(os, e->kids[0], 4);
            os << " ";
            print_expr(os, e->kids[1], 4);
        } else {
            os << "fold ";
            print_expr(os, e->kids[0], 3);
        }
        if (ctx > 2) os << ")";
        return;
    case SExprKind::Eq:
        if (ctx > 2) os << "(";
        print_expr(os, e->kids[0], 3);
        os << " == ";
        print_expr(os, e->kids[1], 3);
        if (ctx > 2) os << ")";
        return;
    case SExprKind::And:
        if (ctx > 1) os << "(";
        print_expr(os, e->kids[0], 2);
        os << " and ";
        print_expr(os, e->kids[1], 1);
        if (ctx > 1) os << ")";
        return;
    case SExprKind::Lam:
        print_open(os, e, ctx, [&] {
            os << "\\" << e->name;
            if (e->type) {
                os << ": ";
                print_type(os, e->type, 0);
            }
            os << ". ";
            print_expr(os, e->kids[0], 0);
        });
        return;
    case SExprKind::Factor:
        print_open(os, e, ctx, [&] {
            os << "factor " << to_string(e->weight) << " in ";
            print_expr(os, e->kids[0], 0);
        });
        return;
    case SExprKind::Let:
        print_open(os, e, ctx, [&] {
            os << "let " << e->name;
            if (e->type) {
                os << ": ";
                print_type(os, e->type, 0);
            }
            os << " = ";
            print_expr(os, e->kids[0], 0);
            os << " in ";
            print_expr(os, e->kids[1], 0);
        });
        return;
    case SExprKind::LetTuple:
        print_open(os, e, ctx, [&] {
            os << "let (";
            for (std::size_t i = 0; i < e->binders.size(); ++i) os << (i ? ", " : "") << e->binders[i];
            os << ") = ";
            print_expr(os, e->kids[0], 0);
            os << " in ";
            print_expr(os, e->kids[1], 0);
        });
        return;
    case SExprKind::If:
        print_open(os, e, ctx, [&] {
            os << "if ";
            print_expr(os, e->kids[0], 0);
            os << " then ";
            print_expr(os, e->kids[1], 0);
            os << " else ";
            print_expr(os, e->kids[2], 0);
        });
        return;
    case SExprKind::Case:
        print_open(os, e, ctx, [&] {
            os << "case " << (e->unfold ? "unfold " : "");
            print_expr(os, e->kids[0], 0);
            os << " of";
            for (std::size_t i = 0; i < e->arms.size(); ++i) {
                auto &a = e->arms[i];
                os << (i ? " | " : " ") << a.ctor;
                for (auto &v : a.vars) os << " " << v;
                os << " => ";
                // Only the last arm may end in an open form without swallowing later arms.
                print_expr(os, a.body, i + 1 == e->arms.size() ? 0 : 1);
            }
        });
        return;
    }
}

bool names_equal(const std::vector<std::string> &a, const std::vector<std::string> &b) { return a == b; }

}  // namespace

SurfaceProgram parse_program(const std::string &source) {
    Parser p(lex(source));
    return p.program();
}

std::string print_surface(const STypePtr &t) {
    std::ostringstream os;
    print_type(os, t, 0);
    return os.str();
}

std::string print_surface(const SExprPtr &e) {
    std::ostringstream os;
    print_expr(os, e, 0);
    return os.str();
}

std::string print_surface(const SurfaceProgram &p) {
    std::ostringstream os;
    for (auto &d : p.data) {
        os << "data " << d.name << " =";
        for (std::size_t i = 0; i < d.ctors.size(); ++i) {
            os << (i ? " | " : " ") << d.ctors[i].name;
            for (auto &a : d.ctors[i].args) {
                os << " ";
                print_type(os, a, 4);
            }
        }
        os << "\n";
    }
    if (!p.data.empty()) os << "\n";
    for (auto &d : p.defines) {
        os << "define " << d.name;
        for (auto &prm : d.params) {
            if (prm.type) {
                os << " (" << prm.name << ": ";
                print_type(os, prm.type, 0);
                os << ")";
            } else {
                os << " " << prm.name;
            }
        }
        if (d.ret) {
            os << " : ";
            print_type(os, d.ret, 0);
        }
        os << " =\n    ";
        print_expr(os, d.body, 0);
        os << "\n\n";
    }
    print_expr(os, p.main, 0);
    os << "\n";
    return os.str();
}

bool surface_equal(const STypePtr &a, const STypePtr &b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind || a->name != b->name || a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!surface_equal(a->args[i], b->args[i])) return false;
    return true;
}

bool surface_equal(const SExprPtr &a, const SExprPtr &b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind || a->name != b->name || !names_equal(a->binders, b->binders) ||
        !surface_equal(a->type, b->type) || a->index != b->index || a->weight != b->weight ||
        a->unfold != b->unfold || a->kids.size() != b->kids.size() || a->arms.size() != b->arms.size())
        return false;
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!surface_equal(a->kids[i], b->kids[i])) return false;
    for (std::size_t i = 0; i < a->arms.size(); ++i) {
        auto &x = a->arms[i], &y = b->arms[i];
        if (x.ctor != y.ctor || x.vars != y.vars || !surface_equal(x.body, y.body)) return false;
    }
    return true;
}

bool surface_equal(const SurfaceProgram &a, const SurfaceProgram &b) {
    if (a.data.size() != b.data.size() || a.defines.size() != b.defines.size()) return false;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        auto &x = a.data[i], &y = b.data[i];
        if (x.name != y.name || x.ctors.size() != y.ctors.size()) return false;
        for (std::size_t j = 0; j < x.ctors.size(); ++j) {
            if (x.ctors[j].name != y.ctors[j].name || x.ctors[j].args.size() != y.ctors[j].args.size())
                return false;
            for (std::size_t k = 0; k < x.ctors[j].args.size(); ++k)
                if (!surface_equal(x.ctors[j].args[k], y.ctors[j].args[k])) return false;
        }
    }
    for (std::size_t i = 0; i < a.defines.size(); ++i) {
        auto &x = a.defines[i], &y = b.defines[i];
        if (x.name != y.name || x.params.size() != y.params.size() || !surface_equal(x.ret, y.ret) ||
            !surface_equal(x.body, y.body))
            return false;
        for (std::size_t j = 0; j < x.params.size(); ++j)
            if (x.params[j].name != y.params[j].name || !surface_equal(x.params[j].type, y.params[j].type))
                return false;
    }
    return surface_equal(a.main, b.main);
}

}  // namespace perpl
