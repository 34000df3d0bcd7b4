#include "perpl/core.hpp"

#include <functional>
#include <sstream>

namespace perpl {

namespace {

ExprPtr node(ExprKind k, SourcePos pos, std::vector<ExprPtr> kids = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->pos = pos;
    e->kids = std::move(kids);
    return e;
}

}  // namespace

ExprPtr mk_var(std::string name, SourcePos pos) {
    auto e = node(ExprKind::Var, pos);
    e->name = std::move(name);
    return e;
}

ExprPtr mk_lam(std::string x, TypePtr dom, ExprPtr body, SourcePos pos) {
    auto e = node(ExprKind::Lam, pos, {std::move(body)});
    e->name = std::move(x);
    e->type = std::move(dom);
    return e;
}

ExprPtr mk_app(ExprPtr f, ExprPtr a, SourcePos pos) { return node(ExprKind::App, pos, {std::move(f), std::move(a)}); }
ExprPtr mk_amb(ExprPtr l, ExprPtr r, SourcePos pos) { return node(ExprKind::Amb, pos, {std::move(l), std::move(r)}); }

ExprPtr mk_fail(TypePtr t, SourcePos pos) {
    auto e = node(ExprKind::Fail, pos);
    e->type = std::move(t);
    return e;
}

ExprPtr mk_factor(Rational w, ExprPtr body, SourcePos pos) {
    auto e = node(ExprKind::Factor, pos, {std::move(body)});
    e->weight = std::move(w);
    return e;
}

ExprPtr mk_tuple(std::vector<ExprPtr> comps, SourcePos pos) { return node(ExprKind::Tuple, pos, std::move(comps)); }
ExprPtr mk_addtuple(std::vector<ExprPtr> comps, SourcePos pos) {
    return node(ExprKind::AddTuple, pos, std::move(comps));
}

ExprPtr mk_lettuple(std::vector<std::string> xs, ExprPtr bound, ExprPtr body, SourcePos pos) {
    auto e = node(ExprKind::LetTuple, pos, {std::move(bound), std::move(body)});
    e->binders = std::move(xs);
    return e;
}

ExprPtr mk_proj(ExprPtr e, std::size_t i, SourcePos pos) {
    auto r = node(ExprKind::Proj, pos, {std::move(e)});
    r->index = i;
    return r;
}

ExprPtr mk_inj(std::size_t i, TypePtr sum, ExprPtr e, SourcePos pos) {
    auto r = node(ExprKind::Inj, pos, {std::move(e)});
    r->index = i;
    r->type = std::move(sum);
    return r;
}

ExprPtr mk_case(ExprPtr scrut, std::vector<std::string> xs, std::vector<ExprPtr> arms, TypePtr result,
                SourcePos pos) {
    std::vector<ExprPtr> kids{std::move(scrut)};
    for (auto &a : arms) kids.push_back(std::move(a));
    auto r = node(ExprKind::Case, pos, std::move(kids));
    r->binders = std::move(xs);
    r->type = std::move(result);
    return r;
}

ExprPtr mk_fold(TypePtr mu, ExprPtr e, SourcePos pos) {
    auto r = node(ExprKind::Fold, pos, {std::move(e)});
    r->type = std::move(mu);
    return r;
}

ExprPtr mk_unfold(TypePtr mu, std::string x, ExprPtr bound, ExprPtr body, SourcePos pos) {
    auto r = node(ExprKind::Unfold, pos, {std::move(bound), std::move(body)});
    r->type = std::move(mu);
    r->name = std::move(x);
    return r;
}

const Define *Program::find(const std::string &name) const {
    for (auto &d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

Define *Program::find(const std::string &name) {
    for (auto &d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

ExprPtr clone(const ExprPtr &e) {
    auto r = std::make_shared<Expr>(*e);
    for (auto &k : r->kids) k = clone(k);
    return r;
}

Program clone(const Program &p) {
    Program r;
    for (auto &d : p.defs) r.defs.push_back({d.name, d.type, clone(d.body), d.pos});
    r.main = clone(p.main);
    return r;
}

int number_nodes(Program &p) {
    int next = 0;
    std::function<void(const ExprPtr &)> go = [&](const ExprPtr &e) {
        e->id = next++;
        for (auto &k : e->kids) go(k);
    };
    for (auto &d : p.defs) go(d.body);
    go(p.main);
    return next;
}

std::vector<std::string> binders_at(const Expr &e, std::size_t k) {
    switch (e.kind) {
    case ExprKind::Lam:
        return {e.name};
    case ExprKind::LetTuple:
        if (k == 1) return e.binders;
        return {};
    case ExprKind::Case:
        if (k >= 1) return {e.binders[k - 1]};
        return {};
    case ExprKind::Unfold:
        if (k == 1) return {e.name};
        return {};
    default:
        return {};
    }
}

std::vector<std::string> free_locals(const ExprPtr &e, const Program &p) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::vector<std::string> bound;
    std::function<void(const ExprPtr &)> go = [&](const ExprPtr &n) {
        if (n->kind == ExprKind::Var) {
            bool is_bound = false;
            for (auto &b : bound)
                if (b == n->name) is_bound = true;
            if (is_bound || p.find(n->name)) return;
            if (seen.insert(n->name).second) out.push_back(n->name);
            return;
        }
        for (std::size_t k = 0; k < n->kids.size(); ++k) {
            auto bs = binders_at(*n, k);
            for (auto &b : bs) bound.push_back(b);
            go(n->kids[k]);
            bound.resize(bound.size() - bs.size());
        }
    };
    go(e);
    return out;
}

ExprPtr rename_free(const ExprPtr &e, const std::string &from, const std::string &to) {
    if (e->kind == ExprKind::Var) return e->name == from ? mk_var(to, e->pos) : e;
    auto r = std::make_shared<Expr>(*e);
    for (std::size_t k = 0; k < r->kids.size(); ++k) {
        auto bs = binders_at(*e, k);
        bool shadowed = false;
        for (auto &b : bs) shadowed |= b == from;
        if (!shadowed) r->kids[k] = rename_free(r->kids[k], from, to);
    }
    return r;
}

std::set<std::string> all_names(const Program &p) {
    std::set<std::string> out;
    std::function<void(const ExprPtr &)> go = [&](const ExprPtr &e) {
        if (!e->name.empty()) out.insert(e->name);
        for (auto &b : e->binders) out.insert(b);
        for (auto &k : e->kids) go(k);
    };
    for (auto &d : p.defs) {
        out.insert(d.name);
        go(d.body);
    }
    go(p.main);
    return out;
}

std::string fresh_name(const std::string &base, std::set<std::string> &taken) {
    std::string n = base;
    for (int i = 1; taken.count(n); ++i) n = base + "_" + std::to_string(i);
    taken.insert(n);
    return n;
}

namespace {

std::size_t mu_in(const TypePtr &t) {
    if (!t) return 0;
    std::size_t n = t->kind == TypeKind::Mu ? 1 : 0;
    for (auto &c : t->args) n += mu_in(c);
    return n;
}

std::size_t mu_nodes(const ExprPtr &e) {
    std::size_t n = mu_in(e->type);
    if (e->kind == ExprKind::Fold || e->kind == ExprKind::Unfold) ++n;
    for (auto &k : e->kids) n += mu_nodes(k);
    return n;
}

}  // namespace

std::size_t count_mu_nodes(const Program &p) {
    std::size_t n = mu_nodes(p.main);
    for (auto &d : p.defs) n += mu_in(d.type) + mu_nodes(d.body);
    return n;
}

std::size_t count_nodes(const ExprPtr &e) {
    std::size_t n = 1;
    for (auto &k : e->kids) n += count_nodes(k);
    return n;
}

namespace {

std::string ty(const TypePtr &t) { return t ? render(t) : "_"; }

// Prints with enough parentheses to be unambiguous; 0 = open context, 1 = operand, 2 = atom.
void print(std::ostream &os, const ExprPtr &e, int ctx) {
    auto open = [&](int prec) {
        if (prec < ctx) os << "(";
    };
    auto close = [&](int prec) {
        if (prec < ctx) os << ")";
    };
    switch (e->kind) {
    case ExprKind::Var:
        os << e->name;
        return;
    case ExprKind::Lam:
        open(0);
        os << "\\" << e->name << ": " << ty(e->type) << ". ";
        print(os, e->kids[0], 0);
        close(0);
        return;
    case ExprKind::App:
        open(1);
        print(os, e->kids[0], 1);
        os << " ";
        print(os, e->kids[1], 2);
        close(1);
        return;
    case ExprKind::Amb:
        open(1);
        os << "amb ";
        print(os, e->kids[0], 2);
        os << " ";
        print(os, e->kids[1], 2);
        close(1);
        return;
    case ExprKind::Fail:
        os << "fail";
        return;
    case ExprKind::Factor:
        open(0);
        os << "factor " << to_string(e->weight) << " in ";
        print(os, e->kids[0], 0);
        close(0);
        return;
    case ExprKind::Tuple:
    case ExprKind::AddTuple: {
        bool add = e->kind == ExprKind::AddTuple;
        os << (add ? "<" : "(");
        for (std::size_t i = 0; i < e->kids.size(); ++i) {
            if (i) os << ", ";
            print(os, e->kids[i], 0);
        }
        if (!add && e->kids.size() == 1) os << ",";
        os << (add ? ">" : ")");
        return;
    }
    case ExprKind::LetTuple:
        open(0);
        os << "let (";
        for (std::size_t i = 0; i < e->binders.size(); ++i) os << (i ? ", " : "") << e->binders[i];
        os << ") = ";
        print(os, e->kids[0], 0);
        os << " in ";
        print(os, e->kids[1], 0);
        close(0);
        return;
    case ExprKind::Proj:
        print(os, e->kids[0], 2);
        os << "." << e->index + 1;
        return;
    case ExprKind::Inj:
        open(1);
        os << "in" << e->index + 1 << "[" << ty(e->type) << "] ";
        print(os, e->kids[0], 2);
        close(1);
        return;
    case ExprKind::Case:
        open(0);
        os << "case ";
        print(os, e->kids[0], 0);
        os << " of ";
        if (e->kids.size() == 1) os << "{}";
        for (std::size_t i = 1; i < e->kids.size(); ++i) {
            if (i > 1) os << " | ";
            os << "in" << i << " " << e->binders[i - 1] << " => ";
            print(os, e->kids[i], i + 1 == e->kids.size() ? 0 : 1);
        }
        close(0);
        return;
    case ExprKind::Fold:
        open(1);
        os << "fold[" << ty(e->type) << "] ";
        print(os, e->kids[0], 2);
        close(1);
        return;
    case ExprKind::Unfold:
        open(0);
        os << "unfold[" << ty(e->type) << "] " << e->name << " = ";
        print(os, e->kids[0], 0);
        os << " in ";
        print(os, e->kids[1], 0);
        close(0);
        return;
    }
}

}  // namespace

std::string print_expr(const ExprPtr &e) {
    std::ostringstream os;
    print(os, e, 0);
    return os.str();
}

std::string print_program(const Program &p) {
    std::ostringstream os;
    for (auto &d : p.defs) {
        os << "define " << d.name << " : " << ty(d.type) << " =\n  ";
        print(os, d.body, 0);
        os << "\n\n";
    }
    print(os, p.main, 0);
    os << "\n";
    return os.str();
}

}  // namespace perpl
