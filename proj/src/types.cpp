#include "perpl/types.hpp"

#include <stdexcept>

namespace perpl {

namespace {

TypePtr make(TypeKind k, std::vector<TypePtr> args = {}) {
    auto t = std::make_shared<Type>();
    t->kind = k;
    t->args = std::move(args);
    return t;
}

}  // namespace

TypePtr arrow(TypePtr dom, TypePtr cod) { return make(TypeKind::Arrow, {std::move(dom), std::move(cod)}); }
TypePtr tensor(std::vector<TypePtr> comps) { return make(TypeKind::Tensor, std::move(comps)); }

TypePtr unit_type() {
    static const TypePtr u = make(TypeKind::Tensor);
    return u;
}

TypePtr with_type(std::vector<TypePtr> comps) { return make(TypeKind::With, std::move(comps)); }

TypePtr sum_type(std::vector<TypePtr> comps, std::shared_ptr<const DataInfo> data) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Sum;
    t->args = std::move(comps);
    t->data = std::move(data);
    return t;
}

TypePtr mu_type(int tag, std::string name, TypePtr body, std::string label) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Mu;
    t->tag = tag;
    t->name = std::move(name);
    t->label = std::move(label);
    t->args = {std::move(body)};
    return t;
}

TypePtr type_var(std::string name) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Var;
    t->name = std::move(name);
    return t;
}

TypePtr meta_type(int id) {
    auto t = std::make_shared<Type>();
    t->kind = TypeKind::Meta;
    t->tag = id;
    return t;
}

TypePtr bool_type() {
    static const TypePtr b = [] {
        auto info = std::make_shared<DataInfo>();
        info->name = "Bool";
        info->ctors = {"true", "false"};
        info->arities = {0, 0};
        return sum_type({unit_type(), unit_type()}, info);
    }();
    return b;
}

bool is_bool(const TypePtr &t) {
    return t->kind == TypeKind::Sum && t->args.size() == 2 && t->args[0]->kind == TypeKind::Tensor &&
           t->args[0]->args.empty() && t->args[1]->kind == TypeKind::Tensor && t->args[1]->args.empty();
}

bool type_equal(const TypePtr &a, const TypePtr &b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case TypeKind::Mu:
        return a->tag == b->tag && a->name == b->name;
    case TypeKind::Var:
        return a->name == b->name;
    case TypeKind::Meta:
        return a->tag == b->tag;
    default:
        break;
    }
    if (a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!type_equal(a->args[i], b->args[i])) return false;
    return true;
}

bool is_positive(const TypePtr &t) {
    switch (t->kind) {
    case TypeKind::Arrow:
    case TypeKind::With:
    case TypeKind::Mu:
    case TypeKind::Var:
        return false;
    case TypeKind::Meta:
        throw std::logic_error("is_positive on unresolved type");
    default:
        for (auto &c : t->args)
            if (!is_positive(c)) return false;
        return true;
    }
}

bool contains_tag(const TypePtr &t, int tag) {
    if (t->kind == TypeKind::Mu && t->tag == tag) return true;
    for (auto &c : t->args)
        if (contains_tag(c, tag)) return true;
    return false;
}

bool contains_mu(const TypePtr &t) {
    if (t->kind == TypeKind::Mu) return true;
    for (auto &c : t->args)
        if (contains_mu(c)) return true;
    return false;
}

bool contains_arrow_or_with(const TypePtr &t) {
    if (t->kind == TypeKind::Arrow || t->kind == TypeKind::With) return true;
    for (auto &c : t->args)
        if (contains_arrow_or_with(c)) return true;
    return false;
}

void collect_tags(const TypePtr &t, std::set<int> &out) {
    if (t->kind == TypeKind::Mu) out.insert(t->tag);
    for (auto &c : t->args) collect_tags(c, out);
}

TypePtr subst_var(const TypePtr &body, const std::string &name, const TypePtr &replacement) {
    if (body->kind == TypeKind::Var) return body->name == name ? replacement : body;
    if (body->kind == TypeKind::Mu && body->name == name) return body;
    if (body->args.empty()) return body;
    std::vector<TypePtr> args;
    bool changed = false;
    for (auto &c : body->args) {
        args.push_back(subst_var(c, name, replacement));
        changed |= args.back() != c;
    }
    if (!changed) return body;
    auto t = std::make_shared<Type>(*body);
    t->args = std::move(args);
    return t;
}

TypePtr unroll(const TypePtr &mu) {
    if (mu->kind != TypeKind::Mu) throw std::logic_error("unroll of non-μ type");
    return subst_var(mu->args[0], mu->name, mu);
}

TypePtr replace_tag(const TypePtr &t, int tag, const TypePtr &replacement) {
    if (t->kind == TypeKind::Mu && t->tag == tag) return replacement;
    if (t->args.empty()) return t;
    std::vector<TypePtr> args;
    bool changed = false;
    for (auto &c : t->args) {
        args.push_back(replace_tag(c, tag, replacement));
        changed |= args.back() != c;
    }
    if (!changed) return t;
    auto r = std::make_shared<Type>(*t);
    r->args = std::move(args);
    return r;
}

namespace {

// 0: arrow, 1: sum, 2: with, 3: tensor, 4: atom
std::string render_prec(const TypePtr &t, int ctx) {
    auto wrap = [&](int prec, std::string s) { return prec < ctx ? "(" + s + ")" : s; };
    auto join = [&](const char *sep, int prec) {
        std::string s;
        for (std::size_t i = 0; i < t->args.size(); ++i) {
            if (i) s += sep;
            s += render_prec(t->args[i], prec + 1);
        }
        return wrap(prec, s);
    };
    switch (t->kind) {
    case TypeKind::Arrow:
        return wrap(0, render_prec(t->args[0], 1) + " -> " + render_prec(t->args[1], 0));
    case TypeKind::Tensor:
        if (t->args.empty()) return "Unit";
        if (t->args.size() == 1) return "(*" + render_prec(t->args[0], 4) + ")";
        return join(" * ", 3);
    case TypeKind::With:
        if (t->args.empty()) return "Top";
        if (t->args.size() == 1) return "(&" + render_prec(t->args[0], 4) + ")";
        return join(" & ", 2);
    case TypeKind::Sum:
        if (t->data && !t->data->recursive) return t->data->name;
        if (is_bool(t)) return "Bool";
        if (t->args.empty()) return "Void";
        if (t->args.size() == 1) return "(+" + render_prec(t->args[0], 4) + ")";
        return join(" + ", 1);
    case TypeKind::Mu:
        return t->label.empty() ? t->name + "#" + std::to_string(t->tag) : t->label;
    case TypeKind::Var:
        return "'" + t->name;
    case TypeKind::Meta:
        return "?" + std::to_string(t->tag);
    }
    return "?";
}

}  // namespace

std::string render(const TypePtr &t) { return render_prec(t, 0); }

}  // namespace perpl
