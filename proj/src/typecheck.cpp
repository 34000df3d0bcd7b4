#include "perpl/typecheck.hpp"

#include "perpl/desugar.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace perpl {

namespace {

[[noreturn]] void type_error(SourcePos pos, const std::string &msg) { throw Error(Stage::Typecheck, pos, msg); }

// ---------------------------------------------------------------------------
// Unification over metavariables and μ tags.

class Unifier {
public:
    explicit Unifier(int first_meta) : next_meta_(first_meta) {}

    TypePtr meta() { return meta_type(next_meta_++); }

    TypePtr resolve(TypePtr t) {
        while (t->kind == TypeKind::Meta) {
            auto it = binding_.find(t->tag);
            if (it == binding_.end()) return t;
            t = it->second;
        }
        return t;
    }

    int find(int tag) {
        auto it = parent_.find(tag);
        if (it == parent_.end() || it->second == tag) return tag;
        int root = find(it->second);
        parent_[tag] = root;
        return root;
    }

    void unify(const TypePtr &expected, const TypePtr &actual, SourcePos pos) {
        if (!unify_rec(expected, actual))
            type_error(pos, "type mismatch: expected " + render(show(expected)) + " but found " +
                                render(show(actual)));
    }

    // Substitutes solved metavariables; unsolved ones stay visible (for messages).
    TypePtr show(const TypePtr &t0) {
        auto t = resolve(t0);
        if (t->args.empty()) return t;
        auto r = std::make_shared<Type>(*t);
        for (auto &a : r->args) a = show(a);
        return r;
    }

    // Final form: unsolved metavariables default to Unit, tags to their class representative.
    TypePtr zonk(const TypePtr &t0) {
        auto t = resolve(t0);
        if (t->kind == TypeKind::Meta) return unit_type();
        if (t->kind == TypeKind::Var) return t;
        if (t->args.empty() && t->kind != TypeKind::Mu) return t;
        auto r = std::make_shared<Type>(*t);
        if (t->kind == TypeKind::Mu) r->tag = find(t->tag);
        for (auto &a : r->args) a = zonk(a);
        return r;
    }

private:
    std::map<int, TypePtr> binding_;
    std::map<int, int> parent_;
    int next_meta_;

    bool occurs(int id, const TypePtr &t0) {
        auto t = resolve(t0);
        if (t->kind == TypeKind::Meta) return t->tag == id;
        for (auto &a : t->args)
            if (occurs(id, a)) return true;
        return false;
    }

    bool unify_rec(const TypePtr &a0, const TypePtr &b0) {
        auto a = resolve(a0), b = resolve(b0);
        if (a == b) return true;
        if (a->kind == TypeKind::Meta || b->kind == TypeKind::Meta) {
            if (a->kind != TypeKind::Meta) std::swap(a, b);
            if (b->kind == TypeKind::Meta && b->tag == a->tag) return true;
            if (occurs(a->tag, b)) return false;
            binding_[a->tag] = b;
            return true;
        }
        if (a->kind != b->kind) return false;
        switch (a->kind) {
        case TypeKind::Var:
            return a->name == b->name;
        case TypeKind::Mu: {
            if (a->name != b->name) return false;
            int ra = find(a->tag), rb = find(b->tag);
            if (ra == rb) return true;
            parent_[rb] = ra;
            return unify_rec(a->args[0], b->args[0]);
        }
        default:
            if (a->args.size() != b->args.size()) return false;
            for (std::size_t i = 0; i < a->args.size(); ++i)
                if (!unify_rec(a->args[i], b->args[i])) return false;
            return true;
        }
    }
};

int max_meta(const TypePtr &t) {
    if (!t) return 0;
    int m = t->kind == TypeKind::Meta ? t->tag : 0;
    for (auto &a : t->args) m = std::max(m, max_meta(a));
    return m;
}

int max_meta(const ExprPtr &e) {
    int m = max_meta(e->type);
    for (auto &k : e->kids) m = std::max(m, max_meta(k));
    return m;
}

class Inferencer {
public:
    explicit Inferencer(Program &p) : p_(p), u_(first_meta(p)) {}

    void run() {
        for (auto &d : p_.defs)
            if (!d.type) d.type = u_.meta();
        for (auto &d : p_.defs) {
            env_.clear();
            u_.unify(d.type, infer(d.body), d.pos);
        }
        env_.clear();
        infer(p_.main);
    }

    Unifier &unifier() { return u_; }
    std::map<const Expr *, TypePtr> eq_sites;

private:
    Program &p_;
    Unifier u_;
    std::vector<std::pair<std::string, TypePtr>> env_;

    static int first_meta(const Program &p) {
        int m = max_meta(p.main);
        for (auto &d : p.defs) m = std::max({m, max_meta(d.body), max_meta(d.type)});
        return m + 1;
    }

    TypePtr lookup(const std::string &x, SourcePos pos, const Expr *node) {
        for (auto it = env_.rbegin(); it != env_.rend(); ++it)
            if (it->first == x) return it->second;
        if (x == eq_placeholder) {
            auto a = u_.meta();
            eq_sites[node] = a;
            return arrow(a, arrow(a, bool_type()));
        }
        if (auto *d = p_.find(x)) return d->type;
        type_error(pos, "unbound variable '" + x + "'");
    }

    TypePtr with_binders(const std::vector<std::pair<std::string, TypePtr>> &bs, const ExprPtr &body) {
        for (auto &b : bs) env_.push_back(b);
        auto t = infer(body);
        env_.resize(env_.size() - bs.size());
        return t;
    }

    TypePtr infer(const ExprPtr &e) {
        switch (e->kind) {
        case ExprKind::Var:
            return lookup(e->name, e->pos, e.get());
        case ExprKind::Lam:
            if (!e->type) e->type = u_.meta();
            return arrow(e->type, with_binders({{e->name, e->type}}, e->kids[0]));
        case ExprKind::App: {
            auto tf = u_.resolve(infer(e->kids[0]));
            auto ta = infer(e->kids[1]);
            if (tf->kind == TypeKind::Arrow) {
                u_.unify(tf->args[0], ta, e->kids[1]->pos);
                return tf->args[1];
            }
            if (tf->kind != TypeKind::Meta)
                type_error(e->pos, "cannot apply an expression of type " + render(u_.show(tf)));
            auto res = u_.meta();
            u_.unify(tf, arrow(ta, res), e->pos);
            return res;
        }
        case ExprKind::Amb: {
            auto l = infer(e->kids[0]);
            u_.unify(l, infer(e->kids[1]), e->kids[1]->pos);
            return l;
        }
        case ExprKind::Fail:
            if (!e->type) e->type = u_.meta();
            return e->type;
        case ExprKind::Factor:
            return infer(e->kids[0]);
        case ExprKind::Tuple:
        case ExprKind::AddTuple: {
            std::vector<TypePtr> comps;
            for (auto &k : e->kids) comps.push_back(infer(k));
            return e->kind == ExprKind::Tuple ? tensor(std::move(comps)) : with_type(std::move(comps));
        }
        case ExprKind::LetTuple: {
            auto tb = u_.resolve(infer(e->kids[0]));
            std::vector<std::pair<std::string, TypePtr>> bs;
            if (tb->kind == TypeKind::Tensor) {
                if (tb->args.size() != e->binders.size())
                    type_error(e->pos, "tuple pattern binds " + std::to_string(e->binders.size()) +
                                           " variables but the value has type " + render(u_.show(tb)));
                for (std::size_t i = 0; i < e->binders.size(); ++i) bs.push_back({e->binders[i], tb->args[i]});
            } else {
                std::vector<TypePtr> comps;
                for (auto &b : e->binders) {
                    comps.push_back(u_.meta());
                    bs.push_back({b, comps.back()});
                }
                u_.unify(tensor(comps), tb, e->kids[0]->pos);
            }
            return with_binders(bs, e->kids[1]);
        }
        case ExprKind::Proj: {
            auto t = u_.resolve(infer(e->kids[0]));
            if (t->kind == TypeKind::Meta)
                type_error(e->pos, "cannot infer the type of a projected expression; add a type annotation");
            if (t->kind != TypeKind::With)
                type_error(e->pos, "projection from non-additive type " + render(u_.show(t)));
            if (e->index >= t->args.size())
                type_error(e->pos, "projection index " + std::to_string(e->index + 1) + " out of range for " +
                                       render(u_.show(t)));
            return t->args[e->index];
        }
        case ExprKind::Inj: {
            auto &s = e->type;
            u_.unify(s->args.at(e->index), infer(e->kids[0]), e->kids[0]->pos);
            return s;
        }
        case ExprKind::Case: {
            auto ts = u_.resolve(infer(e->kids[0]));
            std::size_t n = e->kids.size() - 1;
            std::vector<TypePtr> comps;
            if (ts->kind == TypeKind::Sum && ts->args.size() == n) {
                comps = ts->args;
            } else if (ts->kind == TypeKind::Meta) {
                for (std::size_t i = 0; i < n; ++i) comps.push_back(u_.meta());
                u_.unify(ts, sum_type(comps), e->kids[0]->pos);
            } else {
                type_error(e->kids[0]->pos, "case with " + std::to_string(n) + " arms on a value of type " +
                                                render(u_.show(ts)));
            }
            if (!e->type) e->type = u_.meta();
            for (std::size_t i = 0; i < n; ++i)
                u_.unify(e->type, with_binders({{e->binders[i], comps[i]}}, e->kids[i + 1]), e->kids[i + 1]->pos);
            return e->type;
        }
        case ExprKind::Fold:
            u_.unify(unroll(e->type), infer(e->kids[0]), e->kids[0]->pos);
            return e->type;
        case ExprKind::Unfold:
            u_.unify(e->type, infer(e->kids[0]), e->kids[0]->pos);
            return with_binders({{e->name, unroll(e->type)}}, e->kids[1]);
        }
        type_error(e->pos, "unhandled expression");
    }
};

// Rewrites every annotation with `f`.
void map_types(Program &p, const std::function<TypePtr(const TypePtr &)> &f) {
    std::function<void(const ExprPtr &)> go = [&](const ExprPtr &e) {
        if (e->type) e->type = f(e->type);
        for (auto &k : e->kids) go(k);
    };
    for (auto &d : p.defs) {
        d.type = f(d.type);
        go(d.body);
    }
    go(p.main);
}

void visit_types(const Program &p, const std::function<void(const TypePtr &)> &f) {
    std::function<void(const ExprPtr &)> go = [&](const ExprPtr &e) {
        if (e->type) f(e->type);
        for (auto &k : e->kids) go(k);
    };
    for (auto &d : p.defs) {
        f(d.type);
        go(d.body);
    }
    go(p.main);
}

void renumber_tags(Program &p) {
    std::map<int, int> renum;
    std::map<int, std::string> name_of;
    std::function<void(const TypePtr &)> collect = [&](const TypePtr &t) {
        if (t->kind == TypeKind::Mu && !renum.count(t->tag)) {
            int n = static_cast<int>(renum.size()) + 1;
            renum[t->tag] = n;
            name_of[n] = t->name;
        }
        for (auto &a : t->args) collect(a);
    };
    visit_types(p, collect);
    std::map<std::string, int> count;
    for (auto &[tag, name] : name_of) ++count[name];
    std::map<int, std::string> label;
    std::map<std::string, int> seen;
    for (auto &[tag, name] : name_of)
        label[tag] = count[name] == 1 ? name : name + "[" + std::to_string(++seen[name]) + "]";
    std::function<TypePtr(const TypePtr &)> rewrite = [&](const TypePtr &t) -> TypePtr {
        if (t->args.empty()) return t;
        auto r = std::make_shared<Type>(*t);
        if (t->kind == TypeKind::Mu) {
            r->tag = renum.at(t->tag);
            r->label = label.at(r->tag);
        }
        for (auto &a : r->args) a = rewrite(a);
        return r;
    };
    map_types(p, rewrite);
}

// `==` expansion. Operands are positive, hence classical, so they may be inspected repeatedly.
class EqExpander {
public:
    EqExpander(const std::map<const Expr *, TypePtr> &sites, Unifier &u, std::set<std::string> names)
        : sites_(sites), u_(u), names_(std::move(names)) {}

    ExprPtr expand(const ExprPtr &e) {
        if (e->kind == ExprKind::App && e->kids[0]->kind == ExprKind::App &&
            sites_.count(e->kids[0]->kids[0].get())) {
            auto op = e->kids[0]->kids[0];
            auto t = u_.zonk(sites_.at(op.get()));
            if (!is_positive(t))
                throw Error(Stage::Desugar, op->pos,
                            "'==' applied at type " + render(t) +
                                ", which contains function, additive or recursive components");
            auto l = expand(e->kids[0]->kids[1]);
            auto r = expand(e->kids[1]);
            auto a = fresh("eq_l"), b = fresh("eq_r");
            return mk_lettuple({a, b}, mk_tuple({l, r}, e->pos), compare(a, b, t, e->pos), e->pos);
        }
        if (e->kind == ExprKind::Var && sites_.count(e.get()))
            throw Error(Stage::Desugar, e->pos, "'==' must be applied to two operands");
        for (auto &k : e->kids) k = expand(k);
        return e;
    }

private:
    const std::map<const Expr *, TypePtr> &sites_;
    Unifier &u_;
    std::set<std::string> names_;

    std::string fresh(const std::string &base) { return fresh_name("_" + base, names_); }

    static ExprPtr boolean(bool v, SourcePos pos) { return mk_inj(v ? 0 : 1, bool_type(), mk_tuple({}, pos), pos); }

    ExprPtr both(ExprPtr x, ExprPtr y, SourcePos pos) {
        auto u1 = fresh("u"), u2 = fresh("u");
        return mk_case(x, {u1, u2},
                       {mk_lettuple({}, mk_var(u1, pos), y, pos),
                        mk_lettuple({}, mk_var(u2, pos), boolean(false, pos), pos)},
                       bool_type(), pos);
    }

    ExprPtr compare(const std::string &a, const std::string &b, const TypePtr &t, SourcePos pos) {
        if (t->kind == TypeKind::Tensor) {
            if (t->args.empty()) return boolean(true, pos);
            std::vector<std::string> as, bs;
            for (std::size_t i = 0; i < t->args.size(); ++i) {
                as.push_back(fresh("a"));
                bs.push_back(fresh("b"));
            }
            ExprPtr acc = compare(as.back(), bs.back(), t->args.back(), pos);
            for (std::size_t i = t->args.size() - 1; i-- > 0;) acc = both(compare(as[i], bs[i], t->args[i], pos), acc, pos);
            return mk_lettuple(as, mk_var(a, pos), mk_lettuple(bs, mk_var(b, pos), acc, pos), pos);
        }
        // Sum
        std::vector<std::string> outer;
        std::vector<ExprPtr> outer_arms;
        for (std::size_t i = 0; i < t->args.size(); ++i) {
            auto ai = fresh("a");
            std::vector<std::string> inner;
            std::vector<ExprPtr> inner_arms;
            for (std::size_t j = 0; j < t->args.size(); ++j) {
                auto bj = fresh("b");
                inner.push_back(bj);
                inner_arms.push_back(i == j ? compare(ai, bj, t->args[i], pos) : boolean(false, pos));
            }
            outer.push_back(ai);
            outer_arms.push_back(mk_case(mk_var(b, pos), inner, inner_arms, bool_type(), pos));
        }
        return mk_case(mk_var(a, pos), outer, outer_arms, bool_type(), pos);
    }
};

// ---------------------------------------------------------------------------
// Syntax-directed checking with usage accounting.

using Ids = std::vector<int>;  // sorted binding ids

Ids set_union(const Ids &a, const Ids &b) {
    Ids r;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

Ids set_minus(const Ids &a, const Ids &b) {
    Ids r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

Ids set_inter(const Ids &a, const Ids &b) {
    Ids r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

Ids without(const Ids &a, int x) {
    Ids r;
    for (int i : a)
        if (i != x) r.push_back(i);
    return r;
}

class Checker {
public:
    Checker(const Program &p, UsageMode mode, std::size_t n) : p_(p), mode_(mode), nodes_(n) {}

    std::vector<NodeInfo> take_nodes() { return std::move(nodes_); }

    std::vector<DiscardSite> take_discards() {
        std::vector<DiscardSite> out;
        for (auto &[node, ids] : discard_) {
            DiscardSite s;
            s.node = node;
            for (int b : ids) s.vars.push_back({bindings_[b].name, bindings_[b].type});
            out.push_back(std::move(s));
        }
        return out;
    }

    void check_global(const Define &d) {
        if (!d.type) type_error(d.pos, "definition '" + d.name + "' has no type");
        auto r = check(d.body);
        if (!type_equal(d.type, r.type))
            type_error(d.pos, "definition '" + d.name + "' declared as " + render(d.type) + " but its body has type " +
                                  render(r.type));
    }

    TypePtr check_main(const ExprPtr &e) { return check(e).type; }

private:
    struct Binding {
        std::string name;
        TypePtr type;
        bool linear;
    };
    struct Res {
        TypePtr type;
        Ids lin;  // linear variables consumed
        Ids fv;   // all free locals
        bool absorbs = false;
    };

    const Program &p_;
    UsageMode mode_;
    std::vector<NodeInfo> nodes_;
    std::vector<Binding> bindings_;
    std::vector<int> scope_;
    std::map<int, Ids> discard_;

    int bind(const std::string &name, const TypePtr &t) {
        bindings_.push_back({name, t, !is_positive(t)});
        scope_.push_back(static_cast<int>(bindings_.size()) - 1);
        return scope_.back();
    }

    void describe(std::string &out, int b) const {
        out += "'" + bindings_[b].name + "' of type " + render(bindings_[b].type);
    }

    void add_discard(int node, const Ids &ids) { discard_[node] = set_union(discard_[node], ids); }

    // Joins children that split the context. A linear variable may be consumed by one child only.
    Res split(std::initializer_list<const Res *> parts, SourcePos pos) {
        Res r;
        for (auto *c : parts) {
            auto dup = set_inter(r.lin, c->lin);
            if (!dup.empty()) {
                std::string msg = "linear variable ";
                describe(msg, dup[0]);
                type_error(pos, msg + " is used more than once");
            }
            r.lin = set_union(r.lin, c->lin);
            r.fv = set_union(r.fv, c->fv);
            r.absorbs |= c->absorbs;
        }
        return r;
    }

    // Joins alternative children that must each consume the same linear variables.
    Res branch(const std::vector<std::pair<Res, ExprPtr>> &alts) {
        Res r;
        r.absorbs = true;
        for (auto &[c, _] : alts) {
            r.lin = set_union(r.lin, c.lin);
            r.fv = set_union(r.fv, c.fv);
            r.absorbs &= c.absorbs;
        }
        for (auto &[c, node] : alts) {
            auto missing = set_minus(r.lin, c.lin);
            if (missing.empty() || c.absorbs) continue;
            if (mode_ == UsageMode::Affine) {
                add_discard(node->id, missing);
                continue;
            }
            std::string msg = "linear variable ";
            describe(msg, missing[0]);
            type_error(node->pos, msg + " is not used in every branch");
        }
        if (alts.empty()) r.absorbs = false;
        return r;
    }

    // Ends the scope of binding b whose scope is `body`.
    void close(int b, Res &r, const ExprPtr &body) {
        scope_.pop_back();
        bool used = std::binary_search(r.lin.begin(), r.lin.end(), b);
        if (bindings_[b].linear && !used && !r.absorbs) {
            if (mode_ == UsageMode::Affine) {
                add_discard(body->id, {b});
            } else {
                std::string msg = "linear variable ";
                describe(msg, b);
                type_error(body->pos, msg + " is never used");
            }
        }
        r.lin = without(r.lin, b);
        r.fv = without(r.fv, b);
    }

    void expect(const TypePtr &expected, const TypePtr &actual, SourcePos pos) {
        if (!type_equal(expected, actual))
            type_error(pos, "type mismatch: expected " + render(expected) + " but found " + render(actual));
    }

    Res record(const ExprPtr &e, Res r) {
        NodeInfo info;
        info.type = r.type;
        for (int b : r.fv) info.context.push_back({bindings_[b].name, bindings_[b].type});
        nodes_.at(static_cast<std::size_t>(e->id)) = std::move(info);
        return r;
    }

    Res check(const ExprPtr &e) { return record(e, check_inner(e)); }

    Res check_inner(const ExprPtr &e) {
        switch (e->kind) {
        case ExprKind::Var: {
            for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
                if (bindings_[*it].name != e->name) continue;
                Res r;
                r.type = bindings_[*it].type;
                r.fv = {*it};
                if (bindings_[*it].linear) r.lin = {*it};
                return r;
            }
            auto *d = p_.find(e->name);
            if (!d) type_error(e->pos, "unbound variable '" + e->name + "'");
            if (!d->type) type_error(e->pos, "global '" + e->name + "' has no type");
            return Res{d->type, {}, {}, false};
        }
        case ExprKind::Lam: {
            if (!e->type) type_error(e->pos, "missing binder type for '" + e->name + "'");
            int b = bind(e->name, e->type);
            auto body = check(e->kids[0]);
            close(b, body, e->kids[0]);
            body.type = arrow(e->type, body.type);
            body.absorbs = false;
            return body;
        }
        case ExprKind::App: {
            auto f = check(e->kids[0]);
            auto a = check(e->kids[1]);
            if (f.type->kind != TypeKind::Arrow)
                type_error(e->pos, "cannot apply an expression of type " + render(f.type));
            expect(f.type->args[0], a.type, e->kids[1]->pos);
            auto r = split({&f, &a}, e->pos);
            r.type = f.type->args[1];
            return r;
        }
        case ExprKind::Amb: {
            auto l = check(e->kids[0]);
            auto r = check(e->kids[1]);
            expect(l.type, r.type, e->kids[1]->pos);
            auto res = branch({{l, e->kids[0]}, {r, e->kids[1]}});
            res.type = l.type;
            return res;
        }
        case ExprKind::Fail:
            if (!e->type) type_error(e->pos, "missing type on fail");
            return Res{e->type, {}, {}, true};
        case ExprKind::Factor: {
            if (e->weight < 0) type_error(e->pos, "negative factor weight");
            return check(e->kids[0]);
        }
        case ExprKind::Tuple: {
            Res acc;
            std::vector<TypePtr> comps;
            for (auto &k : e->kids) {
                auto c = check(k);
                comps.push_back(c.type);
                acc = split({&acc, &c}, e->pos);
            }
            acc.type = tensor(std::move(comps));
            return acc;
        }
        case ExprKind::AddTuple: {
            std::vector<std::pair<Res, ExprPtr>> alts;
            std::vector<TypePtr> comps;
            for (auto &k : e->kids) {
                alts.push_back({check(k), k});
                comps.push_back(alts.back().first.type);
            }
            auto r = branch(alts);
            r.type = with_type(std::move(comps));
            r.absorbs = false;
            return r;
        }
        case ExprKind::LetTuple: {
            auto bound = check(e->kids[0]);
            if (bound.type->kind != TypeKind::Tensor || bound.type->args.size() != e->binders.size())
                type_error(e->pos, "tuple pattern binds " + std::to_string(e->binders.size()) +
                                       " variables but the value has type " + render(bound.type));
            std::vector<int> bs;
            for (std::size_t i = 0; i < e->binders.size(); ++i) bs.push_back(bind(e->binders[i], bound.type->args[i]));
            auto body = check(e->kids[1]);
            for (auto it = bs.rbegin(); it != bs.rend(); ++it) close(*it, body, e->kids[1]);
            auto r = split({&bound, &body}, e->pos);
            r.type = body.type;
            return r;
        }
        case ExprKind::Proj: {
            auto r = check(e->kids[0]);
            if (r.type->kind != TypeKind::With)
                type_error(e->pos, "projection from non-additive type " + render(r.type));
            if (e->index >= r.type->args.size())
                type_error(e->pos, "projection index " + std::to_string(e->index + 1) + " out of range for " +
                                       render(r.type));
            r.type = r.type->args[e->index];
            return r;
        }
        case ExprKind::Inj: {
            auto r = check(e->kids[0]);
            if (!e->type || e->type->kind != TypeKind::Sum || e->index >= e->type->args.size())
                type_error(e->pos, "malformed injection");
            expect(e->type->args[e->index], r.type, e->kids[0]->pos);
            r.type = e->type;
            return r;
        }
        case ExprKind::Case: {
            auto s = check(e->kids[0]);
            std::size_t n = e->kids.size() - 1;
            if (s.type->kind != TypeKind::Sum || s.type->args.size() != n)
                type_error(e->kids[0]->pos, "case with " + std::to_string(n) + " arms on a value of type " +
                                                render(s.type));
            std::vector<std::pair<Res, ExprPtr>> alts;
            TypePtr result = e->type;
            for (std::size_t i = 0; i < n; ++i) {
                int b = bind(e->binders[i], s.type->args[i]);
                auto arm = check(e->kids[i + 1]);
                close(b, arm, e->kids[i + 1]);
                if (result)
                    expect(result, arm.type, e->kids[i + 1]->pos);
                else
                    result = arm.type;
                alts.push_back({arm, e->kids[i + 1]});
            }
            if (!result) type_error(e->pos, "empty case without a result type");
            auto arms = branch(alts);
            if (n == 0) arms.absorbs = true;
            auto r = split({&s, &arms}, e->pos);
            r.type = result;
            return r;
        }
        case ExprKind::Fold: {
            auto r = check(e->kids[0]);
            if (!e->type || e->type->kind != TypeKind::Mu) type_error(e->pos, "malformed fold");
            expect(unroll(e->type), r.type, e->kids[0]->pos);
            r.type = e->type;
            return r;
        }
        case ExprKind::Unfold: {
            auto bound = check(e->kids[0]);
            if (!e->type || e->type->kind != TypeKind::Mu) type_error(e->pos, "malformed unfold");
            expect(e->type, bound.type, e->kids[0]->pos);
            int b = bind(e->name, unroll(e->type));
            auto body = check(e->kids[1]);
            close(b, body, e->kids[1]);
            auto r = split({&bound, &body}, e->pos);
            r.type = body.type;
            return r;
        }
        }
        type_error(e->pos, "unhandled expression");
    }
};

void check_tag_bodies(const Program &p) {
    std::map<int, TypePtr> body;
    std::function<void(const TypePtr &)> go = [&](const TypePtr &t) {
        if (t->kind == TypeKind::Mu) {
            auto [it, fresh] = body.emplace(t->tag, t->args[0]);
            if (!fresh && !type_equal(it->second, t->args[0]))
                throw Error(Stage::Typecheck, {}, "two recursive types share tag " + render(t) + " but differ");
        }
        for (auto &a : t->args) go(a);
    };
    visit_types(p, go);
}

}  // namespace

Program infer_tags(Program p) {
    Inferencer inf(p);
    inf.run();
    auto &u = inf.unifier();
    map_types(p, [&](const TypePtr &t) { return u.zonk(t); });
    renumber_tags(p);
    if (!inf.eq_sites.empty()) {
        EqExpander ex(inf.eq_sites, u, all_names(p));
        for (auto &d : p.defs) d.body = ex.expand(d.body);
        p.main = ex.expand(p.main);
    }
    return p;
}

TypedProgram typecheck(Program p, UsageMode mode) {
    TypedProgram tp;
    auto n = static_cast<std::size_t>(number_nodes(p));
    check_tag_bodies(p);
    Checker c(p, mode, n);
    for (auto &d : p.defs) c.check_global(d);
    c.check_main(p.main);
    tp.nodes = c.take_nodes();
    tp.discards = c.take_discards();
    tp.program = std::move(p);
    tp.mode = mode;
    return tp;
}

std::map<int, std::string> tag_labels(const Program &p) {
    std::map<int, std::string> out;
    std::function<void(const TypePtr &)> go = [&](const TypePtr &t) {
        if (t->kind == TypeKind::Mu) out.emplace(t->tag, t->label);
        for (auto &a : t->args) go(a);
    };
    visit_types(p, go);
    return out;
}

}  // namespace perpl
