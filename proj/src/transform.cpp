#include "perpl/transform.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace perpl {

namespace {

void preorder(const Program &p, const std::function<void(const ExprPtr &)> &f) {
    std::function<void(const ExprPtr &)> go = [&](const ExprPtr &e) {
        f(e);
        for (auto &k : e->kids) go(k);
    };
    for (auto &d : p.defs) go(d.body);
    go(p.main);
}

TypedProgram recheck(Program p, const char *what) {
    try {
        return typecheck(std::move(p), UsageMode::Linear);
    } catch (const Error &e) {
        throw Error(Stage::Internal, e.pos(), std::string(what) + " produced an ill-typed program: " + e.what());
    }
}

ExprPtr unit_value(SourcePos pos = {}) { return mk_tuple({}, pos); }

// `let () = a in b`, flattening trivial units.
ExprPtr seq(std::vector<ExprPtr> parts, SourcePos pos) {
    std::vector<ExprPtr> kept;
    for (auto &e : parts)
        if (!(e->kind == ExprKind::Tuple && e->kids.empty())) kept.push_back(e);
    if (kept.empty()) return unit_value(pos);
    ExprPtr acc = kept.back();
    for (std::size_t i = kept.size() - 1; i-- > 0;) acc = mk_lettuple({}, kept[i], acc, pos);
    return acc;
}

// "String[2]" -> "String_2"
std::string ident_of(const std::string &label) {
    std::string s;
    for (char c : label) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s;
}

// ---------------------------------------------------------------------------
// Linearize

class Linearizer {
public:
    Linearizer(const TypedProgram &tp) : tp_(tp), names_(all_names(tp.program)) {
        for (auto &s : tp.discards) {
            sites_[s.node] = s.vars;
            for (auto &v : s.vars) lmode_ |= contains_arrow_or_with(v.second);
        }
    }

    Program run() {
        Program out;
        for (auto &d : tp_.program.defs) out.defs.push_back({d.name, ty(d.type), expr(d.body), d.pos});
        out.main = expr(tp_.program.main);
        // Discard functions may request further ones while being generated.
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            auto mu = pending_[i];
            auto f = fresh("f"), u = fresh("u");
            auto body = mk_lam(f, ty(mu), mk_unfold(ty(mu), u, mk_var(f), discard(u, unroll(mu), {})));
            out.defs.push_back({discard_name_.at(mu->tag), arrow(ty(mu), unit_type()), body, {}});
        }
        return out;
    }

private:
    const TypedProgram &tp_;
    std::set<std::string> names_;
    std::map<int, Context> sites_;
    bool lmode_ = false;
    std::map<int, std::string> discard_name_;
    std::vector<TypePtr> pending_;

    std::string fresh(const std::string &base) { return fresh_name(base, names_); }

    TypePtr ty(const TypePtr &t) {
        if (!lmode_ || !t) return t;
        switch (t->kind) {
        case TypeKind::Arrow:
            return with_type({arrow(ty(t->args[0]), ty(t->args[1])), unit_type()});
        case TypeKind::With: {
            std::vector<TypePtr> cs;
            for (auto &c : t->args) cs.push_back(ty(c));
            return with_type({with_type(cs), unit_type()});
        }
        default: {
            if (t->args.empty()) return t;
            auto r = std::make_shared<Type>(*t);
            for (auto &a : r->args) a = ty(a);
            return r;
        }
        }
    }

    // Code of type Unit that consumes x : t (t is the type before translation).
    ExprPtr discard(const std::string &x, const TypePtr &t, SourcePos pos) {
        if (is_positive(t)) return unit_value(pos);
        switch (t->kind) {
        case TypeKind::Arrow:
        case TypeKind::With:
            return mk_proj(mk_var(x, pos), 1, pos);
        case TypeKind::Mu: {
            auto it = discard_name_.find(t->tag);
            if (it == discard_name_.end()) {
                it = discard_name_.emplace(t->tag, fresh("discard_" + ident_of(t->label))).first;
                pending_.push_back(t);
            }
            return mk_app(mk_var(it->second, pos), mk_var(x, pos), pos);
        }
        case TypeKind::Tensor: {
            std::vector<std::string> ys;
            std::vector<ExprPtr> parts;
            for (auto &c : t->args) {
                ys.push_back(fresh("d"));
                parts.push_back(discard(ys.back(), c, pos));
            }
            return mk_lettuple(ys, mk_var(x, pos), seq(parts, pos), pos);
        }
        case TypeKind::Sum: {
            std::vector<std::string> ys;
            std::vector<ExprPtr> arms;
            for (auto &c : t->args) {
                ys.push_back(fresh("d"));
                arms.push_back(discard(ys.back(), c, pos));
            }
            return mk_case(mk_var(x, pos), ys, arms, unit_type(), pos);
        }
        default:
            throw Error(Stage::Internal, pos, "cannot discard a value of type " + render(t));
        }
    }

    ExprPtr discard_context(const Context &ctx, SourcePos pos) {
        std::vector<ExprPtr> parts;
        for (auto &[x, t] : ctx)
            if (!is_positive(t)) parts.push_back(discard(x, t, pos));
        return seq(parts, pos);
    }

    ExprPtr expr(const ExprPtr &e) {
        auto r = std::make_shared<Expr>(*e);
        r->type = ty(e->type);
        for (auto &k : r->kids) k = expr(k);
        if (lmode_) {
            switch (e->kind) {
            case ExprKind::Lam:
            case ExprKind::AddTuple:
                r = mk_addtuple({r, discard_context(tp_.info(e).context, e->pos)}, e->pos);
                break;
            case ExprKind::App:
                r->kids[0] = mk_proj(r->kids[0], 0, e->pos);
                break;
            case ExprKind::Proj:
                r->kids[0] = mk_proj(r->kids[0], 0, e->pos);
                break;
            default:
                break;
            }
        }
        auto it = sites_.find(e->id);
        if (it != sites_.end()) {
            std::vector<ExprPtr> parts;
            for (auto &[x, t] : it->second) parts.push_back(discard(x, t, e->pos));
            parts.push_back(r);
            r = seq(parts, e->pos);
        }
        return r;
    }
};

// ---------------------------------------------------------------------------
// Site tables

std::vector<SiteVar> site_vars(const TypedProgram &tp, const ExprPtr &body, const std::string &exclude) {
    std::vector<SiteVar> out;
    auto &ctx = tp.info(body).context;
    for (auto &n : free_locals(body, tp.program)) {
        if (n == exclude) continue;
        for (auto &[x, t] : ctx)
            if (x == n) out.push_back({n, t});
    }
    return out;
}

TypePtr tuple_type(const std::vector<SiteVar> &vs) {
    if (vs.size() == 1) return vs[0].type;
    std::vector<TypePtr> ts;
    for (auto &v : vs) ts.push_back(v.type);
    return tensor(ts);
}

ExprPtr tuple_expr(const std::vector<SiteVar> &vs, SourcePos pos) {
    if (vs.size() == 1) return mk_var(vs[0].name, pos);
    std::vector<ExprPtr> es;
    for (auto &v : vs) es.push_back(mk_var(v.name, pos));
    return mk_tuple(es, pos);
}

// Binds the site variables from z : tuple_type(vs) around body. Returns {binder, wrapped body}.
std::pair<std::string, ExprPtr> untuple(const std::vector<SiteVar> &vs, ExprPtr body, std::set<std::string> &names,
                                        SourcePos pos) {
    if (vs.size() == 1) return {vs[0].name, body};
    auto z = fresh_name("z", names);
    std::vector<std::string> xs;
    for (auto &v : vs) xs.push_back(v.name);
    return {z, mk_lettuple(xs, mk_var(z, pos), body, pos)};
}

std::string site_text(const ExprPtr &e) {
    auto s = print_expr(e);
    if (s.size() > 60) s = s.substr(0, 57) + "...";
    return s;
}

std::string at(const ExprPtr &e) {
    return "line " + std::to_string(e->pos.line) + ":" + std::to_string(e->pos.col);
}

TypePtr mu_of(const TypedProgram &tp, int tag) {
    TypePtr found;
    std::function<void(const TypePtr &)> look = [&](const TypePtr &t) {
        if (found) return;
        if (t->kind == TypeKind::Mu && t->tag == tag) {
            found = t;
            return;
        }
        for (auto &a : t->args) look(a);
    };
    for (auto &d : tp.program.defs) look(d.type);
    preorder(tp.program, [&](const ExprPtr &e) {
        if (e->type) look(e->type);
    });
    for (auto &n : tp.nodes)
        if (n.type) look(n.type);
    if (!found) throw Error(Stage::Transform, {}, "no recursive type with tag " + std::to_string(tag));
    return found;
}

// Rewrites every type annotation and every fold/unfold of one tag.
class Rewriter {
public:
    Rewriter(int tag, TypePtr phi) : tag_(tag), phi_(std::move(phi)) {}
    virtual ~Rewriter() = default;

    TypePtr ty(const TypePtr &t) const { return t ? replace_tag(t, tag_, phi_) : t; }

    ExprPtr expr(const ExprPtr &e) {
        if ((e->kind == ExprKind::Fold || e->kind == ExprKind::Unfold) && e->type->tag == tag_)
            return e->kind == ExprKind::Fold ? fold(e) : unfold(e);
        auto r = std::make_shared<Expr>(*e);
        r->type = ty(e->type);
        for (auto &k : r->kids) k = expr(k);
        return r;
    }

    Program program(const Program &p) {
        Program out;
        for (auto &d : p.defs) out.defs.push_back({d.name, ty(d.type), expr(d.body), d.pos});
        out.main = expr(p.main);
        return out;
    }

protected:
    int tag_;
    TypePtr phi_;
    virtual ExprPtr fold(const ExprPtr &e) = 0;
    virtual ExprPtr unfold(const ExprPtr &e) = 0;
};

}  // namespace

TypedProgram linearize(const TypedProgram &p) {
    Linearizer lin(p);
    return recheck(gc_globals(lin.run()), "linearize");
}

Program gc_globals(Program p) {
    std::set<std::string> live;
    std::vector<const Define *> work;
    std::function<void(const ExprPtr &, std::vector<std::string> &)> go = [&](const ExprPtr &e,
                                                                               std::vector<std::string> &bound) {
        if (e->kind == ExprKind::Var) {
            for (auto &b : bound)
                if (b == e->name) return;
            if (auto *d = p.find(e->name); d && live.insert(e->name).second) work.push_back(d);
            return;
        }
        for (std::size_t k = 0; k < e->kids.size(); ++k) {
            auto bs = binders_at(*e, k);
            for (auto &b : bs) bound.push_back(b);
            go(e->kids[k], bound);
            bound.resize(bound.size() - bs.size());
        }
    };
    std::vector<std::string> bound;
    go(p.main, bound);
    while (!work.empty()) {
        auto *d = work.back();
        work.pop_back();
        go(d->body, bound);
    }
    std::vector<Define> kept;
    for (auto &d : p.defs)
        if (live.count(d.name)) kept.push_back(std::move(d));
    p.defs = std::move(kept);
    return p;
}

std::vector<FoldSite> fold_sites(const TypedProgram &p, int tag) {
    std::vector<FoldSite> out;
    preorder(p.program, [&](const ExprPtr &e) {
        if (e->kind == ExprKind::Fold && e->type->tag == tag) out.push_back({e, site_vars(p, e->kids[0], "")});
    });
    return out;
}

std::vector<UnfoldSite> unfold_sites(const TypedProgram &p, int tag) {
    std::vector<UnfoldSite> out;
    preorder(p.program, [&](const ExprPtr &e) {
        if (e->kind == ExprKind::Unfold && e->type->tag == tag)
            out.push_back({e, p.info(e->kids[1]).type, site_vars(p, e->kids[1], e->name)});
    });
    return out;
}

bool DRGraph::has_edge(int from, char label) const {
    for (auto &e : edges)
        if (e.from == from && e.label == label) return true;
    return false;
}

std::string DRGraph::dot() const {
    std::ostringstream os;
    os << "digraph DR {\n";
    for (int n : nodes) os << "  \"" << labels.at(n) << "\";\n";
    for (auto &e : edges)
        os << "  \"" << labels.at(e.from) << "\" -> \"" << labels.at(e.to) << "\" [label=\"" << e.label << "\"];\n";
    os << "}\n";
    return os.str();
}

DRGraph build_dr_graph(const TypedProgram &p) {
    DRGraph g;
    g.labels = tag_labels(p.program);
    for (auto &n : p.nodes)
        if (n.type) {
            std::set<int> tags;
            collect_tags(n.type, tags);
            for (int t : tags) g.labels.emplace(t, "?");
        }
    for (auto &[t, _] : g.labels) g.nodes.push_back(t);
    for (int t : g.nodes) {
        std::set<int> d, r;
        for (auto &s : fold_sites(p, t))
            for (auto &v : s.free) collect_tags(v.type, d);
        for (auto &s : unfold_sites(p, t)) {
            for (auto &v : s.free) collect_tags(v.type, r);
            collect_tags(s.scope_type, r);
        }
        for (int x : d) g.edges.push_back({t, 'D', x});
        for (int x : r) g.edges.push_back({t, 'R', x});
    }
    return g;
}

TypedProgram defunctionalize(const TypedProgram &tp, int tag) {
    auto mu = mu_of(tp, tag);
    auto sites = fold_sites(tp, tag);
    std::vector<TypePtr> comps;
    for (auto &s : sites) {
        for (auto &v : s.free)
            if (contains_tag(v.type, tag))
                throw Error(Stage::Transform, s.node->pos,
                            "cannot defunctionalize " + mu->label + ": fold site at " + at(s.node) + " (" +
                                site_text(s.node) + ") has free variable '" + v.name + "' of type " +
                                render(v.type));
        comps.push_back(tuple_type(s.free));
    }
    auto info = std::make_shared<DataInfo>();
    info->name = mu->label + "Folded";
    auto phi = sum_type(comps, info);

    std::map<const Expr *, std::size_t> index;
    for (std::size_t i = 0; i < sites.size(); ++i) index[sites[i].node.get()] = i;
    auto names = all_names(tp.program);
    auto u_name = fresh_name("u_" + ident_of(mu->label), names);

    struct D : Rewriter {
        D(int tag, TypePtr phi, std::map<const Expr *, std::size_t> &index, std::vector<FoldSite> &sites,
          std::string u)
            : Rewriter(tag, phi), index_(index), sites_(sites), u_(std::move(u)) {}
        std::map<const Expr *, std::size_t> &index_;
        std::vector<FoldSite> &sites_;
        std::string u_;
        ExprPtr fold(const ExprPtr &e) override {
            auto i = index_.at(e.get());
            return mk_inj(i, phi_, tuple_expr(sites_[i].free, e->pos), e->pos);
        }
        ExprPtr unfold(const ExprPtr &e) override {
            auto dom = ty(unroll(e->type));
            return mk_app(mk_lam(e->name, dom, expr(e->kids[1]), e->pos), mk_app(mk_var(u_, e->pos), expr(e->kids[0]), e->pos),
                          e->pos);
        }
    } d(tag, phi, index, sites, u_name);

    Program out = d.program(tp.program);
    auto result = d.ty(unroll(mu));
    auto x = fresh_name("x", names);
    std::vector<std::string> binders;
    std::vector<ExprPtr> arms;
    for (auto &s : sites) {
        auto [b, body] = untuple(s.free, d.expr(s.node->kids[0]), names, s.node->pos);
        binders.push_back(b);
        arms.push_back(body);
    }
    out.defs.push_back({u_name, arrow(phi, result), mk_lam(x, phi, mk_case(mk_var(x), binders, arms, result)), {}});
    return recheck(std::move(out), "defunctionalization");
}

TypedProgram refunctionalize(const TypedProgram &tp, int tag) {
    auto mu = mu_of(tp, tag);
    auto sites = unfold_sites(tp, tag);
    std::vector<TypePtr> comps;
    for (auto &s : sites) {
        for (auto &v : s.free)
            if (contains_tag(v.type, tag))
                throw Error(Stage::Transform, s.node->pos,
                            "cannot refunctionalize " + mu->label + ": unfold site at " + at(s.node) +
                                " has free variable '" + v.name + "' of type " + render(v.type));
        if (contains_tag(s.scope_type, tag))
            throw Error(Stage::Transform, s.node->pos,
                        "cannot refunctionalize " + mu->label + ": unfold site at " + at(s.node) +
                            " has result type " + render(s.scope_type));
        comps.push_back(arrow(tuple_type(s.free), s.scope_type));
    }
    auto phi = with_type(comps);

    std::map<const Expr *, std::size_t> index;
    for (std::size_t i = 0; i < sites.size(); ++i) index[sites[i].node.get()] = i;
    auto names = all_names(tp.program);
    auto base = ident_of(mu->label);
    auto f_name = fresh_name("f_" + base, names);
    auto canon = fresh_name("x_" + base, names);

    struct R : Rewriter {
        R(int tag, TypePtr phi, std::map<const Expr *, std::size_t> &index, std::vector<UnfoldSite> &sites,
          std::string f)
            : Rewriter(tag, phi), index_(index), sites_(sites), f_(std::move(f)) {}
        std::map<const Expr *, std::size_t> &index_;
        std::vector<UnfoldSite> &sites_;
        std::string f_;
        ExprPtr fold(const ExprPtr &e) override { return mk_app(mk_var(f_, e->pos), expr(e->kids[0]), e->pos); }
        ExprPtr unfold(const ExprPtr &e) override {
            auto i = index_.at(e.get());
            auto &fv = sites_[i].free;
            ExprPtr arg = fv.empty() ? mk_tuple({}, e->pos) : tuple_expr(fv, e->pos);
            return mk_app(mk_proj(expr(e->kids[0]), i, e->pos), arg, e->pos);
        }
    } r(tag, phi, index, sites, f_name);

    Program out = r.program(tp.program);
    std::vector<ExprPtr> lams;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        auto &s = sites[i];
        auto scope = r.expr(rename_free(s.node->kids[1], s.node->name, canon));
        if (s.free.empty()) {
            auto z = fresh_name("z", names);
            lams.push_back(mk_lam(z, unit_type(), mk_lettuple({}, mk_var(z), scope), s.node->pos));
            continue;
        }
        auto [b, body] = untuple(s.free, scope, names, s.node->pos);
        lams.push_back(mk_lam(b, tuple_type(s.free), body, s.node->pos));
    }
    auto dom = r.ty(unroll(mu));
    out.defs.push_back({f_name, arrow(dom, phi), mk_lam(canon, dom, mk_addtuple(lams)), {}});
    return recheck(std::move(out), "refunctionalization");
}

Elimination eliminate_recursive_types(const TypedProgram &p) {
    Elimination el;
    TypedProgram cur = recheck(gc_globals(clone(p.program)), "garbage collection");
    while (true) {
        auto g = build_dr_graph(cur);
        el.intermediates.push_back(clone(cur.program));
        if (g.nodes.empty()) break;
        el.trace += g.dot();
        int pick = -1;
        char how = 0;
        for (int t : g.nodes)
            if (!g.has_edge(t, 'D')) {
                pick = t;
                how = 'D';
                break;
            }
        if (pick < 0)
            for (int t : g.nodes)
                if (!g.has_edge(t, 'R')) {
                    pick = t;
                    how = 'R';
                    break;
                }
        if (pick < 0)
            throw NoDRSequence("no successful sequence of transformations; residual DR-graph:\n" + g.dot(), g.dot());
        el.steps.push_back({pick, g.labels.at(pick), how});
        el.trace += "// step " + std::to_string(el.steps.size()) + ": " + g.labels.at(pick) + ":" + how + "\n";
        auto next = how == 'D' ? defunctionalize(cur, pick) : refunctionalize(cur, pick);
        cur = recheck(gc_globals(std::move(next.program)), "garbage collection");
    }
    if (count_mu_nodes(cur.program) != 0)
        throw Error(Stage::Internal, {}, "recursive types remain after elimination");
    el.program = std::move(cur);
    return el;
}

}  // namespace perpl
