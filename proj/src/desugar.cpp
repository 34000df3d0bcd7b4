#include "perpl/desugar.hpp"

#include <functional>
#include <map>

namespace perpl {

namespace {

struct DataDecl {
    const SData *decl;
    bool recursive = false;
    std::shared_ptr<DataInfo> info;
};

class Desugarer {
public:
    explicit Desugarer(const SurfaceProgram &p) : src_(p) {}

    Program run() {
        for (auto &d : src_.data) {
            auto &dd = data_[d.name];
            dd.decl = &d;
            for (std::size_t j = 0; j < d.ctors.size(); ++j) ctor_of_[d.ctors[j].name] = {d.name, j};
        }
        for (auto &d : src_.defines) {
            if (ctor_of_.count(d.name) || d.name == "true" || d.name == "false")
                throw Error(Stage::Desugar, d.pos, "definition '" + d.name + "' clashes with a constructor");
            globals_.insert(d.name);
        }
        mark_recursive();
        for (auto &[name, dd] : data_) {
            auto info = std::make_shared<DataInfo>();
            info->name = name;
            info->recursive = dd.recursive;
            for (auto &c : dd.decl->ctors) {
                info->ctors.push_back(c.name);
                info->arities.push_back(c.args.size());
            }
            dd.info = info;
        }

        Program out;
        for (auto &d : src_.defines) {
            ExprPtr body = expr(d.body);
            TypePtr ty = d.ret ? type(d.ret) : meta();
            for (auto it = d.params.rbegin(); it != d.params.rend(); ++it) {
                TypePtr dom = it->type ? type(it->type) : meta();
                body = mk_lam(it->name, dom, body, d.pos);
                ty = arrow(dom, ty);
            }
            out.defs.push_back({d.name, ty, body, d.pos});
        }
        out.main = expr(src_.main);
        return out;
    }

private:
    const SurfaceProgram &src_;
    std::map<std::string, DataDecl> data_;
    std::map<std::string, std::pair<std::string, std::size_t>> ctor_of_;
    std::set<std::string> globals_;
    std::vector<std::string> locals_;
    int next_tag_ = 1;
    int next_meta_ = 1;
    int next_fresh_ = 0;

    TypePtr meta() { return meta_type(next_meta_++); }

    std::string fresh(const std::string &base) { return "_" + base + std::to_string(next_fresh_++); }

    // A datatype is recursive iff it lies on a cycle of the reference graph.
    void mark_recursive() {
        std::map<std::string, std::set<std::string>> refs;
        std::function<void(const STypePtr &, std::set<std::string> &)> names = [&](const STypePtr &t,
                                                                                   std::set<std::string> &out) {
            if (t->kind == STypeKind::Name) out.insert(t->name);
            for (auto &a : t->args) names(a, out);
        };
        for (auto &[name, dd] : data_)
            for (auto &c : dd.decl->ctors)
                for (auto &a : c.args) {
                    names(a, refs[name]);
                    check_type_names(a);
                }
        for (auto &[name, dd] : data_) {
            std::set<std::string> seen;
            std::vector<std::string> stack(refs[name].begin(), refs[name].end());
            while (!stack.empty()) {
                auto n = stack.back();
                stack.pop_back();
                if (!seen.insert(n).second) continue;
                for (auto &m : refs[n]) stack.push_back(m);
            }
            dd.recursive = seen.count(name) > 0;
        }
    }

    void check_type_names(const STypePtr &t) {
        if (t->kind == STypeKind::Name && !data_.count(t->name))
            throw Error(Stage::Desugar, t->pos, "unknown type '" + t->name + "'");
        for (auto &a : t->args) check_type_names(a);
    }

    TypePtr ctor_payload(const SCtor &c, std::vector<std::string> &env) {
        if (c.args.empty()) return unit_type();
        if (c.args.size() == 1) return type(c.args[0], env);
        std::vector<TypePtr> comps;
        for (auto &a : c.args) comps.push_back(type(a, env));
        return tensor(std::move(comps));
    }

    TypePtr datatype(const std::string &name, std::vector<std::string> &env) {
        for (auto &b : env)
            if (b == name) return type_var(name);
        auto &dd = data_.at(name);
        if (dd.recursive) env.push_back(name);
        std::vector<TypePtr> comps;
        for (auto &c : dd.decl->ctors) comps.push_back(ctor_payload(c, env));
        if (dd.recursive) env.pop_back();
        auto body = sum_type(std::move(comps), dd.info);
        if (!dd.recursive) return body;
        return mu_type(next_tag_++, name, body, name);
    }

    TypePtr type(const STypePtr &t) {
        std::vector<std::string> env;
        return type(t, env);
    }

    TypePtr type(const STypePtr &t, std::vector<std::string> &env) {
        switch (t->kind) {
        case STypeKind::Unit: return unit_type();
        case STypeKind::Bool: return bool_type();
        case STypeKind::Name:
            if (!data_.count(t->name)) throw Error(Stage::Desugar, t->pos, "unknown type '" + t->name + "'");
            return datatype(t->name, env);
        case STypeKind::Arrow: return arrow(type(t->args[0], env), type(t->args[1], env));
        default: {
            std::vector<TypePtr> comps;
            for (auto &a : t->args) comps.push_back(type(a, env));
            if (t->kind == STypeKind::Tensor) return tensor(std::move(comps));
            if (t->kind == STypeKind::With) return with_type(std::move(comps));
            return sum_type(std::move(comps));
        }
        }
    }

    bool is_local(const std::string &n) const {
        for (auto &l : locals_)
            if (l == n) return true;
        return false;
    }

    bool is_ctor(const std::string &n) const {
        if (is_local(n)) return false;
        return ctor_of_.count(n) || n == "true" || n == "false";
    }

    // Datatype instance for a constructor or case site: {μ or nominal sum, the sum to inject into}.
    std::pair<TypePtr, TypePtr> instance(const std::string &dname) {
        std::vector<std::string> env;
        auto t = datatype(dname, env);
        if (t->kind == TypeKind::Mu) return {t, unroll(t)};
        return {t, t};
    }

    ExprPtr construct(const std::string &ctor, std::vector<ExprPtr> args, SourcePos pos) {
        if (ctor == "true" || ctor == "false") {
            if (!args.empty()) throw Error(Stage::Desugar, pos, "constructor '" + ctor + "' takes no arguments");
            return mk_inj(ctor == "true" ? 0 : 1, bool_type(), mk_tuple({}, pos), pos);
        }
        auto [dname, j] = ctor_of_.at(ctor);
        auto &c = data_.at(dname).decl->ctors[j];
        if (args.size() != c.args.size())
            throw Error(Stage::Desugar, pos,
                        "constructor '" + ctor + "' expects " + std::to_string(c.args.size()) + " argument" +
                            (c.args.size() == 1 ? "" : "s") + ", got " + std::to_string(args.size()));
        ExprPtr payload = args.size() == 1 ? args[0] : mk_tuple(std::move(args), pos);
        auto [outer, sum] = instance(dname);
        ExprPtr e = mk_inj(j, sum, payload, pos);
        if (outer->kind == TypeKind::Mu) e = mk_fold(outer, e, pos);
        return e;
    }

    template <typename F>
    ExprPtr scoped(const std::vector<std::string> &names, F &&f) {
        for (auto &n : names) locals_.push_back(n);
        ExprPtr r = f();
        locals_.resize(locals_.size() - names.size());
        return r;
    }

    std::string binder_name(const std::string &n) { return n == "_" ? fresh("w") : n; }

    ExprPtr case_expr(const SExprPtr &e) {
        // Identify the datatype from the arm constructors.
        std::string dname;
        std::vector<std::string> ctor_names;
        for (auto &arm : e->arms) {
            std::string d;
            if (arm.ctor == "true" || arm.ctor == "false") {
                d = "Bool";
            } else if (ctor_of_.count(arm.ctor)) {
                d = ctor_of_.at(arm.ctor).first;
            } else {
                throw Error(Stage::Desugar, arm.pos, "unknown constructor '" + arm.ctor + "'");
            }
            if (dname.empty()) dname = d;
            if (d != dname)
                throw Error(Stage::Desugar, arm.pos,
                            "constructor '" + arm.ctor + "' belongs to " + d + ", not " + dname);
        }
        if (dname == "Bool") {
            ctor_names = {"true", "false"};
        } else {
            ctor_names = data_.at(dname).info->ctors;
        }
        std::vector<const SArm *> by_ctor(ctor_names.size(), nullptr);
        for (auto &arm : e->arms) {
            std::size_t j = 0;
            while (ctor_names[j] != arm.ctor) ++j;
            if (by_ctor[j]) throw Error(Stage::Desugar, arm.pos, "duplicate arm for constructor '" + arm.ctor + "'");
            std::size_t arity = dname == "Bool" ? 0 : data_.at(dname).decl->ctors[j].args.size();
            if (arm.vars.size() != arity)
                throw Error(Stage::Desugar, arm.pos,
                            "pattern '" + arm.ctor + "' binds " + std::to_string(arm.vars.size()) +
                                " variables but the constructor has " + std::to_string(arity) + " fields");
            by_ctor[j] = &arm;
        }
        for (std::size_t j = 0; j < by_ctor.size(); ++j)
            if (!by_ctor[j])
                throw Error(Stage::Desugar, e->pos, "case is missing an arm for constructor '" + ctor_names[j] + "'");

        ExprPtr scrut = expr(e->kids[0]);
        std::vector<std::string> binders;
        std::vector<ExprPtr> arms;
        for (auto *arm : by_ctor) {
            std::vector<std::string> vars;
            for (auto &v : arm->vars) vars.push_back(binder_name(v));
            if (vars.size() == 1) {
                binders.push_back(vars[0]);
                arms.push_back(scoped(vars, [&] { return expr(arm->body); }));
                continue;
            }
            std::string p = fresh("p");
            binders.push_back(p);
            ExprPtr body = scoped(vars, [&] { return expr(arm->body); });
            arms.push_back(mk_lettuple(vars, mk_var(p, arm->pos), body, arm->pos));
        }
        if (dname == "Bool") return mk_case(scrut, binders, arms, nullptr, e->pos);
        auto [outer, sum] = instance(dname);
        if (outer->kind != TypeKind::Mu) {
            if (e->unfold)
                throw Error(Stage::Desugar, e->pos, "'case unfold' on non-recursive datatype " + dname);
            return mk_case(scrut, binders, arms, nullptr, e->pos);
        }
        std::string tmp = fresh("u");
        return mk_unfold(outer, tmp, scrut, mk_case(mk_var(tmp, e->pos), binders, arms, nullptr, e->pos), e->pos);
    }

    ExprPtr expr(const SExprPtr &e) {
        switch (e->kind) {
        case SExprKind::Var:
            if (is_ctor(e->name)) return construct(e->name, {}, e->pos);
            return mk_var(e->name, e->pos);
        case SExprKind::App: {
            std::vector<SExprPtr> spine;
            SExprPtr head = e;
            while (head->kind == SExprKind::App) {
                spine.push_back(head->kids[1]);
                head = head->kids[0];
            }
            if (head->kind == SExprKind::Var && is_ctor(head->name)) {
                std::vector<ExprPtr> args;
                for (auto it = spine.rbegin(); it != spine.rend(); ++it) args.push_back(expr(*it));
                return construct(head->name, std::move(args), head->pos);
            }
            return mk_app(expr(e->kids[0]), expr(e->kids[1]), e->pos);
        }
        case SExprKind::Lam: {
            TypePtr dom = e->type ? type(e->type) : meta();
            std::string x = binder_name(e->name);
            return mk_lam(x, dom, scoped({x}, [&] { return expr(e->kids[0]); }), e->pos);
        }
        case SExprKind::Amb: return mk_amb(expr(e->kids[0]), expr(e->kids[1]), e->pos);
        case SExprKind::Fail: return mk_fail(meta(), e->pos);
        case SExprKind::Factor: return mk_factor(e->weight, expr(e->kids[0]), e->pos);
        case SExprKind::Tuple:
        case SExprKind::AddTuple: {
            std::vector<ExprPtr> comps;
            for (auto &k : e->kids) comps.push_back(expr(k));
            return e->kind == SExprKind::Tuple ? mk_tuple(std::move(comps), e->pos)
                                               : mk_addtuple(std::move(comps), e->pos);
        }
        case SExprKind::Proj: return mk_proj(expr(e->kids[0]), e->index, e->pos);
        case SExprKind::Let: {
            TypePtr dom = e->type ? type(e->type) : meta();
            ExprPtr bound = expr(e->kids[0]);
            std::string x = binder_name(e->name);
            return mk_app(mk_lam(x, dom, scoped({x}, [&] { return expr(e->kids[1]); }), e->pos), bound, e->pos);
        }
        case SExprKind::LetTuple: {
            ExprPtr bound = expr(e->kids[0]);
            std::vector<std::string> xs;
            for (auto &b : e->binders) xs.push_back(binder_name(b));
            return mk_lettuple(xs, bound, scoped(xs, [&] { return expr(e->kids[1]); }), e->pos);
        }
        case SExprKind::If: return if_expr(expr(e->kids[0]), expr(e->kids[1]), expr(e->kids[2]), e->pos);
        case SExprKind::And:
            return if_expr(expr(e->kids[0]), expr(e->kids[1]), construct("false", {}, e->pos), e->pos);
        case SExprKind::Eq:
            return mk_app(mk_app(mk_var(eq_placeholder, e->pos), expr(e->kids[0]), e->pos), expr(e->kids[1]), e->pos);
        case SExprKind::Case: return case_expr(e);
        case SExprKind::Fold: {
            SExprPtr head = e->kids[0];
            while (head->kind == SExprKind::App) head = head->kids[0];
            if (head->kind != SExprKind::Var || !ctor_of_.count(head->name) ||
                !data_.at(ctor_of_.at(head->name).first).recursive)
                throw Error(Stage::Desugar, e->pos, "'fold' must be applied to a constructor of a recursive datatype");
            return expr(e->kids[0]);
        }
        }
        throw Error(Stage::Internal, e->pos, "unhandled surface form");
    }

    ExprPtr if_expr(ExprPtr c, ExprPtr a, ExprPtr b, SourcePos pos) {
        std::string u1 = fresh("u"), u2 = fresh("u");
        return mk_case(c, {u1, u2},
                       {mk_lettuple({}, mk_var(u1, pos), a, pos), mk_lettuple({}, mk_var(u2, pos), b, pos)}, nullptr,
                       pos);
    }
};

}  // namespace

Program desugar(const SurfaceProgram &p) { return Desugarer(p).run(); }

}  // namespace perpl
