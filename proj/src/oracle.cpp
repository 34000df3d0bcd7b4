#include "perpl/oracle.hpp"

#include "perpl/semantics.hpp"

#include "json.hpp"

#include <unordered_map>

namespace perpl {

bool is_value(const ExprPtr &e) {
    switch (e->kind) {
    case ExprKind::Lam:
    case ExprKind::AddTuple: return true;
    case ExprKind::Tuple:
        for (auto &k : e->kids)
            if (!is_value(k)) return false;
        return true;
    case ExprKind::Inj:
    case ExprKind::Fold: return is_value(e->kids[0]);
    default: return false;
    }
}

namespace {

// Values substituted are closed, so there is no capture to avoid.
ExprPtr subst(const ExprPtr &e, const std::string &x, const ExprPtr &v) {
    if (e->kind == ExprKind::Var) return e->name == x ? v : e;
    ExprPtr out;
    for (std::size_t k = 0; k < e->kids.size(); ++k) {
        auto bs = binders_at(*e, k);
        if (std::find(bs.begin(), bs.end(), x) != bs.end()) continue;
        auto nk = subst(e->kids[k], x, v);
        if (nk == e->kids[k]) continue;
        if (!out) out = std::make_shared<Expr>(*e);
        out->kids[k] = nk;
    }
    return out ? out : e;
}

struct Step {
    enum Kind { Value, Next, Split, Fail } kind = Value;
    ExprPtr a, b;
    Rational w = 1;

    Step() = default;
    Step(Kind k, ExprPtr x = nullptr, ExprPtr y = nullptr) : kind(k), a(std::move(x)), b(std::move(y)) {}
};

[[noreturn]] void stuck(const ExprPtr &e) {
    throw Error(Stage::Internal, e->pos, "oracle: stuck expression " + print_expr(e));
}

class Reducer {
public:
    explicit Reducer(const Program &p) {
        for (auto &d : p.defs) globals_[d.name] = d.body;
    }

    Step step(const ExprPtr &e) {
        switch (e->kind) {
        case ExprKind::Var: {
            auto it = globals_.find(e->name);
            if (it == globals_.end()) stuck(e);
            return {Step::Next, it->second};
        }
        case ExprKind::Lam:
        case ExprKind::AddTuple: return {};
        case ExprKind::Amb: return {Step::Split, e->kids[0], e->kids[1]};
        case ExprKind::Fail: return {Step::Fail};
        case ExprKind::Factor: {
            Step s{Step::Next, e->kids[0]};
            s.w = e->weight;
            return s;
        }
        case ExprKind::App:
            for (std::size_t k = 0; k < 2; ++k)
                if (!is_value(e->kids[k])) return inside(e, k);
            if (e->kids[0]->kind != ExprKind::Lam) stuck(e);
            return {Step::Next, subst(e->kids[0]->kids[0], e->kids[0]->name, e->kids[1])};
        case ExprKind::Tuple:
            for (std::size_t k = 0; k < e->kids.size(); ++k)
                if (!is_value(e->kids[k])) return inside(e, k);
            return {};
        case ExprKind::Inj:
        case ExprKind::Fold:
            if (!is_value(e->kids[0])) return inside(e, 0);
            return {};
        case ExprKind::LetTuple: {
            auto &t = e->kids[0];
            if (!is_value(t)) return inside(e, 0);
            if (t->kind != ExprKind::Tuple || t->kids.size() != e->binders.size()) stuck(e);
            ExprPtr body = e->kids[1];
            for (std::size_t i = 0; i < e->binders.size(); ++i) body = subst(body, e->binders[i], t->kids[i]);
            return {Step::Next, body};
        }
        case ExprKind::Proj: {
            auto &t = e->kids[0];
            if (!is_value(t)) return inside(e, 0);
            if (t->kind != ExprKind::AddTuple || e->index >= t->kids.size()) stuck(e);
            return {Step::Next, t->kids[e->index]};
        }
        case ExprKind::Case: {
            auto &s = e->kids[0];
            if (!is_value(s)) return inside(e, 0);
            if (s->kind != ExprKind::Inj || s->index + 1 >= e->kids.size()) stuck(e);
            return {Step::Next, subst(e->kids[s->index + 1], e->binders[s->index], s->kids[0])};
        }
        case ExprKind::Unfold: {
            auto &s = e->kids[0];
            if (!is_value(s)) return inside(e, 0);
            if (s->kind != ExprKind::Fold) stuck(e);
            return {Step::Next, subst(e->kids[1], e->name, s->kids[0])};
        }
        }
        stuck(e);
    }

private:
    std::unordered_map<std::string, ExprPtr> globals_;

    static ExprPtr with_kid(const ExprPtr &e, std::size_t k, ExprPtr kid) {
        auto out = std::make_shared<Expr>(*e);
        out->kids[k] = std::move(kid);
        return out;
    }

    Step inside(const ExprPtr &e, std::size_t k) {
        Step s = step(e->kids[k]);
        if (s.kind == Step::Next || s.kind == Step::Split) {
            s.a = with_kid(e, k, s.a);
            if (s.kind == Step::Split) s.b = with_kid(e, k, s.b);
        }
        return s;
    }
};

SemValue to_sem(const TypePtr &t, const ExprPtr &v) {
    SemValue s;
    switch (t->kind) {
    case TypeKind::Tensor:
        if (v->kind != ExprKind::Tuple || v->kids.size() != t->args.size()) break;
        for (std::size_t i = 0; i < t->args.size(); ++i) s.items.push_back(to_sem(t->args[i], v->kids[i]));
        return s;
    case TypeKind::Sum:
        if (v->kind != ExprKind::Inj) break;
        s.kind = SemValue::Kind::Tagged;
        s.index = v->index;
        s.items = {to_sem(t->args.at(v->index), v->kids[0])};
        return s;
    default: break;
    }
    throw Error(Stage::Internal, v->pos, "oracle: value does not match type " + render(t));
}

}  // namespace

std::string render_syntactic(const TypePtr &t, const ExprPtr &v) {
    if (is_positive(t)) return render_value(t, to_sem(t, v));
    return print_expr(v);
}

ExprDistribution reduce_step(const Program &globals, const ExprDistribution &d) {
    Reducer r(globals);
    ExprDistribution out;
    bool done = false;
    for (auto &[w, e] : d) {
        if (done || is_value(e)) {
            out.push_back({w, e});
            continue;
        }
        done = true;
        Step s = r.step(e);
        switch (s.kind) {
        case Step::Next: out.push_back({w * s.w, s.a}); break;
        case Step::Split:
            out.push_back({w, s.a});
            out.push_back({w, s.b});
            break;
        case Step::Fail: break;
        case Step::Value: out.push_back({w, e}); break;
        }
    }
    return out;
}

Rational OracleResult::weight(const std::string &value) const {
    auto it = lower.find(value);
    return it == lower.end() ? Rational(0) : it->second;
}

Rational OracleResult::mass() const {
    Rational m = 0;
    for (auto &[v, w] : lower) m += w;
    return m;
}

OracleResult explore(const TypedProgram &p, const OracleConfig &cfg) {
    Reducer r(p.program);
    auto main_type = p.info(p.program.main).type;
    OracleResult res;

    struct State {
        ExprPtr e;
        Rational w;
        std::size_t steps = 0;
    };
    std::vector<State> level{{p.program.main, Rational(1), 0}};
    for (int depth = 0; !level.empty(); ++depth) {
        std::unordered_map<std::string, std::size_t> index;
        std::vector<State> next;
        auto push = [&](ExprPtr e, const Rational &w, std::size_t steps) {
            auto key = print_expr(e);
            auto [it, fresh] = index.try_emplace(key, next.size());
            if (fresh) next.push_back({std::move(e), w, steps});
            else {
                next[it->second].w += w;
                next[it->second].steps = std::max(next[it->second].steps, steps);
            }
        };
        for (auto &st : level) {
            ExprPtr e = st.e;
            Rational w = st.w;
            std::size_t steps = st.steps;
            while (true) {
                if (w == 0) break;
                if (steps >= cfg.max_steps) {
                    res.residual += w;
                    break;
                }
                Step s = r.step(e);
                ++steps;
                if (s.kind == Step::Value) {
                    res.lower[render_syntactic(main_type, e)] += w;
                    ++res.paths;
                    break;
                }
                if (s.kind == Step::Fail) {
                    ++res.paths;
                    break;
                }
                if (s.kind == Step::Next) {
                    e = s.a;
                    w *= s.w;
                    continue;
                }
                if (depth >= cfg.max_choices || res.truncated) {
                    res.residual += w;
                    break;
                }
                push(s.a, w, steps);
                push(s.b, w, steps);
                break;
            }
        }
        if (next.size() > cfg.max_states) {
            res.truncated = true;
            for (auto &st : next) res.residual += st.w;
            next.clear();
        }
        level = std::move(next);
    }
    return res;
}

std::string oracle_to_json(const OracleResult &r) {
    nlohmann::json support = nlohmann::json::array();
    for (auto &[v, w] : r.lower) support.push_back({{"value", v}, {"weight", w.get_d()}, {"exact", to_string(w)}});
    return nlohmann::json{{"support", support},
                          {"residual", r.residual.get_d()},
                          {"residual_exact", to_string(r.residual)},
                          {"truncated", r.truncated}}
        .dump();
}

}  // namespace perpl
