#include "perpl/semantics.hpp"

#include "json.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace perpl {

namespace {

std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a >= domain_cap / b) return domain_cap;
    return a * b;
}

std::uint64_t add_sat(std::uint64_t a, std::uint64_t b) { return std::min(domain_cap, a + b); }

[[noreturn]] void not_finite(const TypePtr &t) {
    throw Error(Stage::Semantics, {}, "type " + render(t) + " has no finite denotation (residual recursive type)");
}

// Strides for mixed-radix numbering, last component fastest.
std::vector<std::uint64_t> strides(const std::vector<std::uint64_t> &sizes) {
    std::vector<std::uint64_t> s(sizes.size(), 1);
    for (std::size_t i = sizes.size(); i-- > 1;) s[i - 1] = mul_sat(s[i], sizes[i]);
    return s;
}

bool needs_parens(const std::string &s) {
    if (s.empty() || s.front() == '(' || s.front() == '{' || s.front() == '<') return false;
    return s.find(' ') != std::string::npos;
}

std::string atom(const std::string &s) { return needs_parens(s) ? "(" + s + ")" : s; }

}  // namespace

std::uint64_t domain_size(const TypePtr &t) {
    switch (t->kind) {
    case TypeKind::Arrow: return mul_sat(domain_size(t->args[0]), domain_size(t->args[1]));
    case TypeKind::Tensor: {
        std::uint64_t n = 1;
        for (auto &a : t->args) n = mul_sat(n, domain_size(a));
        return n;
    }
    case TypeKind::Sum:
    case TypeKind::With: {
        std::uint64_t n = 0;
        for (auto &a : t->args) n = add_sat(n, domain_size(a));
        return n;
    }
    default: not_finite(t);
    }
}

SemValue decode_value(const TypePtr &t, std::uint64_t index) {
    SemValue v;
    switch (t->kind) {
    case TypeKind::Arrow: {
        auto cod = domain_size(t->args[1]);
        v.items = {decode_value(t->args[0], index / cod), decode_value(t->args[1], index % cod)};
        return v;
    }
    case TypeKind::Tensor: {
        std::vector<std::uint64_t> sizes;
        for (auto &a : t->args) sizes.push_back(domain_size(a));
        auto st = strides(sizes);
        for (std::size_t i = 0; i < sizes.size(); ++i) v.items.push_back(decode_value(t->args[i], index / st[i] % sizes[i]));
        return v;
    }
    case TypeKind::Sum:
    case TypeKind::With: {
        v.kind = SemValue::Kind::Tagged;
        for (std::size_t i = 0; i < t->args.size(); ++i) {
            auto n = domain_size(t->args[i]);
            if (index < n) {
                v.index = i;
                v.items = {decode_value(t->args[i], index)};
                return v;
            }
            index -= n;
        }
        throw Error(Stage::Internal, {}, "value index out of range for " + render(t));
    }
    default: not_finite(t);
    }
}

std::uint64_t encode_value(const TypePtr &t, const SemValue &v) {
    switch (t->kind) {
    case TypeKind::Arrow:
        return encode_value(t->args[0], v.items.at(0)) * domain_size(t->args[1]) + encode_value(t->args[1], v.items.at(1));
    case TypeKind::Tensor: {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < t->args.size(); ++i)
            idx = idx * domain_size(t->args[i]) + encode_value(t->args[i], v.items.at(i));
        return idx;
    }
    case TypeKind::Sum:
    case TypeKind::With: {
        std::uint64_t off = 0;
        for (std::size_t i = 0; i < v.index; ++i) off += domain_size(t->args[i]);
        return off + encode_value(t->args.at(v.index), v.items.at(0));
    }
    default: not_finite(t);
    }
}

std::vector<SemValue> enumerate_domain(const TypePtr &t) {
    auto n = domain_size(t);
    if (n >= domain_cap) throw Error(Stage::Semantics, {}, "domain of " + render(t) + " is too large to enumerate");
    std::vector<SemValue> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(decode_value(t, i));
    return out;
}

std::string render_value(const TypePtr &t, const SemValue &v) {
    switch (t->kind) {
    case TypeKind::Arrow:
        return "{" + render_value(t->args[0], v.items.at(0)) + " => " + render_value(t->args[1], v.items.at(1)) + "}";
    case TypeKind::Tensor: {
        if (t->args.empty()) return "()";
        std::string s = "(";
        for (std::size_t i = 0; i < t->args.size(); ++i)
            s += (i ? ", " : "") + render_value(t->args[i], v.items.at(i));
        return s + ")";
    }
    case TypeKind::With:
        return "<." + std::to_string(v.index + 1) + " " + render_value(t->args.at(v.index), v.items.at(0)) + ">";
    case TypeKind::Sum: {
        auto &payload_t = t->args.at(v.index);
        auto &payload = v.items.at(0);
        if (!t->data && is_bool(t)) return v.index == 0 ? "true" : "false";
        if (!t->data || t->data->ctors.size() != t->args.size())
            return "in" + std::to_string(v.index + 1) + " " + atom(render_value(payload_t, payload));
        const auto &ctor = t->data->ctors[v.index];
        auto arity = t->data->arities[v.index];
        if (arity == 0) return ctor;
        if (arity == 1) return ctor + " " + atom(render_value(payload_t, payload));
        std::string s = ctor;
        for (std::size_t i = 0; i < payload_t->args.size(); ++i)
            s += " " + atom(render_value(payload_t->args[i], payload.items.at(i)));
        return s;
    }
    default: not_finite(t);
    }
}

std::uint32_t MSPE::coef_id(const Rational &raw) {
    Rational q = raw;
    q.canonicalize();
    for (std::size_t i = 0; i < coefs.size(); ++i)
        if (coefs[i] == q) return static_cast<std::uint32_t>(i);
    coefs.push_back(q);
    return static_cast<std::uint32_t>(coefs.size() - 1);
}

std::string MSPE::var_name(VarId v) const {
    auto it = std::upper_bound(blocks.begin(), blocks.end(), std::uint64_t{v},
                               [](std::uint64_t x, const Block &b) { return x < b.offset; });
    if (it == blocks.begin()) return "z" + std::to_string(v);
    const Block &b = *std::prev(it);
    std::uint64_t local = v - b.offset;
    if (!b.type) return b.label + std::to_string(local);
    std::uint64_t c = local / b.type_size, val = local % b.type_size;
    std::string s = b.label;
    if (!b.context.empty()) {
        std::vector<std::uint64_t> sizes;
        for (auto &[n, t] : b.context) sizes.push_back(domain_size(t));
        auto st = strides(sizes);
        std::vector<std::pair<std::string, std::string>> env;
        for (std::size_t i = 0; i < sizes.size(); ++i)
            env.push_back({b.context[i].first, render_value(b.context[i].second, c / st[i] % sizes[i])});
        std::sort(env.begin(), env.end());
        s += "{";
        for (std::size_t i = 0; i < env.size(); ++i) s += (i ? "," : "") + env[i].first + "=" + env[i].second;
        s += "}";
    }
    return s + ":" + render_value(b.type, val);
}

namespace {

// A factor of a monomial after constant folding.
struct Ref {
    enum { Zero, One, Var } kind;
    VarId var = 0;
};

class Compiler {
public:
    Compiler(const TypedProgram &tp, std::uint64_t max_vars) : tp_(tp), max_vars_(max_vars) {}

    MSPE run() {
        m_.coefs = {Rational(1)};
        collect();
        layout();
        m_.eqs.resize(total_);
        for (const auto &d : tp_.program.defs) global_eqs(d);
        for (const Expr *e : nodes_) node_eqs(*e);
        auto &main = tp_.program.main;
        auto &mb = m_.blocks[block_of_node_.at(static_cast<std::size_t>(main->id))];
        for (std::uint64_t v = 0; v < mb.type_size; ++v)
            m_.roots.push_back({render_value(mb.type, v), static_cast<VarId>(mb.offset + v)});
        return std::move(m_);
    }

private:
    struct ChildPlan {
        // For each context variable of the child: >= 0 parent context position, < 0 binder -(k+1).
        std::vector<int> source;
        std::vector<std::uint64_t> stride;
    };
    struct NodeData {
        std::vector<std::uint64_t> ctx_sizes, ctx_strides;
        std::vector<ChildPlan> kids;
    };

    const TypedProgram &tp_;
    std::uint64_t max_vars_;
    MSPE m_;
    std::vector<const Expr *> nodes_;
    std::vector<std::size_t> block_of_node_;
    std::map<std::string, std::size_t> block_of_global_;
    std::vector<NodeData> data_;
    std::uint64_t total_ = 0;

    void collect() {
        std::function<void(const Expr &)> walk = [&](const Expr &e) {
            nodes_.push_back(&e);
            for (auto &k : e.kids) walk(*k);
        };
        for (auto &d : tp_.program.defs) walk(*d.body);
        walk(*tp_.program.main);
    }

    void add_block(MSPE::Block b, const std::string &where, SourcePos pos) {
        b.offset = total_;
        std::uint64_t n = mul_sat(b.ctx_size, b.type_size);
        if (n >= domain_cap || total_ + n > max_vars_)
            throw BudgetExceeded(Stage::Semantics, pos,
                                 "MSPE variable budget of " + std::to_string(max_vars_) + " exceeded at " + where +
                                     " (|context| * |type| = " + (n >= domain_cap ? std::string("overflow") : std::to_string(n)) +
                                     ")");
        total_ += n;
        m_.blocks.push_back(std::move(b));
    }

    void layout() {
        for (auto &d : tp_.program.defs) {
            block_of_global_[d.name] = m_.blocks.size();
            MSPE::Block b;
            b.label = d.name;
            b.type = d.type;
            b.type_size = domain_size(d.type);
            add_block(std::move(b), "global " + d.name, d.pos);
        }
        std::size_t max_id = 0;
        for (auto *e : nodes_) max_id = std::max(max_id, static_cast<std::size_t>(e->id));
        block_of_node_.assign(max_id + 1, 0);
        data_.resize(max_id + 1);
        for (auto *e : nodes_) {
            if (e->kind == ExprKind::Fold || e->kind == ExprKind::Unfold)
                throw Error(Stage::Semantics, e->pos, "recursive type operation remains after elimination");
            auto &info = tp_.info(*e);
            auto &nd = data_[static_cast<std::size_t>(e->id)];
            MSPE::Block b;
            b.label = "n" + std::to_string(e->id);
            b.context = info.context;
            b.type = info.type;
            b.type_size = domain_size(info.type);
            for (auto &[n, t] : info.context) nd.ctx_sizes.push_back(domain_size(t));
            nd.ctx_strides = strides(nd.ctx_sizes);
            for (auto s : nd.ctx_sizes) b.ctx_size = mul_sat(b.ctx_size, s);
            block_of_node_[static_cast<std::size_t>(e->id)] = m_.blocks.size();
            add_block(std::move(b), "node " + std::to_string(e->id) + " (" + render(info.type) + ")", e->pos);
        }
        for (auto *e : nodes_) {
            auto &nd = data_[static_cast<std::size_t>(e->id)];
            auto &ctx = tp_.info(*e).context;
            for (std::size_t k = 0; k < e->kids.size(); ++k) {
                auto binders = binders_at(*e, k);
                auto &child_ctx = tp_.info(*e->kids[k]).context;
                ChildPlan plan;
                plan.stride = data_[static_cast<std::size_t>(e->kids[k]->id)].ctx_strides;
                for (auto &[name, t] : child_ctx) {
                    int src = 0;
                    bool found = false;
                    for (std::size_t b = binders.size(); b-- > 0;)
                        if (binders[b] == name) {
                            src = -static_cast<int>(b) - 1;
                            found = true;
                            break;
                        }
                    for (std::size_t p = ctx.size(); !found && p-- > 0;)
                        if (ctx[p].first == name) {
                            src = static_cast<int>(p);
                            found = true;
                        }
                    if (!found) throw Error(Stage::Internal, e->pos, "context of child does not match parent: " + name);
                    plan.source.push_back(src);
                }
                nd.kids.push_back(std::move(plan));
            }
        }
    }

    const MSPE::Block &block(const Expr &e) const { return m_.blocks[block_of_node_[static_cast<std::size_t>(e.id)]]; }

    std::uint64_t child_index(const Expr &e, std::size_t k, const std::vector<std::uint64_t> &vals,
                              const std::vector<std::uint64_t> &bvals) const {
        auto &plan = data_[static_cast<std::size_t>(e.id)].kids[k];
        std::uint64_t idx = 0;
        for (std::size_t j = 0; j < plan.source.size(); ++j) {
            int s = plan.source[j];
            idx += (s >= 0 ? vals[static_cast<std::size_t>(s)] : bvals[static_cast<std::size_t>(-s - 1)]) * plan.stride[j];
        }
        return idx;
    }

    Ref ref(const Expr &child, std::uint64_t cidx, std::uint64_t v) const {
        if (child.kind == ExprKind::Var) {
            auto &ctx = tp_.info(child).context;
            if (ctx.size() == 1 && ctx[0].first == child.name) return {v == cidx ? Ref::One : Ref::Zero};
            if (ctx.empty()) {
                auto &g = m_.blocks[block_of_global_.at(child.name)];
                return {Ref::Var, static_cast<VarId>(g.offset + v)};
            }
        }
        if (child.kind == ExprKind::Tuple && child.kids.empty()) return {Ref::One};
        auto &b = block(child);
        return {Ref::Var, static_cast<VarId>(b.offset + cidx * b.type_size + v)};
    }

    static void emit(std::vector<Monomial> &eq, std::uint32_t coef, std::initializer_list<Ref> refs) {
        Monomial mono;
        mono.coef = coef;
        for (auto &r : refs) {
            if (r.kind == Ref::Zero) return;
            if (r.kind == Ref::Var) mono.vars.push_back(r.var);
        }
        eq.push_back(std::move(mono));
    }

    void global_eqs(const Define &d) {
        auto &g = m_.blocks[block_of_global_.at(d.name)];
        for (std::uint64_t v = 0; v < g.type_size; ++v) emit(m_.eqs[g.offset + v], 0, {ref(*d.body, 0, v)});
    }

    void node_eqs(const Expr &e) {
        auto &b = block(e);
        auto &nd = data_[static_cast<std::size_t>(e.id)];
        std::vector<std::uint64_t> vals(nd.ctx_sizes.size());
        std::vector<std::uint64_t> bv;
        const auto ts = b.type_size;
        auto child_type = [&](std::size_t k) { return tp_.info(*e.kids[k]).type; };

        for (std::uint64_t c = 0; c < b.ctx_size; ++c) {
            for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = c / nd.ctx_strides[j] % nd.ctx_sizes[j];
            auto eq_at = [&](std::uint64_t v) -> std::vector<Monomial> & { return m_.eqs[b.offset + c * ts + v]; };
            switch (e.kind) {
            case ExprKind::Var: {
                auto &ctx = b.context;
                bool local = false;
                for (std::size_t j = 0; j < ctx.size(); ++j)
                    if (ctx[j].first == e.name) {
                        eq_at(vals[j]).push_back(Monomial{0, {}});
                        local = true;
                    }
                if (!local) {
                    auto &g = m_.blocks[block_of_global_.at(e.name)];
                    for (std::uint64_t v = 0; v < ts; ++v) emit(eq_at(v), 0, {{Ref::Var, static_cast<VarId>(g.offset + v)}});
                }
                break;
            }
            case ExprKind::Lam: {
                auto dom = domain_size(b.type->args[0]), cod = domain_size(b.type->args[1]);
                for (std::uint64_t a = 0; a < dom; ++a) {
                    bv = {a};
                    auto ci = child_index(e, 0, vals, bv);
                    for (std::uint64_t r = 0; r < cod; ++r) emit(eq_at(a * cod + r), 0, {ref(*e.kids[0], ci, r)});
                }
                break;
            }
            case ExprKind::App: {
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv), c1 = child_index(e, 1, vals, bv);
                auto dom = domain_size(child_type(1));
                for (std::uint64_t a = 0; a < dom; ++a) {
                    auto arg = ref(*e.kids[1], c1, a);
                    if (arg.kind == Ref::Zero) continue;
                    for (std::uint64_t v = 0; v < ts; ++v) emit(eq_at(v), 0, {ref(*e.kids[0], c0, a * ts + v), arg});
                }
                break;
            }
            case ExprKind::Amb: {
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv), c1 = child_index(e, 1, vals, bv);
                for (std::uint64_t v = 0; v < ts; ++v) {
                    emit(eq_at(v), 0, {ref(*e.kids[0], c0, v)});
                    emit(eq_at(v), 0, {ref(*e.kids[1], c1, v)});
                }
                break;
            }
            case ExprKind::Fail: break;
            case ExprKind::Factor: {
                if (e.weight == 0) break;
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv);
                auto w = m_.coef_id(e.weight);
                for (std::uint64_t v = 0; v < ts; ++v) emit(eq_at(v), w, {ref(*e.kids[0], c0, v)});
                break;
            }
            case ExprKind::Tuple: {
                bv.clear();
                std::vector<std::uint64_t> ci, sizes;
                for (std::size_t k = 0; k < e.kids.size(); ++k) {
                    ci.push_back(child_index(e, k, vals, bv));
                    sizes.push_back(domain_size(child_type(k)));
                }
                auto st = strides(sizes);
                for (std::uint64_t v = 0; v < ts; ++v) {
                    Monomial mono;
                    bool zero = false;
                    for (std::size_t k = 0; k < e.kids.size() && !zero; ++k) {
                        auto r = ref(*e.kids[k], ci[k], v / st[k] % sizes[k]);
                        if (r.kind == Ref::Zero) zero = true;
                        else if (r.kind == Ref::Var) mono.vars.push_back(r.var);
                    }
                    if (!zero) eq_at(v).push_back(std::move(mono));
                }
                break;
            }
            case ExprKind::AddTuple: {
                bv.clear();
                std::uint64_t off = 0;
                for (std::size_t k = 0; k < e.kids.size(); ++k) {
                    auto ck = child_index(e, k, vals, bv);
                    auto n = domain_size(child_type(k));
                    for (std::uint64_t v = 0; v < n; ++v) emit(eq_at(off + v), 0, {ref(*e.kids[k], ck, v)});
                    off += n;
                }
                break;
            }
            case ExprKind::LetTuple: {
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv);
                auto bt = child_type(0);
                std::vector<std::uint64_t> sizes;
                for (auto &a : bt->args) sizes.push_back(domain_size(a));
                auto st = strides(sizes);
                auto n = domain_size(bt);
                bv.assign(sizes.size(), 0);
                for (std::uint64_t t = 0; t < n; ++t) {
                    auto bound = ref(*e.kids[0], c0, t);
                    if (bound.kind == Ref::Zero) continue;
                    for (std::size_t j = 0; j < sizes.size(); ++j) bv[j] = t / st[j] % sizes[j];
                    auto c1 = child_index(e, 1, vals, bv);
                    for (std::uint64_t v = 0; v < ts; ++v) emit(eq_at(v), 0, {bound, ref(*e.kids[1], c1, v)});
                }
                break;
            }
            case ExprKind::Proj: {
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv);
                auto wt = child_type(0);
                std::uint64_t off = 0;
                for (std::size_t i = 0; i < e.index; ++i) off += domain_size(wt->args[i]);
                for (std::uint64_t v = 0; v < ts; ++v) emit(eq_at(v), 0, {ref(*e.kids[0], c0, off + v)});
                break;
            }
            case ExprKind::Inj: {
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv);
                std::uint64_t off = 0;
                for (std::size_t i = 0; i < e.index; ++i) off += domain_size(b.type->args[i]);
                auto n = domain_size(b.type->args[e.index]);
                for (std::uint64_t v = 0; v < n; ++v) emit(eq_at(off + v), 0, {ref(*e.kids[0], c0, v)});
                break;
            }
            case ExprKind::Case: {
                bv.clear();
                auto c0 = child_index(e, 0, vals, bv);
                auto st = child_type(0);
                std::uint64_t off = 0;
                for (std::size_t i = 0; i + 1 < e.kids.size(); ++i) {
                    auto n = domain_size(st->args[i]);
                    for (std::uint64_t a = 0; a < n; ++a) {
                        auto scrut = ref(*e.kids[0], c0, off + a);
                        if (scrut.kind == Ref::Zero) continue;
                        bv = {a};
                        auto ca = child_index(e, i + 1, vals, bv);
                        for (std::uint64_t v = 0; v < ts; ++v) emit(eq_at(v), 0, {scrut, ref(*e.kids[i + 1], ca, v)});
                    }
                    off += n;
                }
                break;
            }
            case ExprKind::Fold:
            case ExprKind::Unfold:
                throw Error(Stage::Semantics, e.pos, "recursive type operation remains after elimination");
            }
        }
    }
};

}  // namespace

MSPE compile_mspe(const TypedProgram &p, std::uint64_t max_vars) {
    max_vars = std::min<std::uint64_t>(max_vars, 0xffffffffu);
    return Compiler(p, max_vars).run();
}

std::uint64_t count_expr_vars(const TypedProgram &p) {
    std::uint64_t n = 0;
    for (auto &info : p.nodes) {
        if (!info.type) continue;
        std::uint64_t c = domain_size(info.type);
        for (auto &[name, t] : info.context) c = mul_sat(c, domain_size(t));
        n = add_sat(n, c);
    }
    return n;
}

MSPE make_mspe(std::size_t nvars, const std::vector<std::vector<std::pair<Rational, std::vector<VarId>>>> &eqs) {
    MSPE m;
    m.coefs = {Rational(1)};
    m.eqs.resize(nvars);
    MSPE::Block b;
    b.label = "z";
    b.type_size = nvars;
    m.blocks.push_back(b);
    for (std::size_t i = 0; i < eqs.size() && i < nvars; ++i)
        for (auto &[q, vs] : eqs[i]) {
            if (q == 0) continue;
            m.eqs[i].push_back(Monomial{m.coef_id(q), vs});
        }
    return m;
}

std::string mspe_to_text(const MSPE &m) {
    std::ostringstream os;
    for (std::size_t i = 0; i < m.size(); ++i) os << "# z" << i << " = " << m.var_name(static_cast<VarId>(i)) << "\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << "z" << i << " =";
        if (m.eqs[i].empty()) os << " 0";
        for (std::size_t k = 0; k < m.eqs[i].size(); ++k) {
            auto &mono = m.eqs[i][k];
            os << (k ? " + " : " ");
            bool one = m.coefs[mono.coef] == 1;
            if (!one || mono.vars.empty()) os << to_string(m.coefs[mono.coef]);
            for (std::size_t j = 0; j < mono.vars.size(); ++j) os << ((j || !one) ? "*" : "") << "z" << mono.vars[j];
        }
        os << "\n";
    }
    for (auto &r : m.roots) os << "root " << r.value << " = z" << r.var << "\n";
    return os.str();
}

std::string mspe_to_json(const MSPE &m) {
    nlohmann::json j;
    j["vars"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i) j["vars"].push_back(m.var_name(static_cast<VarId>(i)));
    j["eqs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        nlohmann::json monos = nlohmann::json::array();
        for (auto &mono : m.eqs[i]) monos.push_back({{"coef", to_string(m.coefs[mono.coef])}, {"vars", mono.vars}});
        j["eqs"].push_back({{"lhs", i}, {"monomials", monos}});
    }
    j["roots"] = nlohmann::json::array();
    for (auto &r : m.roots) j["roots"].push_back({{"value", r.value}, {"var", r.var}});
    return j.dump();
}

}  // namespace perpl
