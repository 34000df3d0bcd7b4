#include "perpl/solver.hpp"

#include "perpl/scc.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace perpl {

const char *scc_class_name(SccClass c) {
    switch (c) {
    case SccClass::Constant: return "constant";
    case SccClass::Linear: return "linear";
    case SccClass::Nonlinear: return "nonlinear";
    }
    return "?";
}

double Distribution::weight(const std::string &value) const {
    for (auto &[v, w] : support)
        if (v == value) return to_double(w.value);
    return 0;
}

namespace {

using Quad = __float128;

template <class T>
T from_rational(const Rational &q);

template <>
Rational from_rational<Rational>(const Rational &q) {
    return q;
}

// Two doubles carry ~106 bits, enough that rounding of coefficients stays far below tolerances.
template <>
Quad from_rational<Quad>(const Rational &q) {
    mpf_class f(q, 160);
    double hi = f.get_d();
    f -= hi;
    return static_cast<Quad>(hi) + static_cast<Quad>(f.get_d());
}

std::string show(const ExtReal<Rational> &x) { return to_string(x); }
std::string show(const ExtReal<Quad> &x) {
    if (x.inf) return "inf";
    std::ostringstream os;
    os.precision(17);
    os << static_cast<double>(x.v);
    return os.str();
}

double change(const ExtReal<Rational> &from, const ExtReal<Rational> &to) {
    if (to.inf) return from.inf ? 0 : HUGE_VAL;
    return std::fabs(Rational(to.v - from.v).get_d());
}
double change(const ExtReal<Quad> &from, const ExtReal<Quad> &to) {
    if (to.inf) return from.inf ? 0 : HUGE_VAL;
    return std::fabs(static_cast<double>(to.v - from.v));
}

std::size_t bits(const ExtReal<Rational> &x) {
    if (x.inf) return 0;
    return std::max(mpz_sizeinbase(x.v.get_num_mpz_t(), 2), mpz_sizeinbase(x.v.get_den_mpz_t(), 2));
}
std::size_t bits(const ExtReal<Quad> &) { return 0; }

// Rounding noise in P(z) − z would otherwise keep a converged Newton run moving.
ExtReal<Rational> denoise(const ExtReal<Rational> &d, const ExtReal<Rational> &) { return d; }
ExtReal<Quad> denoise(const ExtReal<Quad> &d, const ExtReal<Quad> &scale) {
    if (d.inf || scale.inf) return d;
    Quad s = scale.v > 1 ? scale.v : Quad(1);
    if (d.v <= s * Quad(1e-30)) return ExtReal<Quad>(Quad(0));
    return d;
}

// MSPE after pruning and inlining, coefficients as rationals.
struct WorkMono {
    Rational coef;
    std::vector<VarId> vars;
};

struct Alias {
    bool resolved = false;
    Rational coef;
    VarId var = 0;
    std::size_t power = 0;  // value = coef * z_var^power
};

struct Prepared {
    std::vector<bool> zero;
    std::vector<bool> alias;
    std::vector<Alias> res;
    std::vector<std::vector<WorkMono>> eqs;  // for live, non-alias variables
};

Prepared prepare(const MSPE &m, SolverReport &report) {
    const std::size_t n = m.size();
    Prepared p;

    // Support fixpoint: which variables can be nonzero at all.
    std::vector<bool> nonzero(n, false);
    std::vector<std::vector<std::pair<VarId, std::uint32_t>>> occ(n);
    std::vector<std::vector<std::uint32_t>> missing(n);
    std::vector<VarId> queue;
    for (std::size_t i = 0; i < n; ++i) {
        missing[i].resize(m.eqs[i].size());
        for (std::size_t k = 0; k < m.eqs[i].size(); ++k) {
            auto vs = m.eqs[i][k].vars;
            std::sort(vs.begin(), vs.end());
            vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
            missing[i][k] = static_cast<std::uint32_t>(vs.size());
            for (auto v : vs) occ[v].push_back({static_cast<VarId>(i), static_cast<std::uint32_t>(k)});
            if (vs.empty() && !nonzero[i]) {
                nonzero[i] = true;
                queue.push_back(static_cast<VarId>(i));
            }
        }
    }
    while (!queue.empty()) {
        VarId j = queue.back();
        queue.pop_back();
        for (auto [i, k] : occ[j])
            if (--missing[i][k] == 0 && !nonzero[i]) {
                nonzero[i] = true;
                queue.push_back(i);
            }
    }
    occ.clear();
    occ.shrink_to_fit();

    p.zero.assign(n, false);
    p.alias.assign(n, false);
    p.res.resize(n);
    p.eqs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!nonzero[i]) {
            p.zero[i] = true;
            ++report.pruned;
            continue;
        }
        for (std::size_t k = 0; k < m.eqs[i].size(); ++k)
            if (missing[i][k] == 0) p.eqs[i].push_back({m.coefs[m.eqs[i][k].coef], m.eqs[i][k].vars});
        if (p.eqs[i].size() == 1) {
            auto &vs = p.eqs[i][0].vars;
            bool one = std::all_of(vs.begin(), vs.end(), [&](VarId v) { return v == vs.front(); });
            if (one && (vs.empty() || vs.front() != i)) {
                p.alias[i] = true;
                ++report.inlined;
            }
        }
    }

    // Resolve alias chains down to a non-alias variable (or a constant).
    for (std::size_t i = 0; i < n; ++i) {
        if (!p.alias[i] || p.res[i].resolved) continue;
        std::vector<VarId> chain{static_cast<VarId>(i)};
        while (true) {
            auto &vs = p.eqs[chain.back()][0].vars;
            if (vs.empty() || !p.alias[vs.front()] || p.res[vs.front()].resolved) break;
            chain.push_back(vs.front());
        }
        for (std::size_t c = chain.size(); c-- > 0;) {
            VarId a = chain[c];
            auto &mono = p.eqs[a][0];
            Alias r;
            r.resolved = true;
            r.coef = mono.coef;
            if (!mono.vars.empty()) {
                VarId t = mono.vars.front();
                std::size_t k = mono.vars.size();
                if (p.alias[t]) {
                    auto &rt = p.res[t];
                    Rational pw = 1;
                    for (std::size_t e = 0; e < k; ++e) pw *= rt.coef;
                    r.coef *= pw;
                    r.var = rt.var;
                    r.power = rt.power * k;
                } else {
                    r.var = t;
                    r.power = k;
                }
            }
            p.res[a] = std::move(r);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (p.zero[i] || p.alias[i]) {
            p.eqs[i].clear();
            continue;
        }
        for (auto &mono : p.eqs[i]) {
            std::vector<VarId> out;
            for (auto v : mono.vars) {
                if (!p.alias[v]) {
                    out.push_back(v);
                    continue;
                }
                auto &r = p.res[v];
                mono.coef *= r.coef;
                for (std::size_t e = 0; e < r.power; ++e) out.push_back(r.var);
            }
            mono.vars = std::move(out);
        }
    }
    return p;
}

template <class T>
class Core {
public:
    using X = ExtReal<T>;

    Core(const Prepared &p, const SolverConfig &cfg, SolverReport &report) : p_(p), cfg_(cfg), report_(report) {}

    std::vector<X> run() {
        const std::size_t n = p_.eqs.size();
        val_.assign(n, X(T(0)));
        std::vector<std::vector<VarId>> adj(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (p_.zero[i] || p_.alias[i]) continue;
            for (auto &mono : p_.eqs[i])
                for (auto v : mono.vars) adj[i].push_back(v);
            std::sort(adj[i].begin(), adj[i].end());
            adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
        }
        pos_.assign(n, -1);
        for (auto &comp : tarjan_scc(adj)) {
            VarId first = comp.front();
            if (p_.zero[first] || p_.alias[first]) continue;
            solve_scc(comp);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!p_.alias[i]) continue;
            auto &r = p_.res[i];
            X x(from_rational<T>(r.coef));
            for (std::size_t e = 0; e < r.power; ++e) x = x * val_[r.var];
            val_[i] = x;
        }
        return std::move(val_);
    }

private:
    struct LocalMono {
        X coef;
        std::vector<std::uint32_t> vars;
    };

    const Prepared &p_;
    const SolverConfig &cfg_;
    SolverReport &report_;
    std::vector<X> val_;
    std::vector<int> pos_;

    void solve_scc(const std::vector<VarId> &comp) {
        const std::size_t k = comp.size();
        for (std::size_t i = 0; i < k; ++i) pos_[comp[i]] = static_cast<int>(i);
        std::vector<std::vector<LocalMono>> eqs(k);
        std::size_t degree = 0;
        for (std::size_t i = 0; i < k; ++i) {
            for (auto &mono : p_.eqs[comp[i]]) {
                LocalMono lm{X(from_rational<T>(mono.coef)), {}};
                for (auto v : mono.vars) {
                    if (pos_[v] >= 0) lm.vars.push_back(static_cast<std::uint32_t>(pos_[v]));
                    else lm.coef = lm.coef * val_[v];
                }
                if (lm.coef.is_zero()) continue;
                degree = std::max(degree, lm.vars.size());
                eqs[i].push_back(std::move(lm));
            }
        }
        SccReport rep;
        rep.size = k;
        rep.vars = comp;
        std::vector<X> z;
        if (degree == 0) {
            rep.cls = SccClass::Constant;
            z.assign(k, X(T(0)));
            for (std::size_t i = 0; i < k; ++i)
                for (auto &lm : eqs[i]) z[i] = z[i] + lm.coef;
        } else if (degree == 1) {
            rep.cls = SccClass::Linear;
            z = linear(eqs);
        } else {
            rep.cls = SccClass::Nonlinear;
            z = newton(eqs, rep);
        }
        rep.residual = residual(eqs, z);
        for (std::size_t i = 0; i < k; ++i) {
            val_[comp[i]] = z[i];
            if (z[i].inf) report_.reached_infinity = true;
            pos_[comp[i]] = -1;
        }
        report_.converged = report_.converged && rep.converged;
        report_.newton_iterations += rep.iterations;
        report_.sccs.push_back(std::move(rep));
    }

    std::vector<X> linear(const std::vector<std::vector<LocalMono>> &eqs) {
        const std::size_t k = eqs.size();
        ExtMatrix<T> a(k, std::vector<X>(k, X(T(0))));
        std::vector<X> b(k, X(T(0)));
        for (std::size_t i = 0; i < k; ++i)
            for (auto &lm : eqs[i]) {
                if (lm.vars.empty()) b[i] = b[i] + lm.coef;
                else a[i][lm.vars[0]] = a[i][lm.vars[0]] + lm.coef;
            }
        return mul(matrix_star(std::move(a)), b);
    }

    static std::vector<X> mul(const ExtMatrix<T> &s, const std::vector<X> &b) {
        std::vector<X> x(b.size(), X(T(0)));
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                if (!b[j].is_zero() && !s[i][j].is_zero()) x[i] = x[i] + s[i][j] * b[j];
        return x;
    }

    static std::vector<X> eval(const std::vector<std::vector<LocalMono>> &eqs, const std::vector<X> &z) {
        std::vector<X> out(eqs.size(), X(T(0)));
        for (std::size_t i = 0; i < eqs.size(); ++i)
            for (auto &lm : eqs[i]) {
                X t = lm.coef;
                for (auto v : lm.vars) t = t * z[v];
                out[i] = out[i] + t;
            }
        return out;
    }

    static double residual(const std::vector<std::vector<LocalMono>> &eqs, const std::vector<X> &z) {
        auto pz = eval(eqs, z);
        double r = 0;
        for (std::size_t i = 0; i < z.size(); ++i) r = std::max({r, to_double(monus(pz[i], z[i])), to_double(monus(z[i], pz[i]))});
        return r;
    }

    std::vector<X> newton(const std::vector<std::vector<LocalMono>> &eqs, SccReport &rep) {
        const std::size_t k = eqs.size();
        std::vector<X> z(k, X(T(0)));
        rep.converged = false;
        for (int it = 1; it <= cfg_.max_iters; ++it) {
            auto pz = eval(eqs, z);
            std::vector<X> delta(k);
            bool still = false;
            for (std::size_t i = 0; i < k; ++i) {
                delta[i] = denoise(monus(pz[i], z[i]), pz[i]);
                still = still || !delta[i].is_zero();
            }
            if (!still) {
                rep.converged = true;
                break;
            }
            ExtMatrix<T> jac(k, std::vector<X>(k, X(T(0))));
            for (std::size_t i = 0; i < k; ++i)
                for (auto &lm : eqs[i])
                    for (std::size_t a = 0; a < lm.vars.size(); ++a) {
                        if (a > 0 && std::find(lm.vars.begin(), lm.vars.begin() + static_cast<long>(a), lm.vars[a]) !=
                                         lm.vars.begin() + static_cast<long>(a))
                            continue;
                        // d/dz_v of coef·Π z: multiplicity times the product with one copy removed
                        std::size_t mult = static_cast<std::size_t>(std::count(lm.vars.begin(), lm.vars.end(), lm.vars[a]));
                        X t = lm.coef * X(T(static_cast<long>(mult)));
                        bool skipped = false;
                        for (auto v : lm.vars) {
                            if (v == lm.vars[a] && !skipped) {
                                skipped = true;
                                continue;
                            }
                            t = t * z[v];
                        }
                        jac[i][lm.vars[a]] = jac[i][lm.vars[a]] + t;
                    }
            auto upd = mul(matrix_star(std::move(jac)), delta);
            double step = 0;
            std::size_t size = 0;
            for (std::size_t i = 0; i < k; ++i) {
                X next = z[i] + upd[i];
                if (next < z[i]) rep.monotone = false;
                step = std::max(step, change(z[i], next));
                z[i] = next;
                size = std::max(size, bits(next));
            }
            rep.iterations = it;
            if (cfg_.record_iterates) {
                std::vector<std::string> row;
                for (auto &x : z) row.push_back(show(x));
                rep.iterates.push_back(std::move(row));
            }
            if (step <= cfg_.tol) {
                rep.converged = true;
                break;
            }
            if (size > cfg_.max_bits) break;
        }
        return z;
    }
};

}  // namespace

Solution solve(const MSPE &m, const SolverConfig &cfg) {
    Solution sol;
    auto prepared = prepare(m, sol.report);
    if (cfg.exact) {
        sol.exact_values = Core<Rational>(prepared, cfg, sol.report).run();
        for (auto &x : sol.exact_values) sol.values.push_back(x.inf ? ExtReal<double>::infinity() : ExtReal<double>(x.v.get_d()));
    } else {
        for (auto &x : Core<Quad>(prepared, cfg, sol.report).run())
            sol.values.push_back(x.inf ? ExtReal<double>::infinity() : ExtReal<double>(static_cast<double>(x.v)));
    }
    for (auto &r : m.roots) {
        Weight w;
        w.value = sol.values[r.var];
        if (cfg.exact) w.exact = sol.exact_values[r.var];
        if (w.value.is_zero() && !(w.exact && !w.exact->is_zero())) continue;
        sol.distribution.support.push_back({r.value, std::move(w)});
    }
    return sol;
}

std::string distribution_to_json(const Distribution &d) {
    nlohmann::json support = nlohmann::json::array();
    for (auto &[v, w] : d.support) {
        nlohmann::json e{{"value", v}};
        if (w.value.inf) e["weight"] = "inf";
        else e["weight"] = w.value.v;
        if (w.exact) e["exact"] = to_string(*w.exact);
        support.push_back(e);
    }
    return nlohmann::json{{"support", support}}.dump();
}

std::string report_to_json(const SolverReport &r) {
    nlohmann::json sccs = nlohmann::json::array();
    for (auto &s : r.sccs) {
        nlohmann::json e{{"size", s.size}, {"class", scc_class_name(s.cls)}, {"iterations", s.iterations},
                         {"converged", s.converged}};
        if (std::isinf(s.residual)) e["residual"] = "inf";
        else e["residual"] = s.residual;
        if (!s.iterates.empty()) e["iterates"] = s.iterates;
        sccs.push_back(e);
    }
    return nlohmann::json{{"sccs", sccs},
                          {"pruned", r.pruned},
                          {"inlined", r.inlined},
                          {"newton_iterations", r.newton_iterations},
                          {"converged", r.converged},
                          {"reached_infinity", r.reached_infinity}}
        .dump();
}

}  // namespace perpl
