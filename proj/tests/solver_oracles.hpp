#pragma once

#include "perpl/ext_real.hpp"
#include "perpl/semantics.hpp"

#include <random>
#include <vector>

namespace perpl::test {

using Poly = std::vector<std::pair<Rational, std::vector<VarId>>>;

inline Rational rat(long n, long d = 1) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

// Kleene iteration z <- P(z) from 0, the reference for least solutions.
inline std::vector<double> kleene(std::size_t n, const std::vector<Poly> &eqs, int steps) {
    std::vector<double> z(n, 0.0);
    for (int s = 0; s < steps; ++s) {
        std::vector<double> next(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (auto &[c, vs] : eqs[i]) {
                double t = c.get_d();
                for (auto v : vs) t *= z[v];
                next[i] += t;
            }
        z = next;
    }
    return z;
}

// Multiples of 1/8 in [0, 2], or infinity.
inline ExtReal<Rational> random_entry(std::mt19937 &rng) {
    int k = std::uniform_int_distribution<int>(0, 17)(rng);
    if (k == 17) return ExtReal<Rational>::infinity();
    return ExtReal<Rational>(rat(k, 8));
}

inline ExtMatrix<Rational> random_matrix(std::mt19937 &rng, std::size_t n) {
    ExtMatrix<Rational> a(n, std::vector<ExtReal<Rational>>(n));
    for (auto &row : a)
        for (auto &x : row) x = random_entry(rng);
    return a;
}

inline ExtMatrix<Rational> product(const ExtMatrix<Rational> &a, const ExtMatrix<Rational> &b) {
    std::size_t n = a.size();
    ExtMatrix<Rational> c(n, std::vector<ExtReal<Rational>>(n, ExtReal<Rational>(Rational(0))));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) c[i][j] = c[i][j] + a[i][k] * b[k][j];
    return c;
}

// A* = I + A A*, checked exactly.
inline bool star_fixpoint_law(const ExtMatrix<Rational> &a) {
    auto s = matrix_star(a);
    auto as = product(a, s);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if (!(s[i][j] == ExtReal<Rational>(Rational(i == j ? 1 : 0)) + as[i][j])) return false;
    return true;
}

// Up to quadratic monomials, scaled so that P(1) = 0.9 in every equation; the least
// solution is then below 1.
inline std::vector<Poly> random_mspe(std::mt19937 &rng, std::size_t n) {
    std::vector<Poly> eqs(n);
    std::uniform_int_distribution<int> nmono(1, 4), deg(0, 2), var(0, static_cast<int>(n) - 1), num(1, 9);
    for (auto &eq : eqs) {
        int m = nmono(rng);
        for (int k = 0; k < m; ++k) {
            std::vector<VarId> vs;
            int d = deg(rng);
            for (int j = 0; j < d; ++j) vs.push_back(static_cast<VarId>(var(rng)));
            eq.push_back({Rational(num(rng)), vs});
        }
        Rational total = 0;
        for (auto &[c, vs] : eq) total += c;
        for (auto &[c, vs] : eq) {
            c = c * rat(9, 10) / total;
            c.canonicalize();
        }
    }
    return eqs;
}

}  // namespace perpl::test
