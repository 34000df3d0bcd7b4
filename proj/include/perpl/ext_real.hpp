#pragma once

#include "perpl/rational.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace perpl {

// A value in [0, ∞] over a finite carrier T.
template <class T>
struct ExtReal {
    T v{};
    bool inf = false;

    ExtReal() = default;
    ExtReal(T x) : v(std::move(x)) {}  // NOLINT: implicit on purpose

    static ExtReal infinity() {
        ExtReal r;
        r.inf = true;
        return r;
    }
    bool is_zero() const { return !inf && v == T(0); }
};

template <class T>
ExtReal<T> operator+(const ExtReal<T> &a, const ExtReal<T> &b) {
    if (a.inf || b.inf) return ExtReal<T>::infinity();
    return ExtReal<T>(a.v + b.v);
}

// 0·∞ = 0.
template <class T>
ExtReal<T> operator*(const ExtReal<T> &a, const ExtReal<T> &b) {
    if (a.is_zero() || b.is_zero()) return ExtReal<T>(T(0));
    if (a.inf || b.inf) return ExtReal<T>::infinity();
    return ExtReal<T>(a.v * b.v);
}

template <class T>
bool operator==(const ExtReal<T> &a, const ExtReal<T> &b) {
    return a.inf == b.inf && (a.inf || a.v == b.v);
}

template <class T>
bool operator<(const ExtReal<T> &a, const ExtReal<T> &b) {
    if (a.inf) return false;
    if (b.inf) return true;
    return a.v < b.v;
}

template <class T>
bool operator<=(const ExtReal<T> &a, const ExtReal<T> &b) {
    return !(b < a);
}

// Truncated subtraction; ∞ − ∞ = 0.
template <class T>
ExtReal<T> monus(const ExtReal<T> &a, const ExtReal<T> &b) {
    if (b.inf) return ExtReal<T>(T(0));
    if (a.inf) return a;
    if (a.v <= b.v) return ExtReal<T>(T(0));
    return ExtReal<T>(a.v - b.v);
}

// Σ a^i: 1/(1−a) below 1, ∞ otherwise.
template <class T>
ExtReal<T> star(const ExtReal<T> &a) {
    if (a.inf || !(a.v < T(1))) return ExtReal<T>::infinity();
    return ExtReal<T>(T(1) / (T(1) - a.v));
}

template <class T>
using ExtMatrix = std::vector<std::vector<ExtReal<T>>>;

// Least solution of X = I + A·X by Lehmann's elimination.
template <class T>
ExtMatrix<T> matrix_star(ExtMatrix<T> a) {
    const std::size_t n = a.size();
    std::vector<ExtReal<T>> col(n), row(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto s = star(a[k][k]);
        for (std::size_t i = 0; i < n; ++i) col[i] = a[i][k] * s;
        row = a[k];
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i].is_zero()) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (!row[j].is_zero()) a[i][j] = a[i][j] + col[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) a[i][i] = a[i][i] + ExtReal<T>(T(1));
    return a;
}

inline double to_double(const ExtReal<double> &x) { return x.inf ? HUGE_VAL : x.v; }
inline double to_double(const ExtReal<Rational> &x) { return x.inf ? HUGE_VAL : x.v.get_d(); }
inline double to_double(const ExtReal<__float128> &x) { return x.inf ? HUGE_VAL : static_cast<double>(x.v); }

inline std::string to_string(const ExtReal<Rational> &x) { return x.inf ? "inf" : to_string(x.v); }

}  // namespace perpl
