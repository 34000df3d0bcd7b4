#include "perpl/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace perpl {

namespace {

bool all_digits(const std::string &s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

Rational parse_rational(const std::string &text) {
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        auto num = text.substr(0, slash), den = text.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) throw std::invalid_argument("bad rational: " + text);
        mpz_class n{num}, d{den};
        if (d == 0) throw std::invalid_argument("zero denominator: " + text);
        Rational q{n, d};
        q.canonicalize();
        return q;
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        if (!all_digits(text)) throw std::invalid_argument("bad number: " + text);
        return Rational{mpz_class{text}};
    }
    auto whole = text.substr(0, dot), frac = text.substr(dot + 1);
    if (!all_digits(whole) || !all_digits(frac)) throw std::invalid_argument("bad decimal: " + text);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
    Rational q{mpz_class{whole + frac}, den};
    q.canonicalize();
    return q;
}

std::string to_string(const Rational &q) { return q.get_str(); }

}  // namespace perpl
