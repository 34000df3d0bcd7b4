#pragma once

#include <gmpxx.h>

#include <string>

namespace perpl {

using Rational = mpq_class;

// Accepts "3", "0.25", "2/3". Throws std::invalid_argument otherwise.
Rational parse_rational(const std::string &text);

std::string to_string(const Rational &q);

inline double to_double(const Rational &q) { return q.get_d(); }

}  // namespace perpl
