#pragma once

#include "perpl/typecheck.hpp"

#include <map>
#include <string>
#include <vector>

namespace perpl {

using ExprDistribution = std::vector<std::pair<Rational, ExprPtr>>;

// Syntactic values: abstractions, additive tuples, and tuples/injections/folds of values.
bool is_value(const ExprPtr &e);

// One reduction of the first non-value element, leftmost-innermost, call-by-value.
// Values are left in place. Throws Error(Stage::Internal) on a stuck expression.
ExprDistribution reduce_step(const Program &globals, const ExprDistribution &d);

struct OracleConfig {
    int max_choices = 12;             // amb choices per branch
    std::size_t max_steps = 1000000;  // reductions per branch
    std::size_t max_states = 2000000;
};

struct OracleResult {
    std::map<std::string, Rational> lower;  // rendered value -> weight
    Rational residual;                      // mass cut off by the budget
    std::size_t paths = 0;                  // completed branches, after merging
    bool truncated = false;                 // max_states hit

    Rational weight(const std::string &value) const;
    Rational mass() const;
};

// Breadth-first exhaustive exploration by number of amb choices.
OracleResult explore(const TypedProgram &p, const OracleConfig &cfg = {});

// Renders a closed value of type t the way the solver renders semantic values.
std::string render_syntactic(const TypePtr &t, const ExprPtr &v);

std::string oracle_to_json(const OracleResult &r);

}  // namespace perpl
