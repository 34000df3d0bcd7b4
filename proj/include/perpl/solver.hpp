#pragma once

#include "perpl/ext_real.hpp"
#include "perpl/semantics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace perpl {

struct SolverConfig {
    bool exact = false;
    double tol = 1e-12;
    int max_iters = 200;
    // Exact mode gives up once a numerator or denominator exceeds this many bits.
    std::size_t max_bits = 1 << 16;
    // Keep every Newton iterate in the report.
    bool record_iterates = false;
};

enum class SccClass { Constant, Linear, Nonlinear };
const char *scc_class_name(SccClass c);

struct SccReport {
    std::size_t size = 0;
    SccClass cls = SccClass::Constant;
    int iterations = 0;
    double residual = 0;  // max |P(z) − z| at the returned point
    bool converged = true;
    bool monotone = true;
    std::vector<std::vector<std::string>> iterates;  // per iteration, one entry per variable
    std::vector<VarId> vars;
};

struct SolverReport {
    std::vector<SccReport> sccs;
    std::size_t pruned = 0;   // variables found to be 0 before solving
    std::size_t inlined = 0;  // single-monomial equations substituted away
    bool converged = true;
    int newton_iterations = 0;
    bool reached_infinity = false;
};

struct Weight {
    ExtReal<double> value;
    std::optional<ExtReal<Rational>> exact;
};

struct Distribution {
    std::vector<std::pair<std::string, Weight>> support;  // nonzero entries in root order

    // 0 when the value is absent.
    double weight(const std::string &value) const;
};

struct Solution {
    std::vector<ExtReal<double>> values;
    std::vector<ExtReal<Rational>> exact_values;  // filled in exact mode
    Distribution distribution;
    SolverReport report;
};

Solution solve(const MSPE &m, const SolverConfig &cfg = {});

std::string distribution_to_json(const Distribution &d);
std::string report_to_json(const SolverReport &r);

}  // namespace perpl
