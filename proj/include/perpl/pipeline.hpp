#pragma once

#include "perpl/oracle.hpp"
#include "perpl/solver.hpp"
#include "perpl/syntax.hpp"
#include "perpl/transform.hpp"

#include <string>
#include <vector>

namespace perpl {

// parse → desugar → infer_tags → typecheck
TypedProgram check_source(const std::string &source, UsageMode mode = UsageMode::Affine);

struct Compiled {
    TypedProgram typed;
    TypedProgram linear;
    Elimination elim;
    const TypedProgram &final_program() const { return elim.program; }
};

// Through eliminate_recursive_types.
Compiled compile_source(const std::string &source, UsageMode mode = UsageMode::Affine);

struct Evaluation {
    Compiled compiled;
    MSPE mspe;
    Solution solution;
};

Evaluation evaluate_source(const std::string &source, const SolverConfig &cfg = {},
                           UsageMode mode = UsageMode::Affine, std::uint64_t max_vars = 20'000'000);

std::string read_file(const std::string &path);

struct CorpusEntry {
    std::string name;
    std::string file;  // relative to the corpus directory
    std::string description;
    std::vector<std::pair<std::string, double>> expected;
    double tol = 1e-9;
    std::string same_as;         // another entry whose weight for `same_value` must match
    std::string same_value;
    std::vector<int> oracle_budgets;  // choice depths for the oracle agreement check
};

std::vector<CorpusEntry> corpus_manifest();

struct CorpusOutcome {
    std::string name;
    bool pass = false;
    std::vector<std::string> notes;
};

std::vector<CorpusOutcome> run_corpus(const std::string &dir, const SolverConfig &cfg = {});

// Oracle lower bounds never exceed the solved weights, grow with the budget, and leave a
// gap no larger than the residual mass (for sub-stochastic programs).
struct AgreementCheck {
    bool ok = true;
    std::vector<std::string> notes;
};
AgreementCheck check_oracle_agreement(const TypedProgram &p, const Distribution &solved,
                                      const std::vector<int> &budgets, double eps = 1e-9);

}  // namespace perpl
