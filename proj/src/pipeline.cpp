#include "perpl/pipeline.hpp"

#include "perpl/desugar.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace perpl {

TypedProgram check_source(const std::string &source, UsageMode mode) {
    return typecheck(infer_tags(desugar(parse_program(source))), mode);
}

Compiled compile_source(const std::string &source, UsageMode mode) {
    Compiled c;
    c.typed = check_source(source, mode);
    c.linear = linearize(c.typed);
    c.elim = eliminate_recursive_types(c.linear);
    return c;
}

Evaluation evaluate_source(const std::string &source, const SolverConfig &cfg, UsageMode mode, std::uint64_t max_vars) {
    Evaluation ev;
    ev.compiled = compile_source(source, mode);
    ev.mspe = compile_mspe(ev.compiled.final_program(), max_vars);
    ev.solution = solve(ev.mspe, cfg);
    return ev;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<CorpusEntry> corpus_manifest() {
    return {
        {"coin", "coin.ppl", "biased coin with weights 0.3 and 0.7", {{"true", 0.3}, {"false", 0.7}}, 1e-12, "", "",
         {2, 4, 6}},
        {"fair_loop", "fair_loop.ppl", "flip twice until the flips differ, p = 0.6",
         {{"true", 0.5}, {"false", 0.5}}, 1e-12, "", "", {4, 8, 16}},
        {"pcfg_unit", "pcfg_unit.ppl", "partition function of S -> S S | a at p = 2/3", {{"()", 0.5}}, 1e-9, "", "",
         {4, 8, 12}},
        {"cfg_parse", "cfg_parse.ppl", "generate from S -> S S | a at p = 1/2 and compare with aaa",
         {{"true", 0.0625}}, 1e-9, "", "", {4, 8, 12}},
        {"counter", "counter.ppl", "generate with a counter instead of a string and compare with aaa",
         {{"true", 0.0625}}, 1e-9, "cfg_parse", "true", {4, 8, 12}},
        {"pda", "pda.ppl", "one-state PDA over aaa", {{"true", 0.0625}}, 1e-9, "", "", {4, 8, 12}},
        {"epda", "epda.ppl", "embedded PDA over a stack of stacks, input aaa", {{"()", 0.04608}}, 1e-9, "", "",
         {4, 8, 10}},
    };
}

AgreementCheck check_oracle_agreement(const TypedProgram &p, const Distribution &solved, const std::vector<int> &budgets,
                                      double eps) {
    AgreementCheck out;
    std::map<std::string, Rational> previous;
    for (int b : budgets) {
        OracleConfig oc;
        oc.max_choices = b;
        auto r = explore(p, oc);
        std::set<std::string> values;
        for (auto &[v, w] : r.lower) values.insert(v);
        for (auto &[v, w] : previous) values.insert(v);
        for (auto &v : values) {
            double lower = r.weight(v).get_d(), exact = solved.weight(v);
            auto prev = previous.count(v) ? previous[v] : Rational(0);
            if (r.weight(v) < prev) {
                out.ok = false;
                out.notes.push_back("budget " + std::to_string(b) + ": lower bound for " + v + " decreased");
            }
            if (lower > exact + eps) {
                out.ok = false;
                out.notes.push_back("budget " + std::to_string(b) + ": lower bound " + std::to_string(lower) + " for " + v +
                                    " exceeds solved " + std::to_string(exact));
            }
            if (!std::isinf(exact) && exact - lower > r.residual.get_d() + eps) {
                out.ok = false;
                out.notes.push_back("budget " + std::to_string(b) + ": gap for " + v + " exceeds residual mass");
            }
        }
        previous = r.lower;
    }
    return out;
}

std::vector<CorpusOutcome> run_corpus(const std::string &dir, const SolverConfig &cfg) {
    std::vector<CorpusOutcome> out;
    std::map<std::string, Distribution> solved;
    for (auto &entry : corpus_manifest()) {
        CorpusOutcome o;
        o.name = entry.name;
        o.pass = true;
        try {
            auto ev = evaluate_source(read_file(dir + "/" + entry.file), cfg);
            auto &dist = ev.solution.distribution;
            solved[entry.name] = dist;
            for (auto &[v, w] : entry.expected) {
                double got = dist.weight(v);
                if (!(std::fabs(got - w) <= entry.tol)) {
                    o.pass = false;
                    o.notes.push_back("weight(" + v + ") = " + std::to_string(got) + ", expected " + std::to_string(w));
                }
            }
            if (!entry.same_as.empty()) {
                double a = dist.weight(entry.same_value), b = solved[entry.same_as].weight(entry.same_value);
                if (!(std::fabs(a - b) <= 1e-12)) {
                    o.pass = false;
                    o.notes.push_back("differs from " + entry.same_as);
                }
            }
            if (!ev.solution.report.converged) {
                o.pass = false;
                o.notes.push_back("solver did not converge");
            }
            auto agree = check_oracle_agreement(ev.compiled.typed, dist, entry.oracle_budgets);
            if (!agree.ok) o.pass = false;
            for (auto &n : agree.notes) o.notes.push_back(n);
        } catch (const std::exception &e) {
            o.pass = false;
            o.notes.push_back(e.what());
        }
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace perpl
