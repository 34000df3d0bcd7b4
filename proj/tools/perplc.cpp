#include "perpl/pipeline.hpp"

#include <CLI11.hpp>
#include "json.hpp"

#include <iostream>

#ifndef PERPL_CORPUS_DIR
#define PERPL_CORPUS_DIR "corpus"
#endif

using namespace perpl;

namespace {

enum Exit { Ok = 0, Diagnostics = 1, NoSequence = 2, SolverBudget = 3 };

struct Options {
    std::string file;
    std::string corpus = PERPL_CORPUS_DIR;
    bool linear = false, exact = false, json = false;
    bool emit_transformed = false, emit_mspe = false, trace_dr = false;
    double tol = 1e-12;
    int max_iters = 200;
    int steps = 12;
    std::uint64_t max_vars = 20'000'000;
};

UsageMode usage(const Options &o) { return o.linear ? UsageMode::Linear : UsageMode::Affine; }

SolverConfig solver_config(const Options &o) {
    SolverConfig c;
    c.exact = o.exact;
    c.tol = o.tol;
    c.max_iters = o.max_iters;
    c.record_iterates = o.json;
    return c;
}

std::string sequence(const Elimination &el) {
    std::string s;
    for (std::size_t i = 0; i < el.steps.size(); ++i)
        s += (i ? ", " : "") + el.steps[i].label + ":" + std::string(1, el.steps[i].how);
    return s;
}

void print_transform(const Options &o, const Compiled &c) {
    if (o.trace_dr) {
        std::cout << c.elim.trace;
        std::cout << "sequence: " << sequence(c.elim) << "\n";
    }
    if (o.emit_transformed) std::cout << print_program(c.final_program().program);
}

int cmd_check(const Options &o) {
    auto tp = check_source(read_file(o.file), usage(o));
    if (o.json) {
        nlohmann::json globals = nlohmann::json::object();
        for (auto &d : tp.program.defs) globals[d.name] = render(d.type);
        std::cout << nlohmann::json{{"ok", true}, {"globals", globals}, {"main", render(tp.info(tp.program.main).type)}}.dump()
                  << "\n";
        return Ok;
    }
    for (auto &d : tp.program.defs) std::cout << d.name << " : " << render(d.type) << "\n";
    std::cout << "main : " << render(tp.info(tp.program.main).type) << "\n";
    return Ok;
}

int cmd_transform(const Options &o) {
    auto c = compile_source(read_file(o.file), usage(o));
    if (o.json) {
        nlohmann::json steps = nlohmann::json::array();
        for (auto &s : c.elim.steps) steps.push_back({{"type", s.label}, {"transform", std::string(1, s.how)}});
        nlohmann::json j{{"sequence", steps}};
        if (o.emit_transformed) j["program"] = print_program(c.final_program().program);
        if (o.trace_dr) j["trace"] = c.elim.trace;
        std::cout << j.dump() << "\n";
        return Ok;
    }
    if (!o.trace_dr) std::cout << "sequence: " << sequence(c.elim) << "\n";
    print_transform(o, c);
    return Ok;
}

int cmd_mspe(const Options &o) {
    auto c = compile_source(read_file(o.file), usage(o));
    print_transform(o, c);
    auto m = compile_mspe(c.final_program(), o.max_vars);
    std::cout << (o.json ? mspe_to_json(m) + "\n" : mspe_to_text(m));
    return Ok;
}

int cmd_solve(const Options &o) {
    auto c = compile_source(read_file(o.file), usage(o));
    print_transform(o, c);
    auto m = compile_mspe(c.final_program(), o.max_vars);
    if (o.emit_mspe) std::cout << (o.json ? mspe_to_json(m) + "\n" : mspe_to_text(m));
    auto sol = solve(m, solver_config(o));
    auto main_type = c.final_program().info(c.final_program().program.main).type;
    if (!is_positive(main_type))
        std::cerr << "warning: main has type " << render(main_type) << "; the distribution is over input-output pairs\n";
    if (o.json) {
        auto j = nlohmann::json::parse(distribution_to_json(sol.distribution));
        j["report"] = nlohmann::json::parse(report_to_json(sol.report));
        std::cout << j.dump() << "\n";
    } else {
        std::cout << distribution_to_json(sol.distribution) << "\n";
    }
    if (!sol.report.converged) {
        std::cerr << o.file << ": error: solver stopped before convergence (max-iters " << o.max_iters << ")\n";
        return SolverBudget;
    }
    return Ok;
}

int cmd_oracle(const Options &o) {
    auto tp = check_source(read_file(o.file), usage(o));
    OracleConfig oc;
    oc.max_choices = o.steps;
    std::cout << oracle_to_json(explore(tp, oc)) << "\n";
    return Ok;
}

int cmd_test_corpus(const Options &o) {
    bool all = true;
    nlohmann::json results = nlohmann::json::array();
    for (auto &r : run_corpus(o.corpus, solver_config(o))) {
        all = all && r.pass;
        if (o.json) {
            results.push_back({{"name", r.name}, {"pass", r.pass}, {"notes", r.notes}});
            continue;
        }
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "\n";
        for (auto &n : r.notes) std::cout << "  " << n << "\n";
    }
    if (o.json) std::cout << results.dump() << "\n";
    return all ? Ok : Diagnostics;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"perplc: compile and evaluate PERPL programs"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App *sub, bool needs_file) {
        if (needs_file) sub->add_option("file", o.file, "PERPL source file")->required();
        sub->add_flag("--linear", o.linear, "strict linear typing instead of affine");
        sub->add_flag("--json", o.json, "machine-readable output");
        sub->add_option("--max-vars", o.max_vars, "MSPE variable budget");
    };
    auto add_transform = [&](CLI::App *sub) {
        sub->add_flag("--emit-transformed", o.emit_transformed, "print the program after eliminating recursive types");
        sub->add_flag("--trace-dr", o.trace_dr, "print the DR-graph at every step and the chosen sequence");
    };
    auto add_solver = [&](CLI::App *sub) {
        sub->add_flag("--exact", o.exact, "exact rational arithmetic");
        sub->add_option("--tol", o.tol, "Newton stopping tolerance");
        sub->add_option("--max-iters", o.max_iters, "Newton iteration budget");
    };

    auto *check = app.add_subcommand("check", "type-check a program");
    add_common(check, true);
    auto *transform = app.add_subcommand("transform", "linearize and eliminate recursive types");
    add_common(transform, true);
    add_transform(transform);
    auto *mspe = app.add_subcommand("mspe", "print the equation system");
    add_common(mspe, true);
    add_transform(mspe);
    auto *solve_cmd = app.add_subcommand("solve", "compute the distribution of main");
    add_common(solve_cmd, true);
    add_transform(solve_cmd);
    add_solver(solve_cmd);
    solve_cmd->add_flag("--emit-mspe", o.emit_mspe, "print the equation system before solving");
    auto *oracle = app.add_subcommand("oracle", "lower bounds by exhaustive reduction");
    add_common(oracle, true);
    oracle->add_option("--steps", o.steps, "amb choices explored per branch");
    auto *corpus = app.add_subcommand("test-corpus", "check every bundled program against its manifest entry");
    add_common(corpus, false);
    add_solver(corpus);
    corpus->add_option("--dir", o.corpus, "corpus directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check) return cmd_check(o);
        if (*transform) return cmd_transform(o);
        if (*mspe) return cmd_mspe(o);
        if (*solve_cmd) return cmd_solve(o);
        if (*oracle) return cmd_oracle(o);
        if (*corpus) return cmd_test_corpus(o);
    } catch (const NoDRSequence &e) {
        std::cerr << format_diagnostic(e, o.file) << "\n" << e.residual_dot();
        return NoSequence;
    } catch (const BudgetExceeded &e) {
        std::cerr << format_diagnostic(e, o.file) << "\n";
        return SolverBudget;
    } catch (const Error &e) {
        if (o.json)
            std::cout << nlohmann::json{{"ok", false},
                                        {"diagnostics",
                                         {{{"file", o.file},
                                           {"line", e.pos().line},
                                           {"col", e.pos().col},
                                           {"stage", stage_name(e.stage())},
                                           {"message", e.what()}}}}}
                             .dump()
                      << "\n";
        else
            std::cerr << format_diagnostic(e, o.file) << " [" << stage_name(e.stage()) << "]\n";
        return Diagnostics;
    } catch (const std::exception &e) {
        std::cerr << o.file << ": error: " << e.what() << "\n";
        return Diagnostics;
    }
    return Ok;
}
