#include "perpl/transform.hpp"
#include "dr_helpers.hpp"
#include "random_programs.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace perpl;
using test::brute_force_acyclic;
using test::mentions_mu;

namespace {

TypedProgram linear_of(const std::string &src) { return linearize(check_source(src)); }

int tag_named(const DRGraph &g, const std::string &label) {
    for (auto &[t, l] : g.labels)
        if (l == label) return t;
    return -1;
}

}  // namespace

TEST(Linearize, UnusedFunctionGetsEscapeHatch) {
    auto lin = linear_of("\\k: Bool -> Bool. true");
    // main itself has a function type, so it gains the escape hatch too
    ASSERT_EQ(lin.program.main->kind, ExprKind::AddTuple);
    auto main = lin.program.main->kids[0];
    ASSERT_EQ(main->kind, ExprKind::Lam);
    EXPECT_EQ(render(main->type), "(Bool -> Bool) & Unit");
    auto body = main->kids[0];
    ASSERT_EQ(body->kind, ExprKind::LetTuple);
    EXPECT_TRUE(body->binders.empty());
    EXPECT_EQ(print_expr(body->kids[0]), "k.2");
    EXPECT_NO_THROW(typecheck(lin.program, UsageMode::Linear));
}

TEST(Linearize, LinearProgramUnchanged) {
    auto tp = check_source(test::corpus_source("coin"));
    auto lin = linearize(tp);
    EXPECT_EQ(print_program(lin.program), print_program(tp.program));
}

TEST(Linearize, DiscardFunctionsGenerated) {
    auto lin = linear_of(test::corpus_source("cfg_parse"));
    int discards = 0;
    for (auto &d : lin.program.defs)
        if (d.name.rfind("discard_", 0) == 0) ++discards;
    EXPECT_EQ(discards, 2);
}

TEST(DRGraph, PushdownAutomaton) {
    auto g = build_dr_graph(linear_of(test::corpus_source("pda")));
    int str = tag_named(g, "String"), stk = tag_named(g, "Stack");
    ASSERT_GE(str, 0);
    ASSERT_GE(stk, 0);
    EXPECT_EQ(g.nodes.size(), 2u);
    std::vector<DREdge> expected{{stk, 'D', stk}, {stk, 'R', str}, {str, 'R', stk}};
    EXPECT_EQ(g.edges.size(), expected.size());
    for (auto &e : expected) EXPECT_NE(std::find(g.edges.begin(), g.edges.end(), e), g.edges.end());
}

TEST(DRGraph, NoRecursiveTypes) {
    auto g = build_dr_graph(linear_of(test::corpus_source("coin")));
    EXPECT_TRUE(g.nodes.empty());
    EXPECT_TRUE(g.edges.empty());
}

TEST(Defunctionalize, InputStringHasFourSites) {
    auto lin = linear_of(test::corpus_source("cfg_parse"));
    auto g = build_dr_graph(lin);
    int s2 = tag_named(g, "String[2]");
    EXPECT_EQ(fold_sites(lin, s2).size(), 4u);
    auto d = defunctionalize(lin, s2);
    auto *u = d.program.find("u_String_2");
    ASSERT_NE(u, nullptr);
    ASSERT_EQ(u->type->kind, TypeKind::Arrow);
    auto phi = u->type->args[0];
    ASSERT_EQ(phi->kind, TypeKind::Sum);
    EXPECT_EQ(phi->args.size(), 4u);
    EXPECT_EQ(render(phi), "String[2]Folded");
    EXPECT_NO_THROW(typecheck(d.program, UsageMode::Linear));
}

TEST(Defunctionalize, AccumulatorBlocksString1) {
    auto lin = linear_of(test::corpus_source("cfg_parse"));
    int s1 = tag_named(build_dr_graph(lin), "String[1]");
    try {
        defunctionalize(lin, s1);
        FAIL() << "expected a precondition error";
    } catch (const Error &e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("'acc' of type String[1]"), std::string::npos) << msg;
        EXPECT_EQ(e.stage(), Stage::Transform);
    }
}

TEST(Defunctionalize, NoFoldSitesGivesEmptySum) {
    auto lin = linear_of("data Nat = Zero | Succ Nat\n\\n: Nat. case n of Zero => true | Succ m => false");
    auto g = build_dr_graph(lin);
    ASSERT_EQ(g.nodes.size(), 1u);
    auto d = defunctionalize(lin, g.nodes[0]);
    EXPECT_NO_THROW(typecheck(d.program, UsageMode::Linear));
    EXPECT_FALSE(mentions_mu(d));
    auto arg = d.info(d.program.main).type->args[0];
    EXPECT_EQ(arg->kind, TypeKind::Sum);
    EXPECT_TRUE(arg->args.empty());
}

TEST(Refunctionalize, String1AfterDefunctionalizingString2) {
    auto lin = linear_of(test::corpus_source("cfg_parse"));
    auto g = build_dr_graph(lin);
    auto d = defunctionalize(lin, tag_named(g, "String[2]"));
    auto r = refunctionalize(d, tag_named(g, "String[1]"));
    auto *f = r.program.find("f_String_1");
    ASSERT_NE(f, nullptr);
    auto phi = f->type->args[1];
    ASSERT_EQ(phi->kind, TypeKind::With);
    ASSERT_EQ(phi->args.size(), 2u);
    EXPECT_EQ(render(phi->args[0]), "String[2]Folded -> Bool");
    EXPECT_TRUE(type_equal(phi->args[1]->args[0], unit_type()));
    EXPECT_NO_THROW(typecheck(r.program, UsageMode::Linear));
}

TEST(Refunctionalize, CounterBecomesFunction) {
    auto lin = linear_of(test::corpus_source("counter"));
    auto g = build_dr_graph(lin);
    auto r = refunctionalize(lin, tag_named(g, "Nat"));
    auto *run = r.program.find("run");
    ASSERT_NE(run, nullptr);
    EXPECT_EQ(run->type->args[0]->kind, TypeKind::With);
    EXPECT_TRUE(contains_arrow_or_with(run->type->args[0]));
}

TEST(Refunctionalize, SelfLoopRejected) {
    // equal's unfold of xs keeps ys of the same type in scope.
    auto src = test::corpus_source("cfg_parse");
    src = src.substr(0, src.rfind("equal (gen")) + "equal (gen S Nil) (gen S Nil)\n";
    auto lin = linear_of(src);
    auto g = build_dr_graph(lin);
    ASSERT_EQ(g.nodes.size(), 1u);
    EXPECT_THROW(refunctionalize(lin, g.nodes[0]), Error);
    EXPECT_THROW(defunctionalize(lin, g.nodes[0]), Error);
    EXPECT_THROW(eliminate_recursive_types(lin), NoDRSequence);
}

TEST(Eliminate, Sequences) {
    auto seq = [](const std::string &name) {
        auto el = eliminate_recursive_types(linear_of(test::corpus_source(name)));
        std::string s;
        for (auto &st : el.steps) s += (s.empty() ? "" : ", ") + st.label + ":" + st.how;
        return s;
    };
    EXPECT_EQ(seq("coin"), "");
    EXPECT_EQ(seq("pda"), "String:D, Stack:R");
    EXPECT_EQ(seq("cfg_parse"), "String[2]:D, String[1]:R");
    EXPECT_EQ(seq("counter"), "String:D, Nat:R");
}

TEST(Eliminate, StuckReportsResidualGraph) {
    auto src = test::corpus_source("cfg_parse");
    src = src.substr(0, src.rfind("equal (gen")) + "equal (gen S Nil) (gen S Nil)\n";
    try {
        eliminate_recursive_types(linear_of(src));
        FAIL() << "expected NoDRSequence";
    } catch (const NoDRSequence &e) {
        EXPECT_NE(std::string(e.what()).find("no successful sequence"), std::string::npos) << e.what();
        EXPECT_NE(e.residual_dot().find("digraph"), std::string::npos);
    }
}

TEST(Eliminate, CorpusIsMuFree) {
    for (auto &name : test::corpus_names()) {
        auto c = compile_source(test::corpus_source(name));
        EXPECT_FALSE(mentions_mu(c.final_program())) << name;
        EXPECT_EQ(c.elim.intermediates.size(), c.elim.steps.size() + 1) << name;
    }
}

TEST(Eliminate, GreedyMatchesBruteForce) {
    std::mt19937 rng(5150);
    const double densities[] = {0.2, 0.35, 0.5};
    int successes = 0, failures = 0;
    for (int i = 0; i < 200; ++i) {
        int k = 1 + i % 4;
        auto src = test::random_dr_program(rng, k, densities[i % 3]);
        auto lin = linear_of(src);
        auto g = build_dr_graph(lin);
        ASSERT_LE(g.nodes.size(), 4u) << src;
        bool exists = brute_force_acyclic(g);
        bool greedy = true;
        try {
            auto el = eliminate_recursive_types(lin);
            EXPECT_FALSE(mentions_mu(el.program)) << src;
        } catch (const NoDRSequence &) {
            greedy = false;
        }
        EXPECT_EQ(greedy, exists) << src << g.dot();
        (greedy ? successes : failures)++;
    }
    EXPECT_GT(successes, 0);
    EXPECT_GT(failures, 0);
}
