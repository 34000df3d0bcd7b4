#include "perpl/desugar.hpp"
#include "perpl/syntax.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace perpl;

TEST(Parse, FailAlone) {
    auto p = parse_program("fail");
    EXPECT_TRUE(p.data.empty());
    EXPECT_TRUE(p.defines.empty());
    EXPECT_EQ(p.main->kind, SExprKind::Fail);
}

TEST(Parse, BiasedCoin) {
    auto p = parse_program("define flip = amb (factor 0.3 in true) (factor 0.7 in false)\nflip");
    ASSERT_EQ(p.defines.size(), 1u);
    EXPECT_EQ(p.defines[0].name, "flip");
    EXPECT_EQ(p.defines[0].body->kind, SExprKind::Amb);
    EXPECT_EQ(p.defines[0].body->kids[0]->weight, Rational(3, 10));
    EXPECT_EQ(p.main->kind, SExprKind::Var);
    EXPECT_EQ(p.main->name, "flip");
}

TEST(Parse, MissingIdentifierReportsPosition) {
    try {
        parse_program("define = 3");
        FAIL() << "expected a parse error";
    } catch (const Error &e) {
        EXPECT_EQ(e.stage(), Stage::Parse);
        EXPECT_EQ(e.pos().line, 1);
        EXPECT_EQ(e.pos().col, 8);
    }
}

TEST(Parse, DuplicateDefinition) {
    EXPECT_THROW(parse_program("define f = ()\ndefine f = ()\nf"), Error);
}

TEST(Parse, MissingMain) { EXPECT_THROW(parse_program("define f = ()"), Error); }

TEST(Parse, RationalWeightsAndComments) {
    auto p = parse_program("(* outer (* nested *) *) factor 2/3 in ()");
    EXPECT_EQ(p.main->kind, SExprKind::Factor);
    EXPECT_EQ(p.main->weight, Rational(2, 3));
}

TEST(Parse, ApplicationIsLeftAssociative) {
    auto p = parse_program("f x y");
    ASSERT_EQ(p.main->kind, SExprKind::App);
    EXPECT_EQ(p.main->kids[0]->kind, SExprKind::App);
    EXPECT_EQ(p.main->kids[1]->name, "y");
}

TEST(Parse, CorpusRoundTrips) {
    for (auto &name : test::corpus_names()) {
        auto p = parse_program(test::corpus_source(name));
        auto q = parse_program(print_surface(p));
        EXPECT_TRUE(surface_equal(p, q)) << name;
    }
}

namespace {

// Random surface programs for the print/parse round trip.
class Gen {
public:
    explicit Gen(unsigned seed) : rng_(seed) {}

    SurfaceProgram program() {
        SurfaceProgram p;
        int ndata = pick(0, 2);
        for (int i = 0; i < ndata; ++i) {
            SData d;
            d.name = "D" + std::to_string(i);
            int nc = pick(1, 3);
            for (int c = 0; c < nc; ++c) {
                SCtor ctor;
                ctor.name = d.name + "c" + std::to_string(c);
                int na = pick(0, 2);
                for (int a = 0; a < na; ++a) ctor.args.push_back(type(2));
                d.ctors.push_back(ctor);
            }
            p.data.push_back(d);
        }
        int ndef = pick(0, 3);
        for (int i = 0; i < ndef; ++i) {
            SDefine d;
            d.name = "g" + std::to_string(i);
            int np = pick(0, 2);
            for (int k = 0; k < np; ++k) d.params.push_back({var(), coin() ? type(2) : nullptr});
            if (coin()) d.ret = type(2);
            d.body = expr(3);
            p.defines.push_back(d);
        }
        p.main = expr(3);
        return p;
    }

private:
    std::mt19937 rng_;

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return pick(0, 1) == 1; }
    std::string var() {
        static const char *names[] = {"x", "y", "z", "f", "acc"};
        return names[pick(0, 4)];
    }

    STypePtr leaf(STypeKind k, std::string name = {}) {
        auto t = std::make_shared<SType>();
        t->kind = k;
        t->name = std::move(name);
        return t;
    }

    STypePtr type(int depth) {
        int k = depth == 0 ? pick(0, 2) : pick(0, 6);
        switch (k) {
        case 0: return leaf(STypeKind::Unit);
        case 1: return leaf(STypeKind::Bool);
        case 2: return leaf(STypeKind::Name, "T" + std::to_string(pick(0, 2)));
        case 3: {
            auto t = leaf(STypeKind::Arrow);
            t->args = {type(depth - 1), type(depth - 1)};
            return t;
        }
        default: {
            static const STypeKind kinds[] = {STypeKind::Tensor, STypeKind::With, STypeKind::Sum};
            auto t = leaf(kinds[k - 4]);
            int n = pick(2, 3);
            for (int i = 0; i < n; ++i) t->args.push_back(type(depth - 1));
            return t;
        }
        }
    }

    SExprPtr node(SExprKind k) {
        auto e = std::make_shared<SExpr>();
        e->kind = k;
        return e;
    }

    SExprPtr expr(int depth) {
        if (depth == 0) {
            switch (pick(0, 3)) {
            case 0: return node(SExprKind::Fail);
            case 1: return node(SExprKind::Tuple);
            default: {
                auto v = node(SExprKind::Var);
                v->name = coin() ? var() : (coin() ? "true" : "Cons");
                return v;
            }
            }
        }
        auto d = depth - 1;
        switch (pick(0, 14)) {
        case 0: {
            auto e = node(SExprKind::Lam);
            e->name = var();
            if (coin()) e->type = type(2);
            e->kids = {expr(d)};
            return e;
        }
        case 1: {
            auto e = node(SExprKind::App);
            e->kids = {expr(d), expr(d)};
            return e;
        }
        case 2: {
            auto e = node(SExprKind::Amb);
            e->kids = {expr(d), expr(d)};
            return e;
        }
        case 3: {
            auto e = node(SExprKind::Factor);
            e->weight = Rational(pick(0, 9), pick(1, 7));
            e->weight.canonicalize();
            e->kids = {expr(d)};
            return e;
        }
        case 4: {
            auto e = node(SExprKind::Tuple);
            int n = pick(2, 3);
            for (int i = 0; i < n; ++i) e->kids.push_back(expr(d));
            return e;
        }
        case 5: {
            auto e = node(SExprKind::AddTuple);
            int n = pick(1, 3);
            for (int i = 0; i < n; ++i) e->kids.push_back(expr(d));
            return e;
        }
        case 6: {
            auto e = node(SExprKind::Proj);
            e->index = static_cast<std::size_t>(pick(0, 2));
            e->kids = {expr(d)};
            return e;
        }
        case 7: {
            auto e = node(SExprKind::Let);
            e->name = var();
            if (coin()) e->type = type(1);
            e->kids = {expr(d), expr(d)};
            return e;
        }
        case 8: {
            auto e = node(SExprKind::LetTuple);
            int n = pick(0, 3);
            for (int i = 0; i < n; ++i) e->binders.push_back(var());
            e->kids = {expr(d), expr(d)};
            return e;
        }
        case 9: {
            auto e = node(SExprKind::If);
            e->kids = {expr(d), expr(d), expr(d)};
            return e;
        }
        case 10: {
            auto e = node(SExprKind::And);
            e->kids = {expr(d), expr(d)};
            return e;
        }
        case 11: {
            auto e = node(SExprKind::Eq);
            e->kids = {expr(d), expr(d)};
            return e;
        }
        case 12: {
            auto e = node(SExprKind::Case);
            e->unfold = coin();
            e->kids = {expr(d)};
            int n = pick(1, 3);
            for (int i = 0; i < n; ++i) {
                SArm a;
                a.ctor = "K" + std::to_string(i);
                int nv = pick(0, 2);
                for (int v = 0; v < nv; ++v) a.vars.push_back(coin() ? var() : "_");
                a.body = expr(d);
                e->arms.push_back(a);
            }
            return e;
        }
        case 13: {
            auto e = node(SExprKind::Fold);
            e->kids = {expr(d)};
            return e;
        }
        default: return expr(0);
        }
    }
};

}  // namespace

TEST(Parse, RandomProgramsRoundTrip) {
    Gen gen(20240601);
    for (int i = 0; i < 500; ++i) {
        auto p = gen.program();
        auto text = print_surface(p);
        SurfaceProgram q;
        try {
            q = parse_program(text);
        } catch (const Error &e) {
            FAIL() << "re-parse failed: " << e.what() << "\n" << text;
        }
        ASSERT_TRUE(surface_equal(p, q)) << text << "\n---\n" << print_surface(q);
    }
}

TEST(Desugar, IfBecomesCaseWithUnitLets) {
    auto core = desugar(parse_program("\\c: Bool. if c then true else false"));
    auto body = core.main->kids[0];
    ASSERT_EQ(body->kind, ExprKind::Case);
    ASSERT_EQ(body->kids.size(), 3u);
    for (std::size_t i = 1; i <= 2; ++i) {
        EXPECT_EQ(body->kids[i]->kind, ExprKind::LetTuple);
        EXPECT_TRUE(body->kids[i]->binders.empty());
        EXPECT_EQ(body->kids[i]->kids[0]->kind, ExprKind::Var);
        EXPECT_EQ(body->kids[i]->kids[0]->name, body->binders[i - 1]);
    }
}

TEST(Desugar, TrueIsFirstInjectionOfUnit) {
    auto core = desugar(parse_program("true"));
    ASSERT_EQ(core.main->kind, ExprKind::Inj);
    EXPECT_EQ(core.main->index, 0u);
    EXPECT_TRUE(is_bool(core.main->type));
    EXPECT_EQ(core.main->kids[0]->kind, ExprKind::Tuple);
    EXPECT_TRUE(core.main->kids[0]->kids.empty());
}

TEST(Desugar, RecursiveDatatypeGetsMu) {
    auto core = desugar(parse_program("data Nat = Zero | Succ Nat\nSucc Zero"));
    ASSERT_EQ(core.main->kind, ExprKind::Fold);
    EXPECT_EQ(core.main->type->kind, TypeKind::Mu);
    auto body = core.main->type->args[0];
    ASSERT_EQ(body->kind, TypeKind::Sum);
    EXPECT_TRUE(type_equal(body->args[0], unit_type()));
    EXPECT_EQ(body->args[1]->kind, TypeKind::Var);
    EXPECT_EQ(core.main->kids[0]->kind, ExprKind::Inj);
    EXPECT_EQ(core.main->kids[0]->index, 1u);
}

TEST(Desugar, NonRecursiveDatatypeHasNoMu) {
    auto core = desugar(parse_program("data Color = Red | Green | Blue\nGreen"));
    ASSERT_EQ(core.main->kind, ExprKind::Inj);
    EXPECT_EQ(core.main->type->kind, TypeKind::Sum);
    EXPECT_EQ(core.main->type->args.size(), 3u);
}

TEST(Desugar, Errors) {
    EXPECT_THROW(desugar(parse_program("data Nat = Zero | Succ Nat\n\\n: Nat. case n of Zero => () | Nope m => ()")),
                 Error)
        << "unknown constructor";
    EXPECT_THROW(desugar(parse_program("data Nat = Zero | Succ Nat\n\\n: Nat. case n of Zero => ()")), Error)
        << "missing arm";
    EXPECT_THROW(desugar(parse_program("data Nat = Zero | Succ Nat\n\\n: Nat. case n of Zero => () | Succ a b => ()")),
                 Error)
        << "arity";
}

TEST(Desugar, EqualityOnFunctionsRejected) {
    EXPECT_THROW(infer_tags(desugar(parse_program("(\\x: Bool. x) == (\\x: Bool. x)"))), Error);
    EXPECT_THROW(infer_tags(desugar(parse_program("data Nat = Zero | Succ Nat\nZero == Zero"))), Error);
}

TEST(Desugar, EveryCorpusProgramDesugars) {
    for (auto &name : test::corpus_names()) EXPECT_NO_THROW(desugar(parse_program(test::corpus_source(name)))) << name;
}
