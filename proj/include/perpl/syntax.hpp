#pragma once

#include "perpl/diagnostics.hpp"
#include "perpl/rational.hpp"

#include <memory>
#include <string>
#include <vector>

namespace perpl {

enum class STypeKind { Unit, Bool, Name, Arrow, Tensor, With, Sum };

struct SType;
using STypePtr = std::shared_ptr<SType>;

struct SType {
    STypeKind kind;
    std::string name;
    std::vector<STypePtr> args;
    SourcePos pos;
};

enum class SExprKind {
    Var, Lam, App, Amb, Fail, Factor, Tuple, AddTuple, Proj,
    Let, LetTuple, If, And, Eq, Case, Fold
};

struct SExpr;
using SExprPtr = std::shared_ptr<SExpr>;

struct SArm {
    std::string ctor;
    std::vector<std::string> vars;  // "_" for wildcards
    SExprPtr body;
    SourcePos pos;
};

// Surface expression. kids by kind:
//   Lam {body} (name, optional type)   App {f, a}   Amb {l, r}   Factor {body}
//   Tuple/AddTuple comps   Proj {e} (index, 0-based)   Let {bound, body} (name, optional type)
//   LetTuple {bound, body} (binders)   If {c, t, e}   And {l, r}   Eq {l, r}
//   Case {scrutinee} + arms (unfold flag)   Fold {e}
struct SExpr {
    SExprKind kind;
    std::string name;
    std::vector<std::string> binders;
    STypePtr type;
    std::vector<SExprPtr> kids;
    std::size_t index = 0;
    Rational weight;
    std::vector<SArm> arms;
    bool unfold = false;
    SourcePos pos;
};

struct SParam {
    std::string name;
    STypePtr type;  // may be null
};

struct SDefine {
    std::string name;
    std::vector<SParam> params;
    STypePtr ret;  // may be null
    SExprPtr body;
    SourcePos pos;
};

struct SCtor {
    std::string name;
    std::vector<STypePtr> args;
    SourcePos pos;
};

struct SData {
    std::string name;
    std::vector<SCtor> ctors;
    SourcePos pos;
};

struct SurfaceProgram {
    std::vector<SData> data;
    std::vector<SDefine> defines;
    SExprPtr main;
};

// Throws perpl::Error (Stage::Parse) with line/column on malformed input.
SurfaceProgram parse_program(const std::string &source);

std::string print_surface(const SurfaceProgram &p);
std::string print_surface(const SExprPtr &e);
std::string print_surface(const STypePtr &t);

// Structural equality ignoring source positions.
bool surface_equal(const SurfaceProgram &a, const SurfaceProgram &b);
bool surface_equal(const SExprPtr &a, const SExprPtr &b);
bool surface_equal(const STypePtr &a, const STypePtr &b);

}  // namespace perpl
