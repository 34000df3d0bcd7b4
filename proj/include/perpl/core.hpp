#pragma once

#include "perpl/diagnostics.hpp"
#include "perpl/rational.hpp"
#include "perpl/types.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace perpl {

enum class ExprKind { Var, Lam, App, Amb, Fail, Factor, Tuple, AddTuple, LetTuple, Proj, Inj, Case, Fold, Unfold };

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

// Core expression. Children layout by kind:
//   Lam      kids {body}; name = binder; type = domain (null until inferred)
//   App      kids {fn, arg}
//   Amb      kids {left, right}
//   Fail     type = result type (null until inferred)
//   Factor   kids {body}; weight
//   Tuple / AddTuple  kids = components
//   LetTuple kids {bound, body}; binders
//   Proj     kids {e}; index (0-based)
//   Inj      kids {e}; index; type = target sum
//   Case     kids {scrutinee, arm_1 .. arm_n}; binders[i] for arm i; type = result (only needed for n = 0)
//   Fold     kids {e}; type = target μ
//   Unfold   kids {bound, body}; name = binder; type = source μ
struct Expr {
    ExprKind kind;
    std::string name;
    std::vector<std::string> binders;
    TypePtr type;
    std::vector<ExprPtr> kids;
    std::size_t index = 0;
    Rational weight;
    SourcePos pos;
    int id = -1;
};

ExprPtr mk_var(std::string name, SourcePos pos = {});
ExprPtr mk_lam(std::string x, TypePtr dom, ExprPtr body, SourcePos pos = {});
ExprPtr mk_app(ExprPtr f, ExprPtr a, SourcePos pos = {});
ExprPtr mk_amb(ExprPtr l, ExprPtr r, SourcePos pos = {});
ExprPtr mk_fail(TypePtr t, SourcePos pos = {});
ExprPtr mk_factor(Rational w, ExprPtr body, SourcePos pos = {});
ExprPtr mk_tuple(std::vector<ExprPtr> comps, SourcePos pos = {});
ExprPtr mk_addtuple(std::vector<ExprPtr> comps, SourcePos pos = {});
ExprPtr mk_lettuple(std::vector<std::string> xs, ExprPtr bound, ExprPtr body, SourcePos pos = {});
ExprPtr mk_proj(ExprPtr e, std::size_t i, SourcePos pos = {});
ExprPtr mk_inj(std::size_t i, TypePtr sum, ExprPtr e, SourcePos pos = {});
ExprPtr mk_case(ExprPtr scrut, std::vector<std::string> xs, std::vector<ExprPtr> arms, TypePtr result = nullptr,
                SourcePos pos = {});
ExprPtr mk_fold(TypePtr mu, ExprPtr e, SourcePos pos = {});
ExprPtr mk_unfold(TypePtr mu, std::string x, ExprPtr bound, ExprPtr body, SourcePos pos = {});

struct Define {
    std::string name;
    TypePtr type;  // null until inferred when no ascription was given
    ExprPtr body;
    SourcePos pos;
};

struct Program {
    std::vector<Define> defs;
    ExprPtr main;

    const Define *find(const std::string &name) const;
    Define *find(const std::string &name);
};

ExprPtr clone(const ExprPtr &e);
Program clone(const Program &p);

// Assigns preorder ids over defines (in order) then main. Returns the node count.
int number_nodes(Program &p);

// Binders introduced by e at child position k (e.g. the let-tuple body sees its binders).
std::vector<std::string> binders_at(const Expr &e, std::size_t k);

// Free local variables in order of first occurrence; names in `globals` are skipped
// unless shadowed by a local binder.
std::vector<std::string> free_locals(const ExprPtr &e, const Program &p);

// Renames free occurrences of `from` to `to`.
ExprPtr rename_free(const ExprPtr &e, const std::string &from, const std::string &to);

// Every identifier used in the program (globals and all binders), for fresh-name generation.
std::set<std::string> all_names(const Program &p);
std::string fresh_name(const std::string &base, std::set<std::string> &taken);

std::size_t count_mu_nodes(const Program &p);
std::size_t count_nodes(const ExprPtr &e);

std::string print_expr(const ExprPtr &e);
std::string print_program(const Program &p);

}  // namespace perpl
