#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace perpl {

enum class TypeKind { Arrow, Tensor, With, Sum, Mu, Var, Meta };

// Nominal information attached to a sum so values and types can be printed
// with the names the programmer wrote. Ignored by type equality.
struct DataInfo {
    std::string name;
    std::vector<std::string> ctors;
    std::vector<std::size_t> arities;
    bool recursive = false;
};

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
    TypeKind kind;
    std::vector<TypePtr> args;  // Arrow {dom, cod}; Tensor/With/Sum components; Mu {body}
    std::string name;           // Mu and Var: the datatype name, which doubles as binder
    int tag = 0;                // Mu: tag; Meta: metavariable id
    std::string label;          // Mu: display form, e.g. "String[2]"
    std::shared_ptr<const DataInfo> data;
};

TypePtr arrow(TypePtr dom, TypePtr cod);
TypePtr tensor(std::vector<TypePtr> comps);
TypePtr unit_type();
TypePtr with_type(std::vector<TypePtr> comps);
TypePtr sum_type(std::vector<TypePtr> comps, std::shared_ptr<const DataInfo> data = nullptr);
TypePtr mu_type(int tag, std::string name, TypePtr body, std::string label = {});
TypePtr type_var(std::string name);
TypePtr meta_type(int id);
TypePtr bool_type();

bool type_equal(const TypePtr &a, const TypePtr &b);
bool is_positive(const TypePtr &t);
bool is_bool(const TypePtr &t);

// True if a μ with this tag occurs anywhere in t, including inside other μ bodies.
bool contains_tag(const TypePtr &t, int tag);
bool contains_mu(const TypePtr &t);
bool contains_arrow_or_with(const TypePtr &t);
void collect_tags(const TypePtr &t, std::set<int> &out);

// body{name := replacement}, stopping at a μ that rebinds name.
TypePtr subst_var(const TypePtr &body, const std::string &name, const TypePtr &replacement);
// The one-step unrolling of a μ type.
TypePtr unroll(const TypePtr &mu);
// Replaces every μ with the given tag by replacement.
TypePtr replace_tag(const TypePtr &t, int tag, const TypePtr &replacement);

std::string render(const TypePtr &t);

}  // namespace perpl
