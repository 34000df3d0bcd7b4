#pragma once

#include "perpl/core.hpp"

#include <string>
#include <utility>
#include <vector>

namespace perpl {

enum class UsageMode { Linear, Affine };

using Context = std::vector<std::pair<std::string, TypePtr>>;

struct NodeInfo {
    TypePtr type;
    // Free local variables of the node, linear and classical, outermost binding first.
    Context context;
};

// In affine mode: before evaluating `node`, the listed variables must be thrown away.
struct DiscardSite {
    int node = -1;
    Context vars;
};

struct TypedProgram {
    Program program;  // numbered; ids index `nodes`
    std::vector<NodeInfo> nodes;
    std::vector<DiscardSite> discards;
    UsageMode mode = UsageMode::Affine;

    const NodeInfo &info(const ExprPtr &e) const { return nodes.at(static_cast<std::size_t>(e->id)); }
    const NodeInfo &info(const Expr &e) const { return nodes.at(static_cast<std::size_t>(e.id)); }
};

// Resolves metavariables and μ tags, fills every missing annotation and expands `==`.
// Tags are renumbered 1, 2, ... by first occurrence and labelled e.g. "String[2]".
Program infer_tags(Program p);

// Syntax-directed check of a fully annotated program.
TypedProgram typecheck(Program p, UsageMode mode);

// Label of every tag still present in the program, keyed by tag.
std::map<int, std::string> tag_labels(const Program &p);

}  // namespace perpl
