#pragma once

#include "perpl/typecheck.hpp"

#include <map>
#include <string>
#include <vector>

namespace perpl {

// Affine to linear: inserts discard code at every recorded discard site and, when some
// discarded value contains a function or additive component, applies the `& Unit` type
// translation so such values can be dropped. Output re-checks in linear mode.
TypedProgram linearize(const TypedProgram &p);

// Drops definitions unreachable from main.
Program gc_globals(Program p);

struct SiteVar {
    std::string name;
    TypePtr type;
};

struct FoldSite {
    ExprPtr node;  // the fold
    std::vector<SiteVar> free;
};

struct UnfoldSite {
    ExprPtr node;  // the unfold
    TypePtr scope_type;
    std::vector<SiteVar> free;  // excludes the unfold binder
};

std::vector<FoldSite> fold_sites(const TypedProgram &p, int tag);
std::vector<UnfoldSite> unfold_sites(const TypedProgram &p, int tag);

struct DREdge {
    int from;
    char label;  // 'D' or 'R'
    int to;
    bool operator==(const DREdge &) const = default;
};

struct DRGraph {
    std::vector<int> nodes;
    std::map<int, std::string> labels;
    std::vector<DREdge> edges;

    bool has_edge(int from, char label) const;
    std::string dot() const;
};

DRGraph build_dr_graph(const TypedProgram &p);

// Both throw Error(Stage::Transform) naming the offending site when the replacement
// type would mention the type being eliminated.
TypedProgram defunctionalize(const TypedProgram &p, int tag);
TypedProgram refunctionalize(const TypedProgram &p, int tag);

struct DRStep {
    int tag;
    std::string label;
    char how;  // 'D' or 'R'
};

struct Elimination {
    TypedProgram program;
    std::vector<DRStep> steps;
    std::vector<Program> intermediates;  // program before each step, then the final one
    std::string trace;                   // dot graph per step
};

// Greedy elimination: D before R, smallest tag first. Throws NoDRSequence when stuck.
Elimination eliminate_recursive_types(const TypedProgram &p);

}  // namespace perpl
