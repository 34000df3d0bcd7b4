#pragma once

#include "perpl/transform.hpp"

#include <functional>
#include <map>

namespace perpl::test {

inline bool mentions_mu(const TypedProgram &tp) {
    if (count_mu_nodes(tp.program) != 0) return true;
    for (auto &d : tp.program.defs)
        if (contains_mu(d.type)) return true;
    for (auto &n : tp.nodes)
        if (n.type && contains_mu(n.type)) return true;
    return false;
}

// Acyclic DR-subgraph search over every D/R labelling.
inline bool brute_force_acyclic(const DRGraph &g) {
    const std::size_t n = g.nodes.size();
    std::map<int, std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx[g.nodes[i]] = i;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::vector<std::size_t>> adj(n);
        for (auto &e : g.edges) {
            auto from = idx[e.from];
            char chosen = (mask >> from) & 1 ? 'R' : 'D';
            if (e.label == chosen) adj[from].push_back(idx[e.to]);
        }
        std::vector<int> color(n, 0);
        bool cyclic = false;
        std::function<void(std::size_t)> dfs = [&](std::size_t v) {
            color[v] = 1;
            for (auto w : adj[v]) {
                if (color[w] == 1) cyclic = true;
                else if (color[w] == 0) dfs(w);
            }
            color[v] = 2;
        };
        for (std::size_t v = 0; v < n && !cyclic; ++v)
            if (color[v] == 0) dfs(v);
        if (!cyclic) return true;
    }
    return false;
}

}  // namespace perpl::test
