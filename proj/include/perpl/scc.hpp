#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace perpl {

// Tarjan's algorithm without recursion. adj[v] lists the vertices v depends on.
// Components come out dependencies first.
template <class Index>
std::vector<std::vector<Index>> tarjan_scc(const std::vector<std::vector<Index>> &adj) {
    const std::size_t n = adj.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<Index> stack;
    std::vector<std::pair<Index, std::size_t>> call;  // vertex, next edge position
    std::vector<std::vector<Index>> out;
    std::size_t counter = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({static_cast<Index>(root), 0});
        while (!call.empty()) {
            auto &[v, pos] = call.back();
            if (pos == 0 && index[v] == unvisited) {
                index[v] = low[v] = counter++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (pos < adj[v].size()) {
                Index w = adj[v][pos++];
                if (index[w] == unvisited) {
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::vector<Index> comp;
                Index w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
                std::reverse(comp.begin(), comp.end());
                out.push_back(std::move(comp));
            }
            Index done = v;
            call.pop_back();
            if (!call.empty()) {
                Index parent = call.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return out;
}

}  // namespace perpl
