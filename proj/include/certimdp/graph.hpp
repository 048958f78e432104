#ifndef CERTIMDP_GRAPH_HPP
#define CERTIMDP_GRAPH_HPP

#include <algorithm>
#include <deque>
#include <vector>

namespace certimdp {

/// Iterative Tarjan. Returns component ids per node; ids are numbered so that
/// every edge goes from a higher id to a lower-or-equal id (reverse
/// topological order of the condensation).
inline std::vector<int> strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                                      int* component_count = nullptr) {
    int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int next_index = 0, next_comp = 0;
    struct Frame {
        int v;
        std::size_t i = 0;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<Frame> call{{root}};
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.i == 0) {
                index[f.v] = low[f.v] = next_index++;
                stack.push_back(f.v);
                on_stack[f.v] = true;
            }
            bool descended = false;
            while (f.i < adj[f.v].size()) {
                int w = adj[f.v][f.i++];
                if (index[w] < 0) {
                    call.push_back({w});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
            }
            if (descended) continue;
            if (low[f.v] == index[f.v]) {
                while (true) {
                    int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if (w == f.v) break;
                }
                ++next_comp;
            }
            int v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    if (component_count) *component_count = next_comp;
    return comp;
}

/// BFS distances from a set of sources; -1 where unreachable.
inline std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj,
                                      const std::vector<int>& sources) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<int> queue;
    for (int s : sources) {
        dist[s] = 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w : adj[v])
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
    }
    return dist;
}

inline bool graph_strongly_connected(const std::vector<std::vector<int>>& adj) {
    if (adj.empty()) return true;
    int count = 0;
    strongly_connected_components(adj, &count);
    return count == 1;
}

}  // namespace certimdp

#endif
