#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alarmrca/error.hpp"

namespace alarmrca {

using AlarmType = std::string;

struct Edge {
    AlarmType src;
    AlarmType dst;
    double weight{0.0};

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed, weighted graph over alarm types.
///
/// Nodes are kept sorted by type id and edges are keyed by (src, dst), so every
/// iteration order exposed here is lexicographic and deterministic. Used both for
/// causal graphs (acyclic, intensity weights) and influence graphs (weights in [0,1]).
class TypeGraph {
public:
    TypeGraph() = default;

    explicit TypeGraph(std::vector<AlarmType> nodes) {
        for (auto& n : nodes) add_node(std::move(n));
    }

    void add_node(AlarmType node) {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
        if (it == nodes_.end() || *it != node) nodes_.insert(it, std::move(node));
    }

    [[nodiscard]] bool has_node(const AlarmType& node) const {
        return std::binary_search(nodes_.begin(), nodes_.end(), node);
    }

    /// Inserts or overwrites the edge src -> dst. Both endpoints are added as nodes.
    void set_edge(const AlarmType& src, const AlarmType& dst, double weight) {
        if (!(weight >= 0.0)) throw DataError("edge weight must be nonnegative: " + src + "->" + dst);
        add_node(src);
        add_node(dst);
        edges_[{src, dst}] = weight;
    }

    bool remove_edge(const AlarmType& src, const AlarmType& dst) { return edges_.erase({src, dst}) > 0; }

    [[nodiscard]] bool has_edge(const AlarmType& src, const AlarmType& dst) const {
        return edges_.count({src, dst}) > 0;
    }

    [[nodiscard]] std::optional<double> weight(const AlarmType& src, const AlarmType& dst) const {
        auto it = edges_.find({src, dst});
        if (it == edges_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] const std::vector<AlarmType>& nodes() const { return nodes_; }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }

    [[nodiscard]] std::optional<std::size_t> index_of(const AlarmType& node) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
        if (it == nodes_.end() || *it != node) return std::nullopt;
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    /// Edges in (src, dst) lexicographic order.
    [[nodiscard]] std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(edges_.size());
        for (const auto& [key, w] : edges_) out.push_back({key.first, key.second, w});
        return out;
    }

    [[nodiscard]] std::vector<AlarmType> out_neighbors(const AlarmType& node) const {
        std::vector<AlarmType> out;
        for (auto it = edges_.lower_bound({node, AlarmType{}}); it != edges_.end() && it->first.first == node; ++it)
            out.push_back(it->first.second);
        return out;
    }

    friend bool operator==(const TypeGraph&, const TypeGraph&) = default;

private:
    std::vector<AlarmType> nodes_;
    std::map<std::pair<AlarmType, AlarmType>, double> edges_;
};

/// Index-based adjacency view of a TypeGraph for the numeric algorithms.
struct IndexedGraph {
    struct Arc {
        std::size_t to;
        double weight;
    };

    std::vector<AlarmType> names;
    std::vector<std::vector<Arc>> out;

    explicit IndexedGraph(const TypeGraph& g) : names(g.nodes()), out(g.node_count()) {
        for (const auto& e : g.edges()) out[*g.index_of(e.src)].push_back({*g.index_of(e.dst), e.weight});
    }

    [[nodiscard]] std::size_t size() const { return names.size(); }

    [[nodiscard]] std::size_t arc_count() const {
        std::size_t m = 0;
        for (const auto& a : out) m += a.size();
        return m;
    }
};

/// Strongly connected components (Tarjan, iterative). Returns the component index of every
/// node; components are numbered in reverse topological order of the condensation.
inline std::vector<std::size_t> strongly_connected_components(const IndexedGraph& g) {
    const std::size_t n = g.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t counter = 0, n_comp = 0;

    struct Frame {
        std::size_t node;
        std::size_t next_arc;
    };
    std::vector<Frame> call;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& f = call.back();
            const auto& arcs = g.out[f.node];
            if (f.next_arc < arcs.size()) {
                std::size_t w = arcs[f.next_arc++].to;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            std::size_t v = f.node;
            call.pop_back();
            if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_comp;
                } while (w != v);
                ++n_comp;
            }
        }
    }
    return comp;
}

/// Edges that lie on at least one directed cycle: self-loops and edges inside a nontrivial SCC.
inline std::vector<Edge> cycle_edges(const TypeGraph& g) {
    IndexedGraph ig(g);
    auto comp = strongly_connected_components(ig);
    std::vector<Edge> out;
    for (const auto& e : g.edges()) {
        auto s = *g.index_of(e.src);
        auto d = *g.index_of(e.dst);
        if (comp[s] == comp[d]) out.push_back(e);
    }
    return out;
}

inline bool is_acyclic(const TypeGraph& g) { return cycle_edges(g).empty(); }

/// Weakly connected components, each a sorted list of node names; components ordered by
/// their smallest member.
inline std::vector<std::vector<AlarmType>> weak_components(const TypeGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : g.edges()) {
        auto a = find(*g.index_of(e.src));
        auto b = find(*g.index_of(e.dst));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<std::size_t, std::vector<AlarmType>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(g.nodes()[i]);
    std::vector<std::vector<AlarmType>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
}

/// Subgraph induced by `keep`; nodes of `keep` absent from `g` become isolated nodes.
inline TypeGraph induced_subgraph(const TypeGraph& g, const std::vector<AlarmType>& keep) {
    TypeGraph out(keep);
    for (const auto& src : out.nodes()) {
        if (!g.has_node(src)) continue;
        for (const auto& dst : g.out_neighbors(src))
            if (out.has_node(dst)) out.set_edge(src, dst, *g.weight(src, dst));
    }
    return out;
}

}  // namespace alarmrca
