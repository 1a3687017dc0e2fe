#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/cpbe.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"

namespace alarmrca::influence {

struct IrieConfig {
    double damping{0.7};
    std::size_t max_iter{100};
    double tol{1e-9};

    void validate() const {
        if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("IRIE damping must lie in (0, 1]");
        if (!(tol > 0.0)) throw ConfigError("IRIE tolerance must be positive");
    }
};

inline void check_probabilities(const TypeGraph& g) {
    for (const auto& e : g.edges())
        if (!(e.weight >= 0.0 && e.weight <= 1.0))
            throw DataError("influence probability outside [0,1] on " + e.src + "->" + e.dst);
}

namespace detail {

inline std::vector<bool> seed_mask(const IndexedGraph& g, const std::set<AlarmType>& seeds) {
    std::vector<bool> mask(g.size(), false);
    for (const auto& s : seeds) {
        auto it = std::lower_bound(g.names.begin(), g.names.end(), s);
        if (it == g.names.end() || *it != s) throw DataError("seed " + s + " is not a graph node");
        mask[static_cast<std::size_t>(it - g.names.begin())] = true;
    }
    return mask;
}

/// One cascade; `active` holds the seeds on entry and every activated node on return.
template <typename Rng>
std::size_t cascade(const IndexedGraph& g, std::vector<bool>& active, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (active[i]) frontier.push_back(i);
    std::size_t count = frontier.size();
    std::vector<std::size_t> next;
    while (!frontier.empty()) {
        next.clear();
        for (auto u : frontier)
            for (const auto& arc : g.out[u])
                if (!active[arc.to] && unif(rng) < arc.weight) {
                    active[arc.to] = true;
                    next.push_back(arc.to);
                }
        count += next.size();
        std::swap(frontier, next);
    }
    return count;
}

}  // namespace detail

/// One independent-cascade run from `seeds`; returns every activated node.
inline std::set<AlarmType> ic_simulate(const TypeGraph& graph, const std::set<AlarmType>& seeds, std::uint64_t rng_seed) {
    check_probabilities(graph);
    IndexedGraph g(graph);
    auto active = detail::seed_mask(g, seeds);
    std::mt19937_64 rng(rng_seed);
    detail::cascade(g, active, rng);
    std::set<AlarmType> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (active[i]) out.insert(g.names[i]);
    return out;
}

struct SpreadEstimate {
    double mean{0.0};
    double std_error{0.0};
};

inline SpreadEstimate expected_spread_mc(const TypeGraph& graph, const std::set<AlarmType>& seeds, std::size_t runs,
                                         std::uint64_t rng_seed) {
    if (runs < 1) throw ConfigError("Monte Carlo spread needs at least one run");
    check_probabilities(graph);
    IndexedGraph g(graph);
    auto initial = detail::seed_mask(g, seeds);
    std::mt19937_64 rng(rng_seed);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
        auto active = initial;
        auto n = static_cast<double>(detail::cascade(g, active, rng));
        sum += n;
        sum_sq += n * n;
    }
    const double rn = static_cast<double>(runs);
    double mean = sum / rn;
    double var = runs > 1 ? std::max(0.0, (sum_sq - rn * mean * mean) / (rn - 1.0)) : 0.0;
    return {mean, std::sqrt(var / rn)};
}

inline constexpr std::size_t max_exact_edges = 20;

/// Exact expected spread: sum over all 2^|E| live-edge subgraphs of their probability times the
/// number of nodes reachable from the seeds.
inline double expected_spread_exact(const TypeGraph& graph, const std::set<AlarmType>& seeds) {
    check_probabilities(graph);
    auto edges = graph.edges();
    if (edges.size() > max_exact_edges)
        throw ConfigError("exact spread enumerates 2^|E| subgraphs and is limited to " +
                          std::to_string(max_exact_edges) + " edges; graph has " + std::to_string(edges.size()));
    IndexedGraph g(graph);
    auto initial = detail::seed_mask(g, seeds);
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    for (const auto& e : edges) arcs.emplace_back(*graph.index_of(e.src), *graph.index_of(e.dst));

    double total = 0.0;
    const std::uint64_t configs = std::uint64_t{1} << edges.size();
    std::vector<std::vector<std::size_t>> live(g.size());
    for (std::uint64_t mask = 0; mask < configs; ++mask) {
        double prob = 1.0;
        for (auto& l : live) l.clear();
        for (std::size_t i = 0; i < edges.size() && prob > 0.0; ++i) {
            bool on = (mask >> i) & 1U;
            prob *= on ? edges[i].weight : 1.0 - edges[i].weight;
            if (on) live[arcs[i].first].push_back(arcs[i].second);
        }
        if (prob == 0.0) continue;
        auto reached = initial;
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (reached[i]) stack.push_back(i);
        std::size_t count = stack.size();
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto v : live[u])
                if (!reached[v]) {
                    reached[v] = true;
                    ++count;
                    stack.push_back(v);
                }
        }
        total += prob * static_cast<double>(count);
    }
    return total;
}

struct IrieResult {
    std::map<AlarmType, double> scores;
    std::size_t iterations{0};
    bool converged{false};
};

/// Jacobi iteration of r(u) = 1 + damping * sum_{v in out(u)} p(u,v) * r(v), starting from r = 1.
inline IrieResult irie_rank(const TypeGraph& graph, const IrieConfig& cfg = {}) {
    cfg.validate();
    check_probabilities(graph);
    IndexedGraph g(graph);
    std::vector<double> r(g.size(), 1.0), next(g.size());
    IrieResult res;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        double delta = 0.0;
        for (std::size_t u = 0; u < g.size(); ++u) {
            double s = 0.0;
            for (const auto& arc : g.out[u]) s += arc.weight * r[arc.to];
            next[u] = 1.0 + cfg.damping * s;
            delta = std::max(delta, std::abs(next[u] - r[u]));
        }
        std::swap(r, next);
        res.iterations = it + 1;
        if (delta < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    for (std::size_t u = 0; u < g.size(); ++u) res.scores[g.names[u]] = r[u];
    return res;
}

struct RankedEntry {
    AlarmType type;
    double score{0.0};
    std::size_t component{0};
    double first_time{0.0};
};

struct RankedAlarms {
    std::size_t window_id{0};
    std::vector<RankedEntry> entries;
    /// Set when some component hit the IRIE iteration cap.
    bool unconverged{false};
};

/// Ranks a transaction's alarms: propagation graph on the influence graph, IRIE per weakly
/// connected component, merge by raw score (ties: earlier first occurrence, then type id), top K.
inline RankedAlarms rank_transaction(const AlarmTransaction& txn, const TypeGraph& influence_graph, std::size_t k,
                                     const IrieConfig& cfg = {}) {
    if (k < 1) throw ConfigError("K must be at least 1");
    RankedAlarms out;
    out.window_id = txn.window_id;
    if (txn.entries.empty()) return out;
    auto pg = cpbe::construct_propagation_graph(txn, influence_graph);
    auto comps = weak_components(pg.graph);
    for (std::size_t c = 0; c < comps.size(); ++c) {
        auto res = irie_rank(induced_subgraph(pg.graph, comps[c]), cfg);
        out.unconverged |= !res.converged;
        for (const auto& [type, score] : res.scores)
            out.entries.push_back({type, score, c, txn.entries.at(type).first_time});
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        return std::tie(b.score, a.first_time, a.type) < std::tie(a.score, b.first_time, b.type);
    });
    if (out.entries.size() > k) out.entries.resize(k);
    return out;
}

}  // namespace alarmrca::influence
