#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/ci.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"
#include "alarmrca/hawkes.hpp"

namespace alarmrca::hpci {

using hawkes::HawkesModel;

/// Intensities at or below this are treated as zero.
inline constexpr double min_intensity = 1e-8;

struct HpciConfig {
    double beta{hawkes::default_beta};
    double significance{ci::default_significance};
    ci::CiTest ci_test{ci::CiTest::fisher_z};
    std::size_t max_cond{ci::default_max_cond};
    double window_seconds{default_window_seconds};
    hawkes::FitOptions fit{};
    double intensity_floor{min_intensity};
};

/// Graph with edge v -> u weighted alpha(u, v) for every off-diagonal alpha(u, v) > floor.
inline TypeGraph intensity_graph(const HawkesModel& model, double floor = min_intensity) {
    TypeGraph g(model.types);
    const auto dim = static_cast<Eigen::Index>(model.dimension());
    for (Eigen::Index u = 0; u < dim; ++u)
        for (Eigen::Index v = 0; v < dim; ++v)
            if (u != v && model.alpha(u, v) > floor)
                g.set_edge(model.types[static_cast<std::size_t>(v)], model.types[static_cast<std::size_t>(u)],
                           model.alpha(u, v));
    return g;
}

/// Repeatedly deletes the lightest edge lying on a directed cycle until the graph is acyclic.
/// Ties go to the lexicographically smallest (src, dst).
inline TypeGraph enforce_dag(TypeGraph g, std::vector<Edge>* removed = nullptr) {
    while (true) {
        auto cyc = cycle_edges(g);
        if (cyc.empty()) break;
        auto victim = *std::min_element(cyc.begin(), cyc.end(), [](const Edge& a, const Edge& b) {
            return std::tie(a.weight, a.src, a.dst) < std::tie(b.weight, b.src, b.dst);
        });
        g.remove_edge(victim.src, victim.dst);
        if (removed) removed->push_back(victim);
    }
    return g;
}

/// Occurrence-series tester over the corpus windows, empty windows included.
inline std::pair<ci::IndependenceTester, std::map<AlarmType, std::size_t>> make_tester(const Corpus& corpus,
                                                                                       ci::CiTest test,
                                                                                       double significance) {
    auto series = occurrence_series(corpus.transactions, corpus.types, corpus.window_count);
    std::vector<std::vector<double>> data;
    std::map<AlarmType, std::size_t> index;
    for (const auto& s : series) {
        index.emplace(s.alarm_type, data.size());
        data.emplace_back(s.counts.begin(), s.counts.end());
    }
    return {ci::IndependenceTester(std::move(data), test, significance), std::move(index)};
}

inline HawkesModel fit_intensities(const Corpus& corpus, const HpciConfig& cfg, hawkes::FitReport* report = nullptr) {
    auto [model, rep] = hawkes::fit_mle(corpus.sequences, corpus.types, cfg.beta, cfg.fit);
    if (report) *report = std::move(rep);
    return model;
}

/// All three stages of a learner run, kept for diagnostics.
struct LearnTrace {
    TypeGraph initial;
    TypeGraph pruned;
    TypeGraph causal;
    std::vector<ci::RemovedEdge> ci_removed;
    std::vector<Edge> cycle_removed;
};

/// Hawkes intensities -> CI pruning on occurrence series -> minimum-intensity cycle breaking.
/// `model` may be supplied to reuse an existing unpenalized fit of the same corpus.
inline LearnTrace hpci_learn_traced(const Corpus& corpus, const HpciConfig& cfg,
                                    const std::optional<HawkesModel>& model = std::nullopt) {
    LearnTrace trace;
    HawkesModel fitted = model ? *model : fit_intensities(corpus, cfg);
    trace.initial = intensity_graph(fitted, cfg.intensity_floor);
    auto [tester, index] = make_tester(corpus, cfg.ci_test, cfg.significance);
    ci::PruneOptions popts{cfg.ci_test, cfg.significance, cfg.max_cond};
    trace.pruned = ci::ci_prune(trace.initial, tester, index, popts, &trace.ci_removed);
    trace.causal = enforce_dag(trace.pruned, &trace.cycle_removed);
    return trace;
}

inline TypeGraph hpci_learn(const Corpus& corpus, const HpciConfig& cfg = {},
                            const std::optional<HawkesModel>& model = std::nullopt) {
    return hpci_learn_traced(corpus, cfg, model).causal;
}

/// Mean offset of each type's first occurrence from its window start.
inline std::map<AlarmType, double> mean_first_offsets(const Corpus& corpus) {
    std::map<AlarmType, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < corpus.transactions.size(); ++i) {
        double start = i < corpus.sequences.size() ? corpus.sequences[i].start : 0.0;
        for (const auto& [type, e] : corpus.transactions[i].entries) {
            acc[type].first += e.first_time - start;
            acc[type].second += 1;
        }
    }
    std::map<AlarmType, double> out;
    for (const auto& [type, a] : acc) out[type] = a.first / static_cast<double>(a.second);
    return out;
}

struct PcConfig {
    double significance{ci::default_significance};
    ci::CiTest ci_test{ci::CiTest::g_square};
    std::size_t max_cond{ci::default_max_cond};
};

/// PC skeleton from the complete graph, each adjacency oriented toward the larger fitted
/// intensity (earlier mean first occurrence as source on ties), then cycle breaking.
inline TypeGraph pc_baseline(const Corpus& corpus, const PcConfig& cfg, const HawkesModel& orientation,
                             LearnTrace* trace = nullptr) {
    LearnTrace local;
    LearnTrace& tr = trace ? *trace : local;
    tr.initial = TypeGraph(corpus.types);
    for (std::size_t i = 0; i < corpus.types.size(); ++i)
        for (std::size_t j = i + 1; j < corpus.types.size(); ++j)
            tr.initial.set_edge(corpus.types[i], corpus.types[j], 0.0);
    auto [tester, index] = make_tester(corpus, cfg.ci_test, cfg.significance);
    ci::PruneOptions popts{cfg.ci_test, cfg.significance, cfg.max_cond};
    auto skeleton = ci::ci_prune(tr.initial, tester, index, popts, &tr.ci_removed);

    auto offsets = mean_first_offsets(corpus);
    tr.pruned = TypeGraph(corpus.types);
    for (const auto& e : skeleton.edges()) {
        auto a = orientation.index_of(e.src), b = orientation.index_of(e.dst);
        if (!a || !b) throw DataError("orientation model lacks type " + (a ? e.dst : e.src));
        // alpha(b, a): a excites b, i.e. edge a -> b.
        double forward = orientation.alpha(static_cast<Eigen::Index>(*b), static_cast<Eigen::Index>(*a));
        double backward = orientation.alpha(static_cast<Eigen::Index>(*a), static_cast<Eigen::Index>(*b));
        bool src_first = forward > backward ||
                         (forward == backward && offsets[e.src] <= offsets[e.dst]);
        if (src_first)
            tr.pruned.set_edge(e.src, e.dst, forward);
        else
            tr.pruned.set_edge(e.dst, e.src, backward);
    }
    tr.causal = enforce_dag(tr.pruned, &tr.cycle_removed);
    return tr.causal;
}

struct Hpadm4Config {
    double beta{hawkes::default_beta};
    double rho{hawkes::default_penalty};
    std::size_t max_iter{1000};
    double tol{1e-6};
    double intensity_floor{min_intensity};
};

/// Hawkes fit with rho * (L1 + nuclear) penalty; surviving intensities form the graph.
inline TypeGraph hpadm4_baseline(const Corpus& corpus, const Hpadm4Config& cfg = {}, LearnTrace* trace = nullptr) {
    hawkes::FitOptions opts{cfg.max_iter, cfg.tol, hawkes::Penalty{cfg.rho, cfg.rho}};
    auto [model, report] = hawkes::fit_mle(corpus.sequences, corpus.types, cfg.beta, opts);
    LearnTrace local;
    LearnTrace& tr = trace ? *trace : local;
    tr.initial = intensity_graph(model, cfg.intensity_floor);
    tr.pruned = tr.initial;
    tr.causal = enforce_dag(tr.pruned, &tr.cycle_removed);
    return tr.causal;
}

}  // namespace alarmrca::hpci
