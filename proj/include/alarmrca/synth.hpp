#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"
#include "alarmrca/hawkes.hpp"

namespace alarmrca::synth {

using hawkes::HawkesModel;

struct Range {
    double low{0.0};
    double high{0.0};

    [[nodiscard]] bool valid() const { return 0.0 < low && low < high && std::isfinite(high); }
};

inline constexpr double fourteen_days = 14.0 * 24.0 * 3600.0;

/// How a sampled alpha value maps onto the kernel alpha * exp(-beta * t).
/// kernel_amplitude: the sample is the amplitude itself (branching ratio sample / beta).
/// branching_ratio: the sample is the kernel's integral, so the amplitude is sample * beta.
enum class AlphaScale { kernel_amplitude, branching_ratio };

struct SynthConfig {
    std::size_t n_types{20};
    double avg_out_degree{1.5};
    Range alpha_range{0.1, 0.5};
    Range mu_range{0.001, 0.005};
    double beta{hawkes::default_beta};
    double horizon_seconds{fourteen_days};
    std::size_t min_events{10000};
    std::size_t max_events{200000};
    std::uint64_t rng_seed{1};
    AlphaScale alpha_scale{AlphaScale::branching_ratio};

    void validate() const {
        if (n_types == 0) throw ConfigError("synthetic corpus needs at least one type");
        if (!alpha_range.valid()) throw ConfigError("alpha range must satisfy 0 < low < high");
        if (!mu_range.valid()) throw ConfigError("mu range must satisfy 0 < low < high");
        if (!(beta > 0.0)) throw ConfigError("beta must be positive");
        if (!(horizon_seconds >= 0.0)) throw ConfigError("horizon must be nonnegative");
        if (avg_out_degree < 0.0) throw ConfigError("average out-degree must be nonnegative");
        if (max_events < min_events) throw ConfigError("max_events must be at least min_events");
    }
};

/// Zero-padded type names ("E00", "E01", ...) so lexicographic order is numeric order.
inline std::vector<AlarmType> synthetic_types(std::size_t n) {
    std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
    std::vector<AlarmType> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto s = std::to_string(i);
        out.push_back("E" + std::string(width - s.size(), '0') + s);
    }
    return out;
}

/// Random DAG with round(d * N) edges: a uniform random permutation fixes the topological
/// order and the edges are a uniform sample of the earlier->later pairs.
inline TypeGraph random_dag(std::size_t n, double avg_out_degree, std::uint64_t seed) {
    auto names = synthetic_types(n);
    auto m = static_cast<std::size_t>(std::llround(avg_out_degree * static_cast<double>(n)));
    std::size_t max_edges = n * (n - (n > 0 ? 1 : 0)) / 2;
    if (m > max_edges)
        throw ConfigError("requested " + std::to_string(m) + " edges but a DAG on " + std::to_string(n) +
                          " nodes holds at most " + std::to_string(max_edges));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(max_edges);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(order[i], order[j]);
    // Partial Fisher-Yates: the first m entries are a uniform sample without replacement.
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pairs.size() - 1);
        std::swap(pairs[i], pairs[pick(rng)]);
    }
    TypeGraph g(names);
    for (std::size_t i = 0; i < m; ++i) g.set_edge(names[pairs[i].first], names[pairs[i].second], 1.0);
    return g;
}

struct GroundTruth {
    TypeGraph dag;
    HawkesModel model;
    double spectral_radius{0.0};
    /// Largest single-edge branching ratio alpha / beta.
    double max_branching_ratio{0.0};
    /// True when the spectral radius or some single edge's branching ratio reaches 1.
    bool supercritical_warning{false};
};

/// Draws alpha uniformly on every DAG edge and mu uniformly per type. The DAG edge src -> dst
/// becomes alpha(dst, src): dst is excited by src. Edge weights of the returned DAG are the
/// kernel amplitudes.
inline GroundTruth assign_parameters(const TypeGraph& dag, Range alpha_range, Range mu_range, double beta,
                                     std::uint64_t seed, AlphaScale scale = AlphaScale::kernel_amplitude) {
    if (!alpha_range.valid() || !mu_range.valid()) throw ConfigError("parameter ranges must satisfy 0 < low < high");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> alpha_dist(alpha_range.low, alpha_range.high);
    std::uniform_real_distribution<double> mu_dist(mu_range.low, mu_range.high);

    GroundTruth gt;
    gt.model = HawkesModel::zeros(dag.nodes(), beta);
    for (Eigen::Index u = 0; u < gt.model.mu.size(); ++u) gt.model.mu(u) = mu_dist(rng);
    gt.dag = TypeGraph(dag.nodes());
    for (const auto& e : dag.edges()) {
        double a = alpha_dist(rng) * (scale == AlphaScale::branching_ratio ? beta : 1.0);
        auto src = static_cast<Eigen::Index>(*dag.index_of(e.src));
        auto dst = static_cast<Eigen::Index>(*dag.index_of(e.dst));
        gt.model.alpha(dst, src) = a;
        gt.dag.set_edge(e.src, e.dst, a);
    }
    gt.spectral_radius = hawkes::spectral_radius(gt.model);
    gt.max_branching_ratio = gt.model.alpha.size() ? gt.model.alpha.maxCoeff() / beta : 0.0;
    gt.supercritical_warning = gt.spectral_radius >= 1.0 || gt.max_branching_ratio >= 1.0;
    return gt;
}

inline GroundTruth make_ground_truth(const SynthConfig& cfg) {
    cfg.validate();
    auto dag = random_dag(cfg.n_types, cfg.avg_out_degree, cfg.rng_seed);
    return assign_parameters(dag, cfg.alpha_range, cfg.mu_range, cfg.beta, cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL,
                             cfg.alpha_scale);
}

/// Expected number of events on [0, T] for a stationary model, (I - A/beta)^-1 mu * T.
/// Infinite when the spectral radius is at least 1.
inline double expected_event_count(const HawkesModel& model, double horizon) {
    if (hawkes::spectral_radius(model) >= 1.0) return std::numeric_limits<double>::infinity();
    const auto u = static_cast<Eigen::Index>(model.dimension());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(u, u) - model.alpha / model.beta;
    return m.partialPivLu().solve(model.mu).sum() * horizon;
}

enum class CapPolicy { truncate, fail };

struct Simulation {
    /// Single stream on [0, horizon); window_id 0, component 0.
    AlarmSequence events;
    bool truncated{false};
    std::size_t attempts{1};
};

namespace detail {

inline AlarmSequence ogata_once(const HawkesModel& model, double horizon, std::size_t max_events,
                                std::uint64_t seed, bool& capped) {
    const auto dim = static_cast<Eigen::Index>(model.dimension());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double mu_total = model.mu.sum();
    const Eigen::RowVectorXd col_sums = model.alpha.colwise().sum();

    AlarmSequence seq;
    seq.start = 0.0;
    seq.end = horizon;
    capped = false;
    Eigen::VectorXd state = Eigen::VectorXd::Zero(dim);  // decayed counts per source type
    double t = 0.0;
    double bound = mu_total;
    while (true) {
        if (!(bound > 0.0)) break;
        std::exponential_distribution<double> wait(bound);
        double cand = t + wait(rng);
        if (cand >= horizon) break;
        state *= std::exp(-model.beta * (cand - t));
        t = cand;
        double total = mu_total + col_sums.dot(state);
        if (unif(rng) * bound <= total) {
            Eigen::VectorXd lambda = model.mu + model.alpha * state;
            double pick = unif(rng) * lambda.sum();
            Eigen::Index u = 0;
            for (; u < dim - 1; ++u) {
                pick -= lambda(u);
                if (pick < 0.0) break;
            }
            seq.events.push_back({model.types[static_cast<std::size_t>(u)], t});
            state(u) += 1.0;
            total += col_sums(u);
            if (seq.events.size() >= max_events) {
                capped = true;
                break;
            }
        }
        // Intensities only decay until the next event, so the current total bounds them.
        bound = total;
    }
    return seq;
}

}  // namespace detail

/// Ogata thinning on [0, horizon). Retries with seeds seed+1, seed+2, ... (10 attempts in total)
/// while fewer than `min_events` events are produced. Reaching `max_events` either truncates the
/// horizon at the last event or fails, depending on `policy`.
inline Simulation simulate_ogata(const GroundTruth& gt, double horizon, std::size_t min_events,
                                 std::size_t max_events, std::uint64_t seed, CapPolicy policy = CapPolicy::truncate) {
    gt.model.validate();
    Simulation sim;
    if (!(horizon > 0.0)) {
        sim.events.end = 0.0;
        return sim;
    }
    constexpr std::size_t max_attempts = 10;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        bool capped = false;
        auto seq = detail::ogata_once(gt.model, horizon, max_events, seed + attempt, capped);
        if (capped) {
            if (policy == CapPolicy::fail) {
                std::ostringstream msg;
                msg << "simulation exceeded " << max_events << " events (spectral radius " << gt.spectral_radius
                    << ", max branching ratio " << gt.max_branching_ratio << ")";
                throw NumericalError(msg.str());
            }
            seq.end = std::nextafter(seq.events.back().time, std::numeric_limits<double>::infinity());
            sim.truncated = true;
        }
        sim.attempts = attempt + 1;
        if (seq.events.size() >= min_events) {
            sim.events = std::move(seq);
            return sim;
        }
    }
    throw DataError("simulation produced fewer than " + std::to_string(min_events) + " events after " +
                    std::to_string(max_attempts) + " attempts");
}

/// Converts a simulated stream into alarm records on the single synthetic device "sim-0".
inline std::vector<AlarmRecord> to_records(const AlarmSequence& stream) {
    std::vector<AlarmRecord> out;
    out.reserve(stream.events.size());
    for (const auto& ev : stream.events) out.push_back({"sim-0", ev.type, ev.time});
    return out;
}

/// Planted root per window: among the window's types, those with no ground-truth parent also
/// present in the window; the one with the earliest first occurrence wins (type id on ties).
inline std::map<std::size_t, AlarmType> planted_roots(const std::vector<AlarmTransaction>& transactions,
                                                      const TypeGraph& dag) {
    std::map<AlarmType, std::vector<AlarmType>> parents;
    for (const auto& e : dag.edges()) parents[e.dst].push_back(e.src);
    std::map<std::size_t, AlarmType> out;
    for (const auto& txn : transactions) {
        const AlarmType* best = nullptr;
        double best_time = 0.0;
        for (const auto& [type, entry] : txn.entries) {
            bool has_parent = false;
            for (const auto& p : parents[type])
                if (txn.entries.count(p)) has_parent = true;
            if (has_parent) continue;
            if (!best || entry.first_time < best_time) {
                best = &type;
                best_time = entry.first_time;
            }
        }
        if (best) out[txn.window_id] = *best;
    }
    return out;
}

}  // namespace alarmrca::synth
