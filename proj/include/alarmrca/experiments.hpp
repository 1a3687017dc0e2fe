#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/cpbe.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/hawkes.hpp"
#include "alarmrca/hpci.hpp"
#include "alarmrca/influence.hpp"
#include "alarmrca/metrics.hpp"
#include "alarmrca/synth.hpp"

namespace alarmrca::experiments {

enum class Learner { hpci, pc_gs, pc_fz, hpadm4 };
enum class Weighter { cpbe, it, pearson, cp, st };

inline const char* to_string(Learner l) {
    switch (l) {
    case Learner::hpci: return "hpci";
    case Learner::pc_gs: return "pc-gs";
    case Learner::pc_fz: return "pc-fz";
    case Learner::hpadm4: return "hpadm4";
    }
    return "?";
}

inline const char* to_string(Weighter w) {
    switch (w) {
    case Weighter::cpbe: return "cpbe";
    case Weighter::it: return "it";
    case Weighter::pearson: return "pearson";
    case Weighter::cp: return "cp";
    case Weighter::st: return "st";
    }
    return "?";
}

inline Learner parse_learner(const std::string& s) {
    if (s == "hpci") return Learner::hpci;
    if (s == "pc-gs") return Learner::pc_gs;
    if (s == "pc-fz") return Learner::pc_fz;
    if (s == "hpadm4") return Learner::hpadm4;
    throw ConfigError("unknown learner '" + s + "' (expected hpci, pc-gs, pc-fz, hpadm4)");
}

inline Weighter parse_weighter(const std::string& s) {
    if (s == "cpbe") return Weighter::cpbe;
    if (s == "it") return Weighter::it;
    if (s == "pearson") return Weighter::pearson;
    if (s == "cp") return Weighter::cp;
    if (s == "st") return Weighter::st;
    throw ConfigError("unknown weighter '" + s + "' (expected cpbe, it, pearson, cp, st)");
}

/// Learner settings shared by every structure run.
struct LearnerSettings {
    hpci::HpciConfig hpci{};
    hpci::PcConfig pc{};
    hpci::Hpadm4Config hpadm4{};
};

/// Runs one learner; `model` is an unpenalized fit of `corpus`, reused for HPCI and for
/// orienting the PC skeletons.
inline TypeGraph learn(Learner l, const Corpus& corpus, const hawkes::HawkesModel& model,
                       const LearnerSettings& s = {}) {
    switch (l) {
    case Learner::hpci: return hpci::hpci_learn(corpus, s.hpci, model);
    case Learner::pc_gs: {
        auto pc = s.pc;
        pc.ci_test = ci::CiTest::g_square;
        return hpci::pc_baseline(corpus, pc, model);
    }
    case Learner::pc_fz: {
        auto pc = s.pc;
        pc.ci_test = ci::CiTest::fisher_z;
        return hpci::pc_baseline(corpus, pc, model);
    }
    case Learner::hpadm4: return hpci::hpadm4_baseline(corpus, s.hpadm4);
    }
    throw ConfigError("unknown learner");
}

/// A simulated corpus together with the ground truth that produced it.
struct SyntheticCorpus {
    synth::GroundTruth truth;
    synth::Simulation simulation;
    Corpus corpus;
};

inline SyntheticCorpus make_synthetic_corpus(const synth::SynthConfig& cfg, double window_seconds) {
    SyntheticCorpus out;
    out.truth = synth::make_ground_truth(cfg);
    out.simulation = synth::simulate_ogata(out.truth, cfg.horizon_seconds, cfg.min_events, cfg.max_events, cfg.rng_seed);
    NetworkTopology topo;
    topo.add_device("sim-0");
    out.corpus = preprocess(synth::to_records(out.simulation.events), topo, window_seconds);
    return out;
}

struct CellKey {
    synth::Range alpha_range;
    std::size_t n_types{0};
    Learner learner{Learner::hpci};
};

struct CellResult {
    CellKey key;
    std::vector<std::uint64_t> seeds;
    std::vector<double> f1;
    std::vector<std::string> failures;
    double seconds{0.0};

    [[nodiscard]] double mean() const {
        return f1.empty() ? 0.0 : std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
    }

    [[nodiscard]] double stddev() const {
        if (f1.size() < 2) return 0.0;
        double m = mean(), s = 0.0;
        for (double x : f1) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(f1.size() - 1));
    }
};

struct Table1Config {
    std::vector<std::size_t> n_types{10, 20, 30};
    std::vector<synth::Range> alpha_ranges{{0.01, 0.05}, {0.05, 0.1}, {0.1, 0.5}, {0.5, 1.0}};
    std::vector<Learner> learners{Learner::pc_gs, Learner::pc_fz, Learner::hpadm4, Learner::hpci};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    synth::SynthConfig base{};
    double window_seconds{default_window_seconds};
    LearnerSettings settings{};
    std::size_t workers{1};
};

/// Runs `jobs` on up to `workers` threads; each job writes only its own slot.
inline void run_parallel(std::size_t n_jobs, std::size_t workers, const std::function<void(std::size_t)>& job) {
    workers = std::max<std::size_t>(1, std::min(workers, n_jobs));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n_jobs; i = next++) job(i);
        });
    for (auto& t : pool) t.join();
}

/// Every (alpha range, N) pair simulates each seed once; all learners share that corpus and
/// its unpenalized fit. Failures are recorded per cell and the run continues.
inline std::vector<CellResult> run_table1(const Table1Config& cfg) {
    struct Block {
        synth::Range range;
        std::size_t n;
    };
    std::vector<Block> blocks;
    for (const auto& r : cfg.alpha_ranges)
        for (auto n : cfg.n_types) blocks.push_back({r, n});

    std::vector<std::vector<CellResult>> per_block(blocks.size());
    run_parallel(blocks.size(), cfg.workers, [&](std::size_t b) {
        auto& cells = per_block[b];
        for (auto l : cfg.learners) cells.push_back({{blocks[b].range, blocks[b].n, l}, {}, {}, {}, 0.0});
        for (auto seed : cfg.seeds) {
            std::optional<SyntheticCorpus> data;
            std::optional<hawkes::HawkesModel> model;
            std::string setup_error;
            try {
                auto sc = cfg.base;
                sc.n_types = blocks[b].n;
                sc.alpha_range = blocks[b].range;
                sc.rng_seed = seed;
                data = make_synthetic_corpus(sc, cfg.window_seconds);
                model = hpci::fit_intensities(data->corpus, cfg.settings.hpci);
            } catch (const std::exception& e) {
                setup_error = e.what();
            }
            for (auto& cell : cells) {
                cell.seeds.push_back(seed);
                if (!setup_error.empty()) {
                    cell.failures.push_back("seed " + std::to_string(seed) + ": " + setup_error);
                    continue;
                }
                auto t0 = std::chrono::steady_clock::now();
                try {
                    auto g = learn(cell.key.learner, data->corpus, *model, cfg.settings);
                    cell.f1.push_back(metrics::structure_metrics(g, data->truth.dag).f1);
                } catch (const std::exception& e) {
                    cell.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
                }
                cell.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        }
    });
    std::vector<CellResult> out;
    for (auto& cells : per_block)
        for (auto& c : cells) out.push_back(std::move(c));
    return out;
}

inline std::string format_range(const synth::Range& r) {
    std::ostringstream os;
    os << "(" << r.low << "," << r.high << ")";
    return os.str();
}

inline std::string table1_csv(const std::vector<CellResult>& cells) {
    std::ostringstream os;
    os << "alpha_low,alpha_high,n_types,learner,mean_f1,std_f1,runs,failures\n";
    os << std::setprecision(6);
    for (const auto& c : cells)
        os << c.key.alpha_range.low << ',' << c.key.alpha_range.high << ',' << c.key.n_types << ','
           << to_string(c.key.learner) << ',' << c.mean() << ',' << c.stddev() << ',' << c.f1.size() << ','
           << c.failures.size() << '\n';
    return os.str();
}

/// Rows (alpha, N), one column per learner, "mean+-std" cells.
inline std::string table1_text(const std::vector<CellResult>& cells) {
    std::vector<Learner> learners;
    std::vector<std::pair<std::string, std::size_t>> rows;
    std::map<std::pair<std::pair<std::string, std::size_t>, Learner>, const CellResult*> lookup;
    for (const auto& c : cells) {
        if (std::find(learners.begin(), learners.end(), c.key.learner) == learners.end())
            learners.push_back(c.key.learner);
        std::pair<std::string, std::size_t> row{format_range(c.key.alpha_range), c.key.n_types};
        if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
        lookup[{row, c.key.learner}] = &c;
    }
    std::ostringstream os;
    os << std::left << std::setw(14) << "alpha" << std::setw(5) << "N";
    for (auto l : learners) os << std::setw(17) << to_string(l);
    os << '\n';
    for (const auto& row : rows) {
        os << std::setw(14) << row.first << std::setw(5) << row.second;
        for (auto l : learners) {
            std::ostringstream cell;
            auto it = lookup.find({row, l});
            if (it == lookup.end() || it->second->f1.empty())
                cell << "n/a";
            else
                cell << std::fixed << std::setprecision(3) << it->second->mean() << "+-" << it->second->stddev();
            os << std::setw(17) << cell.str();
        }
        os << '\n';
    }
    return os.str();
}

struct RcaMetrics {
    std::map<std::size_t, double> per_k;
    std::size_t n_transactions{0};
};

/// Fraction of labeled windows whose root type is among the first K ranked entries.
/// Windows without a ranking count as misses.
inline RcaMetrics rca_accuracy(const std::vector<influence::RankedAlarms>& rankings,
                               const std::map<std::size_t, AlarmType>& labels, const std::vector<std::size_t>& ks) {
    std::map<std::size_t, const influence::RankedAlarms*> by_window;
    for (const auto& r : rankings) by_window[r.window_id] = &r;
    RcaMetrics m;
    m.n_transactions = labels.size();
    for (auto k : ks) {
        std::size_t hits = 0;
        for (const auto& [window, root] : labels) {
            auto it = by_window.find(window);
            if (it == by_window.end()) continue;
            const auto& entries = it->second->entries;
            for (std::size_t i = 0; i < std::min(k, entries.size()); ++i)
                if (entries[i].type == root) {
                    ++hits;
                    break;
                }
        }
        m.per_k[k] = labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
    }
    return m;
}

/// Expected top-1 accuracy of picking one alarm type uniformly at random per labeled window.
inline double uniform_choice_accuracy(const std::vector<AlarmTransaction>& transactions,
                                      const std::map<std::size_t, AlarmType>& labels) {
    if (labels.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& txn : transactions)
        if (labels.count(txn.window_id) && !txn.entries.empty()) sum += 1.0 / static_cast<double>(txn.entries.size());
    return sum / static_cast<double>(labels.size());
}

struct RcaConfig {
    synth::SynthConfig synth{};
    double window_seconds{default_window_seconds};
    std::vector<Weighter> weighters{Weighter::it, Weighter::pearson, Weighter::cp, Weighter::st, Weighter::cpbe};
    std::vector<std::size_t> ks{1, 2, 3, 4, 5};
    LearnerSettings settings{};
    cpbe::CpbeOptions cpbe{};
    influence::IrieConfig irie{};
};

inline TypeGraph weigh(Weighter w, const TypeGraph& causal, const Corpus& corpus, const hawkes::HawkesModel& model,
                       const cpbe::CpbeOptions& opts) {
    switch (w) {
    case Weighter::cpbe: return cpbe::cpbe_weights(corpus.transactions, causal, opts).influence;
    case Weighter::it: return cpbe::baseline_weights(causal, corpus.transactions, cpbe::BaselineWeighter::it, &model);
    case Weighter::pearson:
        return cpbe::baseline_weights(causal, corpus.transactions, cpbe::BaselineWeighter::pearson);
    case Weighter::cp: return cpbe::baseline_weights(causal, corpus.transactions, cpbe::BaselineWeighter::cp);
    case Weighter::st: return cpbe::baseline_weights(causal, corpus.transactions, cpbe::BaselineWeighter::st);
    }
    throw ConfigError("unknown weighter");
}

inline std::vector<influence::RankedAlarms> rank_all(const std::vector<AlarmTransaction>& transactions,
                                                     const TypeGraph& influence_graph, std::size_t k,
                                                     const influence::IrieConfig& cfg) {
    std::vector<influence::RankedAlarms> out;
    out.reserve(transactions.size());
    for (const auto& txn : transactions) out.push_back(influence::rank_transaction(txn, influence_graph, k, cfg));
    return out;
}

struct RcaReport {
    std::map<Weighter, RcaMetrics> accuracy;
    double uniform_baseline{0.0};
    std::size_t labeled{0};
    TypeGraph causal;
    TypeGraph truth;
};

/// Learns the causal graph with HPCI, weighs it with every selected weighter, ranks each
/// transaction with IRIE and scores top-K against `labels`.
inline RcaReport run_rca_on_corpus(const Corpus& corpus, const std::map<std::size_t, AlarmType>& labels,
                                   const RcaConfig& cfg) {
    auto model = hpci::fit_intensities(corpus, cfg.settings.hpci);
    RcaReport rep;
    rep.causal = hpci::hpci_learn(corpus, cfg.settings.hpci, model);
    rep.labeled = labels.size();
    rep.uniform_baseline = uniform_choice_accuracy(corpus.transactions, labels);
    std::size_t kmax = cfg.ks.empty() ? 1 : *std::max_element(cfg.ks.begin(), cfg.ks.end());
    for (auto w : cfg.weighters) {
        auto g = weigh(w, rep.causal, corpus, model, cfg.cpbe);
        rep.accuracy[w] = rca_accuracy(rank_all(corpus.transactions, g, kmax, cfg.irie), labels, cfg.ks);
    }
    return rep;
}

/// Planted-root evaluation on a simulated corpus.
inline RcaReport run_rca_experiment(const RcaConfig& cfg) {
    auto data = make_synthetic_corpus(cfg.synth, cfg.window_seconds);
    auto rep = run_rca_on_corpus(data.corpus, synth::planted_roots(data.corpus.transactions, data.truth.dag), cfg);
    rep.truth = data.truth.dag;
    return rep;
}

inline std::string rca_text(const RcaReport& rep, const std::vector<std::size_t>& ks) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "method";
    for (auto k : ks) os << std::setw(9) << ("K=" + std::to_string(k));
    os << '\n' << std::fixed << std::setprecision(3);
    for (const auto& [w, m] : rep.accuracy) {
        os << std::setw(10) << to_string(w);
        for (auto k : ks) os << std::setw(9) << m.per_k.at(k);
        os << '\n';
    }
    os << "labeled transactions: " << rep.labeled << ", uniform-choice top-1: " << rep.uniform_baseline << '\n';
    return os.str();
}

}  // namespace alarmrca::experiments
