#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"
#include "alarmrca/hawkes.hpp"
#include "alarmrca/stats.hpp"

namespace alarmrca::cpbe {

/// Induced subgraph of a type graph on the alarm types of one transaction.
struct PropagationGraph {
    std::size_t window_id{0};
    TypeGraph graph;
};

inline PropagationGraph construct_propagation_graph(const AlarmTransaction& txn, const TypeGraph& parent) {
    return {txn.window_id, induced_subgraph(parent, txn.types())};
}

enum class Traversal { random_walk, dfs, bfs };

struct ContextOptions {
    Traversal strategy{Traversal::random_walk};
    std::size_t walks_per_node{10};
    /// Maximum number of nodes in one random walk.
    std::size_t walk_length{10};
    std::uint64_t rng_seed{1};
};

using Sentence = std::vector<AlarmType>;

struct ContextCorpus {
    std::vector<Sentence> sentences;
};

/// Generator for one propagation graph, derived from (seed, window id).
inline std::mt19937_64 window_rng(std::uint64_t seed, std::size_t window_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(window_id), static_cast<std::uint32_t>(std::uint64_t{window_id} >> 32)};
    return std::mt19937_64(seq);
}

namespace detail {

inline Sentence traverse(const IndexedGraph& g, std::size_t root, Traversal strategy) {
    Sentence out;
    std::vector<bool> seen(g.size(), false);
    if (strategy == Traversal::bfs) {
        std::deque<std::size_t> queue{root};
        seen[root] = true;
        while (!queue.empty()) {
            auto u = queue.front();
            queue.pop_front();
            out.push_back(g.names[u]);
            for (const auto& arc : g.out[u])
                if (!seen[arc.to]) {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
        }
        return out;
    }
    // Preorder DFS; children pushed in reverse so the smallest type id is visited first.
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        if (seen[u]) continue;
        seen[u] = true;
        out.push_back(g.names[u]);
        for (auto it = g.out[u].rbegin(); it != g.out[u].rend(); ++it)
            if (!seen[it->to]) stack.push_back(it->to);
    }
    return out;
}

}  // namespace detail

/// Node-specific contexts: every sentence starts at its node and follows outgoing edges only.
/// Random walks pick uniformly among out-neighbours and stop early at sinks.
inline ContextCorpus generate_contexts(const PropagationGraph& pg, const ContextOptions& opts) {
    if (opts.walk_length < 1) throw ConfigError("walk length must be at least 1");
    IndexedGraph g(pg.graph);
    ContextCorpus corpus;
    if (opts.strategy != Traversal::random_walk) {
        for (std::size_t u = 0; u < g.size(); ++u) corpus.sentences.push_back(detail::traverse(g, u, opts.strategy));
        return corpus;
    }
    auto rng = window_rng(opts.rng_seed, pg.window_id);
    for (std::size_t u = 0; u < g.size(); ++u)
        for (std::size_t w = 0; w < opts.walks_per_node; ++w) {
            Sentence s{g.names[u]};
            std::size_t cur = u;
            while (s.size() < opts.walk_length && !g.out[cur].empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, g.out[cur].size() - 1);
                cur = g.out[cur][pick(rng)].to;
                s.push_back(g.names[cur]);
            }
            corpus.sentences.push_back(std::move(s));
        }
    return corpus;
}

/// Contexts of every transaction's propagation graph, pooled in transaction order.
inline ContextCorpus build_corpus(const std::vector<AlarmTransaction>& transactions, const TypeGraph& causal,
                                  const ContextOptions& opts) {
    ContextCorpus all;
    for (const auto& txn : transactions) {
        auto part = generate_contexts(construct_propagation_graph(txn, causal), opts);
        for (auto& s : part.sentences) all.sentences.push_back(std::move(s));
    }
    return all;
}

struct SkipGramOptions {
    std::size_t dimension{16};
    std::size_t context_window{2};
    std::size_t negatives{5};
    std::size_t epochs{5};
    double learning_rate{0.025};
    std::uint64_t rng_seed{1};
};

struct EmbeddingTable {
    std::size_t dimension{0};
    std::map<AlarmType, std::vector<double>> vectors;
    /// Set when the corpus has a single type and there is nothing to contrast against.
    bool degenerate{false};
    /// Mean negative-sampling loss per training pair, one value per epoch.
    std::vector<double> epoch_loss;
};

/// Skip-gram with negative sampling, trained by SGD with a linearly decaying learning rate.
/// Noise words are drawn from the unigram distribution raised to 0.75. Returns input vectors.
inline EmbeddingTable train_skipgram(const ContextCorpus& corpus, const SkipGramOptions& opts) {
    if (opts.dimension < 1) throw ConfigError("embedding dimension must be at least 1");
    if (opts.context_window < 1) throw ConfigError("context window must be at least 1");
    std::map<AlarmType, std::size_t> vocab;
    std::vector<double> freq;
    std::vector<std::vector<std::size_t>> sentences;
    for (const auto& s : corpus.sentences) {
        if (s.empty()) continue;
        std::vector<std::size_t> ids;
        for (const auto& w : s) {
            auto [it, inserted] = vocab.try_emplace(w, vocab.size());
            if (inserted) freq.push_back(0.0);
            freq[it->second] += 1.0;
            ids.push_back(it->second);
        }
        sentences.push_back(std::move(ids));
    }
    if (vocab.empty()) throw DataError("cannot train embeddings on an empty corpus");

    const std::size_t dim = opts.dimension, n_words = vocab.size();
    std::mt19937_64 rng(opts.rng_seed);
    std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(dim), 0.5 / static_cast<double>(dim));
    std::vector<double> in(n_words * dim), out(n_words * dim, 0.0);
    for (auto& x : in) x = init(rng);
    std::vector<double> noise_weights(n_words);
    for (std::size_t i = 0; i < n_words; ++i) noise_weights[i] = std::pow(freq[i], 0.75);
    std::discrete_distribution<std::size_t> noise(noise_weights.begin(), noise_weights.end());

    std::size_t positions = 0;
    for (const auto& s : sentences) positions += s.size();
    const double total_steps = static_cast<double>(positions * opts.epochs);
    const double min_lr = opts.learning_rate * 1e-4;
    auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

    EmbeddingTable table;
    table.dimension = dim;
    table.degenerate = n_words < 2;
    std::vector<double> grad(dim);
    double step = 0.0;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        double loss = 0.0;
        std::size_t pairs = 0;
        for (const auto& s : sentences) {
            for (std::size_t i = 0; i < s.size(); ++i, step += 1.0) {
                double lr = std::max(min_lr, opts.learning_rate * (1.0 - step / total_steps));
                std::size_t lo = i >= opts.context_window ? i - opts.context_window : 0;
                std::size_t hi = std::min(s.size() - 1, i + opts.context_window);
                double* center = &in[s[i] * dim];
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    std::fill(grad.begin(), grad.end(), 0.0);
                    for (std::size_t k = 0; k <= opts.negatives; ++k) {
                        std::size_t target;
                        double label;
                        if (k == 0) {
                            target = s[j];
                            label = 1.0;
                        } else {
                            target = noise(rng);
                            if (target == s[j]) continue;
                            label = 0.0;
                        }
                        double* ctx = &out[target * dim];
                        double dot = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) dot += center[d] * ctx[d];
                        double sig = sigmoid(dot);
                        loss -= label > 0.0 ? std::log(std::max(sig, 1e-300)) : std::log(std::max(1.0 - sig, 1e-300));
                        double g = lr * (label - sig);
                        for (std::size_t d = 0; d < dim; ++d) {
                            grad[d] += g * ctx[d];
                            ctx[d] += g * center[d];
                        }
                    }
                    for (std::size_t d = 0; d < dim; ++d) center[d] += grad[d];
                    ++pairs;
                }
            }
        }
        table.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
    }
    for (const auto& [word, id] : vocab) table.vectors[word].assign(in.begin() + id * dim, in.begin() + (id + 1) * dim);
    return table;
}

struct WeightingReport {
    /// Edges whose negative cosine was clamped to 0.
    std::size_t clamped{0};
    /// Edges touching a zero vector.
    std::size_t degenerate{0};
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

/// Edge weight max(0, cos(Z_src, Z_dst)); the structure is unchanged.
inline TypeGraph cosine_weights(const TypeGraph& graph, const EmbeddingTable& emb, WeightingReport* report = nullptr) {
    TypeGraph out(graph.nodes());
    WeightingReport local;
    WeightingReport& rep = report ? *report : local;
    for (const auto& e : graph.edges()) {
        auto a = emb.vectors.find(e.src), b = emb.vectors.find(e.dst);
        if (a == emb.vectors.end() || b == emb.vectors.end())
            throw DataError("no embedding for edge " + e.src + "->" + e.dst);
        bool zero = std::all_of(a->second.begin(), a->second.end(), [](double x) { return x == 0.0; }) ||
                    std::all_of(b->second.begin(), b->second.end(), [](double x) { return x == 0.0; });
        double c = cosine(a->second, b->second);
        if (zero) ++rep.degenerate;
        if (c < 0.0) {
            ++rep.clamped;
            c = 0.0;
        }
        out.set_edge(e.src, e.dst, std::min(c, 1.0));
    }
    return out;
}

struct CpbeOptions {
    ContextOptions contexts{};
    SkipGramOptions skipgram{};
};

struct CpbeResult {
    TypeGraph influence;
    EmbeddingTable embeddings;
    WeightingReport report;
    std::size_t sentences{0};
};

/// Full weighting pass: pooled propagation-graph contexts -> skip-gram -> cosine edge weights.
/// Types of the causal graph that never appear in a context get a zero vector.
inline CpbeResult cpbe_weights(const std::vector<AlarmTransaction>& transactions, const TypeGraph& causal,
                               const CpbeOptions& opts = {}) {
    auto corpus = build_corpus(transactions, causal, opts.contexts);
    CpbeResult res;
    res.sentences = corpus.sentences.size();
    if (corpus.sentences.empty()) throw DataError("no transactions to build contexts from");
    res.embeddings = train_skipgram(corpus, opts.skipgram);
    for (const auto& n : causal.nodes())
        res.embeddings.vectors.try_emplace(n, std::vector<double>(res.embeddings.dimension, 0.0));
    res.influence = cosine_weights(causal, res.embeddings, &res.report);
    return res;
}

enum class BaselineWeighter { it, pearson, cp, st };

/// Reference edge weighters. `it` needs the fitted intensities (falls back to the graph's own
/// weights when `model` is null); the others count over the transactions.
inline TypeGraph baseline_weights(const TypeGraph& graph, const std::vector<AlarmTransaction>& transactions,
                                  BaselineWeighter method, const hawkes::HawkesModel* model = nullptr) {
    TypeGraph out(graph.nodes());
    auto edges = graph.edges();
    switch (method) {
    case BaselineWeighter::it: {
        std::vector<double> w;
        for (const auto& e : edges) {
            double a = e.weight;
            if (model) {
                auto s = model->index_of(e.src), d = model->index_of(e.dst);
                a = (s && d) ? model->alpha(static_cast<Eigen::Index>(*d), static_cast<Eigen::Index>(*s)) : 0.0;
            }
            w.push_back(a);
        }
        double mx = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
        for (std::size_t i = 0; i < edges.size(); ++i)
            out.set_edge(edges[i].src, edges[i].dst, mx > 0.0 ? w[i] / mx : 0.0);
        break;
    }
    case BaselineWeighter::pearson: {
        auto series = occurrence_series(transactions, graph.nodes());
        std::map<AlarmType, std::vector<double>> data;
        for (const auto& s : series) data[s.alarm_type].assign(s.counts.begin(), s.counts.end());
        for (const auto& e : edges) {
            double r = transactions.empty() ? 0.0 : stats::pearson(data[e.src], data[e.dst]);
            out.set_edge(e.src, e.dst, std::isnan(r) ? 0.0 : std::min(std::abs(r), 1.0));
        }
        break;
    }
    case BaselineWeighter::cp:
    case BaselineWeighter::st:
        for (const auto& e : edges) {
            std::size_t with_u = 0, hits = 0;
            for (const auto& txn : transactions) {
                auto u = txn.entries.find(e.src);
                if (u == txn.entries.end()) continue;
                ++with_u;
                auto v = txn.entries.find(e.dst);
                if (v == txn.entries.end()) continue;
                if (method == BaselineWeighter::cp || u->second.first_time < v->second.first_time) ++hits;
            }
            out.set_edge(e.src, e.dst, with_u ? static_cast<double>(hits) / static_cast<double>(with_u) : 0.0);
        }
        break;
    }
    return out;
}

}  // namespace alarmrca::cpbe
