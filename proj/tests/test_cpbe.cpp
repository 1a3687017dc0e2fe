#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "alarmrca/cpbe.hpp"
#include "support.hpp"

using namespace alarmrca;
using cpbe::Traversal;

namespace {

AlarmTransaction txn_of(std::size_t window, std::initializer_list<std::pair<const char*, double>> items) {
    AlarmTransaction t;
    t.window_id = window;
    for (const auto& [type, time] : items) t.entries[type] = {time, 1};
    return t;
}

cpbe::PropagationGraph star() {
    TypeGraph g;
    g.set_edge("A", "B", 1);
    g.set_edge("A", "C", 1);
    g.set_edge("A", "D", 1);
    return {0, g};
}

/// Sentences drawn as shuffles of one of two disjoint groups.
cpbe::ContextCorpus two_groups(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<AlarmType>> groups{{"A", "B", "C"}, {"X", "Y", "Z"}};
    cpbe::ContextCorpus c;
    for (std::size_t i = 0; i < n; ++i) {
        auto s = groups[i % 2];
        std::shuffle(s.begin(), s.end(), rng);
        c.sentences.push_back(s);
    }
    return c;
}

bool is_walk(const cpbe::Sentence& s, const TypeGraph& g) {
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!g.has_edge(s[i - 1], s[i])) return false;
    return true;
}

}  // namespace

TEST(PropagationGraph, InducedOnTransactionTypes) {
    TypeGraph parent;
    parent.set_edge("A", "B", 0.5);
    parent.set_edge("B", "C", 0.7);
    auto pg = cpbe::construct_propagation_graph(txn_of(3, {{"A", 1}, {"B", 2}}), parent);
    EXPECT_EQ(pg.window_id, 3u);
    EXPECT_EQ(pg.graph.nodes(), (std::vector<AlarmType>{"A", "B"}));
    ASSERT_EQ(pg.graph.edge_count(), 1u);
    EXPECT_EQ(pg.graph.weight("A", "B"), 0.5);
}

TEST(PropagationGraph, SingleTypeAndUnknownTypeAreIsolated) {
    TypeGraph parent;
    parent.set_edge("A", "B", 1);
    auto one = cpbe::construct_propagation_graph(txn_of(0, {{"A", 1}}), parent);
    EXPECT_EQ(one.graph.node_count(), 1u);
    EXPECT_EQ(one.graph.edge_count(), 0u);
    auto unknown = cpbe::construct_propagation_graph(txn_of(0, {{"A", 1}, {"Q", 2}}), parent);
    EXPECT_TRUE(unknown.graph.has_node("Q"));
    EXPECT_EQ(unknown.graph.edge_count(), 0u);
}

TEST(PropagationGraph, FullCoverEqualsParent) {
    TypeGraph parent;
    parent.set_edge("A", "B", 0.1);
    parent.set_edge("B", "C", 0.2);
    parent.set_edge("A", "C", 0.3);
    auto pg = cpbe::construct_propagation_graph(txn_of(0, {{"A", 1}, {"B", 1}, {"C", 1}}), parent);
    EXPECT_EQ(pg.graph.nodes(), parent.nodes());
    EXPECT_EQ(pg.graph.edges(), parent.edges());
}

TEST(PropagationGraph, MatchesBruteForceFilter) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto parent = testsupport::random_digraph(rng, 12, 0.25);
        AlarmTransaction txn;
        std::bernoulli_distribution keep(0.5);
        for (const auto& n : parent.nodes())
            if (keep(rng)) txn.entries[n] = {0.0, 1};
        auto pg = cpbe::construct_propagation_graph(txn, parent);
        std::vector<Edge> expected;
        for (const auto& e : parent.edges())
            if (txn.entries.count(e.src) && txn.entries.count(e.dst)) expected.push_back(e);
        EXPECT_EQ(pg.graph.edges(), expected);
        EXPECT_EQ(pg.graph.node_count(), txn.entries.size());
    }
}

TEST(Contexts, ChainDfsAndBfs) {
    TypeGraph g;
    g.set_edge("A", "B", 1);
    g.set_edge("B", "C", 1);
    for (auto strategy : {Traversal::dfs, Traversal::bfs}) {
        auto c = cpbe::generate_contexts({0, g}, {.strategy = strategy});
        ASSERT_EQ(c.sentences.size(), 3u);
        EXPECT_EQ(c.sentences[0], (cpbe::Sentence{"A", "B", "C"}));
        EXPECT_EQ(c.sentences[1], (cpbe::Sentence{"B", "C"}));
        EXPECT_EQ(c.sentences[2], (cpbe::Sentence{"C"}));
    }
}

TEST(Contexts, DfsAndBfsOrderDiffer) {
    TypeGraph g;
    g.set_edge("A", "B", 1);
    g.set_edge("A", "C", 1);
    g.set_edge("B", "D", 1);
    auto dfs = cpbe::generate_contexts({0, g}, {.strategy = Traversal::dfs});
    auto bfs = cpbe::generate_contexts({0, g}, {.strategy = Traversal::bfs});
    EXPECT_EQ(dfs.sentences[0], (cpbe::Sentence{"A", "B", "D", "C"}));
    EXPECT_EQ(bfs.sentences[0], (cpbe::Sentence{"A", "B", "C", "D"}));
}

TEST(Contexts, SinkGivesSingleton) {
    TypeGraph g;
    g.add_node("u");
    auto c = cpbe::generate_contexts({0, g}, {.walks_per_node = 3});
    ASSERT_EQ(c.sentences.size(), 3u);
    for (const auto& s : c.sentences) EXPECT_EQ(s, (cpbe::Sentence{"u"}));
}

TEST(Contexts, StarWalkIsUniform) {
    auto c = cpbe::generate_contexts(star(), {.walks_per_node = 10000, .walk_length = 2, .rng_seed = 5});
    std::map<AlarmType, double> hits;
    double from_a = 0;
    for (const auto& s : c.sentences)
        if (s.front() == "A") {
            ASSERT_EQ(s.size(), 2u);
            hits[s[1]] += 1;
            from_a += 1;
        }
    ASSERT_EQ(from_a, 10000);
    for (const auto* t : {"B", "C", "D"}) EXPECT_NEAR(hits[t] / from_a, 1.0 / 3.0, 0.05) << t;
}

TEST(Contexts, SentencesAreWalksFromTheirNode) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = testsupport::random_digraph(rng, 10, 0.3);
        for (auto strategy : {Traversal::random_walk, Traversal::dfs, Traversal::bfs}) {
            auto c = cpbe::generate_contexts({static_cast<std::size_t>(trial), g},
                                             {.strategy = strategy, .walks_per_node = 3, .walk_length = 6});
            for (const auto& s : c.sentences) {
                ASSERT_FALSE(s.empty());
                if (strategy == Traversal::random_walk) {
                    EXPECT_LE(s.size(), 6u);
                    EXPECT_TRUE(is_walk(s, g));
                }
                // Every node is reachable from the first.
                std::set<AlarmType> reach{s.front()};
                std::vector<AlarmType> todo{s.front()};
                while (!todo.empty()) {
                    auto u = todo.back();
                    todo.pop_back();
                    for (const auto& v : g.out_neighbors(u))
                        if (reach.insert(v).second) todo.push_back(v);
                }
                for (const auto& n : s) EXPECT_TRUE(reach.count(n));
            }
        }
    }
}

TEST(Contexts, ZeroWalkLengthIsConfigError) {
    EXPECT_THROW(cpbe::generate_contexts(star(), {.walk_length = 0}), ConfigError);
}

TEST(Contexts, DeterministicPerWindow) {
    auto a = cpbe::generate_contexts(star(), {.walks_per_node = 50, .rng_seed = 9});
    auto b = cpbe::generate_contexts(star(), {.walks_per_node = 50, .rng_seed = 9});
    EXPECT_EQ(a.sentences, b.sentences);
    auto other = star();
    other.window_id = 1;
    auto c = cpbe::generate_contexts(other, {.walks_per_node = 50, .rng_seed = 9});
    EXPECT_NE(a.sentences, c.sentences);
}

TEST(SkipGram, DefaultsMatchDocumentedValues) {
    cpbe::SkipGramOptions o;
    EXPECT_EQ(o.dimension, 16u);
    EXPECT_EQ(o.context_window, 2u);
    EXPECT_EQ(o.negatives, 5u);
    EXPECT_EQ(o.epochs, 5u);
    EXPECT_DOUBLE_EQ(o.learning_rate, 0.025);
    cpbe::ContextOptions c;
    EXPECT_EQ(c.strategy, Traversal::random_walk);
    EXPECT_EQ(c.walks_per_node, 10u);
    EXPECT_EQ(c.walk_length, 10u);
}

TEST(SkipGram, SeparatesCoOccurringGroups) {
    auto emb = cpbe::train_skipgram(two_groups(1, 4000), {.epochs = 10});
    const auto& v = emb.vectors;
    double same = cpbe::cosine(v.at("A"), v.at("B"));
    double cross = cpbe::cosine(v.at("A"), v.at("X"));
    EXPECT_GT(same, cross);
    EXPECT_GT(cpbe::cosine(v.at("X"), v.at("Z")), cpbe::cosine(v.at("C"), v.at("Z")));
    EXPECT_FALSE(emb.degenerate);
}

TEST(SkipGram, BitwiseDeterministic) {
    auto corpus = two_groups(2, 500);
    auto a = cpbe::train_skipgram(corpus, {.rng_seed = 3});
    auto b = cpbe::train_skipgram(corpus, {.rng_seed = 3});
    EXPECT_EQ(a.vectors, b.vectors);
    auto c = cpbe::train_skipgram(corpus, {.rng_seed = 4});
    EXPECT_NE(a.vectors, c.vectors);
}

TEST(SkipGram, EpochLossNonIncreasingWithinTolerance) {
    auto emb = cpbe::train_skipgram(two_groups(5, 2000), {.epochs = 8});
    ASSERT_EQ(emb.epoch_loss.size(), 8u);
    for (std::size_t e = 1; e < emb.epoch_loss.size(); ++e)
        EXPECT_LE(emb.epoch_loss[e], emb.epoch_loss[e - 1] * 1.05) << "epoch " << e;
    EXPECT_LT(emb.epoch_loss.back(), emb.epoch_loss.front());
}

TEST(SkipGram, VectorsHaveRequestedDimensionAndAreFinite) {
    auto emb = cpbe::train_skipgram(two_groups(6, 200), {.dimension = 7});
    EXPECT_EQ(emb.dimension, 7u);
    EXPECT_EQ(emb.vectors.size(), 6u);
    for (const auto& [t, v] : emb.vectors) {
        ASSERT_EQ(v.size(), 7u);
        for (double x : v) EXPECT_TRUE(std::isfinite(x));
    }
}

TEST(SkipGram, SingleTypeIsDegenerate) {
    cpbe::ContextCorpus c{{{"A"}, {"A", "A"}}};
    auto emb = cpbe::train_skipgram(c, {});
    EXPECT_TRUE(emb.degenerate);
    EXPECT_EQ(emb.vectors.size(), 1u);
}

TEST(SkipGram, InvalidInputs) {
    EXPECT_THROW(cpbe::train_skipgram({}, {}), DataError);
    EXPECT_THROW(cpbe::train_skipgram(two_groups(1, 4), {.dimension = 0}), ConfigError);
    EXPECT_THROW(cpbe::train_skipgram(two_groups(1, 4), {.context_window = 0}), ConfigError);
}

TEST(Cosine, HandValues) {
    EXPECT_NEAR(cpbe::cosine({1, 0}, {1, 1}), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(cpbe::cosine({2, 3}, {2, 3}), 1.0, 1e-15);
    EXPECT_EQ(cpbe::cosine({1, 0}, {0, 1}), 0.0);
}

TEST(CosineWeights, ClampsNegativeAndFlagsZero) {
    TypeGraph g;
    g.set_edge("a", "b", 9);
    g.set_edge("a", "c", 9);
    g.set_edge("a", "z", 9);
    g.set_edge("b", "b2", 9);
    cpbe::EmbeddingTable emb;
    emb.dimension = 2;
    emb.vectors = {{"a", {1, 0}}, {"b", {1, 1}}, {"c", {-1, 0.2}}, {"z", {0, 0}}, {"b2", {1, 1}}};
    cpbe::WeightingReport rep;
    auto w = cpbe::cosine_weights(g, emb, &rep);
    EXPECT_NEAR(*w.weight("a", "b"), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(*w.weight("a", "c"), 0.0);
    EXPECT_EQ(*w.weight("a", "z"), 0.0);
    EXPECT_NEAR(*w.weight("b", "b2"), 1.0, 1e-15);
    EXPECT_EQ(rep.clamped, 1u);
    EXPECT_EQ(rep.degenerate, 1u);
    EXPECT_EQ(w.nodes(), g.nodes());
    EXPECT_EQ(w.edge_count(), g.edge_count());
}

TEST(CosineWeights, MissingEmbeddingIsDataError) {
    TypeGraph g;
    g.set_edge("a", "b", 1);
    cpbe::EmbeddingTable emb;
    emb.vectors = {{"a", {1.0}}};
    EXPECT_THROW(cpbe::cosine_weights(g, emb), DataError);
}

TEST(Cpbe, EndToEndPreservesStructureAndRange) {
    TypeGraph causal;
    causal.set_edge("A", "B", 0.3);
    causal.set_edge("B", "C", 0.2);
    causal.set_edge("X", "Y", 0.1);
    causal.add_node("lonely");
    std::vector<AlarmTransaction> txns;
    for (std::size_t w = 0; w < 200; ++w)
        txns.push_back(w % 2 ? txn_of(w, {{"A", 1}, {"B", 2}, {"C", 3}}) : txn_of(w, {{"X", 1}, {"Y", 2}}));
    auto r = cpbe::cpbe_weights(txns, causal);
    EXPECT_EQ(r.influence.nodes(), causal.nodes());
    EXPECT_EQ(r.influence.edge_count(), causal.edge_count());
    for (const auto& e : r.influence.edges()) {
        EXPECT_TRUE(causal.has_edge(e.src, e.dst));
        EXPECT_GE(e.weight, 0.0);
        EXPECT_LE(e.weight, 1.0);
    }
    EXPECT_EQ(r.embeddings.vectors.at("lonely"), std::vector<double>(16, 0.0));
    EXPECT_GT(r.sentences, 0u);
}

TEST(Baselines, CpRatio) {
    TypeGraph g;
    g.set_edge("u", "v", 1);
    std::vector<AlarmTransaction> txns;
    for (std::size_t w = 0; w < 10; ++w)
        txns.push_back(w < 4 ? txn_of(w, {{"u", 1}, {"v", 2}}) : txn_of(w, {{"u", 1}}));
    txns.push_back(txn_of(10, {{"v", 1}}));
    EXPECT_DOUBLE_EQ(*cpbe::baseline_weights(g, txns, cpbe::BaselineWeighter::cp).weight("u", "v"), 0.4);
}

TEST(Baselines, CpOneWhenAlwaysTogether) {
    TypeGraph g;
    g.set_edge("u", "v", 1);
    std::vector<AlarmTransaction> txns{txn_of(0, {{"u", 1}, {"v", 0}}), txn_of(1, {{"u", 1}, {"v", 5}})};
    EXPECT_EQ(*cpbe::baseline_weights(g, txns, cpbe::BaselineWeighter::cp).weight("u", "v"), 1.0);
}

TEST(Baselines, StCountsStrictPrecedence) {
    TypeGraph g;
    g.set_edge("u", "v", 1);
    std::vector<AlarmTransaction> txns{txn_of(0, {{"u", 1}, {"v", 2}}), txn_of(1, {{"u", 1}, {"v", 3}}),
                                       txn_of(2, {{"u", 4}, {"v", 4}}), txn_of(3, {{"u", 5}, {"v", 1}}),
                                       txn_of(4, {{"u", 1}})};
    EXPECT_DOUBLE_EQ(*cpbe::baseline_weights(g, txns, cpbe::BaselineWeighter::st).weight("u", "v"), 2.0 / 5.0);
    // Strictly before in every shared window gives shared / with-u.
    txns.erase(txns.begin() + 2, txns.begin() + 4);
    EXPECT_DOUBLE_EQ(*cpbe::baseline_weights(g, txns, cpbe::BaselineWeighter::st).weight("u", "v"), 2.0 / 3.0);
}

TEST(Baselines, AbsentSourceGivesZero) {
    TypeGraph g;
    g.set_edge("u", "v", 1);
    std::vector<AlarmTransaction> txns{txn_of(0, {{"v", 1}})};
    for (auto m : {cpbe::BaselineWeighter::cp, cpbe::BaselineWeighter::st, cpbe::BaselineWeighter::pearson})
        EXPECT_EQ(*cpbe::baseline_weights(g, txns, m).weight("u", "v"), 0.0);
}

TEST(Baselines, ItNormalizesByLargestIntensity) {
    TypeGraph g;
    g.set_edge("a", "b", 0.02);
    g.set_edge("b", "c", 0.05);
    auto w = cpbe::baseline_weights(g, {}, cpbe::BaselineWeighter::it);
    EXPECT_DOUBLE_EQ(*w.weight("a", "b"), 0.4);
    EXPECT_DOUBLE_EQ(*w.weight("b", "c"), 1.0);

    auto m = hawkes::HawkesModel::zeros({"a", "b", "c"});
    m.alpha(1, 0) = 0.3;  // a excites b
    m.alpha(2, 1) = 0.1;
    auto wm = cpbe::baseline_weights(g, {}, cpbe::BaselineWeighter::it, &m);
    EXPECT_DOUBLE_EQ(*wm.weight("a", "b"), 1.0);
    EXPECT_DOUBLE_EQ(*wm.weight("b", "c"), 1.0 / 3.0);
}

TEST(Baselines, PearsonMatchesDirectComputation) {
    TypeGraph g;
    g.set_edge("u", "v", 1);
    std::vector<AlarmTransaction> txns;
    std::vector<double> x, y;
    std::mt19937_64 rng(8);
    std::poisson_distribution<int> pois(2.0);
    for (std::size_t w = 0; w < 60; ++w) {
        int a = pois(rng), b = (a + pois(rng)) % 4;
        AlarmTransaction t;
        t.window_id = w;
        if (a) t.entries["u"] = {0.0, static_cast<std::size_t>(a)};
        if (b) t.entries["v"] = {1.0, static_cast<std::size_t>(b)};
        x.push_back(a);
        y.push_back(b);
        txns.push_back(t);
    }
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / 60, my = std::accumulate(y.begin(), y.end(), 0.0) / 60;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 60; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    double r = std::abs(sxy / std::sqrt(sxx * syy));
    EXPECT_NEAR(*cpbe::baseline_weights(g, txns, cpbe::BaselineWeighter::pearson).weight("u", "v"), r, 1e-12);
}

TEST(Baselines, AllWeightsInUnitInterval) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto recs = testsupport::random_records(rng, 300, 6, 2, 3000);
        NetworkTopology topo;
        auto corpus = preprocess(recs, topo, 300);
        auto g = testsupport::random_digraph(rng, 0, 0.0);
        for (const auto& a : corpus.types)
            for (const auto& b : corpus.types)
                if (a < b) g.set_edge(a, b, 0.01 + 0.1 * static_cast<double>(a.size()));
        for (auto m : {cpbe::BaselineWeighter::it, cpbe::BaselineWeighter::pearson, cpbe::BaselineWeighter::cp,
                       cpbe::BaselineWeighter::st})
            for (const auto& e : cpbe::baseline_weights(g, corpus.transactions, m).edges()) {
                EXPECT_GE(e.weight, 0.0);
                EXPECT_LE(e.weight, 1.0);
            }
    }
}
