#include <cmath>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "alarmrca/ci.hpp"
#include "alarmrca/stats.hpp"

using namespace alarmrca;

namespace {

std::vector<double> normal_sample(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z;
    std::vector<double> out(n);
    for (auto& v : out) v = z(rng);
    return out;
}

/// Linear-Gaussian chain x -> y -> z.
struct Chain {
    std::vector<double> x, y, z;
};

Chain chain(std::mt19937_64& rng, std::size_t n) {
    Chain c{normal_sample(rng, n), {}, {}};
    std::normal_distribution<double> e;
    for (double v : c.x) c.y.push_back(0.8 * v + e(rng));
    for (double v : c.y) c.z.push_back(0.8 * v + e(rng));
    return c;
}

/// Residual of `a` after least squares on `cond` with intercept.
std::vector<double> residual(const std::vector<double>& a, const std::vector<std::vector<double>>& cond) {
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(cond.size()) + 1);
    X.col(0).setOnes();
    for (std::size_t j = 0; j < cond.size(); ++j)
        for (Eigen::Index i = 0; i < n; ++i) X(i, static_cast<Eigen::Index>(j) + 1) = cond[j][static_cast<std::size_t>(i)];
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(a.data(), n);
    Eigen::VectorXd r = y - X * X.colPivHouseholderQr().solve(y);
    return {r.data(), r.data() + n};
}

std::pair<std::vector<double>, std::vector<double>> table(int n00, int n01, int n10, int n11) {
    std::vector<double> x, y;
    auto add = [&](int count, double a, double b) {
        for (int i = 0; i < count; ++i) {
            x.push_back(a);
            y.push_back(b);
        }
    };
    add(n00, 0, 0);
    add(n01, 0, 1);
    add(n10, 1, 0);
    add(n11, 1, 1);
    return {x, y};
}

}  // namespace

TEST(Stats, GammaQMatchesBoost) {
    for (double a : {0.5, 1.0, 2.5, 7.0, 30.0, 100.0})
        for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 50.0, 150.0}) {
            double ours = stats::gamma_q(a, x), ref = boost::math::gamma_q(a, x);
            EXPECT_NEAR(ours, ref, 1e-12 + 1e-10 * ref) << "a=" << a << " x=" << x;
        }
}

TEST(Stats, ChiSquareAndNormalMatchBoost) {
    for (double df : {1.0, 2.0, 4.0, 8.0, 27.0})
        for (double x : {0.1, 1.0, 3.84, 10.0, 40.0})
            EXPECT_NEAR(stats::chi_square_sf(x, df), boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x)),
                        1e-10);
    boost::math::normal n;
    for (double z : {-5.0, -1.96, 0.0, 0.3, 2.5, 8.0}) {
        EXPECT_NEAR(stats::normal_cdf(z), boost::math::cdf(n, z), 1e-12);
        EXPECT_NEAR(stats::normal_two_sided_p(z), 2 * boost::math::cdf(boost::math::complement(n, std::abs(z))), 1e-12);
    }
}

TEST(FisherZ, PerfectCorrelationIsDependent) {
    std::mt19937_64 rng(1);
    auto x = normal_sample(rng, 100);
    auto r = ci::fisher_z(x, x, {});
    EXPECT_LT(r.p_value, 1e-12);
    EXPECT_FALSE(r.independent);
}

TEST(FisherZ, MatchesResidualCorrelationOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto c = chain(rng, 200);
        auto w = normal_sample(rng, 200);
        auto res = ci::fisher_z(c.x, c.z, {c.y, w});
        double r = stats::pearson(residual(c.x, {c.y, w}), residual(c.z, {c.y, w}));
        double z = 0.5 * std::log((1 + r) / (1 - r)) * std::sqrt(200.0 - 2 - 3);
        EXPECT_NEAR(res.statistic, z, 1e-9);
        EXPECT_NEAR(res.p_value, std::erfc(std::abs(z) / std::sqrt(2.0)), 1e-9);
    }
}

TEST(FisherZ, Symmetric) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto c = chain(rng, 150);
        auto a = ci::fisher_z(c.x, c.z, {c.y}), b = ci::fisher_z(c.z, c.x, {c.y});
        EXPECT_NEAR(a.statistic, b.statistic, 1e-12);
        EXPECT_NEAR(a.p_value, b.p_value, 1e-12);
    }
}

TEST(FisherZ, ConstantSeriesIsDegenerateIndependent) {
    std::vector<double> k(50, 3.0);
    std::mt19937_64 rng(4);
    auto x = normal_sample(rng, 50);
    auto r = ci::fisher_z(x, k, {});
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(r.independent);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(FisherZ, TooFewSamplesIsDataError) {
    std::vector<double> x{1, 2, 3, 4}, y{2, 1, 4, 3};
    EXPECT_THROW(ci::fisher_z(x, y, {x}), DataError);
}

TEST(FisherZ, NullCalibration) {
    std::mt19937_64 rng(2024);
    int rejections = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto x = normal_sample(rng, 1000), y = normal_sample(rng, 1000);
        rejections += !ci::fisher_z(x, y, {}, 0.05).independent;
    }
    EXPECT_NEAR(rejections / 200.0, 0.05, 0.02);
}

TEST(FisherZ, DefaultSignificance) { EXPECT_EQ(ci::default_significance, 0.05); }

TEST(GSquare, IdenticalBinarySeriesDependent) {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution b(0.5);
    std::vector<double> x(200);
    for (auto& v : x) v = b(rng);
    EXPECT_FALSE(ci::g_square(x, x, {}).independent);
}

TEST(GSquare, UniformTableIsExactlyIndependent) {
    auto [x, y] = table(50, 50, 50, 50);
    auto r = ci::g_square(x, y, {});
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(GSquare, HandEvaluatedTable) {
    auto [x, y] = table(30, 10, 10, 30);
    auto r = ci::g_square(x, y, {});
    double expected = 2.0 * (2 * 30 * std::log(30.0 / 20.0) + 2 * 10 * std::log(10.0 / 20.0));
    EXPECT_NEAR(r.statistic, expected, 1e-12);
    EXPECT_NEAR(r.statistic, 20.93, 0.01);
    EXPECT_LT(r.p_value, 0.001);
    EXPECT_NEAR(r.p_value, boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), expected)), 1e-12);
}

TEST(GSquare, StratifiedDegreesOfFreedomAndSum) {
    auto [x1, y1] = table(30, 10, 10, 30);
    auto [x2, y2] = table(20, 20, 20, 20);
    std::vector<double> x = x1, y = y1, z(x1.size(), 0.0);
    x.insert(x.end(), x2.begin(), x2.end());
    y.insert(y.end(), y2.begin(), y2.end());
    z.resize(x.size(), 2.0);
    auto r = ci::g_square(x, y, {z});
    auto alone = ci::g_square(x1, y1, {});
    EXPECT_NEAR(r.statistic, alone.statistic, 1e-12);
    EXPECT_NEAR(r.p_value, boost::math::cdf(boost::math::complement(boost::math::chi_squared(2.0), r.statistic)), 1e-12);
}

TEST(CiPrune, MediatedChainEdgeRemovedGivenMediator) {
    std::mt19937_64 rng(6);
    auto c = chain(rng, 1000);
    ci::IndependenceTester tester({c.x, c.y, c.z}, ci::CiTest::fisher_z, 0.05);
    TypeGraph g;
    g.set_edge("x", "y", 1);
    g.set_edge("y", "z", 1);
    g.set_edge("x", "z", 1);
    std::vector<ci::RemovedEdge> log;
    auto out = ci::ci_prune(g, tester, {{"x", 0}, {"y", 1}, {"z", 2}}, {}, &log);
    EXPECT_FALSE(out.has_edge("x", "z"));
    EXPECT_TRUE(out.has_edge("x", "y"));
    EXPECT_TRUE(out.has_edge("y", "z"));
    ASSERT_EQ(log.size(), 1u);
    EXPECT_EQ(log[0].separating_set, (std::vector<AlarmType>{"y"}));
}

TEST(CiPrune, EmptyGraph) {
    ci::IndependenceTester tester({}, ci::CiTest::fisher_z, 0.05);
    EXPECT_EQ(ci::ci_prune(TypeGraph{}, tester, {}, {}).edge_count(), 0u);
}

TEST(CiPrune, SignificanceOneNeverRemoves) {
    std::mt19937_64 rng(7);
    std::vector<std::vector<double>> s;
    for (int i = 0; i < 5; ++i) s.push_back(normal_sample(rng, 300));
    ci::IndependenceTester tester(s, ci::CiTest::fisher_z, 1.0);
    auto g = TypeGraph();
    std::map<AlarmType, std::size_t> idx;
    for (int i = 0; i < 5; ++i) {
        idx["t" + std::to_string(i)] = static_cast<std::size_t>(i);
        for (int k = 0; k < 5; ++k)
            if (i != k) g.set_edge("t" + std::to_string(i), "t" + std::to_string(k), 1.0);
    }
    EXPECT_EQ(ci::ci_prune(g, tester, idx, {ci::CiTest::fisher_z, 1.0, 3}), g);
}

TEST(CiPrune, OutputIsSubgraphAndDeterministic) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> s;
        std::poisson_distribution<int> p(0.7);
        for (int i = 0; i < 6; ++i) {
            std::vector<double> v(200);
            for (auto& x : v) x = p(rng);
            s.push_back(v);
        }
        for (std::size_t k = 0; k < 200; ++k) s[1][k] += s[0][k];
        std::map<AlarmType, std::size_t> idx;
        TypeGraph g;
        std::bernoulli_distribution keep(0.5);
        std::uniform_real_distribution<double> w(0.1, 2.0);
        for (int i = 0; i < 6; ++i) {
            idx["t" + std::to_string(i)] = static_cast<std::size_t>(i);
            for (int k = 0; k < 6; ++k)
                if (i != k && keep(rng)) g.set_edge("t" + std::to_string(i), "t" + std::to_string(k), w(rng));
        }
        for (auto test : {ci::CiTest::fisher_z, ci::CiTest::g_square}) {
            ci::IndependenceTester tester(s, test, 0.05);
            auto a = ci::ci_prune(g, tester, idx, {test, 0.05, 3});
            auto b = ci::ci_prune(g, tester, idx, {test, 0.05, 3});
            EXPECT_EQ(a, b);
            for (const auto& e : a.edges()) EXPECT_EQ(g.weight(e.src, e.dst), e.weight);
            EXPECT_LE(a.edge_count(), g.edge_count());
        }
    }
}

TEST(CiPrune, TesterAgreesWithDirectTests) {
    std::mt19937_64 rng(9);
    auto c = chain(rng, 300);
    ci::IndependenceTester fz({c.x, c.y, c.z}, ci::CiTest::fisher_z, 0.05);
    std::vector<std::size_t> cond{1};
    EXPECT_NEAR(fz.test(0, 2, cond).p_value, ci::fisher_z(c.x, c.z, {c.y}).p_value, 1e-10);
    for (auto* v : {&c.x, &c.y, &c.z})
        for (auto& e : *v) e = e > 0.3 ? std::round(e * 2) : 0.0;
    ci::IndependenceTester gs({c.x, c.y, c.z}, ci::CiTest::g_square, 0.05);
    EXPECT_NEAR(gs.test(0, 2, cond).p_value, ci::g_square(c.x, c.z, {c.y}).p_value, 1e-12);
}
