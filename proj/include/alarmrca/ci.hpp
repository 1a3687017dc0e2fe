#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"
#include "alarmrca/stats.hpp"

namespace alarmrca::ci {

inline constexpr double default_significance = 0.05;
inline constexpr std::size_t default_max_cond = 3;

enum class CiTest { fisher_z, g_square };

struct CiTestResult {
    double statistic{0.0};
    double p_value{1.0};
    bool independent{true};
    bool degenerate{false};
};

using Series = std::span<const double>;

namespace detail {

inline CiTestResult degenerate_result() { return {0.0, 1.0, true, true}; }

/// Fisher-Z from a correlation matrix whose first two rows are x and y and whose
/// remaining rows are the conditioning set.
inline CiTestResult fisher_z_from_correlation(const Eigen::MatrixXd& corr, std::size_t n, double significance) {
    const auto k = corr.rows();
    const double dof = static_cast<double>(n) - static_cast<double>(k - 2) - 3.0;
    if (dof < 1.0) throw DataError("fisher-z needs n - |cond| - 3 >= 1");
    double r;
    if (k == 2) {
        r = corr(0, 1);
    } else {
        Eigen::MatrixXd prec = corr.completeOrthogonalDecomposition().pseudoInverse();
        double denom = std::sqrt(prec(0, 0) * prec(1, 1));
        r = denom > 0.0 ? -prec(0, 1) / denom : 0.0;
    }
    constexpr double max_r = 1.0 - 1e-12;
    r = std::clamp(r, -max_r, max_r);
    double z = 0.5 * std::log((1.0 + r) / (1.0 - r)) * std::sqrt(dof);
    double p = stats::normal_two_sided_p(z);
    return {z, p, p > significance, false};
}

inline bool is_constant(Series s) {
    return s.empty() || std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
}

inline double g_square_statistic(const std::vector<int>& x, const std::vector<int>& y,
                                 const std::vector<const std::vector<int>*>& cond) {
    std::map<std::size_t, std::array<std::array<double, 2>, 2>> strata;
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t key = 0;
        for (const auto* c : cond) key = (key << 1) | static_cast<std::size_t>((*c)[i]);
        strata[key][static_cast<std::size_t>(x[i])][static_cast<std::size_t>(y[i])] += 1.0;
    }
    double g2 = 0.0;
    for (const auto& [key, t] : strata) {
        double total = t[0][0] + t[0][1] + t[1][0] + t[1][1];
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                double obs = t[a][b];
                double expected = (t[a][0] + t[a][1]) * (t[0][b] + t[1][b]) / total;
                if (obs > 0.0 && expected > 0.0) g2 += 2.0 * obs * std::log(obs / expected);
            }
    }
    return std::max(g2, 0.0);
}

inline std::vector<int> binarize(Series s) {
    std::vector<int> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > 0.0 ? 1 : 0;
    return out;
}

inline int levels(const std::vector<int>& b) {
    bool zero = false, one = false;
    for (int v : b) (v ? one : zero) = true;
    return static_cast<int>(zero) + static_cast<int>(one);
}

inline CiTestResult g_square_binary(const std::vector<int>& x, const std::vector<int>& y,
                                    const std::vector<const std::vector<int>*>& cond, double significance) {
    int lx = levels(x), ly = levels(y);
    if (lx < 2 || ly < 2) return degenerate_result();
    double df = static_cast<double>((lx - 1) * (ly - 1));
    for (const auto* c : cond) df *= levels(*c);
    double g2 = g_square_statistic(x, y, cond);
    double p = stats::chi_square_sf(g2, df);
    return {g2, p, p > significance, false};
}

}  // namespace detail

/// Partial-correlation test of x and y given `cond`. Constant conditioning series carry no
/// information and are dropped; a constant x or y yields a degenerate "independent" result.
inline CiTestResult fisher_z(Series x, Series y, const std::vector<Series>& cond,
                             double significance = default_significance) {
    const std::size_t n = x.size();
    if (y.size() != n) throw DataError("fisher-z: series lengths differ");
    for (auto c : cond)
        if (c.size() != n) throw DataError("fisher-z: series lengths differ");
    if (detail::is_constant(x) || detail::is_constant(y)) return detail::degenerate_result();

    std::vector<Series> all{x, y};
    for (auto c : cond)
        if (!detail::is_constant(c)) all.push_back(c);
    const auto k = static_cast<Eigen::Index>(all.size());
    Eigen::MatrixXd data(static_cast<Eigen::Index>(n), k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) data(static_cast<Eigen::Index>(i), j) = all[static_cast<std::size_t>(j)][i];
    Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    return detail::fisher_z_from_correlation(corr, n, significance);
}

/// G-square test on presence/absence (count > 0) versions of the series, stratified by
/// the conditioning configuration.
inline CiTestResult g_square(Series x, Series y, const std::vector<Series>& cond,
                             double significance = default_significance) {
    const std::size_t n = x.size();
    if (n == 0) throw DataError("g-square: empty series");
    if (y.size() != n) throw DataError("g-square: series lengths differ");
    auto bx = detail::binarize(x), by = detail::binarize(y);
    std::vector<std::vector<int>> bc;
    for (auto c : cond) {
        if (c.size() != n) throw DataError("g-square: series lengths differ");
        bc.push_back(detail::binarize(c));
    }
    std::vector<const std::vector<int>*> ptrs;
    for (const auto& b : bc) ptrs.push_back(&b);
    return detail::g_square_binary(bx, by, ptrs, significance);
}

/// Repeated tests over a fixed set of series, with the expensive parts precomputed.
class IndependenceTester {
public:
    IndependenceTester(std::vector<std::vector<double>> series, CiTest test, double significance)
        : series_(std::move(series)), test_(test), significance_(significance) {
        const auto k = static_cast<Eigen::Index>(series_.size());
        n_ = series_.empty() ? 0 : series_.front().size();
        for (const auto& s : series_)
            if (s.size() != n_) throw DataError("occurrence series lengths differ");
        constant_.resize(series_.size());
        for (std::size_t i = 0; i < series_.size(); ++i) constant_[i] = detail::is_constant(series_[i]);
        if (test_ == CiTest::fisher_z) {
            Eigen::MatrixXd data(static_cast<Eigen::Index>(n_), k);
            for (Eigen::Index j = 0; j < k; ++j)
                for (std::size_t i = 0; i < n_; ++i)
                    data(static_cast<Eigen::Index>(i), j) = series_[static_cast<std::size_t>(j)][i];
            Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
            Eigen::MatrixXd cov = centered.transpose() * centered;
            Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
            Eigen::VectorXd inv_sd = (sd.array() > 0.0).select(sd.cwiseInverse(), 0.0);
            corr_ = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
        } else {
            binary_.reserve(series_.size());
            for (const auto& s : series_) binary_.push_back(detail::binarize(s));
        }
    }

    [[nodiscard]] std::size_t samples() const { return n_; }
    [[nodiscard]] CiTest kind() const { return test_; }

    /// Whether a test with `cond_size` conditioning series is well posed.
    [[nodiscard]] bool testable(std::size_t cond_size) const {
        if (test_ == CiTest::fisher_z) return static_cast<double>(n_) - static_cast<double>(cond_size) - 3.0 >= 1.0;
        return n_ > 0;
    }

    [[nodiscard]] CiTestResult test(std::size_t x, std::size_t y, std::span<const std::size_t> cond) const {
        if (constant_[x] || constant_[y]) return detail::degenerate_result();
        if (test_ == CiTest::fisher_z) {
            std::vector<std::size_t> idx{x, y};
            for (auto c : cond)
                if (!constant_[c]) idx.push_back(c);
            const auto k = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXd sub(k, k);
            for (Eigen::Index a = 0; a < k; ++a)
                for (Eigen::Index b = 0; b < k; ++b)
                    sub(a, b) = corr_(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                                      static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
            return detail::fisher_z_from_correlation(sub, n_, significance_);
        }
        std::vector<const std::vector<int>*> ptrs;
        for (auto c : cond) ptrs.push_back(&binary_[c]);
        return detail::g_square_binary(binary_[x], binary_[y], ptrs, significance_);
    }

private:
    std::vector<std::vector<double>> series_;
    CiTest test_;
    double significance_;
    std::size_t n_{0};
    std::vector<bool> constant_;
    Eigen::MatrixXd corr_;
    std::vector<std::vector<int>> binary_;
};

struct RemovedEdge {
    AlarmType src;
    AlarmType dst;
    std::vector<AlarmType> separating_set;
    double p_value{1.0};
};

struct PruneOptions {
    CiTest test{CiTest::fisher_z};
    double significance{default_significance};
    std::size_t max_cond{default_max_cond};
};

namespace detail {

/// Calls `fn(subset)` for every size-k subset of `items` in lexicographic order until it returns true.
template <typename Fn>
bool for_each_subset(const std::vector<std::size_t>& items, std::size_t k, Fn&& fn) {
    if (k > items.size()) return false;
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    std::vector<std::size_t> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = items[pick[i]];
        if (fn(std::span<const std::size_t>(subset))) return true;
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == items.size() - k + (i - 1)) --i;
        if (i == 0) return false;
        ++pick[i - 1];
        for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
}

}  // namespace detail

/// PC-style adjacency search restricted to the edges of `graph`.
///
/// Level l = 0..max_cond: every remaining directed edge (u, v) is tested for u _||_ v given each
/// size-l subset of u's neighbours (either direction, v excluded) in lexicographic order. Neighbour
/// sets are frozen at the start of a level and removals are applied at its end, so the result does
/// not depend on edge order. An independent pair loses its edges in both directions. Self-loops
/// are never tested.
inline TypeGraph ci_prune(const TypeGraph& graph, const IndependenceTester& tester,
                          const std::map<AlarmType, std::size_t>& series_index, const PruneOptions& opts,
                          std::vector<RemovedEdge>* log = nullptr) {
    TypeGraph out = graph;
    const auto& names = graph.nodes();
    std::vector<std::size_t> col(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = series_index.find(names[i]);
        if (it == series_index.end()) throw DataError("no occurrence series for type " + names[i]);
        col[i] = it->second;
    }

    for (std::size_t level = 0; level <= opts.max_cond; ++level) {
        if (!tester.testable(level)) break;
        std::vector<std::set<std::size_t>> adj(names.size());
        for (const auto& e : out.edges()) {
            auto s = *out.index_of(e.src), d = *out.index_of(e.dst);
            if (s == d) continue;
            adj[s].insert(d);
            adj[d].insert(s);
        }
        bool any_candidate = false;
        std::set<std::pair<std::size_t, std::size_t>> doomed;
        for (const auto& e : out.edges()) {
            auto u = *out.index_of(e.src), v = *out.index_of(e.dst);
            if (u == v || doomed.count(std::minmax(u, v))) continue;
            std::vector<std::size_t> cand;
            for (auto w : adj[u])
                if (w != v) cand.push_back(w);
            if (cand.size() < level) continue;
            any_candidate = true;
            std::vector<std::size_t> cond_cols(level);
            detail::for_each_subset(cand, level, [&](std::span<const std::size_t> subset) {
                for (std::size_t i = 0; i < level; ++i) cond_cols[i] = col[subset[i]];
                auto res = tester.test(col[u], col[v], cond_cols);
                if (!res.independent) return false;
                doomed.insert(std::minmax(u, v));
                if (log) {
                    RemovedEdge r{names[u], names[v], {}, res.p_value};
                    for (auto s : subset) r.separating_set.push_back(names[s]);
                    log->push_back(std::move(r));
                }
                return true;
            });
        }
        for (auto [a, b] : doomed) {
            out.remove_edge(names[a], names[b]);
            out.remove_edge(names[b], names[a]);
        }
        if (!any_candidate) break;
    }
    return out;
}

/// Convenience overload building the tester from occurrence series.
inline TypeGraph ci_prune(const TypeGraph& graph, const std::vector<OccurrenceSeries>& series,
                          const PruneOptions& opts = {}, std::vector<RemovedEdge>* log = nullptr) {
    std::vector<std::vector<double>> data;
    std::map<AlarmType, std::size_t> index;
    for (const auto& s : series) {
        index.emplace(s.alarm_type, data.size());
        data.emplace_back(s.counts.begin(), s.counts.end());
    }
    IndependenceTester tester(std::move(data), opts.test, opts.significance);
    return ci_prune(graph, tester, index, opts, log);
}

}  // namespace alarmrca::ci
