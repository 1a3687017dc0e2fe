#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/graph.hpp"

namespace testsupport {

/// Asymptotic Kolmogorov tail P(K > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) {
        double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS p-value of `xs` against the CDF `cdf`, with the Stephens small-sample correction.
template <typename Cdf>
double ks_p_value(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

inline std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        i = j + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Random alarm records over `n_types` types and `n_devices` devices.
inline std::vector<alarmrca::AlarmRecord> random_records(std::mt19937_64& rng, std::size_t n, std::size_t n_types,
                                                         std::size_t n_devices, double horizon) {
    std::uniform_int_distribution<std::size_t> type(0, n_types - 1), dev(0, n_devices - 1);
    std::uniform_real_distribution<double> time(0.0, horizon);
    std::vector<alarmrca::AlarmRecord> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({"d" + std::to_string(dev(rng)), "T" + std::to_string(type(rng)), std::floor(time(rng))});
    return out;
}

inline alarmrca::TypeGraph random_digraph(std::mt19937_64& rng, std::size_t n, double p, bool weights01 = true) {
    std::vector<alarmrca::AlarmType> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(100 + i));
    alarmrca::TypeGraph g(names);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && u(rng) < p) g.set_edge(names[i], names[j], weights01 ? u(rng) : 1.0 + u(rng));
    return g;
}

}  // namespace testsupport
