#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/error.hpp"

namespace alarmrca::hawkes {

inline constexpr double default_beta = 0.1;
inline constexpr double default_penalty = 1000.0;

/// Multivariate Hawkes process with a shared exponential kernel:
///   lambda_u(t) = mu_u + sum_v sum_{t_i < t, type v} alpha(u, v) * exp(-beta * (t - t_i)).
/// alpha(u, v) is the excitation of type u by a past type-v event.
struct HawkesModel {
    std::vector<AlarmType> types;
    Eigen::VectorXd mu;
    Eigen::MatrixXd alpha;
    double beta{default_beta};

    [[nodiscard]] std::size_t dimension() const { return types.size(); }

    [[nodiscard]] std::optional<std::size_t> index_of(const AlarmType& t) const {
        for (std::size_t i = 0; i < types.size(); ++i)
            if (types[i] == t) return i;
        return std::nullopt;
    }

    void validate() const {
        const auto u = static_cast<Eigen::Index>(types.size());
        if (mu.size() != u || alpha.rows() != u || alpha.cols() != u)
            throw DataError("hawkes model dimensions do not match its type list");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw DataError("hawkes decay must be positive");
        if ((mu.array() < 0.0).any() || (alpha.array() < 0.0).any())
            throw DataError("hawkes parameters must be nonnegative");
        if (!mu.allFinite() || !alpha.allFinite()) throw DataError("hawkes parameters must be finite");
    }

    static HawkesModel zeros(std::vector<AlarmType> types, double beta = default_beta) {
        const auto u = static_cast<Eigen::Index>(types.size());
        return {std::move(types), Eigen::VectorXd::Zero(u), Eigen::MatrixXd::Zero(u, u), beta};
    }
};

struct Penalty {
    double rho1{default_penalty};
    double rho2{default_penalty};
};

struct FitOptions {
    std::size_t max_iter{1000};
    double tol{1e-6};
    std::optional<Penalty> penalty;
};

struct FitReport {
    double final_loglik{0.0};
    std::size_t iterations{0};
    bool converged{false};
    std::optional<Penalty> penalty;
    /// Log-likelihood of every accepted iterate, starting with the initial point.
    std::vector<double> loglik_trace;
};

/// lambda_u(t) given events strictly before t.
inline double intensity(const HawkesModel& model, const AlarmType& type, double t,
                        const std::vector<TimedEvent>& history) {
    auto u = model.index_of(type);
    if (!u) throw DataError("unknown alarm type " + type);
    double lambda = model.mu(static_cast<Eigen::Index>(*u));
    for (const auto& ev : history) {
        if (ev.time > t) throw DataError("history contains an event after the evaluation time");
        if (ev.time == t) continue;
        auto v = model.index_of(ev.type);
        if (!v) throw DataError("unknown alarm type " + ev.type);
        lambda += model.alpha(static_cast<Eigen::Index>(*u), static_cast<Eigen::Index>(*v)) *
                  std::exp(-model.beta * (t - ev.time));
    }
    return lambda;
}

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Parameter-free summaries of a corpus for a fixed decay. With these the log-likelihood is
///   sum_j log(mu_{u_j} + alpha.row(u_j) . excitation.row(j)) - total_time * sum(mu) - sum_{u,v} alpha(u,v) * mass(v).
struct SufficientStats {
    std::vector<Eigen::Index> event_type;
    RowMatrix excitation;  // excitation(j, v) = sum over earlier type-v events of exp(-beta * dt)
    Eigen::VectorXd mass;  // mass(v) = sum over type-v events of (1 - exp(-beta * (T - t))) / beta
    Eigen::VectorXd counts;
    double total_time{0.0};

    [[nodiscard]] std::size_t events() const { return event_type.size(); }
};

inline SufficientStats summarize(const std::vector<AlarmSequence>& sequences, const std::vector<AlarmType>& types,
                                 double beta) {
    if (!(beta > 0.0)) throw ConfigError("hawkes decay must be positive");
    const auto dim = static_cast<Eigen::Index>(types.size());
    std::map<AlarmType, Eigen::Index> idx;
    for (Eigen::Index i = 0; i < dim; ++i) idx[types[static_cast<std::size_t>(i)]] = i;

    std::size_t n = 0;
    for (const auto& s : sequences) n += s.events.size();

    SufficientStats st;
    st.event_type.reserve(n);
    st.excitation = RowMatrix::Zero(static_cast<Eigen::Index>(n), dim);
    st.mass = Eigen::VectorXd::Zero(dim);
    st.counts = Eigen::VectorXd::Zero(dim);

    Eigen::VectorXd state(dim);
    Eigen::Index row = 0;
    for (const auto& seq : sequences) {
        const double horizon = seq.horizon();
        st.total_time += horizon;
        state.setZero();
        double last = 0.0;
        std::size_t j = 0;
        const auto& ev = seq.events;
        while (j < ev.size()) {
            // Events sharing a timestamp do not excite each other.
            const double t = ev[j].time - seq.start;
            if (t < 0.0 || t > horizon) throw DataError("event outside its sequence horizon");
            if (t < last) throw DataError("sequence events are not sorted by time");
            state *= std::exp(-beta * (t - last));
            last = t;
            std::size_t k = j;
            while (k < ev.size() && ev[k].time == ev[j].time) {
                auto it = idx.find(ev[k].type);
                if (it == idx.end()) throw DataError("event type not in model: " + ev[k].type);
                st.event_type.push_back(it->second);
                st.excitation.row(row++) = state.transpose();
                ++k;
            }
            for (std::size_t m = j; m < k; ++m) {
                auto v = idx.at(ev[m].type);
                state(v) += 1.0;
                st.counts(v) += 1.0;
                st.mass(v) += -std::expm1(-beta * (horizon - t)) / beta;
            }
            j = k;
        }
    }
    return st;
}

inline double log_likelihood(const SufficientStats& st, const Eigen::VectorXd& mu, const Eigen::MatrixXd& alpha) {
    double ll = 0.0;
    for (std::size_t j = 0; j < st.events(); ++j) {
        auto u = st.event_type[j];
        double lambda = mu(u) + alpha.row(u).dot(st.excitation.row(static_cast<Eigen::Index>(j)));
        if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += std::log(lambda);
    }
    return ll - st.total_time * mu.sum() - (alpha * st.mass).sum();
}

}  // namespace detail

/// Exact log-likelihood over independent sequences, each observed on [start, end).
/// Returns -infinity when some event has zero intensity.
inline double log_likelihood(const HawkesModel& model, const std::vector<AlarmSequence>& sequences) {
    model.validate();
    auto st = detail::summarize(sequences, model.types, model.beta);
    return detail::log_likelihood(st, model.mu, model.alpha);
}

struct Gradient {
    Eigen::VectorXd mu;
    Eigen::MatrixXd alpha;
};

inline Gradient loglik_gradient(const HawkesModel& model, const std::vector<AlarmSequence>& sequences) {
    model.validate();
    auto st = detail::summarize(sequences, model.types, model.beta);
    const auto dim = static_cast<Eigen::Index>(model.dimension());
    Gradient g{Eigen::VectorXd::Constant(dim, -st.total_time), Eigen::MatrixXd::Zero(dim, dim)};
    for (std::size_t j = 0; j < st.events(); ++j) {
        auto u = st.event_type[j];
        auto r = st.excitation.row(static_cast<Eigen::Index>(j));
        double lambda = model.mu(u) + model.alpha.row(u).dot(r);
        if (!(lambda > 0.0)) throw NumericalError("zero intensity at an observed event; gradient undefined");
        g.mu(u) += 1.0 / lambda;
        g.alpha.row(u) += r / lambda;
    }
    g.alpha.rowwise() -= st.mass.transpose();
    return g;
}

namespace detail {

/// Singular-value soft threshold followed by projection onto the nonnegative orthant.
inline Eigen::MatrixXd shrink_singular_values(const Eigen::MatrixXd& a, double threshold) {
    if (threshold <= 0.0) return a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd s = (svd.singularValues().array() - threshold).cwiseMax(0.0);
    Eigen::MatrixXd out = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    return out.cwiseMax(0.0);
}

}  // namespace detail

/// Maximum-likelihood fit by EM over the branching structure.
///
/// Each iteration assigns every event fractionally to the background or to an earlier event
/// and re-estimates mu and alpha in closed form, so the unpenalized log-likelihood never
/// decreases. With a penalty, the L1 term enters the alpha denominator exactly and the
/// nuclear norm is handled by a singular-value shrinkage of rho2 / mean(mass) after each update.
inline std::pair<HawkesModel, FitReport> fit_mle(const std::vector<AlarmSequence>& sequences,
                                                 const std::vector<AlarmType>& types, double beta = default_beta,
                                                 const FitOptions& opts = {}) {
    if (!(beta > 0.0)) throw ConfigError("hawkes decay must be positive");
    if (types.empty()) throw DataError("cannot fit a hawkes model without alarm types");
    auto st = detail::summarize(sequences, types, beta);
    if (st.events() == 0 || !(st.total_time > 0.0)) throw DataError("cannot fit a hawkes model to empty sequences");

    const auto dim = static_cast<Eigen::Index>(types.size());
    HawkesModel model{types, st.counts / st.total_time, Eigen::MatrixXd::Constant(dim, dim, 0.1), beta};
    const double rho1 = opts.penalty ? opts.penalty->rho1 : 0.0;
    const double rho2 = opts.penalty ? opts.penalty->rho2 : 0.0;
    double mean_mass = st.mass.mean();
    const double svt_threshold = (rho2 > 0.0 && mean_mass > 0.0) ? rho2 / mean_mass : 0.0;

    auto objective = [&](const Eigen::VectorXd& mu, const Eigen::MatrixXd& alpha) {
        double ll = detail::log_likelihood(st, mu, alpha);
        if (!opts.penalty) return ll;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(alpha);
        return ll - rho1 * alpha.sum() - rho2 * svd.singularValues().sum();
    };

    FitReport report;
    report.penalty = opts.penalty;
    double current = objective(model.mu, model.alpha);
    report.loglik_trace.push_back(detail::log_likelihood(st, model.mu, model.alpha));

    Eigen::VectorXd mu_num(dim);
    Eigen::MatrixXd alpha_num(dim, dim);
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        mu_num.setZero();
        alpha_num.setZero();
        for (std::size_t j = 0; j < st.events(); ++j) {
            auto u = st.event_type[j];
            auto r = st.excitation.row(static_cast<Eigen::Index>(j));
            double lambda = model.mu(u) + model.alpha.row(u).dot(r);
            mu_num(u) += 1.0 / lambda;
            alpha_num.row(u) += r / lambda;
        }
        Eigen::VectorXd mu_next = model.mu.cwiseProduct(mu_num) / st.total_time;
        Eigen::MatrixXd alpha_next(dim, dim);
        for (Eigen::Index u = 0; u < dim; ++u)
            for (Eigen::Index v = 0; v < dim; ++v) {
                double denom = st.mass(v) + rho1;
                alpha_next(u, v) = denom > 0.0 ? model.alpha(u, v) * alpha_num(u, v) / denom : 0.0;
            }
        if (svt_threshold > 0.0) alpha_next = detail::shrink_singular_values(alpha_next, svt_threshold);

        double next = objective(mu_next, alpha_next);
        ++report.iterations;
        if (!opts.penalty && next < current) {
            // EM cannot decrease the likelihood; a drop here is accumulated rounding at the optimum.
            assert(current - next <= 1e-9 * std::abs(current));
            report.converged = true;
            break;
        }
        double change = std::abs(next - current) / std::max(std::abs(current), 1e-300);
        model.mu = std::move(mu_next);
        model.alpha = std::move(alpha_next);
        current = next;
        report.loglik_trace.push_back(opts.penalty ? detail::log_likelihood(st, model.mu, model.alpha) : next);
        if (change < opts.tol) {
            report.converged = true;
            break;
        }
    }
    report.final_loglik = report.loglik_trace.back();
    return {std::move(model), std::move(report)};
}

/// Spectral radius of alpha / beta; below 1 the process is stationary.
inline double spectral_radius(const HawkesModel& model) {
    if (model.dimension() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.alpha / model.beta, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace alarmrca::hawkes
