#ifndef COVDEN_PORTFOLIO_HPP
#define COVDEN_PORTFOLIO_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <json.hpp>

#include "covden/io.hpp"
#include "covden/spectral.hpp"
#include "covden/types.hpp"

namespace covden {

struct WeightVector {
    Vector weights;
    bool long_only = false;

    Index size() const noexcept { return weights.size(); }
    double operator()(Index i) const { return weights(i); }
};

/// Global minimum-variance portfolio: w = Sigma^-1 1 / (1^T Sigma^-1 1).
inline WeightVector mvp_weights(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw InvalidParameter("mvp_weights: matrix must be square");
    const SpectralDecomposition sd = eigendecompose_sym(sigma);
    const double top = sd.eigenvalues(0);
    const double bottom = sd.eigenvalues(sd.size() - 1);
    if (!(top > 0.0) || !(bottom > 1e-12 * top)) {
        throw SingularMatrixError("mvp_weights: covariance is singular (min eigenvalue " + std::to_string(bottom) + ")");
    }
    const Vector ones = Vector::Ones(sigma.rows());
    const Vector x = sd.eigenvectors * ((sd.eigenvectors.transpose() * ones).array() / sd.eigenvalues.array()).matrix();
    return {x / x.sum(), false};
}

inline WeightVector mvp_weights(const CovarianceMatrix& sigma) { return mvp_weights(sigma.values()); }

struct QpSolution {
    WeightVector weights;
    double lambda = 0.0;    // budget multiplier: (Sigma w)_i on the support
    double residual = 0.0;  // KKT residual, see kkt_residual
    Index iterations = 0;
};

/// Largest violation of the long-only MVP optimality conditions, relative to
/// max(1, max |Sigma_ij|):
///   |1^T w - 1|, max(-w_i, 0), |(Sigma w)_i - lambda| on w_i > 0, and
///   max(lambda - (Sigma w)_i, 0) on w_i = 0,
/// with lambda the mean of (Sigma w)_i over the support.
inline double kkt_residual(const Matrix& sigma, const Vector& w, double* lambda_out = nullptr) {
    const Vector g = sigma * w;
    double lambda = 0.0;
    Index support = 0;
    for (Index i = 0; i < w.size(); ++i) {
        if (w(i) > 0.0) {
            lambda += g(i);
            ++support;
        }
    }
    if (support == 0) return std::numeric_limits<double>::infinity();
    lambda /= static_cast<double>(support);
    double r = std::abs(w.sum() - 1.0);
    for (Index i = 0; i < w.size(); ++i) {
        r = std::max(r, -w(i));
        if (w(i) > 0.0) {
            r = std::max(r, std::abs(g(i) - lambda));
        } else {
            r = std::max(r, lambda - g(i));
        }
    }
    if (lambda_out != nullptr) *lambda_out = lambda;
    return r / std::max(1.0, sigma.cwiseAbs().maxCoeff());
}

/// Long-only minimum-variance portfolio by a primal active-set method.
///
/// Starts at the vertex of the smallest variance (lowest index on ties). Each
/// iteration solves the equality-constrained problem on the free set in closed
/// form (least-norm when Sigma is singular there), steps to it or to the first
/// blocking bound (lowest index on ties), and, at a stationary point, frees
/// the lowest-index bound with a negative multiplier.
inline QpSolution mvp_plus_solve(const Matrix& sigma, Index max_iterations = -1) {
    const Index p = sigma.rows();
    if (p == 0 || sigma.cols() != p) throw InvalidParameter("mvp_plus_weights: matrix must be square and non-empty");
    if (!sigma.allFinite()) throw NumericError("mvp_plus_weights: covariance has non-finite entries");
    if (max_iterations < 0) max_iterations = 50 * p + 100;
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    const double step_tol = 1e-13;
    const double mult_tol = 1e-13 * scale;

    Index start = 0;
    for (Index i = 1; i < p; ++i) {
        if (sigma(i, i) < sigma(start, start)) start = i;
    }
    Vector w = Vector::Zero(p);
    w(start) = 1.0;
    std::vector<bool> free(static_cast<std::size_t>(p), false);
    free[static_cast<std::size_t>(start)] = true;
    bool at_minimum = p == 1;

    for (Index iter = 1; iter <= max_iterations; ++iter) {
        std::vector<Index> f;
        for (Index i = 0; i < p; ++i) {
            if (free[static_cast<std::size_t>(i)]) f.push_back(i);
        }
        const Index nf = static_cast<Index>(f.size());
        const Vector g = sigma * w;
        Vector d = Vector::Zero(p);
        if (!at_minimum) {
            Matrix kkt = Matrix::Zero(nf + 1, nf + 1);
            Vector rhs = Vector::Zero(nf + 1);
            for (Index a = 0; a < nf; ++a) {
                for (Index b = 0; b < nf; ++b) kkt(a, b) = sigma(f[a], f[b]);
                kkt(a, nf) = 1.0;
                kkt(nf, a) = 1.0;
                rhs(a) = -g(f[a]);
            }
            const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            for (Index a = 0; a < nf; ++a) d(f[a]) = sol(a);
        }

        if (at_minimum || d.cwiseAbs().maxCoeff() <= step_tol) {
            double lambda = 0.0;
            for (Index i : f) lambda += g(i);
            lambda /= static_cast<double>(nf);
            Index leave = -1;
            for (Index i = 0; i < p; ++i) {
                if (!free[static_cast<std::size_t>(i)] && g(i) - lambda < -mult_tol) {
                    leave = i;
                    break;
                }
            }
            if (leave < 0) {
                w = w.cwiseMax(0.0);
                w /= w.sum();
                QpSolution out{{w, true}, 0.0, 0.0, iter};
                out.residual = kkt_residual(sigma, w, &out.lambda);
                return out;
            }
            free[static_cast<std::size_t>(leave)] = true;
            at_minimum = false;
            continue;
        }

        double alpha = 1.0;
        Index blocking = -1;
        for (Index i : f) {
            if (d(i) < 0.0) {
                const double a = -w(i) / d(i);
                if (a < alpha) {
                    alpha = a;
                    blocking = i;
                }
            }
        }
        w += alpha * d;
        if (blocking >= 0) {
            w(blocking) = 0.0;
            free[static_cast<std::size_t>(blocking)] = false;
        } else {
            at_minimum = true;
        }
    }
    throw SolverError("mvp_plus_weights: no convergence after " + std::to_string(max_iterations) + " iterations",
                      kkt_residual(sigma, w.cwiseMax(0.0) / w.cwiseMax(0.0).sum()));
}

inline WeightVector mvp_plus_weights(const Matrix& sigma) { return mvp_plus_solve(sigma).weights; }

inline WeightVector mvp_plus_weights(const CovarianceMatrix& sigma) { return mvp_plus_weights(sigma.values()); }

struct PerformanceMetrics {
    double cumulative_return = 1.0;
    double annual_return = 0.0;
    double annual_volatility = 0.0;
    double sharpe = 0.0;
    double max_drawdown = 0.0;
    double turnover = 0.0;
    bool sharpe_defined = true;  // false when the volatility is zero
};

/// Average L1 change between consecutive weight vectors, over the rebalances
/// after the initial allocation. `before` (optional) holds the weights
/// actually held just before each rebalance, e.g. after drifting with prices;
/// when empty the previous target is used.
inline double turnover(const std::vector<Vector>& targets, const std::vector<Vector>& before = {}) {
    if (targets.size() < 2) return 0.0;
    if (!before.empty() && before.size() != targets.size()) throw InvalidParameter("turnover: history lengths differ");
    double total = 0.0;
    for (std::size_t k = 1; k < targets.size(); ++k) {
        const Vector& prev = before.empty() ? targets[k - 1] : before[k];
        if (prev.size() != targets[k].size()) throw InvalidParameter("turnover: weight vectors differ in length");
        total += (targets[k] - prev).cwiseAbs().sum();
    }
    return total / static_cast<double>(targets.size() - 1);
}

/// Metrics of a daily simple-return series with a precomputed turnover.
inline PerformanceMetrics performance_metrics(const Vector& daily, double turnover_value, int periods_per_year = 365) {
    if (daily.size() == 0) throw InvalidParameter("portfolio_metrics: empty return series");
    if (periods_per_year < 1) throw InvalidParameter("portfolio_metrics: periods per year must be positive");
    PerformanceMetrics m;
    double wealth = 1.0;
    double peak = 1.0;
    for (Index t = 0; t < daily.size(); ++t) {
        if (!std::isfinite(daily(t)) || daily(t) <= -1.0) throw NumericError("portfolio_metrics: return at index " + std::to_string(t) + " wipes out the portfolio");
        wealth *= 1.0 + daily(t);
        peak = std::max(peak, wealth);
        m.max_drawdown = std::min(m.max_drawdown, wealth / peak - 1.0);
    }
    const auto n = static_cast<double>(daily.size());
    m.cumulative_return = wealth;
    m.annual_return = (std::pow(wealth, 1.0 / n) - 1.0) * periods_per_year;
    double var = 0.0;
    if (daily.size() > 1) {
        const double mean = daily.mean();
        var = (daily.array() - mean).square().sum() / (n - 1.0);
    }
    m.annual_volatility = std::sqrt(var) * std::sqrt(static_cast<double>(periods_per_year));
    if (m.annual_volatility > 0.0) {
        m.sharpe = m.annual_return / m.annual_volatility;
    } else {
        m.sharpe = 0.0;
        m.sharpe_defined = false;
    }
    m.turnover = turnover_value;
    return m;
}

inline PerformanceMetrics portfolio_metrics(const Vector& daily, const std::vector<WeightVector>& weight_history,
                                            int periods_per_year = 365) {
    if (weight_history.empty()) throw InvalidParameter("portfolio_metrics: empty weight history");
    std::vector<Vector> targets;
    for (const auto& w : weight_history) targets.push_back(w.weights);
    return performance_metrics(daily, turnover(targets), periods_per_year);
}

inline nlohmann::ordered_json metrics_json(const PerformanceMetrics& m) {
    nlohmann::ordered_json j;
    j["cumulative_return"] = m.cumulative_return;
    j["annual_return"] = m.annual_return;
    j["annual_volatility"] = m.annual_volatility;
    j["sharpe"] = m.sharpe;
    j["max_drawdown"] = m.max_drawdown;
    j["turnover"] = m.turnover;
    return j;
}

inline std::string metrics_csv_header() {
    return "cumulative_return,annual_return,annual_volatility,sharpe,max_drawdown,turnover";
}

inline std::string metrics_csv_row(const PerformanceMetrics& m) {
    return io::format_double(m.cumulative_return) + "," + io::format_double(m.annual_return) + "," +
           io::format_double(m.annual_volatility) + "," + io::format_double(m.sharpe) + "," +
           io::format_double(m.max_drawdown) + "," + io::format_double(m.turnover);
}

}  // namespace covden

#endif  // COVDEN_PORTFOLIO_HPP
