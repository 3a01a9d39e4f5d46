#ifndef COVDEN_BACKTEST_HPP
#define COVDEN_BACKTEST_HPP

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covden/data.hpp"
#include "covden/evaluation.hpp"
#include "covden/nn/training.hpp"
#include "covden/nn/training_set.hpp"
#include "covden/pipeline.hpp"
#include "covden/portfolio.hpp"

namespace covden {

enum class ReturnMode { simple, log };

inline std::string_view to_string(ReturnMode mode) { return mode == ReturnMode::simple ? "simple" : "log"; }

inline ReturnMode parse_return_mode(std::string_view name) {
    if (name == "simple") return ReturnMode::simple;
    if (name == "log") return ReturnMode::log;
    throw InvalidParameter("unknown return mode '" + std::string(name) + "' (expected simple or log)");
}

struct WalkForwardConfig {
    Index t_in = 182;
    Index t_out = 182;
    Index delta_t = 182;
    Date split_date{};
    EstimatorId estimator = EstimatorId::naive;
    ReturnMode return_mode = ReturnMode::simple;
    std::optional<nn::DenoiserConfig> denoiser;
    Index train_window_count = 100;
    Index train_stride = 1;
    Index pre_history_days = 282;
    bool seriation_per_window = true;

    void validate() const {
        if (t_in < 2 || t_out < 2 || delta_t < 2) throw InvalidParameter("walk-forward: t_in, t_out and delta_t must be at least 2");
        if (needs_training(estimator)) {
            if (train_window_count < 2) throw InvalidParameter("walk-forward: train window count must be at least 2");
            if (train_stride < 1) throw InvalidParameter("walk-forward: train stride must be positive");
            if (pre_history_days < 0) throw InvalidParameter("walk-forward: pre-history days must be nonnegative");
            if (!denoiser) {
                throw InvalidParameter("walk-forward: estimator '" + std::string(to_string(estimator)) + "' needs a denoiser configuration");
            }
        }
    }
};

struct WindowDiagnostics {
    Date rebalance_date{};
    double condition_number = 0.0;  // in-sample sample covariance; infinite when singular
    bool seriated = false;
    bool psd_projected = false;     // estimate needed a PSD projection before MVP+
    double kkt_residual = 0.0;
    std::vector<double> train_loss;       // final training loss per trained network
    std::vector<double> validation_loss;  // final validation loss per trained network
};

struct BacktestReport {
    std::string strategy;
    std::vector<std::string> symbols;
    std::vector<Date> rebalance_dates;
    std::vector<WeightVector> weight_history;
    std::vector<Vector> held_before_rebalance;  // holdings just before each rebalance, after drift
    std::vector<Date> daily_dates;
    Vector daily_returns;
    PerformanceMetrics metrics;
    double drift_turnover = 0.0;  // turnover against drifted holdings instead of previous targets
    std::vector<WindowDiagnostics> windows;
};

/// First row dated on or after the split date.
inline Index split_index(const ReturnsPanel& returns, Date split) {
    for (Index t = 0; t < returns.day_count(); ++t) {
        if (returns.dates[static_cast<std::size_t>(t)] >= split) return t;
    }
    return returns.day_count();
}

/// Rebalance rows: split, split + delta_t, ... while a full t_out period fits.
inline std::vector<Index> rebalance_schedule(const ReturnsPanel& returns, const WalkForwardConfig& config) {
    const Index s = split_index(returns, config.split_date);
    const Index available = returns.day_count() - s;
    if (available < config.t_out) {
        throw InvalidParameter("walk-forward: " + std::to_string(available) + " days on or after the split date, need t_out = " +
                               std::to_string(config.t_out));
    }
    std::vector<Index> out;
    for (Index t = s; t + config.t_out <= returns.day_count(); t += config.delta_t) out.push_back(t);
    return out;
}

namespace detail {

/// Runs target weights over the schedule. Rebalance k holds from its row to
/// the next rebalance, at most t_out days. `targets` may be shorter than the
/// schedule (buy and hold): later periods keep the current holdings.
///
/// Simple mode lets holdings drift with prices; log mode keeps weights fixed
/// and books exp(w^T r) - 1.
inline BacktestReport simulate_schedule(std::string strategy, const ReturnsPanel& returns, const std::vector<Index>& schedule,
                                        Index t_out, const std::vector<WeightVector>& targets, ReturnMode mode) {
    BacktestReport report;
    report.strategy = std::move(strategy);
    report.symbols = returns.symbols;
    std::vector<double> daily;
    Vector held;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (k < targets.size()) {
            report.rebalance_dates.push_back(returns.dates[static_cast<std::size_t>(schedule[k])]);
            report.weight_history.push_back(targets[k]);
            report.held_before_rebalance.push_back(k == 0 ? targets[k].weights : held);
            held = targets[k].weights;
        }
        const Index end = k + 1 < schedule.size() ? std::min(schedule[k] + t_out, schedule[k + 1]) : schedule[k] + t_out;
        for (Index t = schedule[k]; t < end; ++t) {
            const Vector r = returns.returns.col(t);
            report.daily_dates.push_back(returns.dates[static_cast<std::size_t>(t)]);
            if (mode == ReturnMode::log) {
                daily.push_back(std::expm1(held.dot(r)));
                continue;
            }
            const Vector gross = r.array().exp();
            const double value = held.dot(gross);
            daily.push_back(value - 1.0);
            held = (held.array() * gross.array()).matrix() / value;
        }
    }
    report.daily_returns = Eigen::Map<const Vector>(daily.data(), static_cast<Index>(daily.size()));
    std::vector<Vector> target_vectors;
    for (const auto& w : report.weight_history) target_vectors.push_back(w.weights);
    report.metrics = performance_metrics(report.daily_returns, turnover(target_vectors));
    report.drift_turnover = turnover(target_vectors, report.held_before_rebalance);
    return report;
}

inline double condition_number(const Matrix& s) {
    const Vector ev = eigenvalues_sym(s);
    const double bottom = ev(ev.size() - 1);
    return bottom > 0.0 ? ev(0) / bottom : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Walk-forward backtest of MVP+ on a covariance estimator.
///
/// At each rebalance row t the in-sample window is [t - t_in, t). Networks,
/// when the estimator needs them, are retrained on rolling windows of
/// [t - t_in - pre_history_days, t). With seriation on, assets are reordered by
/// the in-sample correlation before estimation (and training) and the estimate
/// is mapped back to the panel order.
inline BacktestReport walk_forward(const ReturnsPanel& returns, const WalkForwardConfig& config) {
    config.validate();
    const std::vector<Index> schedule = rebalance_schedule(returns, config);
    const bool training = needs_training(config.estimator);
    const Index history = config.t_in + (training ? config.pre_history_days : 0);
    if (schedule.front() < history) {
        throw InvalidParameter("walk-forward: need " + std::to_string(history) + " days before the split, panel has " +
                               std::to_string(schedule.front()) + " (short by " + std::to_string(history - schedule.front()) + ")");
    }
    if (training) {
        const Index required = nn::rolling_history_required(config.t_in, config.train_window_count, config.train_stride);
        if (history < required) {
            throw InvalidParameter("walk-forward: training needs " + std::to_string(required) + " days of history but t_in + pre-history is " +
                                   std::to_string(history));
        }
    }
    const Index p = returns.asset_count();

    std::vector<WeightVector> targets;
    std::vector<WindowDiagnostics> windows;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const Index t = schedule[k];
        WindowDiagnostics diag;
        diag.rebalance_date = returns.dates[static_cast<std::size_t>(t)];
        try {
            const CovarianceMatrix s = window_covariance(returns.returns.middleCols(t - config.t_in, config.t_in));
            diag.condition_number = detail::condition_number(s.values());
            const Permutation perm =
                config.seriation_per_window ? spectral_seriation(cov_to_corr(s).correlation) : Permutation::identity(p);
            diag.seriated = config.seriation_per_window;
            const CovarianceMatrix ordered(perm.apply_symmetric(s.values()), "sample");

            TrainedNets nets;
            if (training) {
                ReturnsPanel panel = returns.slice(t - history, t);
                panel.returns = perm.apply_rows(panel.returns);
                auto train_mode = [&](nn::DenoiserMode mode) {
                    nn::DenoiserConfig c = *config.denoiser;
                    c.input_size = p;
                    c.mode = mode;
                    c.seed = derive_seed(config.denoiser->seed, Domain::training, k);
                    const nn::TrainingSet set = nn::build_training_set_rolling(panel, config.t_in, config.train_window_count,
                                                                               config.train_stride, mode);
                    nn::TrainingResult result = nn::train(c, set);
                    diag.train_loss.push_back(result.train_loss.back());
                    if (!result.validation_loss.empty()) diag.validation_loss.push_back(result.validation_loss.back());
                    return std::move(result.weights);
                };
                if (uses_covariance_net(config.estimator)) nets.covariance = train_mode(nn::DenoiserMode::covariance);
                if (uses_eigenvector_net(config.estimator)) nets.eigenvectors = train_mode(nn::DenoiserMode::eigenvectors);
            }

            Matrix est = perm.inverse().apply_symmetric(estimate(config.estimator, ordered, config.t_in, nets).values());
            if (!is_psd(est)) {
                est = psd_project(est, 0.0);
                diag.psd_projected = true;
            }
            const QpSolution qp = mvp_plus_solve(est);
            diag.kkt_residual = qp.residual;
            targets.push_back(qp.weights);
        } catch (const Error& e) {
            throw NumericError("walk-forward window " + std::to_string(k) + " (" + format_date(diag.rebalance_date) + "): " + e.what());
        }
        windows.push_back(std::move(diag));
    }
    BacktestReport report = detail::simulate_schedule(std::string(to_string(config.estimator)), returns, schedule, config.t_out,
                                                      targets, config.return_mode);
    report.windows = std::move(windows);
    return report;
}

/// Full weight on one symbol from the split date, never rebalanced; spans the
/// same out-of-sample periods as the walk-forward schedule.
inline BacktestReport buy_and_hold(const ReturnsPanel& returns, std::string_view symbol, const WalkForwardConfig& config) {
    const Index idx = returns.symbol_index(symbol);
    const std::vector<Index> schedule = rebalance_schedule(returns, config);
    Vector w = Vector::Zero(returns.asset_count());
    w(idx) = 1.0;
    return detail::simulate_schedule("buy-and-hold:" + std::string(symbol), returns, schedule, config.t_out, {WeightVector{w, true}},
                                     config.return_mode);
}

/// Equal weights, reset to 1/p at every rebalance.
inline BacktestReport uniform_portfolio(const ReturnsPanel& returns, const WalkForwardConfig& config) {
    const std::vector<Index> schedule = rebalance_schedule(returns, config);
    const Index p = returns.asset_count();
    const WeightVector w{Vector::Constant(p, 1.0 / static_cast<double>(p)), true};
    return detail::simulate_schedule("uniform", returns, schedule, config.t_out, std::vector<WeightVector>(schedule.size(), w),
                                     config.return_mode);
}

inline std::string backtest_metrics_json(const BacktestReport& r) {
    nlohmann::ordered_json j;
    j["strategy"] = r.strategy;
    j["rebalances"] = r.rebalance_dates.size();
    j["days"] = r.daily_returns.size();
    j["metrics"] = metrics_json(r.metrics);
    j["sharpe_defined"] = r.metrics.sharpe_defined;
    j["drift_turnover"] = r.drift_turnover;
    nlohmann::ordered_json windows = nlohmann::ordered_json::array();
    for (const auto& w : r.windows) {
        nlohmann::ordered_json d;
        d["date"] = format_date(w.rebalance_date);
        d["condition_number"] = w.condition_number;
        d["seriated"] = w.seriated;
        d["psd_projected"] = w.psd_projected;
        d["kkt_residual"] = w.kkt_residual;
        if (!w.train_loss.empty()) d["train_loss"] = w.train_loss;
        if (!w.validation_loss.empty()) d["validation_loss"] = w.validation_loss;
        windows.push_back(d);
    }
    j["windows"] = windows;
    return j.dump(2) + "\n";
}

inline std::string backtest_weights_csv(const BacktestReport& r) {
    std::string out = "date";
    for (const auto& s : r.symbols) out += "," + s;
    out += "\n";
    for (std::size_t k = 0; k < r.rebalance_dates.size(); ++k) {
        out += format_date(r.rebalance_dates[k]);
        for (Index i = 0; i < r.weight_history[k].size(); ++i) out += "," + io::format_double(r.weight_history[k](i));
        out += "\n";
    }
    return out;
}

inline std::string backtest_daily_csv(const BacktestReport& r) {
    std::string out = "date,return\n";
    for (Index t = 0; t < r.daily_returns.size(); ++t) {
        out += format_date(r.daily_dates[static_cast<std::size_t>(t)]) + "," + io::format_double(r.daily_returns(t)) + "\n";
    }
    return out;
}

inline std::string backtest_wealth_csv(const BacktestReport& r) {
    std::string out = "date,wealth\n";
    double wealth = 1.0;
    for (Index t = 0; t < r.daily_returns.size(); ++t) {
        wealth *= 1.0 + r.daily_returns(t);
        out += format_date(r.daily_dates[static_cast<std::size_t>(t)]) + "," + io::format_double(wealth) + "\n";
    }
    return out;
}

/// Writes metrics.json, weights.csv, daily_returns.csv and wealth.csv into `dir`.
inline void write_backtest_report(const BacktestReport& r, const std::filesystem::path& dir) {
    io::write_atomic(dir / "metrics.json", backtest_metrics_json(r));
    io::write_atomic(dir / "weights.csv", backtest_weights_csv(r));
    io::write_atomic(dir / "daily_returns.csv", backtest_daily_csv(r));
    io::write_atomic(dir / "wealth.csv", backtest_wealth_csv(r));
}

}  // namespace covden

#endif  // COVDEN_BACKTEST_HPP
