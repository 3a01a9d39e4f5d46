#ifndef COVDEN_EVALUATION_HPP
#define COVDEN_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "covden/io.hpp"
#include "covden/models.hpp"
#include "covden/nn/training.hpp"
#include "covden/nn/training_set.hpp"
#include "covden/pipeline.hpp"

namespace covden {

inline constexpr double kSingularTolerance = 1e-12;

struct LossPair {
    double frobenius = 0.0;
    double mv = 0.0;
};

inline double frobenius_loss(const Matrix& xi, const Matrix& sigma) {
    if (xi.rows() != sigma.rows() || xi.cols() != sigma.cols() || xi.rows() != xi.cols()) {
        throw InvalidParameter("frobenius_loss: dimension mismatch");
    }
    return (xi - sigma).squaredNorm() / static_cast<double>(xi.rows());
}

inline double frobenius_loss(const CovarianceMatrix& xi, const CovarianceMatrix& sigma) {
    return frobenius_loss(xi.values(), sigma.values());
}

namespace detail {

inline SpectralDecomposition invertible_spectrum(const Matrix& m, const char* name) {
    SpectralDecomposition sd = eigendecompose_sym(m);
    const double top = sd.eigenvalues(0);
    const double bottom = sd.eigenvalues(sd.size() - 1);
    if (!(top > 0.0) || !(bottom > kSingularTolerance * top)) {
        throw SingularMatrixError(std::string("mv_loss: ") + name + " is singular (eigenvalues " + std::to_string(bottom) +
                                  " .. " + std::to_string(top) + ")");
    }
    return sd;
}

}  // namespace detail

namespace detail {

// Tr(Sigma^-1 Xi Sigma^-1) = sum_k (v_k^T Xi v_k) / sigma_k^2
inline double mv_from_spectra(const Matrix& xi, const SpectralDecomposition& es, const Vector& xi_eigenvalues) {
    const double p = static_cast<double>(xi.rows());
    const Vector quad = (es.eigenvectors.transpose() * xi * es.eigenvectors).diagonal();
    const double num = (quad.array() / es.eigenvalues.array().square()).sum() / p;
    const double tr_sigma_inv = es.eigenvalues.cwiseInverse().sum() / p;
    const double tr_xi_inv = xi_eigenvalues.cwiseInverse().sum() / p;
    return num / (tr_sigma_inv * tr_sigma_inv) - 1.0 / tr_xi_inv;
}

inline void require_same_shape(const Matrix& xi, const Matrix& sigma) {
    if (xi.rows() != sigma.rows() || xi.cols() != sigma.cols() || xi.rows() != xi.cols()) {
        throw InvalidParameter("mv_loss: dimension mismatch");
    }
}

}  // namespace detail

/// MV loss:
///   [Tr(Sigma^-1 Xi Sigma^-1) / p] / [Tr(Sigma^-1) / p]^2 - 1 / [Tr(Xi^-1) / p]
/// Both arguments must be invertible (min eigenvalue > 1e-12 max).
inline double mv_loss(const Matrix& xi, const Matrix& sigma) {
    detail::require_same_shape(xi, sigma);
    const SpectralDecomposition es = detail::invertible_spectrum(sigma, "sigma");
    const SpectralDecomposition ex = detail::invertible_spectrum(xi, "xi");
    return detail::mv_from_spectra(xi, es, ex.eigenvalues);
}

inline double mv_loss(const CovarianceMatrix& xi, const CovarianceMatrix& sigma) {
    return mv_loss(xi.values(), sigma.values());
}

/// Raises every eigenvalue to at least floor * lambda_max.
inline Matrix floor_spectrum(const Matrix& m, double floor = kSingularTolerance) {
    SpectralDecomposition sd = eigendecompose_sym(m);
    const double top = std::max(sd.eigenvalues(0), 0.0);
    sd.eigenvalues = sd.eigenvalues.cwiseMax(floor * top);
    return symmetrize(sd.reconstruct());
}

/// MV loss of Xi with its spectrum floored at floor * lambda_max. The floored
/// eigenvalues are used directly, so the result does not depend on how the
/// reconstruction rounds. Sigma must still be invertible.
inline double mv_loss_floored(const Matrix& xi, const Matrix& sigma, double floor = kSingularTolerance) {
    detail::require_same_shape(xi, sigma);
    const SpectralDecomposition es = detail::invertible_spectrum(sigma, "sigma");
    SpectralDecomposition ex = eigendecompose_sym(xi);
    const double top = ex.eigenvalues(0);
    if (!(top > 0.0)) throw SingularMatrixError("mv_loss: xi has no positive eigenvalue");
    ex.eigenvalues = ex.eigenvalues.cwiseMax(floor * top);
    return detail::mv_from_spectra(ex.reconstruct(), es, ex.eigenvalues);
}

struct MonteCarloRow {
    EstimatorId estimator;
    double mean_f = 0.0;
    double se_f = 0.0;
    double mean_mv = 0.0;
    double se_mv = 0.0;
    Index failures = 0;
    Index mv_adjustments = 0;  // realizations where the estimate needed the eigenvalue floor
};

struct MonteCarloReport {
    ModelSpec model;
    Index p = 0;
    Index n = 0;
    Index m = 0;
    std::uint64_t seed = 0;
    std::vector<MonteCarloRow> rows;
    std::optional<nn::DenoiserConfig> denoiser;
    Index training_count = 0;

    const MonteCarloRow& row(EstimatorId id) const {
        for (const auto& r : rows) {
            if (r.estimator == id) return r;
        }
        throw InvalidParameter("report has no row for '" + std::string(to_string(id)) + "'");
    }
};

struct MonteCarloOptions {
    std::optional<nn::DenoiserConfig> denoiser;  // required for cnn / hybrid rows
    Index training_count = 100;
    unsigned threads = 1;
};

namespace detail {

struct Outcome {
    double f = 0.0;
    double mv = 0.0;
    bool failed = false;
    bool adjusted = false;
};

inline void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
    mean = 0.0;
    se = 0.0;
    if (v.empty()) {
        mean = std::nan("");
        se = std::nan("");
        return;
    }
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace detail

/// Trains the networks a set of estimators needs on a fresh simulated set
/// (seeds from the training domain, disjoint from evaluation draws).
inline TrainedNets train_for_estimators(const ModelSpec& model, Index n, const std::vector<EstimatorId>& estimators,
                                        const std::optional<nn::DenoiserConfig>& denoiser, Index training_count,
                                        std::uint64_t seed) {
    TrainedNets nets;
    auto train_mode = [&](nn::DenoiserMode mode) {
        if (!denoiser) throw InvalidParameter("estimators cnn / hybrid need a denoiser configuration");
        nn::DenoiserConfig c = *denoiser;
        c.input_size = model.p;
        c.mode = mode;
        const nn::TrainingSet set = nn::build_training_set_simulation(model, n, training_count, seed, mode);
        return nn::train(c, set).weights;
    };
    const bool want_cov = std::any_of(estimators.begin(), estimators.end(), uses_covariance_net);
    const bool want_eig = std::any_of(estimators.begin(), estimators.end(), uses_eigenvector_net);
    if (want_cov) nets.covariance = train_mode(nn::DenoiserMode::covariance);
    if (want_eig) nets.eigenvectors = train_mode(nn::DenoiserMode::eigenvectors);
    return nets;
}

/// Monte Carlo evaluation: realization i draws S with derive_seed(seed,
/// evaluation, i), every estimator is applied and both losses recorded.
///
/// Realizations are distributed over `threads` workers; results land in
/// per-realization slots and are reduced in index order, so the report does
/// not depend on the thread count. An estimator that throws on a realization
/// is counted as a failure for that row. An estimate too singular for the MV
/// loss is floored at 1e-12 lambda_max and counted in `mv_adjustments`.
inline MonteCarloReport run_monte_carlo(const ModelSpec& model, Index n, Index m, const std::vector<EstimatorId>& estimators,
                                        std::uint64_t seed, const MonteCarloOptions& options = {}) {
    model.validate();
    if (m < 1) throw InvalidParameter("run_monte_carlo: m must be at least 1");
    if (n < 2) throw InvalidParameter("run_monte_carlo: n must be at least 2");
    if (estimators.empty()) throw InvalidParameter("run_monte_carlo: no estimators");

    const CovarianceMatrix sigma = build_model(model);
    const Matrix root = sqrt_psd(sigma.values());
    const TrainedNets nets = train_for_estimators(model, n, estimators, options.denoiser, options.training_count, seed);

    const std::size_t k = estimators.size();
    std::vector<detail::Outcome> outcomes(static_cast<std::size_t>(m) * k);
    auto run_one = [&](Index i) {
        const SampleDraw draw = sample_covariance(sigma, n, derive_seed(seed, Domain::evaluation, static_cast<std::uint64_t>(i)), &root);
        for (std::size_t e = 0; e < k; ++e) {
            detail::Outcome& out = outcomes[static_cast<std::size_t>(i) * k + e];
            try {
                const CovarianceMatrix xi = estimate(estimators[e], draw.sample, n, nets);
                out.f = frobenius_loss(xi, sigma);
                try {
                    out.mv = mv_loss(xi.values(), sigma.values());
                } catch (const SingularMatrixError&) {
                    out.mv = mv_loss_floored(xi.values(), sigma.values());
                    out.adjusted = true;
                }
                if (!std::isfinite(out.f) || !std::isfinite(out.mv)) out.failed = true;
            } catch (const Error&) {
                out.failed = true;
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(m)));
    if (threads == 1) {
        for (Index i = 0; i < m; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (Index i = t; i < m; i += threads) run_one(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    MonteCarloReport report;
    report.model = model;
    report.p = sigma.dim();
    report.n = n;
    report.m = m;
    report.seed = seed;
    if (std::any_of(estimators.begin(), estimators.end(), needs_training)) {
        report.denoiser = options.denoiser;
        report.training_count = options.training_count;
    }
    for (std::size_t e = 0; e < k; ++e) {
        MonteCarloRow row{estimators[e]};
        std::vector<double> fs;
        std::vector<double> mvs;
        for (Index i = 0; i < m; ++i) {
            const detail::Outcome& o = outcomes[static_cast<std::size_t>(i) * k + e];
            if (o.failed) {
                ++row.failures;
                continue;
            }
            if (o.adjusted) ++row.mv_adjustments;
            fs.push_back(o.f);
            mvs.push_back(o.mv);
        }
        detail::mean_and_se(fs, row.mean_f, row.se_f);
        detail::mean_and_se(mvs, row.mean_mv, row.se_mv);
        report.rows.push_back(row);
    }
    return report;
}

inline std::string report_csv(const MonteCarloReport& report) {
    std::string out = "estimator,mean_f,se_f,mean_mv,se_mv,failures\n";
    for (const auto& r : report.rows) {
        out += std::string(to_string(r.estimator)) + "," + io::format_double(r.mean_f) + "," + io::format_double(r.se_f) +
               "," + io::format_double(r.mean_mv) + "," + io::format_double(r.se_mv) + "," + std::to_string(r.failures) + "\n";
    }
    return out;
}

inline nlohmann::ordered_json model_json(const ModelSpec& spec) {
    nlohmann::ordered_json j;
    j["kind"] = std::string(to_string(spec.kind));
    j["p"] = spec.p;
    if (spec.kind == ModelKind::block_diagonal) j["block_sizes"] = spec.block_sizes;
    if (spec.kind != ModelKind::power_law) j["gamma"] = spec.gamma;
    if (spec.kind == ModelKind::power_law) {
        j["alpha"] = spec.alpha;
        j["seed"] = spec.seed;
    }
    return j;
}

inline nlohmann::ordered_json denoiser_json(const nn::DenoiserConfig& c) {
    nlohmann::ordered_json j;
    j["input_size"] = c.input_size;
    j["num_blocks"] = c.num_blocks;
    j["num_filters"] = c.num_filters;
    j["kernel"] = c.kernel;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["validation_fraction"] = c.validation_fraction;
    j["seed"] = c.seed;
    j["mode"] = std::string(nn::to_string(c.mode));
    return j;
}

inline std::string report_json(const MonteCarloReport& report) {
    nlohmann::ordered_json j;
    j["model"] = model_json(report.model);
    j["p"] = report.p;
    j["n"] = report.n;
    j["m"] = report.m;
    j["seed"] = report.seed;
    j["realization_seeds"] = "derive_seed(seed, evaluation, i), i = 0 .. m-1";
    if (report.denoiser) {
        j["denoiser"] = denoiser_json(*report.denoiser);
        j["training_count"] = report.training_count;
        j["training_seeds"] = "derive_seed(seed, training, i), i = 0 .. training_count-1";
    }
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["estimator"] = std::string(to_string(r.estimator));
        row["mean_f"] = r.mean_f;
        row["se_f"] = r.se_f;
        row["mean_mv"] = r.mean_mv;
        row["se_mv"] = r.se_mv;
        row["failures"] = r.failures;
        row["mv_adjustments"] = r.mv_adjustments;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

}  // namespace covden

#endif  // COVDEN_EVALUATION_HPP
