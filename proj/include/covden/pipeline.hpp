#ifndef COVDEN_PIPELINE_HPP
#define COVDEN_PIPELINE_HPP

#include <optional>
#include <string>

#include "covden/estimators.hpp"
#include "covden/nn/denoiser.hpp"

namespace covden {

/// Trained networks available to the estimator dispatch.
struct TrainedNets {
    std::optional<nn::DenoiserWeights> covariance;
    std::optional<nn::DenoiserWeights> eigenvectors;
};

namespace detail {

inline const nn::DenoiserWeights& require_net(const std::optional<nn::DenoiserWeights>& net, nn::DenoiserMode mode,
                                              Index p, const char* who) {
    if (!net) throw InvalidParameter(std::string(who) + ": no trained " + std::string(nn::to_string(mode)) + " network");
    if (net->config.mode != mode) throw InvalidParameter(std::string(who) + ": network was trained in the wrong mode");
    if (net->config.input_size != p) {
        throw InvalidParameter(std::string(who) + ": network expects p = " + std::to_string(net->config.input_size) +
                               ", got " + std::to_string(p));
    }
    return *net;
}

inline CovarianceMatrix as_estimate(Matrix m, EstimatorId id) {
    for (Index i = 0; i < m.rows(); ++i) {
        if (!(m(i, i) > 0.0)) {
            throw NumericError(std::string(to_string(id)) + ": estimate has non-positive variance at index " + std::to_string(i));
        }
    }
    return {std::move(m), estimator_provenance(id)};
}

}  // namespace detail

/// Covariance-mode network applied to the sample matrix.
inline CovarianceMatrix estimate_cnn(const CovarianceMatrix& s, const nn::DenoiserWeights& net) {
    return detail::as_estimate(nn::forward(net, s.values()), EstimatorId::cnn);
}

/// Eigenvectors denoised by the eigenvector-mode network, eigenvalues from LP.
inline CovarianceMatrix estimate_hybrid(const CovarianceMatrix& s, Index n, const nn::DenoiserWeights& net) {
    if (n < 2) throw InvalidParameter("estimate_hybrid: n must be at least 2");
    const SpectralDecomposition sd = eigendecompose_sym(s);
    const Vector xi = lp_shrink_eigenvalues(sd.eigenvalues, static_cast<double>(s.dim()) / static_cast<double>(n));
    const Matrix v = nn::forward(net, sd.eigenvectors);
    return detail::as_estimate(assemble_hybrid(v, xi).values(), EstimatorId::hybrid);
}

inline CovarianceMatrix estimate_first_step(const CovarianceMatrix& s, Index n, EstimatorId first, const TrainedNets& nets) {
    switch (first) {
        case EstimatorId::lp: return estimate_lp(s, n);
        case EstimatorId::cnn:
            return estimate_cnn(s, detail::require_net(nets.covariance, nn::DenoiserMode::covariance, s.dim(), "cnn"));
        case EstimatorId::hybrid:
            return estimate_hybrid(s, n, detail::require_net(nets.eigenvectors, nn::DenoiserMode::eigenvectors, s.dim(), "hybrid"));
        default:
            throw InvalidParameter("two-step: first step must be lp, cnn or hybrid, got '" + std::string(to_string(first)) + "'");
    }
}

inline EstimatorId two_step_id(EstimatorId first) {
    switch (first) {
        case EstimatorId::lp: return EstimatorId::two_step_lp;
        case EstimatorId::cnn: return EstimatorId::two_step_cnn;
        case EstimatorId::hybrid: return EstimatorId::two_step_hybrid;
        default: throw InvalidParameter("two-step: first step must be lp, cnn or hybrid, got '" + std::string(to_string(first)) + "'");
    }
}

/// First-step estimate followed by ALCA filtering.
inline CovarianceMatrix estimate_two_step(const CovarianceMatrix& s, Index n, EstimatorId first, const TrainedNets& nets = {}) {
    const EstimatorId id = two_step_id(first);
    return estimate_alca(estimate_first_step(s, n, first, nets)).with_provenance(estimator_provenance(id));
}

/// Dispatches any estimator id.
inline CovarianceMatrix estimate(EstimatorId id, const CovarianceMatrix& s, Index n, const TrainedNets& nets = {}) {
    switch (id) {
        case EstimatorId::naive: return estimate_naive(s);
        case EstimatorId::lp: return estimate_lp(s, n);
        case EstimatorId::alca: return estimate_alca(s);
        case EstimatorId::cnn:
        case EstimatorId::hybrid: return estimate_first_step(s, n, id, nets);
        case EstimatorId::two_step_lp: return estimate_two_step(s, n, EstimatorId::lp, nets);
        case EstimatorId::two_step_cnn: return estimate_two_step(s, n, EstimatorId::cnn, nets);
        case EstimatorId::two_step_hybrid: return estimate_two_step(s, n, EstimatorId::hybrid, nets);
    }
    throw InvalidParameter("unknown estimator");
}

}  // namespace covden

#endif  // COVDEN_PIPELINE_HPP
