#ifndef COVDEN_ESTIMATORS_HPP
#define COVDEN_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "covden/linkage.hpp"
#include "covden/spectral.hpp"
#include "covden/types.hpp"

namespace covden {

enum class EstimatorId { naive, lp, cnn, hybrid, alca, two_step_lp, two_step_cnn, two_step_hybrid };

inline constexpr EstimatorId kAllEstimators[] = {
    EstimatorId::naive, EstimatorId::lp,          EstimatorId::cnn,          EstimatorId::hybrid,
    EstimatorId::alca,  EstimatorId::two_step_lp, EstimatorId::two_step_cnn, EstimatorId::two_step_hybrid,
};

inline std::string_view to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::naive: return "naive";
        case EstimatorId::lp: return "lp";
        case EstimatorId::cnn: return "cnn";
        case EstimatorId::hybrid: return "hybrid";
        case EstimatorId::alca: return "alca";
        case EstimatorId::two_step_lp: return "2s-lp";
        case EstimatorId::two_step_cnn: return "2s-cnn";
        case EstimatorId::two_step_hybrid: return "2s-hybrid";
    }
    return "unknown";
}

inline EstimatorId parse_estimator(std::string_view name) {
    for (EstimatorId id : kAllEstimators) {
        if (to_string(id) == name) return id;
    }
    throw InvalidParameter("unknown estimator '" + std::string(name) +
                           "' (expected naive, lp, cnn, hybrid, alca, 2s-lp, 2s-cnn or 2s-hybrid)");
}

inline std::vector<EstimatorId> parse_estimator_list(std::string_view csv) {
    std::vector<EstimatorId> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const auto item = csv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (!item.empty()) out.push_back(parse_estimator(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw InvalidParameter("empty estimator list");
    return out;
}

/// Estimators that need a trained covariance-mode network.
inline bool uses_covariance_net(EstimatorId id) {
    return id == EstimatorId::cnn || id == EstimatorId::two_step_cnn;
}

/// Estimators that need a trained eigenvector-mode network.
inline bool uses_eigenvector_net(EstimatorId id) {
    return id == EstimatorId::hybrid || id == EstimatorId::two_step_hybrid;
}

inline bool needs_training(EstimatorId id) { return uses_covariance_net(id) || uses_eigenvector_net(id); }

inline std::string estimator_provenance(EstimatorId id) { return "estimator:" + std::string(to_string(id)); }

inline CovarianceMatrix estimate_naive(const CovarianceMatrix& s) {
    return s.with_provenance(estimator_provenance(EstimatorId::naive));
}

/// Nonlinear shrinkage of a sample spectrum with concentration q = p / n:
///
///   xi_k = lambda_k / |1 - q - q lambda_k G(lambda_k - i eps_k)|^2
///
/// with G(z) = (1/p) sum_j 1/(lambda_j - z) over the full sample spectrum and
/// eps_k = lambda_k / sqrt(p). Eigenvalues at or below zero map to zero.
inline Vector lp_shrink_eigenvalues(const Vector& eigenvalues, double q) {
    const Index p = eigenvalues.size();
    if (p == 0) throw InvalidParameter("lp_shrink_eigenvalues: empty spectrum");
    if (!(q > 0.0) || !std::isfinite(q)) throw InvalidParameter("lp_shrink_eigenvalues: q must be positive and finite");
    const double smoothing = 1.0 / std::sqrt(static_cast<double>(p));
    Vector xi(p);
    for (Index k = 0; k < p; ++k) {
        const double lambda = eigenvalues(k);
        if (!(lambda > 0.0)) {
            xi(k) = 0.0;
            continue;
        }
        const std::complex<double> z{lambda, -smoothing * lambda};
        const std::complex<double> g = stieltjes(z, eigenvalues);
        const double denom = std::norm(1.0 - q - q * lambda * g);
        xi(k) = lambda / denom;
    }
    return xi;
}

/// Ledoit-Peche shrinkage: sample eigenvectors kept, eigenvalues replaced by
/// `lp_shrink_eigenvalues` with q = p / n.
inline CovarianceMatrix estimate_lp(const CovarianceMatrix& s, Index n) {
    if (n < 2) throw InvalidParameter("estimate_lp: n must be at least 2");
    const double q = static_cast<double>(s.dim()) / static_cast<double>(n);
    const SpectralDecomposition sd = eigendecompose_sym(s);
    const Vector xi = lp_shrink_eigenvalues(sd.eigenvalues, q);
    Matrix out = symmetrize(sd.eigenvectors * xi.asDiagonal() * sd.eigenvectors.transpose());
    return {std::move(out), estimator_provenance(EstimatorId::lp)};
}

/// Hierarchical filtering with average linkage:
/// correlation -> distance 1 - C -> dendrogram -> cophenetic distance ->
/// filtered correlation 1 - D(rho) -> rescaled by the original variances.
inline CovarianceMatrix estimate_alca(const CovarianceMatrix& s) {
    const CorrelationSplit split = cov_to_corr(s);
    const Index p = s.dim();
    Matrix distance(p, p);
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < p; ++i) {
            double c = split.correlation(i, j);
            if (std::abs(c) > 1.0 + 1e-10) {
                throw InvalidParameter("estimate_alca: correlation " + std::to_string(c) + " at (" + std::to_string(i) +
                                       ", " + std::to_string(j) + ") lies outside [-1, 1]");
            }
            c = std::clamp(c, -1.0, 1.0);
            distance(i, j) = i == j ? 0.0 : 1.0 - c;
        }
    }
    const Dendrogram tree = build_dendrogram(distance, Linkage::average);
    Matrix filtered = (1.0 - tree.cophenetic().array()).matrix();
    filtered.diagonal().setOnes();
    return {corr_to_cov(filtered, split.variances), estimator_provenance(EstimatorId::alca)};
}

/// V diag(xi) V^T, symmetrized. V need not be orthogonal.
inline CovarianceMatrix assemble_hybrid(const Matrix& vectors, const Vector& xi) {
    if (vectors.rows() != vectors.cols() || vectors.cols() != xi.size()) {
        throw InvalidParameter("assemble_hybrid: expected a p x p matrix and a length-p spectrum");
    }
    if ((xi.array() < 0.0).any()) throw InvalidParameter("assemble_hybrid: eigenvalues must be nonnegative");
    Matrix out = symmetrize(vectors * xi.asDiagonal() * vectors.transpose());
    return {std::move(out), estimator_provenance(EstimatorId::hybrid)};
}

}  // namespace covden

#endif  // COVDEN_ESTIMATORS_HPP
