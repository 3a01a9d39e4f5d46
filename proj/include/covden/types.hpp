#ifndef COVDEN_TYPES_HPP
#define COVDEN_TYPES_HPP

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "covden/error.hpp"

namespace covden {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kSymmetryTolerance = 1e-12;

/// (M + M^T) / 2, exactly symmetric.
inline Matrix symmetrize(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

inline double max_asymmetry(const Matrix& m) {
    if (m.rows() == 0) return 0.0;
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// Symmetric p x p matrix with strictly positive diagonal, tagged with where it
/// came from ("model-1", "sample", "estimator:lp", ...).
///
/// Construction checks symmetry and the diagonal. Positive semidefiniteness
/// needs an eigensolve and is checked separately (see `spectral.hpp`).
class CovarianceMatrix {
public:
    CovarianceMatrix(Matrix values, std::string provenance)
        : values_(std::move(values)), provenance_(std::move(provenance)) {
        if (values_.rows() == 0 || values_.rows() != values_.cols()) {
            throw InvalidParameter("covariance matrix must be square and non-empty, got " +
                                   std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()));
        }
        if (!values_.allFinite()) {
            throw NumericError("covariance matrix (" + provenance_ + ") has non-finite entries");
        }
        if (max_asymmetry(values_) > kSymmetryTolerance) {
            throw InvalidParameter("covariance matrix (" + provenance_ + ") is not symmetric");
        }
        for (Index i = 0; i < values_.rows(); ++i) {
            if (!(values_(i, i) > 0.0)) {
                throw InvalidParameter("covariance matrix (" + provenance_ + ") has non-positive variance at index " +
                                       std::to_string(i));
            }
        }
    }

    const Matrix& values() const noexcept { return values_; }
    Index dim() const noexcept { return values_.rows(); }
    const std::string& provenance() const noexcept { return provenance_; }
    double operator()(Index i, Index j) const { return values_(i, j); }

    CovarianceMatrix with_provenance(std::string provenance) const { return {values_, std::move(provenance)}; }

private:
    Matrix values_;
    std::string provenance_;
};

}  // namespace covden

#endif  // COVDEN_TYPES_HPP
