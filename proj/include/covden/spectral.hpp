#ifndef COVDEN_SPECTRAL_HPP
#define COVDEN_SPECTRAL_HPP

#include <algorithm>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "covden/types.hpp"

namespace covden {

/// Eigenvalues in descending order with matching eigenvector columns.
/// In every column the entry of largest magnitude is nonnegative.
struct SpectralDecomposition {
    Vector eigenvalues;
    Matrix eigenvectors;

    Index size() const noexcept { return eigenvalues.size(); }

    Matrix reconstruct() const { return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose(); }
};

/// Flips the sign of each column so that its largest-magnitude entry is
/// nonnegative. Ties go to the lowest row index.
inline void apply_sign_convention(Matrix& vectors) {
    for (Index k = 0; k < vectors.cols(); ++k) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, k));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (vectors(arg, k) < 0.0) vectors.col(k) = -vectors.col(k);
    }
}

inline SpectralDecomposition eigendecompose_sym(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidParameter("eigendecompose_sym: matrix must be square");
    const Index p = m.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigendecompose_sym: QR iteration did not converge within " + std::to_string(30 * p) +
                           " iterations");
    }
    // Eigen returns ascending order; reverse with a stable sort so equal
    // eigenvalues keep the solver's relative order.
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    const Vector& values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) > values(b); });

    SpectralDecomposition out{Vector(p), Matrix(p, p)};
    for (Index k = 0; k < p; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = values(src);
        out.eigenvectors.col(k) = solver.eigenvectors().col(src);
    }
    apply_sign_convention(out.eigenvectors);
    return out;
}

inline SpectralDecomposition eigendecompose_sym(const CovarianceMatrix& m) { return eigendecompose_sym(m.values()); }

inline Vector eigenvalues_sym(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("eigenvalues_sym: QR iteration did not converge");
    return solver.eigenvalues().reverse();
}

/// True when the minimum eigenvalue is at least -tolerance * max eigenvalue.
inline bool is_psd(const Matrix& m, double tolerance = 1e-10) {
    const Vector ev = eigenvalues_sym(symmetrize(m));
    const double top = std::max(ev(0), 0.0);
    return ev(ev.size() - 1) >= -tolerance * top;
}

/// Symmetrizes m and clamps its eigenvalues at `floor`.
inline Matrix psd_project(const Matrix& m, double floor = 0.0) {
    if (floor < 0.0) throw InvalidParameter("psd_project: floor must be nonnegative");
    SpectralDecomposition sd = eigendecompose_sym(symmetrize(m));
    sd.eigenvalues = sd.eigenvalues.cwiseMax(floor);
    return symmetrize(sd.reconstruct());
}

/// G(z) = (1/p) sum_j 1 / (lambda_j - z).
inline std::complex<double> stieltjes(std::complex<double> z, const Vector& eigenvalues) {
    if (eigenvalues.size() == 0) throw InvalidParameter("stieltjes: empty spectrum");
    std::complex<double> sum{0.0, 0.0};
    for (Index j = 0; j < eigenvalues.size(); ++j) {
        const std::complex<double> d = eigenvalues(j) - z;
        if (d == std::complex<double>{0.0, 0.0}) {
            throw NumericError("stieltjes: z coincides with eigenvalue " + std::to_string(eigenvalues(j)));
        }
        sum += 1.0 / d;
    }
    return sum / static_cast<double>(eigenvalues.size());
}

struct CorrelationSplit {
    Matrix correlation;
    Vector variances;  // H
};

inline CorrelationSplit cov_to_corr(const Matrix& m) {
    const Index p = m.rows();
    Vector h = m.diagonal();
    for (Index i = 0; i < p; ++i) {
        if (!(h(i) > 0.0)) throw InvalidParameter("cov_to_corr: non-positive variance at index " + std::to_string(i));
    }
    const Vector inv_sd = h.cwiseSqrt().cwiseInverse();
    Matrix c = inv_sd.asDiagonal() * m * inv_sd.asDiagonal();
    c = symmetrize(c);
    c.diagonal().setOnes();
    return {std::move(c), std::move(h)};
}

inline CorrelationSplit cov_to_corr(const CovarianceMatrix& m) { return cov_to_corr(m.values()); }

/// H^{1/2} C H^{1/2}.
inline Matrix corr_to_cov(const Matrix& correlation, const Vector& variances) {
    if (correlation.rows() != variances.size()) throw InvalidParameter("corr_to_cov: dimension mismatch");
    const Vector sd = variances.cwiseSqrt();
    Matrix out = sd.asDiagonal() * correlation * sd.asDiagonal();
    out = symmetrize(out);
    out.diagonal() = variances;
    return out;
}

/// A bijection on {0, ..., p-1}. order[k] is the original index placed at position k.
class Permutation {
public:
    Permutation() = default;

    explicit Permutation(std::vector<Index> order) : order_(std::move(order)) {
        std::vector<bool> seen(order_.size(), false);
        for (Index v : order_) {
            if (v < 0 || static_cast<std::size_t>(v) >= order_.size() || seen[static_cast<std::size_t>(v)]) {
                throw InvalidParameter("permutation: not a bijection");
            }
            seen[static_cast<std::size_t>(v)] = true;
        }
    }

    static Permutation identity(Index p) {
        std::vector<Index> order(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), Index{0});
        return Permutation(std::move(order));
    }

    const std::vector<Index>& order() const noexcept { return order_; }
    Index size() const noexcept { return static_cast<Index>(order_.size()); }
    Index operator[](Index k) const { return order_[static_cast<std::size_t>(k)]; }

    Permutation inverse() const {
        std::vector<Index> inv(order_.size());
        for (std::size_t k = 0; k < order_.size(); ++k) inv[static_cast<std::size_t>(order_[k])] = static_cast<Index>(k);
        return Permutation(std::move(inv));
    }

    /// out(a, b) = m(order[a], order[b]).
    Matrix apply_symmetric(const Matrix& m) const {
        const Index p = size();
        Matrix out(p, p);
        for (Index b = 0; b < p; ++b) {
            for (Index a = 0; a < p; ++a) out(a, b) = m((*this)[a], (*this)[b]);
        }
        return out;
    }

    /// Reorders the rows of m.
    Matrix apply_rows(const Matrix& m) const {
        Matrix out(m.rows(), m.cols());
        for (Index a = 0; a < size(); ++a) out.row(a) = m.row((*this)[a]);
        return out;
    }

    Vector apply(const Vector& v) const {
        Vector out(v.size());
        for (Index a = 0; a < size(); ++a) out(a) = v((*this)[a]);
        return out;
    }

    bool operator==(const Permutation&) const = default;

private:
    std::vector<Index> order_;
};

/// Spectral seriation: orders items by the Fiedler vector of the Laplacian of
/// the similarity A = (C + 1) / 2.
///
/// The Fiedler vector is sign-fixed so its first entry is <= its last; ties in
/// the sort go to the lower index. When the second-smallest Laplacian
/// eigenvalue is degenerate the Fiedler direction is not defined and the
/// identity order is returned.
inline Permutation spectral_seriation(const Matrix& correlation) {
    const Index p = correlation.rows();
    if (p != correlation.cols()) throw InvalidParameter("spectral_seriation: matrix must be square");
    if (p <= 2) return Permutation::identity(p);

    const Matrix a = (symmetrize(correlation).array() + 1.0).matrix() * 0.5;
    Matrix laplacian = -a;
    laplacian.diagonal() += a.rowwise().sum();

    Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian);
    if (solver.info() != Eigen::Success) throw NumericError("spectral_seriation: eigensolver did not converge");
    const Vector& lambda = solver.eigenvalues();  // ascending
    const double scale = std::max(1.0, std::abs(lambda(p - 1)));
    if (lambda(2) - lambda(1) <= 1e-9 * scale) return Permutation::identity(p);

    Vector fiedler = solver.eigenvectors().col(1);
    if (fiedler(0) > fiedler(p - 1)) fiedler = -fiedler;

    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return fiedler(x) < fiedler(y); });
    return Permutation(std::move(order));
}

}  // namespace covden

#endif  // COVDEN_SPECTRAL_HPP
