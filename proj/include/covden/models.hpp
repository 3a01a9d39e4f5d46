#ifndef COVDEN_MODELS_HPP
#define COVDEN_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "covden/random.hpp"
#include "covden/spectral.hpp"
#include "covden/types.hpp"

namespace covden {

enum class ModelKind { block_diagonal, nested_hierarchical, power_law };

inline std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::block_diagonal: return "block";
        case ModelKind::nested_hierarchical: return "nested";
        case ModelKind::power_law: return "powerlaw";
    }
    return "unknown";
}

inline ModelKind parse_model_kind(std::string_view name) {
    if (name == "block") return ModelKind::block_diagonal;
    if (name == "nested") return ModelKind::nested_hierarchical;
    if (name == "powerlaw") return ModelKind::power_law;
    throw InvalidParameter("unknown model kind '" + std::string(name) + "' (expected block, nested or powerlaw)");
}

inline const std::vector<Index>& default_block_sizes() {
    static const std::vector<Index> sizes{3, 3, 4, 5, 6, 7, 7, 9, 11, 13, 15, 17};
    return sizes;
}

/// Parameters of one of the three population models. Fields that do not
/// apply to `kind` are ignored.
struct ModelSpec {
    ModelKind kind = ModelKind::block_diagonal;
    Index p = 100;
    std::vector<Index> block_sizes = default_block_sizes();
    double gamma = 0.3;
    double alpha = 1.5;
    std::uint64_t seed = 0;

    static ModelSpec block(std::vector<Index> sizes, double gamma) {
        ModelSpec s;
        s.kind = ModelKind::block_diagonal;
        s.p = std::accumulate(sizes.begin(), sizes.end(), Index{0});
        s.block_sizes = std::move(sizes);
        s.gamma = gamma;
        return s;
    }

    static ModelSpec nested(Index p, double gamma) {
        ModelSpec s;
        s.kind = ModelKind::nested_hierarchical;
        s.p = p;
        s.gamma = gamma;
        return s;
    }

    static ModelSpec power_law(Index p, double alpha, std::uint64_t seed) {
        ModelSpec s;
        s.kind = ModelKind::power_law;
        s.p = p;
        s.alpha = alpha;
        s.seed = seed;
        return s;
    }

    void validate() const {
        switch (kind) {
            case ModelKind::block_diagonal: {
                Index total = 0;
                for (Index b : block_sizes) {
                    if (b <= 0) throw InvalidParameter("block sizes must be positive");
                    total += b;
                }
                if (total != p) {
                    throw InvalidParameter("block sizes sum to " + std::to_string(total) + " but p = " + std::to_string(p));
                }
                if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidParameter("block model gamma must lie in [0, 1)");
                break;
            }
            case ModelKind::nested_hierarchical:
                if (p < 1) throw InvalidParameter("nested model needs p >= 1");
                if (!(gamma > 0.0)) throw InvalidParameter("nested model gamma must be positive");
                break;
            case ModelKind::power_law:
                if (p < 1) throw InvalidParameter("power-law model needs p >= 1");
                if (!(alpha >= 0.0)) throw InvalidParameter("power-law alpha must be nonnegative");
                break;
        }
    }
};

inline std::string model_provenance(ModelKind kind) {
    switch (kind) {
        case ModelKind::block_diagonal: return "model-1";
        case ModelKind::nested_hierarchical: return "model-2";
        case ModelKind::power_law: return "model-3";
    }
    return "model";
}

/// Unit diagonal, `gamma` inside each block, zero across blocks.
inline CovarianceMatrix build_block_model(const std::vector<Index>& block_sizes, double gamma) {
    if (block_sizes.empty()) throw InvalidParameter("build_block_model: no blocks");
    for (Index b : block_sizes) {
        if (b <= 0) throw InvalidParameter("build_block_model: non-positive block size " + std::to_string(b));
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidParameter("build_block_model: gamma must lie in [0, 1)");

    const Index p = std::accumulate(block_sizes.begin(), block_sizes.end(), Index{0});
    Matrix sigma = Matrix::Zero(p, p);
    Index start = 0;
    for (Index b : block_sizes) {
        sigma.block(start, start, b, b).setConstant(gamma);
        start += b;
    }
    sigma.diagonal().setOnes();
    return {std::move(sigma), "model-1"};
}

/// L L^T for the anti-triangular L with gamma on and above the anti-diagonal:
/// Sigma_ij = gamma^2 (p + 1 - max(i, j)) with 1-based indices.
inline CovarianceMatrix build_nested_model(Index p, double gamma) {
    if (p < 1) throw InvalidParameter("build_nested_model: p must be positive");
    if (!(gamma > 0.0)) throw InvalidParameter("build_nested_model: gamma must be positive");
    const double g2 = gamma * gamma;
    Matrix sigma(p, p);
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < p; ++i) sigma(i, j) = g2 * static_cast<double>(p - std::max(i, j));
    }
    return {std::move(sigma), "model-2"};
}

/// Haar-distributed orthogonal matrix: QR of a seeded Gaussian matrix with the
/// signs fixed so that R has a positive diagonal.
inline Matrix random_orthogonal(Index p, std::uint64_t seed) {
    RandomStream rng(derive_seed(seed, Domain::orthogonal, 0));
    const Matrix g = rng.gaussian_matrix(p, p);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(p, p);
    const Matrix& r = qr.matrixQR();
    for (Index k = 0; k < p; ++k) {
        if (r(k, k) < 0.0) q.col(k) = -q.col(k);
    }
    return q;
}

/// O diag(1, 2^-alpha, ..., p^-alpha) O^T with O from `random_orthogonal`.
inline CovarianceMatrix build_powerlaw_model(Index p, double alpha, std::uint64_t seed) {
    if (p < 1) throw InvalidParameter("build_powerlaw_model: p must be positive");
    if (!(alpha >= 0.0)) throw InvalidParameter("build_powerlaw_model: alpha must be nonnegative");
    Vector lambda(p);
    for (Index i = 0; i < p; ++i) lambda(i) = std::pow(static_cast<double>(i + 1), -alpha);
    const Matrix o = random_orthogonal(p, seed);
    Matrix sigma = symmetrize(o * lambda.asDiagonal() * o.transpose());
    return {std::move(sigma), "model-3"};
}

inline CovarianceMatrix build_model(const ModelSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ModelKind::block_diagonal: return build_block_model(spec.block_sizes, spec.gamma);
        case ModelKind::nested_hierarchical: return build_nested_model(spec.p, spec.gamma);
        case ModelKind::power_law: return build_powerlaw_model(spec.p, spec.alpha, spec.seed);
    }
    throw InvalidParameter("unknown model kind");
}

/// Symmetric square root with eigenvalues clamped at zero. Throws when the
/// input is negative beyond 1e-10 relative.
inline Matrix sqrt_psd(const Matrix& m) {
    SpectralDecomposition sd = eigendecompose_sym(m);
    const double top = std::max(sd.eigenvalues(0), 0.0);
    const double bottom = sd.eigenvalues(sd.size() - 1);
    if (bottom < -1e-10 * top) {
        throw NumericError("matrix square root: input is not positive semidefinite (min eigenvalue " +
                           std::to_string(bottom) + ")");
    }
    sd.eigenvalues = sd.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    return symmetrize(sd.reconstruct());
}

/// (1/n) Y Y^T computed on the lower triangle and mirrored, so the result is
/// exactly symmetric and independent of the GEMM blocking.
inline Matrix gram_over_n(const Matrix& y) {
    const Index p = y.rows();
    Matrix s = Matrix::Zero(p, p);
    s.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / static_cast<double>(y.cols()));
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return s;
}

struct SampleDraw {
    Matrix data;  // Y, p x n
    CovarianceMatrix sample;
    Index n;
    std::uint64_t seed;
};

/// Y = sqrt(Sigma) X with X i.i.d. standard Gaussian drawn from `seed`, and
/// S = Y Y^T / n.
inline SampleDraw sample_covariance(const CovarianceMatrix& sigma, Index n, std::uint64_t seed, const Matrix* root = nullptr) {
    if (n < 2) throw InvalidParameter("sample_covariance: n must be at least 2");
    const Matrix owned_root = root == nullptr ? sqrt_psd(sigma.values()) : Matrix();
    const Matrix& r = root == nullptr ? owned_root : *root;
    RandomStream rng(seed);
    const Matrix x = rng.gaussian_matrix(sigma.dim(), n);
    Matrix y = r * x;
    Matrix s = gram_over_n(y);
    return {std::move(y), CovarianceMatrix(std::move(s), "sample"), n, seed};
}

// Plain key-value serialization of ModelSpec:
//
//   kind = block
//   p = 100
//   block_sizes = 3,3,4,5,6,7,7,9,11,13,15,17
//   gamma = 0.3
//   alpha = 1.5
//   seed = 0

inline std::string to_config(const ModelSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    out << "kind = " << to_string(spec.kind) << "\n";
    out << "p = " << spec.p << "\n";
    out << "block_sizes = ";
    for (std::size_t i = 0; i < spec.block_sizes.size(); ++i) out << (i ? "," : "") << spec.block_sizes[i];
    out << "\n";
    out << "gamma = " << spec.gamma << "\n";
    out << "alpha = " << spec.alpha << "\n";
    out << "seed = " << spec.seed << "\n";
    return out.str();
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline double parse_double(const std::string& text, const std::string& key) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ParseError("invalid number for '" + key + "': '" + text + "'");
    }
    if (used != text.size()) throw ParseError("invalid number for '" + key + "': '" + text + "'");
    return v;
}

inline std::uint64_t parse_uint(const std::string& text, const std::string& key) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        throw ParseError("invalid integer for '" + key + "': '" + text + "'");
    }
    if (used != text.size()) throw ParseError("invalid integer for '" + key + "': '" + text + "'");
    return v;
}

}  // namespace detail

inline ModelSpec parse_model_spec(std::string_view text) {
    ModelSpec spec;
    bool saw_p = false;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", row);
        const std::string key = detail::trim(std::string_view(trimmed).substr(0, eq));
        const std::string value = detail::trim(std::string_view(trimmed).substr(eq + 1));
        if (key == "kind") {
            spec.kind = parse_model_kind(value);
        } else if (key == "p") {
            spec.p = static_cast<Index>(detail::parse_uint(value, key));
            saw_p = true;
        } else if (key == "block_sizes") {
            spec.block_sizes.clear();
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) {
                spec.block_sizes.push_back(static_cast<Index>(detail::parse_uint(detail::trim(item), key)));
            }
        } else if (key == "gamma") {
            spec.gamma = detail::parse_double(value, key);
        } else if (key == "alpha") {
            spec.alpha = detail::parse_double(value, key);
        } else if (key == "seed") {
            spec.seed = detail::parse_uint(value, key);
        } else {
            throw ParseError("unknown key '" + key + "'", row);
        }
    }
    if (!saw_p && spec.kind == ModelKind::block_diagonal) {
        spec.p = std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(), Index{0});
    }
    spec.validate();
    return spec;
}

}  // namespace covden

#endif  // COVDEN_MODELS_HPP
