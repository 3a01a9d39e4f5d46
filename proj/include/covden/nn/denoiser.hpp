#ifndef COVDEN_NN_DENOISER_HPP
#define COVDEN_NN_DENOISER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covden/nn/conv.hpp"
#include "covden/random.hpp"
#include "covden/spectral.hpp"
#include "covden/types.hpp"

namespace covden::nn {

enum class DenoiserMode { covariance, eigenvectors };

inline std::string_view to_string(DenoiserMode mode) {
    return mode == DenoiserMode::covariance ? "covariance" : "eigenvectors";
}

inline DenoiserMode parse_denoiser_mode(std::string_view name) {
    if (name == "covariance") return DenoiserMode::covariance;
    if (name == "eigenvectors") return DenoiserMode::eigenvectors;
    throw InvalidParameter("unknown denoiser mode '" + std::string(name) + "'");
}

/// Hyperparameters. Defaults are the full-size profile (10 blocks of 64 3x3
/// filters, Adam at 1e-3, batch 16, 10 epochs, 20% validation).
struct DenoiserConfig {
    Index input_size = 100;
    Index num_blocks = 10;
    Index num_filters = 64;
    Index kernel = 3;
    double learning_rate = 1e-3;
    Index batch_size = 16;
    Index epochs = 10;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    DenoiserMode mode = DenoiserMode::covariance;

    /// Small profile for quick experiments and CI: 4 blocks of 16 filters.
    static DenoiserConfig desk(Index p = 30) {
        DenoiserConfig c;
        c.input_size = p;
        c.num_blocks = 4;
        c.num_filters = 16;
        return c;
    }

    void validate() const {
        if (input_size < 1) throw InvalidParameter("denoiser: input size must be positive");
        if (num_blocks < 0) throw InvalidParameter("denoiser: number of blocks must be nonnegative");
        if (num_filters < 1) throw InvalidParameter("denoiser: number of filters must be positive");
        if (kernel < 1 || kernel % 2 == 0) throw InvalidParameter("denoiser: kernel size must be odd");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw InvalidParameter("denoiser: learning rate must be nonnegative");
        }
        if (batch_size < 1) throw InvalidParameter("denoiser: batch size must be positive");
        if (epochs < 0) throw InvalidParameter("denoiser: epochs must be nonnegative");
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
            throw InvalidParameter("denoiser: validation fraction must lie in [0, 1)");
        }
    }

    bool operator==(const DenoiserConfig&) const = default;
};

struct ResidualBlock {
    ConvLayer conv1;  // followed by ReLU
    ConvLayer conv2;  // linear, then skip add and ReLU
};

/// Network parameters: stem conv (1 -> F) + ReLU, residual blocks, linear head
/// conv (F -> 1). `normalizer` divides inputs and targets during training and
/// rescales predictions.
struct DenoiserWeights {
    DenoiserConfig config;
    double normalizer = 1.0;
    ConvLayer stem;
    std::vector<ResidualBlock> blocks;
    ConvLayer head;

    static DenoiserWeights zeros(const DenoiserConfig& config) {
        config.validate();
        DenoiserWeights w;
        w.config = config;
        const Index f = config.num_filters;
        const Index k = config.kernel;
        w.stem = ConvLayer::zeros(f, 1, k);
        w.blocks.assign(static_cast<std::size_t>(config.num_blocks), ResidualBlock{ConvLayer::zeros(f, f, k), ConvLayer::zeros(f, f, k)});
        w.head = ConvLayer::zeros(1, f, k);
        return w;
    }

    /// Layers in declaration order: stem, (conv1, conv2) per block, head.
    std::vector<ConvLayer*> layers() {
        std::vector<ConvLayer*> out{&stem};
        for (ResidualBlock& b : blocks) {
            out.push_back(&b.conv1);
            out.push_back(&b.conv2);
        }
        out.push_back(&head);
        return out;
    }
    std::vector<const ConvLayer*> layers() const {
        std::vector<const ConvLayer*> out{&stem};
        for (const ResidualBlock& b : blocks) {
            out.push_back(&b.conv1);
            out.push_back(&b.conv2);
        }
        out.push_back(&head);
        return out;
    }

    Index parameter_count() const {
        Index n = 0;
        for (const ConvLayer* l : layers()) n += l->weight.size() + l->bias.size();
        return n;
    }

    bool all_finite() const {
        for (const ConvLayer* l : layers()) {
            if (!l->weight.allFinite() || !l->bias.allFinite()) return false;
        }
        return std::isfinite(normalizer);
    }
};

/// Rounds every parameter to the nearest float32, the precision of the weights file.
inline void snap_to_float(DenoiserWeights& w) {
    for (ConvLayer* l : w.layers()) {
        l->weight = l->weight.cast<float>().cast<double>();
        l->bias = l->bias.cast<float>().cast<double>();
    }
}

/// He-normal weights (std sqrt(2 / fan_in)) for the ReLU layers, sqrt(1 / fan_in)
/// for the linear head; zero biases. Values are rounded to float32.
inline DenoiserWeights initialize_weights(const DenoiserConfig& config) {
    DenoiserWeights w = DenoiserWeights::zeros(config);
    RandomStream rng(derive_seed(config.seed, Domain::initialization, 0));
    auto fill = [&](ConvLayer& layer, double gain) {
        const double fan_in = static_cast<double>(layer.weight.cols());
        const double sd = std::sqrt(gain / fan_in);
        for (Index i = 0; i < layer.weight.rows(); ++i) {
            for (Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = sd * rng.gaussian();
        }
    };
    fill(w.stem, 2.0);
    for (ResidualBlock& b : w.blocks) {
        fill(b.conv1, 2.0);
        fill(b.conv2, 2.0);
    }
    fill(w.head, 1.0);
    snap_to_float(w);
    return w;
}

/// Activations kept for backpropagation.
struct ForwardCache {
    RowMatrix input;                  // 1 x P
    RowMatrix stem_pre;               // F x P
    std::vector<RowMatrix> block_in;  // F x P, post-ReLU input of each block
    std::vector<RowMatrix> conv1_pre;
    std::vector<RowMatrix> sum_pre;   // conv2 output + skip, before ReLU
    RowMatrix last;                   // input of the head
    RowMatrix output;                 // 1 x P
};

inline RowMatrix flatten(const Matrix& m) {
    RowMatrix out(1, m.size());
    for (Index y = 0; y < m.rows(); ++y) {
        for (Index x = 0; x < m.cols(); ++x) out(0, y * m.cols() + x) = m(y, x);
    }
    return out;
}

inline Matrix unflatten(const RowMatrix& row, Index p) {
    Matrix out(p, p);
    for (Index y = 0; y < p; ++y) {
        for (Index x = 0; x < p; ++x) out(y, x) = row(0, y * p + x);
    }
    return out;
}

namespace detail {

inline void require_finite(const RowMatrix& m, const std::string& layer) {
    if (!m.allFinite()) throw NumericError("denoiser: non-finite activation in " + layer);
}

}  // namespace detail

/// Runs the network on an already-normalized p x p input.
inline ForwardCache forward_cached(const DenoiserWeights& w, const Matrix& input) {
    const Index p = w.config.input_size;
    if (input.rows() != p || input.cols() != p) {
        throw InvalidParameter("denoiser: expected a " + std::to_string(p) + "x" + std::to_string(p) + " input, got " +
                               std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
    }
    ForwardCache c;
    c.input = flatten(input);
    c.stem_pre = w.stem.forward(c.input, p, p);
    detail::require_finite(c.stem_pre, "stem");
    RowMatrix a = relu(c.stem_pre);
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
        const ResidualBlock& block = w.blocks[b];
        c.block_in.push_back(a);
        c.conv1_pre.push_back(block.conv1.forward(a, p, p));
        detail::require_finite(c.conv1_pre.back(), "block " + std::to_string(b) + " conv1");
        RowMatrix s = block.conv2.forward(relu(c.conv1_pre.back()), p, p);
        s += a;
        detail::require_finite(s, "block " + std::to_string(b) + " conv2");
        a = relu(s);
        c.sum_pre.push_back(std::move(s));
    }
    c.last = std::move(a);
    c.output = w.head.forward(c.last, p, p);
    detail::require_finite(c.output, "head");
    return c;
}

inline Matrix forward_normalized(const DenoiserWeights& w, const Matrix& input) {
    return unflatten(forward_cached(w, input).output, w.config.input_size);
}

/// Backpropagates d(loss)/d(output) through a cached pass, accumulating into
/// `grad`. Returns d(loss)/d(input) as a p x p matrix.
inline Matrix backward(const DenoiserWeights& w, const ForwardCache& c, const RowMatrix& d_output, DenoiserWeights& grad) {
    const Index p = w.config.input_size;
    RowMatrix da = w.head.backward(c.last, d_output, p, p, grad.head);
    for (std::size_t bi = w.blocks.size(); bi-- > 0;) {
        const ResidualBlock& block = w.blocks[bi];
        ResidualBlock& g = grad.blocks[bi];
        const RowMatrix ds = relu_backward(c.sum_pre[bi], da);
        const RowMatrix d_r1 = block.conv2.backward(relu(c.conv1_pre[bi]), ds, p, p, g.conv2);
        const RowMatrix d_z1 = relu_backward(c.conv1_pre[bi], d_r1);
        da = ds + block.conv1.backward(c.block_in[bi], d_z1, p, p, g.conv1);
    }
    const RowMatrix d_stem = relu_backward(c.stem_pre, da);
    return unflatten(w.stem.backward(c.input, d_stem, p, p, grad.stem), p);
}

/// Mean squared error over all entries of all samples (normalized units). When
/// `grad` is non-null it receives the gradient of that mean.
inline double mse_loss(const DenoiserWeights& w, const std::vector<const Matrix*>& inputs,
                       const std::vector<const Matrix*>& targets, DenoiserWeights* grad = nullptr) {
    if (inputs.size() != targets.size() || inputs.empty()) throw InvalidParameter("mse_loss: mismatched or empty batch");
    const Index p = w.config.input_size;
    const double scale = 1.0 / (static_cast<double>(inputs.size()) * static_cast<double>(p * p));
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const ForwardCache c = forward_cached(w, *inputs[i]);
        const RowMatrix diff = c.output - flatten(*targets[i]);
        total += diff.squaredNorm();
        if (grad != nullptr) backward(w, c, (2.0 * scale) * diff, *grad);
    }
    return total * scale;
}

/// Applies a trained network to an unscaled input.
///
/// Covariance mode: the output is rescaled, symmetrized and projected onto the
/// PSD cone. Eigenvector mode: the raw network output is returned.
inline Matrix forward(const DenoiserWeights& w, const Matrix& input) {
    Matrix out = forward_normalized(w, input / w.normalizer) * w.normalizer;
    if (w.config.mode == DenoiserMode::covariance) out = psd_project(symmetrize(out), 0.0);
    return out;
}

}  // namespace covden::nn

#endif  // COVDEN_NN_DENOISER_HPP
