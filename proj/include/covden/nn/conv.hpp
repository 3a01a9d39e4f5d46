#ifndef COVDEN_NN_CONV_HPP
#define COVDEN_NN_CONV_HPP

#include <array>
#include <string>
#include <vector>

#include "covden/types.hpp"

namespace covden::nn {

struct Shape {
    Index batch = 0;
    Index channels = 0;
    Index height = 0;
    Index width = 0;

    Index size() const noexcept { return batch * channels * height * width; }
    bool operator==(const Shape&) const = default;
};

/// Dense NCHW tensor, row-major.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(shape), values_(static_cast<std::size_t>(shape.size()), fill) {
        if (shape.batch < 0 || shape.channels < 0 || shape.height < 0 || shape.width < 0) {
            throw InvalidParameter("tensor: negative dimension");
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    const std::vector<double>& values() const noexcept { return values_; }

    double& at(Index b, Index c, Index y, Index x) { return values_[offset(b, c, y, x)]; }
    double at(Index b, Index c, Index y, Index x) const { return values_[offset(b, c, y, x)]; }

    /// Sample b viewed as a channels x (height * width) row-major matrix.
    Eigen::Map<RowMatrix> sample(Index b) {
        return {values_.data() + b * sample_size(), shape_.channels, shape_.height * shape_.width};
    }
    Eigen::Map<const RowMatrix> sample(Index b) const {
        return {values_.data() + b * sample_size(), shape_.channels, shape_.height * shape_.width};
    }

    bool all_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    Index sample_size() const noexcept { return shape_.channels * shape_.height * shape_.width; }
    std::size_t offset(Index b, Index c, Index y, Index x) const {
        return static_cast<std::size_t>(((b * shape_.channels + c) * shape_.height + y) * shape_.width + x);
    }

    Shape shape_;
    std::vector<double> values_;
};

// Feature maps inside the network are channels x (height * width) row-major
// matrices; pixel (y, x) sits in column y * width + x. Convolution is
// cross-correlation with zero padding (kernel - 1) / 2, computed as
// weight (out x in*k*k) times the im2col matrix (in*k*k x height*width).
// Row c*k*k + ky*k + kx of the im2col matrix holds the input of channel c
// shifted by (ky - r, kx - r).

inline RowMatrix im2col(const RowMatrix& x, Index height, Index width, Index kernel) {
    const Index channels = x.rows();
    const Index r = (kernel - 1) / 2;
    RowMatrix cols = RowMatrix::Zero(channels * kernel * kernel, height * width);
    for (Index c = 0; c < channels; ++c) {
        for (Index ky = 0; ky < kernel; ++ky) {
            for (Index kx = 0; kx < kernel; ++kx) {
                const Index row = (c * kernel + ky) * kernel + kx;
                const Index dy = ky - r;
                const Index dx = kx - r;
                for (Index y = std::max<Index>(0, -dy); y < std::min(height, height - dy); ++y) {
                    const Index sy = y + dy;
                    for (Index xo = std::max<Index>(0, -dx); xo < std::min(width, width - dx); ++xo) {
                        cols(row, y * width + xo) = x(c, sy * width + xo + dx);
                    }
                }
            }
        }
    }
    return cols;
}

/// Adjoint of im2col: scatters column gradients back onto a channels x (h*w) map.
inline RowMatrix col2im(const RowMatrix& cols, Index channels, Index height, Index width, Index kernel) {
    const Index r = (kernel - 1) / 2;
    RowMatrix x = RowMatrix::Zero(channels, height * width);
    for (Index c = 0; c < channels; ++c) {
        for (Index ky = 0; ky < kernel; ++ky) {
            for (Index kx = 0; kx < kernel; ++kx) {
                const Index row = (c * kernel + ky) * kernel + kx;
                const Index dy = ky - r;
                const Index dx = kx - r;
                for (Index y = std::max<Index>(0, -dy); y < std::min(height, height - dy); ++y) {
                    const Index sy = y + dy;
                    for (Index xo = std::max<Index>(0, -dx); xo < std::min(width, width - dx); ++xo) {
                        x(c, sy * width + xo + dx) += cols(row, y * width + xo);
                    }
                }
            }
        }
    }
    return x;
}

/// One convolution layer: weight is out_channels x (in_channels * k * k).
struct ConvLayer {
    RowMatrix weight;
    Vector bias;
    Index kernel = 3;

    Index out_channels() const noexcept { return weight.rows(); }
    Index in_channels() const noexcept { return kernel == 0 ? 0 : weight.cols() / (kernel * kernel); }

    static ConvLayer zeros(Index out_channels, Index in_channels, Index kernel) {
        return {RowMatrix::Zero(out_channels, in_channels * kernel * kernel), Vector::Zero(out_channels), kernel};
    }

    RowMatrix forward(const RowMatrix& x, Index height, Index width) const {
        RowMatrix out = weight * im2col(x, height, width, kernel);
        out.colwise() += bias;
        return out;
    }

    /// Accumulates parameter gradients into `grad` and returns the input gradient.
    RowMatrix backward(const RowMatrix& x, const RowMatrix& d_out, Index height, Index width, ConvLayer& grad) const {
        grad.weight.noalias() += d_out * im2col(x, height, width, kernel).transpose();
        grad.bias += d_out.rowwise().sum();
        return col2im(weight.transpose() * d_out, in_channels(), height, width, kernel);
    }
};

/// Same-size 2-D convolution of an NCHW batch with an (out, in, k, k) kernel.
inline Tensor conv2d_same(const Tensor& input, const Tensor& kernel, const Vector& bias) {
    const Shape& in = input.shape();
    const Shape& ks = kernel.shape();
    if (ks.height != ks.width || ks.height % 2 == 0) {
        throw InvalidParameter("conv2d_same: kernel must be square with odd size");
    }
    if (ks.channels != in.channels) {
        throw InvalidParameter("conv2d_same: kernel expects " + std::to_string(ks.channels) + " input channels, got " +
                               std::to_string(in.channels));
    }
    if (bias.size() != ks.batch) throw InvalidParameter("conv2d_same: bias length must equal output channels");

    ConvLayer layer;
    layer.kernel = ks.height;
    layer.weight = Eigen::Map<const RowMatrix>(kernel.data(), ks.batch, ks.channels * ks.height * ks.width);
    layer.bias = bias;

    Tensor out(Shape{in.batch, ks.batch, in.height, in.width});
    for (Index b = 0; b < in.batch; ++b) {
        out.sample(b) = layer.forward(RowMatrix(input.sample(b)), in.height, in.width);
    }
    return out;
}

inline RowMatrix relu(const RowMatrix& x) { return x.cwiseMax(0.0); }

/// d_out where pre > 0, zero elsewhere.
inline RowMatrix relu_backward(const RowMatrix& pre, const RowMatrix& d_out) {
    return (pre.array() > 0.0).select(d_out, 0.0);
}

}  // namespace covden::nn

#endif  // COVDEN_NN_CONV_HPP
