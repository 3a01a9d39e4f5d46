#ifndef COVDEN_NN_TRAINING_HPP
#define COVDEN_NN_TRAINING_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "covden/nn/denoiser.hpp"

namespace covden::nn {

/// Paired inputs and targets, all p x p.
struct TrainingSet {
    std::vector<Matrix> inputs;
    std::vector<Matrix> targets;

    Index count() const noexcept { return static_cast<Index>(inputs.size()); }
};

struct TrainingResult {
    DenoiserWeights weights;
    std::vector<double> train_loss;       // before training, then after each epoch
    std::vector<double> validation_loss;  // same cadence; empty without a validation split
};

/// Number of held-out samples: the trailing floor(count * fraction) entries.
inline Index validation_count(Index count, double fraction) {
    return static_cast<Index>(std::floor(static_cast<double>(count) * fraction));
}

class AdamState {
public:
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double epsilon = 1e-8;

    explicit AdamState(const DenoiserConfig& config)
        : first_(DenoiserWeights::zeros(config)), second_(DenoiserWeights::zeros(config)) {}

    void step(DenoiserWeights& w, const DenoiserWeights& grad, double learning_rate) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        auto params = w.layers();
        auto grads = grad.layers();
        auto m = first_.layers();
        auto v = second_.layers();
        for (std::size_t i = 0; i < params.size(); ++i) {
            update(params[i]->weight.array(), grads[i]->weight.array(), m[i]->weight.array(), v[i]->weight.array(), c1, c2,
                   learning_rate);
            update(params[i]->bias.array(), grads[i]->bias.array(), m[i]->bias.array(), v[i]->bias.array(), c1, c2,
                   learning_rate);
        }
    }

private:
    template <typename P, typename G, typename M, typename V>
    static void update(P&& param, const G& grad, M&& m, V&& v, double c1, double c2, double lr) {
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.square();
        param -= lr * (m / c1) / ((v / c2).sqrt() + epsilon);
    }

    DenoiserWeights first_;
    DenoiserWeights second_;
    long t_ = 0;
};

/// Trains a fresh network with Adam on the MSE between the raw network output
/// and the target.
///
/// Inputs and targets are divided by the mean diagonal of the training inputs
/// (covariance mode) or left as-is (eigenvector mode). The trailing
/// `validation_fraction` of the set is held out. Each epoch visits the training
/// split in a seeded shuffled order in minibatches of `batch_size`. The final
/// weights are rounded to float32 so they survive a save/load unchanged.
inline TrainingResult train(const DenoiserConfig& config, const TrainingSet& data) {
    config.validate();
    if (data.inputs.size() != data.targets.size()) throw InvalidParameter("train: inputs and targets differ in count");
    const Index count = data.count();
    const Index n_val = validation_count(count, config.validation_fraction);
    const Index n_train = count - n_val;
    if (n_train < 1) throw InvalidParameter("train: empty training split");
    const Index p = config.input_size;
    for (Index i = 0; i < count; ++i) {
        const auto& a = data.inputs[static_cast<std::size_t>(i)];
        const auto& b = data.targets[static_cast<std::size_t>(i)];
        if (a.rows() != p || a.cols() != p || b.rows() != p || b.cols() != p) {
            throw InvalidParameter("train: sample " + std::to_string(i) + " does not match input size " + std::to_string(p));
        }
    }

    TrainingResult result{initialize_weights(config), {}, {}};
    DenoiserWeights& w = result.weights;
    if (config.mode == DenoiserMode::covariance) {
        double diag = 0.0;
        for (Index i = 0; i < n_train; ++i) diag += data.inputs[static_cast<std::size_t>(i)].diagonal().mean();
        diag /= static_cast<double>(n_train);
        if (!(diag > 0.0) || !std::isfinite(diag)) throw NumericError("train: training inputs have no positive variance");
        w.normalizer = diag;
    }

    std::vector<Matrix> inputs;
    std::vector<Matrix> targets;
    inputs.reserve(static_cast<std::size_t>(count));
    targets.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
        inputs.push_back(data.inputs[static_cast<std::size_t>(i)] / w.normalizer);
        targets.push_back(data.targets[static_cast<std::size_t>(i)] / w.normalizer);
    }
    auto pointers = [&](const std::vector<Matrix>& v, Index begin, Index end) {
        std::vector<const Matrix*> out;
        for (Index i = begin; i < end; ++i) out.push_back(&v[static_cast<std::size_t>(i)]);
        return out;
    };
    const auto train_in = pointers(inputs, 0, n_train);
    const auto train_out = pointers(targets, 0, n_train);
    const auto val_in = pointers(inputs, n_train, count);
    const auto val_out = pointers(targets, n_train, count);

    auto record = [&](Index epoch) {
        const double loss = mse_loss(w, train_in, train_out);
        if (!std::isfinite(loss)) throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
        result.train_loss.push_back(loss);
        if (n_val > 0) result.validation_loss.push_back(mse_loss(w, val_in, val_out));
    };
    record(0);

    AdamState adam(config);
    RandomStream shuffler(derive_seed(config.seed, Domain::shuffling, 0));
    for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
        const std::vector<Index> order = shuffler.permutation(n_train);
        for (Index start = 0; start < n_train; start += config.batch_size) {
            const Index end = std::min(n_train, start + config.batch_size);
            std::vector<const Matrix*> bin;
            std::vector<const Matrix*> bout;
            for (Index k = start; k < end; ++k) {
                const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
                bin.push_back(&inputs[idx]);
                bout.push_back(&targets[idx]);
            }
            DenoiserWeights grad = DenoiserWeights::zeros(config);
            mse_loss(w, bin, bout, &grad);
            adam.step(w, grad, config.learning_rate);
        }
        if (!w.all_finite()) throw NumericError("train: weights diverged at epoch " + std::to_string(epoch));
        record(epoch);
    }
    snap_to_float(w);
    return result;
}

}  // namespace covden::nn

#endif  // COVDEN_NN_TRAINING_HPP
