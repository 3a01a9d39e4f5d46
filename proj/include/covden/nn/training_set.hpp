#ifndef COVDEN_NN_TRAINING_SET_HPP
#define COVDEN_NN_TRAINING_SET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "covden/data.hpp"
#include "covden/models.hpp"
#include "covden/nn/denoiser.hpp"
#include "covden/nn/training.hpp"
#include "covden/random.hpp"
#include "covden/spectral.hpp"

namespace covden::nn {

/// Reorders the columns of `target` so that column k is the unused target
/// column with the largest |inner product| with input column k (greedy in k,
/// ties to the lower column). Signs are left as the convention made them.
inline Matrix match_columns(const Matrix& input, const Matrix& target) {
    const Index p = input.cols();
    const Matrix overlap = (input.transpose() * target).cwiseAbs();
    std::vector<bool> used(static_cast<std::size_t>(p), false);
    Matrix out(target.rows(), p);
    for (Index k = 0; k < p; ++k) {
        Index best = -1;
        for (Index j = 0; j < p; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            if (best < 0 || overlap(k, j) > overlap(k, best)) best = j;
        }
        used[static_cast<std::size_t>(best)] = true;
        out.col(k) = target.col(best);
    }
    return out;
}

namespace detail {

inline void push_pair(TrainingSet& set, const Matrix& input, const Matrix& target, DenoiserMode mode) {
    if (mode == DenoiserMode::covariance) {
        set.inputs.push_back(input);
        set.targets.push_back(target);
        return;
    }
    const Matrix vin = eigendecompose_sym(input).eigenvectors;
    const Matrix vtg = eigendecompose_sym(target).eigenvectors;
    set.inputs.push_back(vin);
    set.targets.push_back(match_columns(vin, vtg));
}

}  // namespace detail

/// `count` pairs from the Gaussian model. Sample i is drawn with
/// derive_seed(seed, training, i), disjoint from the evaluation streams.
inline TrainingSet build_training_set_simulation(const ModelSpec& model, Index n, Index count, std::uint64_t seed,
                                                 DenoiserMode mode) {
    if (count < 2) throw InvalidParameter("training set: count must be at least 2");
    const CovarianceMatrix sigma = build_model(model);
    const Matrix root = sqrt_psd(sigma.values());
    TrainingSet set;
    for (Index i = 0; i < count; ++i) {
        const SampleDraw draw = sample_covariance(sigma, n, derive_seed(seed, Domain::training, static_cast<std::uint64_t>(i)), &root);
        detail::push_pair(set, draw.sample.values(), sigma.values(), mode);
    }
    return set;
}

/// Smallest panel length the rolling builder accepts.
inline Index rolling_history_required(Index window_length, Index count, Index stride) {
    return 2 * window_length + (count - 1) * stride;
}

/// `count` pairs from a returns panel, aligned so the last target window ends
/// at the last day of the panel. Pair k (oldest first) uses the window
/// starting at offset start + k * stride as input and the next
/// `window_length` days as target.
inline TrainingSet build_training_set_rolling(const ReturnsPanel& returns, Index window_length, Index count, Index stride,
                                              DenoiserMode mode) {
    if (window_length < 2) throw InvalidParameter("training set: window length must be at least 2");
    if (count < 2) throw InvalidParameter("training set: count must be at least 2");
    if (stride < 1) throw InvalidParameter("training set: stride must be positive");
    const Index required = rolling_history_required(window_length, count, stride);
    if (returns.day_count() < required) {
        throw InvalidParameter("training set: need " + std::to_string(required) + " days of history, panel has " +
                               std::to_string(returns.day_count()));
    }
    const Index start = returns.day_count() - required;
    TrainingSet set;
    for (Index k = 0; k < count; ++k) {
        const Index a = start + k * stride;
        const CovarianceMatrix in = window_covariance(returns.returns.middleCols(a, window_length));
        const CovarianceMatrix tg = window_covariance(returns.returns.middleCols(a + window_length, window_length));
        detail::push_pair(set, in.values(), tg.values(), mode);
    }
    return set;
}

}  // namespace covden::nn

#endif  // COVDEN_NN_TRAINING_SET_HPP
