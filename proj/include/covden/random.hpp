#ifndef COVDEN_RANDOM_HPP
#define COVDEN_RANDOM_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "covden/types.hpp"

// Random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Distributions come from Boost.Random because the std::
// distributions are implementation-defined and would make results differ
// between standard libraries.
//
// Stream splitting: a run seed and a (domain, index) pair map to an engine
// seed through `derive_seed`. Monte Carlo realization i uses domain
// `Domain::evaluation` and index i, so realizations can be drawn in any order
// or concurrently with identical results.

namespace covden {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class Domain : std::uint64_t {
    evaluation = 1,
    training = 2,
    orthogonal = 3,
    initialization = 4,
    shuffling = 5,
    synthetic = 6,
};

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Domain domain, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(domain)) ^ index);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double gaussian() { return normal_(engine_); }

    /// Uniform integer in [lo, hi].
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return boost::random::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
    }

    /// Standard Gaussian matrix, filled column by column.
    Matrix gaussian_matrix(Index rows, Index cols) {
        Matrix out(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) out(i, j) = gaussian();
        }
        return out;
    }

    /// Fisher-Yates shuffle of 0..n-1.
    std::vector<Index> permutation(Index n) {
        std::vector<Index> order(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        for (Index i = n - 1; i > 0; --i) {
            const auto j = static_cast<Index>(uniform_int(0, static_cast<std::uint64_t>(i)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        return order;
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace covden

#endif  // COVDEN_RANDOM_HPP
