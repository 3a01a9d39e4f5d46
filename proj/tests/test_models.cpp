#include <gtest/gtest.h>

#include <numeric>

#include "test_util.hpp"

using namespace covden;

TEST(BlockModel, DefaultSizesGiveUnitTraceAndKnownOffDiagonalMass) {
    const CovarianceMatrix s = build_block_model(default_block_sizes(), 0.3);
    EXPECT_EQ(s.dim(), 100);
    EXPECT_EQ(s.provenance(), "model-1");
    EXPECT_NEAR(s.values().trace(), 100.0, 1e-12);
    const double off = s.values().squaredNorm() - s.values().diagonal().squaredNorm();
    EXPECT_NEAR(off, 88.02, 1e-9);
}

TEST(BlockModel, ZeroGammaIsIdentity) {
    const CovarianceMatrix s = build_block_model({4}, 0.0);
    EXPECT_EQ(s.values(), Matrix::Identity(4, 4));
}

TEST(BlockModel, EquicorrelationSpectrum) {
    const Vector ev = testutil::jacobi_eigenvalues(build_block_model({5}, 0.3).values());
    const double expected[] = {2.2, 0.7, 0.7, 0.7, 0.7};
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(ev(i), expected[i], 1e-12);
}

TEST(BlockModel, OneEigenvalueAboveOnePerBlock) {
    const Vector ev = eigenvalues_sym(build_block_model(default_block_sizes(), 0.3).values());
    EXPECT_EQ((ev.array() > 1.0 + 1e-9).count(), 12);
}

TEST(BlockModel, EntriesFollowBlockStructure) {
    const CovarianceMatrix s = build_block_model({2, 3}, 0.4);
    EXPECT_DOUBLE_EQ(s(0, 1), 0.4);
    EXPECT_DOUBLE_EQ(s(2, 4), 0.4);
    EXPECT_DOUBLE_EQ(s(1, 2), 0.0);
    EXPECT_DOUBLE_EQ(s(3, 3), 1.0);
}

TEST(BlockModel, RejectsBadParameters) {
    EXPECT_THROW(build_block_model({3, 0}, 0.3), InvalidParameter);
    EXPECT_THROW(build_block_model({3}, 1.0), InvalidParameter);
    EXPECT_THROW(build_block_model({3}, -0.1), InvalidParameter);
    EXPECT_THROW(build_block_model({}, 0.3), InvalidParameter);
}

TEST(NestedModel, SingleEntry) {
    const CovarianceMatrix s = build_nested_model(1, 0.1);
    EXPECT_NEAR(s(0, 0), 0.01, 1e-15);
}

TEST(NestedModel, ThreeByThreeMatchesAntiTriangularProduct) {
    // L has gamma on and above the anti-diagonal of a 3x3 pattern.
    Matrix l = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3 - i; ++j) l(i, j) = 0.1;
    const Matrix expected = l * l.transpose();
    const CovarianceMatrix s = build_nested_model(3, 0.1);
    EXPECT_LT(testutil::max_abs_diff(s.values(), expected), 1e-15);
    Matrix hand(3, 3);
    hand << 0.03, 0.02, 0.01, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01;
    EXPECT_LT(testutil::max_abs_diff(s.values(), hand), 1e-15);
}

TEST(NestedModel, TraceClosedForm) {
    const CovarianceMatrix s = build_nested_model(100, 0.1);
    EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(s.values().trace(), 0.01 * 100 * 101 / 2.0, 1e-12 * 50.5);
    EXPECT_EQ(s.provenance(), "model-2");
}

TEST(NestedModel, RejectsBadParameters) {
    EXPECT_THROW(build_nested_model(0, 0.1), InvalidParameter);
    EXPECT_THROW(build_nested_model(3, 0.0), InvalidParameter);
}

TEST(PowerLawModel, AlphaZeroIsIdentity) {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        EXPECT_LT(testutil::max_abs_diff(build_powerlaw_model(5, 0.0, seed).values(), Matrix::Identity(5, 5)), 1e-12);
    }
}

TEST(PowerLawModel, TraceIsPartialZetaSum) {
    double zeta = 0.0;
    for (int i = 1; i <= 100; ++i) zeta += std::pow(i, -1.5);
    EXPECT_NEAR(build_powerlaw_model(100, 1.5, 3).values().trace(), zeta, 1e-10);
    EXPECT_NEAR(zeta, 2.41264, 1e-3);
}

TEST(PowerLawModel, SpectrumRecoveredByIndependentSolver) {
    const Vector ev = testutil::jacobi_eigenvalues(build_powerlaw_model(10, 1.5, 7).values());
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(ev(i), std::pow(i + 1, -1.5), 1e-10);
}

TEST(PowerLawModel, OrthogonalFactorIsOrthogonalAndSeeded) {
    const Matrix o = random_orthogonal(8, 5);
    EXPECT_LT(testutil::max_abs_diff(o.transpose() * o, Matrix::Identity(8, 8)), 1e-12);
    EXPECT_EQ(o, random_orthogonal(8, 5));
    EXPECT_NE(o, random_orthogonal(8, 6));
}

TEST(PowerLawModel, RejectsNegativeAlpha) { EXPECT_THROW(build_powerlaw_model(4, -1.0, 0), InvalidParameter); }

TEST(SampleCovariance, EqualsGramOverN) {
    const CovarianceMatrix sigma = build_block_model({2, 3}, 0.3);
    const SampleDraw d = sample_covariance(sigma, 7, 11);
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (Index t = 0; t < 7; ++t) acc += d.data(i, t) * d.data(j, t);
            EXPECT_NEAR(d.sample(i, j), acc / 7.0, 1e-12);
        }
    }
    EXPECT_EQ(d.sample.provenance(), "sample");
}

TEST(SampleCovariance, LawOfLargeNumbersOnScalar) {
    const CovarianceMatrix one(Matrix::Ones(1, 1), "model");
    const SampleDraw d = sample_covariance(one, 1000000, 1);
    EXPECT_GE(d.sample(0, 0), 0.99);
    EXPECT_LE(d.sample(0, 0), 1.01);
}

TEST(SampleCovariance, IdentityGivesSymmetricPsd) {
    const CovarianceMatrix id(Matrix::Identity(3, 3), "model");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SampleDraw d = sample_covariance(id, 4, seed);
        EXPECT_EQ(max_asymmetry(d.sample.values()), 0.0);
        EXPECT_TRUE(is_psd(d.sample.values()));
    }
}

TEST(SampleCovariance, BitwiseReproducible) {
    const CovarianceMatrix sigma = build_powerlaw_model(20, 1.0, 4);
    const SampleDraw a = sample_covariance(sigma, 40, 123);
    const SampleDraw b = sample_covariance(sigma, 40, 123);
    EXPECT_EQ(a.sample.values(), b.sample.values());
    EXPECT_NE(a.sample.values(), sample_covariance(sigma, 40, 124).sample.values());
}

TEST(SampleCovariance, MeanFrobeniusLossMatchesGaussianMoment) {
    const CovarianceMatrix sigma = build_block_model(default_block_sizes(), 0.3);
    const Matrix root = sqrt_psd(sigma.values());
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        total += (sample_covariance(sigma, 200, seed, &root).sample.values() - sigma.values()).squaredNorm() / 100.0;
    }
    const double analytic = (10000.0 + 188.02) / 20000.0;
    EXPECT_NEAR(total / 200.0, analytic, 0.10 * analytic);
}

TEST(SampleCovariance, RejectsTooFewObservationsAndNonPsd) {
    const CovarianceMatrix id(Matrix::Identity(2, 2), "model");
    EXPECT_THROW(sample_covariance(id, 1, 0), InvalidParameter);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(sample_covariance(CovarianceMatrix(bad, "x"), 5, 0), NumericError);
}

TEST(ModelSpec, ConfigRoundTrip) {
    ModelSpec s = ModelSpec::power_law(30, 0.75, 987654321987ULL);
    const ModelSpec back = parse_model_spec(to_config(s));
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.p, s.p);
    EXPECT_EQ(back.alpha, s.alpha);
    EXPECT_EQ(back.seed, s.seed);

    const ModelSpec b = parse_model_spec(to_config(ModelSpec::block({3, 4}, 0.25)));
    EXPECT_EQ(b.block_sizes, (std::vector<Index>{3, 4}));
    EXPECT_EQ(b.gamma, 0.25);
    EXPECT_EQ(b.p, 7);
}

TEST(ModelSpec, RejectsUnknownKeysAndInconsistentSizes) {
    EXPECT_THROW(parse_model_spec("kind = block\ncolour = red\n"), ParseError);
    EXPECT_THROW(parse_model_spec("kind = block\np = 10\nblock_sizes = 3,3\n").validate(), InvalidParameter);
    EXPECT_THROW(parse_model_spec("kind = triangle\n"), Error);
}

TEST(CovarianceMatrixType, EnforcesInvariants) {
    Matrix asym(2, 2);
    asym << 1.0, 0.5, 0.4, 1.0;
    EXPECT_THROW(CovarianceMatrix(asym, "x"), InvalidParameter);
    Matrix zero_diag = Matrix::Identity(2, 2);
    zero_diag(1, 1) = 0.0;
    EXPECT_THROW(CovarianceMatrix(zero_diag, "x"), InvalidParameter);
    EXPECT_THROW(CovarianceMatrix(Matrix(2, 3), "x"), InvalidParameter);
}

TEST(AllModels, SatisfyCovarianceInvariants) {
    for (const ModelSpec& spec : {ModelSpec::block(default_block_sizes(), 0.3), ModelSpec::nested(100, 0.1),
                                  ModelSpec::power_law(100, 1.5, 2)}) {
        const CovarianceMatrix s = build_model(spec);
        EXPECT_LE(max_asymmetry(s.values()), 1e-12);
        const Vector ev = eigenvalues_sym(s.values());
        EXPECT_GE(ev(ev.size() - 1), -1e-10 * ev(0));
        EXPECT_GT(s.values().diagonal().minCoeff(), 0.0);
    }
}
