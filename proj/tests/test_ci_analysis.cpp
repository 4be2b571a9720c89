#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sslci/ci_analysis.hpp"
#include "sslci/generators.hpp"

using namespace sslci;

namespace {

DenseMatrix oracle_inv_sqrt(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m);
  return eig.operatorInverseSqrt();
}

}  // namespace

TEST(EpsCiLinear, ZeroUnderExactCi) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const CovarianceBlocks b = gaussian_ci_population(random_gaussian_ci_spec(5, 4, 2, s));
    const CiValue v = eps_ci_linear(b);
    EXPECT_LE(v.value, 1e-10);
    EXPECT_FALSE(v.degenerate);
  }
}

TEST(EpsCiLinear, MatchesOracleOnGenericBlocks) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const CovarianceBlocks b = random_covariance_blocks(3, 4, 2, 20 + s);
    const DenseMatrix partial = b.sigma_x1x2 - b.sigma_x1y * oracle::lu_inverse(b.sigma_yy) * b.sigma_x2y.transpose();
    const DenseMatrix whitened = oracle_inv_sqrt(b.sigma_x1x1) * partial;
    EXPECT_NEAR(eps_ci_linear(b).value, whitened.norm(), 1e-10);
    EXPECT_NEAR(eps_ci_linear(b, NormKind::spectral).value, oracle::jacobi_singular_values(whitened)(0), 1e-10);
    EXPECT_GE(eps_ci_linear(b).value, eps_ci_linear(b, NormKind::spectral).value - 1e-14);
  }
}

TEST(EpsCiLinear, RawOneHotMomentsMatchPseudoInverseOfCenteredLabels) {
  const MixtureSpec spec = make_mixture_spec(3, 4, 3, 0.3, 30);
  const MixturePopulation pop = mixture_population(spec);
  const CiValue raw = eps_ci_linear(with_raw_one_hot_moments(pop.blocks, pop.mean_y));
  const CiValue centered = eps_ci_linear(pop.blocks);
  EXPECT_TRUE(centered.degenerate);  // centered one-hot covariance is singular
  EXPECT_FALSE(raw.degenerate);
  EXPECT_NEAR(raw.value, centered.value, 1e-8);
  EXPECT_GT(raw.value, 0.1);
}

TEST(EpsCiLinear, SampleEstimateApproachesZeroAtAlphaZero) {
  const MixtureSpec spec = make_mixture_spec(2, 3, 3, 0.0, 31);
  const LabeledDataset d = mixture_sample(spec, 40000, 32);
  const CiValue v = eps_ci_linear_samples(d.x1, *d.x2, *d.y);
  EXPECT_LE(v.value, 0.05);
  const MixtureSpec dep = make_mixture_spec(2, 3, 3, 0.8, 31);
  const LabeledDataset e = mixture_sample(dep, 40000, 32);
  EXPECT_GT(eps_ci_linear_samples(e.x1, *e.x2, *e.y).value, 0.5);
}

TEST(EpsCiLinear, SampleRowMismatchThrows) {
  EXPECT_THROW(eps_ci_linear_samples(DenseMatrix::Zero(3, 1), DenseMatrix::Zero(4, 1), DenseMatrix::Zero(3, 1)),
               DimensionError);
}

TEST(EpsCiUniversal, MatchesTripleLoopAndVanishesUnderCi) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const DiscreteJoint j = discrete_joint_random({3 + s % 4, 2 + s % 5, 1 + s % 3}, 40 + s, false);
    EXPECT_NEAR(eps_ci_universal(j) * eps_ci_universal(j), oracle::eps_ci_universal_sq(j), 1e-13);
    const DiscreteJoint ci = discrete_joint_random({3 + s % 4, 2 + s % 5, 1 + s % 3}, 80 + s, true);
    EXPECT_LE(eps_ci_universal(ci), 1e-12);
  }
}

TEST(BetaInv, KnownValuesAndRankFlag) {
  const DenseMatrix syy = 2.0 * DenseMatrix::Identity(2, 2);
  DenseMatrix s2y = DenseMatrix::Zero(3, 2);
  s2y(0, 0) = 4.0;
  s2y(1, 1) = 1.0;
  const BetaReport r = beta_inv(syy, s2y);
  EXPECT_NEAR(r.beta_inv, 2.0, 1e-12);
  EXPECT_FALSE(r.rank_deficient);
  s2y(1, 1) = 0.0;
  const BetaReport d = beta_inv(syy, s2y);
  EXPECT_TRUE(d.rank_deficient);
  EXPECT_EQ(d.rank_sigma_x2ybar, 1);
  EXPECT_THROW(beta_inv(syy, DenseMatrix::Zero(3, 3)), DimensionError);
}

TEST(EpsYBar, ZeroWhenLatentEqualsLabel) {
  LatentLabelJoint j(3, 2, 2);
  const double p[3][2] = {{0.1, 0.2}, {0.3, 0.1}, {0.15, 0.15}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t y = 0; y < 2; ++y) j.at(i, y, y) = p[i][y];
  EXPECT_LE(eps_y_bar(j), 1e-15);
}

TEST(EpsYBar, IndependentLatentGivesVarianceOfPosterior) {
  LatentLabelJoint j(2, 2, 1);
  j.at(0, 0, 0) = 0.4;
  j.at(0, 1, 0) = 0.1;
  j.at(1, 0, 0) = 0.1;
  j.at(1, 1, 0) = 0.4;
  // E[Y|X1] in {(0.8,0.2),(0.2,0.8)}, E[Y] = (0.5,0.5): squared gap 2 * 0.3^2.
  EXPECT_NEAR(eps_y_bar(j), 0.18, 1e-15);
  j.at(0, 0, 0) = 0.5;
  EXPECT_THROW(eps_y_bar(j), DomainError);
}

TEST(BayesGap, HoldsOnRandomJointsAndIsTightWhenLabelIsDeterministic) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const BayesGap g = bayes_gap_check(discrete_joint_random({3, 4, 2 + s % 3}, 100 + s, false));
    EXPECT_TRUE(g.holds);
    EXPECT_GE(g.lhs, 0.0);
  }
  DiscreteJoint det(2, 2, 2);
  det.at(0, 0, 0) = 0.25;
  det.at(0, 1, 0) = 0.25;
  det.at(1, 0, 1) = 0.25;
  det.at(1, 1, 1) = 0.25;
  const BayesGap g = bayes_gap_check(det);
  EXPECT_EQ(g.lhs, 0.0);
  EXPECT_EQ(g.rhs, 0.0);
}

TEST(SpectrumConditional, ConditionalSpectrumVanishesUnderCi) {
  const CovarianceBlocks b = gaussian_ci_population(random_gaussian_ci_spec(4, 3, 2, 5));
  const SpectrumPair s = spectrum_conditional(b);
  EXPECT_EQ(s.unconditional.size(), 3);
  EXPECT_LE(s.conditional.maxCoeff(), 1e-10);
  EXPECT_GT(s.unconditional(0), 0.1);
}
