#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sslci/generators.hpp"
#include "sslci/ssl_core.hpp"

using namespace sslci;

namespace {

DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST(ClosedForm, PsiIsRegressionOfX2OnX1) {
  const CovarianceBlocks b = random_covariance_blocks(4, 3, 2, 1);
  const LinearRepresentation rep = closed_form_psi_gaussian(b);
  EXPECT_FALSE(rep.degenerate);
  const DenseMatrix expected = b.sigma_x1x2.transpose() * oracle::lu_inverse(b.sigma_x1x1);
  EXPECT_LE((rep.b - expected).norm(), 1e-10);
}

TEST(ClosedForm, ExactCiPredictorFactorsThroughPsi) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const CovarianceBlocks b = gaussian_ci_population(random_gaussian_ci_spec(7, 5, 3, 10 + s));
    const DenseMatrix f = closed_form_f_gaussian(b);
    const DenseMatrix w = gaussian_optimal_head(b);
    EXPECT_EQ(w.rows(), 5);
    EXPECT_EQ(w.cols(), 3);
    EXPECT_LE((f - w.transpose() * closed_form_psi_gaussian(b).b).norm(), 1e-8);
  }
}

TEST(ClosedForm, SingularSigmaFlagsDegenerate) {
  CovarianceBlocks b = random_covariance_blocks(2, 2, 1, 2);
  b.sigma_x1x1 = DenseMatrix::Ones(2, 2);
  EXPECT_TRUE(closed_form_psi_gaussian(b).degenerate);
}

TEST(ClosedForm, SymmetricBinaryMixtureIdentity) {
  Rng rng(3);
  DenseVector mu1(5), mu2(4);
  for (Eigen::Index i = 0; i < 5; ++i) mu1(i) = rng.normal();
  for (Eigen::Index i = 0; i < 4; ++i) mu2(i) = rng.normal();
  const MixtureSpec spec = make_symmetric_binary_spec(mu1, mu2);
  for (int t = 0; t < 200; ++t) {
    DenseVector x(5);
    for (Eigen::Index i = 0; i < 5; ++i) x(i) = 3.0 * rng.normal();
    // P(+|x) - P(-|x) = tanh(mu1 . x) for centers +-mu1 with identity covariance.
    const double f_star = std::tanh(mu1.dot(x));
    EXPECT_NEAR(f_star, mu2.dot(closed_form_psi_mixture(spec, x)) / mu2.squaredNorm(), 1e-10);
  }
}

TEST(ClosedForm, MixtureBatchMatchesSingle) {
  const MixtureSpec spec = make_mixture_spec(3, 4, 2, 0.0, 4);
  const DenseMatrix x = random_matrix(10, 4, 5).array() + 5.0;
  const DenseMatrix batch = closed_form_psi_mixture_batch(spec, x);
  for (Eigen::Index r = 0; r < 10; ++r)
    EXPECT_LE((batch.row(r).transpose() - closed_form_psi_mixture(spec, x.row(r).transpose())).norm(), 1e-12);
}

TEST(Ridge, DefaultScale) {
  const DenseMatrix x = random_matrix(20, 4, 6);
  EXPECT_NEAR(default_ridge(x), 1e-8 * (x.transpose() * x).trace() / 20.0 / 4.0, 1e-22);
}

TEST(Ridge, MatchesNormalEquations) {
  const DenseMatrix x = random_matrix(30, 4, 7), y = random_matrix(30, 2, 8);
  const double lam = 0.3;
  const DenseMatrix expected =
      oracle::lu_inverse(x.transpose() * x + 30.0 * lam * DenseMatrix::Identity(4, 4)) * x.transpose() * y;
  EXPECT_LE((ridge_solve(x, y, lam) - expected).norm(), 1e-10);
}

TEST(Ridge, ZeroRidgeIsMinimumNormOnRankDeficientDesign) {
  DenseMatrix x = random_matrix(10, 3, 9);
  x.col(2) = x.col(0);
  const DenseMatrix y = random_matrix(10, 1, 10);
  const DenseMatrix w = ridge_solve(x, y, 0.0);
  EXPECT_NEAR(w(0, 0), w(2, 0), 1e-10);  // minimum norm splits the duplicated column evenly
  EXPECT_LE((x.transpose() * (x * w - y)).norm(), 1e-10);
  EXPECT_THROW(ridge_solve(x, y, -1.0), DomainError);
}

TEST(Pretext, RecoversNoiselessLinearMap) {
  const DenseMatrix x1 = random_matrix(50, 4, 11);
  const DenseMatrix b = random_matrix(3, 4, 12);
  const DenseMatrix x2 = x1 * b.transpose();
  EXPECT_LE((fit_pretext_linear(x1, x2, 0.0).b - b).norm(), 1e-10);
  const DenseMatrix shifted = (x2.array() + 2.0).matrix();
  const LinearRepresentation centered = fit_pretext_linear((x1.array() - 1.0).matrix(), shifted, 0.0, true);
  EXPECT_LE((centered.b - b).norm(), 1e-10);
  EXPECT_LE((centered.apply((x1.array() - 1.0).matrix()) - shifted).norm(), 1e-9);
}

TEST(Pretext, ConvergesToPopulationMap) {
  const GaussianCISpec spec = random_gaussian_ci_spec(4, 3, 2, 13);
  const CovarianceBlocks pop = gaussian_ci_population(spec);
  const LabeledDataset d = gaussian_ci_sample(spec, 40000, 14);
  const DenseMatrix b_hat = fit_pretext_linear(d.x1, *d.x2, default_ridge(d.x1)).b;
  const DenseMatrix b = closed_form_psi_gaussian(pop).b;
  EXPECT_LE((b_hat - b).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Pretext, UserSuppliedFeatureMap) {
  LinearRepresentation rep;
  rep.feature_map = FeatureMap::user_supplied;
  rep.phi = [](const DenseMatrix& x) { return DenseMatrix(x.array().square()); };
  rep.b = DenseMatrix::Identity(2, 2);
  DenseMatrix x(1, 2);
  x << 2.0, -3.0;
  EXPECT_EQ(rep.apply(x)(0, 1), 9.0);
  rep.phi = nullptr;
  EXPECT_THROW(rep.apply(x), DomainError);
}

TEST(Downstream, RecoversInterceptAndWeights) {
  const DenseMatrix f = random_matrix(40, 3, 15);
  DenseMatrix w(3, 2);
  w << 1, 2, -1, 0.5, 0.25, 3;
  DenseMatrix y = f * w;
  y.col(0).array() += 4.0;
  y.col(1).array() -= 1.0;
  const DownstreamFit fit = fit_downstream(f, y, 0.0);
  EXPECT_LE((fit.w_hat - w).norm(), 1e-10);
  EXPECT_NEAR(fit.bias(0), 4.0, 1e-10);
  EXPECT_NEAR(fit.bias(1), -1.0, 1e-10);
  EXPECT_LE((fit.predict(f) - y).norm(), 1e-9);
}

TEST(Downstream, PcaRestrictsToTopComponents) {
  DenseMatrix f = random_matrix(100, 4, 16);
  f.col(3) *= 1e-3;
  const DenseMatrix y = f.leftCols(1) * 2.0;
  const DownstreamFit fit = fit_downstream(f, y, 0.0, 3);
  EXPECT_EQ(fit.pca_rank.value(), 3);
  EXPECT_LE((fit.predict(f) - y).norm() / y.norm(), 1e-2);
  EXPECT_THROW(fit_downstream(f, y, 0.0, 5), DomainError);
  EXPECT_THROW(fit_downstream(f, y, 0.0, 0), DomainError);
}

TEST(Downstream, WithoutInterceptBiasIsZero) {
  const DenseMatrix f = random_matrix(20, 2, 17);
  const DownstreamFit fit = fit_downstream(f, f, 0.0, std::nullopt, false);
  EXPECT_EQ(fit.bias.norm(), 0.0);
  EXPECT_LE((fit.w_hat - DenseMatrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(Risk, ExcessRiskIsHalfMse) {
  const DenseMatrix x = random_matrix(30, 2, 18);
  LinearRepresentation rep;
  rep.b = DenseMatrix::Identity(2, 2);
  const DownstreamFit fit = fit_downstream(x, x.leftCols(1), 0.0);
  const TargetFn target = linear_target(DenseMatrix::Constant(1, 2, 0.5), DenseVector::Zero(2), DenseVector::Ones(1));
  const double m = mse(fit, rep, target, x);
  double naive = 0.0;
  for (Eigen::Index r = 0; r < 30; ++r) {
    const double t = 1.0 + 0.5 * (x(r, 0) + x(r, 1));
    naive += (t - x(r, 0)) * (t - x(r, 0));
  }
  EXPECT_NEAR(m, naive / 30.0, 1e-10);
  EXPECT_NEAR(excess_risk(fit, rep, target, x), 0.5 * m, 1e-15);
}

TEST(LogLoss, MatchesDirectSoftmax) {
  DenseMatrix scores(2, 3);
  scores << 1.0, 2.0, 0.5, -1.0, 0.0, 3.0;
  const std::vector<int> labels = {1, 0};
  double expected = 0.0;
  for (int r = 0; r < 2; ++r) {
    double z = 0.0;
    for (int c = 0; c < 3; ++c) z += std::exp(2.0 * scores(r, c));
    expected += -std::log(std::exp(2.0 * scores(r, labels[static_cast<std::size_t>(r)])) / z);
  }
  EXPECT_NEAR(log_loss_eval(scores, labels, 2.0), expected / 2.0, 1e-12);
  EXPECT_NEAR(log_loss_eval(DenseMatrix::Zero(4, 5), std::vector<int>{0, 1, 2, 3}, 1.0), std::log(5.0), 1e-14);
  EXPECT_THROW(log_loss_eval(scores, std::vector<int>{3, 0}, 1.0), DomainError);
  EXPECT_THROW(log_loss_eval(DenseMatrix::Zero(1, 1), std::vector<int>{0}, 1.0), DomainError);
}
