#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sslci/ace.hpp"
#include "sslci/generators.hpp"

using namespace sslci;

namespace {

DiscreteJoint binary_symmetric(double q) {
  DiscreteJoint j(2, 2, 1);
  j.at(0, 0) = j.at(1, 1) = 0.5 * (1.0 - q);
  j.at(0, 1) = j.at(1, 0) = 0.5 * q;
  return j;
}

DiscreteJoint noisy_joint(std::size_t n1, std::size_t n2, std::size_t ny, std::uint64_t seed, double delta) {
  return mix_joints(discrete_joint_random({n1, n2, ny}, seed, true), discrete_joint_random({n1, n2, ny}, seed + 7777, false),
                    delta);
}

}  // namespace

TEST(OperatorT, MatchesLoopOracleAndTopPairIsConstant) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const DiscreteJoint j = discrete_joint_random({2 + s % 7, 3 + s % 5, 2}, s, false);
    const OperatorT op = build_operator_t(j);
    EXPECT_LE((op.weighted - oracle::weighted_t(j)).norm(), 1e-13);
    const DenseVector sv = oracle::jacobi_singular_values(op.weighted);
    EXPECT_NEAR(sv(0), 1.0, 1e-12);
    // E[1 | X1] = 1.
    const DenseVector t_one = op.t * op.d2.asDiagonal() * DenseVector::Ones(j.n2);
    EXPECT_LE((t_one - DenseVector::Ones(j.n1)).cwiseAbs().maxCoeff(), 1e-12);
    const SvdResult d = svd(op.weighted);
    EXPECT_LE((d.u.col(0) - op.d1.cwiseSqrt()).norm(), 1e-10);
    EXPECT_LE((d.v.col(0) - op.d2.cwiseSqrt()).norm(), 1e-10);
  }
}

TEST(OperatorT, ConditionallyIndependentJointHasRankAtMostLabelCount) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t ny = 1 + s % 3;
    const DiscreteJoint j = discrete_joint_random({6, 5, ny}, 100 + s, true);
    const DenseVector sv = weighted_singular_values(j);
    EXPECT_LE(sv(static_cast<Eigen::Index>(ny)), 1e-8);
  }
}

TEST(OperatorL, EqualsTUnderCiAndDiffersOtherwise) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DiscreteJoint ci = discrete_joint_random({4, 5, 2}, 200 + s, true);
    EXPECT_LE((build_operator_l(ci) - build_operator_t(ci).t).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(eps_ci_tilde(ci), 1e-10);
    const DiscreteJoint not_ci = noisy_joint(4, 5, 2, 300 + s, 0.5);
    EXPECT_GT(eps_ci_tilde(not_ci), 1e-4);
  }
}

TEST(OperatorL, LoopOracle) {
  const DiscreteJoint j = noisy_joint(3, 4, 2, 400, 0.3);
  const DenseMatrix l = build_operator_l(j);
  const DenseVector p1 = j.p_x1(), p2 = j.p_x2(), py = j.p_y();
  const DenseMatrix p1y = j.p_x1y(), p2y = j.p_x2y();
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      double v = 0.0;
      for (std::size_t y = 0; y < 2; ++y) v += (p1y(a, y) / py(y)) * (p2y(b, y) / py(y)) * py(y);
      EXPECT_NEAR(l(a, b), v / (p1(a) * p2(b)), 1e-12);
    }
}

TEST(MaximalCorrelation, BinarySymmetricChannel) {
  for (double q : {0.0, 0.1, 0.25, 0.5, 0.8}) {
    EXPECT_NEAR(maximal_correlation(binary_symmetric(q), 1), std::abs(1.0 - 2.0 * q), 1e-12) << "q=" << q;
  }
}

TEST(MaximalCorrelation, IdentityAndProductJoints) {
  const DiscreteJoint id = identity_joint(4);
  for (std::size_t k = 1; k <= 3; ++k) EXPECT_NEAR(maximal_correlation(id, k), 1.0, 1e-12);
  DenseVector p1(3), p2(4);
  p1 << 0.2, 0.3, 0.5;
  p2 << 0.1, 0.2, 0.3, 0.4;
  EXPECT_LE(maximal_correlation(product_joint(p1, p2), 1), 1e-12);
  EXPECT_THROW(maximal_correlation(id, 0), DomainError);
  EXPECT_THROW(maximal_correlation(id, 4), DomainError);
}

TEST(AceFit, MatchesDenseSvdOracle) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const std::size_t n1 = 3 + s % 9, n2 = 3 + (s * 5) % 10;
    const DiscreteJoint j = noisy_joint(n1, n2, 3, 500 + s, 0.1 * static_cast<double>(s % 4));
    const std::size_t k = std::min<std::size_t>(3, std::min(n1, n2) - 1);
    const AceSolution sol = ace_fit(j, k);
    EXPECT_TRUE(sol.converged);
    const DenseVector oracle_sv = oracle::jacobi_singular_values(oracle::weighted_t(j));
    EXPECT_LE((sol.sigmas - oracle_sv.segment(1, static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff(), 1e-8)
        << "seed " << s;
  }
}

TEST(AceFit, FunctionsAreCenteredOrthonormalSingularPairs) {
  const DiscreteJoint j = noisy_joint(6, 7, 3, 600, 0.2);
  const AceSolution sol = ace_fit(j, 3);
  const DenseVector p1 = j.p_x1(), p2 = j.p_x2();
  EXPECT_LE((sol.psi.transpose() * p1).norm(), 1e-10);
  EXPECT_LE((sol.eta.transpose() * p2).norm(), 1e-10);
  EXPECT_LE((sol.psi.transpose() * p1.asDiagonal() * sol.psi - DenseMatrix::Identity(3, 3)).norm(), 1e-10);
  // E[eta_i(X2) | X1] = sigma_i psi_i(X1).
  const DenseMatrix t = build_operator_t(j).t;
  const DenseMatrix cond = t * p2.asDiagonal() * sol.eta;
  EXPECT_LE((cond - sol.psi * sol.sigmas.asDiagonal()).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(AceFit, DeterministicAndValidatesK) {
  const DiscreteJoint j = noisy_joint(5, 5, 2, 700, 0.3);
  const AceSolution a = ace_fit(j, 2), b = ace_fit(j, 2);
  EXPECT_EQ((a.psi - b.psi).norm(), 0.0);
  EXPECT_THROW(ace_fit(j, 0), DomainError);
  EXPECT_THROW(ace_fit(j, 5), DomainError);
  AceOptions opt;
  opt.max_iters = 1;
  opt.oversample = 0;
  opt.tol = 0.0;
  EXPECT_FALSE(ace_fit(j, 2, opt).converged);
}

TEST(AceObjective, IdentityHolds) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DiscreteJoint j = noisy_joint(5, 6, 2, 800 + s, 0.25);
    const AceSolution sol = ace_fit(j, 3);
    const AceObjectives o = ace_objective_identity_check(sol, j);
    EXPECT_LE(o.identity_gap, 1e-10);
    EXPECT_NEAR(o.l_cca, sol.sigmas.sum(), 1e-10);
  }
}

TEST(AceObjective, RejectsNonOrthonormalFunctions) {
  const DiscreteJoint j = noisy_joint(4, 4, 2, 900, 0.1);
  AceSolution sol = ace_fit(j, 2);
  sol.psi *= 1.01;
  EXPECT_THROW(ace_objective_identity_check(sol, j), DomainError);
}

TEST(ApxBound, HoldsForBothChoicesOfG) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    const DiscreteJoint j = noisy_joint(4 + s % 4, 4 + s % 3, 2 + s % 2, 1000 + s, 0.05 * static_cast<double>(s % 8));
    const AceSolution sol = ace_fit(j, 1 + s % 2);
    for (GChoice g : {GChoice::pinv_of_a, GChoice::bayes_indicator}) {
      const ApxBound b = apx_error_bound_eval(sol, j, g);
      EXPECT_TRUE(b.holds) << "seed " << s;
      EXPECT_LE(b.actual, b.bound + 1e-8);
      EXPECT_NEAR(b.bound, b.bound_svd, 1e-6);
    }
  }
}

TEST(ApxBound, ExactCiGivesZeroApproximationError) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t ny = 2 + s % 2;
    const DiscreteJoint j = discrete_joint_random({5, 6, ny}, 1100 + s, true);
    for (std::size_t k : {ny - 1, ny}) {
      const ApxBound b = apx_error_bound_eval(ace_fit(j, k), j, GChoice::pinv_of_a);
      EXPECT_FALSE(b.degenerate);
      EXPECT_LE(b.actual, 1e-8);
    }
  }
}

TEST(ApxBound, RankDeficientAIsFlagged) {
  // Two labels with identical p(x2|y): A has rank one.
  DiscreteJoint j(3, 3, 2);
  const double px1[2][3] = {{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}};
  const double px2[3] = {0.2, 0.3, 0.5};
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t y = 0; y < 2; ++y) j.at(a, b, y) = 0.5 * px1[y][a] * px2[b];
  const ApxBound r = apx_error_bound_eval(ace_fit(j, 1), j, GChoice::pinv_of_a);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.holds);
}
