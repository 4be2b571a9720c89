#pragma once

// Measures of (approximate) conditional independence between the two views.

#include <cmath>
#include <optional>
#include <vector>

#include "sslci/generators.hpp"
#include "sslci/matrix_stats.hpp"

namespace sslci {

enum class NormKind { frobenius, spectral };

inline double matrix_norm(const DenseMatrix& m, NormKind kind) {
  return kind == NormKind::frobenius ? m.norm() : spectral_norm(m);
}

struct CIReport {
  double eps_ci = 0.0;
  double beta_inv = 0.0;
  std::optional<double> eps_y_bar;
  Eigen::Index rank_sigma_x2ybar = 0;
  bool degenerate = false;
};

struct CiValue {
  double value = 0.0;
  bool degenerate = false;
};

/// ||Sigma_{phi phi}^{-1/2} Sigma_{phi X2 | phi_ybar}|| for blocks laid out as
/// (x1 -> phi_1(X1), x2 -> X2, y -> phi_ybar(Ybar)).
inline CiValue eps_ci_linear(const CovarianceBlocks& blocks, NormKind norm = NormKind::frobenius) {
  const PartialCov pc = partial_cov(blocks.sigma_x1x2, blocks.sigma_x1y, blocks.sigma_yy,
                                    blocks.sigma_x2y.transpose());
  const DenseMatrix whitened = inv_sqrt(blocks.sigma_x1x1) * pc.value;
  return {matrix_norm(whitened, norm), pc.degenerate_conditioning};
}

/// Replaces the label block by raw second moments diag(p) of a one-hot
/// encoding. For centered X blocks this gives the same partial covariance as
/// the (singular) centered one-hot covariance, without the pseudo-inverse.
inline CovarianceBlocks with_raw_one_hot_moments(CovarianceBlocks blocks,
                                                 const DenseVector& label_probs) {
  require_dims(label_probs.size() == blocks.d3(), "with_raw_one_hot_moments: label dimension");
  blocks.sigma_yy = label_probs.asDiagonal();
  return blocks;
}

/// Sample version: X views are centered, the one-hot latent enters through raw
/// second moments.
inline CiValue eps_ci_linear_samples(const DenseMatrix& x1, const DenseMatrix& x2,
                                     const DenseMatrix& ybar_one_hot,
                                     NormKind norm = NormKind::frobenius) {
  require_dims(x1.rows() == x2.rows() && x1.rows() == ybar_one_hot.rows(),
               "eps_ci_linear_samples: row counts differ");
  const DenseMatrix x1c = x1.rowwise() - x1.colwise().mean();
  const DenseMatrix x2c = x2.rowwise() - x2.colwise().mean();
  CovarianceBlocks b;
  b.sigma_x1x1 = empirical_cov(x1c, x1c, false);
  b.sigma_x1x2 = empirical_cov(x1c, x2c, false);
  b.sigma_x1y = empirical_cov(x1c, ybar_one_hot, false);
  b.sigma_x2x2 = empirical_cov(x2c, x2c, false);
  b.sigma_x2y = empirical_cov(x2c, ybar_one_hot, false);
  b.sigma_yy = empirical_cov(ybar_one_hot, ybar_one_hot, false);
  return eps_ci_linear(b, norm);
}

namespace detail {
// Each row divided by its sum: turns a joint table into conditionals.
inline DenseMatrix rows_normalized(DenseMatrix m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double s = m.row(r).sum();
    require(s > 0.0, "conditional of a zero-probability cell");
    m.row(r) /= s;
  }
  return m;
}
}  // namespace detail

/// eps_CI for the universal class over a finite support, with X2 embedded as
/// standard basis vectors:
///   eps^2 = E_{X1} || E[X2|X1] - E[ E[X2|Y] | X1 ] ||^2.
inline double eps_ci_universal(const DiscreteJoint& joint) {
  joint.validate(/*require_positive_y=*/true);
  const DenseVector p1 = joint.p_x1();
  const DenseMatrix x2_given_x1 = detail::rows_normalized(joint.p_x1x2());
  const DenseMatrix y_given_x1 = detail::rows_normalized(joint.p_x1y());
  const DenseMatrix x2_given_y = detail::rows_normalized(joint.p_x2y().transpose());  // ny x n2
  const DenseMatrix gap = x2_given_x1 - y_given_x1 * x2_given_y;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < gap.rows(); ++i) acc += p1(i) * gap.row(i).squaredNorm();
  return std::sqrt(acc);
}

struct BetaReport {
  double beta_inv = 0.0;
  Eigen::Index rank_sigma_x2ybar = 0;
  bool rank_deficient = false;
};

/// 1/beta = || Sigma_{Y phi_ybar} Sigma_{X2 phi_ybar}^+ ||_2.
inline BetaReport beta_inv(const DenseMatrix& sigma_y_ybar, const DenseMatrix& sigma_x2_ybar,
                           double rank_tol = kDefaultRankTol) {
  require_dims(sigma_y_ybar.cols() == sigma_x2_ybar.cols(), "beta_inv: latent dimensions differ");
  BetaReport out;
  out.beta_inv = spectral_norm(sigma_y_ybar * pinv(sigma_x2_ybar, rank_tol));
  out.rank_sigma_x2ybar = numerical_rank(sigma_x2_ybar, rank_tol);
  out.rank_deficient = out.rank_sigma_x2ybar < sigma_x2_ybar.cols();
  return out;
}

/// p(x1, y, ybar) with ybar fastest; Y is one-hot encoded.
struct LatentLabelJoint {
  std::size_t n1 = 0, ny = 0, nbar = 0;
  std::vector<double> p;

  LatentLabelJoint() = default;
  LatentLabelJoint(std::size_t a, std::size_t b, std::size_t c) : n1(a), ny(b), nbar(c), p(a * b * c) {}

  double& at(std::size_t i, std::size_t y, std::size_t b) { return p[(i * ny + y) * nbar + b]; }
  double at(std::size_t i, std::size_t y, std::size_t b) const { return p[(i * ny + y) * nbar + b]; }
};

/// E_{X1} || E[Y|X1] - E[ E[Y|Ybar] | X1 ] ||^2 (mean squared gap, not its root).
inline double eps_y_bar(const LatentLabelJoint& j) {
  require_dims(j.p.size() == j.n1 * j.ny * j.nbar && j.n1 >= 1 && j.ny >= 1 && j.nbar >= 1,
               "eps_y_bar: tensor size does not match supports");
  double total = 0.0;
  for (double v : j.p) {
    require(std::isfinite(v) && v >= 0.0, "eps_y_bar: negative entry");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-12, "eps_y_bar: entries do not sum to 1");
  DenseMatrix p_x1y = DenseMatrix::Zero(j.n1, j.ny), p_x1b = DenseMatrix::Zero(j.n1, j.nbar),
              p_yb = DenseMatrix::Zero(j.ny, j.nbar);
  for (std::size_t i = 0; i < j.n1; ++i)
    for (std::size_t y = 0; y < j.ny; ++y)
      for (std::size_t b = 0; b < j.nbar; ++b) {
        p_x1y(i, y) += j.at(i, y, b);
        p_x1b(i, b) += j.at(i, y, b);
        p_yb(y, b) += j.at(i, y, b);
      }
  const DenseVector p1 = p_x1y.rowwise().sum();
  require((p1.array() > 0.0).all(), "eps_y_bar: zero marginal p(x1)");
  require((p_yb.colwise().sum().array() > 0.0).all(), "eps_y_bar: zero marginal p(ybar)");
  const DenseMatrix y_given_x1 = detail::rows_normalized(p_x1y);
  const DenseMatrix b_given_x1 = detail::rows_normalized(p_x1b);
  const DenseMatrix y_given_b = detail::rows_normalized(p_yb.transpose());  // nbar x ny
  const DenseMatrix gap = y_given_x1 - b_given_x1 * y_given_b;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < gap.rows(); ++i) acc += p1(i) * gap.row(i).squaredNorm();
  return acc;
}

struct BayesGap {
  double lhs = 0.0;  // E || E[Y|X1] - E[Y|X1,X2] ||^2
  double rhs = 0.0;  // 2k * Bayes-error(P_{X1,Y})
  bool holds = true;
};

inline BayesGap bayes_gap_check(const DiscreteJoint& joint) {
  joint.validate();
  const DenseMatrix p12 = joint.p_x1x2();
  const DenseMatrix y_given_x1 = detail::rows_normalized(joint.p_x1y());
  const DenseVector p1 = joint.p_x1();
  BayesGap out;
  for (std::size_t i = 0; i < joint.n1; ++i) {
    for (std::size_t k = 0; k < joint.n2; ++k) {
      const double cell = p12(i, k);
      if (cell <= 0.0) continue;
      double sq = 0.0;
      for (std::size_t y = 0; y < joint.ny; ++y) {
        const double diff = y_given_x1(i, y) - joint.at(i, k, y) / cell;
        sq += diff * diff;
      }
      out.lhs += cell * sq;
    }
  }
  double bayes_error = 0.0;
  for (std::size_t i = 0; i < joint.n1; ++i) bayes_error += p1(i) * (1.0 - y_given_x1.row(i).maxCoeff());
  out.rhs = 2.0 * static_cast<double>(joint.ny) * bayes_error;
  out.holds = out.lhs <= out.rhs + 1e-15;
  return out;
}

struct SpectrumPair {
  DenseVector unconditional;  // singular values of Sigma_{X1 X2}
  DenseVector conditional;    // singular values of Sigma_{X1 X2 | Y}
};

/// Descriptive only: no ordering between the two spectra is implied.
inline SpectrumPair spectrum_conditional(const CovarianceBlocks& blocks) {
  SpectrumPair out;
  out.unconditional = singular_values(blocks.sigma_x1x2);
  const PartialCov pc = partial_cov(blocks.sigma_x1x2, blocks.sigma_x1y, blocks.sigma_yy,
                                    blocks.sigma_x2y.transpose());
  out.conditional = singular_values(pc.value);
  return out;
}

}  // namespace sslci
