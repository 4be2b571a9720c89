#pragma once

// Dense linear-algebra and covariance primitives shared by the rest of the
// library. Everything here is a pure function of its arguments.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "sslci/errors.hpp"

namespace sslci {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

/// Singular values below rank_tol * sigma_max are treated as zero.
inline constexpr double kDefaultRankTol = 1e-10;

inline bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

inline bool is_symmetric(const DenseMatrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

struct SvdResult {
  DenseMatrix u;
  DenseVector s;  // non-increasing
  DenseMatrix v;
};

/// SVD with a fixed sign convention: the first non-negligible entry of every
/// left singular vector is positive (the right vector is flipped with it).
inline SvdResult svd(const DenseMatrix& m, bool full = false) {
  SvdResult out;
  if (m.size() == 0) {
    out.u = DenseMatrix::Identity(m.rows(), full ? m.rows() : 0);
    out.v = DenseMatrix::Identity(m.cols(), full ? m.cols() : 0);
    out.s = DenseVector(0);
    return out;
  }
  const unsigned opts = full ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                             : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::BDCSVD<DenseMatrix> solver(m, opts);
  out.u = solver.matrixU();
  out.s = solver.singularValues();
  out.v = solver.matrixV();
  const Eigen::Index pairs = std::min(out.u.cols(), out.v.cols());
  for (Eigen::Index j = 0; j < pairs; ++j) {
    const double peak = out.u.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      if (std::abs(out.u(i, j)) > 1e-12 * peak) {
        if (out.u(i, j) < 0.0) {
          out.u.col(j) *= -1.0;
          out.v.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

inline DenseVector singular_values(const DenseMatrix& m) {
  if (m.size() == 0) return DenseVector(0);
  return Eigen::BDCSVD<DenseMatrix>(m).singularValues();
}

inline double spectral_norm(const DenseMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

/// Numerical rank with the relative threshold used throughout the library.
inline Eigen::Index numerical_rank(const DenseMatrix& m, double rank_tol = kDefaultRankTol) {
  const DenseVector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > rank_tol * s(0)).count();
}

/// Moore-Penrose pseudo-inverse.
inline DenseMatrix pinv(const DenseMatrix& m, double rank_tol = kDefaultRankTol) {
  DenseMatrix out = DenseMatrix::Zero(m.cols(), m.rows());
  if (m.size() == 0) return out;
  const SvdResult d = svd(m);
  if (d.s.size() == 0 || d.s(0) == 0.0) return out;
  const double cutoff = rank_tol * d.s(0);
  for (Eigen::Index i = 0; i < d.s.size(); ++i) {
    if (d.s(i) > cutoff) out.noalias() += (d.v.col(i) / d.s(i)) * d.u.col(i).transpose();
  }
  return out;
}

/// M^{-1/2} on the positive eigenspace of a symmetric PSD matrix.
inline DenseMatrix inv_sqrt(const DenseMatrix& m, double rank_tol = kDefaultRankTol) {
  if (!is_symmetric(m)) throw DomainError("inv_sqrt: matrix is not symmetric");
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m);
  const DenseVector& lam = eig.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  DenseVector scaled = DenseVector::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > rank_tol * top) scaled(i) = 1.0 / std::sqrt(lam(i));
  }
  const DenseMatrix& q = eig.eigenvectors();
  DenseMatrix out = q * scaled.asDiagonal() * q.transpose();
  return 0.5 * (out + out.transpose());
}

/// Extreme eigenvalues of a symmetric matrix, {min, max}.
inline std::pair<double, double> eigen_range(const DenseMatrix& m) {
  if (m.size() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

/// (1/n) A^T B, optionally after column-centering both inputs.
inline DenseMatrix empirical_cov(const DenseMatrix& a, const DenseMatrix& b, bool center = true) {
  require_dims(a.rows() == b.rows(), "empirical_cov: row counts differ (" +
                                         std::to_string(a.rows()) + " vs " +
                                         std::to_string(b.rows()) + ")");
  require_dims(a.rows() >= 1, "empirical_cov: need at least one sample");
  const double n = static_cast<double>(a.rows());
  if (!center) return (a.transpose() * b) / n;
  const DenseMatrix ac = a.rowwise() - a.colwise().mean();
  const DenseMatrix bc = b.rowwise() - b.colwise().mean();
  return (ac.transpose() * bc) / n;
}

struct PartialCov {
  DenseMatrix value;
  /// Set when Sigma_ZZ was singular and the pseudo-inverse was used.
  bool degenerate_conditioning = false;
};

/// Sigma_{AB|Z} = Sigma_AB - Sigma_AZ Sigma_ZZ^{-1} Sigma_ZB.
inline PartialCov partial_cov(const DenseMatrix& sigma_ab, const DenseMatrix& sigma_az,
                              const DenseMatrix& sigma_zz, const DenseMatrix& sigma_zb,
                              double rank_tol = kDefaultRankTol) {
  require_dims(sigma_az.rows() == sigma_ab.rows() && sigma_zb.cols() == sigma_ab.cols() &&
                   sigma_zz.rows() == sigma_zz.cols() && sigma_az.cols() == sigma_zz.rows() &&
                   sigma_zb.rows() == sigma_zz.rows(),
               "partial_cov: inconsistent block shapes");
  PartialCov out;
  if (sigma_zz.size() == 0) {
    out.value = sigma_ab;
    return out;
  }
  const auto [lo, hi] = eigen_range(0.5 * (sigma_zz + sigma_zz.transpose()));
  if (hi > 0.0 && lo > rank_tol * hi) {
    out.value = sigma_ab - sigma_az * sigma_zz.ldlt().solve(sigma_zb);
  } else {
    out.degenerate_conditioning = true;
    out.value = sigma_ab - sigma_az * pinv(sigma_zz, rank_tol) * sigma_zb;
  }
  return out;
}

struct Pca {
  DenseMatrix projection;  // d x r, orthonormal columns
  DenseVector spectrum;    // top-r singular values of centered samples / sqrt(n)
  DenseVector mean;        // column means used for centering
};

inline Pca pca_top_r(const DenseMatrix& samples, Eigen::Index r) {
  const Eigen::Index d = samples.cols();
  require(r >= 1 && r <= d, "pca_top_r: need 1 <= r <= d (r=" + std::to_string(r) +
                                ", d=" + std::to_string(d) + ")");
  require_dims(samples.rows() >= 1, "pca_top_r: no samples");
  Pca out;
  out.mean = samples.colwise().mean().transpose();
  const DenseMatrix centered =
      (samples.rowwise() - out.mean.transpose()) / std::sqrt(static_cast<double>(samples.rows()));
  // Full V so that r = d is available even when n < d.
  const SvdResult d_ = svd(centered.transpose(), /*full=*/true);
  out.projection = d_.u.leftCols(r);
  out.spectrum = DenseVector::Zero(r);
  out.spectrum.head(std::min<Eigen::Index>(r, d_.s.size())) =
      d_.s.head(std::min<Eigen::Index>(r, d_.s.size()));
  return out;
}

/// Second-moment blocks of (X1, X2, Y).
struct CovarianceBlocks {
  DenseMatrix sigma_x1x1, sigma_x1x2, sigma_x1y, sigma_x2x2, sigma_x2y, sigma_yy;

  Eigen::Index d1() const { return sigma_x1x1.rows(); }
  Eigen::Index d2() const { return sigma_x2x2.rows(); }
  Eigen::Index d3() const { return sigma_yy.rows(); }

  void validate(double tol = 1e-9) const {
    require_dims(sigma_x1x1.cols() == d1() && sigma_x2x2.cols() == d2() && sigma_yy.cols() == d3(),
                 "CovarianceBlocks: diagonal blocks must be square");
    require_dims(sigma_x1x2.rows() == d1() && sigma_x1x2.cols() == d2(),
                 "CovarianceBlocks: sigma_x1x2 shape");
    require_dims(sigma_x1y.rows() == d1() && sigma_x1y.cols() == d3(),
                 "CovarianceBlocks: sigma_x1y shape");
    require_dims(sigma_x2y.rows() == d2() && sigma_x2y.cols() == d3(),
                 "CovarianceBlocks: sigma_x2y shape");
    const DenseMatrix j = joint();
    require(all_finite(j), "CovarianceBlocks: non-finite entry");
    require(is_symmetric(j), "CovarianceBlocks: joint matrix not symmetric");
    const auto [lo, hi] = eigen_range(j);
    require(lo >= -tol * std::max(1.0, hi), "CovarianceBlocks: joint matrix not PSD");
  }

  /// The full (d1+d2+d3) square matrix.
  DenseMatrix joint() const {
    const Eigen::Index a = d1(), b = d2(), c = d3();
    DenseMatrix j(a + b + c, a + b + c);
    j.block(0, 0, a, a) = sigma_x1x1;
    j.block(0, a, a, b) = sigma_x1x2;
    j.block(0, a + b, a, c) = sigma_x1y;
    j.block(a, 0, b, a) = sigma_x1x2.transpose();
    j.block(a, a, b, b) = sigma_x2x2;
    j.block(a, a + b, b, c) = sigma_x2y;
    j.block(a + b, 0, c, a) = sigma_x1y.transpose();
    j.block(a + b, a, c, b) = sigma_x2y.transpose();
    j.block(a + b, a + b, c, c) = sigma_yy;
    return j;
  }

  static CovarianceBlocks from_joint(const DenseMatrix& j, Eigen::Index d1, Eigen::Index d2,
                                     Eigen::Index d3) {
    require_dims(j.rows() == d1 + d2 + d3 && j.cols() == j.rows(),
                 "CovarianceBlocks::from_joint: size mismatch");
    CovarianceBlocks b;
    b.sigma_x1x1 = j.block(0, 0, d1, d1);
    b.sigma_x1x2 = j.block(0, d1, d1, d2);
    b.sigma_x1y = j.block(0, d1 + d2, d1, d3);
    b.sigma_x2x2 = j.block(d1, d1, d2, d2);
    b.sigma_x2y = j.block(d1, d1 + d2, d2, d3);
    b.sigma_yy = j.block(d1 + d2, d1 + d2, d3, d3);
    return b;
  }

  /// Blocks estimated from samples via empirical_cov.
  static CovarianceBlocks from_samples(const DenseMatrix& x1, const DenseMatrix& x2,
                                       const DenseMatrix& y, bool center = true) {
    CovarianceBlocks b;
    b.sigma_x1x1 = empirical_cov(x1, x1, center);
    b.sigma_x1x2 = empirical_cov(x1, x2, center);
    b.sigma_x1y = empirical_cov(x1, y, center);
    b.sigma_x2x2 = empirical_cov(x2, x2, center);
    b.sigma_x2y = empirical_cov(x2, y, center);
    b.sigma_yy = empirical_cov(y, y, center);
    return b;
  }
};

/// Linear conditional-expectation maps; E[A | B = b] = map * b.
struct ConditionalMaps {
  DenseMatrix x1_given_x2;  // d1 x d2
  DenseMatrix x2_given_x1;  // d2 x d1
  DenseMatrix y_given_x;    // d3 x (d1 + d2)
  DenseMatrix y_given_x1;   // d3 x d1
};

/// Conditional-expectation maps read off the precision matrix of the joint
/// covariance. With Sigma^{-1} = [[A, rho], [rho^T, B]] and
/// rho_bar = rho B^{-1/2}:
///   E[X1|X2] = (A11 - rb1 rb1^T)^{-1} (rb1 rb2^T - A12) X2
///   E[X2|X1] = (A22 - rb2 rb2^T)^{-1} (rb2 rb1^T - A21) X1
///   E[Y|X]   = -B^{-1/2} (rb1^T X1 + rb2^T X2)
/// E[Y|X1] uses the precision of the (X1, Y) marginal, obtained as the Schur
/// complement of the X2 block of the full precision.
inline ConditionalMaps gaussian_conditionals_from_precision(const CovarianceBlocks& blocks,
                                                            double rank_tol = kDefaultRankTol) {
  const Eigen::Index d1 = blocks.d1(), d2 = blocks.d2(), d3 = blocks.d3();
  const DenseMatrix joint = blocks.joint();
  require(is_symmetric(joint), "gaussian_conditionals_from_precision: joint not symmetric");
  const auto [lo, hi] = eigen_range(joint);
  if (!(hi > 0.0 && lo > rank_tol * hi)) {
    throw SingularError("gaussian_conditionals_from_precision: joint covariance is singular");
  }
  DenseMatrix prec = joint.ldlt().solve(DenseMatrix::Identity(joint.rows(), joint.cols()));
  prec = 0.5 * (prec + prec.transpose());

  const Eigen::Index dx = d1 + d2;
  const DenseMatrix a11 = prec.block(0, 0, d1, d1);
  const DenseMatrix a12 = prec.block(0, d1, d1, d2);
  const DenseMatrix a21 = prec.block(d1, 0, d2, d1);
  const DenseMatrix a22 = prec.block(d1, d1, d2, d2);
  const DenseMatrix rho1 = prec.block(0, dx, d1, d3);
  const DenseMatrix rho2 = prec.block(d1, dx, d2, d3);
  const DenseMatrix b = prec.block(dx, dx, d3, d3);

  const DenseMatrix b_inv_half = inv_sqrt(b, rank_tol);
  const DenseMatrix rb1 = rho1 * b_inv_half;
  const DenseMatrix rb2 = rho2 * b_inv_half;

  ConditionalMaps out;
  out.x1_given_x2 = (a11 - rb1 * rb1.transpose()).ldlt().solve(rb1 * rb2.transpose() - a12);
  out.x2_given_x1 = (a22 - rb2 * rb2.transpose()).ldlt().solve(rb2 * rb1.transpose() - a21);
  out.y_given_x = DenseMatrix(d3, dx);
  out.y_given_x.leftCols(d1) = -b_inv_half * rb1.transpose();
  out.y_given_x.rightCols(d2) = -b_inv_half * rb2.transpose();

  // Marginal precision over S = (X1, Y).
  DenseMatrix p_ss(d1 + d3, d1 + d3), p_s2(d1 + d3, d2);
  p_ss << a11, rho1, rho1.transpose(), b;
  p_s2 << a12, rho2.transpose();
  const DenseMatrix marginal = p_ss - p_s2 * a22.ldlt().solve(p_s2.transpose());
  const DenseMatrix m_yy = marginal.block(d1, d1, d3, d3);
  const DenseMatrix m_y1 = marginal.block(d1, 0, d3, d1);
  out.y_given_x1 = -m_yy.ldlt().solve(m_y1);
  return out;
}

/// The same maps by direct regression: E[A|B] = Sigma_AB Sigma_BB^{-1}.
inline ConditionalMaps gaussian_conditionals_from_covariance(const CovarianceBlocks& blocks) {
  const Eigen::Index d1 = blocks.d1(), d2 = blocks.d2();
  const auto regress = [](const DenseMatrix& sigma_ab, const DenseMatrix& sigma_bb) -> DenseMatrix {
    return sigma_bb.ldlt().solve(sigma_ab.transpose()).transpose();
  };
  DenseMatrix sigma_xx(d1 + d2, d1 + d2), sigma_yx(blocks.d3(), d1 + d2);
  sigma_xx << blocks.sigma_x1x1, blocks.sigma_x1x2, blocks.sigma_x1x2.transpose(), blocks.sigma_x2x2;
  sigma_yx << blocks.sigma_x1y.transpose(), blocks.sigma_x2y.transpose();
  ConditionalMaps out;
  out.x1_given_x2 = regress(blocks.sigma_x1x2, blocks.sigma_x2x2);
  out.x2_given_x1 = regress(blocks.sigma_x1x2.transpose(), blocks.sigma_x1x1);
  out.y_given_x = regress(sigma_yx, sigma_xx);
  out.y_given_x1 = regress(blocks.sigma_x1y.transpose(), blocks.sigma_x1x1);
  return out;
}

}  // namespace sslci
