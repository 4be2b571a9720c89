#pragma once

// Conditional-expectation operators on finite supports and the alternating
// conditional expectation (ACE) solver for nonlinear CCA.
//
// Functions g on a support with marginal p are mapped to Euclidean vectors
// via g -> diag(sqrt(p)) g, which turns L2(P) into the standard inner
// product. An operator with kernel K(x1, x2) (so that (Kg)(x1) =
// sum_x2 K(x1, x2) p(x2) g(x2)) becomes the matrix D1^{1/2} K D2^{1/2}.

#include <algorithm>
#include <cmath>
#include <string>

#include "sslci/generators.hpp"
#include "sslci/matrix_stats.hpp"
#include "sslci/random.hpp"

namespace sslci {

/// D1^{1/2} K D2^{1/2}.
inline DenseMatrix weighted_form(const DenseMatrix& kernel, const DenseVector& p1,
                                 const DenseVector& p2) {
  return p1.cwiseSqrt().asDiagonal() * kernel * p2.cwiseSqrt().asDiagonal();
}

/// (T g)(x1) = E[g(X2) | X1 = x1], kernel p(x1,x2) / (p(x1) p(x2)).
struct OperatorT {
  DenseMatrix t;         // n1 x n2
  DenseVector d1, d2;    // marginals of X1 and X2
  DenseMatrix weighted;  // D1^{1/2} T D2^{1/2}
};

inline OperatorT build_operator_t(const DiscreteJoint& joint) {
  joint.validate();
  OperatorT op;
  op.d1 = joint.p_x1();
  op.d2 = joint.p_x2();
  const DenseMatrix p12 = joint.p_x1x2();
  op.t = op.d1.cwiseInverse().asDiagonal() * p12 * op.d2.cwiseInverse().asDiagonal();
  op.weighted = weighted_form(op.t, op.d1, op.d2);
  return op;
}

/// (L g)(x1) = E[ E[g(X2) | Y] | X1 = x1 ], kernel
/// sum_y p(x1|y) p(x2|y) p(y) / (p(x1) p(x2)).
inline DenseMatrix build_operator_l(const DiscreteJoint& joint) {
  joint.validate(/*require_positive_y=*/true);
  const DenseVector p1 = joint.p_x1(), p2 = joint.p_x2(), py = joint.p_y();
  const DenseMatrix p1y = joint.p_x1y(), p2y = joint.p_x2y();
  const DenseMatrix numer = p1y * py.cwiseInverse().asDiagonal() * p2y.transpose();
  return p1.cwiseInverse().asDiagonal() * numer * p2.cwiseInverse().asDiagonal();
}

/// Singular values of T in the L2(P) geometry (the first is always 1).
inline DenseVector weighted_singular_values(const DiscreteJoint& joint) {
  return singular_values(build_operator_t(joint).weighted);
}

/// Operator norm of T - L in the L2(P) geometry.
inline double eps_ci_tilde(const DiscreteJoint& joint) {
  const OperatorT op = build_operator_t(joint);
  const DenseMatrix l = build_operator_l(joint);
  return spectral_norm(op.weighted - weighted_form(l, op.d1, op.d2));
}

/// k-th maximal correlation: the (k+1)-th weighted singular value of T.
inline double maximal_correlation(const DiscreteJoint& joint, std::size_t k) {
  const std::size_t limit = std::min(joint.n1, joint.n2);
  if (k < 1 || k + 1 > limit) {
    throw DomainError("maximal_correlation: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(limit - 1) + "]");
  }
  const DenseVector s = weighted_singular_values(joint);
  return std::clamp(s(static_cast<Eigen::Index>(k)), 0.0, 1.0);
}

struct AceSolution {
  DenseMatrix psi;     // n1 x k, psi(x1) per row
  DenseMatrix eta;     // n2 x k
  DenseVector sigmas;  // sigma_i = E[psi_i(X1) eta_i(X2)], non-increasing
  std::size_t iterations = 0;
  bool converged = false;
};

struct AceOptions {
  std::size_t max_iters = 10000;
  double tol = 1e-10;
  /// Extra columns carried in the alternation beyond the k requested.
  std::size_t oversample = 4;
  std::uint64_t seed = 0xACE;
};

namespace detail {

inline DenseMatrix orthonormalize(const DenseMatrix& m) {
  Eigen::HouseholderQR<DenseMatrix> qr(m);
  return qr.householderQ() * DenseMatrix::Identity(m.rows(), m.cols());
}

/// Orthonormal basis (n x n-1) of the complement of the unit vector u.
inline DenseMatrix complement_basis(const DenseVector& u) {
  Eigen::HouseholderQR<DenseMatrix> qr{DenseMatrix(u)};
  const DenseMatrix q = qr.householderQ();
  return q.rightCols(u.size() - 1);
}

inline void fix_signs(DenseMatrix& a, DenseMatrix& b) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double peak = a.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (std::abs(a(i, j)) > 1e-12 * peak) {
        if (a(i, j) < 0.0) {
          a.col(j) *= -1.0;
          b.col(j) *= -1.0;
        }
        break;
      }
    }
  }
}

}  // namespace detail

/// Top-k non-constant singular pairs of T by alternating conditional
/// expectations: psi <- orth(T eta), eta <- orth(T^T psi), each followed by
/// a Rayleigh-Ritz rotation. The constant pair (singular value 1) is removed
/// up front by restricting both sides to the orthogonal complement of the
/// constants, so every iterate is zero-mean.
inline AceSolution ace_fit(const DiscreteJoint& joint, std::size_t k, const AceOptions& opt = {}) {
  const std::size_t limit = std::min(joint.n1, joint.n2);
  if (k < 1 || k + 1 > limit) {
    throw DomainError("ace_fit: need 1 <= k <= min(|X1|,|X2|) - 1, got k=" + std::to_string(k));
  }
  const OperatorT op = build_operator_t(joint);
  const DenseVector s1 = op.d1.cwiseSqrt(), s2 = op.d2.cwiseSqrt();
  const DenseMatrix q1 = detail::complement_basis(s1);
  const DenseMatrix q2 = detail::complement_basis(s2);
  const DenseMatrix reduced = q1.transpose() * op.weighted * q2;

  const auto block = static_cast<Eigen::Index>(std::min(limit - 1, k + opt.oversample));
  const auto kk = static_cast<Eigen::Index>(k);
  Rng rng(opt.seed);
  DenseMatrix v(reduced.cols(), block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = rng.normal();
  v = detail::orthonormalize(v);
  DenseMatrix u(reduced.rows(), block);

  AceSolution sol;
  DenseVector sigma = DenseVector::Constant(block, -1.0);
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    u = detail::orthonormalize(reduced * v);
    v = detail::orthonormalize(reduced.transpose() * u);
    const SvdResult small = svd(u.transpose() * reduced * v);
    u = u * small.u;
    v = v * small.v;
    const double change = (small.s.head(kk) - sigma.head(kk)).cwiseAbs().maxCoeff();
    sigma = small.s;
    sol.iterations = it;
    if (change < opt.tol) {
      sol.converged = true;
      break;
    }
  }
  DenseMatrix psi_e = q1 * u.leftCols(kk);
  DenseMatrix eta_e = q2 * v.leftCols(kk);
  detail::fix_signs(psi_e, eta_e);
  sol.psi = s1.cwiseInverse().asDiagonal() * psi_e;
  sol.eta = s2.cwiseInverse().asDiagonal() * eta_e;
  sol.sigmas = sigma.head(kk);
  return sol;
}

struct AceObjectives {
  double l_ace = 0.0;  // E || psi(X1) - eta(X2) ||^2
  double l_cca = 0.0;  // E [ psi(X1)^T eta(X2) ]
  /// |l_ace - (2k - 2 l_cca)|
  double identity_gap = 0.0;
};

/// Evaluates both objectives by direct summation over the support. Throws if
/// (psi, eta) violate Sigma_psipsi = Sigma_etaeta = I beyond 1e-8.
inline AceObjectives ace_objective_identity_check(const AceSolution& sol,
                                                  const DiscreteJoint& joint) {
  joint.validate();
  require_dims(sol.psi.rows() == static_cast<Eigen::Index>(joint.n1) &&
                   sol.eta.rows() == static_cast<Eigen::Index>(joint.n2) &&
                   sol.psi.cols() == sol.eta.cols(),
               "ace_objective_identity_check: solution does not match the joint");
  const DenseVector p1 = joint.p_x1(), p2 = joint.p_x2();
  const Eigen::Index k = sol.psi.cols();
  const DenseMatrix id = DenseMatrix::Identity(k, k);
  const DenseMatrix gram_psi = sol.psi.transpose() * p1.asDiagonal() * sol.psi;
  const DenseMatrix gram_eta = sol.eta.transpose() * p2.asDiagonal() * sol.eta;
  if ((gram_psi - id).cwiseAbs().maxCoeff() > 1e-8 ||
      (gram_eta - id).cwiseAbs().maxCoeff() > 1e-8) {
    throw DomainError("ace_objective_identity_check: orthonormality constraint violated");
  }
  const DenseMatrix p12 = joint.p_x1x2();
  AceObjectives out;
  for (std::size_t i = 0; i < joint.n1; ++i) {
    for (std::size_t j = 0; j < joint.n2; ++j) {
      const double w = p12(i, j);
      const auto a = sol.psi.row(i), b = sol.eta.row(j);
      out.l_ace += w * (a - b).squaredNorm();
      out.l_cca += w * a.dot(b);
    }
  }
  out.identity_gap = std::abs(out.l_ace - (2.0 * static_cast<double>(k) - 2.0 * out.l_cca));
  return out;
}

enum class GChoice { pinv_of_a, bayes_indicator };

struct ApxBound {
  double bound = 0.0;      // with T_k built from the supplied solution
  double bound_svd = 0.0;  // with T_k from an exact SVD of T
  double actual = 0.0;     // min_W E || f*(X1) - W^T [1, psi(X1)] ||^2
  bool degenerate = false;
  bool holds = true;
};

/// Approximation error of the representation against
///   sum_y 2 ( ||(T_k - L) g_y||^2 + ||L g_y - f*_y||^2 ),
/// where f*_y(x1) = P(Y = y | x1). T_k keeps the constant pair plus the k
/// pairs of the solution, so psi is used together with the constant function.
inline ApxBound apx_error_bound_eval(const AceSolution& sol, const DiscreteJoint& joint,
                                     GChoice g_choice) {
  joint.validate(/*require_positive_y=*/true);
  const OperatorT op = build_operator_t(joint);
  const DenseVector s1 = op.d1.cwiseSqrt(), s2 = op.d2.cwiseSqrt();
  const DenseVector py = joint.p_y();
  const DenseMatrix l_w = weighted_form(build_operator_l(joint), op.d1, op.d2);
  const Eigen::Index k = sol.psi.cols();
  const auto ny = static_cast<Eigen::Index>(joint.ny);

  const DenseMatrix psi_e = s1.asDiagonal() * sol.psi;
  const DenseMatrix eta_e = s2.asDiagonal() * sol.eta;
  const DenseMatrix tk = s1 * s2.transpose() + psi_e * sol.sigmas.asDiagonal() * eta_e.transpose();

  const SvdResult full = svd(op.weighted);
  const Eigen::Index keep = std::min<Eigen::Index>(k + 1, full.s.size());
  const DenseMatrix tk_svd = full.u.leftCols(keep) * full.s.head(keep).asDiagonal() *
                             full.v.leftCols(keep).transpose();

  // f*_y in Euclidean coordinates, one column per class.
  const DenseMatrix p1y = joint.p_x1y();
  const DenseMatrix f_star = s1.cwiseInverse().asDiagonal() * p1y;

  // Columns g_y in Euclidean coordinates.
  ApxBound out;
  DenseMatrix g(static_cast<Eigen::Index>(joint.n2), ny);
  const DenseMatrix p2y = joint.p_x2y();
  if (g_choice == GChoice::pinv_of_a) {
    // (A g)(y) = E[g(X2) | Y = y]; weighted form p(x2,y) / sqrt(p(y) p(x2)).
    const DenseMatrix a_w =
        py.cwiseSqrt().cwiseInverse().asDiagonal() * p2y.transpose() * s2.cwiseInverse().asDiagonal();
    out.degenerate = numerical_rank(a_w) < ny;
    const DenseMatrix a_pinv = pinv(a_w);
    for (Eigen::Index y = 0; y < ny; ++y) g.col(y) = a_pinv.col(y) * std::sqrt(py(y));
  } else {
    g.setZero();
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      Eigen::Index best = 0;
      p2y.row(j).maxCoeff(&best);
      g(j, best) = s2(j);
    }
  }

  const auto bound_with = [&](const DenseMatrix& tk_op) {
    double total = 0.0;
    for (Eigen::Index y = 0; y < ny; ++y) {
      const DenseVector lg = l_w * g.col(y);
      total += 2.0 * (((tk_op - l_w) * g.col(y)).squaredNorm() + (lg - f_star.col(y)).squaredNorm());
    }
    return total;
  };
  out.bound = bound_with(tk);
  out.bound_svd = bound_with(tk_svd);

  DenseMatrix feats(static_cast<Eigen::Index>(joint.n1), k + 1);
  feats.col(0) = s1;
  feats.rightCols(k) = psi_e;
  const DenseMatrix resid = f_star - feats * (pinv(feats) * f_star);
  out.actual = resid.squaredNorm();
  out.holds = out.actual <= out.bound + 1e-8;
  return out;
}

}  // namespace sslci
