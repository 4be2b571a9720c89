#pragma once

// Two-step self-supervised procedure: learn psi by regressing X2 on X1, then
// fit a linear head on psi(X1) with few labels.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sslci/generators.hpp"
#include "sslci/matrix_stats.hpp"

namespace sslci {

enum class FeatureMap { identity, user_supplied };

/// psi(x) = B (phi(x) - input_mean) + output_offset.
struct LinearRepresentation {
  DenseMatrix b;               // d2 x D1
  DenseVector input_mean;      // D1, zero unless fitted with centering
  DenseVector output_offset;   // d2
  FeatureMap feature_map = FeatureMap::identity;
  std::function<DenseMatrix(const DenseMatrix&)> phi;  // used when user_supplied
  bool degenerate = false;

  Eigen::Index output_dim() const { return b.rows(); }

  DenseMatrix features(const DenseMatrix& x1) const {
    if (feature_map == FeatureMap::user_supplied) {
      require(static_cast<bool>(phi), "LinearRepresentation: feature map missing");
      return phi(x1);
    }
    return x1;
  }

  /// n x d2 representation of the rows of x1.
  DenseMatrix apply(const DenseMatrix& x1) const {
    const DenseMatrix f = features(x1);
    require_dims(f.cols() == b.cols(), "LinearRepresentation: feature dimension mismatch");
    DenseMatrix out = f * b.transpose();
    if (input_mean.size() == b.cols()) out.rowwise() -= (b * input_mean).transpose();
    if (output_offset.size() == b.rows()) out.rowwise() += output_offset.transpose();
    return out;
  }
};

/// numer * sigma^{-1}; falls back to the pseudo-inverse for singular sigma.
inline DenseMatrix right_divide(const DenseMatrix& numer, const DenseMatrix& sigma,
                                bool* degenerate = nullptr, double rank_tol = kDefaultRankTol) {
  require_dims(numer.cols() == sigma.rows() && sigma.rows() == sigma.cols(),
               "right_divide: shape mismatch");
  const auto [lo, hi] = eigen_range(0.5 * (sigma + sigma.transpose()));
  const bool singular = !(hi > 0.0 && lo > rank_tol * hi);
  if (degenerate) *degenerate = singular;
  if (singular) return numer * pinv(sigma, rank_tol);
  return sigma.ldlt().solve(numer.transpose()).transpose();
}

/// Population-optimal linear psi*: B = Sigma_{X2 X1} Sigma_{X1 X1}^{-1}.
inline LinearRepresentation closed_form_psi_gaussian(const CovarianceBlocks& blocks) {
  LinearRepresentation rep;
  rep.b = right_divide(blocks.sigma_x1x2.transpose(), blocks.sigma_x1x1, &rep.degenerate);
  return rep;
}

/// Population-optimal linear predictor of Y: Sigma_{Y X1} Sigma_{X1 X1}^{-1} (d3 x d1).
inline DenseMatrix closed_form_f_gaussian(const CovarianceBlocks& blocks,
                                          bool* degenerate = nullptr) {
  return right_divide(blocks.sigma_x1y.transpose(), blocks.sigma_x1x1, degenerate);
}

/// Head W* (d2 x d3) with f* = W*^T psi* under exact CI:
/// W*^T = Sigma_YY Sigma_{X2 Y}^+.
inline DenseMatrix gaussian_optimal_head(const CovarianceBlocks& blocks) {
  return (blocks.sigma_yy * pinv(blocks.sigma_x2y)).transpose();
}

/// psi*(x1) = sum_y P(y | x1) E[X2 | Y = y] for the mixture model.
inline DenseVector closed_form_psi_mixture(const MixtureSpec& spec, const DenseVector& x1) {
  return spec.centers2.transpose() * mixture_posterior(spec, x1);
}

inline DenseMatrix closed_form_psi_mixture_batch(const MixtureSpec& spec, const DenseMatrix& x1) {
  return mixture_posterior_batch(spec, x1) * spec.centers2;
}

/// Ridge scale used when none is configured: 1e-8 * trace(X^T X / n) / D.
inline double default_ridge(const DenseMatrix& x) {
  if (x.size() == 0) return 0.0;
  return 1e-8 * x.squaredNorm() / static_cast<double>(x.rows()) / static_cast<double>(x.cols());
}

/// Solves (X^T X + n * ridge * I) W = X^T Y; ridge = 0 is the minimum-norm
/// least-squares solution.
inline DenseMatrix ridge_solve(const DenseMatrix& x, const DenseMatrix& y, double ridge) {
  require_dims(x.rows() == y.rows(), "ridge_solve: row counts differ");
  require(ridge >= 0.0, "ridge_solve: ridge must be non-negative");
  if (ridge == 0.0) return pinv(x) * y;
  const double n = static_cast<double>(x.rows());
  DenseMatrix gram = x.transpose() * x;
  gram.diagonal().array() += n * ridge;
  return gram.ldlt().solve(x.transpose() * y);
}

/// Pretext step: psi(x) = B x minimizing ||X2 - X1 B^T||_F^2 (+ ridge).
/// With center, both views are centered first and psi carries the offsets.
inline LinearRepresentation fit_pretext_linear(const DenseMatrix& x1_pre, const DenseMatrix& x2,
                                               double ridge, bool center = false) {
  require_dims(x1_pre.rows() == x2.rows(), "fit_pretext_linear: row counts differ");
  require(x1_pre.rows() >= 1, "fit_pretext_linear: need at least one sample");
  LinearRepresentation rep;
  if (center) {
    rep.input_mean = x1_pre.colwise().mean().transpose();
    rep.output_offset = x2.colwise().mean().transpose();
    const DenseMatrix xc = x1_pre.rowwise() - rep.input_mean.transpose();
    const DenseMatrix yc = x2.rowwise() - rep.output_offset.transpose();
    rep.b = ridge_solve(xc, yc, ridge).transpose();
  } else {
    rep.b = ridge_solve(x1_pre, x2, ridge).transpose();
  }
  return rep;
}

struct DownstreamFit {
  DenseMatrix w_hat;  // d2 x d3, in original feature coordinates
  DenseVector bias;   // d3, zero without intercept
  double ridge = 0.0;
  std::optional<Eigen::Index> pca_rank;

  DenseMatrix predict(const DenseMatrix& features) const {
    require_dims(features.cols() == w_hat.rows(), "DownstreamFit::predict: feature dimension");
    DenseMatrix out = features * w_hat;
    if (bias.size() == w_hat.cols()) out.rowwise() += bias.transpose();
    return out;
  }
};

/// Downstream linear head on psi features, optionally restricted to the top
/// pca_rank principal components of the features.
inline DownstreamFit fit_downstream(const DenseMatrix& psi_x1, const DenseMatrix& y, double ridge,
                                    std::optional<Eigen::Index> pca_rank = std::nullopt,
                                    bool intercept = true) {
  require_dims(psi_x1.rows() == y.rows(), "fit_downstream: row counts differ");
  require(psi_x1.rows() >= 1, "fit_downstream: no samples");
  if (pca_rank) {
    require(*pca_rank >= 1 && *pca_rank <= psi_x1.cols(),
            "fit_downstream: pca_rank must lie in [1, d2]");
  }
  DownstreamFit fit;
  fit.ridge = ridge;
  fit.pca_rank = pca_rank;
  DenseVector f_mean = DenseVector::Zero(psi_x1.cols());
  DenseVector y_mean = DenseVector::Zero(y.cols());
  if (intercept) {
    f_mean = psi_x1.colwise().mean().transpose();
    y_mean = y.colwise().mean().transpose();
  }
  const DenseMatrix fc = psi_x1.rowwise() - f_mean.transpose();
  const DenseMatrix yc = y.rowwise() - y_mean.transpose();
  if (pca_rank) {
    const DenseMatrix proj = pca_top_r(psi_x1, *pca_rank).projection;
    fit.w_hat = proj * ridge_solve(fc * proj, yc, ridge);
  } else {
    fit.w_hat = ridge_solve(fc, yc, ridge);
  }
  fit.bias = intercept ? DenseVector(y_mean - fit.w_hat.transpose() * f_mean)
                       : DenseVector::Zero(y.cols());
  return fit;
}

/// Evaluates the optimal predictor f* on a batch of X1 rows (m x d3).
using TargetFn = std::function<DenseMatrix(const DenseMatrix&)>;

/// f*(x) = mean_y + map (x - mean_x).
inline TargetFn linear_target(DenseMatrix map, DenseVector mean_x, DenseVector mean_y) {
  return [map = std::move(map), mean_x = std::move(mean_x),
          mean_y = std::move(mean_y)](const DenseMatrix& x) {
    DenseMatrix out = (x.rowwise() - mean_x.transpose()) * map.transpose();
    out.rowwise() += mean_y.transpose();
    return out;
  };
}

/// Mean squared gap ||f*(x) - W^T psi(x)||^2 over the evaluation rows.
inline double mse(const DownstreamFit& fit, const LinearRepresentation& rep, const TargetFn& f_star,
                  const DenseMatrix& eval_x1) {
  require(eval_x1.rows() >= 1, "mse: empty evaluation set");
  const DenseMatrix gap = f_star(eval_x1) - fit.predict(rep.apply(eval_x1));
  return gap.squaredNorm() / static_cast<double>(eval_x1.rows());
}

/// Monte-Carlo excess risk: half the mean squared gap to f*.
inline double excess_risk(const DownstreamFit& fit, const LinearRepresentation& rep,
                          const TargetFn& f_star, const DenseMatrix& eval_x1) {
  return 0.5 * mse(fit, rep, f_star, eval_x1);
}

/// Mean softmax cross-entropy of gamma * scores against integer labels.
inline double log_loss_eval(const DenseMatrix& scores, std::span<const int> labels, double gamma) {
  require(scores.cols() >= 2, "log_loss_eval: need k >= 2 classes");
  require_dims(static_cast<Eigen::Index>(labels.size()) == scores.rows(),
               "log_loss_eval: label count");
  double total = 0.0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    require(label >= 0 && label < scores.cols(), "log_loss_eval: label out of range");
    const Eigen::RowVectorXd z = gamma * scores.row(r);
    const double top = z.maxCoeff();
    const double lse = top + std::log((z.array() - top).exp().sum());
    total += lse - z(label);
  }
  return total / static_cast<double>(scores.rows());
}

}  // namespace sslci
