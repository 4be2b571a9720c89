#pragma once

// Seeded synthetic data models: analytic population quantities plus
// finite-sample draws.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sslci/matrix_stats.hpp"
#include "sslci/random.hpp"

namespace sslci {

/// Rows of x1 / x2 / y are aligned samples. labels holds class indices when
/// the label is discrete.
struct LabeledDataset {
  DenseMatrix x1;
  std::optional<DenseMatrix> x2;
  std::optional<DenseMatrix> y;
  std::vector<int> labels;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return x1.rows(); }

  void validate() const {
    require_dims(!x2 || x2->rows() == x1.rows(), "LabeledDataset: x2 row count");
    require_dims(!y || y->rows() == x1.rows(), "LabeledDataset: y row count");
    require_dims(labels.empty() || static_cast<Eigen::Index>(labels.size()) == x1.rows(),
                 "LabeledDataset: label count");
  }
};

inline DenseMatrix one_hot(const std::vector<int>& labels, int k) {
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < k, "one_hot: label out of range");
    out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jointly Gaussian model with X1 _|_ X2 | Y by construction.

struct GaussianCISpec {
  Eigen::Index d1 = 1, d2 = 1, k = 1;
  DenseMatrix m1;  // d1 x k
  DenseMatrix m2;  // d2 x k
  double noise1 = 1.0, noise2 = 1.0;
  DenseMatrix sigma_y;  // k x k, PSD

  void validate() const {
    require(d1 >= 1 && d2 >= 1 && k >= 1, "GaussianCISpec: dims must be >= 1");
    require_dims(m1.rows() == d1 && m1.cols() == k, "GaussianCISpec: m1 shape");
    require_dims(m2.rows() == d2 && m2.cols() == k, "GaussianCISpec: m2 shape");
    require_dims(sigma_y.rows() == k && sigma_y.cols() == k, "GaussianCISpec: sigma_y shape");
    require(noise1 > 0.0 && noise2 > 0.0, "GaussianCISpec: noise scales must be positive");
    require(is_symmetric(sigma_y) && eigen_range(sigma_y).first >= -1e-12,
            "GaussianCISpec: sigma_y must be symmetric PSD");
  }
};

/// Random well-conditioned spec: N(0,1) loadings, noise scales in [0.5, 1.5],
/// sigma_y = L L^T / k + 0.5 I.
inline GaussianCISpec random_gaussian_ci_spec(Eigen::Index d1, Eigen::Index d2, Eigen::Index k,
                                              std::uint64_t seed) {
  Rng rng(seed, 0x6A55);
  GaussianCISpec s;
  s.d1 = d1;
  s.d2 = d2;
  s.k = k;
  s.m1 = DenseMatrix(d1, k);
  s.m2 = DenseMatrix(d2, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < d1; ++i) s.m1(i, j) = rng.normal();
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < d2; ++i) s.m2(i, j) = rng.normal();
  s.noise1 = rng.uniform(0.5, 1.5);
  s.noise2 = rng.uniform(0.5, 1.5);
  DenseMatrix l(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) l(i, j) = rng.normal();
  s.sigma_y = l * l.transpose() / static_cast<double>(k) + 0.5 * DenseMatrix::Identity(k, k);
  return s;
}

inline CovarianceBlocks gaussian_ci_population(const GaussianCISpec& spec) {
  spec.validate();
  CovarianceBlocks b;
  const DenseMatrix& sy = spec.sigma_y;
  b.sigma_x1x1 = spec.m1 * sy * spec.m1.transpose() +
                 spec.noise1 * spec.noise1 * DenseMatrix::Identity(spec.d1, spec.d1);
  b.sigma_x1x2 = spec.m1 * sy * spec.m2.transpose();
  b.sigma_x1y = spec.m1 * sy;
  b.sigma_x2x2 = spec.m2 * sy * spec.m2.transpose() +
                 spec.noise2 * spec.noise2 * DenseMatrix::Identity(spec.d2, spec.d2);
  b.sigma_x2y = spec.m2 * sy;
  b.sigma_yy = sy;
  return b;
}

/// Symmetric square root factor F with F F^T = m for a PSD m.
inline DenseMatrix psd_factor(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m);
  const DenseVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

inline LabeledDataset gaussian_ci_sample(const GaussianCISpec& spec, Eigen::Index n,
                                         std::uint64_t seed) {
  spec.validate();
  require(n >= 1, "gaussian_ci_sample: n must be >= 1");
  Rng rng(seed, 0x6A56);
  const DenseMatrix factor = psd_factor(spec.sigma_y);
  LabeledDataset out;
  out.seed = seed;
  out.x1 = DenseMatrix(n, spec.d1);
  DenseMatrix x2(n, spec.d2), y(n, spec.k);
  DenseVector z(spec.k);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < spec.k; ++j) z(j) = rng.normal();
    const DenseVector yr = factor * z;
    y.row(r) = yr.transpose();
    DenseVector x1r = spec.m1 * yr;
    for (Eigen::Index j = 0; j < spec.d1; ++j) x1r(j) += spec.noise1 * rng.normal();
    DenseVector x2r = spec.m2 * yr;
    for (Eigen::Index j = 0; j < spec.d2; ++j) x2r(j) += spec.noise2 * rng.normal();
    out.x1.row(r) = x1r.transpose();
    x2.row(r) = x2r.transpose();
  }
  out.x2 = std::move(x2);
  out.y = std::move(y);
  return out;
}

/// Random positive definite joint covariance G G^T / n + 0.1 I, split into blocks.
inline CovarianceBlocks random_covariance_blocks(Eigen::Index d1, Eigen::Index d2, Eigen::Index d3,
                                                 std::uint64_t seed) {
  require(d1 >= 1 && d2 >= 1 && d3 >= 1, "random_covariance_blocks: dims must be >= 1");
  Rng rng(seed, 0xC0B1);
  const Eigen::Index n = d1 + d2 + d3;
  DenseMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  DenseMatrix joint = g * g.transpose() / static_cast<double>(n) + 0.1 * DenseMatrix::Identity(n, n);
  joint = 0.5 * (joint + joint.transpose());
  return CovarianceBlocks::from_joint(joint, d1, d2, d3);
}

// ---------------------------------------------------------------------------
// Gaussian mixture with interpolation parameter alpha.

struct MixtureSpec {
  int k = 2;
  Eigen::Index d1 = 1, d2 = 1;
  DenseMatrix centers1;  // k x d1, one center per row
  DenseMatrix centers2;  // k x d2
  double alpha = 0.0;

  void validate() const {
    require(k >= 1 && d1 >= 1 && d2 >= 1, "MixtureSpec: dims must be >= 1");
    require_dims(centers1.rows() == k && centers1.cols() == d1, "MixtureSpec: centers1 shape");
    require_dims(centers2.rows() == k && centers2.cols() == d2, "MixtureSpec: centers2 shape");
    require(alpha >= 0.0 && alpha <= 1.0, "MixtureSpec: alpha must lie in [0, 1]");
  }
};

/// Centers drawn once, uniformly from [0, 10).
inline MixtureSpec make_mixture_spec(int k, Eigen::Index d1, Eigen::Index d2, double alpha,
                                     std::uint64_t seed) {
  Rng rng(seed, 0x313C);
  MixtureSpec s;
  s.k = k;
  s.d1 = d1;
  s.d2 = d2;
  s.alpha = alpha;
  s.centers1 = DenseMatrix(k, d1);
  s.centers2 = DenseMatrix(k, d2);
  for (int y = 0; y < k; ++y)
    for (Eigen::Index j = 0; j < d1; ++j) s.centers1(y, j) = rng.uniform(0.0, 10.0);
  for (int y = 0; y < k; ++y)
    for (Eigen::Index j = 0; j < d2; ++j) s.centers2(y, j) = rng.uniform(0.0, 10.0);
  s.validate();
  return s;
}

/// Two classes with centers +mu and -mu in each view (labels +1 -> class 0,
/// -1 -> class 1).
inline MixtureSpec make_symmetric_binary_spec(const DenseVector& mu1, const DenseVector& mu2) {
  MixtureSpec s;
  s.k = 2;
  s.d1 = mu1.size();
  s.d2 = mu2.size();
  s.centers1 = DenseMatrix(2, s.d1);
  s.centers1.row(0) = mu1.transpose();
  s.centers1.row(1) = -mu1.transpose();
  s.centers2 = DenseMatrix(2, s.d2);
  s.centers2.row(0) = mu2.transpose();
  s.centers2.row(1) = -mu2.transpose();
  s.validate();
  return s;
}

/// d2 x d1 map that zero-pads (d1 < d2) or keeps the leading d2 coordinates.
inline DenseMatrix pad_truncate_map(Eigen::Index d1, Eigen::Index d2) {
  DenseMatrix p = DenseMatrix::Zero(d2, d1);
  for (Eigen::Index i = 0; i < std::min(d1, d2); ++i) p(i, i) = 1.0;
  return p;
}

inline LabeledDataset mixture_sample(const MixtureSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  require(n >= 1, "mixture_sample: n must be >= 1");
  Rng rng(seed, 0x313D);
  const Eigen::Index shared = std::min(spec.d1, spec.d2);
  LabeledDataset out;
  out.seed = seed;
  out.x1 = DenseMatrix(n, spec.d1);
  DenseMatrix x2(n, spec.d2);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const int y = static_cast<int>(rng.index(static_cast<std::size_t>(spec.k)));
    out.labels[static_cast<std::size_t>(r)] = y;
    for (Eigen::Index j = 0; j < spec.d1; ++j) out.x1(r, j) = spec.centers1(y, j) + rng.normal();
    for (Eigen::Index j = 0; j < spec.d2; ++j) {
      const double hat = spec.centers2(y, j) + rng.normal();
      const double copied = j < shared ? out.x1(r, j) : 0.0;
      x2(r, j) = (1.0 - spec.alpha) * hat + spec.alpha * copied;
    }
  }
  out.x2 = std::move(x2);
  out.y = one_hot(out.labels, spec.k);
  return out;
}

/// Class posterior P(Y | X1 = x1) under the uniform prior.
inline DenseVector mixture_posterior(const MixtureSpec& spec, const DenseVector& x1) {
  require_dims(x1.size() == spec.d1, "mixture_posterior: x1 dimension");
  DenseVector logp(spec.k);
  for (int y = 0; y < spec.k; ++y)
    logp(y) = -0.5 * (x1 - spec.centers1.row(y).transpose()).squaredNorm();
  const double top = logp.maxCoeff();
  DenseVector w = (logp.array() - top).exp().matrix();
  return w / w.sum();
}

/// Row-wise posterior for a batch of points (n x k).
inline DenseMatrix mixture_posterior_batch(const MixtureSpec& spec, const DenseMatrix& x1) {
  require_dims(x1.cols() == spec.d1, "mixture_posterior_batch: x1 dimension");
  DenseMatrix logp = x1 * spec.centers1.transpose();  // n x k
  const DenseVector half_norms = 0.5 * spec.centers1.rowwise().squaredNorm();
  logp.rowwise() -= half_norms.transpose();
  DenseMatrix out(x1.rows(), spec.k);
  for (Eigen::Index r = 0; r < x1.rows(); ++r) {
    const double top = logp.row(r).maxCoeff();
    const Eigen::RowVectorXd w = (logp.row(r).array() - top).exp().matrix();
    out.row(r) = w / w.sum();
  }
  return out;
}

/// Exact E[X2 | X1] for any alpha: (1-alpha) * sum_y P(y|x1) mu2_y + alpha * pad(x1).
inline DenseMatrix mixture_conditional_mean_x2(const MixtureSpec& spec, const DenseMatrix& x1) {
  const DenseMatrix post = mixture_posterior_batch(spec, x1);
  return (1.0 - spec.alpha) * post * spec.centers2 +
         spec.alpha * x1 * pad_truncate_map(spec.d1, spec.d2).transpose();
}

/// Population moments of (X1, X2, one-hot Y) for a mixture spec.
struct MixturePopulation {
  DenseVector mean_x1, mean_x2, mean_y;
  CovarianceBlocks blocks;  // centered
};

inline MixturePopulation mixture_population(const MixtureSpec& spec) {
  spec.validate();
  const double inv_k = 1.0 / spec.k;
  const double a = spec.alpha;
  const DenseMatrix p = pad_truncate_map(spec.d1, spec.d2);
  MixturePopulation out;
  out.mean_x1 = spec.centers1.colwise().mean().transpose();
  const DenseVector mean_hat2 = spec.centers2.colwise().mean().transpose();
  out.mean_x2 = (1.0 - a) * mean_hat2 + a * p * out.mean_x1;
  out.mean_y = DenseVector::Constant(spec.k, inv_k);

  const DenseMatrix c1 = spec.centers1.rowwise() - out.mean_x1.transpose();  // k x d1
  const DenseMatrix c2 = spec.centers2.rowwise() - mean_hat2.transpose();    // k x d2
  const DenseMatrix cov11 = inv_k * c1.transpose() * c1;
  const DenseMatrix cov22 = inv_k * c2.transpose() * c2;
  const DenseMatrix cov12 = inv_k * c1.transpose() * c2;  // d1 x d2
  const DenseMatrix id1 = DenseMatrix::Identity(spec.d1, spec.d1);
  const DenseMatrix id2 = DenseMatrix::Identity(spec.d2, spec.d2);

  CovarianceBlocks& b = out.blocks;
  b.sigma_x1x1 = id1 + cov11;
  b.sigma_x1x2 = (1.0 - a) * cov12 + a * b.sigma_x1x1 * p.transpose();
  b.sigma_x2x2 = (1.0 - a) * (1.0 - a) * (id2 + cov22) + a * a * p * b.sigma_x1x1 * p.transpose() +
                 a * (1.0 - a) * (cov12.transpose() * p.transpose() + p * cov12);
  b.sigma_x1y = inv_k * c1.transpose();  // d1 x k
  b.sigma_x2y = (1.0 - a) * inv_k * c2.transpose() + a * p * b.sigma_x1y;
  b.sigma_yy = inv_k * DenseMatrix::Identity(spec.k, spec.k) -
               inv_k * inv_k * DenseMatrix::Ones(spec.k, spec.k);
  return out;
}

// ---------------------------------------------------------------------------
// Finite-support joint distributions.

/// p(x1, x2, y) stored x1-major with y fastest. ny == 1 means no label.
struct DiscreteJoint {
  std::size_t n1 = 0, n2 = 0, ny = 1;
  std::vector<double> p;

  DiscreteJoint() = default;
  DiscreteJoint(std::size_t a, std::size_t b, std::size_t c)
      : n1(a), n2(b), ny(c), p(a * b * c, 0.0) {}

  double& at(std::size_t i, std::size_t j, std::size_t y = 0) { return p[(i * n2 + j) * ny + y]; }
  double at(std::size_t i, std::size_t j, std::size_t y = 0) const {
    return p[(i * n2 + j) * ny + y];
  }

  /// p(x1, x2), n1 x n2.
  DenseMatrix p_x1x2() const {
    DenseMatrix m = DenseMatrix::Zero(n1, n2);
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t y = 0; y < ny; ++y) m(i, j) += at(i, j, y);
    return m;
  }
  DenseMatrix p_x1y() const {
    DenseMatrix m = DenseMatrix::Zero(n1, ny);
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t y = 0; y < ny; ++y) m(i, y) += at(i, j, y);
    return m;
  }
  DenseMatrix p_x2y() const {
    DenseMatrix m = DenseMatrix::Zero(n2, ny);
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t y = 0; y < ny; ++y) m(j, y) += at(i, j, y);
    return m;
  }
  DenseVector p_x1() const { return p_x1x2().rowwise().sum(); }
  DenseVector p_x2() const { return p_x1x2().colwise().sum().transpose(); }
  DenseVector p_y() const { return p_x1y().colwise().sum().transpose(); }

  double total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  /// Checks normalization and positivity of the X1 / X2 marginals.
  void validate(bool require_positive_y = false) const {
    require_dims(n1 >= 1 && n2 >= 1 && ny >= 1 && p.size() == n1 * n2 * ny,
                 "DiscreteJoint: tensor size does not match supports");
    for (double v : p) require(std::isfinite(v) && v >= 0.0, "DiscreteJoint: negative entry");
    require(std::abs(total() - 1.0) <= 1e-12, "DiscreteJoint: entries do not sum to 1");
    require((p_x1().array() > 0.0).all(), "DiscreteJoint: zero marginal p(x1)");
    require((p_x2().array() > 0.0).all(), "DiscreteJoint: zero marginal p(x2)");
    if (require_positive_y) require((p_y().array() > 0.0).all(), "DiscreteJoint: empty class");
  }

  void normalize() {
    const double s = total();
    require(s > 0.0, "DiscreteJoint::normalize: zero mass");
    for (double& v : p) v /= s;
  }
};

/// Random joint with all marginals positive. With ci_with_y the tensor
/// factorizes as p(y) p(x1|y) p(x2|y).
inline DiscreteJoint discrete_joint_random(std::array<std::size_t, 3> sizes, std::uint64_t seed,
                                           bool ci_with_y) {
  const auto [n1, n2, ny] = sizes;
  require(n1 >= 2 && n2 >= 2 && ny >= 1, "discrete_joint_random: supports too small");
  Rng rng(seed, 0xD15C);
  DiscreteJoint j(n1, n2, ny);
  if (ci_with_y) {
    DenseVector py(ny);
    DenseMatrix p1(n1, ny), p2(n2, ny);
    for (std::size_t y = 0; y < ny; ++y) py(y) = rng.uniform(0.2, 1.0);
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t i = 0; i < n1; ++i) p1(i, y) = rng.uniform(0.02, 1.0);
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t i = 0; i < n2; ++i) p2(i, y) = rng.uniform(0.02, 1.0);
    py /= py.sum();
    for (std::size_t y = 0; y < ny; ++y) {
      p1.col(y) /= p1.col(y).sum();
      p2.col(y) /= p2.col(y).sum();
    }
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t k = 0; k < n2; ++k)
        for (std::size_t y = 0; y < ny; ++y) j.at(i, k, y) = py(y) * p1(i, y) * p2(k, y);
  } else {
    for (double& v : j.p) v = rng.uniform(0.01, 1.0);
  }
  j.normalize();
  return j;
}

/// (1 - delta) * a + delta * b on identical supports.
inline DiscreteJoint mix_joints(const DiscreteJoint& a, const DiscreteJoint& b, double delta) {
  require_dims(a.n1 == b.n1 && a.n2 == b.n2 && a.ny == b.ny, "mix_joints: supports differ");
  require(delta >= 0.0 && delta <= 1.0, "mix_joints: delta outside [0, 1]");
  DiscreteJoint out = a;
  for (std::size_t i = 0; i < out.p.size(); ++i) out.p[i] = (1.0 - delta) * a.p[i] + delta * b.p[i];
  return out;
}

/// p(x1) p(x2) p(y): all three independent.
inline DiscreteJoint product_joint(const DenseVector& p1, const DenseVector& p2,
                                   const DenseVector& py = DenseVector::Ones(1)) {
  DiscreteJoint j(p1.size(), p2.size(), py.size());
  for (Eigen::Index i = 0; i < p1.size(); ++i)
    for (Eigen::Index k = 0; k < p2.size(); ++k)
      for (Eigen::Index y = 0; y < py.size(); ++y) j.at(i, k, y) = p1(i) * p2(k) * py(y);
  j.normalize();
  return j;
}

/// x1 = x2 uniform on m symbols, no label.
inline DiscreteJoint identity_joint(std::size_t m) {
  DiscreteJoint j(m, m, 1);
  for (std::size_t i = 0; i < m; ++i) j.at(i, i) = 1.0 / static_cast<double>(m);
  return j;
}

}  // namespace sslci
