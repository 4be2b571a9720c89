#pragma once

// Topic-model documents: mu ~ tau over the simplex, N words drawn iid from
// A mu, split into two halves, each encoded as a normalized bag of words.
// With finitely many atoms in tau every quantity below is an exact sum over
// the multisets of words a half can contain.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sslci/ci_analysis.hpp"
#include "sslci/generators.hpp"
#include "sslci/matrix_stats.hpp"
#include "sslci/random.hpp"

namespace sslci {

inline constexpr std::size_t kTopicMaxVocab = 8;
inline constexpr std::size_t kTopicMaxDocLen = 8;
inline constexpr std::size_t kTopicMaxTopics = 3;

struct TopicModelSpec {
  DenseMatrix a;             // V x k, columns are word distributions
  DenseVector tau_weights;   // m
  DenseMatrix tau_atoms;     // m x k, rows on the simplex
  /// When set, mu ~ Dirichlet(alpha) instead of the finite atoms. Sampling only.
  std::optional<DenseVector> dirichlet_alpha;
  std::size_t doc_len = 2;
  DenseVector w;             // k
  double noise_sigma = 0.0;

  std::size_t vocab() const { return static_cast<std::size_t>(a.rows()); }
  std::size_t topics() const { return static_cast<std::size_t>(a.cols()); }
  bool finite_tau() const { return !dirichlet_alpha.has_value(); }

  /// Gamma = E[mu mu^T].
  DenseMatrix topic_covariance() const {
    require(finite_tau(), "topic_covariance: needs finite tau");
    return tau_atoms.transpose() * tau_weights.asDiagonal() * tau_atoms;
  }

  void validate() const {
    constexpr double tol = 1e-9;
    require_dims(a.rows() >= 1 && a.cols() >= 1, "TopicModelSpec: empty topic matrix");
    require((a.array() >= 0.0).all() && a.allFinite(), "TopicModelSpec: negative word probability");
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      require(std::abs(a.col(j).sum() - 1.0) <= tol, "TopicModelSpec: column of a does not sum to 1");
    }
    require_dims(w.size() == a.cols(), "TopicModelSpec: w must have one entry per topic");
    require(w.allFinite(), "TopicModelSpec: non-finite w");
    require(doc_len >= 2 && doc_len % 2 == 0, "TopicModelSpec: doc_len must be even and positive");
    require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "TopicModelSpec: noise_sigma < 0");
    if (dirichlet_alpha) {
      require_dims(dirichlet_alpha->size() == a.cols(), "TopicModelSpec: Dirichlet dimension");
      require((dirichlet_alpha->array() > 0.0).all(), "TopicModelSpec: Dirichlet alpha must be > 0");
      return;
    }
    require_dims(tau_atoms.cols() == a.cols() && tau_atoms.rows() == tau_weights.size() &&
                     tau_weights.size() >= 1,
                 "TopicModelSpec: tau atoms/weights shape");
    require((tau_weights.array() >= 0.0).all() && std::abs(tau_weights.sum() - 1.0) <= tol,
            "TopicModelSpec: tau weights must be a distribution");
    for (Eigen::Index r = 0; r < tau_atoms.rows(); ++r) {
      require((tau_atoms.row(r).array() >= 0.0).all() &&
                  std::abs(tau_atoms.row(r).sum() - 1.0) <= tol,
              "TopicModelSpec: tau atom off the simplex");
    }
  }
};

namespace detail {

/// log prod_v q_v^{c_v}; -inf when a used word has zero probability.
inline double log_word_likelihood(const DenseVector& q, const std::vector<int>& counts) {
  double acc = 0.0;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] == 0) continue;
    if (q(static_cast<Eigen::Index>(v)) <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += counts[v] * std::log(q(static_cast<Eigen::Index>(v)));
  }
  return acc;
}

/// Normalizes exp(logw) in place; returns false if every weight is zero.
inline bool normalize_log_weights(std::vector<double>& logw) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : logw) top = std::max(top, v);
  if (!std::isfinite(top)) return false;
  double total = 0.0;
  for (double& v : logw) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logw) v /= total;
  return true;
}

inline DenseVector sample_dirichlet(Rng& rng, const DenseVector& alpha) {
  DenseVector out(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) out(i) = rng.gamma(alpha(i));
  return out / out.sum();
}

/// E[mu | counts of a whole document] for finite tau.
inline DenseVector atom_posterior_mean(const TopicModelSpec& spec, const std::vector<int>& counts) {
  const auto m = static_cast<std::size_t>(spec.tau_weights.size());
  std::vector<double> logw(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double prior = spec.tau_weights(static_cast<Eigen::Index>(j));
    logw[j] = prior > 0.0 ? std::log(prior) +
                                log_word_likelihood(spec.a * spec.tau_atoms.row(static_cast<Eigen::Index>(j)).transpose(), counts)
                          : -std::numeric_limits<double>::infinity();
  }
  require(normalize_log_weights(logw), "topic posterior: document has zero probability");
  DenseVector mean = DenseVector::Zero(spec.a.cols());
  for (std::size_t j = 0; j < m; ++j) mean += logw[j] * spec.tau_atoms.row(static_cast<Eigen::Index>(j)).transpose();
  return mean;
}

}  // namespace detail

/// Self-normalized importance samples used for the Dirichlet posterior mean.
inline constexpr std::size_t kTopicImportanceSamples = 512;

/// n documents: x1, x2 are the two normalized half-document word counts,
/// y = w^T E[mu | x1, x2] + noise, labels hold the tau atom index (-1 for
/// Dirichlet tau).
inline LabeledDataset sample_documents(const TopicModelSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  require(n >= 1, "sample_documents: n must be >= 1");
  const auto v_size = static_cast<Eigen::Index>(spec.vocab());
  const auto k = static_cast<Eigen::Index>(spec.topics());
  const auto half = static_cast<int>(spec.doc_len / 2);
  const double scale = 2.0 / static_cast<double>(spec.doc_len);

  LabeledDataset out;
  out.seed = seed;
  out.x1 = DenseMatrix::Zero(n, v_size);
  out.x2 = DenseMatrix::Zero(n, v_size);
  out.y = DenseMatrix::Zero(n, 1);
  out.labels.assign(static_cast<std::size_t>(n), -1);

  for (Eigen::Index r = 0; r < n; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    DenseVector mu;
    if (spec.finite_tau()) {
      const std::vector<double> wts(spec.tau_weights.data(), spec.tau_weights.data() + spec.tau_weights.size());
      const std::size_t atom = rng.categorical(wts);
      out.labels[static_cast<std::size_t>(r)] = static_cast<int>(atom);
      mu = spec.tau_atoms.row(static_cast<Eigen::Index>(atom)).transpose();
    } else {
      mu = detail::sample_dirichlet(rng, *spec.dirichlet_alpha);
    }
    std::vector<int> c1(static_cast<std::size_t>(v_size), 0), c2 = c1;
    const std::vector<double> topic_w(mu.data(), mu.data() + k);
    for (std::size_t i = 0; i < spec.doc_len; ++i) {
      const std::size_t topic = rng.categorical(topic_w);
      const auto col = spec.a.col(static_cast<Eigen::Index>(topic));
      const std::vector<double> word_w(col.data(), col.data() + v_size);
      const std::size_t word = rng.categorical(word_w);
      (static_cast<int>(i) < half ? c1 : c2)[word] += 1;
    }
    std::vector<int> total(c1.size());
    for (std::size_t v = 0; v < c1.size(); ++v) {
      out.x1(r, static_cast<Eigen::Index>(v)) = scale * c1[v];
      (*out.x2)(r, static_cast<Eigen::Index>(v)) = scale * c2[v];
      total[v] = c1[v] + c2[v];
    }

    DenseVector post_mean;
    if (spec.finite_tau()) {
      post_mean = detail::atom_posterior_mean(spec, total);
    } else {
      std::vector<DenseVector> draws(kTopicImportanceSamples);
      std::vector<double> logw(kTopicImportanceSamples);
      for (std::size_t s = 0; s < kTopicImportanceSamples; ++s) {
        draws[s] = detail::sample_dirichlet(rng, *spec.dirichlet_alpha);
        logw[s] = detail::log_word_likelihood(spec.a * draws[s], total);
      }
      if (!detail::normalize_log_weights(logw)) std::fill(logw.begin(), logw.end(), 1.0 / kTopicImportanceSamples);
      post_mean = DenseVector::Zero(k);
      for (std::size_t s = 0; s < kTopicImportanceSamples; ++s) post_mean += logw[s] * draws[s];
    }
    out.y->operator()(r, 0) = spec.w.dot(post_mean) + spec.noise_sigma * rng.normal();
  }
  return out;
}

/// Random finite-tau spec: uniform-then-normalized topic columns, m random
/// simplex atoms with random weights, standard normal w.
inline TopicModelSpec random_topic_spec(std::size_t vocab, std::size_t topics, std::size_t doc_len,
                                        std::size_t atoms, std::uint64_t seed) {
  require(vocab >= 1 && topics >= 1 && atoms >= 1, "random_topic_spec: sizes must be >= 1");
  Rng rng(seed, 0x70B1C);
  const auto v = static_cast<Eigen::Index>(vocab), k = static_cast<Eigen::Index>(topics),
             m = static_cast<Eigen::Index>(atoms);
  TopicModelSpec spec;
  spec.doc_len = doc_len;
  spec.a.resize(v, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < v; ++i) spec.a(i, j) = rng.uniform(0.05, 1.0);
    spec.a.col(j) /= spec.a.col(j).sum();
  }
  const DenseVector ones = DenseVector::Ones(k);
  spec.tau_atoms.resize(m, k);
  for (Eigen::Index r = 0; r < m; ++r) spec.tau_atoms.row(r) = detail::sample_dirichlet(rng, ones).transpose();
  spec.tau_weights.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) spec.tau_weights(r) = rng.uniform(0.1, 1.0);
  spec.tau_weights /= spec.tau_weights.sum();
  spec.w.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) spec.w(j) = rng.normal();
  spec.validate();
  return spec;
}

/// Every multiset of `half` words over a vocabulary of size v, as count vectors.
inline std::vector<std::vector<int>> enumerate_count_vectors(std::size_t v, int half) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(v, 0);
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == v) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int c = left; c >= 0; --c) {
      cur[pos] = c;
      self(self, pos + 1, left - c);
    }
  };
  rec(rec, 0, half);
  return out;
}

/// Probability of a specific count vector under iid draws from q.
inline double multinomial_pmf(const std::vector<int>& counts, const DenseVector& q) {
  int total = 0;
  double log_coef = 0.0;
  for (int c : counts) {
    total += c;
    log_coef -= std::lgamma(c + 1.0);
  }
  log_coef += std::lgamma(total + 1.0);
  const double ll = detail::log_word_likelihood(q, counts);
  return std::isfinite(ll) ? std::exp(log_coef + ll) : 0.0;
}

inline void check_topic_scale(const TopicModelSpec& spec) {
  if (spec.vocab() > kTopicMaxVocab || spec.doc_len > kTopicMaxDocLen || spec.topics() > kTopicMaxTopics) {
    throw ScaleLimitError("topic model exceeds exact-enumeration limits (V <= " +
                          std::to_string(kTopicMaxVocab) + ", N <= " + std::to_string(kTopicMaxDocLen) +
                          ", k <= " + std::to_string(kTopicMaxTopics) + ")");
  }
}

/// Exact description of the latent Ybar with P(Ybar = i | X1) = E[mu | X1](i)
/// and X2 | Ybar = i distributed as a half document under mu = e_i.
struct BarYModel {
  std::vector<std::vector<int>> halves;  // H count vectors
  DenseMatrix bag;                       // H x V normalized bag-of-words rows
  DenseVector p_x1;                      // H
  DenseMatrix atom_posterior;            // H x m, P(atom | X1)
  DenseMatrix bar_y_given_x1;            // H x k, P(Ybar = i | X1) = E[mu | X1](i)
  DenseMatrix x2_given_bar_y;            // k x H, P(X2 | mu = e_i)
  DenseMatrix half_given_atom;           // m x H, P(half | mu = atom_j)
};

inline BarYModel build_bar_y(const TopicModelSpec& spec) {
  spec.validate();
  if (!spec.finite_tau()) throw DomainError("build_bar_y: Dirichlet tau is unsupported (needs finite atoms)");
  check_topic_scale(spec);
  const auto v_size = spec.vocab();
  const auto k = static_cast<Eigen::Index>(spec.topics());
  const auto m = spec.tau_weights.size();
  BarYModel out;
  out.halves = enumerate_count_vectors(v_size, static_cast<int>(spec.doc_len / 2));
  const auto h = static_cast<Eigen::Index>(out.halves.size());
  const double scale = 2.0 / static_cast<double>(spec.doc_len);

  out.bag.resize(h, static_cast<Eigen::Index>(v_size));
  out.half_given_atom.resize(m, h);
  out.x2_given_bar_y.resize(k, h);
  for (Eigen::Index c = 0; c < h; ++c) {
    const auto& counts = out.halves[static_cast<std::size_t>(c)];
    for (std::size_t v = 0; v < v_size; ++v) out.bag(c, static_cast<Eigen::Index>(v)) = scale * counts[v];
    for (Eigen::Index j = 0; j < m; ++j)
      out.half_given_atom(j, c) = multinomial_pmf(counts, spec.a * spec.tau_atoms.row(j).transpose());
    for (Eigen::Index i = 0; i < k; ++i) out.x2_given_bar_y(i, c) = multinomial_pmf(counts, spec.a.col(i));
  }
  const DenseMatrix joint_atom = out.half_given_atom.transpose() * spec.tau_weights.asDiagonal();  // H x m
  out.p_x1 = joint_atom.rowwise().sum();
  out.atom_posterior = DenseMatrix::Zero(h, m);
  for (Eigen::Index c = 0; c < h; ++c) {
    if (out.p_x1(c) > 0.0) out.atom_posterior.row(c) = joint_atom.row(c) / out.p_x1(c);
  }
  out.bar_y_given_x1 = out.atom_posterior * spec.tau_atoms;
  return out;
}

struct TopicReport {
  std::size_t bar_y_size = 0;
  double eps_ci = 0.0;            // sqrt E || E[X2|X1] - E[E[X2|Ybar]|X1] ||^2
  double linearity_gap = 0.0;     // max_x1 | E[Y|X1] - w^T E[mu|X1] |
  double beta_inv = 0.0;          // || Sigma_{Y phi} Sigma_{X2 phi}^+ ||_2
  double beta_inv_gamma_form = 0.0;  // || w^T Gamma (A Gamma)^+ ||_2
  double kappa = 0.0;
  double lambda_min_a = 0.0;      // smallest singular value of A
  double w_norm = 0.0;
  double bound = 0.0;             // kappa ||w|| / lambda_min(A)
  bool size_ok = false;
  bool eps_ci_ok = false;
  bool linearity_ok = false;
  bool beta_ok = false;

  bool all_pass() const { return size_ok && eps_ci_ok && linearity_ok && beta_ok; }
};

inline constexpr double kTopicEpsCiTol = 1e-10;

/// Exact checks over every pair of half documents.
inline TopicReport verify_topic_model(const TopicModelSpec& spec) {
  const BarYModel model = build_bar_y(spec);
  const auto k = static_cast<Eigen::Index>(spec.topics());
  const auto m = spec.tau_weights.size();
  const auto h = static_cast<Eigen::Index>(model.halves.size());
  TopicReport rep;
  rep.bar_y_size = static_cast<std::size_t>(model.bar_y_given_x1.cols());
  rep.size_ok = rep.bar_y_size == spec.topics();

  // E[X2 | Ybar = i] by summing over every half document.
  const DenseMatrix x2_mean_given_bar_y = model.x2_given_bar_y * model.bag;  // k x V

  DenseMatrix sigma_y_phi = DenseMatrix::Zero(1, k);
  DenseMatrix sigma_x2_phi = DenseMatrix::Zero(static_cast<Eigen::Index>(spec.vocab()), k);
  double eps_sq = 0.0;
  for (Eigen::Index c1 = 0; c1 < h; ++c1) {
    const double p1 = model.p_x1(c1);
    if (p1 <= 0.0) continue;
    const DenseVector post_mean = model.bar_y_given_x1.row(c1).transpose();
    // P(x2 | x1) and E[mu | x1, x2] from the atom posterior.
    DenseVector e_x2 = DenseVector::Zero(spec.vocab());
    double e_y = 0.0;
    for (Eigen::Index c2 = 0; c2 < h; ++c2) {
      double p21 = 0.0;
      DenseVector mu_sum = DenseVector::Zero(k);
      for (Eigen::Index j = 0; j < m; ++j) {
        const double wj = model.atom_posterior(c1, j) * model.half_given_atom(j, c2);
        p21 += wj;
        mu_sum += wj * spec.tau_atoms.row(j).transpose();
      }
      if (p21 <= 0.0) continue;
      const double y_full = spec.w.dot(mu_sum / p21);
      e_x2 += p21 * model.bag.row(c2).transpose();
      e_y += p21 * y_full;
      sigma_y_phi += (p1 * p21 * y_full) * post_mean.transpose();
      sigma_x2_phi += (p1 * p21) * model.bag.row(c2).transpose() * post_mean.transpose();
    }
    const DenseVector via_bar_y = x2_mean_given_bar_y.transpose() * post_mean;
    eps_sq += p1 * (e_x2 - via_bar_y).squaredNorm();
    rep.linearity_gap = std::max(rep.linearity_gap, std::abs(e_y - spec.w.dot(post_mean)));
  }
  rep.eps_ci = std::sqrt(eps_sq);
  rep.eps_ci_ok = rep.eps_ci <= kTopicEpsCiTol;
  rep.linearity_ok = rep.linearity_gap <= 1e-12 * std::max(1.0, spec.w.cwiseAbs().sum());

  rep.beta_inv = beta_inv(sigma_y_phi, sigma_x2_phi).beta_inv;
  const DenseMatrix gamma = spec.topic_covariance();
  rep.beta_inv_gamma_form = spectral_norm(spec.w.transpose() * gamma * pinv(spec.a * gamma));
  const DenseVector lam = gamma.selfadjointView<Eigen::Lower>().eigenvalues();
  const double lam_max = lam.maxCoeff(), lam_min = lam.minCoeff();
  rep.kappa = lam_min > kDefaultRankTol * lam_max ? lam_max / lam_min : std::numeric_limits<double>::infinity();
  const DenseVector sa = singular_values(spec.a);
  rep.lambda_min_a = sa(sa.size() - 1);
  rep.w_norm = spec.w.norm();
  if (rep.w_norm == 0.0) {
    rep.bound = 0.0;
  } else if (rep.lambda_min_a <= 0.0) {
    rep.bound = std::numeric_limits<double>::infinity();
  } else {
    rep.bound = rep.kappa * rep.w_norm / rep.lambda_min_a;
  }
  rep.beta_ok = rep.beta_inv <= rep.bound * (1.0 + 1e-9) + 1e-12;
  return rep;
}

}  // namespace sslci
