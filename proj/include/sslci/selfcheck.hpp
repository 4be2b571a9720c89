#pragma once

// Small-scale invariant suite covering every module; meant to finish in a
// few seconds.

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "sslci/ace.hpp"
#include "sslci/ci_analysis.hpp"
#include "sslci/generators.hpp"
#include "sslci/harness.hpp"
#include "sslci/matrix_stats.hpp"
#include "sslci/random.hpp"
#include "sslci/ssl_core.hpp"
#include "sslci/topic_model.hpp"

namespace sslci {

struct SelfcheckOptions {
  /// Tolerance handed to every pseudo-inverse in the suite. Changing it is a
  /// fault-injection hook: a corrupted value must make the suite fail.
  double pinv_rank_tol = kDefaultRankTol;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Matrix with prescribed singular values: U diag(s) V^T from random
/// orthogonal factors.
inline DenseMatrix with_singular_values(Eigen::Index rows, Eigen::Index cols, const DenseVector& s,
                                        std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix a(rows, rows), b(cols, cols);
  for (Eigen::Index j = 0; j < rows; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = rng.normal();
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < cols; ++i) b(i, j) = rng.normal();
  const DenseMatrix u = orthonormalize(a), v = orthonormalize(b);
  DenseMatrix d = DenseMatrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < s.size(); ++i) d(i, i) = s(i);
  return u * d * v.transpose();
}

}  // namespace detail

inline std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& opt = {}) {
  std::vector<CheckResult> results;
  const auto check = [&](const std::string& name, const std::function<std::string(bool&)>& body) {
    CheckResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      bool ok = true;
      r.detail = body(ok);
      r.passed = ok;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(r);
  };

  check("philox known answer", [](bool& ok) {
    const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    ok = out == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u};
    return std::string(ok ? "matches reference block" : "mismatch");
  });

  check("pseudo-inverse Penrose identities", [&](bool& ok) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      DenseVector sv(4);
      sv << 1.0, 0.3, 0.05, 1e-3;
      const DenseMatrix a = detail::with_singular_values(6, 4, sv, 100 + s);
      const DenseMatrix p = pinv(a, opt.pinv_rank_tol);
      worst = std::max({worst, (a * p * a - a).norm(), (p * a * p - p).norm() / p.norm(),
                        (a * p - (a * p).transpose()).norm(), (p * a - (p * a).transpose()).norm()});
    }
    ok = worst <= 1e-10;
    return "max residual " + detail::sci(worst);
  });

  check("partial covariance equals Schur complement", [](bool& ok) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const CovarianceBlocks b = random_covariance_blocks(3, 2, 2, 200 + s);
      const PartialCov pc = partial_cov(b.sigma_x1x2, b.sigma_x1y, b.sigma_yy, b.sigma_x2y.transpose());
      // Conditional covariance of (X1, X2) given Y via the inverse of the joint.
      const DenseMatrix prec = b.joint().inverse();
      const DenseMatrix cond = prec.topLeftCorner(5, 5).inverse();
      worst = std::max(worst, (pc.value - cond.topRightCorner(3, 2)).cwiseAbs().maxCoeff());
    }
    ok = worst <= 1e-10;
    return "max deviation " + detail::sci(worst);
  });

  check("precision vs covariance conditional maps", [](bool& ok) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const CovarianceBlocks b = random_covariance_blocks(3, 4, 2, 300 + s);
      const ConditionalMaps p = gaussian_conditionals_from_precision(b);
      const ConditionalMaps c = gaussian_conditionals_from_covariance(b);
      worst = std::max({worst, (p.x1_given_x2 - c.x1_given_x2).cwiseAbs().maxCoeff(),
                        (p.x2_given_x1 - c.x2_given_x1).cwiseAbs().maxCoeff(),
                        (p.y_given_x - c.y_given_x).cwiseAbs().maxCoeff(),
                        (p.y_given_x1 - c.y_given_x1).cwiseAbs().maxCoeff()});
    }
    ok = worst <= 1e-8;
    return "max deviation " + detail::sci(worst);
  });

  check("exact CI: optimal predictor factors through psi*", [](bool& ok) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const CovarianceBlocks b = gaussian_ci_population(random_gaussian_ci_spec(6, 5, 3, 400 + s));
      const DenseMatrix gap = closed_form_f_gaussian(b) - gaussian_optimal_head(b).transpose() * closed_form_psi_gaussian(b).b;
      worst = std::max(worst, gap.norm());
    }
    ok = worst <= 1e-8;
    return "max Frobenius gap " + detail::sci(worst);
  });

  check("mixture posterior identity", [](bool& ok) {
    Rng rng(500);
    DenseVector mu1(4), mu2(3);
    for (Eigen::Index i = 0; i < 4; ++i) mu1(i) = rng.normal();
    for (Eigen::Index i = 0; i < 3; ++i) mu2(i) = rng.normal();
    const MixtureSpec spec = make_symmetric_binary_spec(mu1, mu2);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      DenseVector x(4);
      for (Eigen::Index i = 0; i < 4; ++i) x(i) = 2.0 * rng.normal();
      const DenseVector post = mixture_posterior(spec, x);
      const double lhs = post(0) - post(1);
      const double rhs = mu2.dot(closed_form_psi_mixture(spec, x)) / mu2.squaredNorm();
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    ok = worst <= 1e-10;
    return "max deviation " + detail::sci(worst);
  });

  check("operator T spectrum and ACE", [](bool& ok) {
    double top = 0.0, ace_gap = 0.0, ident = 0.0, ci_tail = 0.0, ci_tilde = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const DiscreteJoint j = discrete_joint_random({5 + s % 4, 4 + s % 5, 2}, 600 + s, s % 2 == 0);
      const DenseVector sv = weighted_singular_values(j);
      top = std::max(top, std::abs(sv(0) - 1.0));
      const std::size_t k = std::min<std::size_t>(2, std::min(j.n1, j.n2) - 1);
      const AceSolution sol = ace_fit(j, k);
      ace_gap = std::max(ace_gap, (sol.sigmas - sv.segment(1, static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff());
      ident = std::max(ident, ace_objective_identity_check(sol, j).identity_gap);
      if (s % 2 == 0) {
        ci_tail = std::max(ci_tail, sv(2));
        ci_tilde = std::max(ci_tilde, eps_ci_tilde(j));
      }
    }
    ok = top <= 1e-10 && ace_gap <= 1e-8 && ident <= 1e-10 && ci_tail <= 1e-8 && ci_tilde <= 1e-10;
    return "top " + detail::sci(top) + ", ace " + detail::sci(ace_gap) + ", identity " + detail::sci(ident) +
           ", CI tail " + detail::sci(ci_tail) + ", CI tilde " + detail::sci(ci_tilde);
  });

  check("approximation-error bound", [](bool& ok) {
    int violations = 0;
    double exact = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const DiscreteJoint j = mix_joints(discrete_joint_random({5, 5, 2}, 700 + s, true),
                                         discrete_joint_random({5, 5, 2}, 800 + s, false), 0.2);
      const AceSolution sol = ace_fit(j, 2);
      for (GChoice g : {GChoice::pinv_of_a, GChoice::bayes_indicator})
        if (!apx_error_bound_eval(sol, j, g).holds) ++violations;
      const DiscreteJoint ci = discrete_joint_random({5, 5, 3}, 900 + s, true);
      exact = std::max(exact, apx_error_bound_eval(ace_fit(ci, 2), ci, GChoice::pinv_of_a).actual);
    }
    ok = violations == 0 && exact <= 1e-8;
    return std::to_string(violations) + " violations, exact-CI actual " + detail::sci(exact);
  });

  check("Bayes gap bound", [](bool& ok) {
    int violations = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      if (!bayes_gap_check(discrete_joint_random({4, 3, 3}, 1000 + s, false)).holds) ++violations;
    }
    ok = violations == 0;
    return std::to_string(violations) + " violations";
  });

  check("topic model latent label", [&](bool& ok) {
    int failures = 0;
    double eps = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const TopicModelSpec spec = random_topic_spec(4, 2, 4, 3, 1100 + s);
      const TopicReport rep = verify_topic_model(spec);
      eps = std::max(eps, rep.eps_ci);
      if (!rep.all_pass()) ++failures;
      // Same 1/beta through the caller's tolerance.
      const DenseMatrix g = spec.topic_covariance();
      if (beta_inv(spec.w.transpose() * g, spec.a * g, opt.pinv_rank_tol).beta_inv > rep.bound * (1 + 1e-9) + 1e-12)
        ++failures;
    }
    ok = failures == 0;
    return std::to_string(failures) + " failures, max eps " + detail::sci(eps);
  });

  check("harness determinism and summary", [](bool& ok) {
    harness::ExperimentConfig cfg;
    cfg.experiment = harness::Experiment::mse_vs_k;
    cfg.d1 = 6;
    cfg.d2 = 5;
    cfg.n1 = 200;
    cfg.n2 = 60;
    cfg.eval_size = 200;
    cfg.trials = 3;
    cfg.k_grid = {2, 3};
    cfg.threads = 2;
    const auto a = harness::run_experiment(cfg);
    cfg.threads = 1;
    const auto b = harness::run_experiment(cfg);
    const bool same = harness::results_csv(a) == harness::results_csv(b);
    const bool count = a.size() == cfg.grid().size() * cfg.trials * harness::methods_for(cfg).size();
    double se_gap = 0.0;
    for (const auto& s : harness::summarize(a)) {
      std::vector<double> v;
      for (const auto& r : a)
        if (r.method == s.method && r.grid_value == s.grid_value) v.push_back(r.mse);
      double m = 0.0, ss = 0.0;
      for (double x : v) m += x / static_cast<double>(v.size());
      for (double x : v) ss += (x - m) * (x - m);
      se_gap = std::max(se_gap, std::abs(std::sqrt(ss / (v.size() - 1.0) / v.size()) - s.stderr_));
    }
    ok = same && count && se_gap <= 1e-12;
    return std::string(same ? "identical CSV" : "CSV differs") + ", rows " + std::to_string(a.size()) +
           ", stderr gap " + detail::sci(se_gap);
  });

  return results;
}

}  // namespace sslci
