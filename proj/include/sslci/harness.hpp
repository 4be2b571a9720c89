#pragma once

// Seeded experiment runner: per-(grid point, trial) simulations, CSV and SVG
// output.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sslci/ace.hpp"
#include "sslci/ci_analysis.hpp"
#include "sslci/generators.hpp"
#include "sslci/random.hpp"
#include "sslci/ssl_core.hpp"
#include "sslci/topic_model.hpp"

namespace sslci::harness {

/// Malformed configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Experiment { mse_vs_k, mse_vs_eps, mse_vs_n2, exact_ci_gaussian, ace_demo, topic_check, ci_report };

inline const std::vector<std::pair<std::string, Experiment>>& experiment_names() {
  static const std::vector<std::pair<std::string, Experiment>> names = {
      {"mse-vs-k", Experiment::mse_vs_k},
      {"mse-vs-eps", Experiment::mse_vs_eps},
      {"mse-vs-n2", Experiment::mse_vs_n2},
      {"exact-ci-gaussian", Experiment::exact_ci_gaussian},
      {"ace-demo", Experiment::ace_demo},
      {"topic-check", Experiment::topic_check},
      {"ci-report", Experiment::ci_report},
  };
  return names;
}

inline std::string to_string(Experiment e) {
  for (const auto& [name, value] : experiment_names())
    if (value == e) return name;
  return "unknown";
}

inline Experiment parse_experiment(const std::string& s) {
  for (const auto& [name, value] : experiment_names())
    if (name == s) return value;
  throw ConfigError("unknown experiment '" + s + "'");
}

struct ExperimentConfig {
  Experiment experiment = Experiment::mse_vs_k;
  Eigen::Index d1 = 50, d2 = 40;
  Eigen::Index n1 = 4000, n2 = 1000;
  int k = 2;             // class count when k is not the grid variable
  double alpha = 0.0;    // interpolation when alpha is not the grid variable
  std::vector<double> k_grid, alpha_grid, n2_grid;  // empty: experiment default
  std::size_t trials = 30;
  std::uint64_t seed = 2020;
  std::optional<double> ridge;        // nullopt: default_ridge of the design
  std::optional<Eigen::Index> pca;    // rank of the downstream PCA step
  std::string output_dir = "sslci_out";
  Eigen::Index eval_size = 10000;
  bool kernel_baseline = false;
  double kernel_ridge = 1e-3;
  unsigned threads = 0;  // 0: hardware concurrency

  /// Name of the swept variable.
  std::string grid_name() const {
    switch (experiment) {
      case Experiment::mse_vs_eps:
      case Experiment::ci_report: return "alpha";
      case Experiment::mse_vs_n2: return "n2";
      default: return "k";
    }
  }

  std::vector<double> grid() const {
    switch (experiment) {
      case Experiment::mse_vs_k:
      case Experiment::exact_ci_gaussian:
        return k_grid.empty() ? std::vector<double>{2, 4, 8, 16} : k_grid;
      case Experiment::mse_vs_eps:
      case Experiment::ci_report:
        return alpha_grid.empty() ? std::vector<double>{0, 0.25, 0.5, 0.75, 1} : alpha_grid;
      case Experiment::mse_vs_n2:
        return n2_grid.empty() ? std::vector<double>{250, 500, 1000, 2000} : n2_grid;
      case Experiment::ace_demo:
      case Experiment::topic_check:
        return k_grid.empty() ? std::vector<double>{1, 2, 3} : k_grid;
    }
    return {};
  }

  void validate() const {
    const auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (trials < 1) fail("trials must be >= 1");
    if (d1 < 1 || d2 < 1) fail("d1 and d2 must be >= 1");
    if (n1 < 2 || n2 < 2) fail("n1 and n2 must be >= 2");
    if (eval_size < 1) fail("eval_size must be >= 1");
    if (k < 1) fail("k must be >= 1");
    if (alpha < 0.0 || alpha > 1.0) fail("alpha must lie in [0, 1]");
    if (ridge && !(*ridge >= 0.0)) fail("ridge must be >= 0");
    if (!(kernel_ridge > 0.0)) fail("kernel_ridge must be > 0");
    const std::vector<double> g = grid();
    if (g.empty()) fail("grid must be nonempty");
    for (double v : g) {
      if (!std::isfinite(v)) fail("grid values must be finite");
      if (grid_name() == "alpha" && (v < 0.0 || v > 1.0)) fail("alpha grid values must lie in [0, 1]");
      if (grid_name() != "alpha" && (v < 1.0 || v != std::floor(v))) fail(grid_name() + " grid values must be positive integers");
    }
    if (experiment == Experiment::topic_check)
      for (double v : g)
        if (v > static_cast<double>(kTopicMaxTopics)) fail("topic-check k exceeds enumeration limit");
    if (experiment == Experiment::ace_demo)
      for (double v : g)
        if (v > 7) fail("ace-demo k must be <= 7");
    if (pca && *pca < 1) fail("pca rank must be >= 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("invalid value '" + v + "' for key '" + key + "'");
  return out;
}

inline std::vector<double> parse_grid(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, item));
  if (out.empty()) throw ConfigError("grid '" + key + "' is empty");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
}

}  // namespace detail

/// Sets one key; unknown keys raise ConfigError.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_number;
  const std::string v = detail::trim(value);
  if (key == "experiment") cfg.experiment = parse_experiment(v);
  else if (key == "d1") cfg.d1 = parse_number<Eigen::Index>(key, v);
  else if (key == "d2") cfg.d2 = parse_number<Eigen::Index>(key, v);
  else if (key == "n1") cfg.n1 = parse_number<Eigen::Index>(key, v);
  else if (key == "n2") cfg.n2 = parse_number<Eigen::Index>(key, v);
  else if (key == "k") cfg.k = parse_number<int>(key, v);
  else if (key == "alpha") cfg.alpha = parse_number<double>(key, v);
  else if (key == "k_grid") cfg.k_grid = detail::parse_grid(key, v);
  else if (key == "alpha_grid") cfg.alpha_grid = detail::parse_grid(key, v);
  else if (key == "n2_grid") cfg.n2_grid = detail::parse_grid(key, v);
  else if (key == "trials") cfg.trials = parse_number<std::size_t>(key, v);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "ridge") cfg.ridge = v == "auto" ? std::nullopt : std::optional<double>(parse_number<double>(key, v));
  else if (key == "pca") cfg.pca = v == "none" ? std::nullopt : std::optional<Eigen::Index>(parse_number<Eigen::Index>(key, v));
  else if (key == "output_dir") cfg.output_dir = v;
  else if (key == "eval_size") cfg.eval_size = parse_number<Eigen::Index>(key, v);
  else if (key == "kernel_baseline") cfg.kernel_baseline = detail::parse_bool(key, v);
  else if (key == "kernel_ridge") cfg.kernel_ridge = parse_number<double>(key, v);
  else if (key == "threads") cfg.threads = parse_number<unsigned>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Flat "key = value" lines; '#' starts a comment.
inline ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig cfg = {}) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    apply_config_key(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

struct ResultRow {
  std::string experiment;
  double grid_value = 0.0;
  std::size_t trial = 0;
  std::string method;
  double mse = 0.0;     // primary metric of the method
  double eps_ci = 0.0;  // population CI violation of the trial's model
  std::uint64_t seed = 0;
  bool degenerate = false;
};

struct SummaryRow {
  double grid_value = 0.0;
  std::string method;
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(trials)
  std::size_t trials = 0;
};

inline std::vector<std::string> methods_for(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::mse_vs_k:
    case Experiment::mse_vs_eps:
    case Experiment::mse_vs_n2: {
      std::vector<std::string> m = {"psi", "x1", "psi_star"};
      if (cfg.kernel_baseline) m.emplace_back("kernel_x1");
      return m;
    }
    case Experiment::exact_ci_gaussian: return {"apx_gap"};
    case Experiment::ace_demo: return {"sigma_gap", "apx_actual", "apx_bound_pinv", "apx_bound_bayes"};
    case Experiment::topic_check: return {"eps_ci_bar_y", "linearity_gap", "beta_inv", "beta_bound"};
    case Experiment::ci_report: return {"eps_ci_population", "eps_ci_sample", "beta_inv"};
  }
  return {};
}

/// Gaussian kernel ridge regression with the median-distance bandwidth.
struct KernelRidge {
  DenseMatrix centers;
  DenseMatrix coef;
  DenseVector y_mean;
  double gamma = 1.0;  // k(a, b) = exp(-gamma ||a - b||^2)

  static DenseMatrix sq_dists(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix d = -2.0 * a * b.transpose();
    d.colwise() += a.rowwise().squaredNorm();
    d.rowwise() += b.rowwise().squaredNorm().transpose();
    return d.cwiseMax(0.0);
  }

  static KernelRidge fit(const DenseMatrix& x, const DenseMatrix& y, double ridge) {
    KernelRidge m;
    m.centers = x;
    const DenseMatrix d = sq_dists(x, x);
    std::vector<double> off;
    const Eigen::Index cap = std::min<Eigen::Index>(x.rows(), 500);
    for (Eigen::Index i = 0; i < cap; ++i)
      for (Eigen::Index j = i + 1; j < cap; ++j) off.push_back(d(i, j));
    double med = 1.0;
    if (!off.empty()) {
      std::nth_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(off.size() / 2), off.end());
      med = off[off.size() / 2];
    }
    m.gamma = med > 0.0 ? 0.5 / med : 1.0;
    DenseMatrix k = (-m.gamma * d).array().exp().matrix();
    k.diagonal().array() += ridge * static_cast<double>(x.rows());
    m.y_mean = y.colwise().mean().transpose();
    m.coef = k.ldlt().solve(DenseMatrix(y.rowwise() - m.y_mean.transpose()));
    return m;
  }

  DenseMatrix predict(const DenseMatrix& x) const {
    DenseMatrix out = (-gamma * sq_dists(x, centers)).array().exp().matrix() * coef;
    out.rowwise() += y_mean.transpose();
    return out;
  }
};

namespace detail {

inline double mean_sq_gap(const DenseMatrix& a, const DenseMatrix& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.rows());
}

inline double ridge_or_default(const ExperimentConfig& cfg, const DenseMatrix& x) {
  if (cfg.ridge) return *cfg.ridge;
  const DenseMatrix xc = x.rowwise() - x.colwise().mean();
  return default_ridge(xc);
}

/// Runs `method` and records a flagged NaN row if the numerics break down.
template <class F>
void record(std::vector<ResultRow>& rows, const ResultRow& base, const std::string& method, F&& body) {
  ResultRow row = base;
  row.method = method;
  try {
    body(row);
  } catch (const Error&) {
    row.mse = std::numeric_limits<double>::quiet_NaN();
    row.degenerate = true;
  }
  rows.push_back(row);
}

inline std::vector<ResultRow> mixture_trial(const ExperimentConfig& cfg, int k, double alpha, Eigen::Index n2,
                                            const ResultRow& base) {
  const std::uint64_t s = base.seed;
  const MixtureSpec spec = make_mixture_spec(k, cfg.d1, cfg.d2, alpha, derive_seed(s, 1));
  const MixturePopulation pop = mixture_population(spec);
  const LabeledDataset pre = mixture_sample(spec, cfg.n1, derive_seed(s, 2));
  const LabeledDataset down = mixture_sample(spec, n2, derive_seed(s, 3));
  const DenseMatrix eval_x = mixture_sample(spec, cfg.eval_size, derive_seed(s, 4)).x1;
  const DenseMatrix& y = *down.y;

  ResultRow row = base;
  const CiValue eps = eps_ci_linear(with_raw_one_hot_moments(pop.blocks, pop.mean_y));
  row.eps_ci = eps.value;

  bool lin_degenerate = false;
  const TargetFn f_linear =
      linear_target(closed_form_f_gaussian(pop.blocks, &lin_degenerate), pop.mean_x1, pop.mean_y);
  const DenseMatrix target_linear = f_linear(eval_x);
  const DenseMatrix target_bayes = mixture_posterior_batch(spec, eval_x);

  std::vector<ResultRow> rows;
  for (const std::string& method : methods_for(cfg)) {
    record(rows, row, method, [&](ResultRow& r) {
      if (method == "psi") {
        const LinearRepresentation rep =
            fit_pretext_linear(pre.x1, *pre.x2, ridge_or_default(cfg, pre.x1), /*center=*/true);
        const DenseMatrix feats = rep.apply(down.x1);
        const DownstreamFit fit = fit_downstream(feats, y, ridge_or_default(cfg, feats), cfg.pca);
        r.mse = mse(fit, rep, f_linear, eval_x);
        r.degenerate = rep.degenerate || lin_degenerate;
      } else if (method == "x1") {
        const DownstreamFit fit = fit_downstream(down.x1, y, ridge_or_default(cfg, down.x1));
        r.mse = mean_sq_gap(target_linear, fit.predict(eval_x));
        r.degenerate = lin_degenerate;
      } else if (method == "psi_star") {
        const DenseMatrix feats = mixture_conditional_mean_x2(spec, down.x1);
        const DownstreamFit fit = fit_downstream(feats, y, ridge_or_default(cfg, feats));
        r.mse = mean_sq_gap(target_bayes, fit.predict(mixture_conditional_mean_x2(spec, eval_x)));
      } else {
        const KernelRidge kr = KernelRidge::fit(down.x1, y, cfg.kernel_ridge);
        r.mse = mean_sq_gap(target_bayes, kr.predict(eval_x));
      }
    });
  }
  return rows;
}

inline std::vector<ResultRow> exact_ci_trial(const ExperimentConfig& cfg, int k, const ResultRow& base) {
  std::vector<ResultRow> rows;
  record(rows, base, "apx_gap", [&](ResultRow& r) {
    const GaussianCISpec spec = random_gaussian_ci_spec(cfg.d1, cfg.d2, k, base.seed);
    const CovarianceBlocks blocks = gaussian_ci_population(spec);
    const DenseMatrix f_map = closed_form_f_gaussian(blocks);
    const LinearRepresentation psi = closed_form_psi_gaussian(blocks);
    const DenseMatrix head = gaussian_optimal_head(blocks);
    r.mse = (f_map - head.transpose() * psi.b).norm();
    const CiValue eps = eps_ci_linear(blocks);
    r.eps_ci = eps.value;
    r.degenerate = psi.degenerate || eps.degenerate || numerical_rank(blocks.sigma_x2y) < k;
  });
  return rows;
}

inline std::vector<ResultRow> ace_trial(int k, const ResultRow& base) {
  const std::uint64_t s = base.seed;
  const DiscreteJoint joint = mix_joints(discrete_joint_random({8, 8, 3}, derive_seed(s, 1), true),
                                         discrete_joint_random({8, 8, 3}, derive_seed(s, 2), false), 0.1);
  ResultRow row = base;
  row.eps_ci = eps_ci_tilde(joint);
  const AceSolution sol = ace_fit(joint, static_cast<std::size_t>(k));
  const DenseVector oracle = weighted_singular_values(joint).segment(1, k);
  const ApxBound pinv_bound = apx_error_bound_eval(sol, joint, GChoice::pinv_of_a);
  const ApxBound bayes_bound = apx_error_bound_eval(sol, joint, GChoice::bayes_indicator);
  std::vector<ResultRow> rows;
  record(rows, row, "sigma_gap", [&](ResultRow& r) {
    r.mse = (sol.sigmas - oracle).cwiseAbs().maxCoeff();
    r.degenerate = !sol.converged;
  });
  record(rows, row, "apx_actual", [&](ResultRow& r) { r.mse = pinv_bound.actual; });
  record(rows, row, "apx_bound_pinv", [&](ResultRow& r) {
    r.mse = pinv_bound.bound;
    r.degenerate = pinv_bound.degenerate || !pinv_bound.holds;
  });
  record(rows, row, "apx_bound_bayes", [&](ResultRow& r) {
    r.mse = bayes_bound.bound;
    r.degenerate = !bayes_bound.holds;
  });
  return rows;
}

inline std::vector<ResultRow> topic_trial(int k, const ResultRow& base) {
  const TopicModelSpec spec = random_topic_spec(6, static_cast<std::size_t>(k), 4,
                                                static_cast<std::size_t>(k) + 1, base.seed);
  const TopicReport rep = verify_topic_model(spec);
  ResultRow row = base;
  row.eps_ci = rep.eps_ci;
  std::vector<ResultRow> rows;
  record(rows, row, "eps_ci_bar_y", [&](ResultRow& r) {
    r.mse = rep.eps_ci;
    r.degenerate = !rep.eps_ci_ok;
  });
  record(rows, row, "linearity_gap", [&](ResultRow& r) {
    r.mse = rep.linearity_gap;
    r.degenerate = !rep.linearity_ok;
  });
  record(rows, row, "beta_inv", [&](ResultRow& r) {
    r.mse = rep.beta_inv;
    r.degenerate = !rep.beta_ok;
  });
  record(rows, row, "beta_bound", [&](ResultRow& r) { r.mse = rep.bound; });
  return rows;
}

inline std::vector<ResultRow> ci_report_trial(const ExperimentConfig& cfg, double alpha, const ResultRow& base) {
  const std::uint64_t s = base.seed;
  const MixtureSpec spec = make_mixture_spec(cfg.k, cfg.d1, cfg.d2, alpha, derive_seed(s, 1));
  const MixturePopulation pop = mixture_population(spec);
  const LabeledDataset pre = mixture_sample(spec, cfg.n1, derive_seed(s, 2));
  ResultRow row = base;
  const CiValue eps = eps_ci_linear(with_raw_one_hot_moments(pop.blocks, pop.mean_y));
  row.eps_ci = eps.value;
  std::vector<ResultRow> rows;
  record(rows, row, "eps_ci_population", [&](ResultRow& r) {
    r.mse = eps.value;
    r.degenerate = eps.degenerate;
  });
  record(rows, row, "eps_ci_sample", [&](ResultRow& r) {
    const CiValue v = eps_ci_linear_samples(pre.x1, *pre.x2, *pre.y);
    r.mse = v.value;
    r.degenerate = v.degenerate;
  });
  record(rows, row, "beta_inv", [&](ResultRow& r) {
    const BetaReport b = beta_inv(pop.blocks.sigma_yy, pop.blocks.sigma_x2y);
    r.mse = b.beta_inv;
    r.degenerate = b.rank_deficient;
  });
  return rows;
}

}  // namespace detail

/// Rows for one (grid point, trial); seed = derive_seed(master, grid_index, trial).
inline std::vector<ResultRow> run_trial(const ExperimentConfig& cfg, std::size_t grid_index, std::size_t trial) {
  const double g = cfg.grid().at(grid_index);
  ResultRow base;
  base.experiment = to_string(cfg.experiment);
  base.grid_value = g;
  base.trial = trial;
  base.seed = derive_seed(cfg.seed, grid_index, trial);
  switch (cfg.experiment) {
    case Experiment::mse_vs_k: return detail::mixture_trial(cfg, static_cast<int>(g), cfg.alpha, cfg.n2, base);
    case Experiment::mse_vs_eps: return detail::mixture_trial(cfg, cfg.k, g, cfg.n2, base);
    case Experiment::mse_vs_n2:
      return detail::mixture_trial(cfg, cfg.k, cfg.alpha, static_cast<Eigen::Index>(g), base);
    case Experiment::exact_ci_gaussian: return detail::exact_ci_trial(cfg, static_cast<int>(g), base);
    case Experiment::ace_demo: return detail::ace_trial(static_cast<int>(g), base);
    case Experiment::topic_check: return detail::topic_trial(static_cast<int>(g), base);
    case Experiment::ci_report: return detail::ci_report_trial(cfg, g, base);
  }
  return {};
}

/// All rows ordered by (grid index, trial, method) whatever the thread count.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t n_grid = cfg.grid().size();
  const std::size_t n_tasks = n_grid * cfg.trials;
  std::vector<std::vector<ResultRow>> slots(n_tasks);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_tasks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      try {
        slots[t] = run_trial(cfg, t / cfg.trials, t % cfg.trials);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ResultRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

/// Mean and standard error per (grid value, method), in first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> values;
  for (const ResultRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.grid_value == r.grid_value && s.method == r.method;
    });
    if (it == out.end()) {
      out.push_back({r.grid_value, r.method, 0.0, 0.0, 0});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.mse);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[i].mean = mean;
    out[i].trials = v.size();
    out[i].stderr_ = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "experiment,grid_value,trial,method,mse,eps_ci,seed,degenerate\n";
  for (const ResultRow& r : rows) {
    out += r.experiment + "," + fmt(r.grid_value) + "," + std::to_string(r.trial) + "," + r.method + "," +
           fmt(r.mse) + "," + fmt(r.eps_ci) + "," + std::to_string(r.seed) + "," + (r.degenerate ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string summary_csv(const std::string& experiment, const std::vector<SummaryRow>& rows) {
  std::string out = "experiment,grid_value,method,mean,stderr,trials\n";
  for (const SummaryRow& s : rows) {
    out += experiment + "," + fmt(s.grid_value) + "," + s.method + "," + fmt(s.mean) + "," + fmt(s.stderr_) + "," +
           std::to_string(s.trials) + "\n";
  }
  return out;
}

/// Line plot of mean per method with a +-1 standard error band.
inline std::string render_svg(const std::string& title, const std::string& x_label,
                              const std::vector<SummaryRow>& rows) {
  constexpr double width = 640, height = 420, left = 70, right = 150, top = 40, bottom = 60;
  std::vector<double> xs;
  std::vector<std::string> methods;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const SummaryRow& s : rows) {
    if (std::find(xs.begin(), xs.end(), s.grid_value) == xs.end()) xs.push_back(s.grid_value);
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
    if (std::isfinite(s.mean)) {
      lo = std::min(lo, s.mean - s.stderr_);
      hi = std::max(hi, s.mean + s.stderr_);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi <= lo) hi = lo + 1.0;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const auto px = [&](std::size_t i) {
    return xs.size() <= 1 ? left + plot_w / 2 : left + plot_w * static_cast<double>(i) / static_cast<double>(xs.size() - 1);
  };
  const auto py = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << "<text x=\"" << px(i) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << fmt(xs[i]) << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
        << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << x_label << "</text>\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const char* color = colors[m % std::size(colors)];
    std::vector<std::pair<double, const SummaryRow*>> pts;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (const SummaryRow& s : rows)
        if (s.method == methods[m] && s.grid_value == xs[i] && std::isfinite(s.mean)) pts.emplace_back(px(i), &s);
    if (pts.empty()) continue;
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& [x, s] : pts) svg << x << "," << py(s->mean + s->stderr_) << " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) svg << it->first << "," << py(it->second->mean - it->second->stderr_) << " ";
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, s] : pts) svg << x << "," << py(s->mean) << " ";
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(m);
    svg << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + plot_w + 36 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << methods[m] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Writes results.csv, summary.csv and optionally plot.svg into cfg.output_dir.
inline void write_outputs(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows, bool plot) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream out(fs::path(cfg.output_dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + name + " in " + cfg.output_dir);
    out << body;
  };
  const std::vector<SummaryRow> summary = summarize(rows);
  put("results.csv", results_csv(rows));
  put("summary.csv", summary_csv(to_string(cfg.experiment), summary));
  if (plot) put("plot.svg", render_svg(to_string(cfg.experiment), cfg.grid_name(), summary));
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  require_dims(a.size() == b.size() && a.size() >= 2, "spearman: need two equal-length samples");
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace sslci::harness
