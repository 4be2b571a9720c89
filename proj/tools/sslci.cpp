// sslci: experiment runner and exact-check front end.
// Exit codes: 0 ok, 1 check failure, 2 usage or input error.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sslci/sslci.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::string num(double v) { return sslci::harness::fmt(v); }

std::string vec(const sslci::DenseVector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + num(v(i));
  return out;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  bool plot = false;
};

int cmd_run(const RunArgs& a, const CLI::App& sub) {
  namespace h = sslci::harness;
  h::ExperimentConfig cfg = h::load_config_file(a.config);
  if (sub.count("--experiment")) cfg.experiment = h::parse_experiment(a.experiment);
  if (sub.count("--seed")) cfg.seed = a.seed;
  if (sub.count("--trials")) cfg.trials = a.trials;
  if (sub.count("--out")) cfg.output_dir = a.out;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = h::run_experiment(cfg);
  h::write_outputs(cfg, rows, a.plot);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t flagged = 0;
  for (const auto& r : rows) flagged += r.degenerate ? 1 : 0;
  std::cout << h::to_string(cfg.experiment) << ": " << rows.size() << " rows (" << flagged << " flagged) -> "
            << cfg.output_dir << "\n";
  for (const auto& s : h::summarize(rows)) {
    std::cout << "  " << cfg.grid_name() << "=" << num(s.grid_value) << " " << s.method << " mean " << num(s.mean)
              << " stderr " << num(s.stderr_) << "\n";
  }
  std::printf("wall time %.2f s\n", secs);
  return kOk;
}

int cmd_selfcheck(double inject_tol) {
  sslci::SelfcheckOptions opt;
  if (inject_tol > 0.0) opt.pinv_rank_tol = inject_tol;
  const auto results = sslci::run_selfcheck(opt);
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] %s: %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
    all = all && r.passed;
  }
  std::printf("%s\n", all ? "selfcheck passed" : "selfcheck FAILED");
  return all ? kOk : kCheckFailed;
}

int cmd_ace(const std::string& path, std::size_t k) {
  const sslci::DiscreteJoint joint = sslci::parse_joint_text(sslci::read_text_file(path));
  joint.validate();
  const std::size_t limit = std::min(joint.n1, joint.n2) - 1;
  if (limit < 1) throw sslci::ParseError("ace: both supports need at least two symbols");
  if (k == 0) k = std::min<std::size_t>(limit, std::max<std::size_t>(1, joint.ny > 1 ? joint.ny - 1 : 1));
  if (k > limit) throw sslci::ParseError("ace: k exceeds min(|X1|, |X2|) - 1");

  const sslci::DenseVector sv = sslci::weighted_singular_values(joint);
  const sslci::AceSolution sol = sslci::ace_fit(joint, k);
  const auto obj = sslci::ace_objective_identity_check(sol, joint);
  std::cout << "supports " << joint.n1 << " x " << joint.n2 << " x " << joint.ny << "\n"
            << "singular values of T: " << vec(sv) << "\n"
            << "ace sigmas (k=" << k << "): " << vec(sol.sigmas) << "\n"
            << "ace iterations " << sol.iterations << (sol.converged ? " (converged)" : " (NOT converged)") << "\n"
            << "l_ace " << num(obj.l_ace) << " l_cca " << num(obj.l_cca) << " identity gap " << num(obj.identity_gap)
            << "\n";
  for (std::size_t i = 1; i <= k; ++i)
    std::cout << "maximal correlation " << i << ": " << num(sslci::maximal_correlation(joint, i)) << "\n";

  bool ok = sol.converged && obj.identity_gap <= 1e-10;
  if (joint.ny > 1) {
    joint.validate(/*require_positive_y=*/true);
    std::cout << "eps_ci_tilde " << num(sslci::eps_ci_tilde(joint)) << "\n"
              << "eps_ci (universal) " << num(sslci::eps_ci_universal(joint)) << "\n";
    const auto gap = sslci::bayes_gap_check(joint);
    std::cout << "bayes gap " << num(gap.lhs) << " <= " << num(gap.rhs) << (gap.holds ? "" : "  VIOLATED") << "\n";
    ok = ok && gap.holds;
    for (auto [g, name] : {std::pair{sslci::GChoice::pinv_of_a, "pinv_of_a"},
                           std::pair{sslci::GChoice::bayes_indicator, "bayes_indicator"}}) {
      const auto b = sslci::apx_error_bound_eval(sol, joint, g);
      std::cout << "apx error [" << name << "] actual " << num(b.actual) << " bound " << num(b.bound) << " bound_svd "
                << num(b.bound_svd) << (b.degenerate ? " (degenerate A)" : "") << (b.holds ? "" : "  VIOLATED") << "\n";
      ok = ok && b.holds;
    }
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_topic(const std::string& path) {
  const sslci::TopicSpecFile file = sslci::parse_topic_spec_text(sslci::read_text_file(path));
  const sslci::TopicModelSpec& spec = file.spec;
  if (file.samples > 0) {
    const auto docs = sslci::sample_documents(spec, static_cast<Eigen::Index>(file.samples), file.seed);
    std::cout << "sampled " << file.samples << " documents; mean x2: "
              << vec(docs.x2->colwise().mean().transpose()) << "\n";
  }
  if (!spec.finite_tau()) {
    std::cout << "Dirichlet tau: exact checks need finite atoms\n";
    return kOk;
  }
  const sslci::TopicReport r = sslci::verify_topic_model(spec);
  const auto line = [](bool ok, const std::string& what) {
    std::cout << "[" << (ok ? "PASS" : "FAIL") << "] " << what << "\n";
  };
  line(r.size_ok, "|Ybar| = " + std::to_string(r.bar_y_size));
  line(r.eps_ci_ok, "eps_ci(Ybar) = " + num(r.eps_ci));
  line(r.linearity_ok, "max |E[Y|X1] - w^T E[mu|X1]| = " + num(r.linearity_gap));
  line(r.beta_ok, "1/beta = " + num(r.beta_inv) + " <= kappa ||w|| / lambda_min(A) = " + num(r.bound) +
                      " (kappa " + num(r.kappa) + ", lambda_min(A) " + num(r.lambda_min_a) + ")");
  std::cout << "w^T Gamma (A Gamma)^+ norm: " << num(r.beta_inv_gamma_form) << "\n";
  return r.all_pass() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised learning under conditional independence: experiments and exact checks"};
  app.require_subcommand(1);

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment described by a key=value config file");
  run_cmd->add_option("config", run.config, "Config file")->required();
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--experiment", run.experiment, "Experiment tag");
  run_cmd->add_option("--seed", run.seed, "Master seed");
  run_cmd->add_option("--trials", run.trials, "Trials per grid point");
  run_cmd->add_flag("--plot", run.plot, "Also write plot.svg");

  double inject_tol = 0.0;
  CLI::App* self_cmd = app.add_subcommand("selfcheck", "Run the invariant suite");
  self_cmd->add_option("--inject-pinv-tol", inject_tol, "Test mode: override the pseudo-inverse rank tolerance");

  std::string joint_path;
  std::size_t ace_k = 0;
  CLI::App* ace_cmd = app.add_subcommand("ace", "Operator spectrum, ACE and bounds for a finite joint");
  ace_cmd->add_option("--joint", joint_path, "Joint distribution file")->required();
  ace_cmd->add_option("--k", ace_k, "Number of non-constant pairs (default |Y|-1)");

  std::string topic_path;
  CLI::App* topic_cmd = app.add_subcommand("topic", "Exact topic-model checks");
  topic_cmd->add_option("--spec", topic_path, "Topic spec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, *run_cmd);
    if (*self_cmd) return cmd_selfcheck(inject_tol);
    if (*ace_cmd) return cmd_ace(joint_path, ace_k);
    if (*topic_cmd) return cmd_topic(topic_path);
  } catch (const sslci::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const sslci::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsage;
  } catch (const sslci::ScaleLimitError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}
