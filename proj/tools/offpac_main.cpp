#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "offpac/envs.hpp"
#include "offpac/harness.hpp"
#include "offpac/offpac_actor.hpp"
#include "offpac/oracle.hpp"
#include "offpac/rng.hpp"

namespace {

using namespace offpac;
using namespace offpac::harness;

struct ConfigFlags {
  std::string config_file;
  std::string env, algorithm;
  double alpha_v = 0, alpha_w = 0, alpha_u = 0, tau = 0, lambda = 0, gamma = 0;
  int episodes = 0, runs = 0, eval_points = 0, eval_episodes = 0;
  std::uint64_t seed = 0;

  CLI::Option *o_env = nullptr, *o_alg = nullptr, *o_av = nullptr, *o_aw = nullptr,
              *o_au = nullptr, *o_tau = nullptr, *o_lam = nullptr, *o_gamma = nullptr,
              *o_eps = nullptr, *o_runs = nullptr, *o_evp = nullptr, *o_eve = nullptr,
              *o_seed = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key=value config file");
    o_env = app->add_option("--env", env, "mountain_car | pendulum | grid_world");
    o_alg = app->add_option("--algorithm", algorithm,
                            "behavior | q_lambda | greedy_gq | softmax_gq | offpac");
    o_av = app->add_option("--alpha-v", alpha_v, "raw critic step size (divided by 11)");
    o_aw = app->add_option("--alpha-w", alpha_w, "raw correction step size");
    o_au = app->add_option("--alpha-u", alpha_u, "raw actor step size");
    o_tau = app->add_option("--tau", tau, "softmax temperature");
    o_lam = app->add_option("--lambda", lambda, "trace decay in [0, 1]");
    o_gamma = app->add_option("--gamma", gamma, "continuation in [0, 1)");
    o_eps = app->add_option("--episodes", episodes, "training episodes (-1: env default)");
    o_runs = app->add_option("--runs", runs, "independent runs");
    o_evp = app->add_option("--eval-points", eval_points, "evaluation checkpoints");
    o_eve = app->add_option("--eval-episodes", eval_episodes, "episodes per checkpoint");
    o_seed = app->add_option("--seed", seed, "base seed");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg =
        config_file.empty() ? ExperimentConfig{} : load_config_file(config_file);
    if (o_env->count()) cfg.env = env;
    if (o_alg->count()) cfg.algorithm = parse_algorithm(algorithm);
    if (o_av->count()) cfg.alpha_v = alpha_v;
    if (o_aw->count()) cfg.alpha_w = alpha_w;
    if (o_au->count()) cfg.alpha_u = alpha_u;
    if (o_tau->count()) cfg.tau = tau;
    if (o_lam->count()) cfg.lambda = lambda;
    if (o_gamma->count()) cfg.gamma = gamma;
    if (o_eps->count()) cfg.num_episodes = episodes;
    if (o_runs->count()) cfg.num_runs = runs;
    if (o_evp->count()) cfg.eval_points = eval_points;
    if (o_eve->count()) cfg.eval_episodes = eval_episodes;
    if (o_seed->count()) cfg.seed = seed;
    return cfg;
  }
};

void write_rows_file(const std::string& path, const std::vector<CsvRow>& rows) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty())
    std::filesystem::create_directories(dir);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_rows_csv(out, rows);
}

int cmd_run(const ConfigFlags& flags, const std::string& out_file,
            const std::string& snapshot_dir, int parallelism) {
  ExperimentConfig cfg = flags.resolve();
  cfg.save_weights = !snapshot_dir.empty();
  std::vector<CsvRow> rows;
  for (int r = 0; r < cfg.num_runs; ++r) {
    const RunOutput out = run_single(cfg, r);
    const auto run_rows = to_rows(cfg, out.records);
    rows.insert(rows.end(), run_rows.begin(), run_rows.end());
    std::printf("run %d: steps=%lld diverged=%d last_mean=%.6g wall=%.1fs\n", r,
                out.total_steps, out.diverged ? 1 : 0,
                out.records.empty() ? 0.0 : out.records.back().mean_return,
                out.wall_clock_s);
    if (!snapshot_dir.empty()) {
      std::filesystem::create_directories(snapshot_dir);
      for (const auto& [name, w] : out.weights) {
        const std::string path =
            snapshot_dir + "/run" + std::to_string(r) + "_" + name + ".csv";
        std::ofstream ws(path, std::ios::trunc);
        if (!ws) throw std::runtime_error("cannot write " + path);
        save_weights_csv(ws, w);
      }
    }
  }
  (void)parallelism;
  write_rows_file(out_file, rows);
  const BestCell fin = select_best(rows, "final");
  std::printf("final mean (last 10%% of checkpoints): %.6g\n", fin.score);
  std::printf("wrote %zu rows to %s\n", rows.size(), out_file.c_str());
  return 0;
}

std::vector<double> parse_grid_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t end = csv.find(',', start);
    if (end == std::string::npos) end = csv.size();
    const std::string tok = csv.substr(start, end - start);
    if (!tok.empty()) out.push_back(std::stod(tok));
    start = end + 1;
  }
  if (out.empty()) throw std::runtime_error("empty grid list");
  return out;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& out_file, int parallelism,
              const std::string& g_av, const std::string& g_aw, const std::string& g_au,
              const std::string& g_tau, const std::string& g_lam) {
  const ExperimentConfig base = flags.resolve();
  SweepGrid grid = SweepGrid::default_grid(base.algorithm);
  if (!g_av.empty()) grid.alpha_v = parse_grid_list(g_av);
  if (!g_aw.empty()) grid.alpha_w = parse_grid_list(g_aw);
  if (!g_au.empty()) grid.alpha_u = parse_grid_list(g_au);
  if (!g_tau.empty()) grid.tau = parse_grid_list(g_tau);
  if (!g_lam.empty()) grid.lambda = parse_grid_list(g_lam);

  const auto cells = expand_grid(base, grid);
  std::printf("sweep: %zu cells x %d runs\n", cells.size(), base.num_runs);
  const auto outcomes = run_sweep(cells, parallelism);

  std::vector<CsvRow> rows;
  int failed = 0;
  for (const auto& oc : outcomes) {
    if (!oc.error.empty()) {
      ++failed;
      std::fprintf(stderr, "cell %s failed: %s\n", config_id(oc.cfg).c_str(),
                   oc.error.c_str());
      continue;
    }
    const auto cell_rows = to_rows(oc.cfg, oc.records);
    rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
  }
  write_rows_file(out_file, rows);
  std::printf("wrote %zu rows to %s (%d cells failed)\n", rows.size(), out_file.c_str(),
              failed);
  if (!rows.empty()) {
    const BestCell fin = select_best(rows, "final");
    const BestCell all = select_best(rows, "overall");
    std::printf("best final:   %s  (%.6g)\n", fin.config_id.c_str(), fin.score);
    std::printf("best overall: %s  (%.6g)\n", all.config_id.c_str(), all.score);
  }
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& in_file, const std::string& out_dir) {
  std::ifstream in(in_file);
  if (!in) throw std::runtime_error("cannot open " + in_file);
  const auto rows = read_rows_csv(in);
  emit_report(rows, out_dir);
  const BestCell fin = select_best(rows, "final");
  const BestCell all = select_best(rows, "overall");
  std::printf("best final:   %s  (%.6g)\n", fin.config_id.c_str(), fin.score);
  std::printf("best overall: %s  (%.6g)\n", all.config_id.c_str(), all.score);
  std::printf("report written to %s\n", out_dir.c_str());
  return 0;
}

bool report_check(const char* name, bool ok, double value, const char* detail) {
  std::printf("[%s] %-44s %.3g %s\n", ok ? "PASS" : "FAIL", name, value, detail);
  return ok;
}

int cmd_oracle(long long steps, std::uint64_t seed) {
  using namespace offpac::oracle;
  int failures = 0;
  SplitMix64 rng(derive_seed(seed, 42, 0));

  const std::pair<const char*, TabularMDP> mdps[] = {
      {"chain2", chain2()}, {"ring3", ring3()}, {"rand4", rand4(7)}};
  for (const auto& [name, m] : mdps) {
    const FeatureMatrix phi = tabular_features(m.num_states, m.num_actions);
    std::vector<double> u(static_cast<std::size_t>(phi.cols));
    for (auto& x : u) x = rng.uniform(-1.0, 1.0);
    const std::vector<double> pi = gibbs_policy_probs(m, phi, u);
    const ExactValues ev = exact_values(m, pi);

    double vq = 0.0;
    for (int s = 0; s < m.num_states; ++s) {
      double mix = 0.0;
      for (int a = 0; a < m.num_actions; ++a)
        mix += pi[static_cast<std::size_t>(s * m.num_actions + a)] *
               ev.Q[static_cast<std::size_t>(s * m.num_actions + a)];
      vq = std::max(vq, std::fabs(mix - ev.V[static_cast<std::size_t>(s)]));
    }
    std::vector<double> vhat(static_cast<std::size_t>(m.num_states));
    std::vector<double> c(static_cast<std::size_t>(m.num_states));
    for (auto& x : vhat) x = rng.uniform(-2.0, 2.0);
    for (auto& x : c) x = rng.uniform(-2.0, 2.0);
    const double nr = normalization_residual_max_abs(m, pi, vhat);
    const double bl = baseline_invariance_max_abs(m, pi, c);
    const double pb = mspbe(m, pi, ev.V, state_identity_features(m.num_states), 0.4);

    std::string label = std::string(name) + ": V=sum(pi Q) gap";
    if (!report_check(label.c_str(), vq < 1e-10, vq, "< 1e-10")) ++failures;
    label = std::string(name) + ": policy-sum residual expectation";
    if (!report_check(label.c_str(), nr == 0.0, nr, "== 0")) ++failures;
    label = std::string(name) + ": state-baseline invariance";
    if (!report_check(label.c_str(), bl == 0.0, bl, "== 0")) ++failures;
    label = std::string(name) + ": MSPBE at exact values";
    if (!report_check(label.c_str(), pb < 1e-12, pb, "< 1e-12")) ++failures;
  }

  // TD-error recursion against the forward lambda-return on synthetic episodes
  double worst_gap = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int T = 3 + static_cast<int>(rng.uniform_int(10));
    std::vector<TrajectoryStep> traj(static_cast<std::size_t>(T));
    std::vector<double> vhat(6);
    for (auto& x : vhat) x = rng.uniform(-2.0, 2.0);
    int s = static_cast<int>(rng.uniform_int(6));
    for (int t = 0; t < T; ++t) {
      auto& st = traj[static_cast<std::size_t>(t)];
      st.s = s;
      st.a = static_cast<int>(rng.uniform_int(2));
      st.rho = rng.uniform(0.1, 2.5);
      st.reward = rng.uniform(-1.0, 1.0);
      st.s_next = static_cast<int>(rng.uniform_int(6));
      st.gamma_next = t + 1 == T ? 0.0 : rng.uniform(0.2, 0.99);
      s = st.s_next;
    }
    for (const double lam : {0.0, 0.3, 0.5, 0.9, 1.0})
      worst_gap = std::max(
          worst_gap, lambda_td_error_recursion_gap(
                         {traj.data(), traj.size()}, vhat, lam));
  }
  if (!report_check("lambda TD-error recursion gap", worst_gap < 1e-12, worst_gap,
                    "< 1e-12"))
    ++failures;

  // Ascent-direction sanity on the random 4-state MDP
  {
    const TabularMDP m = rand4(7);
    const FeatureMatrix phi = tabular_features(m.num_states, m.num_actions);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> u(static_cast<std::size_t>(phi.cols));
      for (auto& x : u) x = rng.uniform(-1.0, 1.0);
      const Gradients gr = objective_and_gradients(m, u, phi);
      double norm = 0.0;
      for (double gk : gr.g) norm += gk * gk;
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      std::vector<double> u2 = u;
      for (std::size_t k = 0; k < u.size(); ++k) u2[k] += 1e-3 / norm * gr.g[k];
      const double j2 = objective(m, u2, phi);
      worst = std::max(worst, gr.J - j2);
    }
    if (!report_check("ascent along g improves J (max loss)", worst <= 1e-9, worst,
                      "<= 1e-9"))
      ++failures;

    std::vector<double> u0(static_cast<std::size_t>(phi.cols));
    for (auto& x : u0) x = rng.uniform(-0.5, 0.5);
    const std::vector<double> uc = ascend_on_g(m, phi, u0, 1e-6, 20000);
    const Gradients at = objective_and_gradients(m, uc, phi);
    double gj = 0.0;
    for (double x : at.grad_j) gj = std::max(gj, std::fabs(x));
    if (!report_check("true gradient at ascent fixed point", gj < 1e-4, gj, "< 1e-4"))
      ++failures;
  }

  // Forward/backward estimator agreement on the ring
  {
    const TabularMDP m = ring3();
    const FeatureMatrix phi = tabular_features(m.num_states, m.num_actions);
    std::vector<double> u(static_cast<std::size_t>(phi.cols));
    std::vector<double> vhat(static_cast<std::size_t>(m.num_states));
    for (auto& x : u) x = rng.uniform(-0.5, 0.5);
    for (auto& x : vhat) x = rng.uniform(-1.0, 1.0);
    for (const double lam : {0.0, 0.5, 0.8}) {
      const FwdBwdStats st = check_forward_backward(m, u, vhat, lam, steps, seed);
      double worst = 0.0;
      bool ok = true;
      for (std::size_t k = 0; k < st.mean_forward.size(); ++k) {
        const double gap = std::fabs(st.mean_forward[k] - st.mean_backward[k]);
        worst = std::max(worst, gap);
        if (gap > 3.0 * st.stderr_diff[k] + 1e-12) ok = false;
      }
      char name[64];
      std::snprintf(name, sizeof name, "forward/backward means, lambda=%.1f", lam);
      if (!report_check(name, ok, worst, "<= 3 stderr")) ++failures;
    }
  }

  std::printf("%s: %d failure(s)\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-policy actor-critic experiment harness"};
  app.require_subcommand(1);

  ConfigFlags run_flags, sweep_flags;
  std::string run_out = "results.csv", sweep_out = "results.csv";
  std::string snapshot_dir;
  std::string report_in = "results.csv", report_dir = "report";
  int run_par = 1, sweep_par = 0;
  std::string g_av, g_aw, g_au, g_tau, g_lam;
  long long oracle_steps = 200000;
  std::uint64_t oracle_seed = 1;

  CLI::App* run = app.add_subcommand("run", "train and evaluate one configuration");
  run_flags.attach(run);
  run->add_option("--out", run_out, "results CSV path");
  run->add_option("--snapshot-dir", snapshot_dir, "save final weights per run here");
  run->add_option("--parallelism", run_par, "unused; runs execute sequentially");

  CLI::App* sweep = app.add_subcommand("sweep", "grid sweep around a base configuration");
  sweep_flags.attach(sweep);
  sweep->add_option("--out", sweep_out, "results CSV path");
  sweep->add_option("--parallelism", sweep_par, "worker threads (0: hardware)");
  sweep->add_option("--grid-alpha-v", g_av, "comma list overriding the alpha_v grid");
  sweep->add_option("--grid-alpha-w", g_aw, "comma list overriding the alpha_w grid");
  sweep->add_option("--grid-alpha-u", g_au, "comma list overriding the alpha_u grid");
  sweep->add_option("--grid-tau", g_tau, "comma list overriding the tau grid");
  sweep->add_option("--grid-lambda", g_lam, "comma list overriding the lambda grid");

  CLI::App* report = app.add_subcommand("report", "aggregate a results CSV");
  report->add_option("--in", report_in, "results CSV path");
  report->add_option("--out-dir", report_dir, "directory for summary and curves");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "exact tabular verification suite");
  oracle_cmd->add_option("--steps", oracle_steps, "behavior steps per estimator check");
  oracle_cmd->add_option("--seed", oracle_seed, "suite seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags, run_out, snapshot_dir, run_par);
    if (sweep->parsed())
      return cmd_sweep(sweep_flags, sweep_out, sweep_par, g_av, g_aw, g_au, g_tau, g_lam);
    if (report->parsed()) return cmd_report(report_in, report_dir);
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_steps, oracle_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
