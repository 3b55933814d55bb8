#include "offpac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "offpac/baselines.hpp"
#include "offpac/envs.hpp"
#include "offpac/gtd_critic.hpp"
#include "offpac/offpac_actor.hpp"
#include "offpac/policies.hpp"
#include "offpac/rng.hpp"

namespace offpac::harness {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? kNan : s / static_cast<double>(xs.size());
}

// sample stddev / sqrt(n); 0 for fewer than two samples
double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) /
                   static_cast<double>(xs.size()));
}

std::uint64_t hash_weights(std::uint64_t h, const std::vector<double>& w) {
  return mix64(h ^ (fnv1a64(w.data(), w.size() * sizeof(double)) +
                    0x9e3779b97f4a7c15ull));
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "behavior") return Algorithm::behavior;
  if (name == "q_lambda") return Algorithm::q_lambda;
  if (name == "greedy_gq") return Algorithm::greedy_gq;
  if (name == "softmax_gq") return Algorithm::softmax_gq;
  if (name == "offpac") return Algorithm::offpac;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::behavior: return "behavior";
    case Algorithm::q_lambda: return "q_lambda";
    case Algorithm::greedy_gq: return "greedy_gq";
    case Algorithm::softmax_gq: return "softmax_gq";
    case Algorithm::offpac: return "offpac";
  }
  throw std::logic_error("bad algorithm enum");
}

int default_episodes(std::string_view env) {
  if (env == "pendulum") return 200;
  return 5000;
}

int resolved_episodes(const ExperimentConfig& cfg) {
  return cfg.num_episodes > 0 ? cfg.num_episodes : default_episodes(cfg.env);
}

std::string config_id(const ExperimentConfig& cfg) {
  std::string id = cfg.env;
  id += ';';
  id += algorithm_name(cfg.algorithm);
  id += ";av=" + fmt("%g", cfg.alpha_v);
  id += ";aw=" + fmt("%g", cfg.alpha_w);
  id += ";au=" + fmt("%g", cfg.alpha_u);
  id += ";tau=" + fmt("%g", cfg.tau);
  id += ";lam=" + fmt("%g", cfg.lambda);
  return id;
}

std::uint64_t run_seed_for(const ExperimentConfig& cfg, int run_index) {
  const std::string id = config_id(cfg);
  return derive_seed(mix64(cfg.seed) ^ fnv1a64(id.data(), id.size()),
                     static_cast<std::uint64_t>(run_index), 1);
}

namespace {

double parse_double(std::string_view v, std::string_view what) {
  std::string s(v);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    throw std::invalid_argument("bad number for " + std::string(what) + ": " + s);
  return x;
}

long long parse_int(std::string_view v, std::string_view what) {
  std::string s(v);
  char* end = nullptr;
  const long long x = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || s.empty())
    throw std::invalid_argument("bad integer for " + std::string(what) + ": " + s);
  return x;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

void apply_key_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "env") cfg.env = std::string(value);
  else if (key == "algorithm") cfg.algorithm = parse_algorithm(value);
  else if (key == "alpha_v") cfg.alpha_v = parse_double(value, key);
  else if (key == "alpha_w") cfg.alpha_w = parse_double(value, key);
  else if (key == "alpha_u") cfg.alpha_u = parse_double(value, key);
  else if (key == "tau") cfg.tau = parse_double(value, key);
  else if (key == "lambda") cfg.lambda = parse_double(value, key);
  else if (key == "gamma") cfg.gamma = parse_double(value, key);
  else if (key == "episodes") cfg.num_episodes = static_cast<int>(parse_int(value, key));
  else if (key == "runs") cfg.num_runs = static_cast<int>(parse_int(value, key));
  else if (key == "eval_points") cfg.eval_points = static_cast<int>(parse_int(value, key));
  else if (key == "eval_episodes") cfg.eval_episodes = static_cast<int>(parse_int(value, key));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
  else if (key == "num_tilings") cfg.tiles.num_tilings = static_cast<int>(parse_int(value, key));
  else if (key == "tiles_per_dim") cfg.tiles.tiles_per_dim = static_cast<int>(parse_int(value, key));
  else if (key == "hash_size") cfg.tiles.hash_size = static_cast<std::uint32_t>(parse_int(value, key));
  else throw std::invalid_argument("unknown config key: " + std::string(key));
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    const std::size_t eq = v.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value, got: " + std::string(v));
    apply_key_value(cfg, v.substr(0, eq), v.substr(eq + 1));
  }
  return cfg;
}

void encode_all(const TileCoder& coder, std::span<const double> s, int num_actions,
                EncodedState& out) {
  coder.encode_bundle(s, num_actions, out.state, out.per_action);
}

namespace {

// Algorithm-agnostic face the run loop drives. Evaluation methods must not
// touch learner state; the purity hash around each checkpoint enforces it.
class LearnerDriver {
 public:
  virtual ~LearnerDriver() = default;
  virtual void step(const Transition& t, const EncodedState& s, const EncodedState& sp) = 0;
  virtual void episode_reset() {}
  virtual bool diverged() const { return false; }
  virtual int eval_action(const EncodedState& s, SplitMix64& rng) = 0;
  virtual std::uint64_t weights_hash() const { return 0x6f66665f706163ull; }
  virtual void collect_weights(std::vector<std::pair<std::string, std::vector<double>>>&) const {}
};

class OffPacDriver final : public LearnerDriver {
 public:
  OffPacDriver(std::uint32_t dim, int actions, OffPacHyper h) : agent_(dim, actions, h) {}

  void step(const Transition& t, const EncodedState& s, const EncodedState&) override {
    agent_.step(t, s.per_action);
  }
  void episode_reset() override { agent_.episode_reset(); }
  bool diverged() const override { return agent_.diverged(); }

  int eval_action(const EncodedState& s, SplitMix64& rng) override {
    probs_ = gibbs_probs(agent_.actor.u, s.per_action);
    return sample_discrete(probs_, rng.uniform01());
  }
  std::uint64_t weights_hash() const override {
    std::uint64_t h = 1;
    h = hash_weights(h, agent_.critic.v);
    h = hash_weights(h, agent_.critic.w);
    h = hash_weights(h, agent_.actor.u);
    return h;
  }
  void collect_weights(std::vector<std::pair<std::string, std::vector<double>>>& out) const override {
    out.emplace_back("v", agent_.critic.v);
    out.emplace_back("w", agent_.critic.w);
    out.emplace_back("u", agent_.actor.u);
  }

 private:
  OffPacAgent agent_;
  std::vector<double> probs_;
};

class QLambdaDriver final : public LearnerDriver {
 public:
  QLambdaDriver(std::uint32_t dim, double lambda, double alpha_v)
      : st_(dim), lambda_(lambda), alpha_v_(alpha_v) {}

  void step(const Transition& t, const EncodedState& s, const EncodedState& sp) override {
    q_lambda_step(st_, t, s.per_action[static_cast<std::size_t>(t.action)], s.per_action,
                  sp.per_action, lambda_, alpha_v_);
  }
  void episode_reset() override { st_.e.clear(); }
  bool diverged() const override { return st_.diverged; }

  int eval_action(const EncodedState& s, SplitMix64&) override {
    fill_q(st_.v, s, q_);
    return greedy_action(q_);
  }
  std::uint64_t weights_hash() const override { return hash_weights(1, st_.v); }
  void collect_weights(std::vector<std::pair<std::string, std::vector<double>>>& out) const override {
    out.emplace_back("v", st_.v);
  }

  static void fill_q(const std::vector<double>& v, const EncodedState& s,
                     std::vector<double>& q) {
    q.resize(s.per_action.size());
    for (std::size_t a = 0; a < s.per_action.size(); ++a)
      q[a] = sparse_dot(v, s.per_action[a]);
  }

 private:
  QLambdaState st_;
  double lambda_, alpha_v_;
  std::vector<double> q_;
};

class GQDriver final : public LearnerDriver {
 public:
  GQDriver(std::uint32_t dim, GQTarget target, double tau, double lambda, double alpha_v,
           double alpha_w)
      : st_(dim), target_(target), tau_(tau), lambda_(lambda), alpha_v_(alpha_v),
        alpha_w_(alpha_w) {}

  void step(const Transition& t, const EncodedState& s, const EncodedState& sp) override {
    gq_step(st_, t, s.per_action[static_cast<std::size_t>(t.action)], s.per_action,
            sp.per_action, target_, tau_, lambda_, alpha_v_, alpha_w_);
  }
  void episode_reset() override { st_.e.clear(); }
  bool diverged() const override { return st_.diverged; }

  int eval_action(const EncodedState& s, SplitMix64& rng) override {
    QLambdaDriver::fill_q(st_.v, s, q_);
    if (target_ == GQTarget::greedy) return greedy_action(q_);
    probs_ = softmax_target_probs(tau_, q_);
    return sample_discrete(probs_, rng.uniform01());
  }
  std::uint64_t weights_hash() const override {
    return hash_weights(hash_weights(1, st_.v), st_.w);
  }
  void collect_weights(std::vector<std::pair<std::string, std::vector<double>>>& out) const override {
    out.emplace_back("v", st_.v);
    out.emplace_back("w", st_.w);
  }

 private:
  GQState st_;
  GQTarget target_;
  double tau_, lambda_, alpha_v_, alpha_w_;
  std::vector<double> q_, probs_;
};

class BehaviorDriver final : public LearnerDriver {
 public:
  explicit BehaviorDriver(int actions) : actions_(actions) {}
  void step(const Transition&, const EncodedState&, const EncodedState&) override {}
  int eval_action(const EncodedState&, SplitMix64& rng) override {
    return rng.uniform_int(actions_);
  }

 private:
  int actions_;
};

std::unique_ptr<LearnerDriver> make_driver(const ExperimentConfig& cfg, std::uint32_t dim,
                                           int actions, int arity) {
  const double av = cfg.alpha_v / arity;
  const double aw = cfg.alpha_w / arity;
  const double au = cfg.alpha_u / arity;
  switch (cfg.algorithm) {
    case Algorithm::offpac:
      return std::make_unique<OffPacDriver>(dim, actions,
                                            OffPacHyper{av, aw, au, cfg.lambda});
    case Algorithm::q_lambda:
      return std::make_unique<QLambdaDriver>(dim, cfg.lambda, av);
    case Algorithm::greedy_gq:
      return std::make_unique<GQDriver>(dim, GQTarget::greedy, cfg.tau, cfg.lambda, av, aw);
    case Algorithm::softmax_gq:
      return std::make_unique<GQDriver>(dim, GQTarget::softmax, cfg.tau, cfg.lambda, av, aw);
    case Algorithm::behavior:
      return std::make_unique<BehaviorDriver>(actions);
  }
  throw std::logic_error("bad algorithm enum");
}

void validate_config(const ExperimentConfig& cfg) {
  const int n = resolved_episodes(cfg);
  if (n < 1) throw std::invalid_argument("num_episodes must be positive");
  if (cfg.eval_points < 1 || cfg.eval_points > n)
    throw std::invalid_argument("eval_points must be in [1, num_episodes]");
  if (cfg.eval_episodes < 1) throw std::invalid_argument("eval_episodes must be positive");
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
    throw std::invalid_argument("lambda must be in [0, 1]");
  if (cfg.alpha_v < 0 || cfg.alpha_w < 0 || cfg.alpha_u < 0)
    throw std::invalid_argument("step sizes must be non-negative");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("gamma must be in [0, 1)");
  if (cfg.algorithm == Algorithm::softmax_gq && !(cfg.tau > 0.0))
    throw std::invalid_argument("tau must be positive for softmax_gq");
}

}  // namespace

RunOutput run_single(const ExperimentConfig& cfg, int run_index) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  auto env = make_env(cfg.env);
  auto eval_env = make_env(cfg.env);
  const int actions = env->num_actions();

  TileCoderConfig tc = cfg.tiles;
  if (tc.low.empty()) {
    const auto lo = env->state_low(), hi = env->state_high();
    tc.low.assign(lo.begin(), lo.end());
    tc.high.assign(hi.begin(), hi.end());
  }
  const TileCoder coder(tc);
  auto driver = make_driver(cfg, coder.dimension(), actions, coder.arity());

  const std::uint64_t run_seed = run_seed_for(cfg, run_index);
  SplitMix64 beh_rng(derive_seed(run_seed, 0, 0));
  SplitMix64 env_rng(derive_seed(run_seed, 1, 0));

  const int total_eps = resolved_episodes(cfg);
  const int points = cfg.eval_points;
  const std::string id = config_id(cfg);

  RunOutput out;
  out.records.reserve(static_cast<std::size_t>(points));

  EncodedState enc_s, enc_sp, enc_eval;
  std::vector<double> eval_returns(static_cast<std::size_t>(cfg.eval_episodes), 0.0);
  Transition tr;
  tr.b_prob = 1.0 / actions;

  const auto episodes_at = [&](int k) {
    return static_cast<long long>(k) * total_eps / points;
  };

  const auto eval_checkpoint = [&](int k, long long eps_done) {
    const std::uint64_t before = driver->weights_hash();
    for (int j = 0; j < cfg.eval_episodes; ++j) {
      const std::uint64_t sub =
          (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(j);
      SplitMix64 erng(derive_seed(run_seed, 2, sub));
      SplitMix64 arng(derive_seed(run_seed, 3, sub));
      auto s = eval_env->reset();
      double ret = 0.0;
      while (true) {
        encode_all(coder, {s.data(), s.size()}, actions, enc_eval);
        const int a = driver->eval_action(enc_eval, arng);
        const StepOut so = eval_env->step(a, erng);
        ret += so.reward;
        if (so.done) break;
        s = eval_env->state();
      }
      eval_returns[static_cast<std::size_t>(j)] = ret;
    }
    if (driver->weights_hash() != before)
      throw std::logic_error("evaluation touched learner weights");

    RunRecord rec;
    rec.config_id = id;
    rec.run_seed = run_seed;
    rec.run = run_index;
    rec.checkpoint = k;
    rec.episodes_done = eps_done;
    rec.eval_returns = eval_returns;
    rec.mean_return = mean_of(eval_returns);
    rec.stderr_return = stderr_of(eval_returns);
    out.records.push_back(std::move(rec));
  };

  int next_ck = 1;
  if (cfg.algorithm == Algorithm::behavior) {
    // Nothing learns: evaluation depends only on (run seed, checkpoint),
    // so the training phase is skipped outright.
    for (; next_ck <= points; ++next_ck) eval_checkpoint(next_ck, episodes_at(next_ck));
  } else {
    for (int ep = 0; ep < total_eps && !out.diverged; ++ep) {
      auto s = env->reset();
      driver->episode_reset();
      encode_all(coder, {s.data(), s.size()}, actions, enc_s);
      while (true) {
        const int a = beh_rng.uniform_int(actions);
        const StepOut so = env->step(a, env_rng);
        const auto sp = env->state();
        encode_all(coder, {sp.data(), sp.size()}, actions, enc_sp);
        tr.x_s = enc_s.state;
        tr.x_sp = enc_sp.state;
        tr.action = a;
        tr.reward = so.reward;
        tr.gamma_s = cfg.gamma;
        tr.gamma_sp = so.done ? 0.0 : cfg.gamma;
        driver->step(tr, enc_s, enc_sp);
        ++out.total_steps;
        if (driver->diverged()) {
          out.diverged = true;
          break;
        }
        std::swap(enc_s, enc_sp);
        if (so.done) break;
      }
      if (out.diverged) break;
      const long long done = ep + 1;
      while (next_ck <= points && done == episodes_at(next_ck)) {
        eval_checkpoint(next_ck, done);
        ++next_ck;
      }
    }
    // A diverged run stops training; every remaining checkpoint is flagged.
    for (; next_ck <= points; ++next_ck) {
      RunRecord rec;
      rec.config_id = id;
      rec.run_seed = run_seed;
      rec.run = run_index;
      rec.checkpoint = next_ck;
      rec.episodes_done = episodes_at(next_ck);
      rec.mean_return = kNan;
      rec.stderr_return = kNan;
      rec.diverged = true;
      out.records.push_back(std::move(rec));
    }
  }

  if (cfg.save_weights) driver->collect_weights(out.weights);
  out.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SweepGrid SweepGrid::default_grid(Algorithm a) {
  const std::vector<double> steps = {1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1, 0.5, 1.0};
  SweepGrid g;
  g.alpha_v = steps;
  g.alpha_w = {0.0};
  g.alpha_u = {0.1};
  g.tau = {1.0};
  g.lambda = {0.0, 0.2, 0.4, 0.6, 0.8, 0.99};
  switch (a) {
    case Algorithm::behavior:
      g = SweepGrid{};
      break;
    case Algorithm::q_lambda:
      g.alpha_u = {0.0};
      break;
    case Algorithm::greedy_gq:
      g.alpha_w.insert(g.alpha_w.end(), steps.begin(), steps.end());
      g.alpha_u = {0.0};
      break;
    case Algorithm::softmax_gq:
      g.alpha_w.insert(g.alpha_w.end(), steps.begin(), steps.end());
      g.alpha_u = {0.0};
      g.tau = {0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0};
      break;
    case Algorithm::offpac:
      g.alpha_w.insert(g.alpha_w.end(), steps.begin(), steps.end());
      g.alpha_u = steps;
      break;
  }
  return g;
}

std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base, const SweepGrid& grid) {
  std::vector<ExperimentConfig> cells;
  if (base.algorithm == Algorithm::behavior) {
    cells.push_back(base);
    return cells;
  }
  for (double av : grid.alpha_v)
    for (double aw : grid.alpha_w)
      for (double au : grid.alpha_u)
        for (double tau : grid.tau)
          for (double lam : grid.lambda) {
            ExperimentConfig c = base;
            c.alpha_v = av;
            c.alpha_w = aw;
            c.alpha_u = au;
            c.tau = tau;
            c.lambda = lam;
            cells.push_back(std::move(c));
          }
  return cells;
}

std::vector<SweepOutcome> run_sweep(const std::vector<ExperimentConfig>& cells,
                                    int parallelism) {
  std::vector<SweepOutcome> out(cells.size());
  if (cells.empty()) return out;

  struct Task {
    std::size_t cell;
    int run;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    out[c].cfg = cells[c];
    for (int r = 0; r < cells[c].num_runs; ++r) tasks.push_back({c, r});
  }
  std::vector<RunOutput> results(tasks.size());
  std::vector<std::string> errors(tasks.size());

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = run_single(cells[tasks[i].cell], tasks[i].run);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  int threads = parallelism > 0 ? parallelism
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    SweepOutcome& cell = out[tasks[i].cell];
    if (!errors[i].empty()) {
      if (cell.error.empty()) cell.error = errors[i];
      continue;
    }
    for (auto& rec : results[i].records) cell.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<CsvRow> to_rows(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  std::vector<CsvRow> rows;
  rows.reserve(records.size());
  for (const RunRecord& r : records) {
    CsvRow row;
    row.config_id = r.config_id;
    row.algorithm = std::string(algorithm_name(cfg.algorithm));
    row.env = cfg.env;
    row.alpha_v = cfg.alpha_v;
    row.alpha_w = cfg.alpha_w;
    row.alpha_u = cfg.alpha_u;
    row.tau = cfg.tau;
    row.lambda = cfg.lambda;
    row.run = r.run;
    row.checkpoint = r.checkpoint;
    row.mean_return = r.mean_return;
    row.stderr_return = r.stderr_return;
    row.diverged = r.diverged;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {
constexpr std::string_view kCsvHeader =
    "config_id,algorithm,env,alpha_v_raw,alpha_w_raw,alpha_u_raw,tau,lambda,run,"
    "checkpoint,mean_return,stderr_return,diverged";
}

void write_rows_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << kCsvHeader << '\n';
  for (const CsvRow& r : rows) {
    os << r.config_id << ',' << r.algorithm << ',' << r.env << ','
       << fmt("%.17g", r.alpha_v) << ',' << fmt("%.17g", r.alpha_w) << ','
       << fmt("%.17g", r.alpha_u) << ',' << fmt("%.17g", r.tau) << ','
       << fmt("%.17g", r.lambda) << ',' << r.run << ',' << r.checkpoint << ','
       << fmt("%.17g", r.mean_return) << ',' << fmt("%.17g", r.stderr_return) << ','
       << (r.diverged ? 1 : 0) << '\n';
  }
}

std::vector<CsvRow> read_rows_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kCsvHeader)
    throw std::runtime_error("results CSV: missing or wrong header");
  std::vector<CsvRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view v = trim(line);
    if (v.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= v.size(); ++i)
      if (i == v.size() || v[i] == ',') {
        f.push_back(v.substr(start, i - start));
        start = i + 1;
      }
    if (f.size() != 13)
      throw std::runtime_error("results CSV line " + std::to_string(lineno) +
                               ": expected 13 fields, got " + std::to_string(f.size()));
    CsvRow r;
    r.config_id = std::string(f[0]);
    r.algorithm = std::string(f[1]);
    r.env = std::string(f[2]);
    r.alpha_v = parse_double(f[3], "alpha_v_raw");
    r.alpha_w = parse_double(f[4], "alpha_w_raw");
    r.alpha_u = parse_double(f[5], "alpha_u_raw");
    r.tau = parse_double(f[6], "tau");
    r.lambda = parse_double(f[7], "lambda");
    r.run = static_cast<int>(parse_int(f[8], "run"));
    r.checkpoint = static_cast<int>(parse_int(f[9], "checkpoint"));
    r.mean_return = parse_double(f[10], "mean_return");
    r.stderr_return = parse_double(f[11], "stderr_return");
    r.diverged = parse_int(f[12], "diverged") != 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

struct CellStats {
  const CsvRow* sample = nullptr;
  int max_checkpoint = 0;
  int total_runs = 0;
  int diverged_runs = 0;
  bool all_clean = false;
  double final_mean = kNan, final_stderr = kNan;
  double overall_mean = kNan, overall_stderr = kNan;
  std::map<int, std::pair<double, double>> curve;  // checkpoint -> (mean, stderr)
};

std::map<std::string, CellStats> aggregate_cells(const std::vector<CsvRow>& rows) {
  std::map<std::string, std::map<int, std::vector<const CsvRow*>>> by_cell_run;
  for (const CsvRow& r : rows) by_cell_run[r.config_id][r.run].push_back(&r);

  std::map<std::string, CellStats> cells;
  for (auto& [id, runs] : by_cell_run) {
    CellStats st;
    st.total_runs = static_cast<int>(runs.size());
    for (auto& [run, rs] : runs) {
      st.sample = rs.front();
      for (const CsvRow* r : rs) st.max_checkpoint = std::max(st.max_checkpoint, r->checkpoint);
    }
    const int tail = std::max(1, st.max_checkpoint / 10);
    std::vector<double> finals, overalls;
    std::map<int, std::vector<double>> per_ck;
    for (auto& [run, rs] : runs) {
      bool clean = true;
      for (const CsvRow* r : rs)
        if (r->diverged || !std::isfinite(r->mean_return)) clean = false;
      if (!clean) {
        ++st.diverged_runs;
        continue;
      }
      std::vector<double> fin, all;
      for (const CsvRow* r : rs) {
        all.push_back(r->mean_return);
        if (r->checkpoint > st.max_checkpoint - tail) fin.push_back(r->mean_return);
        per_ck[r->checkpoint].push_back(r->mean_return);
      }
      finals.push_back(mean_of(fin));
      overalls.push_back(mean_of(all));
    }
    st.all_clean = st.diverged_runs == 0;
    if (!finals.empty()) {
      st.final_mean = mean_of(finals);
      st.final_stderr = stderr_of(finals);
      st.overall_mean = mean_of(overalls);
      st.overall_stderr = stderr_of(overalls);
      for (auto& [ck, vals] : per_ck) st.curve[ck] = {mean_of(vals), stderr_of(vals)};
    }
    cells.emplace(id, std::move(st));
  }
  return cells;
}

}  // namespace

BestCell select_best(const std::vector<CsvRow>& rows, std::string_view criterion) {
  if (criterion != "final" && criterion != "overall")
    throw std::invalid_argument("criterion must be 'final' or 'overall'");
  if (rows.empty()) throw std::runtime_error("no result rows to select from");
  const auto cells = aggregate_cells(rows);
  BestCell best;
  bool found = false;
  for (const auto& [id, st] : cells) {
    if (!st.all_clean || st.total_runs == st.diverged_runs) continue;
    const double score = criterion == "final" ? st.final_mean : st.overall_mean;
    if (!std::isfinite(score)) continue;
    if (!found || score > best.score) {
      best = {id, score};
      found = true;
    }
  }
  if (!found) throw std::runtime_error("every cell diverged; nothing to select");
  return best;
}

void emit_report(const std::vector<CsvRow>& rows, const std::string& out_dir) {
  if (rows.empty()) throw std::runtime_error("no result rows to report");
  std::filesystem::create_directories(out_dir);
  const auto cells = aggregate_cells(rows);

  std::ofstream summary(out_dir + "/summary.csv", std::ios::trunc);
  if (!summary) throw std::runtime_error("cannot write " + out_dir + "/summary.csv");
  summary << "config_id,algorithm,env,alpha_w_raw,alpha_u_raw,tau,alpha_v_raw,lambda,"
             "final_mean,final_stderr,overall_mean,overall_stderr,runs,diverged_runs\n";
  for (const auto& [id, st] : cells) {
    const CsvRow& s = *st.sample;
    summary << id << ',' << s.algorithm << ',' << s.env << ',' << fmt("%.17g", s.alpha_w)
            << ',' << fmt("%.17g", s.alpha_u) << ',' << fmt("%.17g", s.tau) << ','
            << fmt("%.17g", s.alpha_v) << ',' << fmt("%.17g", s.lambda) << ','
            << fmt("%.17g", st.final_mean) << ',' << fmt("%.17g", st.final_stderr) << ','
            << fmt("%.17g", st.overall_mean) << ',' << fmt("%.17g", st.overall_stderr)
            << ',' << st.total_runs << ',' << st.diverged_runs << '\n';
  }
  summary.close();

  // Best-final cell per (env, algorithm), judged among cells with at least
  // one clean run.
  std::map<std::pair<std::string, std::string>, const CellStats*> best;
  for (const auto& [id, st] : cells) {
    if (!std::isfinite(st.final_mean)) continue;
    const auto key = std::make_pair(st.sample->env, st.sample->algorithm);
    auto it = best.find(key);
    if (it == best.end() || st.final_mean > it->second->final_mean) best[key] = &st;
  }
  for (const auto& [key, st] : best) {
    const std::string path = out_dir + "/curve_" + key.first + "_" + key.second + ".csv";
    std::ofstream curve(path, std::ios::trunc);
    if (!curve) throw std::runtime_error("cannot write " + path);
    curve << "config_id,checkpoint,mean_return,stderr_return\n";
    for (const auto& [ck, ms] : st->curve)
      curve << st->sample->config_id << ',' << ck << ',' << fmt("%.17g", ms.first) << ','
            << fmt("%.17g", ms.second) << '\n';
  }
}

}  // namespace offpac::harness
