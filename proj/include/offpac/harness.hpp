#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "offpac/sparse.hpp"
#include "offpac/tile_coder.hpp"

namespace offpac::harness {

enum class Algorithm { behavior, q_lambda, greedy_gq, softmax_gq, offpac };

Algorithm parse_algorithm(std::string_view name);  // throws on unknown name
std::string_view algorithm_name(Algorithm a);

// Step sizes are the raw swept values; the learner divides each by the tile
// coder arity (active features per encoding, 11 by default) exactly once.
struct ExperimentConfig {
  std::string env = "mountain_car";
  Algorithm algorithm = Algorithm::offpac;
  double alpha_v = 0.1;
  double alpha_w = 0.0;
  double alpha_u = 0.1;
  double tau = 1.0;
  double lambda = 0.0;
  double gamma = 0.99;
  int num_episodes = -1;  // -1: per-environment default
  int num_runs = 5;
  int eval_points = 20;
  int eval_episodes = 5;
  std::uint64_t seed = 1;
  TileCoderConfig tiles;      // low/high left empty: use environment bounds
  bool save_weights = false;  // keep final weight vectors in the RunOutput
};

// mountain_car / grid_world: 5000; pendulum: 200 (its episodes are capped
// full-length, so fewer of them make a comparable step budget).
int default_episodes(std::string_view env);
int resolved_episodes(const ExperimentConfig& cfg);

// Comma-free cell identity string: env;algorithm;av=..;aw=..;au=..;tau=..;lam=..
std::string config_id(const ExperimentConfig& cfg);

// Pure (config, run index) -> seed mapping; independent of sweep layout.
std::uint64_t run_seed_for(const ExperimentConfig& cfg, int run_index);

// Flat key=value config text: one pair per line, '#' starts a comment.
// Keys: env, algorithm, alpha_v, alpha_w, alpha_u, tau, lambda, gamma,
// episodes, runs, eval_points, eval_episodes, seed, num_tilings,
// tiles_per_dim, hash_size. Unknown keys and malformed numbers throw.
void apply_key_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
ExperimentConfig load_config_file(const std::string& path);

// State features plus per-action features for one state, reusable buffers.
struct EncodedState {
  SparseFeatures state;
  std::vector<SparseFeatures> per_action;
};

void encode_all(const TileCoder& coder, std::span<const double> s, int num_actions,
                EncodedState& out);

// One evaluation checkpoint of one run. Evaluation episodes are produced
// with learning frozen, on a fresh environment instance, from RNG streams
// derived only from (run seed, checkpoint, episode).
struct RunRecord {
  std::string config_id;
  std::uint64_t run_seed = 0;
  int run = 0;
  int checkpoint = 0;  // 1-based
  long long episodes_done = 0;
  double mean_return = 0.0;
  double stderr_return = 0.0;  // sample stddev of eval returns / sqrt(n)
  std::vector<double> eval_returns;
  bool diverged = false;  // weights left the finite guard before this point
};

struct RunOutput {
  std::vector<RunRecord> records;
  bool diverged = false;
  long long total_steps = 0;
  double wall_clock_s = 0.0;  // informational; excluded from determinism
  // (name, weights) pairs, filled only when cfg.save_weights is set
  std::vector<std::pair<std::string, std::vector<double>>> weights;
};

// Trains one run and evaluates at eval_points evenly spaced checkpoints
// (after episode floor(k N / eval_points), k = 1..eval_points). A diverged
// run stops training and flags every remaining checkpoint. Throws
// std::logic_error if an evaluation block changes any learner weight.
RunOutput run_single(const ExperimentConfig& cfg, int run_index);

struct SweepGrid {
  std::vector<double> alpha_v{0.1};
  std::vector<double> alpha_w{0.0};
  std::vector<double> alpha_u{0.1};
  std::vector<double> tau{1.0};
  std::vector<double> lambda{0.0};

  // The default sweep: step sizes {1e-4, 5e-4, ..., 0.5, 1}, alpha_w also
  // 0, tau {0.01 .. 100}, lambda {0, .2, .4, .6, .8, .99}; axes irrelevant
  // to the algorithm collapse to a single value.
  static SweepGrid default_grid(Algorithm a);
};

// Cartesian product of the grid over the base config (algorithm-specific
// axes only; the others stay at the base values).
std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base, const SweepGrid& grid);

struct SweepOutcome {
  ExperimentConfig cfg;
  std::vector<RunRecord> records;  // num_runs x eval_points, run-major
  std::string error;               // non-empty: cell failed and was skipped
};

// Runs num_runs seeded runs per cell, parallel across (cell, run) tasks.
// Output order is the input cell order regardless of scheduling.
std::vector<SweepOutcome> run_sweep(const std::vector<ExperimentConfig>& cells,
                                    int parallelism);

// Flat results row, one per (cell, run, checkpoint).
struct CsvRow {
  std::string config_id;
  std::string algorithm;
  std::string env;
  double alpha_v = 0.0, alpha_w = 0.0, alpha_u = 0.0;
  double tau = 0.0, lambda = 0.0;
  int run = 0, checkpoint = 0;
  double mean_return = 0.0, stderr_return = 0.0;
  bool diverged = false;
};

std::vector<CsvRow> to_rows(const ExperimentConfig& cfg, const std::vector<RunRecord>& records);
void write_rows_csv(std::ostream& os, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_rows_csv(std::istream& is);  // throws on malformed input

struct BestCell {
  std::string config_id;
  double score = 0.0;
};

// criterion "final": mean return over the last 10% of checkpoints (at least
// one); "overall": mean over all checkpoints. Cells with any diverged or
// non-finite row are skipped; throws if nothing remains.
BestCell select_best(const std::vector<CsvRow>& rows, std::string_view criterion);

// summary.csv (one row per cell: step sizes, lambda, final/overall mean and
// across-run stderr, diverged run count) plus curve_<env>_<algorithm>.csv
// (checkpoint, mean, stderr) for each group's best-final cell. Pure function
// of the rows: regenerating from the same input is byte-identical.
void emit_report(const std::vector<CsvRow>& rows, const std::string& out_dir);

}  // namespace offpac::harness
