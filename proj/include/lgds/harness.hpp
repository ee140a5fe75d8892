#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lgds/baselines.hpp"
#include "lgds/environment.hpp"
#include "lgds/learner.hpp"

namespace lgds {

// One policy to run in an experiment. UBSS bound fields (b_r, b_g, b_c) that
// are <= 0 are auto-filled per system from recommended_bounds before the
// episode starts.
struct UbssSpec {
  UbssConfig cfg;
};
struct UcbSpec {
  double alpha = 1.0;
};
struct SwUcbSpec {
  std::int64_t tau = 500;
  double xi_exp = 0.6;
  double b_scale = 0.0;  // <= 0: adaptive scale (running reward SD)
};
struct RandomSpec {};

using PolicySpec = std::variant<UbssSpec, UcbSpec, SwUcbSpec, RandomSpec>;

// "ubss", "ucb", "swucb", "random"; keys the policy's rng stream and the CSV rows.
std::string policy_label(const PolicySpec& spec);

enum class InitMode { burnin, stationary };

// Optional per-round log for replay oracles and the episode subcommand.
struct EpisodeTrace {
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> best_means;
  std::vector<double> chosen_means;
};

// Runs one policy against one environment for n rounds and returns the
// cumulative (noise-free) regret trajectory. The environment stream depends
// only on (seed, init); the policy stream is additionally keyed by the policy
// label, so algorithms can be added to an experiment without perturbing each
// other's draws while still facing identical state trajectories.
Vector run_episode(const LgdsParams& params, const PolicySpec& spec, std::int64_t n,
                   std::int64_t burn_in, std::uint64_t seed, InitMode init = InitMode::burnin,
                   EpisodeTrace* trace = nullptr, nlohmann::json* agent_dump = nullptr);

struct ExperimentConfig {
  std::vector<double> theta_grid;  // rotation-family sweep points
  double theta = 5.0 * 3.14159265358979323846 / 8.0;  // single-system subcommands
  std::int64_t n = 10000;
  std::int64_t burn_in = 10000;
  int reps = 20;
  std::uint64_t master_seed = 1;
  std::vector<PolicySpec> algorithms;
  std::vector<int> s_values = {1};
  int threads = 0;  // 0: one worker per hardware thread
  std::string normalize_denominator = "comparison";  // or "ubss"
  InitMode init = InitMode::burnin;
  std::optional<LgdsParams> system;  // overrides the rotation family off-sweep

  void validate() const;  // throws ConfigError
};

// Default experiment: UBSS (s=1, auto bounds) against UCB, SW-UCB, and Random.
ExperimentConfig default_experiment();

std::vector<double> make_theta_grid(int steps);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct SweepRow {
  double theta = 0.0;
  std::string algorithm;
  std::optional<int> s;  // UBSS rows carry their window length
  double mean_regret = 0.0;
  double std_err = 0.0;
  double normalized_vs_ubss_pct = 0.0;
};

// Final-regret statistics for every (theta, algorithm) cell of the rotation
// family. Episodes are seeded by (master_seed, theta index, rep), shared
// across algorithms for paired comparisons. The first UBSS entry is the
// normalization reference.
std::vector<SweepRow> theta_sweep(const ExperimentConfig& cfg);

struct DiagnosticsRow {
  double theta = 0.0;
  double min_gramian_eig = 0.0;
  double eig_real_part = 0.0;
};

// Excitation and stability curves of the rotation family: the smallest
// observability-Gramian eigenvalue over both actions, and the largest real
// part among the transition matrix's eigenvalues.
std::vector<DiagnosticsRow> diagnostics_curves(const std::vector<double>& theta_grid);

// UBSS at each window length in cfg.s_values on the same seeds, so the
// comparison across s is paired round for round.
std::vector<SweepRow> s_comparison(const ExperimentConfig& cfg, double theta);

// Runs fn(0..count-1) on a bounded worker pool; results must be written to
// distinct slots by index. Exceptions are rethrown on the calling thread.
// Serial when threads <= 1; identical results either way by construction.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path);
void write_metadata(const ExperimentConfig& cfg, const std::string& subcommand,
                    const std::string& path);

// Full command-line entry point (subcommands sweep, episode, diagnostics,
// verify, s-compare). Returns the process exit code: 0 on success, 2 on
// configuration errors (message on stderr).
int run_cli(int argc, const char* const* argv);

}  // namespace lgds
