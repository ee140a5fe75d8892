#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgds/numkernel.hpp"
#include "lgds/rng.hpp"

namespace lgds {

// A linear Gaussian dynamical system observed through one action vector per
// round: z' = gamma * z + xi with xi ~ N(0, q), and reward <c_a, z> + eta with
// eta ~ N(0, noise_var).
struct LgdsParams {
  Matrix gamma;
  Matrix q;
  double noise_var = 1.0;
  std::vector<Vector> actions;
  double b_c = 0.0;  // known bound on action norms, used by the learner's bonuses

  int dim() const { return static_cast<int>(gamma.rows()); }
  int num_actions() const { return static_cast<int>(actions.size()); }

  // Throws on structural problems (shape mismatches, q not symmetric PSD,
  // noise_var <= 0, ||c_a|| > b_c). Returns human-readable warnings for
  // conditions that degrade experiments but keep the math defined: fewer than
  // two actions, or a transition matrix that is not comfortably stable.
  std::vector<std::string> validate() const;
};

nlohmann::json to_json(const LgdsParams& params);
LgdsParams lgds_params_from_json(const nlohmann::json& j);

// The rotation benchmark family: two coupled 2-d rotation blocks,
//   gamma = [[0.9 R(theta), I], [0, 0.9 R(theta)]],  q = I, noise_var = 1,
// actions (10,0,0,0) and (0,10,0,0), b_c = 10. Every eigenvalue of gamma has
// modulus 0.9 with real part 0.9 cos(theta), so theta moves the system from
// slowly drifting (theta ~ 0) to rapidly oscillating (theta ~ pi) at a fixed
// stability margin.
LgdsParams make_rotation_lgds(double theta);

struct EnvState {
  Vector z;
  std::int64_t t = 0;
  GaussianRng rng;
  Matrix q_factor;  // cached factor of q (+ sampling ridge) for step()
};

struct StepOutcome {
  double reward;       // <c_chosen, z> + eta
  double best_mean;    // max_a <c_a, z> at the same z
  int best_action;
  double chosen_mean;  // <c_chosen, z>
};

// Starts from z = 0 and runs burn_in state transitions so z is (approximately)
// a draw from the stationary law before the learner sees anything.
EnvState init_steady_state(const LgdsParams& params, std::int64_t burn_in, std::uint64_t seed);

// Exact alternative for stable gamma: draws z directly from N(0, Z) where
// Z solves Z = gamma Z gamma^T + q.
EnvState init_stationary_sample(const LgdsParams& params, std::uint64_t seed);

// Z = gamma Z gamma^T + q; the covariance of z under the stationary law.
Matrix stationary_state_covariance(const LgdsParams& params);

// Samples the reward for `action` at the CURRENT state (means are evaluated
// before the transition), then advances the state. The reward noise is shared
// across arms within a round, so best_mean - chosen_mean is the per-round
// regret with the noise cancelled.
StepOutcome step(EnvState& state, const LgdsParams& params, int action);

inline double instantaneous_regret(const StepOutcome& o) { return o.best_mean - o.chosen_mean; }

// Observability Gramian O = gamma^T O gamma + c_a c_a^T for one action; its
// smallest eigenvalue measures how well that action's output direction excites
// the whole state.
Matrix observability_gramian(const LgdsParams& params, int action);

}  // namespace lgds
