#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lgds/environment.hpp"
#include "lgds/numkernel.hpp"

namespace lgds {

// Standard Kalman predictor state for the reward stream: z_hat is the one-step
// state prediction, p its error covariance.
struct KalmanState {
  Vector z_hat;
  Matrix p;
};

// z_hat = 0 with p the stationary state covariance when gamma is stable
// (the correct prior for a burned-in system), else p = q.
KalmanState make_kalman(const LgdsParams& params);

// One filter round under `action`: returns the reward prediction <c_a, z_hat>
// made BEFORE the measurement is absorbed, then updates z_hat and p.
double kalman_update(KalmanState& state, const LgdsParams& params, int action, double reward);

// Filter variant with one FIXED gain per action, all built from a single
// covariance p_bar that upper-bounds every per-action steady-state covariance.
// Fixed gains make the filter's closed loop per action a constant matrix,
// which is what lets reward histories act as linear features downstream.
struct ModifiedKalman {
  Matrix p_bar;
  std::vector<Vector> gains;  // L_a = p_bar c_a / (c_a^T p_bar c_a + noise_var)
  Vector z_hat;
  Matrix p_prime;             // running upper bound on the error covariance
  int dominating_action = -1;       // index of the dominating action, or -1 on fallback
  bool stationary_fallback = false; // true when p_bar is the stationary covariance
};

// Steady-state covariances P_a for every action; returns (index, P) of an
// action whose covariance dominates all others in the PSD order (ties broken
// by smallest index). Throws NoDominatingCovariance when no action qualifies.
std::pair<int, Matrix> compute_p_bar(const LgdsParams& params);

enum class DominanceFallback {
  none,        // propagate NoDominatingCovariance
  stationary,  // use the stationary state covariance Z = gamma Z gamma^T + q
  max_trace,   // use the P_a with the largest trace (no guarantees; diagnostic only)
};

// Builds the fixed-gain filter. When no single action's covariance dominates,
// the `stationary` fallback substitutes the stationary state covariance Z:
// since the covariance map under any gain satisfies g(Z, c) <= gamma Z gamma^T
// + q = Z, the ordering p_bar >= p_prime and closed-loop stability survive,
// which no choice among the P_a themselves can guarantee. A warning is
// appended to *warning when the fallback engages.
ModifiedKalman make_modified_kalman(const LgdsParams& params,
                                    DominanceFallback fallback = DominanceFallback::stationary,
                                    std::string* warning = nullptr);

struct ModifiedPrediction {
  double prediction;    // <c_a, z_hat> before the measurement is absorbed
  double residual_var;  // c_a^T p_prime c_a + noise_var
};

ModifiedPrediction modified_step(ModifiedKalman& mk, const LgdsParams& params, int action,
                                 double reward);

// gamma - gamma L_a c_a^T, the filter's error transition under `action`.
Matrix closed_loop(const LgdsParams& params, const ModifiedKalman& mk, int action);

// Ground-truth regression vector for predicting the reward of `action` from
// the last s rewards observed under the action tuple `code` (oldest first):
// component j is c_a^T (closed loops of code[s-1..j+1]) gamma L_{code[j]}.
Vector true_g(const LgdsParams& params, const ModifiedKalman& mk, const std::vector<int>& code,
              int action);

// Spectral norm of the product of the code's closed loops (newest leftmost);
// bounds the bias that the truncated reward history leaves behind, and decays
// geometrically in the code length for stable loops.
double true_beta_decay(const LgdsParams& params, const ModifiedKalman& mk,
                       const std::vector<int>& code);

}  // namespace lgds
