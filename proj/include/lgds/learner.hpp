#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lgds/numkernel.hpp"
#include "lgds/rng.hpp"

namespace lgds {

// Action tuple of length s, oldest first; names the linear model that predicts
// the next reward from the last s rewards.
using Code = std::vector<int>;

struct UbssConfig {
  int s = 1;             // history window length
  double lambda = 1.0;   // ridge regularizer
  double delta_e = 0.1;  // tolerated failure rate of the estimation-error bound
  double delta_b = 0.2;  // tolerated failure rate of the bias bound
  double b_r = 1.0;      // reward-scale bound
  double b_g = 1.0;      // bound on the norm of any true regression vector
  double b_c = 1.0;      // bound on the norm of any action vector
  bool force_explore_unseen = true;  // unseen (code, action) pairs win selection outright
};

// Ridge regression state for one (code, action) pair.
struct RegressionEntry {
  std::int64_t n = 0;      // visits
  Matrix v_inv;            // (lambda I + sum Xi Xi^T)^-1
  double log_det_v = 0.0;  // running ln det V, fed by sherman_morrison_update
  Vector s_vec;            // sum of reward * Xi
  Vector g_hat;            // v_inv * s_vec
};

RegressionEntry make_entry(const UbssConfig& cfg);

// Last s rewards, oldest first. Throws InsufficientHistory when fewer exist.
Vector feature_vector(const std::deque<double>& history, int s);

// Estimation-error radius; grows with the information collected (ln det V).
double bonus_e(const RegressionEntry& entry, const UbssConfig& cfg);

// Bias radius covering what the truncated reward history cannot explain.
double bonus_b(const RegressionEntry& entry, const UbssConfig& cfg);

// Optimistic value of the entry's action at features xi:
// g_hat . xi + (bonus_e + bonus_b) * sqrt(xi^T v_inv xi).
double ucb_score(const RegressionEntry& entry, const UbssConfig& cfg, const Vector& xi);

// Bandit agent holding one lazily allocated regression entry per (code,
// action) pair; at most k^(s+1) entries ever exist.
class UbssAgent {
 public:
  UbssAgent(UbssConfig cfg, int num_actions);

  // Optimistic argmax at features xi under the current code. With
  // force_explore_unseen, any never-updated pair under this code is chosen
  // first (uniformly among them); exact score ties also break uniformly.
  int select_action(const Code& code, const Vector& xi, GaussianRng& rng);

  // Absorb one observed (features, reward) pair into the (code, action) entry.
  void update(const Code& code, int action, const Vector& xi, double reward);

  const RegressionEntry* find(const Code& code, int action) const;
  const std::map<std::pair<Code, int>, RegressionEntry>& table() const { return table_; }
  const UbssConfig& config() const { return cfg_; }
  int num_actions() const { return k_; }

  // Per-entry n, g_hat, log_det_v keyed by code and action, for debugging.
  nlohmann::json dump() const;

 private:
  void check_key(const Code& code, int action) const;

  UbssConfig cfg_;
  int k_;
  std::map<std::pair<Code, int>, RegressionEntry> table_;
};

}  // namespace lgds
