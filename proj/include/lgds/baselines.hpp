#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "lgds/rng.hpp"

namespace lgds {

// Classic UCB1 with an exploration scale; index form mean + alpha sqrt(2 ln t / n).
struct UcbState {
  std::vector<std::int64_t> counts;
  std::vector<double> sums;
  std::int64_t t = 0;
  double alpha = 1.0;
};

UcbState make_ucb(int k, double alpha = 1.0);

// Plays every action once in index order, then the argmax of the UCB index;
// exact ties go to the smallest index.
int ucb_select(const UcbState& state);

void ucb_update(UcbState& state, int action, double reward);

// Sliding-window UCB: statistics over the last tau plays only, so reward
// drift older than the window never pollutes the means. Rewards here are
// unbounded Gaussians, so the classical [0,1] bonus needs a scale: b_scale > 0
// uses that constant, b_scale <= 0 tracks the running reward standard
// deviation (Welford) over ALL rewards and uses it as the scale.
struct SwUcbState {
  int k = 0;
  std::int64_t tau = 500;
  double xi_exp = 0.6;
  double b_scale = 0.0;  // <= 0: adaptive scale from the running reward SD
  std::deque<std::pair<int, double>> window;
  std::int64_t t = 0;
  // Welford accumulator for the adaptive scale.
  std::int64_t welford_n = 0;
  double welford_mean = 0.0;
  double welford_m2 = 0.0;
};

SwUcbState make_swucb(int k, std::int64_t tau = 500, double xi_exp = 0.6, double b_scale = 0.0);

// Any action absent from the window is played first (smallest index); else
// argmax of windowed mean + scale * sqrt(xi_exp ln(min(t, tau)) / window count).
int swucb_select(const SwUcbState& state);

void swucb_update(SwUcbState& state, int action, double reward);

// Running reward standard deviation (1.0 until two rewards exist).
double swucb_scale(const SwUcbState& state);

int random_select(int k, GaussianRng& rng);

}  // namespace lgds
