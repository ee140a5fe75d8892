#include "lgds/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lgds/errors.hpp"

namespace lgds {

namespace {

void check_action(int k, int action) {
  if (action < 0 || action >= k)
    throw BadActionIndex("action index " + std::to_string(action) + " out of range [0, " +
                         std::to_string(k) + ")");
}

}  // namespace

UcbState make_ucb(int k, double alpha) {
  if (k < 1) throw ConfigError("need at least one action");
  UcbState state;
  state.counts.assign(static_cast<size_t>(k), 0);
  state.sums.assign(static_cast<size_t>(k), 0.0);
  state.alpha = alpha;
  return state;
}

int ucb_select(const UcbState& state) {
  const int k = static_cast<int>(state.counts.size());
  if (state.t < k) return static_cast<int>(state.t);  // warm-start, index order
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a) {
    const double n = static_cast<double>(state.counts[static_cast<size_t>(a)]);
    const double mean = state.sums[static_cast<size_t>(a)] / n;
    const double score =
        mean + state.alpha * std::sqrt(2.0 * std::log(static_cast<double>(state.t)) / n);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

void ucb_update(UcbState& state, int action, double reward) {
  check_action(static_cast<int>(state.counts.size()), action);
  state.counts[static_cast<size_t>(action)] += 1;
  state.sums[static_cast<size_t>(action)] += reward;
  state.t += 1;
}

SwUcbState make_swucb(int k, std::int64_t tau, double xi_exp, double b_scale) {
  if (k < 1) throw ConfigError("need at least one action");
  if (tau < 1) throw ConfigError("window length tau must be >= 1");
  SwUcbState state;
  state.k = k;
  state.tau = tau;
  state.xi_exp = xi_exp;
  state.b_scale = b_scale;
  return state;
}

double swucb_scale(const SwUcbState& state) {
  if (state.b_scale > 0.0) return state.b_scale;
  if (state.welford_n < 2) return 1.0;
  return std::sqrt(state.welford_m2 / static_cast<double>(state.welford_n - 1));
}

int swucb_select(const SwUcbState& state) {
  std::vector<std::int64_t> counts(static_cast<size_t>(state.k), 0);
  std::vector<double> sums(static_cast<size_t>(state.k), 0.0);
  for (const auto& [a, r] : state.window) {
    counts[static_cast<size_t>(a)] += 1;
    sums[static_cast<size_t>(a)] += r;
  }
  for (int a = 0; a < state.k; ++a)
    if (counts[static_cast<size_t>(a)] == 0) return a;

  const double horizon = static_cast<double>(std::min(state.t, state.tau));
  const double scale = swucb_scale(state);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < state.k; ++a) {
    const double n = static_cast<double>(counts[static_cast<size_t>(a)]);
    const double mean = sums[static_cast<size_t>(a)] / n;
    const double score = mean + scale * std::sqrt(state.xi_exp * std::log(horizon) / n);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

void swucb_update(SwUcbState& state, int action, double reward) {
  check_action(state.k, action);
  state.window.emplace_back(action, reward);
  while (static_cast<std::int64_t>(state.window.size()) > state.tau) state.window.pop_front();
  state.t += 1;
  state.welford_n += 1;
  const double d = reward - state.welford_mean;
  state.welford_mean += d / static_cast<double>(state.welford_n);
  state.welford_m2 += d * (reward - state.welford_mean);
}

int random_select(int k, GaussianRng& rng) {
  if (k < 1) throw ConfigError("need at least one action");
  return rng.uniform_int(k);
}

}  // namespace lgds
