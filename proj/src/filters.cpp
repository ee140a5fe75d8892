#include "lgds/filters.hpp"

#include <cmath>
#include <utility>

#include "lgds/errors.hpp"

namespace lgds {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void check_action(const LgdsParams& params, int action) {
  if (action < 0 || action >= params.num_actions())
    throw BadActionIndex("action index " + std::to_string(action) + " out of range [0, " +
                         std::to_string(params.num_actions()) + ")");
}

}  // namespace

KalmanState make_kalman(const LgdsParams& params) {
  KalmanState state;
  state.z_hat = Vector::Zero(params.dim());
  if (is_schur_stable(params.gamma))
    state.p = stationary_state_covariance(params);
  else
    state.p = params.q;
  return state;
}

double kalman_update(KalmanState& state, const LgdsParams& params, int action, double reward) {
  check_action(params, action);
  const Vector& c = params.actions[static_cast<size_t>(action)];
  const double prediction = c.dot(state.z_hat);
  const Vector pc = state.p * c;
  const double denom = c.dot(pc) + params.noise_var;
  const Vector gain = pc / denom;  // K_t
  state.z_hat = params.gamma * state.z_hat + params.gamma * gain * (reward - prediction);
  state.p = riccati_step(state.p, c, params.gamma, params.q, params.noise_var);
  return prediction;
}

std::pair<int, Matrix> compute_p_bar(const LgdsParams& params) {
  const int k = params.num_actions();
  std::vector<Matrix> covs;
  covs.reserve(static_cast<size_t>(k));
  for (int a = 0; a < k; ++a)
    covs.push_back(steady_state_riccati(params.gamma, params.q, params.actions[static_cast<size_t>(a)],
                                        params.noise_var));
  for (int a = 0; a < k; ++a) {
    bool dominates = true;
    for (int b = 0; b < k && dominates; ++b)
      if (b != a && !psd_geq(covs[static_cast<size_t>(a)], covs[static_cast<size_t>(b)], 1e-8))
        dominates = false;
    if (dominates) return {a, covs[static_cast<size_t>(a)]};
  }
  throw NoDominatingCovariance(
      "no action's steady-state covariance dominates all others in the PSD order");
}

ModifiedKalman make_modified_kalman(const LgdsParams& params, DominanceFallback fallback,
                                    std::string* warning) {
  ModifiedKalman mk;
  try {
    auto [idx, p_bar] = compute_p_bar(params);
    mk.dominating_action = idx;
    mk.p_bar = std::move(p_bar);
  } catch (const NoDominatingCovariance&) {
    if (fallback == DominanceFallback::none) throw;
    mk.dominating_action = -1;
    if (fallback == DominanceFallback::stationary) {
      mk.p_bar = stationary_state_covariance(params);
      mk.stationary_fallback = true;
      if (warning)
        *warning +=
            "no dominating per-action covariance; using the stationary state covariance, "
            "which upper-bounds every per-action steady-state covariance\n";
    } else {  // max_trace
      double best = -1.0;
      for (int a = 0; a < params.num_actions(); ++a) {
        Matrix p = steady_state_riccati(params.gamma, params.q,
                                        params.actions[static_cast<size_t>(a)], params.noise_var);
        if (p.trace() > best) {
          best = p.trace();
          mk.p_bar = std::move(p);
          mk.dominating_action = a;
        }
      }
      if (warning)
        *warning +=
            "no dominating per-action covariance; falling back to the largest-trace covariance "
            "(closed-loop stability is NOT guaranteed)\n";
    }
  }
  mk.gains.reserve(static_cast<size_t>(params.num_actions()));
  for (const Vector& c : params.actions) {
    const Vector pc = mk.p_bar * c;
    mk.gains.push_back(pc / (c.dot(pc) + params.noise_var));
  }
  mk.z_hat = Vector::Zero(params.dim());
  mk.p_prime = mk.p_bar;
  return mk;
}

ModifiedPrediction modified_step(ModifiedKalman& mk, const LgdsParams& params, int action,
                                 double reward) {
  check_action(params, action);
  const Vector& c = params.actions[static_cast<size_t>(action)];
  const Vector& gain = mk.gains[static_cast<size_t>(action)];
  ModifiedPrediction out;
  out.prediction = c.dot(mk.z_hat);
  out.residual_var = c.dot(mk.p_prime * c) + params.noise_var;
  const Vector gl = params.gamma * gain;
  mk.z_hat = params.gamma * mk.z_hat + gl * (reward - out.prediction);
  const Matrix phi = params.gamma - gl * c.transpose();
  mk.p_prime = symmetrized(phi * mk.p_prime * phi.transpose() + params.q +
                           params.noise_var * (gl * gl.transpose()));
  return out;
}

Matrix closed_loop(const LgdsParams& params, const ModifiedKalman& mk, int action) {
  check_action(params, action);
  const Vector& c = params.actions[static_cast<size_t>(action)];
  return params.gamma - (params.gamma * mk.gains[static_cast<size_t>(action)]) * c.transpose();
}

Vector true_g(const LgdsParams& params, const ModifiedKalman& mk, const std::vector<int>& code,
              int action) {
  check_action(params, action);
  const int s = static_cast<int>(code.size());
  Vector g(s);
  // Walk the code newest-to-oldest, accumulating the closed-loop product into
  // `row` so each coefficient costs one matrix-vector product.
  Vector row = params.actions[static_cast<size_t>(action)];
  for (int j = s - 1; j >= 0; --j) {
    check_action(params, code[static_cast<size_t>(j)]);
    const Vector gl = params.gamma * mk.gains[static_cast<size_t>(code[static_cast<size_t>(j)])];
    g(j) = row.dot(gl);
    row = closed_loop(params, mk, code[static_cast<size_t>(j)]).transpose() * row;
  }
  return g;
}

double true_beta_decay(const LgdsParams& params, const ModifiedKalman& mk,
                       const std::vector<int>& code) {
  if (code.empty()) return 1.0;
  Matrix m = Matrix::Identity(params.dim(), params.dim());
  for (int j = static_cast<int>(code.size()) - 1; j >= 0; --j)
    m = m * closed_loop(params, mk, code[static_cast<size_t>(j)]);
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace lgds
