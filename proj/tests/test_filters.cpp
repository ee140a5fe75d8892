#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lgds/filters.hpp"

using namespace lgds;

namespace {

// Scalar benchmark: gamma 0.5, unit process and measurement noise, one arm.
LgdsParams scalar_system(double noise_var = 1.0) {
  LgdsParams p;
  p.gamma = Matrix::Constant(1, 1, 0.5);
  p.q = Matrix::Identity(1, 1);
  p.noise_var = noise_var;
  p.actions = {Vector::Constant(1, 1.0)};
  p.b_c = 1.0;
  return p;
}

}  // namespace

TEST_CASE("kalman_update: scalar gain, state, and covariance arithmetic") {
  LgdsParams p = scalar_system();
  KalmanState st;
  st.z_hat = Vector::Zero(1);
  st.p = Matrix::Identity(1, 1);
  // K = P c / (c P c + v) = 0.5; z' = gamma (z + K innovation) = 0.5 * 0.5 * 2.
  double prediction = kalman_update(st, p, 0, 2.0);
  CHECK(prediction == doctest::Approx(0.0));
  CHECK(st.z_hat(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st.p(0, 0) == doctest::Approx(1.125).epsilon(1e-12));

  // Zero reward with a zero estimate leaves the estimate at zero.
  KalmanState quiet;
  quiet.z_hat = Vector::Zero(1);
  quiet.p = Matrix::Identity(1, 1);
  kalman_update(quiet, p, 0, 0.0);
  CHECK(quiet.z_hat(0) == doctest::Approx(0.0));

  CHECK_THROWS_AS(kalman_update(st, p, 1, 0.0), BadActionIndex);
}

TEST_CASE("kalman covariance converges to the steady-state fixed point") {
  LgdsParams p = scalar_system();
  KalmanState st = make_kalman(p);
  for (int t = 0; t < 1000; ++t) kalman_update(st, p, 0, 0.3);
  Matrix p_ss = steady_state_riccati(p.gamma, p.q, p.actions[0], p.noise_var);
  CHECK(std::abs(st.p(0, 0) - p_ss(0, 0)) < 1e-8);
  CHECK(p_ss(0, 0) == doctest::Approx(1.1327822185373186).epsilon(1e-10));
}

TEST_CASE("compute_p_bar: single arm, duplicate arms, and the no-dominance case") {
  LgdsParams one = scalar_system();
  auto [idx, p_bar] = compute_p_bar(one);
  CHECK(idx == 0);
  CHECK(p_bar(0, 0) == doctest::Approx(1.1327822185373186).epsilon(1e-10));

  LgdsParams two = scalar_system();
  two.actions.push_back(two.actions[0]);
  auto [idx2, p_bar2] = compute_p_bar(two);
  CHECK(idx2 == 0);  // ties break to the smallest index
  CHECK(p_bar2(0, 0) == doctest::Approx(p_bar(0, 0)).epsilon(1e-12));

  // The rotation family's two orthogonal arms each see a different subspace
  // best, so neither covariance dominates the other.
  LgdsParams rot = make_rotation_lgds(std::numbers::pi / 4.0);
  CHECK_THROWS_AS(compute_p_bar(rot), NoDominatingCovariance);
}

TEST_CASE("make_modified_kalman: fallback engages on the rotation family") {
  LgdsParams rot = make_rotation_lgds(1.9634954084936207);
  std::string warning;
  ModifiedKalman mk = make_modified_kalman(rot, DominanceFallback::stationary, &warning);
  CHECK(mk.stationary_fallback);
  CHECK(mk.dominating_action == -1);
  CHECK_FALSE(warning.empty());
  CHECK((mk.p_bar - stationary_state_covariance(rot)).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(make_modified_kalman(rot, DominanceFallback::none), NoDominatingCovariance);

  // Scalar single-arm case needs no fallback.
  ModifiedKalman mk_s = make_modified_kalman(scalar_system());
  CHECK_FALSE(mk_s.stationary_fallback);
  CHECK(mk_s.dominating_action == 0);
}

TEST_CASE("modified filter: scalar gain, closed loop, and regression target") {
  LgdsParams p = scalar_system();
  ModifiedKalman mk = make_modified_kalman(p);
  CHECK(mk.gains[0](0) == doctest::Approx(0.5311288741492748).epsilon(1e-10));

  Matrix loop = closed_loop(p, mk, 0);
  CHECK(loop(0, 0) == doctest::Approx(0.2344355629253626).epsilon(1e-10));
  CHECK(is_schur_stable(loop));

  Vector g = true_g(p, mk, {0}, 0);
  REQUIRE(g.size() == 1);
  CHECK(g(0) == doctest::Approx(0.2655644370746374).epsilon(1e-10));
}

TEST_CASE("true_g: zero transition kills the target; s = 2 matches re-multiplication") {
  LgdsParams p = scalar_system();
  p.gamma = Matrix::Zero(1, 1);
  ModifiedKalman mk = make_modified_kalman(p);
  CHECK(true_g(p, mk, {0}, 0).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  LgdsParams rot = make_rotation_lgds(1.1);
  ModifiedKalman mkr = make_modified_kalman(rot);
  for (int a = 0; a < 2; ++a) {
    for (const std::vector<int>& code : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
      Vector g = true_g(rot, mkr, code, a);
      REQUIRE(g.size() == 2);
      const Vector& c_a = rot.actions[static_cast<size_t>(a)];
      Matrix gamma_l_new = rot.gamma * mkr.gains[static_cast<size_t>(code[1])];
      Matrix loop_new = closed_loop(rot, mkr, code[1]);
      Matrix gamma_l_old = rot.gamma * mkr.gains[static_cast<size_t>(code[0])];
      // Newest component: c_a^T Gamma L_new. Oldest: c_a^T loop_new Gamma L_old.
      CHECK(g(1) == doctest::Approx((c_a.transpose() * gamma_l_new)(0, 0)).epsilon(1e-12));
      CHECK(g(0) == doctest::Approx((c_a.transpose() * loop_new * gamma_l_old)(0, 0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("true_beta_decay: powers of the scalar loop, non-increasing in depth") {
  LgdsParams p = scalar_system();
  ModifiedKalman mk = make_modified_kalman(p);
  CHECK(true_beta_decay(p, mk, {}) == doctest::Approx(1.0));
  CHECK(true_beta_decay(p, mk, {0, 0, 0}) == doctest::Approx(0.0128845863132298).epsilon(1e-10));

  double prev = 1.0;
  std::vector<int> code;
  for (int s = 1; s <= 6; ++s) {
    code.push_back(0);
    double decay = true_beta_decay(p, mk, code);
    CHECK(decay <= prev + 1e-12);
    prev = decay;
  }
}

TEST_CASE("running covariance bound and residual cap hold along random sequences") {
  LgdsParams rot = make_rotation_lgds(2.4);
  ModifiedKalman mk = make_modified_kalman(rot);
  GaussianRng rng(99);
  EnvState env = init_steady_state(rot, 500, 99);
  for (int t = 0; t < 1000; ++t) {
    const int a = rng.uniform_int(2);
    const double cap =
        rot.actions[static_cast<size_t>(a)].dot(mk.p_bar * rot.actions[static_cast<size_t>(a)]) +
        rot.noise_var;
    StepOutcome o = step(env, rot, a);
    ModifiedPrediction pred = modified_step(mk, rot, a, o.reward);
    CHECK(pred.residual_var <= cap + 1e-9);
    CHECK(psd_geq(mk.p_bar, mk.p_prime, 1e-6));
  }
}

TEST_CASE("prediction quality: exact filter beats fixed gains, both beat no filter") {
  LgdsParams rot = make_rotation_lgds(1.9634954084936207);
  Matrix z_cov = stationary_state_covariance(rot);

  const int steps = 20000;
  double kalman_se = 0.0, modified_se = 0.0, raw_se = 0.0;
  double kalman_se_sq = 0.0, modified_se_sq = 0.0, raw_se_sq = 0.0;
  KalmanState kf = make_kalman(rot);
  ModifiedKalman mk = make_modified_kalman(rot);
  EnvState env = init_steady_state(rot, 2000, 31);
  GaussianRng actions(32);
  for (int t = 0; t < steps; ++t) {
    const int a = actions.uniform_int(2);
    StepOutcome o = step(env, rot, a);
    const double kp = kalman_update(kf, rot, a, o.reward);
    const ModifiedPrediction mp = modified_step(mk, rot, a, o.reward);
    const double k_err = (o.reward - kp) * (o.reward - kp);
    const double m_err = (o.reward - mp.prediction) * (o.reward - mp.prediction);
    const double r_err = o.reward * o.reward;  // predicting the stationary mean 0
    kalman_se += k_err;
    modified_se += m_err;
    raw_se += r_err;
    kalman_se_sq += k_err * k_err;
    modified_se_sq += m_err * m_err;
    raw_se_sq += r_err * r_err;
  }
  const double k_mse = kalman_se / steps;
  const double m_mse = modified_se / steps;
  const double raw_mse = raw_se / steps;
  auto se = [&](double sum, double sum_sq) {
    const double mean = sum / steps;
    return std::sqrt((sum_sq / steps - mean * mean) / steps);
  };
  // Exact gains <= fixed gains <= variance of the reward itself, with slack
  // of three standard errors on each comparison.
  CHECK(k_mse <= m_mse + 3.0 * (se(kalman_se, kalman_se_sq) + se(modified_se, modified_se_sq)));
  CHECK(m_mse <= raw_mse + 3.0 * (se(modified_se, modified_se_sq) + se(raw_se, raw_se_sq)));
  const double var_x = rot.actions[0].dot(z_cov * rot.actions[0]) + rot.noise_var;
  CHECK(raw_mse < 1.5 * var_x);
}

TEST_CASE("fixed-schedule regression recovers the true coefficients") {
  // Small measurement noise keeps the truncated history's leftover bias well
  // under the 5% acceptance band for the slope estimate.
  LgdsParams p = scalar_system(0.01);
  ModifiedKalman mk = make_modified_kalman(p);
  Vector g = true_g(p, mk, {0}, 0);

  EnvState env = init_steady_state(p, 1000, 77);
  const int n = 100000;
  double sxx = 0.0, sxy = 0.0;
  double prev = step(env, p, 0).reward;
  for (int t = 1; t < n; ++t) {
    const double x = step(env, p, 0).reward;
    sxx += prev * prev;
    sxy += prev * x;
    prev = x;
  }
  const double slope = sxy / sxx;
  CHECK(std::abs(slope - g(0)) < 0.05 * std::abs(g(0)));
}
