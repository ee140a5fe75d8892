#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lgds/environment.hpp"

using namespace lgds;

namespace {

// Two-arm scalar system used where the rotation family is overkill.
LgdsParams scalar_two_arm() {
  LgdsParams p;
  p.gamma = Matrix::Constant(1, 1, 0.5);
  p.q = Matrix::Identity(1, 1);
  p.noise_var = 1.0;
  p.actions = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  p.b_c = 1.0;
  return p;
}

}  // namespace

TEST_CASE("make_rotation_lgds: block structure at theta = 0 and pi/2") {
  LgdsParams at0 = make_rotation_lgds(0.0);
  Matrix expect(4, 4);
  expect << 0.9, 0, 1, 0, 0, 0.9, 0, 1, 0, 0, 0.9, 0, 0, 0, 0, 0.9;
  CHECK((at0.gamma - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(at0.q.isApprox(Matrix::Identity(4, 4), 1e-12));
  CHECK(at0.noise_var == doctest::Approx(1.0));
  CHECK(at0.b_c == doctest::Approx(10.0));

  LgdsParams at90 = make_rotation_lgds(std::numbers::pi / 2.0);
  CHECK(at90.gamma(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(at90.gamma(0, 1) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(at90.gamma(1, 0) == doctest::Approx(-0.9).epsilon(1e-12));
  CHECK(at90.gamma(1, 1) == doctest::Approx(0.0).epsilon(1e-12));

  for (double theta : {0.0, 1.1, 2.9}) {
    LgdsParams p = make_rotation_lgds(theta);
    REQUIRE(p.num_actions() == 2);
    CHECK(p.actions[0].norm() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(p.actions[1].norm() == doctest::Approx(10.0).epsilon(1e-12));
  }
}

TEST_CASE("rotation transitions keep eigenvalue modulus 0.9 at every angle") {
  for (double theta : {0.0, 0.7, 1.9634954084936207, 3.0}) {
    LgdsParams p = make_rotation_lgds(theta);
    CHECK(is_schur_stable(p.gamma));
    // Scaling past the unit circle must break stability: modulus is exactly 0.9.
    CHECK_FALSE(is_schur_stable(p.gamma * ((1.0 + 1e-6) / 0.9)));
  }
}

TEST_CASE("validate: structural errors throw, soft conditions only warn") {
  LgdsParams good = scalar_two_arm();
  CHECK(good.validate().empty());

  LgdsParams bad_noise = good;
  bad_noise.noise_var = 0.0;
  CHECK_THROWS_AS(bad_noise.validate(), ConfigError);

  LgdsParams bad_norm = good;
  bad_norm.b_c = 0.5;  // smaller than the actual action norms
  CHECK_THROWS_AS(bad_norm.validate(), ConfigError);

  LgdsParams bad_shape = good;
  bad_shape.actions[0] = Vector::Zero(3);
  CHECK_THROWS_AS(bad_shape.validate(), DimensionMismatch);

  LgdsParams asym_q = good;
  asym_q.q = Matrix(1, 1);
  asym_q.q << 1;
  asym_q.gamma = Matrix::Zero(1, 1);
  CHECK(asym_q.validate().empty());

  LgdsParams one_arm = good;
  one_arm.actions.pop_back();
  CHECK_FALSE(one_arm.validate().empty());  // warning, not an error

  LgdsParams unstable = good;
  unstable.gamma = Matrix::Constant(1, 1, 1.5);
  CHECK_FALSE(unstable.validate().empty());
}

TEST_CASE("JSON round trip preserves every field") {
  LgdsParams p = make_rotation_lgds(1.3);
  LgdsParams back = lgds_params_from_json(to_json(p));
  CHECK((back.gamma - p.gamma).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((back.q - p.q).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(back.noise_var == doctest::Approx(p.noise_var));
  CHECK(back.b_c == doctest::Approx(p.b_c));
  REQUIRE(back.num_actions() == p.num_actions());
  for (int a = 0; a < p.num_actions(); ++a)
    CHECK(back.actions[static_cast<size_t>(a)].isApprox(p.actions[static_cast<size_t>(a)], 0.0));
}

TEST_CASE("init_steady_state: burn_in 0 is the origin; fixed seed reproduces") {
  LgdsParams p = scalar_two_arm();
  EnvState zero = init_steady_state(p, 0, 7);
  CHECK(zero.z.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(zero.t == 0);

  EnvState a = init_steady_state(p, 500, 7);
  EnvState b = init_steady_state(p, 500, 7);
  CHECK(a.z.isApprox(b.z, 0.0));
  CHECK(a.t == 0);
}

TEST_CASE("burn-in reaches the stationary state law") {
  const double theta = std::numbers::pi / 4.0;
  LgdsParams p = make_rotation_lgds(theta);
  Matrix z_cov = stationary_state_covariance(p);
  // Per-coordinate variance across many independently burned-in draws.
  const int seeds = 1000;
  Vector sum = Vector::Zero(4), sum_sq = Vector::Zero(4);
  for (int i = 0; i < seeds; ++i) {
    EnvState st = init_steady_state(p, 10000, 1000 + static_cast<std::uint64_t>(i));
    sum += st.z;
    sum_sq += st.z.cwiseProduct(st.z);
  }
  for (int j = 0; j < 4; ++j) {
    const double mean = sum(j) / seeds;
    const double var = sum_sq(j) / seeds - mean * mean;
    CHECK(std::abs(var - z_cov(j, j)) < 0.15 * z_cov(j, j));
  }
}

TEST_CASE("init_stationary_sample matches the stationary law too") {
  LgdsParams p = make_rotation_lgds(2.2);
  Matrix z_cov = stationary_state_covariance(p);
  const int seeds = 1000;
  Vector sum = Vector::Zero(4), sum_sq = Vector::Zero(4);
  for (int i = 0; i < seeds; ++i) {
    EnvState st = init_stationary_sample(p, 500 + static_cast<std::uint64_t>(i));
    sum += st.z;
    sum_sq += st.z.cwiseProduct(st.z);
  }
  for (int j = 0; j < 4; ++j) {
    const double mean = sum(j) / seeds;
    const double var = sum_sq(j) / seeds - mean * mean;
    CHECK(std::abs(var - z_cov(j, j)) < 0.15 * z_cov(j, j));
  }
}

TEST_CASE("step: rewards, bests, and regret are read off the pre-transition state") {
  LgdsParams p = make_rotation_lgds(0.0);
  EnvState st = init_steady_state(p, 0, 3);
  st.z << 1, 2, 0, 0;
  StepOutcome o = step(st, p, 0);
  CHECK(o.chosen_mean == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(o.best_mean == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(o.best_action == 1);
  CHECK(instantaneous_regret(o) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(st.t == 1);  // state advanced

  CHECK_THROWS_AS(step(st, p, 2), BadActionIndex);
  CHECK_THROWS_AS(step(st, p, -1), BadActionIndex);
}

TEST_CASE("step: same seed gives the identical trajectory, regret never negative") {
  LgdsParams p = make_rotation_lgds(1.9634954084936207);
  EnvState a = init_steady_state(p, 200, 11);
  EnvState b = init_steady_state(p, 200, 11);
  for (int t = 0; t < 200; ++t) {
    StepOutcome oa = step(a, p, t % 2);
    StepOutcome ob = step(b, p, t % 2);
    CHECK(oa.reward == ob.reward);
    CHECK(oa.best_mean == ob.best_mean);
    CHECK(instantaneous_regret(oa) >= 0.0);
    CHECK(oa.best_mean >= oa.chosen_mean);
  }
}

TEST_CASE("reward noise is shared across arms within a round") {
  // Chosen reward minus chosen mean recovers the noise; replaying the other
  // arm at the same state must shift the reward by exactly the mean gap.
  LgdsParams p = scalar_two_arm();
  EnvState a = init_steady_state(p, 50, 17);
  EnvState b = init_steady_state(p, 50, 17);
  for (int t = 0; t < 50; ++t) {
    StepOutcome oa = step(a, p, 0);
    StepOutcome ob = step(b, p, 1);
    CHECK(oa.reward - oa.chosen_mean == doctest::Approx(ob.reward - ob.chosen_mean).epsilon(1e-12));
  }
}

TEST_CASE("long-run reward variance matches the stationary prediction") {
  LgdsParams p = make_rotation_lgds(1.9634954084936207);
  Matrix z_cov = stationary_state_covariance(p);
  const Vector& c = p.actions[0];
  const double predicted = c.dot(z_cov * c) + p.noise_var;
  CHECK(predicted == doctest::Approx(26916.002186907663).epsilon(1e-9));

  EnvState st = init_steady_state(p, 10000, 29);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < n; ++t) {
    StepOutcome o = step(st, p, 0);
    sum += o.reward;
    sum_sq += o.reward * o.reward;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(var - predicted) < 0.10 * predicted);
}

TEST_CASE("observability_gramian: closed forms and residual") {
  // gamma = 0 leaves just the rank-one outer product.
  LgdsParams p = scalar_two_arm();
  p.gamma = Matrix::Zero(1, 1);
  CHECK(observability_gramian(p, 0)(0, 0) == doctest::Approx(1.0).epsilon(1e-10));

  // Scalar 0.5 with c = 1: geometric series 1 / (1 - 0.25).
  LgdsParams ps = scalar_two_arm();
  CHECK(observability_gramian(ps, 0)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));

  LgdsParams rot = make_rotation_lgds(0.0);
  Matrix o = observability_gramian(rot, 0);
  Matrix c_outer = rot.actions[0] * rot.actions[0].transpose();
  CHECK((o - rot.gamma.transpose() * o * rot.gamma - c_outer).cwiseAbs().maxCoeff() < 1e-8);
}
