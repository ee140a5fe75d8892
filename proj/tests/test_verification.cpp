#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lgds/verification.hpp"

using namespace lgds;

namespace {

LgdsParams scalar_system(double noise_var = 1.0) {
  LgdsParams p;
  p.gamma = Matrix::Constant(1, 1, 0.5);
  p.q = Matrix::Identity(1, 1);
  p.noise_var = noise_var;
  p.actions = {Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)};
  p.b_c = 1.0;
  return p;
}

UbssConfig scalar_config(int s) {
  UbssConfig cfg;
  cfg.s = s;
  cfg.lambda = 1.0;
  cfg.delta_e = 0.1;
  cfg.delta_b = 0.1;
  cfg.b_r = 3.0;  // comfortably above sqrt(var X) ~ 1.53 for the scalar system
  cfg.b_g = 1.0;
  cfg.b_c = 1.0;
  return cfg;
}

BoundInputs unit_inputs() {
  BoundInputs in;
  in.sigma_xi = Matrix::Identity(1, 1);
  in.mean_xi_norm = 1.0;
  in.delta = 0.5;
  in.n = 2;
  in.s = 1;
  in.lambda = 1.0;
  in.b_c = 1.0;
  in.b_r = 1.0;
  in.b_g = 1.0;
  return in;
}

}  // namespace

TEST_CASE("finish_coverage: levels, slack, and the pass rule") {
  CoverageReport r = finish_coverage("probe", 400, 40, 0.81);
  CHECK(r.trials == 400);
  CHECK(r.empirical_level == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(r.slack == doctest::Approx(3.0 * std::sqrt(0.81 * 0.19 / 400.0)).epsilon(1e-12));
  CHECK(r.pass);  // 0.9 >= 0.81 - slack

  // Just below the slack boundary fails; at the boundary passes.
  CoverageReport edge = finish_coverage("probe", 400, 400, 0.81);
  CHECK(edge.empirical_level == doctest::Approx(0.0));
  CHECK_FALSE(edge.pass);

  const double slack = 3.0 * std::sqrt(0.81 * 0.19 / 400.0);
  const std::int64_t allowed =
      static_cast<std::int64_t>(std::floor((1.0 - (0.81 - slack)) * 400.0));
  CHECK(finish_coverage("probe", 400, allowed, 0.81).pass);
  CHECK_FALSE(finish_coverage("probe", 400, allowed + 1, 0.81).pass);
}

TEST_CASE("estimate_xi_stats: iid unit-variance rewards give an identity moment matrix") {
  // Zero transition and zero process noise leave pure measurement noise.
  LgdsParams p = scalar_system();
  p.gamma = Matrix::Zero(1, 1);
  p.q = Matrix::Zero(1, 1);
  XiStats stats = estimate_xi_stats(p, cyclic_schedule(2), 2, 2000, 10, 100, 7);
  CHECK(stats.samples > 10000);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double expect = (i == j) ? 1.0 : 0.0;
      CHECK(std::abs(stats.sigma_xi(i, j) - expect) <= 3.0 * stats.sigma_xi_se(i, j) + 1e-9);
    }
  // E|N(0,1)| = sqrt(2/pi) per coordinate; the norm of two iid coordinates
  // has mean sqrt(pi/2)... checked loosely against the Monte Carlo SE.
  CHECK(stats.mean_xi_norm == doctest::Approx(1.2533).epsilon(0.05));

  // Nearly silent system: moments collapse to the sampling-ridge floor
  // (draws pick up a 1e-12 I covariance ridge, i.e. 1e-6-scale rewards).
  LgdsParams quiet = p;
  quiet.noise_var = 1e-30;
  XiStats silent = estimate_xi_stats(quiet, cyclic_schedule(2), 2, 500, 4, 10, 7);
  CHECK(silent.sigma_xi.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(silent.mean_xi_norm < 1e-5);
}

TEST_CASE("estimate_xi_stats: replications agree within their standard errors") {
  LgdsParams p = scalar_system();
  XiStats a = estimate_xi_stats(p, cyclic_schedule(2), 1, 2000, 10, 200, 11);
  XiStats b = estimate_xi_stats(p, cyclic_schedule(2), 1, 2000, 10, 200, 1234);
  CHECK(std::abs(a.sigma_xi(0, 0) - b.sigma_xi(0, 0)) <
        4.0 * (a.sigma_xi_se(0, 0) + b.sigma_xi_se(0, 0)));
  CHECK(std::abs(a.mean_xi_norm - b.mean_xi_norm) < 4.0 * (a.mean_xi_norm_se + b.mean_xi_norm_se));
}

TEST_CASE("model-error coverage meets its nominal level on the scalar system") {
  CoverageReport r = check_model_error_bound(scalar_system(), scalar_config(1), 400, 500, 21);
  CHECK(r.trials == 400);
  CHECK(r.nominal_level == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(r.empirical_level >= r.nominal_level - r.slack);
  CHECK(r.pass);
}

TEST_CASE("prediction coverage meets its nominal level and exports widths") {
  std::vector<double> widths;
  CoverageReport r =
      check_prediction_bound(scalar_system(), scalar_config(1), 400, 500, 23, &widths);
  CHECK(r.pass);
  CHECK(static_cast<int>(widths.size()) == 400);
  for (double w : widths) CHECK(w >= 0.0);
}

TEST_CASE("compute_big_b: frozen value, zero case, monotone growth, no clamp") {
  BoundInputs in = unit_inputs();
  bool clamped = true;
  CHECK(compute_big_b(in, &clamped) == doctest::Approx(9.1527173357521292).epsilon(1e-9));
  CHECK_FALSE(clamped);

  BoundInputs empty = unit_inputs();
  empty.mean_xi_norm = 0.0;
  CHECK(compute_big_b(empty) == doctest::Approx(0.0));

  double prev = 0.0;
  for (std::int64_t n : {2, 10, 100, 10000}) {
    BoundInputs grow = unit_inputs();
    grow.n = n;
    const double value = compute_big_b(grow);
    CHECK(value > prev);
    prev = value;
  }
}

TEST_CASE("width dominance: the closed-form cap covers observed widths") {
  LgdsParams p = scalar_system();
  UbssConfig cfg = scalar_config(1);
  std::vector<double> widths;
  check_prediction_bound(p, cfg, 400, 500, 29, &widths);
  XiStats stats = estimate_xi_stats(p, cyclic_schedule(2), 1, 2000, 10, 200, 31);
  BoundInputs inputs = make_bound_inputs(stats, cfg, 0.1, 500);
  const double big_b = compute_big_b(inputs);
  CoverageReport r = check_width_dominance(big_b, widths, 0.1);
  CHECK(r.nominal_level == doctest::Approx(0.9));
  CHECK(r.pass);

  // A cap of zero is beaten by every positive width.
  CoverageReport none = check_width_dominance(0.0, widths, 0.1);
  CHECK_FALSE(none.pass);
}

TEST_CASE("regret bound: full-budget limit and the identical-arm degeneracy") {
  LgdsParams p = scalar_system();  // two identical arms
  ModifiedKalman mk = make_modified_kalman(p);
  BoundInputs in = unit_inputs();
  in.n = 100;
  in.s = 1;

  // delta -> 1: the bracket forgives everything, leaving the warm-up term
  // plus 2 (n - s) b_c^2 b_r^2 per arm.
  RegretBoundDetail detail;
  const double almost_one = 1.0 - 1e-12;
  const double bound = evaluate_regret_bound(in, p, mk, almost_one, &detail);
  const double expect = 2.0 * in.b_c * in.b_r * 1.0 + 2.0 * 2.0 * 99.0 * 1.0 * 1.0;
  CHECK(bound == doctest::Approx(expect).epsilon(1e-9));
  CHECK(detail.degenerate_denominator);  // identical arms have a zero gap
  CHECK(detail.level_statement == doctest::Approx(std::pow(1e-12, 5)).epsilon(1e-6));
  CHECK(detail.level_bracket == doctest::Approx(std::pow(1e-12, 4)).epsilon(1e-6));

  // The two quoted probability levels genuinely differ at moderate delta.
  RegretBoundDetail mid;
  evaluate_regret_bound(in, p, mk, 0.1, &mid);
  CHECK(mid.level_statement == doctest::Approx(std::pow(0.9, 5)).epsilon(1e-12));
  CHECK(mid.level_bracket == doctest::Approx(std::pow(0.9, 4)).epsilon(1e-12));
  CHECK(mid.level_statement != mid.level_bracket);
  CHECK(mid.warmup == doctest::Approx(2.0 * in.b_c * in.b_r).epsilon(1e-12));
}

TEST_CASE("regret bound: grows with the horizon and stays positive") {
  LgdsParams p = make_rotation_lgds(1.0);
  ModifiedKalman mk = make_modified_kalman(p);
  UbssConfig cfg;
  cfg.s = 1;
  const RecommendedBounds rb = recommended_bounds(p, 1);
  cfg.b_r = rb.b_r;
  cfg.b_g = rb.b_g;
  cfg.b_c = p.b_c;
  XiStats stats = estimate_xi_stats(p, cyclic_schedule(2), 1, 1000, 5, 200, 37);
  double prev = 0.0;
  for (std::int64_t n : {100, 1000, 10000}) {
    BoundInputs in = make_bound_inputs(stats, cfg, 0.1, n);
    const double bound = evaluate_regret_bound(in, p, mk, 0.1);
    CHECK(bound > prev);
    prev = bound;
  }
}

TEST_CASE("filter guarantees hold on scalar and rotation systems") {
  for (const LgdsParams& p : {scalar_system(), make_rotation_lgds(0.9),
                              make_rotation_lgds(1.9634954084936207)}) {
    std::vector<CheckResult> checks = check_filter_guarantees(p, 43, 20, 300);
    REQUIRE_FALSE(checks.empty());
    for (const CheckResult& c : checks) {
      INFO(c.name, " margin ", c.margin);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("recommended_bounds: scalar closed forms and rotation-family scales") {
  // Scalar with a dominating arm: reward scale covers both the stationary
  // reward second moment and the filter's residual variance.
  LgdsParams p = scalar_system();
  RecommendedBounds rb = recommended_bounds(p, 1);
  const double z = 4.0 / 3.0;                      // stationary state variance
  const double resid = 1.1327822185373186 + 1.0;   // c P c + noise at steady state
  CHECK(rb.b_r == doctest::Approx(std::sqrt(std::max(z, resid))).epsilon(1e-9));
  CHECK(rb.b_c == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rb.b_g == doctest::Approx(0.2655644370746374).epsilon(1e-9));

  // Rotation family: the stationary fallback pins b_r to the state scale.
  LgdsParams rot = make_rotation_lgds(1.9634954084936207);
  RecommendedBounds rrb = recommended_bounds(rot, 1);
  CHECK(rrb.b_r == doctest::Approx(std::sqrt(548.826359527627)).epsilon(1e-9));
  CHECK(rrb.b_c == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(rrb.b_g > 0.0);
}
