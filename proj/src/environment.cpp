#include "lgds/environment.hpp"

#include <cmath>
#include <utility>

namespace lgds {

namespace {

// All Gaussian state noise goes through this factor so that step() and
// sample_gaussian() draw identical values for identical seeds.
Matrix noise_factor(const Matrix& cov) {
  return psd_factor(cov + 1e-12 * Matrix::Identity(cov.rows(), cov.cols()));
}

void check_action(const LgdsParams& params, int action, const char* who) {
  if (action < 0 || action >= params.num_actions()) {
    throw BadActionIndex(std::string(who) + ": action " + std::to_string(action) +
                         " out of range [0, " + std::to_string(params.num_actions()) + ")");
  }
}

}  // namespace

std::vector<std::string> LgdsParams::validate() const {
  if (gamma.rows() != gamma.cols()) {
    throw DimensionMismatch("LgdsParams: gamma must be square");
  }
  const int d = dim();
  if (q.rows() != d || q.cols() != d) {
    throw DimensionMismatch("LgdsParams: q must match gamma's dimension");
  }
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotSymmetric("LgdsParams: q is not symmetric");
  }
  if (min_eig_sym(q) < -1e-9 * scale) {
    throw NotPositiveDefinite("LgdsParams: q is not positive semidefinite");
  }
  if (!(noise_var > 0.0)) {
    throw ConfigError("LgdsParams: noise_var must be positive");
  }
  if (actions.empty()) {
    throw ConfigError("LgdsParams: at least one action required");
  }
  for (std::size_t a = 0; a < actions.size(); ++a) {
    if (actions[a].size() != d) {
      throw DimensionMismatch("LgdsParams: action " + std::to_string(a) + " has size " +
                              std::to_string(actions[a].size()) + ", expected " +
                              std::to_string(d));
    }
    if (b_c > 0.0 && actions[a].norm() > b_c * (1.0 + 1e-9)) {
      throw ConfigError("LgdsParams: action " + std::to_string(a) + " norm " +
                        std::to_string(actions[a].norm()) + " exceeds b_c = " +
                        std::to_string(b_c));
    }
  }

  std::vector<std::string> warnings;
  if (num_actions() < 2) {
    warnings.push_back("only one action: bandit experiments degenerate to pure filtering");
  }
  // Marginally stable systems keep every formula defined but have no
  // stationary law, so burn-in initialization drifts. Warn, don't reject.
  if (!is_schur_stable(gamma * (1.0 - 1e-9))) {
    warnings.push_back("gamma is not comfortably Schur stable; stationary-law "
                       "initialization and Gramian computations may not converge");
  }
  return warnings;
}

nlohmann::json to_json(const LgdsParams& params) {
  nlohmann::json j;
  auto matrix_rows = [](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        row.push_back(m(i, k));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["gamma"] = matrix_rows(params.gamma);
  j["q"] = matrix_rows(params.q);
  j["noise_var"] = params.noise_var;
  nlohmann::json acts = nlohmann::json::array();
  for (const Vector& c : params.actions) {
    nlohmann::json v = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      v.push_back(c(i));
    }
    acts.push_back(std::move(v));
  }
  j["actions"] = std::move(acts);
  j["b_c"] = params.b_c;
  return j;
}

namespace {

// Accepts either nested rows or a flat row-major list of d*d numbers.
Matrix matrix_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string("LgdsParams: '") + key + "' must be a non-empty array");
  }
  if (j.front().is_array()) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (static_cast<Eigen::Index>(j[i].size()) != cols) {
        throw ConfigError(std::string("LgdsParams: ragged rows in '") + key + "'");
      }
      for (Eigen::Index k = 0; k < cols; ++k) {
        m(i, k) = j[i][k].get<double>();
      }
    }
    return m;
  }
  const auto total = static_cast<Eigen::Index>(j.size());
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(double(total))));
  if (side * side != total) {
    throw ConfigError(std::string("LgdsParams: flat '") + key + "' is not a square length");
  }
  Matrix m(side, side);
  for (Eigen::Index i = 0; i < side; ++i) {
    for (Eigen::Index k = 0; k < side; ++k) {
      m(i, k) = j[i * side + k].get<double>();
    }
  }
  return m;
}

}  // namespace

LgdsParams lgds_params_from_json(const nlohmann::json& j) {
  LgdsParams p;
  p.gamma = matrix_from_json(j.at("gamma"), "gamma");
  p.q = matrix_from_json(j.at("q"), "q");
  p.noise_var = j.at("noise_var").get<double>();
  for (const auto& cj : j.at("actions")) {
    Vector c(cj.size());
    for (std::size_t i = 0; i < cj.size(); ++i) {
      c(static_cast<Eigen::Index>(i)) = cj[i].get<double>();
    }
    p.actions.push_back(std::move(c));
  }
  p.b_c = j.value("b_c", 0.0);
  p.validate();
  return p;
}

LgdsParams make_rotation_lgds(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  LgdsParams p;
  p.gamma = Matrix::Zero(4, 4);
  p.gamma.topLeftCorner(2, 2) = 0.9 * r;
  p.gamma.bottomRightCorner(2, 2) = 0.9 * r;
  p.gamma.topRightCorner(2, 2) = Matrix::Identity(2, 2);
  p.q = Matrix::Identity(4, 4);
  p.noise_var = 1.0;
  Vector c1 = Vector::Zero(4);
  Vector c2 = Vector::Zero(4);
  c1(0) = 10.0;
  c2(1) = 10.0;
  p.actions = {c1, c2};
  p.b_c = 10.0;
  return p;
}

EnvState init_steady_state(const LgdsParams& params, std::int64_t burn_in, std::uint64_t seed) {
  EnvState state{Vector::Zero(params.dim()), 0, GaussianRng(seed), noise_factor(params.q)};
  Vector u(params.dim());
  for (std::int64_t i = 0; i < burn_in; ++i) {
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      u(k) = state.rng.normal();
    }
    state.z = params.gamma * state.z + state.q_factor * u;
  }
  return state;
}

EnvState init_stationary_sample(const LgdsParams& params, std::uint64_t seed) {
  EnvState state{Vector::Zero(params.dim()), 0, GaussianRng(seed), noise_factor(params.q)};
  const Matrix z_cov = stationary_state_covariance(params);
  state.z = sample_gaussian(Vector::Zero(params.dim()), z_cov, state.rng);
  return state;
}

Matrix stationary_state_covariance(const LgdsParams& params) {
  // X = A^T X A + W with A = gamma^T gives X = gamma X gamma^T + W.
  return solve_discrete_lyapunov(params.gamma.transpose(), params.q);
}

StepOutcome step(EnvState& state, const LgdsParams& params, int action) {
  check_action(params, action, "step");
  StepOutcome out{};
  out.chosen_mean = params.actions[static_cast<std::size_t>(action)].dot(state.z);
  out.best_action = 0;
  out.best_mean = params.actions[0].dot(state.z);
  for (int a = 1; a < params.num_actions(); ++a) {
    const double mean = params.actions[static_cast<std::size_t>(a)].dot(state.z);
    if (mean > out.best_mean) {
      out.best_mean = mean;
      out.best_action = a;
    }
  }
  out.reward = out.chosen_mean + std::sqrt(params.noise_var) * state.rng.normal();

  Vector u(state.z.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    u(k) = state.rng.normal();
  }
  state.z = params.gamma * state.z + state.q_factor * u;
  state.t += 1;
  return out;
}

Matrix observability_gramian(const LgdsParams& params, int action) {
  check_action(params, action, "observability_gramian");
  const Vector& c = params.actions[static_cast<std::size_t>(action)];
  return solve_discrete_lyapunov(params.gamma, c * c.transpose());
}

}  // namespace lgds
