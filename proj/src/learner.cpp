#include "lgds/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lgds/errors.hpp"

namespace lgds {

RegressionEntry make_entry(const UbssConfig& cfg) {
  RegressionEntry e;
  e.v_inv = Matrix::Identity(cfg.s, cfg.s) / cfg.lambda;
  e.log_det_v = cfg.s * std::log(cfg.lambda);
  e.s_vec = Vector::Zero(cfg.s);
  e.g_hat = Vector::Zero(cfg.s);
  return e;
}

Vector feature_vector(const std::deque<double>& history, int s) {
  if (static_cast<int>(history.size()) < s)
    throw InsufficientHistory("need " + std::to_string(s) + " rewards, have " +
                              std::to_string(history.size()));
  Vector xi(s);
  const size_t start = history.size() - static_cast<size_t>(s);
  for (int j = 0; j < s; ++j) xi(j) = history[start + static_cast<size_t>(j)];
  return xi;
}

double bonus_e(const RegressionEntry& entry, const UbssConfig& cfg) {
  // ln(det V / det lambda I) from the running log-det; never a fresh determinant.
  const double log_ratio = entry.log_det_v - cfg.s * std::log(cfg.lambda);
  const double arg = std::log(1.0 / cfg.delta_e) + 0.5 * log_ratio;
  return std::sqrt(2.0 * cfg.b_r * cfg.b_r * std::max(0.0, arg));
}

double bonus_b(const RegressionEntry& entry, const UbssConfig& cfg) {
  const double tr_v_inv = entry.v_inv.trace();
  // trace(I - lambda v_inv), clamped to absorb -1e-12 float dust.
  const double info = std::max(0.0, static_cast<double>(cfg.s) - cfg.lambda * tr_v_inv);
  return std::sqrt(static_cast<double>(entry.n)) * (cfg.b_c * cfg.b_r / cfg.delta_b) *
             std::sqrt(info) +
         cfg.lambda * std::sqrt(tr_v_inv) * cfg.b_g;
}

double ucb_score(const RegressionEntry& entry, const UbssConfig& cfg, const Vector& xi) {
  const double width = std::sqrt(std::max(0.0, xi.dot(entry.v_inv * xi)));
  return entry.g_hat.dot(xi) + (bonus_e(entry, cfg) + bonus_b(entry, cfg)) * width;
}

UbssAgent::UbssAgent(UbssConfig cfg, int num_actions) : cfg_(std::move(cfg)), k_(num_actions) {
  if (k_ < 1) throw ConfigError("need at least one action");
  if (cfg_.s < 1) throw ConfigError("window length s must be >= 1");
  if (!(cfg_.lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(cfg_.delta_e > 0.0 && cfg_.delta_e < 1.0) || !(cfg_.delta_b > 0.0 && cfg_.delta_b < 1.0))
    throw ConfigError("delta_e and delta_b must lie in (0, 1)");
  if (!(cfg_.b_r > 0.0) || !(cfg_.b_g > 0.0) || !(cfg_.b_c > 0.0))
    throw ConfigError("b_r, b_g, b_c must be > 0");
}

void UbssAgent::check_key(const Code& code, int action) const {
  if (static_cast<int>(code.size()) != cfg_.s)
    throw DimensionMismatch("code length " + std::to_string(code.size()) + " != s = " +
                            std::to_string(cfg_.s));
  for (int a : code)
    if (a < 0 || a >= k_)
      throw BadActionIndex("code entry " + std::to_string(a) + " out of range [0, " +
                           std::to_string(k_) + ")");
  if (action < 0 || action >= k_)
    throw BadActionIndex("action index " + std::to_string(action) + " out of range [0, " +
                         std::to_string(k_) + ")");
}

int UbssAgent::select_action(const Code& code, const Vector& xi, GaussianRng& rng) {
  check_key(code, 0);
  if (xi.size() != cfg_.s) throw DimensionMismatch("feature vector size != s");

  if (cfg_.force_explore_unseen) {
    std::vector<int> unseen;
    for (int a = 0; a < k_; ++a) {
      auto it = table_.find({code, a});
      if (it == table_.end() || it->second.n == 0) unseen.push_back(a);
    }
    if (unseen.size() == 1) return unseen.front();
    if (!unseen.empty())
      return unseen[static_cast<size_t>(rng.uniform_int(static_cast<int>(unseen.size())))];
  }

  const RegressionEntry fresh = make_entry(cfg_);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> ties;
  for (int a = 0; a < k_; ++a) {
    auto it = table_.find({code, a});
    const RegressionEntry& entry = (it == table_.end()) ? fresh : it->second;
    const double score = ucb_score(entry, cfg_, xi);
    if (score > best) {
      best = score;
      ties.assign(1, a);
    } else if (score == best) {
      ties.push_back(a);
    }
  }
  if (ties.size() == 1) return ties.front();
  return ties[static_cast<size_t>(rng.uniform_int(static_cast<int>(ties.size())))];
}

void UbssAgent::update(const Code& code, int action, const Vector& xi, double reward) {
  check_key(code, action);
  if (xi.size() != cfg_.s) throw DimensionMismatch("feature vector size != s");
  auto [it, inserted] = table_.try_emplace({code, action}, RegressionEntry{});
  if (inserted) it->second = make_entry(cfg_);
  RegressionEntry& e = it->second;
  e.n += 1;
  auto [v_inv, dlog] = sherman_morrison_update(e.v_inv, xi);
  e.v_inv = std::move(v_inv);
  e.log_det_v += dlog;
  e.s_vec += reward * xi;
  e.g_hat = e.v_inv * e.s_vec;
}

const RegressionEntry* UbssAgent::find(const Code& code, int action) const {
  auto it = table_.find({code, action});
  return it == table_.end() ? nullptr : &it->second;
}

nlohmann::json UbssAgent::dump() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, e] : table_) {
    nlohmann::json row;
    row["code"] = key.first;
    row["action"] = key.second;
    row["n"] = e.n;
    row["log_det_v"] = e.log_det_v;
    row["g_hat"] = std::vector<double>(e.g_hat.data(), e.g_hat.data() + e.g_hat.size());
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace lgds
