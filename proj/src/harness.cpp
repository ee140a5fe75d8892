#include "lgds/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <thread>
#include <utility>

#include <CLI11.hpp>

#include "lgds/errors.hpp"
#include "lgds/filters.hpp"
#include "lgds/verification.hpp"
#include "toml_lite.hpp"

#ifndef LGDS_VERSION
#define LGDS_VERSION "unversioned"
#endif

namespace lgds {

namespace {

constexpr std::uint64_t kEnvTag = 0x456E76;     // "Env"
constexpr std::uint64_t kPolicyTag = 0x506F6C;  // "Pol"
constexpr double kPi = 3.14159265358979323846;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string policy_label(const PolicySpec& spec) {
  if (std::holds_alternative<UbssSpec>(spec)) return "ubss";
  if (std::holds_alternative<UcbSpec>(spec)) return "ucb";
  if (std::holds_alternative<SwUcbSpec>(spec)) return "swucb";
  return "random";
}

Vector run_episode(const LgdsParams& params, const PolicySpec& spec, std::int64_t n,
                   std::int64_t burn_in, std::uint64_t seed, InitMode init, EpisodeTrace* trace,
                   nlohmann::json* agent_dump) {
  params.validate();
  if (n < 1) throw ConfigError("episode length n must be >= 1");
  const std::uint64_t env_seed = mix_seed({seed, kEnvTag});
  const std::uint64_t policy_seed = mix_seed({seed, kPolicyTag, fnv1a(policy_label(spec))});
  EnvState env = init == InitMode::burnin ? init_steady_state(params, burn_in, env_seed)
                                          : init_stationary_sample(params, env_seed);
  GaussianRng policy_rng(policy_seed);
  const int k = params.num_actions();

  Vector cum(n);
  double total = 0.0;
  if (trace) {
    trace->actions.clear();
    trace->rewards.clear();
    trace->best_means.clear();
    trace->chosen_means.clear();
    trace->actions.reserve(static_cast<size_t>(n));
    trace->rewards.reserve(static_cast<size_t>(n));
    trace->best_means.reserve(static_cast<size_t>(n));
    trace->chosen_means.reserve(static_cast<size_t>(n));
  }
  auto record = [&](std::int64_t t, int action, const StepOutcome& o) {
    total += instantaneous_regret(o);
    cum(t) = total;
    if (trace) {
      trace->actions.push_back(action);
      trace->rewards.push_back(o.reward);
      trace->best_means.push_back(o.best_mean);
      trace->chosen_means.push_back(o.chosen_mean);
    }
  };

  if (const UbssSpec* u = std::get_if<UbssSpec>(&spec)) {
    UbssConfig cfg = u->cfg;
    if (cfg.b_r <= 0.0 || cfg.b_g <= 0.0 || cfg.b_c <= 0.0) {
      const RecommendedBounds rb = recommended_bounds(params, cfg.s);
      if (cfg.b_r <= 0.0) cfg.b_r = rb.b_r;
      if (cfg.b_g <= 0.0) cfg.b_g = rb.b_g;
      if (cfg.b_c <= 0.0) cfg.b_c = params.b_c > 0.0 ? params.b_c : rb.b_c;
    }
    UbssAgent agent(cfg, k);
    std::deque<double> history;
    std::deque<int> past_actions;
    Code code;
    Vector xi;
    for (std::int64_t t = 0; t < n; ++t) {
      const bool full = t >= cfg.s;
      int a;
      if (full) {
        code.assign(past_actions.end() - cfg.s, past_actions.end());
        xi = feature_vector(history, cfg.s);
        a = agent.select_action(code, xi, policy_rng);
      } else {
        a = policy_rng.uniform_int(k);  // warm-up: no full reward window yet
      }
      const StepOutcome o = step(env, params, a);
      record(t, a, o);
      history.push_back(o.reward);
      past_actions.push_back(a);
      if (full) agent.update(code, a, xi, o.reward);
      while (static_cast<int>(history.size()) > cfg.s + 1) {
        history.pop_front();
        past_actions.pop_front();
      }
    }
    if (agent_dump) *agent_dump = agent.dump();
  } else if (const UcbSpec* u = std::get_if<UcbSpec>(&spec)) {
    UcbState st = make_ucb(k, u->alpha);
    for (std::int64_t t = 0; t < n; ++t) {
      const int a = ucb_select(st);
      const StepOutcome o = step(env, params, a);
      record(t, a, o);
      ucb_update(st, a, o.reward);
    }
  } else if (const SwUcbSpec* u = std::get_if<SwUcbSpec>(&spec)) {
    SwUcbState st = make_swucb(k, u->tau, u->xi_exp, u->b_scale);
    for (std::int64_t t = 0; t < n; ++t) {
      const int a = swucb_select(st);
      const StepOutcome o = step(env, params, a);
      record(t, a, o);
      swucb_update(st, a, o.reward);
    }
  } else {
    for (std::int64_t t = 0; t < n; ++t) {
      const int a = random_select(k, policy_rng);
      const StepOutcome o = step(env, params, a);
      record(t, a, o);
    }
  }
  return cum;
}

void ExperimentConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (algorithms.empty()) throw ConfigError("no algorithms configured");
  if (s_values.empty()) throw ConfigError("s_values must not be empty");
  for (int s : s_values) {
    if (s < 1) throw ConfigError("window lengths must be >= 1");
    if (n <= s) throw ConfigError("n must exceed every window length");
  }
  if (normalize_denominator != "comparison" && normalize_denominator != "ubss")
    throw ConfigError("normalize_denominator must be 'comparison' or 'ubss'");
  for (const PolicySpec& spec : algorithms) {
    if (const UbssSpec* u = std::get_if<UbssSpec>(&spec)) {
      if (u->cfg.s < 1) throw ConfigError("ubss window length s must be >= 1");
      if (n <= u->cfg.s) throw ConfigError("n must exceed the ubss window length");
      if (!(u->cfg.lambda > 0.0)) throw ConfigError("lambda must be > 0");
      if (!(u->cfg.delta_e > 0.0 && u->cfg.delta_e < 1.0) ||
          !(u->cfg.delta_b > 0.0 && u->cfg.delta_b < 1.0))
        throw ConfigError("delta_e and delta_b must lie in (0, 1)");
    } else if (const SwUcbSpec* w = std::get_if<SwUcbSpec>(&spec)) {
      if (w->tau < 1) throw ConfigError("tau must be >= 1");
    }
  }
  if (system) {
    for (const std::string& warning : system->validate()) (void)warning;
  }
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.theta_grid = make_theta_grid(16);
  UbssSpec ubss;
  ubss.cfg.b_r = 0.0;  // auto-fill from the true system
  ubss.cfg.b_g = 0.0;
  ubss.cfg.b_c = 0.0;
  cfg.algorithms = {PolicySpec{ubss}, PolicySpec{UcbSpec{}}, PolicySpec{SwUcbSpec{}},
                    PolicySpec{RandomSpec{}}};
  return cfg;
}

std::vector<double> make_theta_grid(int steps) {
  if (steps < 1) throw ConfigError("theta-steps must be >= 1");
  std::vector<double> grid(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i)
    grid[static_cast<size_t>(i)] = 2.0 * kPi * static_cast<double>(i) / steps;
  return grid;
}

namespace {

nlohmann::json policy_to_json(const PolicySpec& spec) {
  nlohmann::json j{{"name", policy_label(spec)}};
  if (const UbssSpec* u = std::get_if<UbssSpec>(&spec)) {
    j["s"] = u->cfg.s;
    j["lambda"] = u->cfg.lambda;
    j["delta_e"] = u->cfg.delta_e;
    j["delta_b"] = u->cfg.delta_b;
    j["b_r"] = u->cfg.b_r;
    j["b_g"] = u->cfg.b_g;
    j["b_c"] = u->cfg.b_c;
    j["force_explore_unseen"] = u->cfg.force_explore_unseen;
  } else if (const UcbSpec* u = std::get_if<UcbSpec>(&spec)) {
    j["alpha"] = u->alpha;
  } else if (const SwUcbSpec* u = std::get_if<SwUcbSpec>(&spec)) {
    j["tau"] = u->tau;
    j["xi_exp"] = u->xi_exp;
    j["b_scale"] = u->b_scale;
  }
  return j;
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* name : allowed)
      if (key == name) ok = true;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

PolicySpec policy_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("name"))
    throw ConfigError("each algorithm entry needs a 'name'");
  const std::string name = j.at("name").get<std::string>();
  if (name == "ubss") {
    check_keys(j,
               {"name", "s", "lambda", "delta", "delta_e", "delta_b", "b_r", "b_g", "b_c",
                "force_explore_unseen"},
               "ubss algorithm entry");
    UbssSpec u;
    u.cfg.b_r = 0.0;
    u.cfg.b_g = 0.0;
    u.cfg.b_c = 0.0;
    u.cfg.s = j.value("s", u.cfg.s);
    u.cfg.lambda = j.value("lambda", u.cfg.lambda);
    if (j.contains("delta")) {
      u.cfg.delta_e = j.at("delta").get<double>();
      u.cfg.delta_b = u.cfg.delta_e;
    }
    u.cfg.delta_e = j.value("delta_e", u.cfg.delta_e);
    u.cfg.delta_b = j.value("delta_b", u.cfg.delta_b);
    u.cfg.b_r = j.value("b_r", u.cfg.b_r);
    u.cfg.b_g = j.value("b_g", u.cfg.b_g);
    u.cfg.b_c = j.value("b_c", u.cfg.b_c);
    u.cfg.force_explore_unseen = j.value("force_explore_unseen", u.cfg.force_explore_unseen);
    return u;
  }
  if (name == "ucb") {
    check_keys(j, {"name", "alpha"}, "ucb algorithm entry");
    UcbSpec u;
    u.alpha = j.value("alpha", u.alpha);
    return u;
  }
  if (name == "swucb") {
    check_keys(j, {"name", "tau", "xi_exp", "b_scale"}, "swucb algorithm entry");
    SwUcbSpec u;
    u.tau = j.value("tau", u.tau);
    u.xi_exp = j.value("xi_exp", u.xi_exp);
    u.b_scale = j.value("b_scale", u.b_scale);
    return u;
  }
  if (name == "random") {
    check_keys(j, {"name"}, "random algorithm entry");
    return RandomSpec{};
  }
  throw ConfigError("unknown algorithm '" + name + "' (expected ubss, ucb, swucb, or random)");
}

InitMode init_from_string(const std::string& text) {
  if (text == "burnin") return InitMode::burnin;
  if (text == "stationary") return InitMode::stationary;
  throw ConfigError("init must be 'burnin' or 'stationary'");
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["theta_grid"] = cfg.theta_grid;
  j["theta"] = cfg.theta;
  j["n"] = cfg.n;
  j["burn_in"] = cfg.burn_in;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.master_seed;
  j["s_values"] = cfg.s_values;
  j["threads"] = cfg.threads;
  j["normalize_denominator"] = cfg.normalize_denominator;
  j["init"] = cfg.init == InitMode::burnin ? "burnin" : "stationary";
  nlohmann::json algos = nlohmann::json::array();
  for (const PolicySpec& spec : cfg.algorithms) algos.push_back(policy_to_json(spec));
  j["algorithms"] = std::move(algos);
  if (cfg.system) j["system"] = to_json(*cfg.system);
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a table/object");
  check_keys(j,
             {"theta_grid", "theta_steps", "theta", "n", "burn_in", "reps", "seed", "s_values",
              "threads", "normalize_denominator", "init", "algorithms", "system"},
             "config");
  ExperimentConfig cfg = default_experiment();
  if (j.contains("theta_steps")) cfg.theta_grid = make_theta_grid(j.at("theta_steps").get<int>());
  if (j.contains("theta_grid")) cfg.theta_grid = j.at("theta_grid").get<std::vector<double>>();
  cfg.theta = j.value("theta", cfg.theta);
  cfg.n = j.value("n", cfg.n);
  cfg.burn_in = j.value("burn_in", cfg.burn_in);
  cfg.reps = j.value("reps", cfg.reps);
  cfg.master_seed = j.value("seed", cfg.master_seed);
  if (j.contains("s_values")) cfg.s_values = j.at("s_values").get<std::vector<int>>();
  cfg.threads = j.value("threads", cfg.threads);
  cfg.normalize_denominator = j.value("normalize_denominator", cfg.normalize_denominator);
  if (j.contains("init")) cfg.init = init_from_string(j.at("init").get<std::string>());
  if (j.contains("algorithms")) {
    if (!j.at("algorithms").is_array()) throw ConfigError("'algorithms' must be an array");
    cfg.algorithms.clear();
    for (const nlohmann::json& entry : j.at("algorithms"))
      cfg.algorithms.push_back(policy_from_json(entry));
  }
  if (j.contains("system")) cfg.system = lgds_params_from_json(j.at("system"));
  return cfg;
}

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  int workers = threads;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<std::int64_t>(workers, count));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
          next.store(count);  // drain remaining work
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct CellStats {
  double mean = 0.0;
  double std_err = 0.0;
};

CellStats summarize(const double* finals, int reps) {
  CellStats out;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) sum += finals[r];
  out.mean = sum / reps;
  if (reps >= 2) {
    double ss = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double d = finals[r] - out.mean;
      ss += d * d;
    }
    out.std_err = std::sqrt(ss / (reps - 1)) / std::sqrt(static_cast<double>(reps));
  }
  return out;
}

double normalized_pct(double r_alg, double r_ubss, const std::string& denominator_rule) {
  const double denom = denominator_rule == "ubss" ? r_ubss : r_alg;
  if (denom <= 0.0) return 0.0;
  return 100.0 * (r_alg - r_ubss) / denom;
}

}  // namespace

std::vector<SweepRow> theta_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.theta_grid.empty()) throw ConfigError("sweep needs a nonempty theta grid");
  int ref = -1;
  for (size_t i = 0; i < cfg.algorithms.size(); ++i)
    if (std::holds_alternative<UbssSpec>(cfg.algorithms[i])) {
      ref = static_cast<int>(i);
      break;
    }
  if (ref < 0) throw ConfigError("sweep needs a ubss entry to normalize against");

  const std::int64_t num_theta = static_cast<std::int64_t>(cfg.theta_grid.size());
  const std::int64_t num_algos = static_cast<std::int64_t>(cfg.algorithms.size());
  const std::int64_t reps = cfg.reps;
  std::vector<double> finals(static_cast<size_t>(num_theta * num_algos * reps), 0.0);

  parallel_for(num_theta * num_algos * reps, cfg.threads, [&](std::int64_t idx) {
    const std::int64_t th = idx / (num_algos * reps);
    const std::int64_t ai = idx / reps % num_algos;
    const std::int64_t rep = idx % reps;
    const LgdsParams params = make_rotation_lgds(cfg.theta_grid[static_cast<size_t>(th)]);
    const std::uint64_t seed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(th),
                                         static_cast<std::uint64_t>(rep)});
    const Vector cum = run_episode(params, cfg.algorithms[static_cast<size_t>(ai)], cfg.n,
                                   cfg.burn_in, seed, cfg.init);
    finals[static_cast<size_t>(idx)] = cum(cfg.n - 1);
  });

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<size_t>(num_theta * num_algos));
  for (std::int64_t th = 0; th < num_theta; ++th) {
    const CellStats ubss_stats =
        summarize(&finals[static_cast<size_t>((th * num_algos + ref) * reps)],
                  static_cast<int>(reps));
    for (std::int64_t ai = 0; ai < num_algos; ++ai) {
      const PolicySpec& spec = cfg.algorithms[static_cast<size_t>(ai)];
      const CellStats stats = summarize(
          &finals[static_cast<size_t>((th * num_algos + ai) * reps)], static_cast<int>(reps));
      SweepRow row;
      row.theta = cfg.theta_grid[static_cast<size_t>(th)];
      row.algorithm = policy_label(spec);
      if (const UbssSpec* u = std::get_if<UbssSpec>(&spec)) row.s = u->cfg.s;
      row.mean_regret = stats.mean;
      row.std_err = stats.std_err;
      row.normalized_vs_ubss_pct =
          ai == ref ? 0.0
                    : normalized_pct(stats.mean, ubss_stats.mean, cfg.normalize_denominator);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<DiagnosticsRow> diagnostics_curves(const std::vector<double>& theta_grid) {
  std::vector<DiagnosticsRow> rows;
  rows.reserve(theta_grid.size());
  for (double theta : theta_grid) {
    const LgdsParams params = make_rotation_lgds(theta);
    DiagnosticsRow row;
    row.theta = theta;
    double min_eig = std::numeric_limits<double>::infinity();
    for (int a = 0; a < params.num_actions(); ++a)
      min_eig = std::min(min_eig, min_eig_sym(observability_gramian(params, a)));
    row.min_gramian_eig = min_eig;
    row.eig_real_part =
        Eigen::EigenSolver<Matrix>(params.gamma, false).eigenvalues().real().maxCoeff();
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> s_comparison(const ExperimentConfig& cfg, double theta) {
  cfg.validate();
  UbssSpec base;
  base.cfg.b_r = 0.0;
  base.cfg.b_g = 0.0;
  base.cfg.b_c = 0.0;
  for (const PolicySpec& spec : cfg.algorithms)
    if (const UbssSpec* u = std::get_if<UbssSpec>(&spec)) {
      base = *u;
      break;
    }

  const LgdsParams params = cfg.system ? *cfg.system : make_rotation_lgds(theta);
  const std::int64_t num_s = static_cast<std::int64_t>(cfg.s_values.size());
  const std::int64_t reps = cfg.reps;
  std::vector<double> finals(static_cast<size_t>(num_s * reps), 0.0);

  parallel_for(num_s * reps, cfg.threads, [&](std::int64_t idx) {
    const std::int64_t si = idx / reps;
    const std::int64_t rep = idx % reps;
    UbssSpec spec = base;
    spec.cfg.s = cfg.s_values[static_cast<size_t>(si)];
    // Seeds depend on the rep only, so every window length faces the same
    // environment trajectories and the comparison across s is paired.
    const std::uint64_t seed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(rep)});
    const Vector cum = run_episode(params, spec, cfg.n, cfg.burn_in, seed, cfg.init);
    finals[static_cast<size_t>(idx)] = cum(cfg.n - 1);
  });

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<size_t>(num_s));
  const CellStats ref_stats = summarize(&finals[0], static_cast<int>(reps));
  for (std::int64_t si = 0; si < num_s; ++si) {
    const CellStats stats =
        summarize(&finals[static_cast<size_t>(si * reps)], static_cast<int>(reps));
    SweepRow row;
    row.theta = theta;
    row.algorithm = "ubss";
    row.s = cfg.s_values[static_cast<size_t>(si)];
    row.mean_regret = stats.mean;
    row.std_err = stats.std_err;
    row.normalized_vs_ubss_pct =
        si == 0 ? 0.0 : normalized_pct(stats.mean, ref_stats.mean, cfg.normalize_denominator);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "theta,algorithm,s,mean_regret,std_err,normalized_vs_ubss_pct\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.theta) << ',' << r.algorithm << ','
        << (r.s ? std::to_string(*r.s) : std::string()) << ',' << format_double(r.mean_regret)
        << ',' << format_double(r.std_err) << ',' << format_double(r.normalized_vs_ubss_pct)
        << '\n';
  }
  if (!out) throw Error("failed while writing " + path);
}

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "theta,min_gramian_eig,eig_real_part\n";
  for (const DiagnosticsRow& r : rows)
    out << format_double(r.theta) << ',' << format_double(r.min_gramian_eig) << ','
        << format_double(r.eig_real_part) << '\n';
  if (!out) throw Error("failed while writing " + path);
}

void write_metadata(const ExperimentConfig& cfg, const std::string& subcommand,
                    const std::string& path) {
  nlohmann::json j;
  j["version"] = LGDS_VERSION;
  j["subcommand"] = subcommand;
  j["config"] = to_json(cfg);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed while writing " + path);
}

namespace {

void write_episode_csv(const EpisodeTrace& trace, const Vector& cum, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "t,action,reward,best_mean,chosen_mean,cum_regret\n";
  for (size_t t = 0; t < trace.actions.size(); ++t) {
    out << t << ',' << trace.actions[t] << ',' << format_double(trace.rewards[t]) << ','
        << format_double(trace.best_means[t]) << ',' << format_double(trace.chosen_means[t])
        << ',' << format_double(cum(static_cast<Eigen::Index>(t))) << '\n';
  }
  if (!out) throw Error("failed while writing " + path);
}

std::string report_line(const std::string& name, bool pass, const std::string& detail) {
  return std::string(pass ? "[PASS] " : "[FAIL] ") + name + " (" + detail + ")";
}

// The verify subcommand: every probabilistic and matrix-analytic guarantee the
// library exposes, exercised on one known system and written to verify.json.
int run_verify(const ExperimentConfig& cfg, const std::string& out_dir) {
  const LgdsParams params = cfg.system ? *cfg.system : make_rotation_lgds(cfg.theta);
  UbssConfig ucfg;
  for (const PolicySpec& spec : cfg.algorithms)
    if (const UbssSpec* u = std::get_if<UbssSpec>(&spec)) {
      ucfg = u->cfg;
      break;
    }
  const RecommendedBounds rb = recommended_bounds(params, ucfg.s);
  if (ucfg.b_r <= 0.0) ucfg.b_r = rb.b_r;
  if (ucfg.b_g <= 0.0) ucfg.b_g = rb.b_g;
  if (ucfg.b_c <= 0.0) ucfg.b_c = params.b_c > 0.0 ? params.b_c : rb.b_c;

  nlohmann::json report;
  report["recommended_bounds"] =
      nlohmann::json{{"b_r", rb.b_r}, {"b_g", rb.b_g}, {"b_c", rb.b_c}};

  const std::vector<CheckResult> guarantees =
      check_filter_guarantees(params, mix_seed({cfg.master_seed, 0xF117ULL}));
  report["filter_guarantees"] = to_json(guarantees);
  bool all_pass = true;
  for (const CheckResult& c : guarantees) {
    all_pass = all_pass && c.pass;
    std::cout << report_line(c.name, c.pass, "margin " + format_double(c.margin)) << '\n';
  }

  const int trials = 400;
  const std::int64_t collect_rounds = 500;
  const CoverageReport model = check_model_error_bound(params, ucfg, trials, collect_rounds,
                                                       mix_seed({cfg.master_seed, 0x4D4FULL}));
  std::vector<double> widths;
  const CoverageReport pred = check_prediction_bound(
      params, ucfg, trials, collect_rounds, mix_seed({cfg.master_seed, 0x5052ULL}), &widths);

  const SchedulePolicy schedule = cyclic_schedule(params.num_actions());
  const XiStats xi = estimate_xi_stats(params, schedule, ucfg.s, 2000, 10, 500,
                                       mix_seed({cfg.master_seed, 0x5849ULL}));
  const double delta = ucfg.delta_e;
  const BoundInputs inputs = make_bound_inputs(xi, ucfg, delta, cfg.n);
  bool log_clamped = false;
  const double big_b = compute_big_b(inputs, &log_clamped);
  const CoverageReport dominance = check_width_dominance(big_b, widths, delta);

  report["xi_stats"] = nlohmann::json{{"mean_xi_norm", xi.mean_xi_norm},
                                      {"mean_xi_norm_se", xi.mean_xi_norm_se},
                                      {"samples", xi.samples}};
  report["big_b"] = nlohmann::json{{"value", big_b}, {"log_clamped", log_clamped}};
  for (const CoverageReport* c : {&model, &pred, &dominance}) {
    report[c->name] = to_json(*c);
    all_pass = all_pass && c->pass;
    std::cout << report_line(c->name, c->pass,
                             format_double(c->empirical_level) + " >= " +
                                 format_double(c->nominal_level) + " - " +
                                 format_double(c->slack))
              << '\n';
  }

  const ModifiedKalman mk = make_modified_kalman(params);
  RegretBoundDetail detail;
  const double bound = evaluate_regret_bound(inputs, params, mk, delta, &detail);

  UbssSpec measured_spec;
  measured_spec.cfg = ucfg;
  double measured = 0.0;
  std::vector<double> finals(static_cast<size_t>(cfg.reps), 0.0);
  parallel_for(cfg.reps, cfg.threads, [&](std::int64_t rep) {
    const std::uint64_t seed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(rep)});
    const Vector cum = run_episode(params, measured_spec, cfg.n, cfg.burn_in, seed, cfg.init);
    finals[static_cast<size_t>(rep)] = cum(cfg.n - 1);
  });
  for (double f : finals) measured += f;
  measured /= static_cast<double>(cfg.reps);

  const bool regret_pass = bound >= measured;
  all_pass = all_pass && regret_pass;
  report["regret_bound"] = nlohmann::json{
      {"name", "regret_bound_dominance"},
      {"bound", bound},
      {"measured_mean_regret", measured},
      {"warmup_term", detail.warmup},
      {"big_b", detail.big_b},
      {"log_clamped", detail.log_clamped},
      {"degenerate_denominator", detail.degenerate_denominator},
      {"worst_code", detail.worst_code},
      {"best_action", detail.best_action},
      {"level_statement", detail.level_statement},
      {"level_bracket", detail.level_bracket},
      {"levels_differ", detail.level_statement != detail.level_bracket},
      {"pass", regret_pass}};
  std::cout << report_line("regret_bound_dominance", regret_pass,
                           format_double(bound) + " >= " + format_double(measured))
            << '\n';

  std::ofstream out(std::filesystem::path(out_dir) / "verify.json", std::ios::binary);
  if (!out) throw Error("cannot open verify.json for writing");
  out << report.dump(2) << '\n';
  std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bandit experiments on linear Gaussian dynamical system rewards"};
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  double theta = 0.0;
  int theta_steps = 0;
  std::int64_t n = 0;
  std::int64_t burn_in = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> algo_names;
  int s = 0;
  double delta = 0.0;
  double lambda = 0.0;
  std::int64_t tau = 0;
  double alpha = 0.0;
  double xi_exp = 0.0;
  double b_scale = 0.0;
  double b_r = 0.0;
  double b_g = 0.0;
  int threads = 0;
  std::string normalize;
  std::string init_mode;

  auto* opt_config = app.add_option("--config", config_path, "JSON or TOML config file");
  auto* opt_theta = app.add_option("--theta", theta, "rotation angle for single-system runs");
  auto* opt_steps = app.add_option("--theta-steps", theta_steps, "evenly spaced sweep angles");
  auto* opt_n = app.add_option("--n", n, "rounds per episode");
  auto* opt_burn = app.add_option("--burn-in", burn_in, "environment burn-in transitions");
  auto* opt_reps = app.add_option("--reps", reps, "replications per cell");
  auto* opt_seed = app.add_option("--seed", seed, "master seed");
  auto* opt_algo =
      app.add_option("--algo", algo_names, "algorithms to run (ubss, ucb, swucb, random)");
  auto* opt_s = app.add_option("--s", s, "reward history window length for ubss");
  auto* opt_delta = app.add_option("--delta", delta, "failure rate for both ubss bonuses");
  auto* opt_lambda = app.add_option("--lambda", lambda, "ridge regularizer for ubss");
  auto* opt_tau = app.add_option("--tau", tau, "swucb window length");
  auto* opt_alpha = app.add_option("--alpha", alpha, "ucb exploration scale");
  auto* opt_xi = app.add_option("--xi-exp", xi_exp, "swucb exploration exponent");
  auto* opt_bscale =
      app.add_option("--b-scale", b_scale, "swucb bonus scale (<= 0: running reward SD)");
  auto* opt_br = app.add_option("--b-r", b_r, "reward-scale bound (<= 0: from true system)");
  auto* opt_bg = app.add_option("--b-g", b_g, "regressor norm bound (<= 0: from true system)");
  auto* opt_out = app.add_option("--out", out_dir, "output directory");
  auto* opt_threads = app.add_option("--threads", threads, "worker threads (0: all cores)");
  auto* opt_norm = app.add_option("--normalize-denominator", normalize,
                                  "denominator of the normalized regret column")
                       ->check(CLI::IsMember({"comparison", "ubss"}));
  auto* opt_init = app.add_option("--init", init_mode, "environment start state")
                       ->check(CLI::IsMember({"burnin", "stationary"}));

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "regret vs rotation angle for every algorithm");
  CLI::App* cmd_episode =
      app.add_subcommand("episode", "single episode of the first configured algorithm");
  CLI::App* cmd_diag =
      app.add_subcommand("diagnostics", "observability and stability curves of the benchmark");
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "exercise the library's guarantees on a known system");
  CLI::App* cmd_scomp =
      app.add_subcommand("s-compare", "ubss regret across history window lengths");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = default_experiment();
    if (opt_config->count() > 0) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw ConfigError("cannot read config file " + config_path);
      const std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
      const bool looks_json = [&] {
        if (config_path.size() >= 5 && config_path.ends_with(".json")) return true;
        if (config_path.ends_with(".toml")) return false;
        const size_t first = text.find_first_not_of(" \t\r\n");
        return first != std::string::npos && text[first] == '{';
      }();
      nlohmann::json j;
      if (looks_json) {
        try {
          j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
          throw ConfigError(std::string("config JSON: ") + e.what());
        }
      } else {
        j = parse_toml_lite(text);
      }
      cfg = experiment_config_from_json(j);
    }

    if (opt_algo->count() > 0) {
      cfg.algorithms.clear();
      for (const std::string& name : algo_names) {
        nlohmann::json j{{"name", name}};
        cfg.algorithms.push_back(policy_from_json(j));
      }
    }
    if (opt_theta->count() > 0) {
      cfg.theta = theta;
      cfg.theta_grid = {theta};
    }
    if (opt_steps->count() > 0) cfg.theta_grid = make_theta_grid(theta_steps);
    if (opt_n->count() > 0) cfg.n = n;
    if (opt_burn->count() > 0) cfg.burn_in = burn_in;
    if (opt_reps->count() > 0) cfg.reps = reps;
    if (opt_seed->count() > 0) cfg.master_seed = seed;
    if (opt_s->count() > 0) cfg.s_values = {s};
    if (opt_threads->count() > 0) cfg.threads = threads;
    if (opt_norm->count() > 0) cfg.normalize_denominator = normalize;
    if (opt_init->count() > 0) cfg.init = init_from_string(init_mode);

    for (PolicySpec& spec : cfg.algorithms) {
      if (UbssSpec* u = std::get_if<UbssSpec>(&spec)) {
        if (opt_s->count() > 0) u->cfg.s = s;
        if (opt_delta->count() > 0) {
          u->cfg.delta_e = delta;
          u->cfg.delta_b = delta;
        }
        if (opt_lambda->count() > 0) u->cfg.lambda = lambda;
        if (opt_br->count() > 0) u->cfg.b_r = b_r;
        if (opt_bg->count() > 0) u->cfg.b_g = b_g;
      } else if (UcbSpec* u = std::get_if<UcbSpec>(&spec)) {
        if (opt_alpha->count() > 0) u->alpha = alpha;
      } else if (SwUcbSpec* u = std::get_if<SwUcbSpec>(&spec)) {
        if (opt_tau->count() > 0) u->tau = tau;
        if (opt_xi->count() > 0) u->xi_exp = xi_exp;
        if (opt_bscale->count() > 0) u->b_scale = b_scale;
      }
    }

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);

    if (cmd_sweep->parsed()) {
      cfg.validate();
      const std::vector<SweepRow> rows = theta_sweep(cfg);
      write_sweep_csv(rows, (out / "sweep.csv").string());
      write_metadata(cfg, "sweep", (out / "metadata.json").string());
      std::cout << "wrote " << (out / "sweep.csv").string() << " (" << rows.size() << " rows)\n";
    } else if (cmd_episode->parsed()) {
      cfg.validate();
      const LgdsParams params = cfg.system ? *cfg.system : make_rotation_lgds(cfg.theta);
      EpisodeTrace trace;
      nlohmann::json agent_dump;
      const Vector cum = run_episode(params, cfg.algorithms.front(), cfg.n, cfg.burn_in,
                                     mix_seed({cfg.master_seed, 0}), cfg.init, &trace,
                                     &agent_dump);
      write_episode_csv(trace, cum, (out / "episode.csv").string());
      if (!agent_dump.is_null()) {
        std::ofstream dump_out(out / "agent.json", std::ios::binary);
        if (!dump_out) throw Error("cannot open agent.json for writing");
        dump_out << agent_dump.dump(2) << '\n';
      }
      write_metadata(cfg, "episode", (out / "metadata.json").string());
      std::cout << "final cumulative regret " << format_double(cum(cfg.n - 1)) << '\n';
    } else if (cmd_diag->parsed()) {
      const std::vector<DiagnosticsRow> rows = diagnostics_curves(cfg.theta_grid);
      write_diagnostics_csv(rows, (out / "diagnostics.csv").string());
      write_metadata(cfg, "diagnostics", (out / "metadata.json").string());
      std::cout << "wrote " << (out / "diagnostics.csv").string() << " (" << rows.size()
                << " rows)\n";
    } else if (cmd_verify->parsed()) {
      cfg.validate();
      const int code = run_verify(cfg, out_dir);
      write_metadata(cfg, "verify", (out / "metadata.json").string());
      return code;
    } else if (cmd_scomp->parsed()) {
      cfg.validate();
      const std::vector<SweepRow> rows = s_comparison(cfg, cfg.theta);
      write_sweep_csv(rows, (out / "s_compare.csv").string());
      write_metadata(cfg, "s-compare", (out / "metadata.json").string());
      std::cout << "wrote " << (out / "s_compare.csv").string() << " (" << rows.size()
                << " rows)\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lgds
