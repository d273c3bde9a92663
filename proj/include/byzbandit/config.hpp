// JSON experiment configuration: strict parsing (unknown keys are errors),
// dotted-path overrides, and resolution of all derived schedule quantities
// (episode length, padding, iota, noise budget, tree calibration) into a
// ready-to-run RunConfig plus an effective-config echo for reproducibility.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "byzbandit/bandit_env.hpp"
#include "byzbandit/errors.hpp"
#include "byzbandit/protocol.hpp"
#include "byzbandit/rng.hpp"
#include "byzbandit/schedules.hpp"

namespace byzbandit {

using Json = nlohmann::json;

struct ResolvedExperiment {
  std::string name;
  std::uint64_t seed = 0;
  int repetitions = 1;
  RunConfig run;               // run.seed is filled per repetition by the harness
  std::string output_dir = "out";
  Json effective;              // input config plus every resolved quantity
};

namespace cfgdetail {

inline void check_keys(const Json& obj, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError("config section '" + section + "' must be a JSON object");
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in section '" + section + "'");
    }
  }
}

inline const Json& require(const Json& obj, const char* key, const std::string& section) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("missing required key '" + std::string(key) + "' in section '" +
                      section + "'");
  }
  return *it;
}

inline double require_number(const Json& obj, const char* key, const std::string& section) {
  const Json& v = require(obj, key, section);
  if (!v.is_number()) {
    throw ConfigError("key '" + std::string(key) + "' in section '" + section +
                      "' must be a number");
  }
  return v.get<double>();
}

inline long require_integer(const Json& obj, const char* key, const std::string& section) {
  const Json& v = require(obj, key, section);
  if (!v.is_number_integer()) {
    throw ConfigError("key '" + std::string(key) + "' in section '" + section +
                      "' must be an integer");
  }
  return v.get<long>();
}

inline std::string require_string(const Json& obj, const char* key, const std::string& section) {
  const Json& v = require(obj, key, section);
  if (!v.is_string()) {
    throw ConfigError("key '" + std::string(key) + "' in section '" + section +
                      "' must be a string");
  }
  return v.get<std::string>();
}

inline NoiseFamily parse_noise_family(const std::string& s) {
  if (s == "uniform") return NoiseFamily::Uniform;
  if (s == "truncated-gaussian") return NoiseFamily::TruncatedGaussian;
  throw ConfigError("noise.family must be 'uniform' or 'truncated-gaussian', got '" + s + "'");
}

inline SetFamily parse_set_family(const std::string& s) {
  if (s == "shared") return SetFamily::Shared;
  if (s == "iid-rotations") return SetFamily::IidRotations;
  if (s == "iid-resample") return SetFamily::IidResample;
  throw ConfigError("environment.set_family must be 'shared', 'iid-rotations' or "
                    "'iid-resample', got '" + s + "'");
}

inline AttackMode parse_attack_mode(const std::string& s) {
  if (s == "zero-out") return AttackMode::ZeroOut;
  if (s == "huge-norm") return AttackMode::HugeNorm;
  if (s == "sign-flip") return AttackMode::SignFlip;
  if (s == "asymmetric-garbage") return AttackMode::AsymmetricGarbage;
  if (s == "fake-parameter") return AttackMode::FakeParameter;
  if (s == "random-gaussian") return AttackMode::RandomGaussian;
  throw ConfigError("unknown attack.mode '" + s + "'");
}

inline Oracle parse_oracle(const std::string& s) {
  if (s == "mean") return Oracle::Mean;
  if (s == "gm") return Oracle::Gm;
  if (s == "gm-of-means") return Oracle::GmOfMeans;
  throw ConfigError("oracle must be 'mean', 'gm' or 'gm-of-means', got '" + s + "'");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "T1" || s == "T1-robust") return Variant::T1;
  if (s == "T2" || s == "T2-robust-dp") return Variant::T2;
  if (s == "T3" || s == "T3-mom-dp") return Variant::T3;
  throw ConfigError("schedule.variant must be one of T1/T1-robust, T2/T2-robust-dp, "
                    "T3/T3-mom-dp, got '" + s + "'");
}

inline const char* oracle_name(Oracle o) {
  switch (o) {
    case Oracle::Mean: return "mean";
    case Oracle::Gm: return "gm";
    case Oracle::GmOfMeans: return "gm-of-means";
  }
  return "?";
}

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::T1: return "T1";
    case Variant::T2: return "T2";
    case Variant::T3: return "T3";
  }
  return "?";
}

}  // namespace cfgdetail

// Applies one `path.to.key=value` override. The value text is parsed as JSON
// when possible (numbers, booleans, arrays) and kept as a string otherwise.
inline void apply_override(Json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like path.to.key=value, got '" + spec + "'");
  }
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::string part;
  std::istringstream keys(path);
  std::vector<std::string> parts;
  while (std::getline(keys, part, '.')) {
    if (part.empty()) throw ConfigError("override path has an empty component: '" + path + "'");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    node = &(*node)[parts[i]];
    if (!node->is_object() && !node->is_null()) {
      throw ConfigError("override path component '" + parts[i] + "' is not an object");
    }
  }
  (*node)[parts.back()] = value;
}

// Full validation and resolution. Resolution order: raw iota over the
// requested horizon feeds the recommended episode length; the horizon is then
// padded to K * L and every downstream quantity (final iota, noise budget,
// tree calibration) uses the padded horizon.
inline ResolvedExperiment resolve_config(Json doc) {
  using namespace cfgdetail;
  check_keys(doc, "top-level",
             {"name", "preset", "seed", "repetitions", "environment", "attack", "schedule",
              "oracle", "output"});

  ResolvedExperiment out;
  out.name = doc.value("name", std::string("experiment"));

  std::string preset;
  if (doc.contains("preset")) {
    preset = doc["preset"].get<std::string>();
    if (preset != "no-communication") {
      throw ConfigError("unknown preset '" + preset + "' (only 'no-communication' exists)");
    }
  }

  {
    const Json& s = require(doc, "seed", "top-level");
    if (!s.is_number_integer() || s.get<long long>() < 0) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    out.seed = s.get<std::uint64_t>();
  }
  out.repetitions = static_cast<int>(require_integer(doc, "repetitions", "top-level"));
  if (out.repetitions < 1) throw ConfigError("repetitions must be >= 1");

  // environment
  const Json& env = require(doc, "environment", "top-level");
  check_keys(env, "environment",
             {"d", "agents", "horizon", "theta_star", "arms_per_set", "set_family", "noise",
              "reward_clip", "arm_concentration", "drift_steps"});
  EnvironmentSpec espec;
  espec.d = static_cast<int>(require_integer(env, "d", "environment"));
  espec.agents = static_cast<int>(require_integer(env, "agents", "environment"));
  const long horizon_requested = require_integer(env, "horizon", "environment");
  if (espec.d < 1) throw ConfigError("environment.d must be >= 1");
  if (espec.agents < 1) throw ConfigError("environment.agents must be >= 1");
  if (horizon_requested < 1) throw ConfigError("environment.horizon must be >= 1");
  {
    const Json& th = require(env, "theta_star", "environment");
    if (!th.is_array() || static_cast<int>(th.size()) != espec.d) {
      throw ConfigError("environment.theta_star must be an array of length d");
    }
    espec.theta_star = Vector(espec.d);
    for (int i = 0; i < espec.d; ++i) espec.theta_star[i] = th[static_cast<std::size_t>(i)].get<double>();
    const double limit = std::sqrt(static_cast<double>(espec.d)) + 1e-12;
    if (espec.theta_star.norm() > limit) {
      throw ConfigError("theta_star norm exceeds sqrt(d)");
    }
  }
  espec.arms_per_set = static_cast<int>(require_integer(env, "arms_per_set", "environment"));
  if (espec.arms_per_set < 1) throw ConfigError("environment.arms_per_set must be >= 1");
  espec.set_family = parse_set_family(require_string(env, "set_family", "environment"));
  {
    const Json& noise = require(env, "noise", "environment");
    check_keys(noise, "environment.noise", {"R", "family"});
    espec.noise_r = require_number(noise, "R", "environment.noise");
    if (espec.noise_r < 0) throw ConfigError("noise.R must be >= 0");
    espec.noise_family = parse_noise_family(require_string(noise, "family", "environment.noise"));
  }
  espec.arm_concentration = env.value("arm_concentration", 0.0);
  if (espec.arm_concentration < 0.0 || espec.arm_concentration >= 1.0) {
    throw ConfigError("environment.arm_concentration must lie in [0, 1)");
  }
  if (env.contains("drift_steps")) {
    for (const auto& v : env["drift_steps"]) espec.drift_steps.push_back(v.get<long>());
    std::sort(espec.drift_steps.begin(), espec.drift_steps.end());
  }

  // attack
  const Json& atk = require(doc, "attack", "top-level");
  check_keys(atk, "attack", {"alpha", "corrupted", "mode", "persistence"});
  AttackSpec aspec;
  if (atk.contains("alpha") && atk.contains("corrupted")) {
    throw ConfigError("attack accepts either 'alpha' or 'corrupted', not both");
  }
  if (atk.contains("corrupted")) {
    aspec.n_corrupted = static_cast<int>(require_integer(atk, "corrupted", "attack"));
  } else if (atk.contains("alpha")) {
    const double a = require_number(atk, "alpha", "attack");
    if (a < 0.0 || a >= 0.5) {
      throw ConfigError("attack.alpha must satisfy 0 <= alpha < 1/2 (corruption below half)");
    }
    aspec.n_corrupted = static_cast<int>(std::lround(a * espec.agents));
  } else {
    throw ConfigError("attack needs 'alpha' or 'corrupted'");
  }
  if (aspec.n_corrupted < 0) throw ConfigError("attack.corrupted must be >= 0");
  if (2 * aspec.n_corrupted >= espec.agents) {
    throw ConfigError("corrupted fraction must satisfy alpha = N1/N < 1/2; got " +
                      std::to_string(aspec.n_corrupted) + " of " +
                      std::to_string(espec.agents));
  }
  if (atk.contains("mode")) {
    aspec.mode = parse_attack_mode(require_string(atk, "mode", "attack"));
  } else if (aspec.n_corrupted > 0) {
    throw ConfigError("attack.mode is required when corrupted agents exist");
  }
  if (atk.contains("persistence")) {
    const Json& p = atk["persistence"];
    if (p.is_string()) {
      if (p.get<std::string>() != "always") {
        throw ConfigError("attack.persistence must be 'always' or a probability");
      }
      aspec.always = true;
    } else if (p.is_number()) {
      const double prob = p.get<double>();
      if (prob < 0.0 || prob > 1.0) {
        throw ConfigError("attack.persistence probability must lie in [0, 1]");
      }
      aspec.always = false;
      aspec.per_episode_p = prob;
    } else {
      throw ConfigError("attack.persistence must be 'always' or a probability");
    }
  }

  // oracle
  const Oracle oracle = parse_oracle(require(doc, "oracle", "top-level").get<std::string>());

  // schedule
  const Json& sch = require(doc, "schedule", "top-level");
  check_keys(sch, "schedule",
             {"variant", "delta", "epsilon", "sigma", "L", "agnostic", "dp"});
  const Variant variant = parse_variant(require_string(sch, "variant", "schedule"));
  const double delta = require_number(sch, "delta", "schedule");
  if (delta <= 0.0 || delta >= 1.0) throw ConfigError("schedule.delta must lie in (0, 1)");
  const double epsilon = sch.value("epsilon", 1e-6);
  if (epsilon < 0.0) throw ConfigError("schedule.epsilon must be >= 0");
  const bool agnostic = sch.value("agnostic", false);

  const double alpha_effective =
      static_cast<double>(aspec.n_corrupted) / static_cast<double>(espec.agents);
  if (variant == Variant::T3 && alpha_effective > 0.25 + 1e-12) {
    throw ConfigError("variant T3 requires alpha <= 1/4");
  }
  if (variant == Variant::T3 && oracle != Oracle::GmOfMeans) {
    throw ConfigError("variant T3 requires the gm-of-means oracle");
  }
  if (oracle == Oracle::GmOfMeans && aspec.n_corrupted > 0 &&
      3 * aspec.n_corrupted > espec.agents) {
    throw ConfigError("gm-of-means needs 3 * corrupted <= agents to form groups");
  }
  if (aspec.n_corrupted > 0 && aspec.mode == AttackMode::AsymmetricGarbage && espec.d < 2) {
    throw ConfigError("asymmetric-garbage attack needs d >= 2");
  }
  const double alpha_schedule = agnostic ? 0.49 : alpha_effective;

  // dp sub-section
  bool dp_enabled = false;
  double mu = 0.0, nu = 0.0;
  if (sch.contains("dp")) {
    const Json& dp = sch["dp"];
    check_keys(dp, "schedule.dp", {"enabled", "mu", "nu"});
    dp_enabled = require(dp, "enabled", "schedule.dp").get<bool>();
    if (dp_enabled) {
      mu = require_number(dp, "mu", "schedule.dp");
      nu = require_number(dp, "nu", "schedule.dp");
      if (mu <= 0.0) throw ConfigError("schedule.dp.mu must be > 0");
      if (nu <= 0.0 || nu >= 1.0) throw ConfigError("schedule.dp.nu must lie in (0, 1)");
    }
  }
  if (dp_enabled && variant == Variant::T1) {
    throw ConfigError("variant T1 has no privacy terms; use T2 or T3 with dp.enabled");
  }
  espec.reward_clip = env.value("reward_clip", dp_enabled);
  // Clipping must stay inactive for honest in-distribution rewards, so the
  // effective parameter is shrunk until max |<x, theta*>| + noise range <= 1.
  if (espec.reward_clip) {
    espec.theta_star = scale_theta_for_clip(espec.theta_star, espec.noise_family, espec.noise_r);
  }

  // sigma source
  std::string sigma_source;
  double sigma = 0.0;
  {
    const Json& s = require(sch, "sigma", "schedule");
    if (s.is_number()) {
      sigma = s.get<double>();
      if (sigma < 0.0) throw ConfigError("schedule.sigma must be >= 0");
      sigma_source = "explicit";
    } else if (s.is_string()) {
      const std::string text = s.get<std::string>();
      if (text == "shared") {
        sigma = 0.0;  // identical decision sets have zero cross-agent deviation
        sigma_source = "shared";
      } else if (text == "worst-case") {
        sigma = 2.0;  // two unit-norm Gram matrices differ by at most 2
        sigma_source = "worst-case";
      } else if (text == "empirical") {
        sigma_source = "empirical";  // resolved below, after the env spec is complete
      } else {
        throw ConfigError("schedule.sigma must be a number, 'shared', 'worst-case' or "
                          "'empirical'");
      }
    } else {
      throw ConfigError("schedule.sigma must be a number or a source string");
    }
  }

  // preset overrides (applied before episode-length resolution)
  std::string episode_len_source = "explicit";
  long episode_len = 0;
  if (preset == "no-communication") {
    episode_len = horizon_requested;  // K = 1: the zero-initialized model runs the whole horizon
    episode_len_source = "preset";
    aspec.mode = AttackMode::FakeParameter;
    aspec.always = true;
  }

  EnvironmentSpec espec_requested = espec;
  espec_requested.horizon = horizon_requested;
  if (sigma_source == "empirical") {
    sigma = empirical_sigma(espec_requested, 200,
                            derive_seed(out.seed, {stream::kSigmaEstimate}));
  }

  const double iota_raw = iota(espec.agents, horizon_requested, delta);
  if (episode_len == 0) {
    const Json& lval = require(sch, "L", "schedule");
    if (lval.is_string()) {
      if (lval.get<std::string>() != "recommended") {
        throw ConfigError("schedule.L must be 'recommended' or a positive integer");
      }
      episode_len = recommended_episode_len(variant, alpha_schedule, sigma, espec.noise_r,
                                            horizon_requested, iota_raw);
      episode_len_source = "recommended";
    } else if (lval.is_number_integer()) {
      episode_len = lval.get<long>();
      if (episode_len < 1) throw ConfigError("schedule.L must be >= 1");
    } else {
      throw ConfigError("schedule.L must be 'recommended' or a positive integer");
    }
  }
  const long episodes = (horizon_requested + episode_len - 1) / episode_len;
  const long horizon_padded = episodes * episode_len;
  const double iota_final = iota(espec.agents, horizon_padded, delta);

  ScheduleParams sched;
  sched.variant = variant;
  sched.alpha = alpha_schedule;
  sched.sigma = sigma;
  sched.noise_r = espec.noise_r;
  sched.d = espec.d;
  sched.agents = espec.agents;
  sched.horizon = horizon_padded;
  sched.delta = delta;
  sched.epsilon = epsilon;
  sched.episode_len = episode_len;
  sched.episodes = episodes;
  sched.iota_val = iota_final;
  sched.c_a = c_alpha(alpha_schedule);
  sched.budget_b = dp_enabled
                       ? noise_budget_bound(mu, nu, iota_final, espec.d)
                       : 0.0;

  espec.horizon = horizon_padded;
  out.run.env = espec;
  out.run.attack = aspec;
  out.run.oracle = oracle;
  out.run.sched = sched;
  out.run.sigma_node = dp_enabled
                           ? calibrate_node_sigma(mu, nu, episode_len, static_cast<int>(episodes))
                           : 0.0;
  out.run.dp_validation = dp_enabled;
  out.run.gm_max_iter = 10000;

  // output
  if (doc.contains("output")) {
    const Json& o = doc["output"];
    check_keys(o, "output", {"dir"});
    if (o.contains("dir")) out.output_dir = o["dir"].get<std::string>();
  }

  Json theta_effective = Json::array();
  for (int i = 0; i < espec.d; ++i) theta_effective.push_back(espec.theta_star[i]);

  out.effective = doc;
  out.effective["resolved"] = Json{
      {"theta_star_effective", theta_effective},
      {"corrupted", aspec.n_corrupted},
      {"alpha_effective", alpha_effective},
      {"alpha_schedule", alpha_schedule},
      {"sigma", sigma},
      {"sigma_source", sigma_source},
      {"episode_len", episode_len},
      {"episode_len_source", episode_len_source},
      {"episodes", episodes},
      {"horizon_padded", horizon_padded},
      {"iota", iota_final},
      {"c_alpha", sched.c_a},
      {"noise_budget_b", sched.budget_b},
      {"node_sigma", out.run.sigma_node},
      {"oracle", cfgdetail::oracle_name(oracle)},
      {"variant", cfgdetail::variant_name(variant)},
  };
  return out;
}

inline ResolvedExperiment load_config(const std::string& path,
                                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  for (const std::string& o : overrides) apply_override(doc, o);
  return resolve_config(std::move(doc));
}

}  // namespace byzbandit
