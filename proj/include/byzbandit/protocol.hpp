// Episodic federated LinUCB protocol: broadcast -> local episodes -> attacked
// messages -> validation -> robust aggregation -> next broadcast, plus the
// omniscient diagnostics (aggregation error vs. the honest average) recorded
// for every episode.
#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "byzbandit/bandit_env.hpp"
#include "byzbandit/errors.hpp"
#include "byzbandit/linalg.hpp"
#include "byzbandit/privacy.hpp"
#include "byzbandit/robust_agg.hpp"
#include "byzbandit/rng.hpp"
#include "byzbandit/schedules.hpp"

namespace byzbandit {

enum class Oracle { Mean, Gm, GmOfMeans };

enum class AttackMode {
  ZeroOut,
  HugeNorm,
  SignFlip,
  AsymmetricGarbage,
  FakeParameter,
  RandomGaussian,
};

struct AttackSpec {
  int n_corrupted = 0;
  AttackMode mode = AttackMode::ZeroOut;
  bool always = true;          // persistent corruption
  double per_episode_p = 0.0;  // activation probability when not persistent
};

struct ModelBroadcast {
  long k = 0;
  Vector theta;
  SymMatrix lambda_mat;  // Lambda_k, SPD
  double lambda = 0.0;   // lambda_k
  double beta = 0.0;     // beta_k >= 0
  std::shared_ptr<const CholeskyFactor> chol;  // one factorization per broadcast
};

// UCB action choice; exact ties keep the lowest arm index.
inline std::pair<int, Vector> select_action(const DecisionSet& set, const ModelBroadcast& bc) {
  int pick = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < static_cast<int>(set.arms.size()); ++a) {
    const Vector& x = set.arms[static_cast<std::size_t>(a)];
    const double ucb = x.dot(bc.theta) + bc.beta * bc.chol->inv_norm(x);
    if (ucb > best) {
      best = ucb;
      pick = a;
    }
  }
  return {pick, set.arms[static_cast<std::size_t>(pick)]};
}

// Rank-one update keeping U bitwise symmetric: mirror the upper triangle.
inline void accumulate(Matrix& u_mat, Vector& u_vec, const Vector& x, double r) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index j = i; j < x.size(); ++j) {
      u_mat(i, j) += x[i] * x[j];
      u_mat(j, i) = u_mat(i, j);
    }
  }
  u_vec += r * x;
}

struct EpisodeMessage {
  int agent = 0;
  long k = 0;
  Matrix u_mat;  // claimed Gram increment; may be arbitrary garbage
  Vector u_vec;  // claimed reward-weighted action sum increment
};

struct SanitizedMessage {
  SymMatrix u_mat;
  Vector u_vec;
  bool zeroed = false;
};

// Sanitization, never rejection: a message that fails a check contributes
// exactly (0, 0). Non-finite entries and asymmetry beyond tolerance are
// always zeroed; the Frobenius/l2 norm caps at L apply only in privacy mode
// (honest privatized messages stay within them with high probability, and
// the analysis needs a hard bound on what an accepted message can inject).
inline SanitizedMessage validate_message(const EpisodeMessage& msg, long episode_len,
                                         bool dp_mode) {
  const int d = static_cast<int>(msg.u_vec.size());
  bool bad = !all_finite(msg.u_mat) || !all_finite(msg.u_vec) ||
             msg.u_mat.rows() != d || msg.u_mat.cols() != d || !is_symmetric(msg.u_mat);
  if (!bad && dp_mode) {
    const double el = static_cast<double>(episode_len);
    bad = msg.u_mat.norm() > el || msg.u_vec.norm() > el;
  }
  if (bad) {
    return {SymMatrix::zero(d), Vector::Zero(d), true};
  }
  // Exact symmetrization: bitwise identity for honest (mirrored) updates,
  // projection for adversarial asymmetry inside tolerance.
  return {SymMatrix::exact_symmetrized(msg.u_mat), msg.u_vec, false};
}

// Context an attack may use: the true parameter (fake-parameter mode reports
// rewards against -theta*) and the agent's episode history.
struct AttackContext {
  const EnvironmentSpec* env = nullptr;
  const std::vector<std::pair<Vector, double>>* steps = nullptr;  // (action, noise)
};

inline void apply_attack(EpisodeMessage& msg, AttackMode mode, const AttackContext& ctx,
                         Rng& rng) {
  const int d = static_cast<int>(msg.u_vec.size());
  switch (mode) {
    case AttackMode::ZeroOut:
      msg.u_mat.setZero();
      msg.u_vec.setZero();
      break;
    case AttackMode::HugeNorm:
      // Magnitude blow-up of the reward statistic, sign inverted. Scaling
      // the Gram half by the same factor would cancel inside the
      // least-squares solve and leave the mean-aggregated model close to
      // the attacker's own estimate, which is not a huge-norm attack at all.
      msg.u_vec *= -1e6;
      break;
    case AttackMode::SignFlip:
      msg.u_vec = -msg.u_vec;
      break;
    case AttackMode::AsymmetricGarbage:
      msg.u_mat(0, 1) += 1.0;
      break;
    case AttackMode::FakeParameter: {
      Vector fake = Vector::Zero(d);
      for (const auto& [x, eta] : *ctx.steps) {
        double r = x.dot(-ctx.env->theta_star) + eta;
        if (ctx.env->reward_clip) r = std::clamp(r, -1.0, 1.0);
        fake += r * x;
      }
      msg.u_vec = std::move(fake);
      break;
    }
    case AttackMode::RandomGaussian:
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) msg.u_mat(i, j) = rng.normal();
        msg.u_vec[i] = rng.normal();
      }
      break;
  }
}

struct EpisodeDiag {
  long k = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double norm_e_mat = 0.0;    // ||aggregate - honest mean Gram||_2 (spectral)
  double norm_e_vec = 0.0;    // ||aggregate - honest mean reward vector||_2
  double theta_error = 0.0;   // ||theta_k - theta*||_2
  double theta_mahal = 0.0;   // ||theta_k - theta*||_{Lambda_k}
  double min_eig_lambda = 0.0;
  double dp_noise_norm = 0.0;  // max over agents of the injected noise norm
};

struct RegretTrace {
  long episode_len = 0;
  long episodes = 0;
  std::vector<double> cum_regret;       // one entry per step, padded horizon
  std::vector<EpisodeDiag> per_episode;  // one entry per started episode
};

struct RunError {
  std::string message;
  long episode = 0;
};

struct RunResult {
  RegretTrace trace;
  std::optional<RunError> error;
  std::vector<int> corrupted_agents;
};

struct RunConfig {
  EnvironmentSpec env;        // horizon already padded to K * L
  AttackSpec attack;
  Oracle oracle = Oracle::Mean;
  ScheduleParams sched;
  double sigma_node = 0.0;    // noise-tree calibration; 0 disables privacy noise
  bool dp_validation = false; // norm caps in validate_message
  int gm_max_iter = 10000;
  std::uint64_t seed = 0;
};

namespace detail {

struct AggregateOutput {
  SymMatrix mat;
  Vector vec;
};

inline AggregateOutput aggregate(Oracle oracle, int d, const std::vector<Matrix>& mats,
                                 const std::vector<Vector>& vecs, const GroupPartition& part,
                                 double eps, int max_iter) {
  AggregateOutput out;
  switch (oracle) {
    case Oracle::Mean: {
      Matrix sum = Matrix::Zero(d, d);
      Vector vsum = Vector::Zero(d);
      for (const Matrix& m : mats) sum += m;
      for (const Vector& v : vecs) vsum += v;
      out.mat = SymMatrix(sum / static_cast<double>(mats.size()));
      out.vec = vsum / static_cast<double>(vecs.size());
      break;
    }
    case Oracle::Gm: {
      out.mat = geometric_median_matrices(d, mats, eps, max_iter).sym;
      out.vec = geometric_median(PointCloud::make(d, vecs), eps, max_iter).point;
      break;
    }
    case Oracle::GmOfMeans: {
      out.mat = gm_of_means_matrices(d, mats, part, eps, max_iter).sym;
      out.vec = gm_of_means(PointCloud::make(d, vecs), part, eps, max_iter).point;
      break;
    }
  }
  return out;
}

}  // namespace detail

// One full simulated run. Deterministic given the config: environment,
// attack, partition and per-agent noise trees draw from independent streams
// derived off the run seed, so runs differing only in oracle or schedule
// consume identical randomness.
inline RunResult run_experiment(const RunConfig& cfg) {
  const int n_agents = cfg.env.agents;
  const int d = cfg.env.d;
  const long episodes = cfg.sched.episodes;
  const long episode_len = cfg.sched.episode_len;
  if (cfg.env.horizon != episodes * episode_len) {
    throw ConfigError("run_experiment: env horizon must equal K * L");
  }
  if (cfg.attack.n_corrupted < 0 || 2 * cfg.attack.n_corrupted >= n_agents) {
    throw ConfigError("run_experiment: corrupted count must satisfy alpha < 1/2");
  }
  if (cfg.attack.n_corrupted > 0 && cfg.attack.mode == AttackMode::AsymmetricGarbage && d < 2) {
    throw ConfigError("run_experiment: asymmetric-garbage attack needs d >= 2");
  }

  RunResult result;
  Environment env(cfg.env, derive_seed(cfg.seed, {stream::kEnvironment}));
  Rng attack_rng(derive_seed(cfg.seed, {stream::kAttack}));

  // Designated corrupted set (sorted); the reliable complement is fixed.
  std::vector<bool> corrupted(static_cast<std::size_t>(n_agents), false);
  if (cfg.attack.n_corrupted > 0) {
    std::vector<int> perm = attack_rng.permutation(n_agents);
    perm.resize(static_cast<std::size_t>(cfg.attack.n_corrupted));
    std::sort(perm.begin(), perm.end());
    result.corrupted_agents = perm;
    for (int i : perm) corrupted[static_cast<std::size_t>(i)] = true;
  }
  const int n_reliable = n_agents - cfg.attack.n_corrupted;

  GroupPartition partition;
  if (cfg.oracle == Oracle::GmOfMeans) {
    Rng partition_rng(derive_seed(cfg.seed, {stream::kPartition}));
    partition = partition_agents(n_agents, cfg.attack.n_corrupted, partition_rng);
  }

  std::vector<NoiseTree> trees;
  trees.reserve(static_cast<std::size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i) {
    trees.emplace_back(static_cast<int>(episodes), d, cfg.sigma_node,
                       derive_seed(cfg.seed, {stream::kNoiseTree, static_cast<std::uint64_t>(i)}));
  }

  // Controller ledger.
  std::vector<Matrix> v_mat(static_cast<std::size_t>(n_agents), Matrix::Zero(d, d));
  std::vector<Vector> v_vec(static_cast<std::size_t>(n_agents), Vector::Zero(d));
  std::vector<Matrix> vhat_mat(static_cast<std::size_t>(n_agents), Matrix::Zero(d, d));
  std::vector<Vector> vhat_vec(static_cast<std::size_t>(n_agents), Vector::Zero(d));

  // Omniscient per-agent honest ledgers for diagnostics. Summed at broadcast
  // time agent-by-agent, the same association the mean aggregate uses, so an
  // uncorrupted noise-free mean run reports an error of exactly zero.
  std::vector<Matrix> honest_mat(static_cast<std::size_t>(n_agents), Matrix::Zero(d, d));
  std::vector<Vector> honest_vec(static_cast<std::size_t>(n_agents), Vector::Zero(d));

  RegretTrace& trace = result.trace;
  trace.episode_len = episode_len;
  trace.episodes = episodes;
  trace.cum_regret.reserve(static_cast<std::size_t>(cfg.env.horizon));

  const double max_step_regret = 2.0 * std::sqrt(static_cast<double>(d)) + 1e-12;
  double cum = 0.0;

  std::vector<Matrix> ep_mat(static_cast<std::size_t>(n_agents));
  std::vector<Vector> ep_vec(static_cast<std::size_t>(n_agents));
  std::vector<std::vector<std::pair<Vector, double>>> ep_steps(
      static_cast<std::size_t>(n_agents));

  for (long k = 1; k <= episodes; ++k) {
    // Attack activity for this episode, drawn in agent order.
    std::vector<bool> active(static_cast<std::size_t>(n_agents), false);
    for (int i = 0; i < n_agents; ++i) {
      if (!corrupted[static_cast<std::size_t>(i)]) continue;
      active[static_cast<std::size_t>(i)] =
          cfg.attack.always || attack_rng.coin(cfg.attack.per_episode_p);
    }

    // Broadcast for episode k from privatized statistics through k - 1.
    ModelBroadcast bc;
    EpisodeDiag diag;
    try {
      const detail::AggregateOutput agg = detail::aggregate(
          cfg.oracle, d, vhat_mat, vhat_vec, partition, cfg.sched.epsilon, cfg.gm_max_iter);
      const double lambda = lambda_k(cfg.sched, k);
      const SymMatrix lambda_mat(agg.mat.mat() + Matrix::Identity(d, d) * lambda);
      const double min_eig = min_eigenvalue(lambda_mat);
      if (min_eig <= 1e-10) {
        throw NotPositiveDefinite("aggregate + lambda I has min eigenvalue " +
                                  std::to_string(min_eig));
      }
      auto chol = std::make_shared<const CholeskyFactor>(lambda_mat);
      bc.k = k;
      bc.theta = chol->solve(agg.vec);
      bc.lambda_mat = lambda_mat;
      bc.lambda = lambda;
      bc.beta = beta_k(cfg.sched, k, lambda);
      bc.chol = std::move(chol);

      diag.k = k;
      diag.lambda = lambda;
      diag.beta = bc.beta;
      diag.min_eig_lambda = min_eig;
      const double scale = static_cast<double>(n_reliable);
      Matrix w_mat = Matrix::Zero(d, d);
      Vector w_vec = Vector::Zero(d);
      for (int i = 0; i < n_agents; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (corrupted[idx]) continue;
        w_mat += honest_mat[idx];
        w_vec += honest_vec[idx];
      }
      diag.norm_e_mat = spectral_norm(SymMatrix(agg.mat.mat() - w_mat / scale));
      diag.norm_e_vec = (agg.vec - w_vec / scale).norm();
      const Vector err = bc.theta - cfg.env.theta_star;
      diag.theta_error = err.norm();
      diag.theta_mahal = std::sqrt(std::max(0.0, err.dot(lambda_mat.mat() * err)));
      // Computed unconditionally so a zero-noise run records exact zeros,
      // which is the end-to-end witness that the privatizer was an identity.
      double worst_noise = 0.0;
      for (int i = 0; i < n_agents; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        worst_noise = std::max(worst_noise, spectral_norm(SymMatrix(vhat_mat[idx] - v_mat[idx])));
        worst_noise = std::max(worst_noise, (vhat_vec[idx] - v_vec[idx]).norm());
      }
      diag.dp_noise_norm = worst_noise;
    } catch (const NotPositiveDefinite& e) {
      result.error = RunError{e.what(), k};
      return result;
    }
    trace.per_episode.push_back(diag);

    // Local episodes.
    for (int i = 0; i < n_agents; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      ep_mat[idx] = Matrix::Zero(d, d);
      ep_vec[idx] = Vector::Zero(d);
      ep_steps[idx].clear();
    }
    for (long step = 1; step <= episode_len; ++step) {
      const long t = (k - 1) * episode_len + step;
      const RoundDraw round = env.sample_round(t);
      for (int i = 0; i < n_agents; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const DecisionSet& set = round.sets[idx];
        const Vector x = select_action(set, bc).second;
        const double eta = round.noises[idx];
        const double r = reward(x, cfg.env, eta);
        accumulate(ep_mat[idx], ep_vec[idx], x, r);
        if (corrupted[idx] && cfg.attack.mode == AttackMode::FakeParameter) {
          ep_steps[idx].emplace_back(x, eta);
        }
        if (!(corrupted[idx] && active[idx])) {
          const double inc = optimal_value(set, cfg.env.theta_star) - x.dot(cfg.env.theta_star);
          assert(inc >= -1e-12 && inc <= max_step_regret);
          (void)max_step_regret;
          cum += inc;
        }
      }
      trace.cum_regret.push_back(cum);
    }

    // Messages: attack, validate, apply to ledger, privatize for episode k+1.
    for (int i = 0; i < n_agents; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (!corrupted[idx]) {
        honest_mat[idx] += ep_mat[idx];
        honest_vec[idx] += ep_vec[idx];
      }
      EpisodeMessage msg{i, k, ep_mat[idx], ep_vec[idx]};
      if (corrupted[idx] && active[idx]) {
        AttackContext ctx{&cfg.env, &ep_steps[idx]};
        apply_attack(msg, cfg.attack.mode, ctx, attack_rng);
      }
      const SanitizedMessage clean = validate_message(msg, episode_len, cfg.dp_validation);
      v_mat[idx] += clean.u_mat.mat();
      v_vec[idx] += clean.u_vec;
      auto [vh, vv] = privatize(trees[idx], SymMatrix(v_mat[idx]), v_vec[idx],
                                static_cast<int>(k) + 1);
      vhat_mat[idx] = vh.mat();
      vhat_vec[idx] = vv;
    }
  }
  return result;
}

}  // namespace byzbandit
