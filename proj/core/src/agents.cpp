#include "hierfolio/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"
#include "hierfolio/hashing.hpp"

namespace hierfolio {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kTanhEps = 1e-6;

Vec to_vec(const ObservationVector& obs) {
  return Eigen::Map<const Vec>(obs.values.data(), static_cast<Eigen::Index>(obs.values.size()));
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

void check_finite(double value, const AgentSpec& spec, const char* what, int episode) {
  if (!std::isfinite(value)) {
    throw DivergenceError(fmt::format("{}: non-finite {} at episode {}", spec.id(), what, episode));
  }
}

// Plain Adam over a free parameter vector (PPO log-std).
struct VecAdam {
  AdamConfig config;
  Vec m, v;
  std::int64_t step = 0;

  VecAdam(std::size_t n, AdamConfig cfg) : config(cfg), m(Vec::Zero(n)), v(Vec::Zero(n)) {}

  void apply(Vec& param, const Vec& grad) {
    if (!grad.allFinite()) throw DivergenceError("non-finite gradient in optimizer step");
    ++step;
    adam_update({param.data(), static_cast<std::size_t>(param.size())},
                {grad.data(), static_cast<std::size_t>(grad.size())},
                {m.data(), static_cast<std::size_t>(m.size())},
                {v.data(), static_cast<std::size_t>(v.size())}, step, config);
  }
};

struct Trainable {
  Mlp3 net;
  OptimState opt;

  Trainable(Mlp3 n, double lr) : net(std::move(n)), opt(OptimState::for_net(net, AdamConfig{lr})) {}
  void apply(const Mlp3Grad& g) { optim_step(net, g, opt); }
};

Mlp3 make_actor(const AgentSpec& spec, std::size_t obs_dim, std::size_t n, Rng& rng) {
  const std::size_t h = spec.hyper.hidden;
  const std::size_t out = spec.algorithm == Algorithm::sac ? 2 * n : n;
  return Mlp3::initialized(obs_dim, h, h, out, OutputHead::linear, rng);
}

Mlp3 make_critic(const AgentSpec& spec, std::size_t input_dim, Rng& rng) {
  const std::size_t h = spec.hyper.hidden;
  return Mlp3::initialized(input_dim, h, h, 1, OutputHead::linear, rng);
}

double log_std_of(double raw) { return std::clamp(raw, kLogStdMin, kLogStdMax); }

// Runs one environment step for a raw action and records the transition.
struct StepResult {
  StepOutcome outcome;
  PortfolioWeights weights;
};

StepResult env_step(const PortfolioEnv& env, const EnvState& state, const Vec& raw,
                    const TrainingProbe* probe) {
  auto weights = project_to_simplex(to_std(raw));
  if (probe != nullptr && probe->on_action) probe->on_action(weights.values());
  auto outcome = env.step(state, weights);
  return {std::move(outcome), std::move(weights)};
}

// ---------------------------------------------------------------------------
// PPO: Gaussian policy on unconstrained actions, state-independent log-std,
// GAE advantages, clipped surrogate, one episode per update.

Policy train_ppo(const AgentSpec& spec, const PortfolioEnv& env, int episodes, Rng& rng,
                 Policy policy, TrainingLog* log, const TrainingProbe* probe) {
  const auto& hp = spec.hyper;
  const std::size_t n = env.n_assets();
  Trainable actor(std::move(policy.actor), hp.actor_lr);
  Trainable critic(make_critic(spec, env.observation_dim(), rng), hp.critic_lr);
  Vec log_std = Vec::Constant(static_cast<Eigen::Index>(n), hp.init_log_std);
  VecAdam log_std_opt(n, AdamConfig{hp.actor_lr});

  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<Vec> obs, actions;
    std::vector<double> logp_old, values, rewards;
    EnvState state = env.reset();
    for (;;) {
      const Vec s = to_vec(state.observation);
      const Vec mu = forward(actor.net, s);
      Vec u(n);
      double logp = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double ls = log_std_of(log_std(ii));
        const double eps = rng.normal();
        u(ii) = mu(ii) + std::exp(ls) * eps;
        logp += -0.5 * eps * eps - ls - 0.5 * kLog2Pi;
      }
      auto step = env_step(env, state, u, probe);
      obs.push_back(s);
      actions.push_back(u);
      logp_old.push_back(logp);
      values.push_back(forward(critic.net, s)(0));
      rewards.push_back(step.outcome.reward);
      const bool done = step.outcome.done;
      state = std::move(step.outcome.next);
      if (done) break;
    }

    const std::size_t T = rewards.size();
    std::vector<double> adv(T), returns(T);
    double next_adv = 0.0;
    for (std::size_t t = T; t-- > 0;) {
      const double next_value = t + 1 < T ? values[t + 1] : 0.0;
      const double delta = rewards[t] + hp.gamma * next_value - values[t];
      next_adv = delta + hp.gamma * hp.gae_lambda * (t + 1 < T ? next_adv : 0.0);
      adv[t] = next_adv;
      returns[t] = adv[t] + values[t];
    }
    const double adv_mean = mean(adv);
    const double adv_std = T >= 2 ? sample_std(adv) : 0.0;
    for (double& a : adv) a = (a - adv_mean) / (adv_std + 1e-8);

    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < hp.ppo_epochs; ++epoch) {
      rng.shuffle(order.begin(), order.end());
      for (std::size_t start = 0; start < T; start += hp.batch_size) {
        const std::size_t end = std::min(T, start + hp.batch_size);
        const double inv_b = 1.0 / static_cast<double>(end - start);
        Mlp3Grad g_actor = actor.net.zeros_like();
        Mlp3Grad g_critic = critic.net.zeros_like();
        Vec g_log_std = Vec::Zero(static_cast<Eigen::Index>(n));
        double critic_loss = 0.0;
        for (std::size_t b = start; b < end; ++b) {
          const std::size_t t = order[b];
          const auto cache = forward_cached(actor.net, obs[t]);
          const Vec& mu = cache.output;
          double logp = 0.0;
          Vec z(n);
          for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double ls = log_std_of(log_std(ii));
            z(ii) = (actions[t](ii) - mu(ii)) / std::exp(ls);
            logp += -0.5 * z(ii) * z(ii) - ls - 0.5 * kLog2Pi;
          }
          const double ratio = std::exp(logp - logp_old[t]);
          const auto sur = ppo_clipped_surrogate(ratio, adv[t], hp.clip_epsilon);
          // loss = -surrogate; d loss / d logp = -d_ratio * ratio
          const double d_logp = -sur.d_ratio * ratio * inv_b;
          Vec d_mu(n);
          for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double ls_raw = log_std(ii);
            const double sigma = std::exp(log_std_of(ls_raw));
            d_mu(ii) = d_logp * z(ii) / sigma;
            const bool free = ls_raw > kLogStdMin && ls_raw < kLogStdMax;
            g_log_std(ii) += free ? d_logp * (z(ii) * z(ii) - 1.0) : 0.0;
          }
          accumulate_backward(actor.net, cache, d_mu, g_actor);

          const auto vc = forward_cached(critic.net, obs[t]);
          const double err = vc.output(0) - returns[t];
          critic_loss += err * err * inv_b;
          Vec d_v(1);
          d_v(0) = 2.0 * err * inv_b;
          accumulate_backward(critic.net, vc, d_v, g_critic);
        }
        check_finite(critic_loss, spec, "critic loss", ep);
        actor.apply(g_actor);
        log_std_opt.apply(log_std, g_log_std);
        critic.apply(g_critic);
      }
    }
    if (log != nullptr) log->mean_episode_reward.push_back(mean(rewards));
  }
  policy.actor = std::move(actor.net);
  return policy;
}

// ---------------------------------------------------------------------------
// Off-policy family. Actions live in [-1, 1]^N before simplex projection.

struct Critic {
  Trainable live;
  Mlp3 target;

  Critic(Mlp3 net, double lr) : live(net, lr), target(std::move(net)) {}
};

double q_value(const Mlp3& q, const Vec& s, const Vec& a) { return forward(q, concat(s, a))(0); }

// Accumulates the squared-error gradient of one critic toward `y`.
double critic_sample(Critic& c, const Vec& s, const Vec& a, double y, double inv_b, Mlp3Grad& g) {
  const auto cache = forward_cached(c.live.net, concat(s, a));
  const double err = cache.output(0) - y;
  Vec d(1);
  d(0) = 2.0 * err * inv_b;
  accumulate_backward(c.live.net, cache, d, g);
  return err * err * inv_b;
}

// dQ/da at (s, a) for the live critic.
std::pair<double, Vec> q_and_action_grad(const Mlp3& q, const Vec& s, const Vec& a) {
  const auto cache = forward_cached(q, concat(s, a));
  Mlp3Grad scratch = q.zeros_like();
  Vec d_in;
  Vec one(1);
  one(0) = 1.0;
  accumulate_backward(q, cache, one, scratch, &d_in);
  return {cache.output(0), d_in.tail(a.size())};
}

struct SacSample {
  Vec action;        // tanh(u)
  Vec u;
  Vec eps;
  Vec sigma;
  double log_prob = 0.0;
};

SacSample sac_sample(const Vec& head, std::size_t n, Rng& rng) {
  SacSample s;
  s.action.resize(static_cast<Eigen::Index>(n));
  s.u.resize(static_cast<Eigen::Index>(n));
  s.eps.resize(static_cast<Eigen::Index>(n));
  s.sigma.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double ls = log_std_of(head(static_cast<Eigen::Index>(n + i)));
    s.sigma(ii) = std::exp(ls);
    s.eps(ii) = rng.normal();
    s.u(ii) = head(ii) + s.sigma(ii) * s.eps(ii);
    s.action(ii) = std::tanh(s.u(ii));
    s.log_prob += -0.5 * s.eps(ii) * s.eps(ii) - ls - 0.5 * kLog2Pi -
                  std::log(1.0 - s.action(ii) * s.action(ii) + kTanhEps);
  }
  return s;
}

Vec tanh_vec(const Vec& z) { return z.array().tanh().matrix(); }

Vec clip_unit(Vec a) { return a.cwiseMax(-1.0).cwiseMin(1.0); }

Policy train_off_policy(const AgentSpec& spec, const PortfolioEnv& env, int episodes, Rng& rng,
                        Policy policy, TrainingLog* log, const TrainingProbe* probe) {
  const auto& hp = spec.hyper;
  const std::size_t n = env.n_assets();
  const std::size_t obs_dim = env.observation_dim();
  const bool sac = spec.algorithm == Algorithm::sac;
  const bool td3 = spec.algorithm == Algorithm::td3;
  const bool twin = sac || td3;

  Trainable actor(std::move(policy.actor), hp.actor_lr);
  Mlp3 actor_target = actor.net;
  std::vector<Critic> critics;
  critics.emplace_back(make_critic(spec, obs_dim + n, rng), hp.critic_lr);
  if (twin) critics.emplace_back(make_critic(spec, obs_dim + n, rng), hp.critic_lr);

  ReplayBuffer buffer(hp.replay_capacity);
  std::size_t total_steps = 0;
  std::size_t critic_updates = 0;

  auto update = [&](int ep) {
    const auto idx = buffer.sample_indices(hp.batch_size, rng);
    const double inv_b = 1.0 / static_cast<double>(idx.size());

    std::vector<double> targets(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& tr = buffer[idx[j]];
      double next_q = 0.0;
      if (!tr.done) {
        if (sac) {
          const auto smp = sac_sample(forward(actor.net, tr.next_observation), n, rng);
          const double q1 = q_value(critics[0].target, tr.next_observation, smp.action);
          const double q2 = q_value(critics[1].target, tr.next_observation, smp.action);
          next_q = std::min(q1, q2) - hp.entropy_weight * smp.log_prob;
        } else {
          Vec a_next = tanh_vec(forward(actor_target, tr.next_observation));
          if (td3) {
            for (Eigen::Index i = 0; i < a_next.size(); ++i) {
              a_next(i) += std::clamp(rng.normal(0.0, hp.target_noise), -hp.target_noise_clip,
                                      hp.target_noise_clip);
            }
            a_next = clip_unit(std::move(a_next));
            const double q1 = q_value(critics[0].target, tr.next_observation, a_next);
            const double q2 = q_value(critics[1].target, tr.next_observation, a_next);
            next_q = std::min(q1, q2);
            if (probe != nullptr && probe->on_twin_target) probe->on_twin_target(q1, q2, next_q);
          } else {
            next_q = q_value(critics[0].target, tr.next_observation, a_next);
          }
        }
      }
      targets[j] = tr.reward + hp.gamma * next_q;
    }

    for (auto& c : critics) {
      Mlp3Grad g = c.live.net.zeros_like();
      double loss = 0.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto& tr = buffer[idx[j]];
        loss += critic_sample(c, tr.observation, tr.action, targets[j], inv_b, g);
      }
      check_finite(loss, spec, "critic loss", ep);
      c.live.apply(g);
    }
    ++critic_updates;

    const bool actor_turn = !td3 || critic_updates % static_cast<std::size_t>(hp.policy_delay) == 0;
    if (!actor_turn) return;

    Mlp3Grad g_actor = actor.net.zeros_like();
    double actor_loss = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const Vec& s = buffer[idx[j]].observation;
      const auto cache = forward_cached(actor.net, s);
      if (sac) {
        const auto smp = sac_sample(cache.output, n, rng);
        auto [q1, dq1] = q_and_action_grad(critics[0].live.net, s, smp.action);
        auto [q2, dq2] = q_and_action_grad(critics[1].live.net, s, smp.action);
        const bool first = q1 <= q2;
        const Vec& dq = first ? dq1 : dq2;
        actor_loss += (hp.entropy_weight * smp.log_prob - (first ? q1 : q2)) * inv_b;
        Vec d_head = Vec::Zero(static_cast<Eigen::Index>(2 * n));
        for (std::size_t i = 0; i < n; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          const double a = smp.action(ii);
          const double da_du = 1.0 - a * a;
          const double d_u = hp.entropy_weight * 2.0 * a * da_du / (da_du + kTanhEps) - dq(ii) * da_du;
          d_head(ii) = d_u * inv_b;
          const double raw_ls = cache.output(static_cast<Eigen::Index>(n + i));
          const bool free = raw_ls > kLogStdMin && raw_ls < kLogStdMax;
          d_head(static_cast<Eigen::Index>(n + i)) =
              free ? (d_u * smp.sigma(ii) * smp.eps(ii) - hp.entropy_weight) * inv_b : 0.0;
        }
        accumulate_backward(actor.net, cache, d_head, g_actor);
      } else {
        const Vec a = tanh_vec(cache.output);
        auto [q, dq] = q_and_action_grad(critics[0].live.net, s, a);
        actor_loss -= q * inv_b;
        const Vec d_z = (-dq.array() * (1.0 - a.array().square())).matrix() * inv_b;
        accumulate_backward(actor.net, cache, d_z, g_actor);
      }
    }
    check_finite(actor_loss, spec, "actor loss", ep);
    actor.apply(g_actor);
    for (auto& c : critics) soft_update(c.target, c.live.net, hp.tau);
    if (!sac) soft_update(actor_target, actor.net, hp.tau);
  };

  for (int ep = 0; ep < episodes; ++ep) {
    double reward_sum = 0.0;
    std::size_t steps = 0;
    EnvState state = env.reset();
    for (;;) {
      const Vec s = to_vec(state.observation);
      Vec a(n);
      if (total_steps < hp.warmup_steps) {
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(-1.0, 1.0);
      } else if (sac) {
        a = sac_sample(forward(actor.net, s), n, rng).action;
      } else {
        a = tanh_vec(forward(actor.net, s));
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += rng.normal(0.0, hp.exploration_std);
        a = clip_unit(std::move(a));
      }
      auto step = env_step(env, state, a, probe);
      const bool done = step.outcome.done;
      buffer.push({s, a, step.outcome.reward, to_vec(step.outcome.next.observation), done});
      reward_sum += step.outcome.reward;
      ++steps;
      ++total_steps;
      state = std::move(step.outcome.next);
      if (total_steps >= hp.warmup_steps && buffer.size() >= hp.batch_size &&
          total_steps % hp.update_every == 0) {
        update(ep);
      }
      if (done) break;
    }
    if (log != nullptr) log->mean_episode_reward.push_back(reward_sum / static_cast<double>(steps));
  }
  policy.actor = std::move(actor.net);
  return policy;
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ppo") return Algorithm::ppo;
  if (name == "sac") return Algorithm::sac;
  if (name == "ddpg") return Algorithm::ddpg;
  if (name == "td3") return Algorithm::td3;
  throw DomainError(fmt::format("unknown algorithm '{}' (ppo|sac|ddpg|td3)", name));
}

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::ppo: return "ppo";
    case Algorithm::sac: return "sac";
    case Algorithm::ddpg: return "ddpg";
    case Algorithm::td3: return "td3";
  }
  return "ppo";
}

void AgentSpec::validate() const {
  const auto& h = hyper;
  if (!(h.gamma > 0.0 && h.gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
  if (h.hidden == 0 || h.batch_size == 0) throw DomainError("hidden size and batch size must be positive");
  if (!(h.actor_lr > 0.0) || !(h.critic_lr > 0.0)) throw DomainError("learning rates must be positive");
  switch (algorithm) {
    case Algorithm::ppo:
      if (!(h.clip_epsilon > 0.0 && h.clip_epsilon < 1.0)) throw DomainError("ppo clip epsilon must lie in (0, 1)");
      if (h.ppo_epochs < 1) throw DomainError("ppo needs at least one epoch per update");
      if (!(h.gae_lambda >= 0.0 && h.gae_lambda <= 1.0)) throw DomainError("gae lambda must lie in [0, 1]");
      break;
    case Algorithm::sac:
      if (!(h.entropy_weight >= 0.0)) throw DomainError("sac entropy weight must be nonnegative");
      break;
    case Algorithm::td3:
      if (h.policy_delay < 1) throw DomainError("td3 policy delay must be at least 1");
      if (!(h.target_noise >= 0.0) || !(h.target_noise_clip >= 0.0)) throw DomainError("td3 target noise must be nonnegative");
      [[fallthrough]];
    case Algorithm::ddpg:
      if (!(h.exploration_std >= 0.0)) throw DomainError("exploration noise must be nonnegative");
      break;
  }
  if (algorithm != Algorithm::ppo) {
    if (!(h.tau > 0.0 && h.tau <= 1.0)) throw DomainError("tau must lie in (0, 1]");
    if (h.replay_capacity == 0 || h.update_every == 0) throw DomainError("replay capacity and update interval must be positive");
  }
}

std::string AgentSpec::id() const {
  return fmt::format("{}_{}_seed{}", to_string(algorithm), to_string(mode), seed);
}

std::uint64_t AgentSpec::rng_seed() const { return derive_seed(global_seed, "base/" + id()); }

nlohmann::json to_json(const AgentSpec& spec) {
  const auto& h = spec.hyper;
  return {
      {"algorithm", to_string(spec.algorithm)},
      {"mode", to_string(spec.mode)},
      {"seed", spec.seed},
      {"global_seed", spec.global_seed},
      {"hyperparameters",
       {{"hidden", h.hidden},
        {"actor_lr", h.actor_lr},
        {"critic_lr", h.critic_lr},
        {"gamma", h.gamma},
        {"batch_size", h.batch_size},
        {"clip_epsilon", h.clip_epsilon},
        {"gae_lambda", h.gae_lambda},
        {"ppo_epochs", h.ppo_epochs},
        {"init_log_std", h.init_log_std},
        {"entropy_weight", h.entropy_weight},
        {"exploration_std", h.exploration_std},
        {"tau", h.tau},
        {"policy_delay", h.policy_delay},
        {"target_noise", h.target_noise},
        {"target_noise_clip", h.target_noise_clip},
        {"replay_capacity", h.replay_capacity},
        {"warmup_steps", h.warmup_steps},
        {"update_every", h.update_every}}},
  };
}

AgentSpec agent_spec_from_json(const nlohmann::json& j) {
  AgentSpec spec;
  spec.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  spec.mode = parse_mode(j.at("mode").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.global_seed = j.value("global_seed", std::uint64_t{0});
  const auto& h = j.at("hyperparameters");
  auto& o = spec.hyper;
  o.hidden = h.at("hidden").get<std::size_t>();
  o.actor_lr = h.at("actor_lr").get<double>();
  o.critic_lr = h.at("critic_lr").get<double>();
  o.gamma = h.at("gamma").get<double>();
  o.batch_size = h.at("batch_size").get<std::size_t>();
  o.clip_epsilon = h.at("clip_epsilon").get<double>();
  o.gae_lambda = h.at("gae_lambda").get<double>();
  o.ppo_epochs = h.at("ppo_epochs").get<int>();
  o.init_log_std = h.at("init_log_std").get<double>();
  o.entropy_weight = h.at("entropy_weight").get<double>();
  o.exploration_std = h.at("exploration_std").get<double>();
  o.tau = h.at("tau").get<double>();
  o.policy_delay = h.at("policy_delay").get<int>();
  o.target_noise = h.at("target_noise").get<double>();
  o.target_noise_clip = h.at("target_noise_clip").get<double>();
  o.replay_capacity = h.at("replay_capacity").get<std::size_t>();
  o.warmup_steps = h.at("warmup_steps").get<std::size_t>();
  o.update_every = h.at("update_every").get<std::size_t>();
  spec.validate();
  return spec;
}

std::vector<double> Policy::raw_action(const Vec& observation) const {
  const Vec out = forward(actor, observation);
  if (spec.algorithm == Algorithm::ppo) return to_std(out);
  // sac emits [mean | log-std]; inference uses tanh(mean)
  return to_std(tanh_vec(out.head(static_cast<Eigen::Index>(n_assets))));
}

PortfolioWeights Policy::act(const ObservationVector& observation) const {
  if (observation.mode != spec.mode) {
    throw DomainError(fmt::format("{} expects {} observations, got {}", spec.id(), to_string(spec.mode),
                                  to_string(observation.mode)));
  }
  if (observation.values.size() != actor.input_dim()) {
    throw DomainError(fmt::format("{} expects observations of length {}, got {}", spec.id(),
                                  actor.input_dim(), observation.values.size()));
  }
  return project_to_simplex(raw_action(to_vec(observation)));
}

std::string Policy::checksum() const {
  return sha256_hex(to_json(spec).dump() + to_json(actor).dump());
}

nlohmann::json to_json(const Policy& policy) {
  return {
      {"format", "hierfolio.policy"},
      {"version", 1},
      {"spec", to_json(policy.spec)},
      {"n_assets", policy.n_assets},
      {"training_window", policy.training_window},
      {"actor", to_json(policy.actor)},
      {"checksum", policy.checksum()},
  };
}

Policy policy_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hierfolio.policy" || j.value("version", 0) != 1) {
    throw DomainError("not a version-1 hierfolio.policy checkpoint");
  }
  Policy p;
  p.spec = agent_spec_from_json(j.at("spec"));
  p.n_assets = j.at("n_assets").get<std::size_t>();
  p.training_window = j.at("training_window").get<std::string>();
  p.actor = mlp3_from_json(j.at("actor"));
  if (p.checksum() != j.at("checksum").get<std::string>()) {
    throw DomainError(fmt::format("policy checkpoint {} failed its checksum", p.spec.id()));
  }
  return p;
}

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << to_json(policy).dump() << '\n';
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  return policy_from_json(nlohmann::json::parse(in));
}

Policy train_base_agent(const AgentSpec& spec, const EnvFactory& make_env, int episodes,
                        TrainingLog* log, const TrainingProbe* probe) {
  spec.validate();
  if (episodes < 0) throw DomainError("episode count must be nonnegative");
  const PortfolioEnv env = make_env();
  if (env.mode() != spec.mode) {
    throw DomainError(fmt::format("{}: environment mode is {}", spec.id(), to_string(env.mode())));
  }
  Rng rng(spec.rng_seed());
  Policy policy;
  policy.spec = spec;
  policy.n_assets = env.n_assets();
  policy.training_window = env.window().str();
  policy.actor = make_actor(spec, env.observation_dim(), env.n_assets(), rng);
  if (episodes == 0) return policy;
  if (spec.algorithm == Algorithm::ppo) return train_ppo(spec, env, episodes, rng, std::move(policy), log, probe);
  return train_off_policy(spec, env, episodes, rng, std::move(policy), log, probe);
}

ClippedSurrogate ppo_clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped_ratio = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  const double unclipped = ratio * advantage;
  const double clipped = clipped_ratio * advantage;
  if (clipped < unclipped) return {clipped, 0.0, true};
  return {unclipped, advantage, false};
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (items_.empty()) throw DomainError("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(items_.size()));
  return idx;
}

std::size_t median_index(std::span<const double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order[(order.size() - 1) / 2];
}

std::vector<const BatteryCell*> PolicySet::cells_for(Algorithm algo, ObservationMode mode) const {
  std::vector<const BatteryCell*> out;
  for (const auto& c : cells) {
    if (c.spec.algorithm == algo && c.spec.mode == mode) out.push_back(&c);
  }
  return out;
}

const BatteryCell* PolicySet::median_cell(Algorithm algo, ObservationMode mode) const {
  std::vector<const BatteryCell*> ok;
  std::vector<double> rois;
  for (const auto* c : cells_for(algo, mode)) {
    if (c->policy && c->report) {
      ok.push_back(c);
      rois.push_back(c->report->metrics.roi);
    }
  }
  if (ok.empty()) return nullptr;
  return ok[median_index(rois)];
}

PolicySet run_seed_battery(const BatteryPlan& plan,
                           const std::function<EnvFactory(ObservationMode)>& env_for_mode) {
  if (plan.seeds.empty()) throw DomainError("seed battery needs at least one seed");
  PolicySet set;
  for (auto mode : plan.modes) {
    for (auto algo : plan.algorithms) {
      for (auto seed : plan.seeds) {
        set.cells.emplace_back().spec = AgentSpec{algo, mode, seed, plan.global_seed, plan.hyper};
      }
    }
  }

  auto run_cell = [&](BatteryCell& cell) {
    try {
      const auto factory = env_for_mode(cell.spec.mode);
      Policy policy = train_base_agent(cell.spec, factory, plan.episodes);
      const PortfolioEnv env = factory();
      const auto& market = env.market();
      const ObservationMode mode = cell.spec.mode;
      auto report = run_backtest(
          cell.spec.id(),
          [&](std::size_t k) { return policy.act(market.observation(mode, k - 1)); }, market,
          env.window(), 0.0, {{"agent", to_json(cell.spec)}});
      cell.policy.emplace(std::move(policy));
      cell.report.emplace(std::move(report));
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.policy.reset();
      cell.report.reset();
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(plan.threads, set.cells.size()));
  if (threads == 1) {
    for (auto& cell : set.cells) run_cell(cell);
    return set;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < set.cells.size(); i = next++) run_cell(set.cells[i]);
    });
  }
  pool.clear();
  return set;
}

}  // namespace hierfolio
