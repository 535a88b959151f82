#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "didp/learning.hpp"

namespace didp {

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw InvalidConfigError("invalid training config: " + what); };
  if (c.batch_size == 0) fail("batch size must be positive");
  if (!(c.learning_rate > 0.0)) fail("learning rate must be positive");
  if (c.final_learning_rate && !(*c.final_learning_rate >= 0.0)) fail("final learning rate must be nonnegative");
  if (c.beta && !(*c.beta > 0.0)) fail("beta must be positive");
  if (!(c.temperature >= 0.0)) fail("temperature must be nonnegative");
  if (!(c.entropy_coef >= 0.0)) fail("entropy coefficient must be nonnegative");
  if (!(c.clip > 0.0 && c.clip < 1.0)) fail("clip must lie in (0, 1)");
  if (c.epochs == 0) fail("epochs must be positive");
  if (c.time_limit_seconds && !(*c.time_limit_seconds >= 0.0)) fail("time limit must be >= 0");
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (c.target_sync == 0) fail("target sync interval must be positive");
  if (c.replay_capacity == 0) fail("replay capacity must be positive");
  if (c.train_every == 0) fail("train_every must be positive");
  if (c.episodes_per_update == 0) fail("episodes per update must be positive");
  if (c.network.embed_dim == 0 || c.network.hidden_dim == 0 || c.network.encoder_layers == 0)
    fail("network dimensions must be positive");
}

TrainConfig reference_preset(DomainTag domain, std::size_t n, LearningAlgorithm algo) {
  struct Column {
    std::size_t batch;
    double lr;
    std::size_t encoder_layers;
    std::size_t embed;
    std::size_t hidden_layers;
    std::size_t hidden;
    double temperature;
    std::size_t epochs;
  };
  const bool dqn = algo == LearningAlgorithm::kDqn;
  Column col{};
  switch (domain) {
    case DomainTag::kTsp:
      if (dqn) col = n <= 20 ? Column{128, 1e-4, 4, 64, 3, 64, 10, 0} : Column{256, 1e-4, 4, 64, 3, 64, 2, 0};
      else col = Column{256, 1e-4, 4, 128, 4, 128, 0, 3};
      break;
    case DomainTag::kTsptw:
      if (dqn) col = n <= 20 ? Column{32, 1e-4, 4, 32, 2, 32, 10, 0} : Column{64, 1e-4, 4, 64, 3, 64, 10, 0};
      else col = n <= 20 ? Column{128, 1e-4, 4, 256, 4, 256, 0, 3} : Column{64, 1e-4, 4, 128, 4, 128, 0, 3};
      break;
    case DomainTag::kKnapsack:
      if (dqn) col = n <= 50 ? Column{128, 1e-4, 3, 128, 2, 128, 2, 0} : Column{128, 1e-4, 3, 128, 3, 128, 2, 0};
      else col = Column{128, 1e-3, 3, 128, 3, 128, 0, 4};
      break;
    case DomainTag::kPortfolio:
      if (dqn) col = n <= 20 ? Column{64, 1e-5, 2, 40, 2, 128, 10, 0} : Column{128, 1e-5, 2, 40, 3, 256, 10, 0};
      else col = Column{128, 1e-5, 2, 40, 2, 128, 0, 4};
      break;
  }
  TrainConfig c;
  c.domain = domain;
  c.beta = default_beta(domain);
  c.batch_size = col.batch;
  c.learning_rate = col.lr;
  c.network = NetworkConfig{col.embed, col.encoder_layers, col.hidden, col.hidden_layers};
  if (dqn) c.temperature = col.temperature;
  if (!dqn) c.epochs = col.epochs;
  c.entropy_coef = 1e-3;
  c.clip = 0.1;
  return c;
}

TrainConfig desk_preset(DomainTag domain, LearningAlgorithm algo) {
  TrainConfig c;
  c.domain = domain;
  c.beta = domain == DomainTag::kKnapsack || domain == DomainTag::kPortfolio ? 1e-2 : default_beta(domain);
  c.network = NetworkConfig{32, 1, 64, 1};
  c.batch_size = 32;
  c.learning_rate = 3e-3;
  c.final_learning_rate = 1e-5;
  c.clip = 0.1;
  if (algo == LearningAlgorithm::kDqn) {
    c.temperature = 0.4;
    c.target_sync = 100;
  } else {
    c.epochs = 8;
    c.entropy_coef = 2e-2;
  }
  return c;
}

InstanceGenerator fixed_instance(Instance inst) {
  return [inst = std::move(inst)](std::mt19937_64&) { return inst; };
}

InstanceGenerator random_instances(DomainTag domain, std::size_t n) {
  return [domain, n](std::mt19937_64& rng) { return generate_instance(domain, n, rng()); };
}

namespace {

std::size_t sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  std::size_t last = probs.size();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    acc += probs[k];
    last = k;
    if (r < acc) return k;
  }
  return last;
}

std::size_t argmax_unmasked(const std::vector<double>& v, const std::vector<char>& mask) {
  std::size_t best = v.size();
  for (std::size_t k = 0; k < v.size(); ++k)
    if (mask[k] && (best == v.size() || v[k] > v[best])) best = k;
  return best;
}

void check_finite(double loss, const char* what, std::size_t episode, std::size_t update) {
  if (std::isfinite(loss)) return;
  std::ostringstream os;
  os << what << " loss became non-finite (" << loss << ") at episode " << episode << ", update " << update;
  throw TrainingDivergedError(os.str());
}

// Caches the MDP for generators that keep returning the same instance.
class Deadline {
 public:
  explicit Deadline(std::optional<double> seconds) : seconds_(seconds), start_(std::chrono::steady_clock::now()) {}
  bool passed() const {
    return seconds_ && std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() >= *seconds_;
  }

 private:
  std::optional<double> seconds_;
  std::chrono::steady_clock::time_point start_;
};

class MdpCache {
 public:
  MdpCache(std::optional<double> beta) : beta_(beta) {}
  const Mdp& get(const Instance& inst) {
    const std::string key = instance_to_json(inst);
    if (!mdp_ || key != key_) {
      mdp_ = build_mdp(inst, beta_);
      key_ = key;
    }
    return *mdp_;
  }

 private:
  std::optional<double> beta_;
  std::shared_ptr<const Mdp> mdp_;
  std::string key_;
};

double learning_rate_at(const TrainConfig& c, std::size_t ep) {
  if (!c.final_learning_rate) return c.learning_rate;
  const double frac = std::min(1.0, static_cast<double>(ep) / static_cast<double>(c.episodes));
  return c.learning_rate + (*c.final_learning_rate - c.learning_rate) * frac;
}

}  // namespace

DqnResult train_dqn(const InstanceGenerator& generator, const TrainConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  DqnResult out;
  out.q = init_network(config.domain, HeadKind::kQ, config.network, config.seed);
  NetworkParams target = out.q;
  AdamState adam;
  ReplayBuffer buffer(config.replay_capacity);
  MdpCache cache(config.beta);
  std::size_t steps = 0, updates = 0;
  const Deadline deadline(config.time_limit_seconds);
  for (std::size_t ep = 0; ep < config.episodes && !deadline.passed(); ++ep) {
    const Instance inst = generator(rng);
    const Mdp& mdp = cache.get(inst);
    if (mdp.domain() != config.domain) throw InvalidConfigError("generator domain does not match config");
    State s = mdp.model().target();
    double total = 0.0;
    while (!mdp.is_terminal(s)) {
      Transition t;
      t.features = mdp.features(s);
      t.mask = mdp.mask(s);
      t.anchor = mdp.anchor(s);
      const auto q = forward(out.q, t.features, t.mask, t.anchor);
      t.action = config.temperature > 0.0 ? sample_index(masked_softmax(q, t.mask, config.temperature), rng)
                                          : argmax_unmasked(q, t.mask);
      MdpStep st = mdp.step(s, t.action);
      t.reward = st.reward;
      t.terminal = st.terminal;
      t.next_features = mdp.features(st.next);
      t.next_mask = st.next_mask;
      t.next_anchor = mdp.anchor(st.next);
      total += st.reward;
      s = std::move(st.next);
      buffer.push(std::move(t));
      ++steps;
      if (buffer.size() >= config.batch_size && steps % config.train_every == 0) {
        const auto batch = buffer.sample(config.batch_size, rng);
        const auto lg = dqn_loss(out.q, target, batch, config.gamma, config.execution);
        check_finite(lg.loss, "DQN", ep, updates);
        adam_step(out.q.values, lg.grad, adam, learning_rate_at(config, ep));
        ++updates;
        if (updates % config.target_sync == 0) target = out.q;
      }
    }
    out.episode_returns.push_back(total);
  }
  return out;
}

PpoResult train_ppo(const InstanceGenerator& generator, const TrainConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  PpoResult out;
  out.actor = init_network(config.domain, HeadKind::kActor, config.network, config.seed);
  out.critic = init_network(config.domain, HeadKind::kCritic, config.network, config.seed + 1);
  AdamState actor_adam, critic_adam;
  MdpCache cache(config.beta);
  std::size_t updates = 0;
  std::size_t ep = 0;
  const Deadline deadline(config.time_limit_seconds);
  while (ep < config.episodes && !deadline.passed()) {
    std::vector<PpoSample> samples;
    for (std::size_t k = 0; k < config.episodes_per_update && ep < config.episodes; ++k, ++ep) {
      const Instance inst = generator(rng);
      const Mdp& mdp = cache.get(inst);
      if (mdp.domain() != config.domain) throw InvalidConfigError("generator domain does not match config");
      State s = mdp.model().target();
      const std::size_t first = samples.size();
      std::vector<double> rewards;
      double total = 0.0;
      while (!mdp.is_terminal(s)) {
        PpoSample p;
        p.features = mdp.features(s);
        p.mask = mdp.mask(s);
        p.anchor = mdp.anchor(s);
        const auto probs = forward(out.actor, p.features, p.mask, p.anchor);
        p.action = sample_index(probs, rng);
        p.old_log_prob = std::log(probs[p.action]);
        MdpStep st = mdp.step(s, p.action);
        rewards.push_back(st.reward);
        total += st.reward;
        s = std::move(st.next);
        samples.push_back(std::move(p));
      }
      double ret = 0.0;
      for (std::size_t j = rewards.size(); j-- > 0;) {
        ret = rewards[j] + config.gamma * ret;
        samples[first + j].ret = ret;
      }
      out.episode_returns.push_back(total);
    }
    if (samples.empty()) continue;
    std::vector<std::size_t> order(samples.size());
    for (std::size_t e = 0; e < config.epochs; ++e) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        std::vector<PpoSample> batch;
        batch.reserve(stop - start);
        for (std::size_t k = start; k < stop; ++k) batch.push_back(samples[order[k]]);
        const auto loss = ppo_loss(out.actor, out.critic, batch, config.clip, config.entropy_coef,
                                   config.execution);
        check_finite(loss.loss, "PPO", ep, updates);
        const double lr = learning_rate_at(config, ep);
        adam_step(out.actor.values, loss.actor_grad, actor_adam, lr);
        adam_step(out.critic.values, loss.critic_grad, critic_adam, lr);
        ++updates;
      }
    }
  }
  return out;
}

PolicyRollout greedy_policy_rollout(const Mdp& mdp, const NetworkParams& net) {
  if (net.head == HeadKind::kCritic) throw InvalidConfigError("a critic network has no policy");
  PolicyRollout out;
  State s = mdp.model().target();
  while (!mdp.is_terminal(s)) {
    const auto mask = mdp.mask(s);
    const auto v = forward(net, mdp.features(s), mask, mdp.anchor(s));
    const std::size_t a = argmax_unmasked(v, mask);
    out.actions.push_back(mdp.transition_of(a));
    MdpStep st = mdp.step(s, a);
    out.total_reward += st.reward;
    s = std::move(st.next);
  }
  out.reached_base = mdp.model().is_base(s);
  return out;
}

}  // namespace didp
