#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>

#include "didp/kernels.hpp"
#include "didp/learning.hpp"

namespace didp {

namespace {

// Runs body(i) for every sample, serially or with OpenMP. Each call writes
// only to slot i, so both paths produce identical results.
template <typename Body>
void for_each_sample(std::size_t count, Execution exec, Body&& body) {
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto n = static_cast<std::int64_t>(count);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(didp_sample_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void sum_parts(const std::vector<std::vector<double>>& parts, std::vector<double>& out, std::size_t size,
               Execution exec) {
  if (parts.empty()) {
    out.assign(size, 0.0);
    return;
  }
  if (exec == Execution::kSerial) {
    kernels::sum_gradients_serial(parts, out);
  } else {
    kernels::sum_gradients_parallel(parts, out);
  }
}

double max_unmasked(const std::vector<double>& q, const std::vector<char>& mask) {
  double best = -kInfinity;
  for (std::size_t k = 0; k < q.size(); ++k)
    if (mask[k]) best = std::max(best, q[k]);
  return best == -kInfinity ? 0.0 : best;
}

}  // namespace

LossAndGrad dqn_loss(const NetworkParams& q, const NetworkParams& target, std::span<const Transition> batch,
                     double gamma, Execution exec) {
  LossAndGrad out;
  const std::size_t b = batch.size();
  if (b == 0) {
    out.grad.assign(q.values.size(), 0.0);
    return out;
  }
  std::vector<double> losses(b, 0.0);
  std::vector<std::vector<double>> parts(b);
  const double scale = 1.0 / static_cast<double>(b);
  for_each_sample(b, exec, [&](std::size_t i) {
    const Transition& t = batch[i];
    double y = t.reward;
    if (!t.terminal) {
      const auto next = forward(target, t.next_features, t.next_mask, t.next_anchor);
      y += gamma * max_unmasked(next, t.next_mask);
    }
    NetworkTape tape(q, t.features, t.anchor);
    const auto& values = tape.outputs();
    if (t.action >= values.size()) throw ShapeError("action index out of range");
    const double diff = values[t.action] - y;
    losses[i] = diff * diff;
    std::vector<double> d(values.size(), 0.0);
    d[t.action] = 2.0 * diff * scale;
    parts[i].assign(q.values.size(), 0.0);
    tape.backward(d, parts[i]);
  });
  for (double l : losses) out.loss += l;
  out.loss *= scale;
  sum_parts(parts, out.grad, q.values.size(), exec);
  return out;
}

PpoLoss ppo_loss(const NetworkParams& actor, const NetworkParams& critic, std::span<const PpoSample> batch,
                 double clip, double entropy_coef, Execution exec, bool normalize_advantages) {
  PpoLoss out;
  const std::size_t b = batch.size();
  if (b == 0) {
    out.actor_grad.assign(actor.values.size(), 0.0);
    out.critic_grad.assign(critic.values.size(), 0.0);
    return out;
  }
  const double scale = 1.0 / static_cast<double>(b);

  std::vector<std::optional<NetworkTape>> critic_tapes(b);
  std::vector<double> values(b, 0.0);
  for_each_sample(b, exec, [&](std::size_t i) {
    critic_tapes[i].emplace(critic, batch[i].features, batch[i].anchor);
    values[i] = critic_tapes[i]->outputs()[0];
  });

  out.advantages.resize(b);
  for (std::size_t i = 0; i < b; ++i) out.advantages[i] = batch[i].ret - values[i];
  if (normalize_advantages && b > 1) {
    double mean = 0.0;
    for (double a : out.advantages) mean += a;
    mean *= scale;
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var * scale);
    for (double& a : out.advantages) a = (a - mean) / (sd + 1e-8);
  }

  std::vector<double> actor_terms(b, 0.0), critic_terms(b, 0.0), entropies(b, 0.0);
  std::vector<std::vector<double>> actor_parts(b), critic_parts(b);
  for_each_sample(b, exec, [&](std::size_t i) {
    const PpoSample& s = batch[i];
    NetworkTape tape(actor, s.features, s.anchor);
    const auto& logits = tape.outputs();
    if (s.mask.size() != logits.size()) throw ShapeError("mask size does not match action space");
    if (s.action >= logits.size() || !s.mask[s.action]) throw InvalidActionError("sampled action is masked");
    const auto p = masked_softmax(logits, s.mask);
    double h = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (s.mask[k] && p[k] > 0.0) h -= p[k] * std::log(p[k]);
    const double logp = std::log(p[s.action]);
    const double ratio = std::exp(logp - s.old_log_prob);
    const double adv = out.advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped * adv;
    const bool use_unclipped = unclipped_term <= clipped_term;
    const double surrogate = use_unclipped ? unclipped_term : clipped_term;
    actor_terms[i] = -surrogate - entropy_coef * h;
    entropies[i] = h;
    const double g_logp = use_unclipped ? -adv * ratio : 0.0;
    std::vector<double> d(logits.size(), 0.0);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      if (!s.mask[k]) continue;
      const double delta = k == s.action ? 1.0 : 0.0;
      const double log_pk = p[k] > 0.0 ? std::log(p[k]) : 0.0;
      d[k] = (g_logp * (delta - p[k]) + entropy_coef * p[k] * (log_pk + h)) * scale;
    }
    actor_parts[i].assign(actor.values.size(), 0.0);
    tape.backward(d, actor_parts[i]);

    const double diff = s.ret - values[i];
    critic_terms[i] = diff * diff;
    const double dv = -2.0 * diff * scale;
    critic_parts[i].assign(critic.values.size(), 0.0);
    critic_tapes[i]->backward(std::span<const double>(&dv, 1), critic_parts[i]);
  });
  for (std::size_t i = 0; i < b; ++i) {
    out.actor_loss += actor_terms[i];
    out.critic_loss += critic_terms[i];
    out.entropy += entropies[i];
  }
  out.actor_loss *= scale;
  out.critic_loss *= scale;
  out.entropy *= scale;
  out.loss = out.actor_loss + out.critic_loss;
  sum_parts(actor_parts, out.actor_grad, actor.values.size(), exec);
  sum_parts(critic_parts, out.critic_grad, critic.values.size(), exec);
  return out;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state, double lr) {
  if (grads.size() != params.size()) throw ShapeError("gradient size does not match parameters");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  std::vector<Transition> out;
  if (items_.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(items_[pick(rng)]);
  return out;
}

}  // namespace didp
