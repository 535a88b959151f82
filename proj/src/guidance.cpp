#include "didp/guidance.hpp"

#include <algorithm>
#include <cmath>

namespace didp {

double f_dual(double g, double eta) {
  if (std::isinf(eta)) return eta;
  return g + eta;
}

double f_policy(double g, double eta, double pi_acc, Direction direction) {
  const double pi = std::max(pi_acc, kPolicyFloor);
  const double base = f_dual(g, eta);
  return direction == Direction::kMinimize ? base / pi : base * pi;
}

void DualBoundEvaluator::evaluate(const Model&, const SearchNode&, std::span<SearchNode> children) const {
  for (auto& c : children) {
    c.h = c.eta;
    c.f = f_dual(c.g, c.eta);
  }
}

void ZeroEvaluator::evaluate(const Model&, const SearchNode&, std::span<SearchNode> children) const {
  for (auto& c : children) {
    c.h = 0.0;
    c.f = c.g;
  }
}

GreedyPolicy domain_greedy_policy(std::shared_ptr<const Instance> inst) {
  return [inst = std::move(inst)](const State& s) -> std::optional<TransitionId> {
    try {
      return greedy_successor(*inst, s);
    } catch (const NoSuccessorError&) {
      return std::nullopt;
    }
  };
}

double h_greedy_rollout(const Model& model, const State& s, const GreedyPolicy& policy) {
  State cur = s;
  double total = 0.0;
  for (std::size_t steps = 0;; ++steps) {
    if (auto b = model.base_cost(cur)) return total + *b;
    if (steps >= model.horizon())
      throw MalformedPolicyError("greedy rollout exceeded the horizon of " + std::to_string(model.horizon()) +
                                 " steps");
    const auto t = policy(cur);
    if (!t) return worst_value(model.direction());
    total += model.cost_unchecked(cur, *t);
    cur = model.apply_unchecked(cur, *t);
  }
}

void GreedyRolloutEvaluator::evaluate(const Model& model, const SearchNode&, std::span<SearchNode> children) const {
  for (auto& c : children) {
    c.h = h_greedy_rollout(model, c.state, policy_);
    c.f = std::isinf(c.h) ? c.h : c.g + c.h;
  }
}

ValueNetEvaluator::ValueNetEvaluator(std::shared_ptr<const Mdp> mdp, std::shared_ptr<const NetworkParams> q)
    : mdp_(std::move(mdp)), q_(std::move(q)) {
  if (q_->head != HeadKind::kQ) throw InvalidConfigError("value guidance needs a Q network");
  if (q_->domain != mdp_->domain()) throw InvalidConfigError("network domain does not match the problem");
}

double ValueNetEvaluator::path_scale() const { return mdp_->beta(); }

std::optional<double> ValueNetEvaluator::state_value(const State& s) const {
  const Model& m = mdp_->model();
  if (auto b = m.base_cost(s)) return mdp_->scaled_reward(*b);
  const auto mask = mdp_->mask(s);
  if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) return std::nullopt;
  const auto q = forward(*q_, mdp_->features(s), mask, mdp_->anchor(s));
  double best = -kInfinity;
  for (std::size_t k = 0; k < q.size(); ++k)
    if (mask[k]) best = std::max(best, q[k]);
  return best - mdp_->bonus_to_go(s);
}

void ValueNetEvaluator::evaluate(const Model& model, const SearchNode&, std::span<SearchNode> children) const {
  const bool minimize = model.direction() == Direction::kMinimize;
  for (auto& c : children) {
    const auto v = state_value(c.state);
    if (!v) {
      c.h = worst_value(model.direction());
      c.f = c.h;
      continue;
    }
    c.h = minimize ? -*v : *v;
    c.f = c.g_scaled + c.h;
  }
}

PolicyNetEvaluator::PolicyNetEvaluator(std::shared_ptr<const Mdp> mdp, std::shared_ptr<const NetworkParams> actor)
    : mdp_(std::move(mdp)), actor_(std::move(actor)) {
  if (actor_->head != HeadKind::kActor) throw InvalidConfigError("policy guidance needs an actor network");
  if (actor_->domain != mdp_->domain()) throw InvalidConfigError("network domain does not match the problem");
}

std::vector<double> PolicyNetEvaluator::probabilities(const State& s) const {
  return forward(*actor_, mdp_->features(s), mdp_->mask(s), mdp_->anchor(s));
}

void PolicyNetEvaluator::evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const {
  const auto probs = probabilities(parent.state);
  for (auto& c : children) {
    const double p = std::max(probs[mdp_->action_of(c.via)], kPolicyFloor);
    c.pi_acc = std::max(parent.pi_acc * p, kPolicyFloor);
    c.h = c.eta;
    c.f = f_policy(c.g, c.eta, c.pi_acc, model.direction());
  }
}

std::vector<double> PolicyNetEvaluator::sampling_scores(const Model&, const SearchNode& parent,
                                                        std::span<const SearchNode> children,
                                                        double temperature) const {
  const auto probs = probabilities(parent.state);
  const double t = temperature > 0.0 ? temperature : 1.0;
  std::vector<double> out;
  out.reserve(children.size());
  for (const auto& c : children) out.push_back(std::log(std::max(probs[mdp_->action_of(c.via)], kPolicyFloor)) / t);
  return out;
}

}  // namespace didp
