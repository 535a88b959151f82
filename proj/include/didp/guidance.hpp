#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "didp/domains.hpp"
#include "didp/learning.hpp"
#include "didp/search.hpp"

namespace didp {

class MalformedPolicyError : public Error {
 public:
  using Error::Error;
};

// g + eta, saturating at the sentinel.
double f_dual(double g, double eta);

// f = g + eta.
class DualBoundEvaluator final : public GuidanceEvaluator {
 public:
  std::string name() const override { return "dual"; }
  void evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const override;
};

// f = g; breadth-first-like ordering.
class ZeroEvaluator final : public GuidanceEvaluator {
 public:
  std::string name() const override { return "zero"; }
  void evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const override;
};

// Returns the transition to follow from a state, or nothing at a dead end.
using GreedyPolicy = std::function<std::optional<TransitionId>(const State&)>;

GreedyPolicy domain_greedy_policy(std::shared_ptr<const Instance> inst);

// Cost of following `policy` from `s` to a base state, base cost included.
// Preconditions are not checked, so routing rollouts ignore deadlines. A dead
// end yields the sentinel worst value; exceeding the model horizon throws.
double h_greedy_rollout(const Model& model, const State& s, const GreedyPolicy& policy);

class GreedyRolloutEvaluator final : public GuidanceEvaluator {
 public:
  explicit GreedyRolloutEvaluator(GreedyPolicy policy) : policy_(std::move(policy)) {}
  std::string name() const override { return "greedy"; }
  void evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const override;

 private:
  GreedyPolicy policy_;
};

// f = g_scaled - max Q (minimize) or g_scaled + max Q (maximize), on the
// reward scale. Base states use the scaled base cost.
class ValueNetEvaluator final : public GuidanceEvaluator {
 public:
  ValueNetEvaluator(std::shared_ptr<const Mdp> mdp, std::shared_ptr<const NetworkParams> q);
  std::string name() const override { return "value"; }
  double path_scale() const override;
  void evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const override;
  // Value estimate (reward units) of a non-base state; nullopt when no action is unmasked.
  std::optional<double> state_value(const State& s) const;

 private:
  std::shared_ptr<const Mdp> mdp_;
  std::shared_ptr<const NetworkParams> q_;
};

inline constexpr double kPolicyFloor = 1e-9;

// f = (g + eta) / pi (minimize) or (g + eta) * pi (maximize), where pi is the
// running product of action probabilities, floored at kPolicyFloor. One
// network pass per expansion.
class PolicyNetEvaluator final : public GuidanceEvaluator {
 public:
  PolicyNetEvaluator(std::shared_ptr<const Mdp> mdp, std::shared_ptr<const NetworkParams> actor);
  std::string name() const override { return "policy"; }
  void evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const override;
  std::vector<double> sampling_scores(const Model& model, const SearchNode& parent,
                                      std::span<const SearchNode> children, double temperature) const override;
  // Action probabilities at `s` over the MDP action space.
  std::vector<double> probabilities(const State& s) const;

 private:
  std::shared_ptr<const Mdp> mdp_;
  std::shared_ptr<const NetworkParams> actor_;
};

double f_policy(double g, double eta, double pi_acc, Direction direction);

}  // namespace didp
