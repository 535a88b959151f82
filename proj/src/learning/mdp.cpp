#include <algorithm>

#include "didp/learning.hpp"

namespace didp {

ActionLayout action_layout(DomainTag tag) {
  return tag == DomainTag::kTsp || tag == DomainTag::kTsptw ? ActionLayout::kPerElement
                                                            : ActionLayout::kCurrentElement;
}

double default_beta(DomainTag tag) {
  switch (tag) {
    case DomainTag::kTsp:
    case DomainTag::kTsptw: return 1e-3;
    case DomainTag::kKnapsack:
    case DomainTag::kPortfolio: return 1e-4;
  }
  return 1e-3;
}

double completion_bonus(const TspInstance& tsp) {
  double top = 0.0;
  for (const auto& row : tsp.c)
    for (double v : row) top = std::max(top, v);
  return std::max(1.0, static_cast<double>(tsp.n + 1) * top);
}

Mdp::Mdp(Instance inst, std::optional<double> beta)
    : tag_(domain_of(inst)),
      instance_(std::move(inst)),
      model_(std::make_shared<const Model>(build_model(instance_))),
      beta_(beta.value_or(default_beta(tag_))) {
  if (!(beta_ > 0.0)) throw InvalidConfigError("reward scale must be positive");
  if (tag_ == DomainTag::kTsptw) bonus_ = completion_bonus(std::get<TsptwInstance>(instance_).tsp);
}

std::size_t Mdp::action_count() const {
  return layout() == ActionLayout::kPerElement ? instance_size(instance_) : 2;
}

std::size_t Mdp::anchor(const State& s) const {
  if (layout() == ActionLayout::kPerElement) return 0;
  const auto i = static_cast<std::size_t>(s.elements[0]);
  return std::min(i, instance_size(instance_) - 1);
}

FeatureMatrix Mdp::features(const State& s) const { return extract_features(instance_, s); }

TransitionId Mdp::transition_of(std::size_t action) const {
  if (layout() == ActionLayout::kPerElement) return {routing::kVisit, static_cast<std::int32_t>(action)};
  return {action == 1 ? packing::kTake : packing::kSkip, -1};
}

std::size_t Mdp::action_of(TransitionId t) const {
  if (layout() == ActionLayout::kPerElement) return static_cast<std::size_t>(t.parameter);
  return t.family == packing::kTake ? 1 : 0;
}

std::vector<char> Mdp::mask(const State& s) const {
  std::vector<char> m(action_count(), 0);
  if (model_->is_base(s)) return m;
  for (auto t : model_->applicable_transitions(s)) m[action_of(t)] = 1;
  return m;
}

bool Mdp::is_terminal(const State& s) const {
  if (model_->is_base(s)) return true;
  const auto m = mask(s);
  return std::none_of(m.begin(), m.end(), [](char c) { return c != 0; });
}

double Mdp::scaled_reward(double cost) const {
  return model_->direction() == Direction::kMinimize ? -beta_ * cost : beta_ * cost;
}

double Mdp::bonus_to_go(const State& s) const {
  if (bonus_ == 0.0) return 0.0;
  return beta_ * bonus_ * static_cast<double>(s.sets[0].size());
}

MdpStep Mdp::step(const State& s, std::size_t action) const {
  const auto m = mask(s);
  if (action >= m.size() || !m[action])
    throw InvalidActionError("action " + std::to_string(action) + " is masked");
  const TransitionId t = transition_of(action);
  MdpStep out;
  out.reward = scaled_reward(model_->cost_unchecked(s, t)) + beta_ * bonus_;
  out.next = model_->apply_unchecked(s, t);
  if (auto b = model_->base_cost(out.next)) out.reward += scaled_reward(*b);
  out.next_mask = mask(out.next);
  out.terminal = model_->is_base(out.next) ||
                 std::none_of(out.next_mask.begin(), out.next_mask.end(), [](char c) { return c != 0; });
  return out;
}

std::shared_ptr<const Mdp> build_mdp(const Instance& inst, std::optional<double> beta) {
  return std::make_shared<const Mdp>(inst, beta);
}

std::shared_ptr<const Mdp> build_mdp(const std::string& domain_tag, const Instance& inst,
                                     std::optional<double> beta) {
  if (parse_domain(domain_tag) != domain_of(inst))
    throw UnsupportedDomainError("instance is not a " + domain_tag + " instance");
  return build_mdp(inst, beta);
}

MdpStep mdp_step(const Mdp& mdp, const State& s, std::size_t action) { return mdp.step(s, action); }

}  // namespace didp
