#include "didp/oracle.hpp"

namespace didp {

double ExactOracle::value(const State& s) {
  if (auto it = memo_.find(s); it != memo_.end()) return it->second;
  if (memo_.size() >= cap_)
    throw OracleTooLargeError("exact oracle exceeded its memo cap of " + std::to_string(cap_) + " states");

  const Direction dir = model_.direction();
  double v = worst_value(dir);
  if (!model_.satisfies_constraints(s)) {
    // leave as worst
  } else if (auto base = model_.base_cost(s)) {
    v = *base;
  } else {
    for (const TransitionId t : model_.applicable_transitions(s)) {
      const double c = model_.cost_unchecked(s, t);
      const double rest = value(model_.apply_unchecked(s, t));
      v = best_of(v, c + rest, dir);
    }
  }
  memo_.emplace(s, v);
  return v;
}

double exact_value(const Model& model, const State& s, std::size_t memo_cap) {
  ExactOracle oracle(model, memo_cap);
  return oracle.value(s);
}

}  // namespace didp
