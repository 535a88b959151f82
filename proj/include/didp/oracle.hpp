#pragma once

#include <cstddef>
#include <unordered_map>

#include "didp/model.hpp"

namespace didp {

// Memoized evaluation of the Bellman equation. Intended as a test oracle on
// small instances; every state it touches is kept in the memo table.
class ExactOracle {
 public:
  static constexpr std::size_t kDefaultCap = std::size_t{1} << 22;

  explicit ExactOracle(const Model& model, std::size_t memo_cap = kDefaultCap)
      : model_(model), cap_(memo_cap) {}

  // Optimal value from `s`; worst_value(direction) when no base state is
  // reachable or `s` violates a state constraint.
  double value(const State& s);

  const std::unordered_map<State, double, StateHash>& table() const { return memo_; }

 private:
  const Model& model_;
  std::size_t cap_;
  std::unordered_map<State, double, StateHash> memo_;
};

double exact_value(const Model& model, const State& s,
                   std::size_t memo_cap = ExactOracle::kDefaultCap);

}  // namespace didp
