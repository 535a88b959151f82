#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "didp/bitset.hpp"

namespace didp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Direction { kMinimize, kMaximize };

// Value of an unreachable base state: +inf when minimizing, -inf when maximizing.
inline double worst_value(Direction d) {
  return d == Direction::kMinimize ? kInfinity : -kInfinity;
}

// True when `a` is strictly better than `b` under the direction.
inline bool strictly_better(double a, double b, Direction d) {
  return d == Direction::kMinimize ? a < b : a > b;
}

inline double best_of(double a, double b, Direction d) {
  return strictly_better(b, a, d) ? b : a;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedStateError : public Error {
 public:
  using Error::Error;
};

class PreconditionViolationError : public Error {
 public:
  using Error::Error;
};

class InvalidSolutionError : public Error {
 public:
  InvalidSolutionError(std::size_t step, const std::string& reason)
      : Error("invalid solution at step " + std::to_string(step) + ": " + reason),
        step_(step),
        reason_(reason) {}
  std::size_t step() const { return step_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t step_;
  std::string reason_;
};

class OracleTooLargeError : public Error {
 public:
  using Error::Error;
};

enum class VariableKind { kElement, kSet, kNumeric };

struct VariableSchema {
  std::string name;
  VariableKind kind = VariableKind::kElement;
  // Element: number of admissible indices. Set: universe size.
  std::size_t bound = 1;
  // Numeric range.
  double lower = -kInfinity;
  double upper = kInfinity;
};

// A complete assignment to the state variables. Values are grouped by kind;
// within a kind they follow schema declaration order.
struct State {
  std::vector<std::int64_t> elements;
  std::vector<Bitset> sets;
  std::vector<double> numerics;

  friend bool operator==(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const;
};

struct TransitionId {
  std::uint32_t family = 0;
  std::int32_t parameter = -1;  // -1 for unparameterized families

  friend bool operator==(const TransitionId&, const TransitionId&) = default;
  friend auto operator<=>(const TransitionId&, const TransitionId&) = default;
};

using TransitionSequence = std::vector<TransitionId>;

// A transition family grounded by an integer parameter (e.g. "visit j").
// Unparameterized families have parameter_count == 0 and are grounded once
// with parameter -1.
struct TransitionFamily {
  std::string name;
  bool forced = false;
  std::size_t parameter_count = 0;
  std::function<bool(const State&, int)> precondition;
  std::function<State(const State&, int)> effect;
  std::function<double(const State&, int)> cost;
  // Optional lazy grounding: appends candidate parameters, in increasing
  // order, that may satisfy the precondition in the given state.
  std::function<void(const State&, std::vector<int>&)> candidates;
};

struct BaseCase {
  std::function<bool(const State&)> condition;
  std::function<double(const State&)> cost;
};

// Resource variables for dominance: two states that agree on every other
// variable are compared componentwise on these numerics.
struct DominanceDeclaration {
  std::vector<std::size_t> resource_numerics;
  std::vector<bool> smaller_is_better;
};

struct ModelDefinition {
  std::string name;
  std::vector<VariableSchema> schema;
  State target;
  std::vector<TransitionFamily> transitions;
  std::vector<BaseCase> base_cases;
  std::vector<std::function<bool(const State&)>> state_constraints;
  // Pointwise tightest of the declared dual bounds. Absent means no bound.
  std::function<double(const State&)> dual_bound;
  Direction direction = Direction::kMinimize;
  std::optional<DominanceDeclaration> dominance;
  // Upper bound on the length of any transition sequence.
  std::size_t horizon = 1'000'000;
};

struct ValidationResult {
  bool valid = false;
  double cost = 0.0;
  std::size_t step = 0;  // 1-based index of the failing step when invalid
  std::string reason;
};

class Model {
 public:
  explicit Model(ModelDefinition def);

  const std::string& name() const { return def_.name; }
  const std::vector<VariableSchema>& schema() const { return def_.schema; }
  const State& target() const { return def_.target; }
  Direction direction() const { return def_.direction; }
  std::size_t horizon() const { return def_.horizon; }
  const std::vector<TransitionFamily>& transition_families() const { return def_.transitions; }
  const std::optional<DominanceDeclaration>& dominance() const { return def_.dominance; }

  bool conforms(const State& s) const;
  void check_conforms(const State& s) const;
  bool satisfies_constraints(const State& s) const;

  // Applicable transitions honoring the forced-transition rule.
  std::vector<TransitionId> applicable_transitions(const State& s) const;
  bool is_applicable(const State& s, TransitionId id) const;

  State apply_transition(const State& s, TransitionId id) const;
  // Applies the effect without checking the precondition.
  State apply_unchecked(const State& s, TransitionId id) const;
  double transition_cost(const State& s, TransitionId id) const;
  double cost_unchecked(const State& s, TransitionId id) const;

  std::optional<double> base_cost(const State& s) const;
  bool is_base(const State& s) const;
  double dual_bound(const State& s) const;
  bool has_dual_bound() const { return static_cast<bool>(def_.dual_bound); }

  double solution_cost(const TransitionSequence& seq) const;
  ValidationResult validate_solution(const TransitionSequence& seq) const;

  std::string transition_name(TransitionId id) const;
  // Looks up a family by name; throws std::out_of_range if absent.
  TransitionId transition(const std::string& family, int parameter = -1) const;

 private:
  const TransitionFamily& family(TransitionId id) const;
  template <typename Fn>
  void for_each_grounding(const TransitionFamily& fam, const State& s, Fn&& fn) const;

  ModelDefinition def_;
};

}  // namespace didp
