#include "didp/model.hpp"

#include <bit>
#include <cmath>
#include <utility>

namespace didp {

std::size_t StateHash::operator()(const State& s) const {
  std::size_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  for (auto e : s.elements) mix(std::hash<std::int64_t>{}(e));
  for (const auto& b : s.sets) mix(b.hash());
  // Numerics are hashed bitwise; -0.0 is folded into +0.0 so that equal
  // values hash equally.
  for (double d : s.numerics) mix(std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(d == 0.0 ? 0.0 : d)));
  return h;
}

Model::Model(ModelDefinition def) : def_(std::move(def)) {
  for (const auto& v : def_.schema) {
    if (v.kind != VariableKind::kNumeric && v.bound < 1)
      throw Error("variable '" + v.name + "' must have a domain of size >= 1");
  }
  for (const auto& t : def_.transitions) {
    if (!t.precondition || !t.effect || !t.cost)
      throw Error("transition family '" + t.name + "' is incomplete");
  }
  check_conforms(def_.target);
}

bool Model::conforms(const State& s) const {
  std::size_t ne = 0, ns = 0, nn = 0;
  for (const auto& v : def_.schema) {
    switch (v.kind) {
      case VariableKind::kElement: {
        if (ne >= s.elements.size()) return false;
        const auto e = s.elements[ne++];
        if (e < 0 || static_cast<std::size_t>(e) >= v.bound) return false;
        break;
      }
      case VariableKind::kSet: {
        if (ns >= s.sets.size()) return false;
        const auto& b = s.sets[ns++];
        if (b.universe() != v.bound || !b.within_universe()) return false;
        break;
      }
      case VariableKind::kNumeric: {
        if (nn >= s.numerics.size()) return false;
        const double d = s.numerics[nn++];
        if (std::isnan(d) || d < v.lower || d > v.upper) return false;
        break;
      }
    }
  }
  return ne == s.elements.size() && ns == s.sets.size() && nn == s.numerics.size();
}

void Model::check_conforms(const State& s) const {
  if (!conforms(s)) throw MalformedStateError("state does not conform to the schema of model '" + def_.name + "'");
}

bool Model::satisfies_constraints(const State& s) const {
  for (const auto& c : def_.state_constraints)
    if (!c(s)) return false;
  return true;
}

const TransitionFamily& Model::family(TransitionId id) const {
  if (id.family >= def_.transitions.size()) throw PreconditionViolationError("unknown transition family");
  return def_.transitions[id.family];
}

template <typename Fn>
void Model::for_each_grounding(const TransitionFamily& fam, const State& s, Fn&& fn) const {
  if (fam.parameter_count == 0) {
    fn(-1);
    return;
  }
  if (fam.candidates) {
    std::vector<int> params;
    fam.candidates(s, params);
    for (int p : params) {
      if (fn(p)) break;
    }
    return;
  }
  for (std::size_t p = 0; p < fam.parameter_count; ++p) {
    if (fn(static_cast<int>(p))) break;
  }
}

std::vector<TransitionId> Model::applicable_transitions(const State& s) const {
  check_conforms(s);
  // Forced transitions: the first applicable one in declaration order wins.
  for (std::uint32_t f = 0; f < def_.transitions.size(); ++f) {
    const auto& fam = def_.transitions[f];
    if (!fam.forced) continue;
    std::optional<TransitionId> found;
    for_each_grounding(fam, s, [&](int p) {
      if (fam.precondition(s, p)) {
        found = TransitionId{f, p};
        return true;
      }
      return false;
    });
    if (found) return {*found};
  }
  std::vector<TransitionId> out;
  for (std::uint32_t f = 0; f < def_.transitions.size(); ++f) {
    const auto& fam = def_.transitions[f];
    if (fam.forced) continue;
    for_each_grounding(fam, s, [&](int p) {
      if (fam.precondition(s, p)) out.push_back(TransitionId{f, p});
      return false;
    });
  }
  return out;
}

bool Model::is_applicable(const State& s, TransitionId id) const {
  if (id.family >= def_.transitions.size()) return false;
  const auto app = applicable_transitions(s);
  for (const auto& t : app)
    if (t == id) return true;
  return false;
}

State Model::apply_transition(const State& s, TransitionId id) const {
  if (!is_applicable(s, id))
    throw PreconditionViolationError("transition " + transition_name(id) + " is not applicable");
  return apply_unchecked(s, id);
}

State Model::apply_unchecked(const State& s, TransitionId id) const {
  return family(id).effect(s, id.parameter);
}

double Model::transition_cost(const State& s, TransitionId id) const {
  if (!is_applicable(s, id))
    throw PreconditionViolationError("transition " + transition_name(id) + " is not applicable");
  return cost_unchecked(s, id);
}

double Model::cost_unchecked(const State& s, TransitionId id) const {
  return family(id).cost(s, id.parameter);
}

std::optional<double> Model::base_cost(const State& s) const {
  std::optional<double> best;
  for (const auto& b : def_.base_cases) {
    if (!b.condition(s)) continue;
    const double c = b.cost(s);
    best = best ? best_of(*best, c, def_.direction) : c;
  }
  return best;
}

bool Model::is_base(const State& s) const {
  for (const auto& b : def_.base_cases)
    if (b.condition(s)) return true;
  return false;
}

double Model::dual_bound(const State& s) const {
  if (!def_.dual_bound) return -worst_value(def_.direction);
  return def_.dual_bound(s);
}

ValidationResult Model::validate_solution(const TransitionSequence& seq) const {
  ValidationResult r;
  State s = def_.target;
  if (!conforms(s)) return {false, 0.0, 1, "target state is malformed"};
  if (!satisfies_constraints(s)) return {false, 0.0, 1, "target state violates a state constraint"};
  double cost = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const TransitionId id = seq[k];
    if (id.family >= def_.transitions.size()) return {false, 0.0, k + 1, "unknown transition"};
    if (!is_applicable(s, id)) {
      return {false, 0.0, k + 1, "precondition of " + transition_name(id) + " does not hold"};
    }
    cost += cost_unchecked(s, id);
    s = apply_unchecked(s, id);
    if (!conforms(s)) return {false, 0.0, k + 1, "successor is malformed"};
    if (!satisfies_constraints(s)) return {false, 0.0, k + 1, "successor violates a state constraint"};
  }
  const auto base = base_cost(s);
  if (!base) return {false, 0.0, seq.size() + 1, "final state is not a base state"};
  r.valid = true;
  r.cost = cost + *base;
  return r;
}

double Model::solution_cost(const TransitionSequence& seq) const {
  const auto r = validate_solution(seq);
  if (!r.valid) throw InvalidSolutionError(r.step, r.reason);
  return r.cost;
}

std::string Model::transition_name(TransitionId id) const {
  if (id.family >= def_.transitions.size()) return "<unknown>";
  const auto& fam = def_.transitions[id.family];
  if (fam.parameter_count == 0) return fam.name;
  return fam.name + "(" + std::to_string(id.parameter) + ")";
}

TransitionId Model::transition(const std::string& name, int parameter) const {
  for (std::uint32_t f = 0; f < def_.transitions.size(); ++f) {
    if (def_.transitions[f].name == name) return {f, def_.transitions[f].parameter_count == 0 ? -1 : parameter};
  }
  throw std::out_of_range("no transition family named '" + name + "'");
}

}  // namespace didp
