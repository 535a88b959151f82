// 0-1 Knapsack and 4-moment portfolio models.
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "didp/domains.hpp"
#include "domains/internal.hpp"

namespace didp {
namespace {

std::size_t item_of(const State& s) { return static_cast<std::size_t>(s.elements[0]); }
double weight_of(const State& s) { return s.numerics[0]; }

std::array<double, 2> knapsack_bound_terms(const KnapsackInstance& k, const State& s) {
  const std::size_t i = item_of(s);
  if (i >= k.n) return {0.0, 0.0};
  double profit_sum = 0.0;
  double best_ratio = 0.0;
  for (std::size_t j = i; j < k.n; ++j) {
    profit_sum += k.profits[j];
    best_ratio = std::max(best_ratio, k.profits[j] / k.weights[j]);
  }
  return {profit_sum, best_ratio * (k.budget - weight_of(s))};
}

double knapsack_bound(const KnapsackInstance& k, const State& s) {
  const auto t = knapsack_bound_terms(k, s);
  return std::min(t[0], t[1]);
}

// Mean and skewness part of an investment's contribution, per unit weight.
double efficiency_upper(const PortfolioInstance& p, std::size_t j) {
  return (p.lambda[0] * p.mu[j] + p.lambda[2] * std::cbrt(p.gamma[j] * p.gamma[j] * p.gamma[j])) / p.weights[j];
}

std::array<double, 2> portfolio_bound_terms(const PortfolioInstance& p, const State& s) {
  const std::size_t i = item_of(s);
  if (i >= p.n) return {0.0, 0.0};
  double mean_sum = 0.0;
  double cube_sum = 0.0;
  double best_k = 0.0;
  for (std::size_t j = i; j < p.n; ++j) {
    mean_sum += p.mu[j];
    cube_sum += p.gamma[j] * p.gamma[j] * p.gamma[j];
    best_k = std::max(best_k, efficiency_upper(p, j));
  }
  const double remaining_terms = p.lambda[0] * mean_sum + p.lambda[2] * std::cbrt(cube_sum);
  return {remaining_terms, best_k * (p.budget - weight_of(s))};
}

double portfolio_bound(const PortfolioInstance& p, const State& s) {
  const auto t = portfolio_bound_terms(p, s);
  return std::min(t[0], t[1]);
}

// Accumulated moment sums of a chosen set; objective() evaluates ν.
struct MomentSums {
  double mean = 0, var = 0, skew = 0, kurt = 0;

  void add(const PortfolioInstance& p, std::size_t j) {
    mean += p.mu[j];
    var += p.sigma[j] * p.sigma[j];
    skew += p.gamma[j] * p.gamma[j] * p.gamma[j];
    const double k2 = p.kappa[j] * p.kappa[j];
    kurt += k2 * k2;
  }
  double objective(const PortfolioInstance& p) const {
    return p.lambda[0] * mean - p.lambda[1] * std::sqrt(var) + p.lambda[2] * std::cbrt(skew) -
           p.lambda[3] * std::sqrt(std::sqrt(kurt));
  }
};

MomentSums sums_of(const PortfolioInstance& p, const Bitset& chosen) {
  MomentSums m;
  chosen.for_each([&](std::size_t j) { m.add(p, j); });
  return m;
}

template <typename Inst>
void add_packing_transitions(ModelDefinition& def, std::shared_ptr<const Inst> inst, bool track_set) {
  TransitionFamily take;
  take.name = "take";
  take.precondition = [inst](const State& s, int) {
    const std::size_t i = item_of(s);
    return i < inst->n && weight_of(s) + inst->weights[i] <= inst->budget;
  };
  take.effect = [inst, track_set](const State& s, int) {
    State next = s;
    const std::size_t i = item_of(s);
    next.numerics[0] += inst->weights[i];
    next.elements[0] += 1;
    if (track_set) next.sets[0].insert(i);
    return next;
  };
  TransitionFamily skip;
  skip.name = "skip";
  skip.precondition = [inst](const State& s, int) { return item_of(s) < inst->n; };
  skip.effect = [](const State& s, int) {
    State next = s;
    next.elements[0] += 1;
    return next;
  };
  skip.cost = [](const State&, int) { return 0.0; };
  def.transitions.push_back(std::move(take));
  def.transitions.push_back(std::move(skip));
  def.base_cases.push_back({[inst](const State& s) { return item_of(s) >= inst->n; },
                            [](const State&) { return 0.0; }});
  def.direction = Direction::kMaximize;
  def.horizon = inst->n;
}

}  // namespace

State knapsack_state(double weight, std::size_t item) {
  State s;
  s.elements.push_back(static_cast<std::int64_t>(item));
  s.numerics.push_back(weight);
  return s;
}

State portfolio_state(std::size_t n, double weight, std::size_t item, const std::vector<std::size_t>& chosen) {
  State s = knapsack_state(weight, item);
  Bitset y(n);
  for (auto j : chosen) y.insert(j);
  s.sets.push_back(std::move(y));
  return s;
}

double portfolio_objective(const PortfolioInstance& inst, const std::vector<std::size_t>& chosen) {
  MomentSums m;
  for (auto j : chosen) m.add(inst, j);
  return m.objective(inst);
}

namespace detail {

Model build_knapsack_model(const KnapsackInstance& k) {
  auto inst = std::make_shared<const KnapsackInstance>(k);
  ModelDefinition def;
  def.name = "knapsack";
  def.schema.push_back({"item", VariableKind::kElement, k.n + 1});
  def.schema.push_back({"weight", VariableKind::kNumeric, 1, 0.0, k.budget});
  def.target = knapsack_state(0.0, 0);
  add_packing_transitions(def, inst, false);
  def.transitions[packing::kTake].cost = [inst](const State& s, int) { return inst->profits[item_of(s)]; };
  def.dual_bound = [inst](const State& s) { return knapsack_bound(*inst, s); };
  return Model(std::move(def));
}

Model build_portfolio_model(const PortfolioInstance& p) {
  auto inst = std::make_shared<const PortfolioInstance>(p);
  ModelDefinition def;
  def.name = "portfolio";
  def.schema.push_back({"item", VariableKind::kElement, p.n + 1});
  def.schema.push_back({"weight", VariableKind::kNumeric, 1, 0.0, p.budget});
  def.schema.push_back({"chosen", VariableKind::kSet, std::max<std::size_t>(p.n, 1)});
  def.target = portfolio_state(std::max<std::size_t>(p.n, 1), 0.0, 0, {});
  add_packing_transitions(def, inst, true);
  // ν(Y ∪ {i}) − ν(Y)
  def.transitions[packing::kTake].cost = [inst](const State& s, int) {
    MomentSums m = sums_of(*inst, s.sets[0]);
    const double before = m.objective(*inst);
    m.add(*inst, item_of(s));
    return m.objective(*inst) - before;
  };
  def.dual_bound = [inst](const State& s) { return portfolio_bound(*inst, s); };
  return Model(std::move(def));
}

double knapsack_dual_bound(const KnapsackInstance& k, const State& s) { return knapsack_bound(k, s); }
double portfolio_dual_bound(const PortfolioInstance& p, const State& s) { return portfolio_bound(p, s); }
std::array<double, 2> knapsack_dual_bound_terms(const KnapsackInstance& k, const State& s) {
  return knapsack_bound_terms(k, s);
}
std::array<double, 2> portfolio_dual_bound_terms(const PortfolioInstance& p, const State& s) {
  return portfolio_bound_terms(p, s);
}

TransitionId knapsack_greedy(const KnapsackInstance& k, const State& s) {
  const std::size_t i = item_of(s);
  if (i >= k.n) throw NoSuccessorError("greedy successor requested at a base state");
  const bool fits = weight_of(s) + k.weights[i] <= k.budget;
  return {fits ? packing::kTake : packing::kSkip, -1};
}

// Fills the remaining budget in descending order of
// (λ1μ − λ2σ + λ3γ − λ4κ)/w and takes the current item iff it is selected.
TransitionId portfolio_greedy(const PortfolioInstance& p, const State& s) {
  const std::size_t i = item_of(s);
  if (i >= p.n) throw NoSuccessorError("greedy successor requested at a base state");
  std::vector<std::size_t> order(p.n - i);
  std::iota(order.begin(), order.end(), i);
  auto eff = [&p](std::size_t j) {
    return (p.lambda[0] * p.mu[j] - p.lambda[1] * p.sigma[j] + p.lambda[2] * p.gamma[j] -
            p.lambda[3] * p.kappa[j]) /
           p.weights[j];
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return eff(l) > eff(r); });
  double load = weight_of(s);
  for (std::size_t j : order) {
    if (load + p.weights[j] > p.budget) continue;
    load += p.weights[j];
    if (j == i) return {packing::kTake, -1};
  }
  return {packing::kSkip, -1};
}

FeatureMatrix knapsack_features(const KnapsackInstance& k, const State& s) {
  FeatureMatrix f;
  f.rows = k.n;
  f.cols = 8;
  f.data.assign(f.rows * f.cols, 0.0);
  double max_w = 1e-12, max_p = 1e-12, max_wp = 1e-12, max_pw = 1e-12;
  for (std::size_t j = 0; j < k.n; ++j) {
    max_w = std::max(max_w, k.weights[j]);
    max_p = std::max(max_p, k.profits[j]);
    max_wp = std::max(max_wp, k.weights[j] / k.profits[j]);
    max_pw = std::max(max_pw, k.profits[j] / k.weights[j]);
  }
  const std::size_t i = item_of(s);
  const double x = weight_of(s);
  const double budget = std::max(k.budget, 1e-12);
  for (std::size_t j = 0; j < k.n; ++j) {
    f(j, 0) = k.weights[j] / max_w;
    f(j, 1) = k.profits[j] / max_p;
    f(j, 2) = (k.weights[j] / k.profits[j]) / max_wp;
    f(j, 3) = (k.profits[j] / k.weights[j]) / max_pw;
    f(j, 4) = (k.budget - x - k.weights[j]) / budget;
    f(j, 5) = j > i ? 1.0 : 0.0;
    f(j, 6) = j == i ? 1.0 : 0.0;
    f(j, 7) = x + k.weights[j] > k.budget ? 1.0 : 0.0;
  }
  return f;
}

FeatureMatrix portfolio_features(const PortfolioInstance& p, const State& s) {
  FeatureMatrix f;
  f.rows = p.n;
  f.cols = 9;
  f.data.assign(f.rows * f.cols, 0.0);
  const std::vector<double>* columns[5] = {&p.weights, &p.mu, &p.sigma, &p.gamma, &p.kappa};
  double norms[5];
  for (int c = 0; c < 5; ++c) {
    double sq = 0.0;
    for (double v : *columns[c]) sq += v * v;
    norms[c] = sq > 0.0 ? std::sqrt(sq) : 1.0;
  }
  const std::size_t i = item_of(s);
  const double x = weight_of(s);
  for (std::size_t j = 0; j < p.n; ++j) {
    for (int c = 0; c < 5; ++c) f(j, static_cast<std::size_t>(c)) = (*columns[c])[j] / norms[c];
    f(j, 5) = (p.budget - x - p.weights[j]) / norms[0];
    f(j, 6) = j < i ? 1.0 : 0.0;
    f(j, 7) = j == i ? 1.0 : 0.0;
    f(j, 8) = x + p.weights[j] > p.budget ? 1.0 : 0.0;
  }
  return f;
}

}  // namespace detail
}  // namespace didp
