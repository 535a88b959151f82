// TSP and TSPTW models.
#include <algorithm>
#include <cmath>
#include <memory>

#include "didp/domains.hpp"
#include "domains/internal.hpp"

namespace didp {
namespace {

struct RoutingData {
  std::size_t n = 0;
  std::vector<std::vector<double>> c;
  std::vector<std::vector<double>> shortest;  // c*
  std::vector<double> c_in;
  std::vector<double> c_out;
  bool windows = false;
  std::vector<double> a;
  std::vector<double> b;
};

std::shared_ptr<const RoutingData> make_data(const TspInstance& tsp, const TsptwInstance* tw) {
  auto d = std::make_shared<RoutingData>();
  d->n = tsp.n;
  d->c = tsp.c;
  d->c_in.assign(d->n, kInfinity);
  d->c_out.assign(d->n, kInfinity);
  for (std::size_t j = 0; j < d->n; ++j) {
    for (std::size_t k = 0; k < d->n; ++k) {
      if (k == j) continue;
      d->c_in[j] = std::min(d->c_in[j], d->c[k][j]);
      d->c_out[j] = std::min(d->c_out[j], d->c[j][k]);
    }
    if (d->n == 1) d->c_in[j] = d->c_out[j] = 0.0;
  }
  if (tw != nullptr) {
    d->windows = true;
    d->a = tw->a;
    d->b = tw->b;
    d->shortest = shortest_paths(d->c);
  }
  return d;
}

std::array<double, 2> routing_bound_terms(const RoutingData& d, const State& s) {
  const Bitset& unvisited = s.sets[0];
  const auto current = static_cast<std::size_t>(s.elements[0]);
  double in_sum = d.c_in[0];
  double out_sum = d.c_out[current];
  unvisited.for_each([&](std::size_t j) {
    in_sum += d.c_in[j];
    out_sum += d.c_out[j];
  });
  // `current` may coincide with a member of U only in malformed states; the
  // sums above follow U ∪ {0} and U ∪ {i} with i ∉ U.
  return {in_sum, out_sum};
}

double routing_bound(const RoutingData& d, const State& s) {
  const auto t = routing_bound_terms(d, s);
  return std::max(t[0], t[1]);
}

Model build_routing(std::shared_ptr<const RoutingData> d, const std::string& name) {
  const std::size_t n = d->n;
  ModelDefinition def;
  def.name = name;
  def.direction = Direction::kMinimize;
  def.schema.push_back({"unvisited", VariableKind::kSet, n});
  def.schema.push_back({"current", VariableKind::kElement, n});
  std::vector<std::size_t> all;
  for (std::size_t j = 1; j < n; ++j) all.push_back(j);
  if (d->windows) {
    def.schema.push_back({"time", VariableKind::kNumeric, 1, 0.0, kInfinity});
    def.target = tsptw_state(n, all, 0, 0.0);
  } else {
    def.target = tsp_state(n, all, 0);
  }
  def.horizon = n;

  TransitionFamily visit;
  visit.name = "visit";
  visit.parameter_count = n;
  visit.candidates = [](const State& s, std::vector<int>& out) {
    s.sets[0].for_each([&](std::size_t j) { out.push_back(static_cast<int>(j)); });
  };
  visit.precondition = [d](const State& s, int j) {
    const auto uj = static_cast<std::size_t>(j);
    if (!s.sets[0].contains(uj)) return false;
    if (!d->windows) return true;
    const auto i = static_cast<std::size_t>(s.elements[0]);
    return s.numerics[0] + d->c[i][uj] <= d->b[uj];
  };
  visit.effect = [d](const State& s, int j) {
    const auto uj = static_cast<std::size_t>(j);
    State next = s;
    next.sets[0].erase(uj);
    next.elements[0] = j;
    if (d->windows) {
      const auto i = static_cast<std::size_t>(s.elements[0]);
      next.numerics[0] = std::max(s.numerics[0] + d->c[i][uj], d->a[uj]);
    }
    return next;
  };
  visit.cost = [d](const State& s, int j) {
    return d->c[static_cast<std::size_t>(s.elements[0])][static_cast<std::size_t>(j)];
  };
  def.transitions.push_back(std::move(visit));

  def.base_cases.push_back({[](const State& s) { return s.sets[0].empty(); },
                            [d](const State& s) { return d->c[static_cast<std::size_t>(s.elements[0])][0]; }});

  if (d->windows) {
    // Every unvisited customer must remain reachable before its deadline.
    def.state_constraints.push_back([d](const State& s) {
      const auto i = static_cast<std::size_t>(s.elements[0]);
      const double t = s.numerics[0];
      bool ok = true;
      s.sets[0].for_each([&](std::size_t j) {
        if (t + d->shortest[i][j] > d->b[j]) ok = false;
      });
      return ok;
    });
    def.dominance = DominanceDeclaration{{0}, {true}};
  }
  def.dual_bound = [d](const State& s) { return routing_bound(*d, s); };
  return Model(std::move(def));
}

}  // namespace

State tsp_state(std::size_t n, const std::vector<std::size_t>& unvisited, std::size_t current) {
  State s;
  Bitset u(n);
  for (auto j : unvisited) u.insert(j);
  s.sets.push_back(std::move(u));
  s.elements.push_back(static_cast<std::int64_t>(current));
  return s;
}

State tsptw_state(std::size_t n, const std::vector<std::size_t>& unvisited, std::size_t current, double time) {
  State s = tsp_state(n, unvisited, current);
  s.numerics.push_back(time);
  return s;
}

namespace detail {

Model build_tsp_model(const TspInstance& inst) { return build_routing(make_data(inst, nullptr), "tsp"); }

Model build_tsptw_model(const TsptwInstance& inst) {
  return build_routing(make_data(inst.tsp, &inst), "tsptw");
}

double tsp_dual_bound(const TspInstance& inst, const State& s) {
  return routing_bound(*make_data(inst, nullptr), s);
}

std::array<double, 2> tsp_dual_bound_terms(const TspInstance& inst, const State& s) {
  return routing_bound_terms(*make_data(inst, nullptr), s);
}

TransitionId routing_greedy(const TspInstance& tsp, const TsptwInstance* tw, const State& s) {
  const Bitset& unvisited = s.sets[0];
  if (unvisited.empty()) throw NoSuccessorError("greedy successor requested at a base state");
  const auto i = static_cast<std::size_t>(s.elements[0]);
  double best = kInfinity;
  int pick = -1;
  unvisited.for_each([&](std::size_t j) {
    double key = tsp.c[i][j];
    // Time windows only shape the arrival time; deadlines are ignored.
    if (tw != nullptr) key = std::max(s.numerics[0] + key, tw->a[j]);
    if (key < best) {
      best = key;
      pick = static_cast<int>(j);
    }
  });
  return {routing::kVisit, pick};
}

FeatureMatrix routing_features(const TspInstance& tsp, const TsptwInstance* tw, const State& s) {
  FeatureMatrix f;
  f.rows = tsp.n;
  f.cols = tw != nullptr ? 6 : 4;
  f.data.assign(f.rows * f.cols, 0.0);
  double coord_scale = 100.0;
  for (const auto& xy : tsp.coords) coord_scale = std::max({coord_scale, xy[0], xy[1]});
  double time_scale = 1.0;
  if (tw != nullptr) {
    for (std::size_t j = 1; j < tsp.n; ++j) time_scale = std::max(time_scale, tw->b[j]);
  }
  const auto current = static_cast<std::size_t>(s.elements[0]);
  for (std::size_t j = 0; j < tsp.n; ++j) {
    if (!tsp.coords.empty()) {
      f(j, 0) = tsp.coords[j][0] / coord_scale;
      f(j, 1) = tsp.coords[j][1] / coord_scale;
    }
    f(j, 2) = s.sets[0].contains(j) ? 1.0 : 0.0;
    f(j, 3) = j == current ? 1.0 : 0.0;
    if (tw != nullptr) {
      f(j, 4) = std::min(tw->a[j] / time_scale, 1.0);
      f(j, 5) = std::min(tw->b[j] / time_scale, 1.0);
    }
  }
  return f;
}

}  // namespace detail

std::vector<std::vector<double>> shortest_paths(const std::vector<std::vector<double>>& c) {
  auto d = c;
  const std::size_t n = d.size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

}  // namespace didp
