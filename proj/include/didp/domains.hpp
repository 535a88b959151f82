#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "didp/model.hpp"

namespace didp {

enum class DomainTag { kTsp, kTsptw, kKnapsack, kPortfolio };

class UnsupportedDomainError : public Error {
 public:
  using Error::Error;
};

class InvalidInstanceError : public Error {
 public:
  using Error::Error;
};

class NoSuccessorError : public Error {
 public:
  using Error::Error;
};

DomainTag parse_domain(const std::string& tag);
std::string domain_name(DomainTag tag);

// Customers 0..n-1, depot 0. `coords` may be empty for hand-written instances.
struct TspInstance {
  std::size_t n = 0;
  std::vector<std::array<double, 2>> coords;
  std::vector<std::vector<double>> c;
};

struct TsptwInstance {
  TspInstance tsp;
  std::vector<double> a;
  std::vector<double> b;
};

// Items sorted by non-increasing profit/weight.
struct KnapsackInstance {
  std::size_t n = 0;
  std::vector<double> weights;
  std::vector<double> profits;
  double budget = 0.0;
};

struct PortfolioInstance {
  std::size_t n = 0;
  std::vector<double> weights;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> gamma;
  std::vector<double> kappa;
  double budget = 0.0;
  std::array<double, 4> lambda{1.0, 5.0, 5.0, 5.0};
};

using Instance = std::variant<TspInstance, TsptwInstance, KnapsackInstance, PortfolioInstance>;

DomainTag domain_of(const Instance& inst);
std::size_t instance_size(const Instance& inst);

// Throws InvalidInstanceError when an instance invariant does not hold.
void validate(const Instance& inst);

// Transition family indices fixed by the builders.
namespace routing {
inline constexpr std::uint32_t kVisit = 0;
}
namespace packing {
inline constexpr std::uint32_t kTake = 0;
inline constexpr std::uint32_t kSkip = 1;
}  // namespace packing

// State constructors matching the builders' layouts:
//   tsp       <U, i>      sets={U}, elements={i}
//   tsptw     <U, i, t>   sets={U}, elements={i}, numerics={t}
//   knapsack  <x, i>      elements={i}, numerics={x}
//   portfolio <x, i, Y>   sets={Y}, elements={i}, numerics={x}
State tsp_state(std::size_t n, const std::vector<std::size_t>& unvisited, std::size_t current);
State tsptw_state(std::size_t n, const std::vector<std::size_t>& unvisited, std::size_t current, double time);
State knapsack_state(double weight, std::size_t item);
State portfolio_state(std::size_t n, double weight, std::size_t item, const std::vector<std::size_t>& chosen);

Model build_model(const Instance& inst);
double dual_bound(const Instance& inst, const State& s);
// The two component bounds; dual_bound is the tighter one.
std::array<double, 2> dual_bound_terms(const Instance& inst, const State& s);
// Domain greedy rule from the state; throws NoSuccessorError at base states.
TransitionId greedy_successor(const Instance& inst, const State& s);

// Row-major per-element feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

std::size_t feature_width(DomainTag tag);
FeatureMatrix extract_features(const Instance& inst, const State& s);

double portfolio_objective(const PortfolioInstance& inst, const std::vector<std::size_t>& chosen);

// Shortest-path closure of a travel-time matrix.
std::vector<std::vector<double>> shortest_paths(const std::vector<std::vector<double>>& c);

struct GeneratorParams {
  double max_window = 100.0;    // W
  double max_gap = 1000.0;      // G
  double coord_max = 100.0;
  int weight_max = 100;
  double profit_offset = 10.0;  // strongly correlated: p = w + offset
  double capacity_ratio = 0.5;
  double moment_max = 100.0;
  std::array<double, 4> lambda{1.0, 5.0, 5.0, 5.0};
};

struct GeneratedTsptw {
  TsptwInstance instance;
  std::vector<std::size_t> reference_tour;  // customers in visiting order, depot excluded
};

GeneratedTsptw generate_tsptw(std::size_t n, std::uint64_t seed, const GeneratorParams& params = {});
Instance generate_instance(DomainTag tag, std::size_t n, std::uint64_t seed,
                           const GeneratorParams& params = {});

// Small hand-checkable instances.
TspInstance fixture_tsp3();
TsptwInstance fixture_tsptw3();
KnapsackInstance fixture_kp2();
PortfolioInstance fixture_pf2();
// Resolves "fix-tsp3", "fix-tsptw3", "fix-kp2", "fix-pf2"; throws on other names.
Instance fixture(const std::string& name);

// Structured-text (JSON) instance documents.
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

}  // namespace didp
