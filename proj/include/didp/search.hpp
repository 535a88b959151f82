#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "didp/model.hpp"

namespace didp {

struct SearchNode {
  State state;
  double g = 0.0;         // path cost in model units
  double g_scaled = 0.0;  // path cost scaled by the evaluator's path_scale()
  double pi_acc = 1.0;    // product of policy probabilities along the path
  double eta = 0.0;       // dual bound at `state`
  double h = 0.0;
  double f = 0.0;
  std::size_t depth = 0;
  std::shared_ptr<const SearchNode> parent;
  TransitionId via{};
  std::uint64_t seq = 0;  // generation order
  bool removed = false;   // superseded by a dominating node
};

using NodePtr = std::shared_ptr<SearchNode>;

// Turns successors of an expanded node into priorities. Children arrive with
// state, g, g_scaled, eta, depth and via set, and pi_acc equal to the
// parent's; implementations fill h and f (and pi_acc when they use it).
class GuidanceEvaluator {
 public:
  virtual ~GuidanceEvaluator() = default;
  virtual std::string name() const = 0;
  // Factor applied to transition costs when accumulating g_scaled.
  virtual double path_scale() const { return 1.0; }
  virtual void evaluate(const Model& model, const SearchNode& parent, std::span<SearchNode> children) const = 0;
  // Log-weights for sampling one child of `parent` at the given temperature.
  // The default is +-h / temperature, preferring children with a better h.
  virtual std::vector<double> sampling_scores(const Model& model, const SearchNode& parent,
                                              std::span<const SearchNode> children, double temperature) const;
};

struct Incumbent {
  double cost = 0.0;
  TransitionSequence sequence;
  std::size_t expansions_at_discovery = 0;
};

struct TracePoint {
  std::size_t expansions = 0;
  double cost = 0.0;

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct SolveResult {
  std::optional<Incumbent> best;
  bool proved_optimal = false;
  bool limit_reached = false;
  std::size_t expansions = 0;
  std::size_t generated = 0;
  std::vector<TracePoint> anytime_trace;
};

struct SearchLimits {
  std::optional<std::size_t> max_expansions;
  std::optional<double> time_limit_seconds;
};

struct SearchOptions {
  bool bound_pruning = true;
  bool dominance = true;  // use the model's dominance declaration if any
};

// Minimize: g + eta >= incumbent; Maximize: g + eta <= incumbent. A sentinel
// eta (no reachable base state) always prunes.
bool prune_test(double g, double eta, std::optional<double> incumbent_cost, Direction direction);

// Pareto store of (resources, g) per reduced state. Without a dominance
// declaration, or when disabled, it performs exact duplicate detection that
// keeps the better g.
class DominanceRegistry {
 public:
  enum class Outcome { kInserted, kDominated, kReplaces };
  struct Result {
    Outcome outcome = Outcome::kInserted;
    std::vector<NodePtr> replaced;
  };

  DominanceRegistry(const Model& model, bool use_dominance = true);

  Result register_or_dominate(const NodePtr& node);
  void clear() { entries_.clear(); }
  std::size_t size() const;

 private:
  struct Entry {
    std::vector<double> resources;
    double g = 0.0;
    NodePtr node;
  };
  State reduced_key(const State& s) const;
  std::vector<double> resources_of(const State& s) const;
  bool dominates(const std::vector<double>& ra, double ga, const std::vector<double>& rb, double gb) const;

  Direction direction_;
  std::vector<std::size_t> resource_numerics_;
  std::vector<bool> smaller_is_better_;
  std::unordered_map<State, std::vector<Entry>, StateHash> entries_;
};

struct BeamOutcome {
  std::optional<Incumbent> best;
  bool complete = false;
  bool limit_reached = false;
  std::size_t expansions = 0;
  std::size_t generated = 0;
};

// One beam search pass of the given width from the target state.
BeamOutcome beam_search_once(const Model& model, const GuidanceEvaluator& evaluator, std::size_t width,
                             std::optional<Incumbent> incumbent = std::nullopt, const SearchLimits& limits = {},
                             const SearchOptions& options = {});

SolveResult solve_cabs(const Model& model, const GuidanceEvaluator& evaluator, const SearchLimits& limits = {},
                       const SearchOptions& options = {});
SolveResult solve_acps(const Model& model, const GuidanceEvaluator& evaluator, const SearchLimits& limits = {},
                       const SearchOptions& options = {});
SolveResult solve_apps(const Model& model, const GuidanceEvaluator& evaluator, const SearchLimits& limits = {},
                       const SearchOptions& options = {});

enum class SearchAlgorithm { kCabs, kAcps, kApps };
SearchAlgorithm parse_algorithm(const std::string& name);
std::string algorithm_name(SearchAlgorithm algo);
SolveResult solve(SearchAlgorithm algo, const Model& model, const GuidanceEvaluator& evaluator,
                  const SearchLimits& limits = {}, const SearchOptions& options = {});

TransitionSequence path_to(const SearchNode& node);

}  // namespace didp
