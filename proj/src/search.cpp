#include "didp/search.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace didp {

std::vector<double> GuidanceEvaluator::sampling_scores(const Model& model, const SearchNode&,
                                                       std::span<const SearchNode> children,
                                                       double temperature) const {
  const double sign = model.direction() == Direction::kMinimize ? -1.0 : 1.0;
  const double t = temperature > 0.0 ? temperature : 1.0;
  std::vector<double> out;
  out.reserve(children.size());
  for (const auto& c : children) out.push_back(sign * c.h / t);
  return out;
}

bool prune_test(double g, double eta, std::optional<double> incumbent_cost, Direction direction) {
  if (eta == worst_value(direction)) return true;
  if (!incumbent_cost) return false;
  const double bound = g + eta;
  return direction == Direction::kMinimize ? bound >= *incumbent_cost : bound <= *incumbent_cost;
}

TransitionSequence path_to(const SearchNode& node) {
  TransitionSequence seq;
  for (const SearchNode* n = &node; n->parent; n = n->parent.get()) seq.push_back(n->via);
  std::reverse(seq.begin(), seq.end());
  return seq;
}

DominanceRegistry::DominanceRegistry(const Model& model, bool use_dominance) : direction_(model.direction()) {
  if (use_dominance && model.dominance()) {
    resource_numerics_ = model.dominance()->resource_numerics;
    smaller_is_better_ = model.dominance()->smaller_is_better;
  }
}

std::size_t DominanceRegistry::size() const {
  std::size_t total = 0;
  for (const auto& [key, list] : entries_) total += list.size();
  return total;
}

State DominanceRegistry::reduced_key(const State& s) const {
  if (resource_numerics_.empty()) return s;
  State key = s;
  for (auto idx : resource_numerics_) key.numerics[idx] = 0.0;
  return key;
}

std::vector<double> DominanceRegistry::resources_of(const State& s) const {
  std::vector<double> r;
  r.reserve(resource_numerics_.size());
  for (auto idx : resource_numerics_) r.push_back(s.numerics[idx]);
  return r;
}

bool DominanceRegistry::dominates(const std::vector<double>& ra, double ga, const std::vector<double>& rb,
                                  double gb) const {
  if (strictly_better(gb, ga, direction_)) return false;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    const bool smaller = smaller_is_better_[k];
    if (smaller ? ra[k] > rb[k] : ra[k] < rb[k]) return false;
  }
  return true;
}

DominanceRegistry::Result DominanceRegistry::register_or_dominate(const NodePtr& node) {
  Result result;
  auto& list = entries_[reduced_key(node->state)];
  const auto res = resources_of(node->state);
  for (const auto& e : list) {
    if (dominates(e.resources, e.g, res, node->g)) {
      result.outcome = Outcome::kDominated;
      return result;
    }
  }
  auto keep = list.begin();
  for (auto it = list.begin(); it != list.end(); ++it) {
    if (dominates(res, node->g, it->resources, it->g)) {
      it->node->removed = true;
      result.replaced.push_back(it->node);
    } else {
      if (keep != it) *keep = std::move(*it);
      ++keep;
    }
  }
  list.erase(keep, list.end());
  list.push_back({res, node->g, node});
  result.outcome = result.replaced.empty() ? Outcome::kInserted : Outcome::kReplaces;
  return result;
}

namespace {

bool better_node(const SearchNode& a, const SearchNode& b, Direction d) {
  if (a.f != b.f) return strictly_better(a.f, b.f, d);
  if (a.depth != b.depth) return a.depth > b.depth;
  if (a.h != b.h) return a.h < b.h;
  return a.seq < b.seq;
}

struct NodeOrder {
  Direction d;
  bool operator()(const NodePtr& a, const NodePtr& b) const { return better_node(*a, *b, d); }
};

// Heap with the best node on top; callers skip removed nodes.
class OpenList {
 public:
  explicit OpenList(Direction d) : worse_{d} {}
  void push(NodePtr n) {
    heap_.push_back(std::move(n));
    std::push_heap(heap_.begin(), heap_.end(), worse_);
  }
  NodePtr pop() {
    std::pop_heap(heap_.begin(), heap_.end(), worse_);
    NodePtr n = std::move(heap_.back());
    heap_.pop_back();
    return n;
  }
  bool empty() const { return heap_.empty(); }

 private:
  struct Worse {
    Direction d;
    bool operator()(const NodePtr& a, const NodePtr& b) const { return better_node(*b, *a, d); }
  };
  Worse worse_;
  std::vector<NodePtr> heap_;
};

class Searcher {
 public:
  Searcher(const Model& model, const GuidanceEvaluator& eval, const SearchLimits& limits,
           const SearchOptions& options)
      : model_(model),
        eval_(eval),
        limits_(limits),
        options_(options),
        start_(std::chrono::steady_clock::now()) {}

  const Model& model() const { return model_; }
  Direction direction() const { return model_.direction(); }
  const SearchOptions& options() const { return options_; }

  std::size_t expansions = 0;
  std::size_t generated = 0;
  std::optional<Incumbent> incumbent;
  std::vector<TracePoint> trace;
  bool limit_reached = false;

  // Root node, or null when the target violates the state constraints or is
  // itself a base state (in which case the incumbent is set).
  NodePtr make_root() {
    const State& s0 = model_.target();
    model_.check_conforms(s0);
    if (!model_.satisfies_constraints(s0)) return nullptr;
    if (auto b = model_.base_cost(s0)) {
      offer(*b, {});
      return nullptr;
    }
    auto root = std::make_shared<SearchNode>();
    root->state = s0;
    root->eta = model_.dual_bound(s0);
    root->h = root->eta;
    root->f = root->eta;
    root->seq = seq_++;
    return root;
  }

  bool out_of_budget() {
    if (limits_.max_expansions && expansions >= *limits_.max_expansions) return limit_reached = true;
    if (limits_.time_limit_seconds) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (elapsed >= *limits_.time_limit_seconds) return limit_reached = true;
    }
    return false;
  }

  bool pruned(const SearchNode& n) const {
    if (!options_.bound_pruning) return n.eta == worst_value(direction());
    return prune_test(n.g, n.eta, incumbent ? std::optional<double>(incumbent->cost) : std::nullopt, direction());
  }

  // Expands `node`: base successors update the incumbent, the rest are
  // evaluated and returned. Returns true in `improved` when the incumbent changed.
  std::vector<NodePtr> expand(const NodePtr& node, bool& improved) {
    ++expansions;
    improved = false;
    const double scale = eval_.path_scale();
    std::vector<SearchNode> children;
    for (auto t : model_.applicable_transitions(node->state)) {
      ++generated;
      State next = model_.apply_unchecked(node->state, t);
      if (!model_.satisfies_constraints(next)) continue;
      const double cost = model_.cost_unchecked(node->state, t);
      const double g = node->g + cost;
      if (auto b = model_.base_cost(next)) {
        if (offer(g + *b, node, t)) improved = true;
        continue;
      }
      SearchNode c;
      c.state = std::move(next);
      c.g = g;
      c.g_scaled = node->g_scaled + scale * cost;
      c.pi_acc = node->pi_acc;
      c.eta = model_.dual_bound(c.state);
      c.depth = node->depth + 1;
      c.via = t;
      if (pruned(c)) continue;
      children.push_back(std::move(c));
    }
    if (!children.empty()) eval_.evaluate(model_, *node, children);
    std::vector<NodePtr> out;
    out.reserve(children.size());
    for (auto& c : children) {
      c.parent = node;
      c.seq = seq_++;
      out.push_back(std::make_shared<SearchNode>(std::move(c)));
    }
    return out;
  }

  SolveResult finish(bool proved) {
    SolveResult r;
    r.best = incumbent;
    r.proved_optimal = proved && !limit_reached;
    r.limit_reached = limit_reached;
    r.expansions = expansions;
    r.generated = generated;
    r.anytime_trace = trace;
    return r;
  }

 private:
  bool offer(double cost, const NodePtr& parent, TransitionId t) {
    if (incumbent && !strictly_better(cost, incumbent->cost, direction())) return false;
    TransitionSequence seq = path_to(*parent);
    seq.push_back(t);
    return offer(cost, std::move(seq));
  }
  bool offer(double cost, TransitionSequence seq) {
    if (incumbent && !strictly_better(cost, incumbent->cost, direction())) return false;
    incumbent = Incumbent{cost, std::move(seq), expansions};
    trace.push_back({expansions, cost});
    return true;
  }

  const Model& model_;
  const GuidanceEvaluator& eval_;
  SearchLimits limits_;
  SearchOptions options_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t seq_ = 0;
};

// Runs one beam pass on an existing searcher. Returns true when no node was
// discarded for width and the pass was not interrupted.
bool beam_pass(Searcher& s, const NodePtr& root, std::size_t width) {
  if (width < 1) throw std::invalid_argument("beam width must be at least 1");
  bool complete = true;
  std::vector<NodePtr> layer{root};
  DominanceRegistry registry(s.model(), s.options().dominance);
  while (!layer.empty()) {
    registry.clear();
    std::vector<NodePtr> next;
    for (const auto& node : layer) {
      if (node->removed || s.pruned(*node)) continue;
      if (s.out_of_budget()) return false;
      bool improved = false;
      for (auto& c : s.expand(node, improved)) {
        const auto r = registry.register_or_dominate(c);
        if (r.outcome == DominanceRegistry::Outcome::kDominated) continue;
        next.push_back(std::move(c));
      }
    }
    std::erase_if(next, [&](const NodePtr& n) { return n->removed || s.pruned(*n); });
    if (next.size() > width) {
      std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(width), next.end(),
                        NodeOrder{s.direction()});
      next.resize(width);
      complete = false;
    }
    layer = std::move(next);
  }
  return complete;
}

}  // namespace

BeamOutcome beam_search_once(const Model& model, const GuidanceEvaluator& evaluator, std::size_t width,
                             std::optional<Incumbent> incumbent, const SearchLimits& limits,
                             const SearchOptions& options) {
  if (width < 1) throw std::invalid_argument("beam width must be at least 1");
  Searcher s(model, evaluator, limits, options);
  s.incumbent = std::move(incumbent);
  BeamOutcome out;
  const NodePtr root = s.make_root();
  out.complete = root ? beam_pass(s, root, width) : true;
  out.limit_reached = s.limit_reached;
  if (out.limit_reached) out.complete = false;
  out.best = s.incumbent;
  out.expansions = s.expansions;
  out.generated = s.generated;
  return out;
}

SolveResult solve_cabs(const Model& model, const GuidanceEvaluator& evaluator, const SearchLimits& limits,
                       const SearchOptions& options) {
  Searcher s(model, evaluator, limits, options);
  const NodePtr root = s.make_root();
  if (!root) return s.finish(true);
  for (std::size_t width = 1;; width *= 2) {
    const bool complete = beam_pass(s, root, width);
    if (s.limit_reached) return s.finish(false);
    if (complete) return s.finish(true);
  }
}

SolveResult solve_acps(const Model& model, const GuidanceEvaluator& evaluator, const SearchLimits& limits,
                       const SearchOptions& options) {
  Searcher s(model, evaluator, limits, options);
  const NodePtr root = s.make_root();
  if (!root) return s.finish(true);
  std::vector<OpenList> layers;
  layers.emplace_back(s.direction());
  layers[0].push(root);
  DominanceRegistry registry(model, options.dominance);
  registry.register_or_dominate(root);
  std::size_t budget = 1;
  std::size_t i = 0;
  auto nonempty_from = [&](std::size_t from) {
    for (std::size_t j = from; j < layers.size(); ++j)
      if (!layers[j].empty()) return true;
    return false;
  };
  while (nonempty_from(0)) {
    if (!nonempty_from(i)) {
      i = 0;
      ++budget;
      continue;
    }
    std::size_t done = 0;
    bool improved = false;
    while (done < budget && !layers[i].empty()) {
      NodePtr node = layers[i].pop();
      if (node->removed || s.pruned(*node)) continue;
      if (s.out_of_budget()) return s.finish(false);
      bool better = false;
      for (auto& c : s.expand(node, better)) {
        if (registry.register_or_dominate(c).outcome == DominanceRegistry::Outcome::kDominated) continue;
        if (c->depth >= layers.size()) {
          while (layers.size() <= c->depth) layers.emplace_back(s.direction());
        }
        layers[c->depth].push(std::move(c));
      }
      improved = improved || better;
      ++done;
    }
    i = improved ? 0 : i + 1;
  }
  return s.finish(true);
}

SolveResult solve_apps(const Model& model, const GuidanceEvaluator& evaluator, const SearchLimits& limits,
                       const SearchOptions& options) {
  Searcher s(model, evaluator, limits, options);
  const NodePtr root = s.make_root();
  if (!root) return s.finish(true);
  const NodeOrder order{s.direction()};
  DominanceRegistry registry(model, options.dominance);
  registry.register_or_dominate(root);
  OpenList suspended(s.direction());
  std::vector<NodePtr> best{root};
  std::size_t budget = 1;
  for (;;) {
    std::erase_if(best, [&](const NodePtr& n) { return n->removed || s.pruned(*n); });
    if (best.empty()) {
      while (best.size() < budget && !suspended.empty()) {
        NodePtr n = suspended.pop();
        if (n->removed || s.pruned(*n)) continue;
        best.push_back(std::move(n));
      }
      if (best.empty()) return s.finish(true);
      ++budget;
    }
    std::vector<NodePtr> successors;
    for (const auto& node : best) {
      if (node->removed || s.pruned(*node)) continue;
      if (s.out_of_budget()) return s.finish(false);
      bool improved = false;
      for (auto& c : s.expand(node, improved)) {
        if (registry.register_or_dominate(c).outcome == DominanceRegistry::Outcome::kDominated) continue;
        successors.push_back(std::move(c));
      }
    }
    std::erase_if(successors, [](const NodePtr& n) { return n->removed; });
    std::sort(successors.begin(), successors.end(), order);
    best.clear();
    for (std::size_t k = 0; k < successors.size(); ++k) {
      if (k < budget) {
        best.push_back(std::move(successors[k]));
      } else {
        suspended.push(std::move(successors[k]));
      }
    }
  }
}

SearchAlgorithm parse_algorithm(const std::string& name) {
  if (name == "cabs") return SearchAlgorithm::kCabs;
  if (name == "acps") return SearchAlgorithm::kAcps;
  if (name == "apps") return SearchAlgorithm::kApps;
  throw std::invalid_argument("unknown search algorithm: " + name);
}

std::string algorithm_name(SearchAlgorithm algo) {
  switch (algo) {
    case SearchAlgorithm::kCabs: return "cabs";
    case SearchAlgorithm::kAcps: return "acps";
    case SearchAlgorithm::kApps: return "apps";
  }
  return "";
}

SolveResult solve(SearchAlgorithm algo, const Model& model, const GuidanceEvaluator& evaluator,
                  const SearchLimits& limits, const SearchOptions& options) {
  switch (algo) {
    case SearchAlgorithm::kCabs: return solve_cabs(model, evaluator, limits, options);
    case SearchAlgorithm::kAcps: return solve_acps(model, evaluator, limits, options);
    case SearchAlgorithm::kApps: return solve_apps(model, evaluator, limits, options);
  }
  throw std::invalid_argument("unknown search algorithm");
}

}  // namespace didp
