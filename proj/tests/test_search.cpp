#include <cmath>
#include <memory>
#include <random>

#include "brute_force.hpp"
#include "didp/domains.hpp"
#include "didp/guidance.hpp"
#include "didp/oracle.hpp"
#include "didp/search.hpp"
#include "doctest.h"

using namespace didp;

namespace {

TransitionId visit(int j) { return {routing::kVisit, j}; }

// Prefers visit(2) everywhere.
class PreferTwo final : public GuidanceEvaluator {
 public:
  std::string name() const override { return "prefer-two"; }
  void evaluate(const Model&, const SearchNode&, std::span<SearchNode> children) const override {
    for (auto& c : children) {
      c.h = 0.0;
      c.f = c.via == visit(2) ? 0.0 : 100.0;
    }
  }
};

// h = exact optimal cost-to-go.
class PerfectEvaluator final : public GuidanceEvaluator {
 public:
  explicit PerfectEvaluator(const Model& m) : oracle_(std::make_shared<ExactOracle>(m)) {}
  std::string name() const override { return "perfect"; }
  void evaluate(const Model&, const SearchNode&, std::span<SearchNode> children) const override {
    for (auto& c : children) {
      c.h = oracle_->value(c.state);
      c.f = c.g + c.h;
    }
  }

 private:
  std::shared_ptr<ExactOracle> oracle_;
};

// Arbitrary finite priorities derived from a hash of the state.
class ScrambledEvaluator final : public GuidanceEvaluator {
 public:
  std::string name() const override { return "scrambled"; }
  void evaluate(const Model&, const SearchNode&, std::span<SearchNode> children) const override {
    for (auto& c : children) {
      c.h = static_cast<double>(StateHash{}(c.state) % 1000);
      c.f = c.h;
    }
  }
};

void check_trace(const SolveResult& r, Direction d) {
  for (std::size_t k = 1; k < r.anytime_trace.size(); ++k) {
    CHECK(r.anytime_trace[k].expansions >= r.anytime_trace[k - 1].expansions);
    CHECK(strictly_better(r.anytime_trace[k].cost, r.anytime_trace[k - 1].cost, d));
  }
  if (r.best) {
    REQUIRE_FALSE(r.anytime_trace.empty());
    CHECK(r.anytime_trace.back().cost == r.best->cost);
  }
}

void check_incumbent(const Model& m, const SolveResult& r) {
  if (!r.best) return;
  const auto v = m.validate_solution(r.best->sequence);
  CHECK(v.valid);
  CHECK(testing::close_rel(v.cost, r.best->cost, 1e-12));
}

const SearchAlgorithm kAlgorithms[] = {SearchAlgorithm::kCabs, SearchAlgorithm::kAcps, SearchAlgorithm::kApps};

}  // namespace

TEST_CASE("prune test") {
  CHECK(prune_test(3, 2, 5.0, Direction::kMinimize));
  CHECK_FALSE(prune_test(3, 1, 5.0, Direction::kMinimize));
  CHECK(prune_test(3, kInfinity, std::nullopt, Direction::kMinimize));
  CHECK_FALSE(prune_test(3, 1, std::nullopt, Direction::kMinimize));
  CHECK(prune_test(3, 2, 5.0, Direction::kMaximize));
  CHECK_FALSE(prune_test(3, 3, 5.0, Direction::kMaximize));
  CHECK(prune_test(3, -kInfinity, std::nullopt, Direction::kMaximize));
}

TEST_CASE("dominance registry") {
  const Model tw = build_model(fixture_tsptw3());
  auto node = [](std::vector<std::size_t> u, std::size_t i, double t, double g) {
    auto n = std::make_shared<SearchNode>();
    n->state = tsptw_state(3, u, i, t);
    n->g = g;
    return n;
  };
  SUBCASE("smaller time dominates") {
    DominanceRegistry reg(tw);
    CHECK(reg.register_or_dominate(node({2}, 1, 3, 1)).outcome == DominanceRegistry::Outcome::kInserted);
    CHECK(reg.register_or_dominate(node({2}, 1, 5, 1)).outcome == DominanceRegistry::Outcome::kDominated);
    CHECK(reg.size() == 1);
  }
  SUBCASE("different keys are both kept") {
    DominanceRegistry reg(tw);
    CHECK(reg.register_or_dominate(node({2}, 1, 3, 1)).outcome == DominanceRegistry::Outcome::kInserted);
    CHECK(reg.register_or_dominate(node({1}, 2, 3, 1)).outcome == DominanceRegistry::Outcome::kInserted);
  }
  SUBCASE("Pareto-incomparable entries coexist") {
    DominanceRegistry reg(tw);
    CHECK(reg.register_or_dominate(node({2}, 1, 3, 2)).outcome == DominanceRegistry::Outcome::kInserted);
    CHECK(reg.register_or_dominate(node({2}, 1, 5, 1)).outcome == DominanceRegistry::Outcome::kInserted);
    CHECK(reg.size() == 2);
  }
  SUBCASE("a dominating arrival replaces stored entries") {
    DominanceRegistry reg(tw);
    auto a = node({2}, 1, 5, 2);
    auto b = node({2}, 1, 6, 1.5);
    reg.register_or_dominate(a);
    reg.register_or_dominate(b);
    const auto r = reg.register_or_dominate(node({2}, 1, 3, 1));
    CHECK(r.outcome == DominanceRegistry::Outcome::kReplaces);
    CHECK(r.replaced.size() == 2);
    CHECK(a->removed);
    CHECK(b->removed);
    CHECK(reg.size() == 1);
  }
  SUBCASE("disabled dominance keeps only exact duplicates") {
    DominanceRegistry reg(tw, false);
    CHECK(reg.register_or_dominate(node({2}, 1, 3, 1)).outcome == DominanceRegistry::Outcome::kInserted);
    CHECK(reg.register_or_dominate(node({2}, 1, 5, 1)).outcome == DominanceRegistry::Outcome::kInserted);
    CHECK(reg.register_or_dominate(node({2}, 1, 5, 2)).outcome == DominanceRegistry::Outcome::kDominated);
  }
}

TEST_CASE("beam search once") {
  const Model tsp = build_model(fixture_tsp3());
  const DualBoundEvaluator dual;
  const auto two = beam_search_once(tsp, dual, 2);
  REQUIRE(two.best);
  CHECK(two.best->cost == 4.0);
  CHECK(two.complete);

  const auto forced = beam_search_once(tsp, PreferTwo{}, 1);
  REQUIRE(forced.best);
  CHECK(forced.best->cost == 15.0);
  CHECK_FALSE(forced.complete);

  const Model tw = build_model(fixture_tsptw3());
  for (std::size_t w : {1, 2, 3, 8}) {
    const auto r = beam_search_once(tw, dual, w);
    REQUIRE(r.best);
    CHECK(r.best->cost == 4.0);
  }
  CHECK_THROWS_AS(beam_search_once(tsp, dual, 0), std::invalid_argument);
}

TEST_CASE("solvers on the fixtures") {
  const DualBoundEvaluator dual;
  const Model tsp = build_model(fixture_tsp3());
  const Model tw = build_model(fixture_tsptw3());
  const Model kp = build_model(fixture_kp2());
  const Model pf = build_model(fixture_pf2());
  for (auto algo : kAlgorithms) {
    CAPTURE(algorithm_name(algo));
    for (const Model* m : {&tsp, &tw, &kp, &pf}) {
      const auto r = solve(algo, *m, dual);
      REQUIRE(r.best);
      CHECK(r.best->cost == doctest::Approx(4.0).epsilon(1e-12));
      CHECK(r.proved_optimal);
      check_incumbent(*m, r);
    }
  }
}

TEST_CASE("infeasible TSPTW is proved infeasible") {
  TsptwInstance inst = fixture_tsptw3();
  inst.b[1] = 0;
  inst.a[1] = 0;
  const Model m = build_model(inst);
  for (auto algo : kAlgorithms) {
    const auto r = solve(algo, m, DualBoundEvaluator{});
    CHECK_FALSE(r.best);
    CHECK(r.proved_optimal);
  }
}

TEST_CASE("expansion limits") {
  const Model tsp = build_model(fixture_tsp3());
  const SearchLimits one{1, std::nullopt};
  for (auto algo : kAlgorithms) {
    const auto r = solve(algo, tsp, DualBoundEvaluator{}, one);
    CHECK(r.expansions <= 1);
    CHECK_FALSE(r.proved_optimal);
    CHECK(r.limit_reached);
    check_trace(r, tsp.direction());
    for (const auto& p : r.anytime_trace) CHECK(p.expansions <= 1);
  }
  const auto none = solve_cabs(tsp, DualBoundEvaluator{}, SearchLimits{0, std::nullopt});
  CHECK_FALSE(none.best);
  CHECK(none.expansions == 0);
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("apps") == SearchAlgorithm::kApps);
  CHECK_THROWS_AS(parse_algorithm("foo"), std::invalid_argument);
}

TEST_CASE("oracle equivalence and anytime monotonicity on the suite") {
  const DualBoundEvaluator dual;
  for (const auto& c : testing::oracle_suite()) {
    const Instance inst = generate_instance(c.tag, c.n, c.seed);
    const Model m = build_model(inst);
    const double opt = testing::brute_force(inst);
    for (auto algo : kAlgorithms) {
      CAPTURE(domain_name(c.tag));
      CAPTURE(c.seed);
      CAPTURE(algorithm_name(algo));
      const auto r = solve(algo, m, dual);
      CHECK(r.proved_optimal);
      REQUIRE(r.best);
      CHECK(testing::close_rel(r.best->cost, opt, 1e-9));
      check_trace(r, m.direction());
      check_incumbent(m, r);
    }
  }
}

TEST_CASE("guidance reorders but never changes proved-optimal costs") {
  const ScrambledEvaluator scrambled;
  const ZeroEvaluator zero;
  for (const auto& c : testing::oracle_suite(6)) {
    const Instance inst = generate_instance(c.tag, c.n, c.seed);
    const Model m = build_model(inst);
    const double opt = exact_value(m, m.target());
    const GreedyRolloutEvaluator greedy(domain_greedy_policy(std::make_shared<const Instance>(inst)));
    for (const GuidanceEvaluator* e : std::initializer_list<const GuidanceEvaluator*>{&scrambled, &zero, &greedy}) {
      for (auto algo : kAlgorithms) {
        CAPTURE(e->name());
        CAPTURE(algorithm_name(algo));
        const auto r = solve(algo, m, *e);
        CHECK(r.proved_optimal);
        REQUIRE(r.best);
        CHECK(testing::close_rel(r.best->cost, opt, 1e-9));
        check_trace(r, m.direction());
      }
    }
  }
}

TEST_CASE("disabling bound pruning or dominance keeps the optimum") {
  const DualBoundEvaluator dual;
  for (const auto& c : testing::oracle_suite(8)) {
    if (c.n > 8) continue;
    const Model m = build_model(generate_instance(c.tag, c.n, c.seed));
    const double opt = exact_value(m, m.target());
    for (auto algo : kAlgorithms) {
      const auto no_prune = solve(algo, m, dual, {}, SearchOptions{false, true});
      const auto no_dom = solve(algo, m, dual, {}, SearchOptions{true, false});
      REQUIRE(no_prune.best);
      REQUIRE(no_dom.best);
      CHECK(testing::close_rel(no_prune.best->cost, opt, 1e-9));
      CHECK(testing::close_rel(no_dom.best->cost, opt, 1e-9));
      CHECK(no_prune.proved_optimal);
      CHECK(no_dom.proved_optimal);
    }
  }
}

TEST_CASE("a perfect heuristic finds the optimum in the first width-1 beam") {
  for (const auto& c : testing::oracle_suite(5)) {
    const Model m = build_model(generate_instance(c.tag, std::min<std::size_t>(c.n, 8), c.seed));
    const double opt = exact_value(m, m.target());
    const auto r = beam_search_once(m, PerfectEvaluator(m), 1);
    REQUIRE(r.best);
    CHECK(testing::close_rel(r.best->cost, opt, 1e-9));
  }
}
