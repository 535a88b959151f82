#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "brute_force.hpp"
#include "didp/domains.hpp"
#include "didp/guidance.hpp"
#include "didp/learning.hpp"
#include "didp/oracle.hpp"
#include "didp/search.hpp"
#include "doctest.h"

using namespace didp;

namespace {

const NetworkConfig kSmall{6, 1, 8, 1};

// Non-base children of `parent`, filled the way a search expansion fills them.
std::vector<SearchNode> children_of(const Model& m, const SearchNode& parent, double scale) {
  std::vector<SearchNode> out;
  for (auto t : m.applicable_transitions(parent.state)) {
    State next = m.apply_transition(parent.state, t);
    if (!m.satisfies_constraints(next) || m.is_base(next)) continue;
    SearchNode c;
    c.g = parent.g + m.transition_cost(parent.state, t);
    c.g_scaled = parent.g_scaled + scale * m.transition_cost(parent.state, t);
    c.pi_acc = parent.pi_acc;
    c.state = std::move(next);
    c.eta = m.dual_bound(c.state);
    c.depth = parent.depth + 1;
    c.via = t;
    out.push_back(std::move(c));
  }
  return out;
}

SearchNode root_of(const Model& m) {
  SearchNode r;
  r.state = m.target();
  r.eta = m.dual_bound(r.state);
  return r;
}

// Q network whose outputs are the final-layer biases.
std::shared_ptr<const NetworkParams> bias_only_q(DomainTag tag, std::vector<double> bias) {
  auto p = std::make_shared<NetworkParams>(zero_like(init_network(tag, HeadKind::kQ, kSmall, 0)));
  const auto& last = p->trunk.back();
  REQUIRE(bias.size() == last.rows);
  std::copy(bias.begin(), bias.end(), p->values.begin() + static_cast<std::ptrdiff_t>(last.bias_offset()));
  return p;
}

const SearchAlgorithm kAlgorithms[] = {SearchAlgorithm::kCabs, SearchAlgorithm::kAcps, SearchAlgorithm::kApps};

}  // namespace

TEST_CASE("dual and zero priorities") {
  CHECK(f_dual(3, 1) == 4);
  CHECK(f_dual(3, kInfinity) == kInfinity);
  CHECK(f_dual(3, -kInfinity) == -kInfinity);
  const Model tsp = build_model(fixture_tsp3());
  const SearchNode root = root_of(tsp);
  auto kids = children_of(tsp, root, 1.0);
  ZeroEvaluator{}.evaluate(tsp, root, kids);
  for (const auto& c : kids) {
    CHECK(c.f == c.g);
    CHECK(c.h == 0.0);
  }
  DualBoundEvaluator{}.evaluate(tsp, root, kids);
  for (const auto& c : kids) CHECK(c.f == c.g + c.eta);
}

TEST_CASE("greedy rollout values") {
  const auto tsp_inst = std::make_shared<const Instance>(fixture_tsp3());
  const Model tsp = build_model(*tsp_inst);
  CHECK(h_greedy_rollout(tsp, tsp.target(), domain_greedy_policy(tsp_inst)) == 4.0);
  CHECK(h_greedy_rollout(tsp, tsp_state(3, {}, 2), domain_greedy_policy(tsp_inst)) == 1.0);

  const auto kp_inst = std::make_shared<const Instance>(fixture_kp2());
  const Model kp = build_model(*kp_inst);
  CHECK(h_greedy_rollout(kp, kp.target(), domain_greedy_policy(kp_inst)) == 3.0);

  const GreedyPolicy loop = [](const State&) { return TransitionId{routing::kVisit, 1}; };
  CHECK_THROWS_AS(h_greedy_rollout(tsp, tsp.target(), loop), MalformedPolicyError);
  const GreedyPolicy stuck = [](const State&) { return std::optional<TransitionId>{}; };
  CHECK(h_greedy_rollout(tsp, tsp.target(), stuck) == kInfinity);
  CHECK(h_greedy_rollout(kp, kp.target(), stuck) == -kInfinity);
}

TEST_CASE("greedy rollout equals the validated cost of prefix plus suffix") {
  std::mt19937_64 rng(4);
  for (auto tag : {DomainTag::kTsp, DomainTag::kKnapsack, DomainTag::kPortfolio}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = std::make_shared<const Instance>(generate_instance(tag, 7, 300 + seed));
      const Model m = build_model(*inst);
      const auto policy = domain_greedy_policy(inst);
      State s = m.target();
      TransitionSequence prefix;
      double g = 0.0;
      const std::size_t steps = rng() % 5;
      for (std::size_t k = 0; k < steps && !m.is_base(s); ++k) {
        const auto ts = m.applicable_transitions(s);
        const auto t = ts[rng() % ts.size()];
        g += m.transition_cost(s, t);
        s = m.apply_transition(s, t);
        prefix.push_back(t);
      }
      const double h = h_greedy_rollout(m, s, policy);
      TransitionSequence full = prefix;
      State cur = s;
      while (!m.is_base(cur)) {
        const auto t = *policy(cur);
        full.push_back(t);
        cur = m.apply_transition(cur, t);
      }
      const auto v = m.validate_solution(full);
      REQUIRE(v.valid);
      CHECK(testing::close_rel(h, v.cost - g, 1e-12));
    }
  }
}

TEST_CASE("value guidance with bias-only networks") {
  const auto mdp = build_mdp(Instance{fixture_kp2()});
  const Model& kp = mdp->model();
  const ValueNetEvaluator eval(mdp, bias_only_q(DomainTag::kKnapsack, {0.2, 0.8}));
  CHECK(eval.path_scale() == 1e-4);
  CHECK(*eval.state_value(kp.target()) == 0.8);
  // Item 1 no longer fits, so only skip (0.2) is unmasked.
  CHECK(*eval.state_value(knapsack_state(2.0, 1)) == 0.2);
  CHECK(*eval.state_value(knapsack_state(0.0, 2)) == 0.0);

  SearchNode root = root_of(kp);
  auto kids = children_of(kp, root, eval.path_scale());
  eval.evaluate(kp, root, kids);
  for (const auto& c : kids) {
    CHECK(c.h == *eval.state_value(c.state));
    CHECK(c.f == doctest::Approx(1e-4 * c.g + c.h).epsilon(1e-15));
  }

  const auto tsp = build_mdp(Instance{fixture_tsp3()});
  const ValueNetEvaluator tv(tsp, bias_only_q(DomainTag::kTsp, {0.5}));
  CHECK(*tv.state_value(tsp->model().target()) == 0.5);
  CHECK(*tv.state_value(tsp_state(3, {}, 1)) == doctest::Approx(-0.005).epsilon(1e-15));
  SearchNode troot = root_of(tsp->model());
  auto tkids = children_of(tsp->model(), troot, tv.path_scale());
  tv.evaluate(tsp->model(), troot, tkids);
  for (const auto& c : tkids) CHECK(c.f == doctest::Approx(1e-3 * c.g - 0.5).epsilon(1e-15));

  const auto tw = build_mdp(Instance{fixture_tsptw3()});
  const ValueNetEvaluator twv(tw, bias_only_q(DomainTag::kTsptw, {0.5}));
  CHECK(*twv.state_value(tw->model().target()) == doctest::Approx(0.5 - 1e-3 * 20.0 * 2).epsilon(1e-15));

  CHECK_THROWS_AS(ValueNetEvaluator(mdp, bias_only_q(DomainTag::kTsp, {0.0})), InvalidConfigError);
  auto actor = std::make_shared<NetworkParams>(init_network(DomainTag::kKnapsack, HeadKind::kActor, kSmall, 0));
  CHECK_THROWS_AS(ValueNetEvaluator(mdp, actor), InvalidConfigError);
}

TEST_CASE("value priorities scale linearly with beta") {
  const Instance inst = generate_instance(DomainTag::kTsp, 6, 17);
  auto q = std::make_shared<NetworkParams>(init_network(DomainTag::kTsp, HeadKind::kQ, kSmall, 5));
  const auto m1 = build_mdp(inst, 1e-3);
  const auto m2 = build_mdp(inst, 4e-3);
  auto q2 = std::make_shared<NetworkParams>(*q);
  // Scaling the output layer scales every Q value.
  const auto& last = q2->trunk.back();
  for (std::size_t k = last.offset; k < last.offset + last.size(); ++k) q2->values[k] *= 4.0;
  const ValueNetEvaluator e1(m1, q), e2(m2, q2);
  const Model& m = m1->model();
  SearchNode root = root_of(m);
  auto k1 = children_of(m, root, e1.path_scale());
  auto k2 = children_of(m, root, e2.path_scale());
  e1.evaluate(m, root, k1);
  e2.evaluate(m, root, k2);
  for (std::size_t i = 0; i < k1.size(); ++i) CHECK(k2[i].f == doctest::Approx(4.0 * k1[i].f).epsilon(1e-12));
}

TEST_CASE("policy priorities") {
  CHECK(f_policy(3, 1, 0.5, Direction::kMinimize) == 8.0);
  CHECK(f_policy(3, 1, 0.5, Direction::kMaximize) == 2.0);
  CHECK(f_policy(3, 1, 0.0, Direction::kMinimize) == 4.0 / kPolicyFloor);
  CHECK(f_policy(3, kInfinity, 0.5, Direction::kMinimize) == kInfinity);

  const auto mdp = build_mdp(Instance{fixture_tsp3()});
  const Model& m = mdp->model();
  const auto uniform =
      std::make_shared<const NetworkParams>(zero_like(init_network(DomainTag::kTsp, HeadKind::kActor, kSmall, 0)));
  const PolicyNetEvaluator eval(mdp, uniform);
  SearchNode root = root_of(m);
  auto kids = children_of(m, root, 1.0);
  eval.evaluate(m, root, kids);
  REQUIRE(kids.size() == 2);
  for (const auto& c : kids) {
    CHECK(c.pi_acc == 0.5);
    CHECK(c.f == f_policy(c.g, c.eta, 0.5, Direction::kMinimize));
  }
  const auto scores = eval.sampling_scores(m, root, kids, 2.0);
  CHECK(scores[0] == doctest::Approx(std::log(0.5) / 2.0));

  CHECK_THROWS_AS(PolicyNetEvaluator(mdp, bias_only_q(DomainTag::kTsp, {0.0})), InvalidConfigError);
}

TEST_CASE("a uniform policy orders siblings like the dual bound") {
  for (auto tag : {DomainTag::kTsp, DomainTag::kTsptw, DomainTag::kKnapsack, DomainTag::kPortfolio}) {
    const auto mdp = build_mdp(generate_instance(tag, 7, 11));
    const Model& m = mdp->model();
    const auto uniform =
        std::make_shared<const NetworkParams>(zero_like(init_network(tag, HeadKind::kActor, kSmall, 0)));
    const PolicyNetEvaluator pol(mdp, uniform);
    SearchNode root = root_of(m);
    auto a = children_of(m, root, 1.0);
    auto b = a;
    pol.evaluate(m, root, a);
    DualBoundEvaluator{}.evaluate(m, root, b);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j)
        CHECK(strictly_better(a[i].f, a[j].f, m.direction()) == strictly_better(b[i].f, b[j].f, m.direction()));
  }
}

TEST_CASE("accumulated policy probability never increases along a path") {
  std::mt19937_64 rng(2);
  for (auto tag : {DomainTag::kTsp, DomainTag::kTsptw, DomainTag::kKnapsack, DomainTag::kPortfolio}) {
    const auto mdp = build_mdp(generate_instance(tag, 8, 21));
    const Model& m = mdp->model();
    const PolicyNetEvaluator pol(mdp, std::make_shared<const NetworkParams>(
                                          init_network(tag, HeadKind::kActor, kSmall, 3)));
    for (int e = 0; e < 10; ++e) {
      SearchNode cur = root_of(m);
      for (;;) {
        auto kids = children_of(m, cur, 1.0);
        if (kids.empty()) break;
        pol.evaluate(m, cur, kids);
        for (const auto& c : kids) {
          CHECK(c.pi_acc <= cur.pi_acc);
          CHECK(c.pi_acc >= kPolicyFloor);
        }
        cur = kids[rng() % kids.size()];
      }
    }
  }
}

TEST_CASE("greedy network rollouts only take unmasked actions") {
  for (auto tag : {DomainTag::kTsp, DomainTag::kTsptw, DomainTag::kKnapsack, DomainTag::kPortfolio}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto mdp = build_mdp(generate_instance(tag, 8, 40 + seed));
      const Model& m = mdp->model();
      for (HeadKind head : {HeadKind::kQ, HeadKind::kActor}) {
        const auto net = init_network(tag, head, kSmall, seed);
        const auto roll = greedy_policy_rollout(*mdp, net);
        State s = m.target();
        for (auto t : roll.actions) {
          CHECK(m.is_applicable(s, t));
          s = m.apply_transition(s, t);
        }
        CHECK(roll.reached_base == m.is_base(s));
      }
    }
  }
}

TEST_CASE("network guidance inside search keeps the optimum") {
  for (const auto& c : testing::oracle_suite(3)) {
    const Instance inst = generate_instance(c.tag, c.n, c.seed);
    const auto mdp = build_mdp(inst);
    const double opt = testing::brute_force(inst);
    const ValueNetEvaluator value(mdp, std::make_shared<const NetworkParams>(
                                           init_network(c.tag, HeadKind::kQ, kSmall, c.seed)));
    const PolicyNetEvaluator policy(mdp, std::make_shared<const NetworkParams>(
                                             init_network(c.tag, HeadKind::kActor, kSmall, c.seed)));
    for (const GuidanceEvaluator* e : std::initializer_list<const GuidanceEvaluator*>{&value, &policy}) {
      for (auto algo : kAlgorithms) {
        CAPTURE(domain_name(c.tag));
        CAPTURE(e->name());
        CAPTURE(algorithm_name(algo));
        const auto r = solve(algo, mdp->model(), *e);
        CHECK(r.proved_optimal);
        REQUIRE(r.best);
        CHECK(testing::close_rel(r.best->cost, opt, 1e-9));
      }
    }
  }
}
