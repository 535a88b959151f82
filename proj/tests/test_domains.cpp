#include <cmath>
#include <random>

#include "brute_force.hpp"
#include "didp/domains.hpp"
#include "didp/oracle.hpp"
#include "doctest.h"

using namespace didp;

TEST_CASE("domain tags") {
  CHECK(parse_domain("tsptw") == DomainTag::kTsptw);
  CHECK(domain_name(DomainTag::kPortfolio) == "portfolio");
  CHECK_THROWS_AS(parse_domain("bin-packing"), UnsupportedDomainError);
}

TEST_CASE("fixture optima") {
  const Model tsp = build_model(fixture_tsp3());
  CHECK(exact_value(tsp, tsp.target()) == 4.0);
  const Model kp = build_model(fixture_kp2());
  CHECK(kp.direction() == Direction::kMaximize);
  CHECK(exact_value(kp, kp.target()) == 4.0);
  const Model pf = build_model(fixture_pf2());
  CHECK(exact_value(pf, pf.target()) == doctest::Approx(4.0));
}

TEST_CASE("routing dual bound by hand") {
  // c_in = [1,1,2], c_out = [1,2,1]; both sums over {0,1,2} are 4.
  CHECK(dual_bound(fixture_tsp3(), tsp_state(3, {1, 2}, 0)) == 4.0);
  const Model tsp = build_model(fixture_tsp3());
  CHECK(tsp.dual_bound(tsp.target()) == 4.0);
}

TEST_CASE("knapsack dual bound by hand") {
  // min(3 + 4, 1.5 * 4) = 6
  CHECK(dual_bound(fixture_kp2(), knapsack_state(0.0, 0)) == 6.0);
  CHECK(dual_bound(fixture_kp2(), knapsack_state(2.0, 2)) == 0.0);
}

TEST_CASE("portfolio objective") {
  PortfolioInstance p = fixture_pf2();
  CHECK(portfolio_objective(p, {}) == 0.0);
  p.lambda = {1, 1, 0, 0};
  p.sigma = {3, 4};
  CHECK(portfolio_objective(p, {0, 1}) == doctest::Approx(2.0).epsilon(1e-14));
  p.lambda = {1, 10, 0, 0};
  CHECK(portfolio_objective(p, {0}) < portfolio_objective(p, {}));
}

TEST_CASE("greedy successors") {
  CHECK(greedy_successor(fixture_tsp3(), tsp_state(3, {1, 2}, 0)) == TransitionId{routing::kVisit, 1});
  CHECK(greedy_successor(fixture_kp2(), knapsack_state(0.0, 0)) == TransitionId{packing::kTake, -1});
  CHECK(greedy_successor(fixture_kp2(), knapsack_state(2.0, 1)) == TransitionId{packing::kSkip, -1});
  CHECK_THROWS_AS(greedy_successor(fixture_kp2(), knapsack_state(2.0, 2)), NoSuccessorError);
  CHECK_THROWS_AS(greedy_successor(fixture_tsp3(), tsp_state(3, {}, 1)), NoSuccessorError);

  // TSPTW ranks by max(t + c_ij, a_j), ignoring deadlines.
  TsptwInstance tw = fixture_tsptw3();
  tw.a = {0, 50, 0};
  CHECK(greedy_successor(tw, tsptw_state(3, {1, 2}, 0, 0.0)) == TransitionId{routing::kVisit, 2});
}

TEST_CASE("greedy is a deterministic function of the state") {
  const Instance inst = generate_instance(DomainTag::kPortfolio, 8, 5);
  const State s = portfolio_state(8, 10.0, 2, {0});
  const auto first = greedy_successor(inst, s);
  for (int k = 0; k < 5; ++k) CHECK(greedy_successor(inst, s) == first);
}

TEST_CASE("feature extraction") {
  const auto tsp = extract_features(fixture_tsp3(), tsp_state(3, {1, 2}, 0));
  CHECK(tsp.rows == 3);
  CHECK(tsp.cols == feature_width(DomainTag::kTsp));
  CHECK(tsp(0, 2) == 0.0);  // depot not in U
  CHECK(tsp(0, 3) == 1.0);  // depot is current
  CHECK(tsp(1, 2) == 1.0);

  const auto kp = extract_features(fixture_kp2(), knapsack_state(2.0, 1));
  CHECK(kp.cols == 8);
  CHECK(kp(1, 7) == 1.0);  // 2 + 3 > 4
  CHECK(kp(1, 6) == 1.0);
  CHECK(kp(0, 7) == 0.0);  // 2 + 2 <= 4

  const Instance pinst = generate_instance(DomainTag::kPortfolio, 6, 9);
  const auto pf = extract_features(pinst, portfolio_state(6, 0.0, 0, {}));
  CHECK(pf.cols == 9);
  for (std::size_t c = 0; c < 5; ++c) {
    double sq = 0.0;
    for (std::size_t r = 0; r < pf.rows; ++r) sq += pf(r, c) * pf(r, c);
    CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("generated instances") {
  const auto gen = generate_tsptw(20, 17);
  const Instance inst = gen.instance;
  CHECK_NOTHROW(validate(inst));
  // The reference tour must validate.
  const Model m = build_model(inst);
  TransitionSequence tour;
  for (auto j : gen.reference_tour) tour.push_back({routing::kVisit, static_cast<int>(j)});
  CHECK(m.validate_solution(tour).valid);
  for (std::size_t j = 1; j < 20; ++j) CHECK(gen.instance.b[j] - gen.instance.a[j] <= 100.0 + 1000.0);

  const auto tsp = std::get<TspInstance>(generate_instance(DomainTag::kTsp, 20, 17));
  CHECK(tsp.c == gen.instance.tsp.c);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      const double d = std::hypot(tsp.coords[i][0] - tsp.coords[j][0], tsp.coords[i][1] - tsp.coords[j][1]);
      CHECK(tsp.c[i][j] == std::floor(d));
    }
  }

  CHECK(instance_to_json(generate_instance(DomainTag::kKnapsack, 10, 3)) ==
        instance_to_json(generate_instance(DomainTag::kKnapsack, 10, 3)));
  const auto k = std::get<KnapsackInstance>(generate_instance(DomainTag::kKnapsack, 10, 3));
  for (std::size_t j = 0; j < k.n; ++j) CHECK(k.profits[j] == k.weights[j] + 10.0);
  CHECK_NOTHROW(validate(k));
}

TEST_CASE("generated TSPTW reference tours are feasible across seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gen = generate_tsptw(4 + seed % 20, seed);
    const Model m = build_model(gen.instance);
    TransitionSequence tour;
    for (auto j : gen.reference_tour) tour.push_back({routing::kVisit, static_cast<int>(j)});
    CHECK(m.validate_solution(tour).valid);
  }
}

TEST_CASE("invalid instances are rejected") {
  KnapsackInstance k = fixture_kp2();
  k.budget = 5;  // not < sum(w)
  CHECK_THROWS_AS(build_model(k), InvalidInstanceError);
  KnapsackInstance unsorted = fixture_kp2();
  std::swap(unsorted.weights[0], unsorted.weights[1]);
  std::swap(unsorted.profits[0], unsorted.profits[1]);
  CHECK_THROWS_AS(validate(unsorted), InvalidInstanceError);
  TsptwInstance tw = fixture_tsptw3();
  tw.a[1] = 5;  // a > b
  CHECK_THROWS_AS(build_model(tw), InvalidInstanceError);
}

TEST_CASE("instance documents survive save-load-save byte-identically") {
  for (auto tag : {DomainTag::kTsp, DomainTag::kTsptw, DomainTag::kKnapsack, DomainTag::kPortfolio}) {
    const std::string first = instance_to_json(generate_instance(tag, 7, 11));
    const std::string second = instance_to_json(instance_from_json(first));
    CHECK(first == second);
  }
  CHECK_THROWS_AS(instance_from_json("{\"domain\":\"tsp\",\"n\":"), InvalidInstanceError);
}

TEST_CASE("model optimum matches brute force on the oracle suite") {
  for (const auto& c : testing::oracle_suite()) {
    const Instance inst = generate_instance(c.tag, c.n, c.seed);
    const Model m = build_model(inst);
    const double dp = exact_value(m, m.target());
    const double bf = testing::brute_force(inst);
    CAPTURE(domain_name(c.tag));
    CAPTURE(c.seed);
    if (c.tag == DomainTag::kPortfolio) {
      CHECK(testing::close_rel(dp, bf, 1e-9));
    } else {
      CHECK(dp == bf);
    }
  }
}

TEST_CASE("portfolio transition costs telescope to the objective") {
  const auto inst = std::get<PortfolioInstance>(generate_instance(DomainTag::kPortfolio, 8, 21));
  const Model m = build_model(inst);
  std::mt19937 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    State s = m.target();
    double sum = 0.0;
    while (!m.is_base(s)) {
      const auto app = m.applicable_transitions(s);
      const auto t = app[rng() % app.size()];
      sum += m.transition_cost(s, t);
      s = m.apply_transition(s, t);
    }
    CHECK(testing::close_rel(sum, portfolio_objective(inst, s.sets[0].members()), 1e-12));
  }
}

namespace {
Direction flip(Direction d) { return d == Direction::kMinimize ? Direction::kMaximize : Direction::kMinimize; }
}  // namespace

TEST_CASE("dual bounds are valid at every enumerated state") {
  for (const auto& c : testing::oracle_suite()) {
    const Instance inst = generate_instance(c.tag, std::min<std::size_t>(c.n, 8), c.seed);
    const Model m = build_model(inst);
    ExactOracle oracle(m);
    oracle.value(m.target());
    for (const auto& [s, v] : oracle.table()) {
      if (!m.satisfies_constraints(s)) continue;
      const double eta = m.dual_bound(s);
      CHECK(eta == dual_bound(inst, s));
      const auto terms = dual_bound_terms(inst, s);
      CHECK(eta == best_of(terms[0], terms[1], flip(m.direction())));
      if (std::isinf(v)) continue;
      const double slack = 1e-9 * std::max(1.0, std::abs(v));
      for (double t : terms) {
        if (m.direction() == Direction::kMinimize) {
          CHECK(t <= v + slack);
        } else {
          CHECK(t >= v - slack);
        }
      }
    }
  }
}
