#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "didp/domains.hpp"
#include "domains/internal.hpp"
#include "json.hpp"

namespace didp {

using nlohmann::json;

DomainTag parse_domain(const std::string& tag) {
  if (tag == "tsp") return DomainTag::kTsp;
  if (tag == "tsptw") return DomainTag::kTsptw;
  if (tag == "knapsack") return DomainTag::kKnapsack;
  if (tag == "portfolio") return DomainTag::kPortfolio;
  throw UnsupportedDomainError("unsupported domain '" + tag + "'");
}

std::string domain_name(DomainTag tag) {
  switch (tag) {
    case DomainTag::kTsp: return "tsp";
    case DomainTag::kTsptw: return "tsptw";
    case DomainTag::kKnapsack: return "knapsack";
    case DomainTag::kPortfolio: return "portfolio";
  }
  return "unknown";
}

DomainTag domain_of(const Instance& inst) {
  switch (inst.index()) {
    case 0: return DomainTag::kTsp;
    case 1: return DomainTag::kTsptw;
    case 2: return DomainTag::kKnapsack;
    default: return DomainTag::kPortfolio;
  }
}

std::size_t instance_size(const Instance& inst) {
  return std::visit(
      [](const auto& x) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, TsptwInstance>) return x.tsp.n;
        else return x.n;
      },
      inst);
}

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInstanceError(what);
}

void validate_tsp(const TspInstance& t) {
  require(t.n >= 1, "tsp: n must be >= 1");
  require(t.c.size() == t.n, "tsp: travel-time matrix must have n rows");
  require(t.coords.empty() || t.coords.size() == t.n, "tsp: coords must be empty or have n rows");
  for (std::size_t i = 0; i < t.n; ++i) {
    require(t.c[i].size() == t.n, "tsp: travel-time matrix must be square");
    require(t.c[i][i] == 0.0, "tsp: c[i][i] must be 0");
    for (double v : t.c[i]) require(std::isfinite(v) && v >= 0.0, "tsp: travel times must be finite and >= 0");
  }
}

void validate_sized(const std::vector<double>& v, std::size_t n, const std::string& what, bool positive) {
  require(v.size() == n, what + " must have n entries");
  for (double x : v) {
    require(std::isfinite(x), what + " must be finite");
    if (positive) require(x > 0.0, what + " must be > 0");
  }
}

}  // namespace

void validate(const Instance& inst) {
  if (const auto* t = std::get_if<TspInstance>(&inst)) {
    validate_tsp(*t);
  } else if (const auto* tw = std::get_if<TsptwInstance>(&inst)) {
    validate_tsp(tw->tsp);
    validate_sized(tw->a, tw->tsp.n, "tsptw: a", false);
    validate_sized(tw->b, tw->tsp.n, "tsptw: b", false);
    require(tw->a[0] == 0.0, "tsptw: a_0 must be 0");
    for (std::size_t i = 0; i < tw->tsp.n; ++i) require(tw->a[i] <= tw->b[i], "tsptw: a_i must be <= b_i");
  } else if (const auto* k = std::get_if<KnapsackInstance>(&inst)) {
    require(k->n >= 1, "knapsack: n must be >= 1");
    validate_sized(k->weights, k->n, "knapsack: weights", true);
    validate_sized(k->profits, k->n, "knapsack: profits", true);
    for (std::size_t i = 1; i < k->n; ++i) {
      require(k->profits[i - 1] * k->weights[i] >= k->profits[i] * k->weights[i - 1],
              "knapsack: items must be sorted by non-increasing profit/weight");
    }
    const double total = std::accumulate(k->weights.begin(), k->weights.end(), 0.0);
    require(k->budget >= 0.0 && k->budget < total, "knapsack: budget must satisfy 0 <= B < sum(w)");
  } else {
    const auto& p = std::get<PortfolioInstance>(inst);
    require(p.n >= 1, "portfolio: n must be >= 1");
    validate_sized(p.weights, p.n, "portfolio: weights", true);
    validate_sized(p.mu, p.n, "portfolio: mu", true);
    validate_sized(p.sigma, p.n, "portfolio: sigma", true);
    validate_sized(p.gamma, p.n, "portfolio: gamma", true);
    validate_sized(p.kappa, p.n, "portfolio: kappa", true);
    const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    require(p.budget >= 0.0 && p.budget < total, "portfolio: budget must satisfy 0 <= B < sum(w)");
    for (double l : p.lambda) require(l >= 0.0, "portfolio: lambda must be nonnegative");
  }
}

Model build_model(const Instance& inst) {
  validate(inst);
  switch (domain_of(inst)) {
    case DomainTag::kTsp: return detail::build_tsp_model(std::get<TspInstance>(inst));
    case DomainTag::kTsptw: return detail::build_tsptw_model(std::get<TsptwInstance>(inst));
    case DomainTag::kKnapsack: return detail::build_knapsack_model(std::get<KnapsackInstance>(inst));
    case DomainTag::kPortfolio: return detail::build_portfolio_model(std::get<PortfolioInstance>(inst));
  }
  throw UnsupportedDomainError("unknown instance kind");
}

double dual_bound(const Instance& inst, const State& s) {
  switch (domain_of(inst)) {
    case DomainTag::kTsp: return detail::tsp_dual_bound(std::get<TspInstance>(inst), s);
    case DomainTag::kTsptw: return detail::tsp_dual_bound(std::get<TsptwInstance>(inst).tsp, s);
    case DomainTag::kKnapsack: return detail::knapsack_dual_bound(std::get<KnapsackInstance>(inst), s);
    case DomainTag::kPortfolio: return detail::portfolio_dual_bound(std::get<PortfolioInstance>(inst), s);
  }
  return 0.0;
}

std::array<double, 2> dual_bound_terms(const Instance& inst, const State& s) {
  switch (domain_of(inst)) {
    case DomainTag::kTsp: return detail::tsp_dual_bound_terms(std::get<TspInstance>(inst), s);
    case DomainTag::kTsptw: return detail::tsp_dual_bound_terms(std::get<TsptwInstance>(inst).tsp, s);
    case DomainTag::kKnapsack: return detail::knapsack_dual_bound_terms(std::get<KnapsackInstance>(inst), s);
    case DomainTag::kPortfolio: return detail::portfolio_dual_bound_terms(std::get<PortfolioInstance>(inst), s);
  }
  return {0.0, 0.0};
}

TransitionId greedy_successor(const Instance& inst, const State& s) {
  switch (domain_of(inst)) {
    case DomainTag::kTsp: return detail::routing_greedy(std::get<TspInstance>(inst), nullptr, s);
    case DomainTag::kTsptw: {
      const auto& tw = std::get<TsptwInstance>(inst);
      return detail::routing_greedy(tw.tsp, &tw, s);
    }
    case DomainTag::kKnapsack: return detail::knapsack_greedy(std::get<KnapsackInstance>(inst), s);
    case DomainTag::kPortfolio: return detail::portfolio_greedy(std::get<PortfolioInstance>(inst), s);
  }
  throw UnsupportedDomainError("unknown instance kind");
}

std::size_t feature_width(DomainTag tag) {
  switch (tag) {
    case DomainTag::kTsp: return 4;
    case DomainTag::kTsptw: return 6;
    case DomainTag::kKnapsack: return 8;
    case DomainTag::kPortfolio: return 9;
  }
  return 0;
}

FeatureMatrix extract_features(const Instance& inst, const State& s) {
  switch (domain_of(inst)) {
    case DomainTag::kTsp: return detail::routing_features(std::get<TspInstance>(inst), nullptr, s);
    case DomainTag::kTsptw: {
      const auto& tw = std::get<TsptwInstance>(inst);
      return detail::routing_features(tw.tsp, &tw, s);
    }
    case DomainTag::kKnapsack: return detail::knapsack_features(std::get<KnapsackInstance>(inst), s);
    case DomainTag::kPortfolio: return detail::portfolio_features(std::get<PortfolioInstance>(inst), s);
  }
  throw UnsupportedDomainError("unknown instance kind");
}

// ---------------------------------------------------------------------------
// Generators

GeneratedTsptw generate_tsptw(std::size_t n, std::uint64_t seed, const GeneratorParams& params) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, params.coord_max);
  GeneratedTsptw out;
  TspInstance& tsp = out.instance.tsp;
  tsp.n = n;
  tsp.coords.resize(n);
  for (auto& xy : tsp.coords) {
    xy[0] = coord(rng);
    xy[1] = coord(rng);
  }
  tsp.c.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j)
        tsp.c[i][j] = std::floor(std::hypot(tsp.coords[i][0] - tsp.coords[j][0], tsp.coords[i][1] - tsp.coords[j][1]));

  // Windows are laid around the arrival times of a random reference tour.
  std::vector<std::size_t> tour(n > 0 ? n - 1 : 0);
  std::iota(tour.begin(), tour.end(), std::size_t{1});
  std::shuffle(tour.begin(), tour.end(), rng);
  std::uniform_int_distribution<long> gap(0, static_cast<long>(params.max_gap));
  std::uniform_int_distribution<long> width(1, std::max(1L, static_cast<long>(params.max_window)));
  auto& a = out.instance.a;
  auto& b = out.instance.b;
  a.assign(n, 0.0);
  b.assign(n, 0.0);
  double t = 0.0;
  std::size_t prev = 0;
  for (std::size_t j : tour) {
    t += tsp.c[prev][j];
    a[j] = std::max(0.0, t - static_cast<double>(gap(rng)));
    b[j] = t + static_cast<double>(width(rng));
    prev = j;
  }
  b[0] = t + (n > 0 ? tsp.c[prev][0] : 0.0) + params.max_gap;
  out.reference_tour = std::move(tour);
  return out;
}

Instance generate_instance(DomainTag tag, std::size_t n, std::uint64_t seed, const GeneratorParams& params) {
  if (n < 2) throw InvalidInstanceError("generated instances need n >= 2");
  switch (tag) {
    case DomainTag::kTsptw: return generate_tsptw(n, seed, params).instance;
    case DomainTag::kTsp: return generate_tsptw(n, seed, params).instance.tsp;
    case DomainTag::kKnapsack: {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> w(1, params.weight_max);
      std::vector<std::pair<double, double>> items(n);
      double total = 0.0;
      for (auto& [wi, pi] : items) {
        wi = w(rng);
        pi = wi + params.profit_offset;
        total += wi;
      }
      std::stable_sort(items.begin(), items.end(),
                       [](const auto& l, const auto& r) { return l.second * r.first > r.second * l.first; });
      KnapsackInstance k;
      k.n = n;
      for (const auto& [wi, pi] : items) {
        k.weights.push_back(wi);
        k.profits.push_back(pi);
      }
      k.budget = std::ceil(params.capacity_ratio * total);
      if (k.budget >= total) k.budget = total - 1.0;
      return k;
    }
    case DomainTag::kPortfolio: {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> w(1, params.weight_max);
      std::uniform_real_distribution<double> moment(0.0, params.moment_max);
      auto positive = [&]() {
        double v = 0.0;
        while (v <= 0.0) v = moment(rng);
        return v;
      };
      PortfolioInstance p;
      p.n = n;
      p.lambda = params.lambda;
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        p.weights.push_back(w(rng));
        total += p.weights.back();
        p.mu.push_back(positive());
        p.sigma.push_back(positive());
        p.gamma.push_back(positive());
        p.kappa.push_back(positive());
      }
      p.budget = std::ceil(params.capacity_ratio * total);
      if (p.budget >= total) p.budget = total - 1.0;
      return p;
    }
  }
  throw UnsupportedDomainError("unknown domain");
}

// ---------------------------------------------------------------------------
// Fixtures

TspInstance fixture_tsp3() {
  TspInstance t;
  t.n = 3;
  t.c = {{0, 1, 5}, {5, 0, 2}, {1, 5, 0}};
  return t;
}

TsptwInstance fixture_tsptw3() {
  TsptwInstance tw;
  tw.tsp = fixture_tsp3();
  tw.a = {0, 0, 0};
  tw.b = {100, 1, 100};
  return tw;
}

KnapsackInstance fixture_kp2() {
  KnapsackInstance k;
  k.n = 2;
  k.weights = {2, 3};
  k.profits = {3, 4};
  k.budget = 4;
  return k;
}

PortfolioInstance fixture_pf2() {
  PortfolioInstance p;
  p.n = 2;
  p.weights = {2, 3};
  p.mu = {3, 4};
  p.sigma = {1, 1};
  p.gamma = {1, 1};
  p.kappa = {1, 1};
  p.budget = 4;
  p.lambda = {1, 0, 0, 0};
  return p;
}

Instance fixture(const std::string& name) {
  if (name == "fix-tsp3") return fixture_tsp3();
  if (name == "fix-tsptw3") return fixture_tsptw3();
  if (name == "fix-kp2") return fixture_kp2();
  if (name == "fix-pf2") return fixture_pf2();
  throw InvalidInstanceError("unknown fixture '" + name + "'");
}

// ---------------------------------------------------------------------------
// Instance documents

namespace {

json tsp_fields(const TspInstance& t) {
  json j;
  j["n"] = t.n;
  json coords = json::array();
  for (const auto& xy : t.coords) coords.push_back({xy[0], xy[1]});
  j["coords"] = coords;
  j["c"] = t.c;
  return j;
}

TspInstance tsp_from(const json& j) {
  TspInstance t;
  t.n = j.at("n").get<std::size_t>();
  for (const auto& xy : j.at("coords")) t.coords.push_back({xy.at(0).get<double>(), xy.at(1).get<double>()});
  t.c = j.at("c").get<std::vector<std::vector<double>>>();
  return t;
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  json j;
  j["domain"] = domain_name(domain_of(inst));
  if (const auto* t = std::get_if<TspInstance>(&inst)) {
    j.update(tsp_fields(*t));
  } else if (const auto* tw = std::get_if<TsptwInstance>(&inst)) {
    j.update(tsp_fields(tw->tsp));
    j["a"] = tw->a;
    j["b"] = tw->b;
  } else if (const auto* k = std::get_if<KnapsackInstance>(&inst)) {
    j["n"] = k->n;
    j["weights"] = k->weights;
    j["profits"] = k->profits;
    j["budget"] = k->budget;
  } else {
    const auto& p = std::get<PortfolioInstance>(inst);
    j["n"] = p.n;
    j["weights"] = p.weights;
    j["mu"] = p.mu;
    j["sigma"] = p.sigma;
    j["gamma"] = p.gamma;
    j["kappa"] = p.kappa;
    j["budget"] = p.budget;
    j["lambda"] = p.lambda;
  }
  return j.dump(1) + "\n";
}

Instance instance_from_json(const std::string& text) {
  Instance inst;
  try {
    const json j = json::parse(text);
    switch (parse_domain(j.at("domain").get<std::string>())) {
      case DomainTag::kTsp: inst = tsp_from(j); break;
      case DomainTag::kTsptw: {
        TsptwInstance tw;
        tw.tsp = tsp_from(j);
        tw.a = j.at("a").get<std::vector<double>>();
        tw.b = j.at("b").get<std::vector<double>>();
        inst = tw;
        break;
      }
      case DomainTag::kKnapsack: {
        KnapsackInstance k;
        k.n = j.at("n").get<std::size_t>();
        k.weights = j.at("weights").get<std::vector<double>>();
        k.profits = j.at("profits").get<std::vector<double>>();
        k.budget = j.at("budget").get<double>();
        inst = k;
        break;
      }
      case DomainTag::kPortfolio: {
        PortfolioInstance p;
        p.n = j.at("n").get<std::size_t>();
        p.weights = j.at("weights").get<std::vector<double>>();
        p.mu = j.at("mu").get<std::vector<double>>();
        p.sigma = j.at("sigma").get<std::vector<double>>();
        p.gamma = j.at("gamma").get<std::vector<double>>();
        p.kappa = j.at("kappa").get<std::vector<double>>();
        p.budget = j.at("budget").get<double>();
        p.lambda = j.at("lambda").get<std::array<double, 4>>();
        inst = p;
        break;
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInstanceError(std::string("malformed instance document: ") + e.what());
  }
  validate(inst);
  return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write instance file '" + path + "'");
  out << instance_to_json(inst);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read instance file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace didp
