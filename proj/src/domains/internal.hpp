#pragma once

#include "didp/domains.hpp"

namespace didp::detail {

Model build_tsp_model(const TspInstance& inst);
Model build_tsptw_model(const TsptwInstance& inst);
Model build_knapsack_model(const KnapsackInstance& inst);
Model build_portfolio_model(const PortfolioInstance& inst);

double tsp_dual_bound(const TspInstance& inst, const State& s);
double knapsack_dual_bound(const KnapsackInstance& inst, const State& s);
double portfolio_dual_bound(const PortfolioInstance& inst, const State& s);
std::array<double, 2> tsp_dual_bound_terms(const TspInstance& inst, const State& s);
std::array<double, 2> knapsack_dual_bound_terms(const KnapsackInstance& inst, const State& s);
std::array<double, 2> portfolio_dual_bound_terms(const PortfolioInstance& inst, const State& s);

TransitionId routing_greedy(const TspInstance& tsp, const TsptwInstance* tw, const State& s);
TransitionId knapsack_greedy(const KnapsackInstance& inst, const State& s);
TransitionId portfolio_greedy(const PortfolioInstance& inst, const State& s);

FeatureMatrix routing_features(const TspInstance& tsp, const TsptwInstance* tw, const State& s);
FeatureMatrix knapsack_features(const KnapsackInstance& inst, const State& s);
FeatureMatrix portfolio_features(const PortfolioInstance& inst, const State& s);

}  // namespace didp::detail
