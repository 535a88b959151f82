// Serial vs OpenMP timings for the network kernels and batch losses.
// Usage: didp_bench [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "didp/domains.hpp"
#include "didp/kernels.hpp"
#include "didp/learning.hpp"

using namespace didp;

namespace {

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const std::string& name, double serial, double parallel, bool identical) {
  std::printf("%-28s %10.3f %10.3f %8.2fx  %s\n", name.c_str(), serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

std::vector<Transition> transitions(const Mdp& mdp, std::size_t count, std::mt19937_64& rng) {
  std::vector<Transition> out;
  while (out.size() < count) {
    State s = mdp.model().target();
    while (!mdp.is_terminal(s) && out.size() < count) {
      const auto mask = mdp.mask(s);
      std::vector<std::size_t> legal;
      for (std::size_t a = 0; a < mask.size(); ++a)
        if (mask[a]) legal.push_back(a);
      const std::size_t a = legal[rng() % legal.size()];
      const auto st = mdp.step(s, a);
      out.push_back({mdp.features(s), mask, mdp.anchor(s), a, st.reward, mdp.features(st.next), st.next_mask,
                     mdp.anchor(st.next), st.terminal});
      s = st.next;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");
  std::mt19937_64 rng(1);

  {
    const LayerShape layer{128, 128, 0};
    std::vector<double> values(layer.size()), in(512 * 128), a(512 * 128), b(512 * 128);
    for (auto& v : values) v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
    for (auto& v : in) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const double s = best_ms(repeats, [&] {
      kernels::dense_forward_serial(layer, values.data(), in.data(), 512, a.data(), true);
    });
    const double p = best_ms(repeats, [&] {
      kernels::dense_forward_parallel(layer, values.data(), in.data(), 512, b.data(), true);
    });
    row("dense_forward 512x128x128", s, p, a == b);
  }
  {
    std::vector<std::vector<double>> parts(128, std::vector<double>(50000));
    for (auto& part : parts)
      for (auto& v : part) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    std::vector<double> a, b;
    const double s = best_ms(repeats, [&] { kernels::sum_gradients_serial(parts, a); });
    const double p = best_ms(repeats, [&] { kernels::sum_gradients_parallel(parts, b); });
    row("sum_gradients 128x50000", s, p, a == b);
  }

  const auto mdp = build_mdp(generate_instance(DomainTag::kTsp, 20, 3));
  const auto batch = transitions(*mdp, 128, rng);
  const NetworkConfig config{64, 2, 64, 2};
  {
    const auto q = init_network(DomainTag::kTsp, HeadKind::kQ, config, 1);
    LossAndGrad a, b;
    const double s = best_ms(repeats, [&] { a = dqn_loss(q, q, batch, 1.0, Execution::kSerial); });
    const double p = best_ms(repeats, [&] { b = dqn_loss(q, q, batch, 1.0, Execution::kParallel); });
    row("dqn_loss tsp20 B=128", s, p, a.loss == b.loss && a.grad == b.grad);
  }
  {
    std::vector<PpoSample> samples;
    for (const auto& t : batch) samples.push_back({t.features, t.mask, t.anchor, t.action, -1.0, t.reward});
    const auto actor = init_network(DomainTag::kTsp, HeadKind::kActor, config, 2);
    const auto critic = init_network(DomainTag::kTsp, HeadKind::kCritic, config, 3);
    PpoLoss a, b;
    const double s = best_ms(repeats, [&] { a = ppo_loss(actor, critic, samples, 0.1, 1e-3, Execution::kSerial); });
    const double p = best_ms(repeats, [&] { b = ppo_loss(actor, critic, samples, 0.1, 1e-3, Execution::kParallel); });
    row("ppo_loss tsp20 B=128", s, p, a.loss == b.loss && a.actor_grad == b.actor_grad && a.critic_grad == b.critic_grad);
  }
  return 0;
}
