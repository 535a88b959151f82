// Command-line front end: generate, solve, train, sample, report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "didp/bench.hpp"
#include "didp/domains.hpp"
#include "didp/guidance.hpp"
#include "didp/learning.hpp"
#include "didp/search.hpp"

using namespace didp;

namespace {

const std::vector<std::string> kDomains{"tsp", "tsptw", "knapsack", "portfolio"};
const std::vector<std::string> kAlgos{"cabs", "acps", "apps"};
const std::vector<std::string> kGuidance{"dual", "zero", "greedy", "dqn", "ppo"};

struct InstanceArgs {
  std::string domain = "tsp";
  std::size_t n = 10;
  std::uint64_t seed = 0;
  std::string instance;  // fixture name or file; overrides generation

  void add(CLI::App* app) {
    app->add_option("--domain", domain, "Problem domain")->check(CLI::IsMember(kDomains));
    app->add_option("--n", n, "Instance size")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Generator seed");
    app->add_option("--instance", instance, "Fixture name (fix-tsp3, fix-tsptw3, fix-kp2, fix-pf2) or instance file");
  }

  Instance load() const {
    Instance inst;
    if (instance.empty()) {
      inst = generate_instance(parse_domain(domain), n, seed);
    } else if (instance.rfind("fix-", 0) == 0) {
      inst = fixture(instance);
    } else {
      inst = load_instance(instance);
    }
    if (domain_name(domain_of(inst)) != domain)
      throw InvalidConfigError("instance is a " + domain_name(domain_of(inst)) + " instance, not " + domain);
    return inst;
  }
};

std::string format_cost(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::shared_ptr<const NetworkParams> weights_for(const std::string& guidance, const std::string& path,
                                                 DomainTag domain) {
  if (guidance != "dqn" && guidance != "ppo") return nullptr;
  if (path.empty()) throw InvalidConfigError(guidance + " guidance needs --weights");
  auto p = std::make_shared<const NetworkParams>(load_params(path));
  if (p->domain != domain)
    throw InvalidConfigError("weight file is for " + domain_name(p->domain) + ", not " + domain_name(domain));
  return p;
}

void print_solution(const Model& m, const std::optional<Incumbent>& best) {
  if (!best) {
    std::cout << "cost none\n";
    return;
  }
  std::cout << "cost " << format_cost(best->cost) << "\n";
  std::cout << "solution";
  for (auto t : best->sequence) std::cout << " " << m.transition_name(t);
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned-guidance search for dynamic programming models"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a seeded random instance as JSON");
  InstanceArgs gen_args;
  gen_args.add(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output file (stdout when omitted)");

  // solve
  auto* sol = app.add_subcommand("solve", "Run anytime search on one instance or an experiment config");
  InstanceArgs sol_args;
  sol_args.add(sol);
  std::string algo = "cabs", guidance = "dual", weights, config_path, results_out;
  std::optional<std::size_t> max_expansions;
  std::optional<double> time_limit, beta;
  sol->add_option("--algo", algo, "Search algorithm")->check(CLI::IsMember(kAlgos));
  sol->add_option("--guidance", guidance, "Guidance")->check(CLI::IsMember(kGuidance));
  sol->add_option("--weights", weights, "Weight file for dqn or ppo guidance");
  sol->add_option("--max-expansions", max_expansions, "Expansion limit");
  sol->add_option("--time-limit", time_limit, "Time limit in seconds");
  sol->add_option("--beta", beta, "Reward scale for learned guidance");
  sol->add_option("--config", config_path, "Experiment config (JSON); runs every instance x method");
  sol->add_option("--results", results_out, "Results file stem for --config runs (default: config output or results)");

  // train
  auto* tr = app.add_subcommand("train", "Train a DQN or PPO network and write its weights");
  InstanceArgs tr_args;
  tr_args.add(tr);
  std::string tr_algo = "dqn", tr_out;
  std::optional<std::size_t> episodes, batch, embed, hidden;
  std::optional<double> lr;
  bool serial = false, reference = false;
  std::optional<double> train_seconds;
  tr->add_option("--algo", tr_algo, "Learning algorithm")->check(CLI::IsMember({"dqn", "ppo"}));
  tr->add_option("--episodes", episodes, "Training episodes");
  tr->add_option("--batch", batch, "Batch size");
  tr->add_option("--lr", lr, "Learning rate");
  tr->add_option("--embed", embed, "Embedding width");
  tr->add_option("--hidden", hidden, "Trunk width");
  tr->add_option("--beta", beta, "Reward scale");
  tr->add_flag("--serial", serial, "Use serial loss kernels");
  tr->add_flag("--reference-preset", reference, "Full-size reference hyperparameters instead of the desk preset");
  tr->add_option("--time-limit", train_seconds, "Stop after this many seconds");
  tr->add_option("--out", tr_out, "Weight file (PPO also writes <out>.critic)")->required();

  // sample
  auto* smp = app.add_subcommand("sample", "Sampling baseline: softmax rollouts over guidance scores");
  InstanceArgs smp_args;
  smp_args.add(smp);
  std::string smp_guidance = "dual", smp_weights;
  std::size_t count = 1280;
  double temperature = 1.0;
  std::uint64_t sample_seed = 0;
  smp->add_option("--guidance", smp_guidance, "Guidance")->check(CLI::IsMember(kGuidance));
  smp->add_option("--weights", smp_weights, "Weight file for dqn or ppo guidance");
  smp->add_option("--count", count, "Number of rollouts")->check(CLI::PositiveNumber);
  smp->add_option("--temperature", temperature, "Softmax temperature")->check(CLI::PositiveNumber);
  smp->add_option("--sample-seed", sample_seed, "Sampling seed");

  // report
  auto* rep = app.add_subcommand("report", "Mean gap per method at powers-of-10 expansion budgets");
  std::string rep_in, rep_out;
  std::optional<std::size_t> max_budget;
  rep->add_option("--input", rep_in, "Results JSON written by solve --config")->required();
  rep->add_option("--max-budget", max_budget, "Largest expansion budget");
  rep->add_option("--out", rep_out, "Output CSV (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Instance inst = gen_args.load();
      if (gen_out.empty()) {
        std::cout << instance_to_json(inst);
      } else {
        save_instance(inst, resolve_output(gen_out));
      }
      return 0;
    }

    if (*sol) {
      if (!config_path.empty()) {
        const ExperimentConfig config = load_config(config_path);
        const auto records = run_search_experiment(config);
        const std::string stem = resolve_output(!results_out.empty() ? results_out : config.output.value_or("results"));
        export_results(records, stem + ".csv", ResultFormat::kCsv);
        export_results(records, stem + ".json", ResultFormat::kJson);
        for (const auto& r : records) {
          std::cout << r.instance << " " << r.method << " cost " << (r.cost ? format_cost(*r.cost) : "none")
                    << " proved_optimal " << r.proved_optimal << " expansions " << r.expansions << "\n";
        }
        std::cout << "wrote " << stem << ".csv, " << trace_path(stem + ".csv") << ", " << stem << ".json\n";
        return 0;
      }
      const Instance inst = sol_args.load();
      const Model model = build_model(inst);
      const auto eval = make_guidance(parse_guidance(guidance), inst, weights_for(guidance, weights, domain_of(inst)),
                                      beta);
      const auto r = solve(parse_algorithm(algo), model, *eval, SearchLimits{max_expansions, time_limit});
      print_solution(model, r.best);
      std::cout << "proved_optimal " << (r.proved_optimal ? "true" : "false") << "\n";
      std::cout << "expansions " << r.expansions << "\n";
      std::cout << "generated " << r.generated << "\n";
      return 0;
    }

    if (*tr) {
      const bool fixed = !tr_args.instance.empty();
      const DomainTag domain = parse_domain(tr_args.domain);
      const auto algo_kind = tr_algo == "dqn" ? LearningAlgorithm::kDqn : LearningAlgorithm::kPpo;
      TrainConfig config = reference ? reference_preset(domain, tr_args.n, algo_kind) : desk_preset(domain, algo_kind);
      if (train_seconds) config.time_limit_seconds = *train_seconds;
      if (episodes) config.episodes = *episodes;
      if (batch) config.batch_size = *batch;
      if (lr) config.learning_rate = *lr;
      if (embed) config.network.embed_dim = *embed;
      if (hidden) config.network.hidden_dim = *hidden;
      if (beta) config.beta = *beta;
      config.seed = tr_args.seed;
      if (serial) config.execution = Execution::kSerial;
      const InstanceGenerator generator =
          fixed ? fixed_instance(tr_args.load()) : random_instances(domain, tr_args.n);
      const std::string out = resolve_output(tr_out);
      const std::vector<double> returns = [&] {
        if (algo_kind == LearningAlgorithm::kDqn) {
          const auto r = train_dqn(generator, config);
          save_params(r.q, out);
          return r.episode_returns;
        }
        const auto r = train_ppo(generator, config);
        save_params(r.actor, out);
        save_params(r.critic, out + ".critic");
        return r.episode_returns;
      }();
      std::cout << "episodes " << returns.size() << "\n";
      if (!returns.empty()) std::cout << "final_return " << format_cost(returns.back()) << "\n";
      std::cout << "wrote " << out << "\n";
      return 0;
    }

    if (*smp) {
      const Instance inst = smp_args.load();
      const Model model = build_model(inst);
      const auto eval = make_guidance(parse_guidance(smp_guidance), inst,
                                      weights_for(smp_guidance, smp_weights, domain_of(inst)), beta);
      const auto r = sample_solve(model, *eval, count, temperature, sample_seed);
      print_solution(model, r.best);
      std::cout << "feasible " << r.feasible << " of " << r.rollouts << "\n";
      return 0;
    }

    if (*rep) {
      const std::string text = report(load_records(rep_in), max_budget);
      if (rep_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(resolve_output(rep_out));
        if (!out) throw IoError("cannot write '" + rep_out + "'");
        out << text;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
