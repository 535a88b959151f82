#include "didp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace didp {

using nlohmann::json;

double compute_gap(std::optional<double> cost, double best) {
  if (best == 0.0) throw UndefinedGapError("gap is undefined when the best known cost is 0");
  if (!cost) return 100.0;
  return std::abs(*cost - best) / std::abs(best) * 100.0;
}

GuidanceKind parse_guidance(const std::string& name) {
  if (name == "dual") return GuidanceKind::kDual;
  if (name == "zero") return GuidanceKind::kZero;
  if (name == "greedy") return GuidanceKind::kGreedy;
  if (name == "dqn") return GuidanceKind::kDqn;
  if (name == "ppo") return GuidanceKind::kPpo;
  throw InvalidConfigError("unknown guidance '" + name + "' (expected dual, zero, greedy, dqn or ppo)");
}

std::string guidance_name(GuidanceKind kind) {
  switch (kind) {
    case GuidanceKind::kDual: return "dual";
    case GuidanceKind::kZero: return "zero";
    case GuidanceKind::kGreedy: return "greedy";
    case GuidanceKind::kDqn: return "dqn";
    case GuidanceKind::kPpo: return "ppo";
  }
  return "?";
}

std::unique_ptr<GuidanceEvaluator> make_guidance(GuidanceKind kind, const Instance& inst,
                                                 std::shared_ptr<const NetworkParams> weights,
                                                 std::optional<double> beta) {
  switch (kind) {
    case GuidanceKind::kDual: return std::make_unique<DualBoundEvaluator>();
    case GuidanceKind::kZero: return std::make_unique<ZeroEvaluator>();
    case GuidanceKind::kGreedy:
      return std::make_unique<GreedyRolloutEvaluator>(domain_greedy_policy(std::make_shared<const Instance>(inst)));
    case GuidanceKind::kDqn:
    case GuidanceKind::kPpo: break;
  }
  if (!weights) throw InvalidConfigError(guidance_name(kind) + " guidance needs a weight file");
  auto mdp = build_mdp(inst, beta);
  if (kind == GuidanceKind::kDqn) return std::make_unique<ValueNetEvaluator>(mdp, weights);
  return std::make_unique<PolicyNetEvaluator>(mdp, weights);
}

// ---------------------------------------------------------------------------
// Configuration.

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty() && c.instances.empty()) throw InvalidConfigError("experiment lists no instances");
  if (!c.seeds.empty() && c.n == 0) throw InvalidConfigError("generated instances need n >= 1");
  if (c.algorithms.empty()) throw InvalidConfigError("experiment lists no algorithms");
  if (c.guidances.empty()) throw InvalidConfigError("experiment lists no guidance");
  for (auto g : c.guidances) {
    if (g == GuidanceKind::kDqn && !c.dqn_weights) throw InvalidConfigError("dqn guidance needs dqn_weights");
    if (g == GuidanceKind::kPpo && !c.ppo_weights) throw InvalidConfigError("ppo guidance needs ppo_weights");
  }
  if (c.sampling.count == 0) throw InvalidConfigError("sampling count must be >= 1");
  if (!(c.sampling.temperature > 0.0)) throw InvalidConfigError("sampling temperature must be > 0");
  if (c.beta && !(*c.beta > 0.0)) throw InvalidConfigError("beta must be positive");
  if (c.time_limit && !(*c.time_limit >= 0.0)) throw InvalidConfigError("time limit must be >= 0");
}

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["domain"] = domain_name(c.domain);
  j["n"] = c.n;
  j["seeds"] = c.seeds;
  j["instances"] = c.instances;
  json algos = json::array();
  for (auto a : c.algorithms) algos.push_back(algorithm_name(a));
  j["algorithms"] = algos;
  json guides = json::array();
  for (auto g : c.guidances) guides.push_back(guidance_name(g));
  j["guidance"] = guides;
  put_optional(j, "dqn_weights", c.dqn_weights);
  put_optional(j, "ppo_weights", c.ppo_weights);
  put_optional(j, "expansion_limit", c.expansion_limit);
  put_optional(j, "time_limit", c.time_limit);
  put_optional(j, "beta", c.beta);
  j["sampling"] = {{"count", c.sampling.count}, {"temperature", c.sampling.temperature}};
  put_optional(j, "reference", c.reference);
  put_optional(j, "output", c.output);
  j["parallel"] = c.execution == Execution::kParallel;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    c.domain = parse_domain(j.at("domain").get<std::string>());
    c.n = j.value("n", std::size_t{0});
    c.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    c.instances = j.value("instances", std::vector<std::string>{});
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("guidance")) {
      c.guidances.clear();
      for (const auto& g : j.at("guidance")) c.guidances.push_back(parse_guidance(g.get<std::string>()));
    }
    c.dqn_weights = get_optional<std::string>(j, "dqn_weights");
    c.ppo_weights = get_optional<std::string>(j, "ppo_weights");
    c.expansion_limit = get_optional<std::size_t>(j, "expansion_limit");
    c.time_limit = get_optional<double>(j, "time_limit");
    c.beta = get_optional<double>(j, "beta");
    if (j.contains("sampling")) {
      c.sampling.count = j.at("sampling").value("count", c.sampling.count);
      c.sampling.temperature = j.at("sampling").value("temperature", c.sampling.temperature);
    }
    c.reference = get_optional<std::string>(j, "reference");
    c.output = get_optional<std::string>(j, "output");
    c.execution = j.value("parallel", true) ? Execution::kParallel : Execution::kSerial;
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("malformed experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidConfigError(e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// Experiments.

bool same_outcome(const RunRecord& a, const RunRecord& b) {
  RunRecord x = a;
  x.wall_ms = b.wall_ms;
  return x == b;
}

std::vector<NamedInstance> experiment_instances(const ExperimentConfig& c) {
  std::vector<NamedInstance> out;
  for (const auto& name : c.instances) {
    if (name.rfind("fix-", 0) == 0) {
      out.push_back({name, fixture(name)});
    } else {
      out.push_back({std::filesystem::path(name).stem().string(), load_instance(name)});
    }
    if (domain_of(out.back().instance) != c.domain)
      throw InvalidConfigError("instance '" + name + "' is not a " + domain_name(c.domain) + " instance");
  }
  for (auto seed : c.seeds) {
    out.push_back({domain_name(c.domain) + "-n" + std::to_string(c.n) + "-s" + std::to_string(seed),
                   generate_instance(c.domain, c.n, seed)});
  }
  return out;
}

namespace {

std::shared_ptr<const NetworkParams> load_weights(const std::optional<std::string>& path, DomainTag domain,
                                                  HeadKind head) {
  if (!path) return nullptr;
  auto p = std::make_shared<const NetworkParams>(load_params(*path));
  if (p->domain != domain)
    throw InvalidConfigError("weight file '" + *path + "' is for " + domain_name(p->domain) + ", not " +
                             domain_name(domain));
  if (p->head != head)
    throw InvalidConfigError("weight file '" + *path + "' holds a " + head_name(p->head) + " network, expected " +
                             head_name(head));
  return p;
}

std::map<std::string, double> load_reference(const std::optional<std::string>& path) {
  std::map<std::string, double> out;
  if (!path) return out;
  try {
    const json j = json::parse(read_file(*path));
    for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
  } catch (const json::exception& e) {
    throw InvalidConfigError("malformed reference file '" + *path + "': " + e.what());
  }
  return out;
}

struct Job {
  std::size_t instance;
  SearchAlgorithm algo;
  GuidanceKind guidance;
};

}  // namespace

std::vector<RunRecord> run_search_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto instances = experiment_instances(config);
  auto uses = [&](GuidanceKind g) {
    return std::find(config.guidances.begin(), config.guidances.end(), g) != config.guidances.end();
  };
  const auto dqn = uses(GuidanceKind::kDqn) ? load_weights(config.dqn_weights, config.domain, HeadKind::kQ) : nullptr;
  const auto ppo =
      uses(GuidanceKind::kPpo) ? load_weights(config.ppo_weights, config.domain, HeadKind::kActor) : nullptr;
  const auto reference = load_reference(config.reference);

  std::vector<Model> models;
  models.reserve(instances.size());
  for (const auto& i : instances) models.push_back(build_model(i.instance));

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (auto a : config.algorithms)
      for (auto g : config.guidances) jobs.push_back({i, a, g});

  std::vector<RunRecord> records(jobs.size());
  const SearchLimits limits{config.expansion_limit, config.time_limit};
  auto run = [&](std::size_t k) {
    const Job& job = jobs[k];
    const auto weights = job.guidance == GuidanceKind::kDqn ? dqn : job.guidance == GuidanceKind::kPpo ? ppo : nullptr;
    const auto eval = make_guidance(job.guidance, instances[job.instance].instance, weights, config.beta);
    const auto start = std::chrono::steady_clock::now();
    const SolveResult r = solve(job.algo, models[job.instance], *eval, limits);
    const auto stop = std::chrono::steady_clock::now();
    RunRecord& rec = records[k];
    rec.instance = instances[job.instance].id;
    rec.method = algorithm_name(job.algo) + "-" + guidance_name(job.guidance);
    rec.trace = r.anytime_trace;
    if (r.best) rec.cost = r.best->cost;
    rec.proved_optimal = r.proved_optimal;
    rec.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    rec.expansions = r.expansions;
    rec.generated = r.generated;
  };

  if (config.execution == Execution::kSerial) {
    for (std::size_t k = 0; k < jobs.size(); ++k) run(k);
  } else {
    std::exception_ptr failure;
    const auto count = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < count; ++k) {
      try {
        run(static_cast<std::size_t>(k));
      } catch (...) {
#pragma omp critical(didp_experiment_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  // best(i): best cost over the batch and the reference file.
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Direction d = models[i].direction();
    std::optional<double> best;
    if (auto it = reference.find(instances[i].id); it != reference.end()) best = it->second;
    for (const auto& r : records)
      if (r.instance == instances[i].id && r.cost) best = best ? best_of(*best, *r.cost, d) : *r.cost;
    for (auto& r : records) {
      if (r.instance != instances[i].id) continue;
      r.best_known = best;
      if (best && *best != 0.0) r.gap = compute_gap(r.cost, *best);
    }
  }
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.instance, a.method) < std::tie(b.instance, b.method);
  });
  return records;
}

// ---------------------------------------------------------------------------
// Sampling.

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_softmax(const std::vector<double>& scores, std::mt19937_64& rng) {
  double top = -kInfinity;
  for (double s : scores)
    if (!std::isnan(s)) top = std::max(top, s);
  std::vector<double> w(scores.size(), 0.0);
  double total = 0.0;
  if (std::isfinite(top)) {
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (std::isnan(scores[k])) continue;
      w[k] = std::exp(scores[k] - top);
      total += w[k];
    }
  } else if (top == kInfinity) {
    for (std::size_t k = 0; k < scores.size(); ++k) w[k] = scores[k] == kInfinity ? 1.0 : 0.0;
    total = static_cast<double>(std::count(scores.begin(), scores.end(), kInfinity));
  }
  if (!(total > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0);
    total = static_cast<double>(w.size());
  }
  const double u = unit_uniform(rng) * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (u < acc) return k;
  }
  for (std::size_t k = w.size(); k-- > 0;)
    if (w[k] > 0.0) return k;
  return 0;
}

}  // namespace

SampleResult sample_solve(const Model& model, const GuidanceEvaluator& eval, std::size_t count, double temperature,
                          std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample count must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("sampling temperature must be > 0");
  std::mt19937_64 rng(seed);
  SampleResult out;
  const Direction d = model.direction();
  const double scale = eval.path_scale();
  for (std::size_t r = 0; r < count; ++r) {
    ++out.rollouts;
    SearchNode cur;
    cur.state = model.target();
    cur.eta = model.dual_bound(cur.state);
    TransitionSequence seq;
    bool reached = model.satisfies_constraints(cur.state) && model.is_base(cur.state);
    while (!reached && seq.size() <= model.horizon()) {
      std::vector<SearchNode> children;
      for (auto t : model.applicable_transitions(cur.state)) {
        State next = model.apply_unchecked(cur.state, t);
        if (!model.satisfies_constraints(next)) continue;
        SearchNode c;
        const double cost = model.cost_unchecked(cur.state, t);
        c.g = cur.g + cost;
        c.g_scaled = cur.g_scaled + scale * cost;
        c.pi_acc = cur.pi_acc;
        c.state = std::move(next);
        c.eta = model.dual_bound(c.state);
        c.depth = cur.depth + 1;
        c.via = t;
        children.push_back(std::move(c));
      }
      if (children.empty()) break;
      eval.evaluate(model, cur, children);
      const auto scores = eval.sampling_scores(model, cur, children, temperature);
      SearchNode next = std::move(children[sample_softmax(scores, rng)]);
      seq.push_back(next.via);
      cur = std::move(next);
      reached = model.is_base(cur.state);
    }
    if (!reached) continue;
    const auto v = model.validate_solution(seq);
    if (!v.valid) continue;
    ++out.feasible;
    if (!out.best || strictly_better(v.cost, out.best->cost, d)) out.best = Incumbent{v.cost, seq, 0};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export.

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json record_json(const RunRecord& r) {
  json trace = json::array();
  for (const auto& p : r.trace) trace.push_back({p.expansions, p.cost});
  json j;
  j["instance"] = r.instance;
  j["method"] = r.method;
  j["trace"] = trace;
  j["cost"] = r.cost ? json(*r.cost) : json(nullptr);
  j["best_known"] = r.best_known ? json(*r.best_known) : json(nullptr);
  j["gap"] = r.gap ? json(*r.gap) : json(nullptr);
  j["proved_optimal"] = r.proved_optimal;
  j["wall_ms"] = r.wall_ms;
  j["expansions"] = r.expansions;
  j["generated"] = r.generated;
  return j;
}

RunRecord record_from(const json& j) {
  RunRecord r;
  r.instance = j.at("instance").get<std::string>();
  r.method = j.at("method").get<std::string>();
  for (const auto& p : j.at("trace")) r.trace.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
  r.cost = get_optional<double>(j, "cost");
  r.best_known = get_optional<double>(j, "best_known");
  r.gap = get_optional<double>(j, "gap");
  r.proved_optimal = j.at("proved_optimal").get<bool>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.expansions = j.at("expansions").get<std::size_t>();
  r.generated = j.at("generated").get<std::size_t>();
  return r;
}

}  // namespace

std::string trace_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension();
  return p.string() + ".trace.csv";
}

std::string records_to_json(const std::vector<RunRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_json(r));
  json j;
  j["format"] = "didp-results";
  j["version"] = kResultsSchemaVersion;
  j["records"] = arr;
  return j.dump(2) + "\n";
}

std::vector<RunRecord> records_from_json(const std::string& text) {
  std::vector<RunRecord> out;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "didp-results") throw IoError("not a results document");
    if (j.at("version").get<int>() != kResultsSchemaVersion)
      throw IoError("unsupported results version " + j.at("version").dump());
    for (const auto& r : j.at("records")) out.push_back(record_from(r));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed results document: ") + e.what());
  }
  return out;
}

std::vector<RunRecord> load_records(const std::string& path) { return records_from_json(read_file(path)); }

void export_results(const std::vector<RunRecord>& records, const std::string& path, ResultFormat format) {
  if (records.empty()) throw std::invalid_argument("no records to export");
  if (format == ResultFormat::kJson) {
    write_file(path, records_to_json(records));
    return;
  }
  std::string main = std::string(kCsvHeader) + "\n";
  std::string trace = std::string(kTraceCsvHeader) + "\n";
  for (const auto& r : records) {
    const std::string id = csv_field(r.instance) + "," + csv_field(r.method) + ",";
    main += id + std::to_string(r.expansions) + "," + (r.cost ? num(*r.cost) : "") + "," +
            (r.gap ? num(*r.gap) : "") + "," + (r.proved_optimal ? "1" : "0") + "," + num(r.wall_ms) + "\n";
    for (const auto& p : r.trace) trace += id + std::to_string(p.expansions) + "," + num(p.cost) + "\n";
  }
  write_file(path, main);
  write_file(trace_path(path), trace);
}

// ---------------------------------------------------------------------------
// Report.

std::string report(const std::vector<RunRecord>& records, std::optional<std::size_t> max_budget) {
  std::size_t top = 1;
  if (max_budget) {
    top = std::max<std::size_t>(*max_budget, 1);
  } else {
    for (const auto& r : records) top = std::max(top, r.expansions);
  }
  std::vector<std::size_t> budgets;
  for (std::size_t b = 1; b < top; b *= 10) budgets.push_back(b);
  budgets.push_back(top);

  std::set<std::string> methods;
  for (const auto& r : records) methods.insert(r.method);
  std::string out = "method,budget,mean_gap,instances,solved\n";
  for (const auto& m : methods) {
    for (auto b : budgets) {
      double sum = 0.0;
      std::size_t used = 0, solved = 0;
      for (const auto& r : records) {
        if (r.method != m || !r.best_known || *r.best_known == 0.0) continue;
        std::optional<double> at;
        for (const auto& p : r.trace)
          if (p.expansions <= b) at = p.cost;
        sum += compute_gap(at, *r.best_known);
        ++used;
        if (at) ++solved;
      }
      out += csv_field(m) + "," + std::to_string(b) + "," + (used ? num(sum / static_cast<double>(used)) : "") +
             "," + std::to_string(used) + "," + std::to_string(solved) + "\n";
    }
  }
  return out;
}

std::string default_output_dir() {
  const char* dir = std::getenv("DIDP_OUTPUT_DIR");
  return dir && *dir ? std::string(dir) : std::string(".");
}

std::string resolve_output(const std::string& name) {
  std::filesystem::path p(name);
  if (p.is_absolute()) return name;
  return (std::filesystem::path(default_output_dir()) / p).string();
}

}  // namespace didp
