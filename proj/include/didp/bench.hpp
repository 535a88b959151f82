#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "didp/domains.hpp"
#include "didp/guidance.hpp"
#include "didp/learning.hpp"
#include "didp/search.hpp"

namespace didp {

class UndefinedGapError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Percent gap |cost - best| / |best| * 100; a missing cost counts as 100.
double compute_gap(std::optional<double> cost, double best);

enum class GuidanceKind { kDual, kZero, kGreedy, kDqn, kPpo };

GuidanceKind parse_guidance(const std::string& name);
std::string guidance_name(GuidanceKind kind);

// Builds an evaluator for `inst`. Learned kinds need a weight file whose
// domain and head match.
std::unique_ptr<GuidanceEvaluator> make_guidance(GuidanceKind kind, const Instance& inst,
                                                 std::shared_ptr<const NetworkParams> weights = nullptr,
                                                 std::optional<double> beta = std::nullopt);

struct SamplingConfig {
  std::size_t count = 1280;
  double temperature = 1.0;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

struct ExperimentConfig {
  DomainTag domain = DomainTag::kTsp;
  std::size_t n = 0;
  std::vector<std::uint64_t> seeds;    // generated instances
  std::vector<std::string> instances;  // fixture names or instance files
  std::vector<SearchAlgorithm> algorithms{SearchAlgorithm::kCabs};
  std::vector<GuidanceKind> guidances{GuidanceKind::kDual};
  std::optional<std::string> dqn_weights;
  std::optional<std::string> ppo_weights;
  std::optional<std::size_t> expansion_limit;
  std::optional<double> time_limit;
  std::optional<double> beta;
  SamplingConfig sampling;
  std::optional<std::string> reference;  // JSON object {instance id: best known cost}
  std::optional<std::string> output;
  Execution execution = Execution::kParallel;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

void validate(const ExperimentConfig& config);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
  std::string instance;
  std::string method;  // "<algorithm>-<guidance>"
  std::vector<TracePoint> trace;
  std::optional<double> cost;
  std::optional<double> best_known;  // best(i) used for the gap
  std::optional<double> gap;         // absent when best(i) is undefined or zero
  bool proved_optimal = false;
  double wall_ms = 0.0;
  std::size_t expansions = 0;
  std::size_t generated = 0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Equality ignoring wall time.
bool same_outcome(const RunRecord& a, const RunRecord& b);

struct NamedInstance {
  std::string id;
  Instance instance;
};

std::vector<NamedInstance> experiment_instances(const ExperimentConfig& config);

// One record per instance x method, sorted by (instance, method).
std::vector<RunRecord> run_search_experiment(const ExperimentConfig& config);

struct SampleResult {
  std::optional<Incumbent> best;
  std::size_t feasible = 0;
  std::size_t rollouts = 0;
};

// Independent rollouts choosing successors by softmax of the evaluator's
// sampling scores. Only validated complete solutions become `best`.
SampleResult sample_solve(const Model& model, const GuidanceEvaluator& eval, std::size_t count = 1280,
                          double temperature = 1.0, std::uint64_t seed = 0);

enum class ResultFormat { kCsv, kJson };

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "instance,method,expansions,cost,gap,proved_optimal,wall_ms";
inline constexpr const char* kTraceCsvHeader = "instance,method,expansions,cost";

// CSV writes `path` plus the long-format trace rows to trace_path(path).
void export_results(const std::vector<RunRecord>& records, const std::string& path, ResultFormat format);
std::string trace_path(const std::string& csv_path);
std::string records_to_json(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_json(const std::string& text);
std::vector<RunRecord> load_records(const std::string& path);

// Mean gap per method at each expansion budget, read from the traces.
// Budgets default to powers of 10 up to the largest expansion count.
std::string report(const std::vector<RunRecord>& records, std::optional<std::size_t> max_budget = std::nullopt);

// Directory named by DIDP_OUTPUT_DIR, or "." when unset.
std::string default_output_dir();
// `name` unchanged when absolute, else joined to default_output_dir().
std::string resolve_output(const std::string& name);

}  // namespace didp
