#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "didp/domains.hpp"
#include "didp/model.hpp"

namespace didp {

class InvalidActionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class ParamsVersionError : public Error {
 public:
  using Error::Error;
};

class CorruptParamsError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// MDP derived from a domain model.

// Routing actions are element indices; packing actions are {0: skip, 1: take}
// for the current item.
enum class ActionLayout { kPerElement, kCurrentElement };

ActionLayout action_layout(DomainTag tag);
double default_beta(DomainTag tag);
// (n + 1) * max c_ij, at least 1.
double completion_bonus(const TspInstance& tsp);

struct MdpStep {
  State next;
  double reward = 0.0;
  bool terminal = false;
  std::vector<char> next_mask;
};

class Mdp {
 public:
  Mdp(Instance inst, std::optional<double> beta = std::nullopt);

  DomainTag domain() const { return tag_; }
  const Instance& instance() const { return instance_; }
  const Model& model() const { return *model_; }
  ActionLayout layout() const { return action_layout(tag_); }
  double beta() const { return beta_; }
  // Per-visit reward bonus before scaling (TSPTW only, 0 otherwise).
  double bonus() const { return bonus_; }
  std::size_t action_count() const;
  // Row of the feature matrix whose outputs are read (packing: current item).
  std::size_t anchor(const State& s) const;

  FeatureMatrix features(const State& s) const;
  std::vector<char> mask(const State& s) const;
  bool is_terminal(const State& s) const;

  TransitionId transition_of(std::size_t action) const;
  std::size_t action_of(TransitionId t) const;

  MdpStep step(const State& s, std::size_t action) const;
  // Sum of the bonuses still obtainable from s, scaled by beta.
  double bonus_to_go(const State& s) const;
  // Signed reward of a model cost: -beta*c when minimizing, beta*c when maximizing.
  double scaled_reward(double cost) const;

 private:
  DomainTag tag_;
  Instance instance_;
  std::shared_ptr<const Model> model_;
  double beta_;
  double bonus_ = 0.0;
};

std::shared_ptr<const Mdp> build_mdp(const Instance& inst, std::optional<double> beta = std::nullopt);
std::shared_ptr<const Mdp> build_mdp(const std::string& domain_tag, const Instance& inst,
                                     std::optional<double> beta = std::nullopt);
MdpStep mdp_step(const Mdp& mdp, const State& s, std::size_t action);

// ---------------------------------------------------------------------------
// Networks.

enum class HeadKind { kQ, kActor, kCritic };
enum class Execution { kSerial, kParallel };

std::string head_name(HeadKind head);
HeadKind parse_head(const std::string& name);

// Dense layer stored inside a flat parameter vector: weights (rows x cols,
// row-major) at `offset`, followed by `rows` biases.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t weight_count() const { return rows * cols; }
  std::size_t bias_offset() const { return offset + rows * cols; }
  std::size_t size() const { return rows * cols + rows; }

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

struct NetworkConfig {
  std::size_t embed_dim = 32;
  std::size_t encoder_layers = 1;
  std::size_t hidden_dim = 64;
  std::size_t hidden_layers = 1;
};

// Per-element encoder (tanh layers), mean pooling, and a trunk. Q and actor
// trunks read [pooled, e_j] for the rows that carry actions; the critic trunk
// reads the pooled vector. Hidden trunk layers use tanh; the last is linear.
struct NetworkParams {
  DomainTag domain = DomainTag::kTsp;
  HeadKind head = HeadKind::kQ;
  std::size_t input_width = 0;
  std::vector<LayerShape> encoder;
  std::vector<LayerShape> trunk;
  std::vector<double> values;

  ActionLayout layout() const { return action_layout(domain); }
  std::size_t embed_dim() const { return encoder.empty() ? 0 : encoder.back().rows; }
  std::size_t outputs_per_row() const { return trunk.empty() ? 0 : trunk.back().rows; }

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Xavier-uniform weights, zero biases.
NetworkParams init_network(DomainTag domain, HeadKind head, const NetworkConfig& config, std::uint64_t seed);
NetworkParams zero_like(const NetworkParams& p);

// Q: raw values for every action. Actor: masked softmax. Critic: one value.
std::vector<double> forward(const NetworkParams& p, const FeatureMatrix& x, const std::vector<char>& mask,
                            std::size_t anchor = 0);
std::vector<double> pooled_embedding(const NetworkParams& p, const FeatureMatrix& x);
std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<char>& mask,
                                   double temperature = 1.0);

// Raw outputs (Q values or logits) and the gradient of a scalar with respect
// to every parameter given its gradient with respect to those outputs.
struct ForwardPass;
class NetworkTape {
 public:
  NetworkTape(const NetworkParams& p, const FeatureMatrix& x, std::size_t anchor);
  ~NetworkTape();
  NetworkTape(NetworkTape&&) noexcept;
  const std::vector<double>& outputs() const;
  // Accumulates d(scalar)/d(params) into `grad`.
  void backward(std::span<const double> d_outputs, std::vector<double>& grad) const;

 private:
  std::unique_ptr<ForwardPass> pass_;
  const NetworkParams* params_;
};

// ---------------------------------------------------------------------------
// Losses and optimizer.

struct Transition {
  FeatureMatrix features;
  std::vector<char> mask;
  std::size_t anchor = 0;
  std::size_t action = 0;
  double reward = 0.0;
  FeatureMatrix next_features;
  std::vector<char> next_mask;
  std::size_t next_anchor = 0;
  bool terminal = false;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean of (Q(s,a) - y)^2 with y = r + gamma * max over unmasked Q_target(s', .).
LossAndGrad dqn_loss(const NetworkParams& q, const NetworkParams& target, std::span<const Transition> batch,
                     double gamma, Execution exec = Execution::kSerial);

struct PpoSample {
  FeatureMatrix features;
  std::vector<char> mask;
  std::size_t anchor = 0;
  std::size_t action = 0;
  double old_log_prob = 0.0;
  double ret = 0.0;
};

struct PpoLoss {
  double loss = 0.0;         // actor_loss + critic_loss
  double actor_loss = 0.0;   // clipped surrogate minus entropy bonus
  double critic_loss = 0.0;  // mean (return - critic)^2
  double entropy = 0.0;      // mean policy entropy
  std::vector<double> advantages;
  std::vector<double> actor_grad;
  std::vector<double> critic_grad;
};

// Advantages are return - critic, normalized over the batch when requested,
// and treated as constants for differentiation.
PpoLoss ppo_loss(const NetworkParams& actor, const NetworkParams& critic, std::span<const PpoSample> batch,
                 double clip, double entropy_coef, Execution exec = Execution::kSerial,
                 bool normalize_advantages = true);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state, double lr);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Uniform with replacement.
  std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// ---------------------------------------------------------------------------
// Training.

enum class LearningAlgorithm { kDqn, kPpo };

struct TrainConfig {
  DomainTag domain = DomainTag::kKnapsack;
  std::optional<double> beta;
  NetworkConfig network;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::optional<double> final_learning_rate;  // linear decay over `episodes` when set
  double temperature = 1.0;  // DQN exploration softmax
  double entropy_coef = 1e-3;
  double clip = 0.1;
  std::size_t epochs = 3;
  double gamma = 1.0;
  std::size_t target_sync = 100;  // DQN updates between target copies
  std::size_t episodes = 1000;
  std::size_t replay_capacity = 10000;
  std::size_t train_every = 1;           // DQN environment steps per update
  std::size_t episodes_per_update = 8;   // PPO rollout batch
  std::uint64_t seed = 0;
  Execution execution = Execution::kParallel;
  // Stops at the next episode boundary once exceeded; `episodes` still caps the run.
  std::optional<double> time_limit_seconds;
};

void validate(const TrainConfig& config);
// Hyperparameters of the reference training setup for a domain and size.
TrainConfig reference_preset(DomainTag domain, std::size_t n, LearningAlgorithm algo);
// Small networks and larger reward scale for single-core runs.
TrainConfig desk_preset(DomainTag domain, LearningAlgorithm algo);

using InstanceGenerator = std::function<Instance(std::mt19937_64&)>;
InstanceGenerator fixed_instance(Instance inst);
InstanceGenerator random_instances(DomainTag domain, std::size_t n);

struct DqnResult {
  NetworkParams q;
  std::vector<double> episode_returns;
};

struct PpoResult {
  NetworkParams actor;
  NetworkParams critic;
  std::vector<double> episode_returns;
};

DqnResult train_dqn(const InstanceGenerator& generator, const TrainConfig& config);
PpoResult train_ppo(const InstanceGenerator& generator, const TrainConfig& config);

struct PolicyRollout {
  TransitionSequence actions;
  double total_reward = 0.0;
  bool reached_base = false;
};

// Follows argmax of the network output over unmasked actions until terminal.
PolicyRollout greedy_policy_rollout(const Mdp& mdp, const NetworkParams& net);

// ---------------------------------------------------------------------------
// Weight files.

inline constexpr int kParamsFormatVersion = 1;

std::string params_to_json(const NetworkParams& p);
NetworkParams params_from_json(const std::string& text);
void save_params(const NetworkParams& p, const std::string& path);
NetworkParams load_params(const std::string& path);

}  // namespace didp
