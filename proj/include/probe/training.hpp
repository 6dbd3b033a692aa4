#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "probe/checkpoint.hpp"
#include "probe/episode.hpp"
#include "probe/kv_document.hpp"
#include "probe/layouts.hpp"
#include "probe/mind_model.hpp"
#include "probe/optimizer.hpp"

namespace probe {

enum class RewardMode { MindChange, CountBased, SelfSupervised, RandomProbe, Passive };

const char* reward_mode_name(RewardMode m);
RewardMode parse_reward_mode(const std::string& name);

struct TrainConfig {
  TaskId task = TaskId::Passing;
  RewardMode reward_mode = RewardMode::MindChange;
  int latent_dim = 8;
  long long iterations = 1000;
  double gamma = 0.95;
  double entropy_weight = 0.01;
  RmsPropConfig optimizer{};
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  int t_max = 0;  // 0 keeps the task default
  long long checkpoint_interval = 0;  // 0: final checkpoint only
  std::uint64_t seed = 0;
  double count_beta = 1.0;
  // Divide probing rewards by a running RMS before the actor-critic update.
  bool normalize_rewards = true;
  GridTaskConfig grid{};  // ignored for Sorting

  // Throws ConfigError on out-of-range values.
  void validate() const;
  KvDocument to_kv() const;
  static TrainConfig defaults(TaskId task);
};

// ||m_cur - m_prev||^2
double probing_reward(const std::vector<double>& m_prev, const std::vector<double>& m_cur);
double probing_reward(const double* m_prev, const double* m_cur, int dim);

// R_t = sum_{k>=0} gamma^k r_{t+k}, truncated at the episode end.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

// Linear anneal from `start` at i = 0 to `end` at i = n - 1.
double epsilon_at(long long i, long long n, double start, double end);

// Recorded episode. Ticks are 0-based; tick t holds (s_d^{t+1}, a_d^{t+1}).
struct Trajectory {
  std::vector<ObservationTensor> demo_obs;
  std::vector<FactoredAction> demo_actions;
  std::vector<double> minds;  // T x D, row t = m^{t+1}
  std::vector<double> mind_change;  // per tick ||m^{t+1} - m^t||^2
  std::vector<std::uint64_t> next_digests;  // world digest after each tick

  // Learner decisions (a subset of ticks in Sorting, every tick otherwise).
  std::vector<int> learner_ticks;
  std::vector<ObservationTensor> learner_obs;
  std::vector<ObservationTensor> learner_other;  // demonstrator's view, for the no-mind learner
  std::vector<FactoredAction> learner_actions;

  int length() const { return static_cast<int>(demo_actions.size()); }
  bool goal_reached = false;
  int latent_dim = 0;

  // m^{t} for the decision at tick t (m^0 = 0).
  std::vector<double> mind_before(int tick) const;
  // m_prev rows for every tick (T x D), i.e. [m^0, m^1, ..., m^{T-1}].
  std::vector<double> minds_prev() const;
  std::vector<double> learner_minds_prev() const;
};

enum class LearnerControl { Policy, Uniform, Scripted };

struct RolloutOptions {
  LearnerPresence presence = LearnerPresence::Active;
  LearnerControl control = LearnerControl::Policy;
  double epsilon = 0.0;
  double demo_noise = 0.0;
  // Used when control == Scripted.
  std::function<FactoredAction(const Episode&)> script;
};

// One episode: demonstrator acts, learner samples from π_l (ε-greedy), the world
// steps, then the tracker folds in (s_d, a_d). Runs until the episode ends.
Trajectory rollout(const MindModel& model, Episode episode, const RolloutOptions& options,
                   std::mt19937_64& rng);

// Samples each factor from its distribution.
FactoredAction sample_action(const std::vector<std::vector<double>>& probs, std::mt19937_64& rng);
FactoredAction uniform_action(const std::vector<int>& heads, std::mt19937_64& rng);
FactoredAction argmax_action(const std::vector<std::vector<double>>& probs);

struct IlResult {
  double loss = 0.0;
  std::vector<double> step_loss;  // -log π_d(a_d^t | s_d^t, m^{t-1}) per tick
  bool applied = false;
};

// Cross-entropy of π_d on the demonstrator trajectory; fills θ_M and θ_d
// gradients (zeroed first). No parameter update.
IlResult il_gradients(MindModel& model, const Trajectory& traj);

// il_gradients followed by one optimizer step on θ_M and θ_d.
IlResult il_update(MindModel& model, RmsProp& opt, const Trajectory& traj);

// Rewards per learner decision: sum of per-tick rewards from the decision up
// to the next one.
std::vector<double> learner_rewards(const Trajectory& traj, const std::vector<double>& tick_rewards);

struct RlResult {
  double policy_objective = 0.0;  // mean of A log π + λ H
  double value_loss = 0.0;        // mean of 0.5 (R - V)^2
  double entropy = 0.0;           // mean policy entropy
  std::vector<double> returns;
  bool applied = false;
};

// Advantage actor-critic gradients into θ_l and θ_V (zeroed first). θ_M and
// θ_d are never touched. `rewards` has one entry per learner decision.
RlResult rl_gradients(MindModel& model, const Trajectory& traj, const std::vector<double>& rewards,
                      double gamma, double entropy_weight);
RlResult rl_update(MindModel& model, RmsProp& opt, const Trajectory& traj,
                   const std::vector<double>& rewards, double gamma, double entropy_weight);

// Visit-count bonus β / sqrt(n(φ(s))) over exact world digests.
class CountBonus {
 public:
  explicit CountBonus(double beta = 1.0) : beta_(beta) {}
  double visit(std::uint64_t digest);
  const std::unordered_map<std::uint64_t, std::uint64_t>& counts() const { return counts_; }
  std::unordered_map<std::uint64_t, std::uint64_t>& counts() { return counts_; }

 private:
  double beta_;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

struct IterationRecord {
  long long iteration = 0;
  int episode_length = 0;
  double il_loss = 0.0;
  double mean_probing_reward = 0.0;
  double entropy = 0.0;
  double epsilon = 0.0;
  double value_loss = 0.0;
  bool demo_success = false;

  std::string to_json() const;
};

// Running mean of the per-tick squared reward, as a bias-corrected moving
// average over episodes.
class RewardScaler {
 public:
  static constexpr double kDecay = 0.99;

  // Folds in one episode and returns its rewards divided by the running RMS.
  std::vector<double> scale(const std::vector<double>& rewards);
  double rms() const;

  double mean_square = 0.0;
  long long episodes = 0;
};

// Outer training loop state: model, optimizer, RNG and bookkeeping; resumable from a
// checkpoint.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& config);

  IterationRecord iterate();
  long long iteration() const { return iteration_; }
  bool finished() const { return iteration_ >= config_.iterations; }

  const TrainConfig& config() const { return config_; }
  MindModel& model() { return model_; }
  const MindModel& model() const { return model_; }
  const RmsProp& optimizer() const { return opt_; }

  // Full training state (parameters, optimizer, RNG, counts, iteration).
  Checkpoint save_state() const;
  void load_state(const Checkpoint& ckpt);

 private:
  TrainConfig config_;
  MindModel model_;
  RmsProp opt_;
  std::mt19937_64 rng_;
  CountBonus counts_;
  RewardScaler scaler_;
  long long iteration_ = 0;
};

// Independent seed for a numbered stream of one run (1: init, 2: rollouts).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

ModelConfig model_config_for(const TrainConfig& config);

struct TrainSummary {
  std::vector<IterationRecord> records;  // this invocation only
  std::vector<std::string> checkpoints;
  bool resumed = false;
};

// Runs training into `out_dir` (metrics.jsonl, timing.jsonl, checkpoints/).
// If checkpoints already exist there, resumes from the latest one.
TrainSummary train(const TrainConfig& config, const std::string& out_dir);

// Checkpoint files under `out_dir`, sorted by iteration.
std::vector<std::pair<long long, std::string>> list_checkpoints(const std::string& out_dir);

}  // namespace probe
