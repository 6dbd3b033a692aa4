#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "probe/episode.hpp"
#include "probe/mind_model.hpp"
#include "probe/training.hpp"

namespace probe {

// A reproducible set of evaluation settings.
struct EvalSuite {
  TaskId task = TaskId::Passing;
  Mode mode = Mode::Test;
  std::vector<std::uint64_t> seeds;
  std::vector<SortArray> arrays;  // explicit Sorting suite; overrides seeds when non-empty
  GridTaskConfig grid{};
  double noise_rate = 0.0;
  std::uint64_t noise_seed = 0;

  int size() const { return static_cast<int>(arrays.empty() ? seeds.size() : arrays.size()); }
  // Setting i with the learner removed (grid) or inert (Sorting).
  Episode setting(int i) const;
};

inline constexpr int kDefaultSuiteSize = 100;

EvalSuite make_suite(TaskId task, int n, std::uint64_t first_seed, Mode mode = Mode::Test);

// Digest over every initial state of the suite; equal digests mean equal suites.
std::uint64_t suite_digest(const EvalSuite& suite);

// Predicts the demonstrator's next action from the observed prefix.
class DemoPredictor {
 public:
  virtual ~DemoPredictor() = default;
  virtual void reset() = 0;
  virtual FactoredAction predict(const Episode& ep, const ObservationTensor& s_d) = 0;
  // The action the demonstrator actually executed.
  virtual void observe(const ObservationTensor& s_d, FactoredAction executed) = 0;
};

// argmax of π_d(. | s_d^t, m^{t-1}) with m tracked over the observed prefix.
class ModelPredictor : public DemoPredictor {
 public:
  explicit ModelPredictor(const MindModel& model) : model_(&model), tracker_(model), policy_(model, Branch::Demo) {}
  void reset() override;
  FactoredAction predict(const Episode& ep, const ObservationTensor& s_d) override;
  void observe(const ObservationTensor& s_d, FactoredAction executed) override;

 private:
  const MindModel* model_;
  TrackerRunner tracker_;
  PolicyRunner policy_;
};

// The noiseless rule-based demonstrator itself.
class OraclePredictor : public DemoPredictor {
 public:
  void reset() override {}
  FactoredAction predict(const Episode& ep, const ObservationTensor&) override { return ep.expert_action(); }
  void observe(const ObservationTensor&, FactoredAction) override {}
};

class UniformPredictor : public DemoPredictor {
 public:
  UniformPredictor(std::vector<int> heads, std::uint64_t seed) : heads_(std::move(heads)), rng_(seed) {}
  void reset() override {}
  FactoredAction predict(const Episode&, const ObservationTensor&) override { return uniform_action(heads_, rng_); }
  void observe(const ObservationTensor&, FactoredAction) override {}

 private:
  std::vector<int> heads_;
  std::mt19937_64 rng_;
};

struct SettingResult {
  int index = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  int correct = 0;
  bool success = false;
};

struct AccuracyReport {
  double accuracy = 0.0;  // pooled over all steps of all settings
  long long steps = 0;
  long long correct = 0;
  std::vector<SettingResult> settings;
};

// Runs the demonstrator alone on every setting and scores point predictions
// against the executed action. With suite.noise_rate > 0 the executed action
// passes through the noise wrapper first.
AccuracyReport eval_prediction_accuracy(DemoPredictor& predictor, const EvalSuite& suite);
AccuracyReport eval_prediction_accuracy(const MindModel& model, const EvalSuite& suite);
AccuracyReport eval_noise_robustness(DemoPredictor& predictor, EvalSuite suite, double noise_rate = 0.1);

// Acts in place of the demonstrator.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void reset() = 0;
  virtual FactoredAction act(const Episode& ep, const ObservationTensor& s_d) = 0;
  virtual void observe(const ObservationTensor& s_d, FactoredAction executed) = 0;
};

// Greedy decoding of the learned π_d, tracking m over its own prefix.
class ModelActor : public Actor {
 public:
  explicit ModelActor(const MindModel& model) : predictor_(model) {}
  void reset() override { predictor_.reset(); }
  FactoredAction act(const Episode& ep, const ObservationTensor& s_d) override { return predictor_.predict(ep, s_d); }
  void observe(const ObservationTensor& s_d, FactoredAction a) override { predictor_.observe(s_d, a); }

 private:
  ModelPredictor predictor_;
};

class PlannerActor : public Actor {
 public:
  void reset() override {}
  FactoredAction act(const Episode& ep, const ObservationTensor&) override { return ep.expert_action(); }
  void observe(const ObservationTensor&, FactoredAction) override {}
};

class UniformActor : public Actor {
 public:
  UniformActor(std::vector<int> heads, std::uint64_t seed) : heads_(std::move(heads)), rng_(seed) {}
  void reset() override {}
  FactoredAction act(const Episode&, const ObservationTensor&) override { return uniform_action(heads_, rng_); }
  void observe(const ObservationTensor&, FactoredAction) override {}

 private:
  std::vector<int> heads_;
  std::mt19937_64 rng_;
};

struct SuccessReport {
  double success_rate = 0.0;
  std::vector<SettingResult> settings;
};

// The actor drives the demonstrator's slot until the goal or T_max. In
// Construction the rule-based demonstrator acts until it first holds a block
// and the actor takes over from there.
SuccessReport eval_distillation(Actor& actor, const EvalSuite& suite);
SuccessReport eval_distillation(const MindModel& model, const EvalSuite& suite);

// Fraction of training-layout episodes in which the demonstrator reaches its
// goal while the given learner acts.
SuccessReport eval_demonstrator_success(const MindModel* model, TaskId task, const RolloutOptions& learner,
                                        int episodes, std::uint64_t seed,
                                        const GridTaskConfig* grid = nullptr);

// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct AblationCell {
  TaskId task = TaskId::Passing;
  int latent_dim = 8;
  RewardMode mode = RewardMode::MindChange;
  std::uint64_t seed = 0;
};

struct AblationRow {
  AblationCell cell;
  bool ok = false;
  std::string error;
  double final_il_loss = 0.0;
  double test_accuracy = 0.0;
  double noise_accuracy = 0.0;
  double distill_success = 0.0;
  std::uint64_t suite_digest = 0;
};

// Trains one run per cell (into out_root/<task>/<mode>/d<D>/<seed>/ when
// out_root is non-empty) and evaluates it on the shared suite. A failing cell
// is recorded and the grid continues.
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const TrainConfig& base,
                                      const EvalSuite& suite, const std::string& out_root);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string accuracy_csv(const AccuracyReport& report);
std::string success_csv(const SuccessReport& report);

}  // namespace probe
