#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "probe/applications.hpp"
#include "probe/evaluation.hpp"
#include "probe/kv_document.hpp"
#include "probe/training.hpp"

namespace probe {

// Environment variable naming the output root; default "runs".
inline constexpr const char* kRunsRootEnv = "PROBE_RUNS_ROOT";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

struct ExperimentConfig {
  TrainConfig train;
  bool task_given = false;           // `task` appeared in the document
  std::vector<std::uint64_t> seeds;  // defaults to {train.seed}
  std::string output_root;           // empty: environment, then "runs"

  // Evaluation suite
  int eval_settings = kDefaultSuiteSize;
  std::uint64_t eval_first_seed = 1000000;
  Mode eval_mode = Mode::Test;
  double noise_rate = 0.1;
  std::string suite_file;  // optional Sorting arrays, one per line

  // Transfer tasks
  long long transfer_iterations = 1000;

  // Ablation grid; empty lists fall back to the single configured value
  std::vector<int> ablate_latent_dims;
  std::vector<RewardMode> ablate_reward_modes;

  void validate() const;
  KvDocument to_kv() const;
};

// Every key an experiment config may contain.
const std::vector<std::string>& experiment_keys();

// Parses and validates; unknown keys and bad values throw ConfigError.
ExperimentConfig parse_experiment_config(const KvDocument& doc);

// Overlays `key=value` overrides onto a document.
void apply_overrides(KvDocument& doc, const std::vector<std::string>& overrides);

// Flag, then config, then environment, then "runs".
std::filesystem::path resolve_output_root(const std::string& flag, const ExperimentConfig& config);

// <root>/<task>/<mode>/<seed>
std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& task,
                                    const std::string& mode, std::uint64_t seed);

EvalSuite suite_for(const ExperimentConfig& config, TaskId task);

struct CommandContext {
  std::filesystem::path root;
  std::ostream* out = nullptr;
};

int cmd_train(const ExperimentConfig& config, const CommandContext& ctx);
int cmd_eval(const std::string& checkpoint, const ExperimentConfig& config, const std::string& out_dir,
             const CommandContext& ctx);
int cmd_distill(const std::string& checkpoint, const ExperimentConfig& config, const std::string& out_dir,
                const CommandContext& ctx);
int cmd_transfer(TransferMode mode, const std::string& checkpoint, const ExperimentConfig& config,
                 const CommandContext& ctx);
int cmd_ablate(const ExperimentConfig& config, const CommandContext& ctx);

struct ReplayOptions {
  std::uint64_t seed = 0;
  Mode mode = Mode::Train;
  bool learner = true;  // let the checkpoint's learner act when it has one
};

// Step-by-step ASCII rendering of one episode: the frame before each tick,
// both actions, m^t and the probing reward. The learner samples from π_l.
std::string replay_trace(const MindModel& model, const ReplayOptions& options);

}  // namespace probe
