#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "probe/checkpoint.hpp"
#include "probe/mind_model.hpp"
#include "probe/optimizer.hpp"
#include "probe/training.hpp"

namespace probe {

enum class TransferMode { Collaborate, Compete };

const char* transfer_mode_name(TransferMode m);

inline constexpr double kCollaborateStepPenalty = 0.05;
inline constexpr double kCollaborateGoalReward = 1.0;
inline constexpr double kCompeteStepReward = 0.05;
inline constexpr double kCompeteOpponentPenalty = 1.0;

// Reward of one tick; `goal_reached` is true on the tick the demonstrator
// completes its goal (the terminal component is paid there, once).
double task_reward(TransferMode mode, bool goal_reached);

// Per-tick task rewards of a recorded episode.
std::vector<double> task_tick_rewards(TransferMode mode, const Trajectory& traj);

// Return of an episode lasting `steps` ticks that did or did not end at the goal.
double episode_task_return(TransferMode mode, int steps, bool goal_reached);

// Lower bound on the ticks the two agents need to finish the construction
// goal together: each may carry one goal block, both move every tick, the
// agents and the blocks in transit never get in each other's way and a block
// may be put down on any free cell. nullopt if the goal is unreachable.
std::optional<int> optimal_completion_steps(const GridWorldState& state);

// Best achievable episode return for the layout, used as the unit of the
// rescaled learning curves. Collaborate: 1 - 0.05 * optimal_completion_steps.
// Compete: 0.05 * T_max (the opponent never finishes).
double theoretical_max_return(TransferMode mode, const GridWorldState& state);

// Return when the demonstrator acts alone (learner removed).
double demonstrator_only_return(TransferMode mode, const GridWorldState& state);

struct RetrainConfig {
  TransferMode mode = TransferMode::Collaborate;
  long long iterations = 1000;
  std::uint64_t seed = 0;
  double gamma = 0.95;
  double entropy_weight = 0.01;
  RmsPropConfig optimizer{};
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  GridTaskConfig grid = default_grid_config(TaskId::Construction);
};

struct CurvePoint {
  long long iteration = 0;
  double episode_return = 0.0;
  double rescaled = 0.0;
  double demo_only_rescaled = 0.0;
  int episode_length = 0;
  bool demo_success = false;
};

struct RetrainResult {
  MindModel model;
  std::vector<CurvePoint> curve;
};

// Keeps θ_M from `pretrained` fixed and trains fresh θ_l, θ_V with A2C on the
// task reward.
RetrainResult retrain_with_fixed_tracker(const Checkpoint& pretrained, const RetrainConfig& config);

// Baseline π_l(a | s_l, s_d) without agent modelling, trained the same way.
RetrainResult train_no_mind_baseline(const RetrainConfig& config);

// Mean rescaled return over the last `fraction` of the curve.
double final_mean_rescaled(const std::vector<CurvePoint>& curve, double fraction = 0.1);

std::string curve_csv(const std::vector<CurvePoint>& curve);

}  // namespace probe
