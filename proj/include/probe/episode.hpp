#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "probe/layouts.hpp"
#include "probe/observation.hpp"
#include "probe/sorting.hpp"
#include "probe/world.hpp"

namespace probe {

// An action split into independent categorical factors. Grid actions use one
// factor; Sorting uses two (swap pair for the demonstrator, index/bit for the
// learner). Unused factors stay 0.
struct FactoredAction {
  std::array<int, 2> part{0, 0};
  bool operator==(const FactoredAction&) const = default;
};

inline constexpr int kMaxHeads = 2;

// Static shape information the mind model is built from.
struct TaskSpec {
  TaskId task = TaskId::Passing;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<int> demo_heads;
  std::vector<int> learner_heads;
  int t_max = 0;

  int cells() const { return height * width; }
  int demo_action_channels() const;
};

TaskSpec task_spec(TaskId task);
TaskSpec task_spec(TaskId task, const GridTaskConfig& config);

// Where the learner is during an episode.
enum class LearnerPresence {
  Active,  // in the world and acting
  Absent,  // removed from the grid; inert slot in Sorting
};

// Uniform wrapper over the grid world and the sorting array so that rollout,
// evaluation and replay code is task-agnostic.
class Episode {
 public:
  static Episode grid(GridWorldState state);
  static Episode sorting(SortState state, LearnerPresence presence = LearnerPresence::Active);
  // Fresh episode of `task` in the given mode; `config` only used for grid tasks.
  static Episode reset(TaskId task, Mode mode, std::uint64_t seed, const GridTaskConfig* config,
                       LearnerPresence presence);

  TaskId task() const;
  bool is_grid() const { return std::holds_alternative<GridWorldState>(state_); }
  const GridWorldState& grid_state() const { return std::get<GridWorldState>(state_); }
  const SortState& sort_state() const { return std::get<SortState>(state_); }
  GridWorldState& grid_state() { return std::get<GridWorldState>(state_); }
  SortState& sort_state() { return std::get<SortState>(state_); }

  int step_count() const;
  int t_max() const;
  bool goal_reached() const;
  bool terminal() const { return terminal_; }

  // True if the learner chooses an action on the coming tick.
  bool learner_acts() const;
  bool learner_present() const { return presence_ == LearnerPresence::Active; }

  ObservationTensor demo_observation() const;
  ObservationTensor learner_observation() const;

  // Rule-based demonstrator's choice for the coming tick (does not mutate).
  FactoredAction expert_action() const;

  // Advance one tick. `learner` is ignored unless the learner acts this tick.
  // For Sorting, the demonstrator's bubble-sort cursor follows the executed swap.
  void step(FactoredAction demo, FactoredAction learner);

  std::uint64_t digest() const;
  std::string render() const;
  std::string describe_demo_action(FactoredAction a) const;
  std::string describe_learner_action(FactoredAction a) const;

 private:
  std::variant<GridWorldState, SortState> state_;
  LearnerPresence presence_ = LearnerPresence::Active;
  bool terminal_ = false;
};

// Map between factored actions and the environment's native actions.
FactoredAction from_sort_demo(SortDemoAction a);
SortDemoAction to_sort_demo(FactoredAction a);
SortLearnerAction to_sort_learner(FactoredAction a);
FactoredAction noop_sort_learner();

// Apply action noise to a demonstrator action in factored form.
FactoredAction noisy_demo_action(TaskId task, FactoredAction a, double noise_rate,
                                 std::mt19937_64& rng);

}  // namespace probe
