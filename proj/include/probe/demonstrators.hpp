#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "probe/sorting.hpp"
#include "probe/world.hpp"

namespace probe {

// Tie-break order among equal-length plans.
inline constexpr std::array<GridAction, 6> kPlannerActionOrder{
    GridAction::MoveN, GridAction::MoveS, GridAction::MoveW,
    GridAction::MoveE, GridAction::PickUp, GridAction::PutDown};

struct PlanResult {
  GridAction first_action = GridAction::Stop;
  std::optional<int> length;  // empty when no goal-reaching sequence exists
  std::size_t expanded = 0;   // search nodes visited
};

// Breadth-first search from the current state over the demonstrator's
// composite state (position, inventory, movable items). The learner is a
// static obstacle. Returns the first action of the lexicographically smallest
// shortest plan, or Stop when none exists. In Construction the demonstrator
// only ever picks up blocks of its goal colours.
PlanResult plan_grid(const GridWorldState& state);

inline GridAction plan_grid_action(const GridWorldState& state) {
  return plan_grid(state).first_action;
}
inline std::optional<int> plan_length(const GridWorldState& state) {
  return plan_grid(state).length;
}

// One step of the modified bubble sort: scan from the cursor, wrapping over
// [0, n-1), and swap the first adjacent inversion. The cursor is left on the
// swapped position. NoOp once the array is ascending.
std::pair<SortDemoAction, BubbleSortCursor> bubble_sort_action(const SortState& state);

// With probability `noise_rate` replace the action by a uniform draw from the
// demonstrator's action set (which may coincide with the original).
GridAction with_action_noise(GridAction action, TaskId task, double noise_rate,
                             std::mt19937_64& rng);
SortDemoAction with_action_noise(SortDemoAction action, double noise_rate, std::mt19937_64& rng);

// Per-step "<step> <digest hex> <action>" lines from running the demonstrator
// alone until its goal or the time limit.
std::string demonstrator_trace(const GridWorldState& start);
std::string demonstrator_trace(const SortState& start);

}  // namespace probe
