#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "probe/observation.hpp"

namespace probe {

enum class TaskId { Passing, Maze, Construction, Sorting };
enum class Mode { Train, Test };
enum class Viewpoint { Demonstrator, Learner };

const char* task_name(TaskId task);
TaskId parse_task(const std::string& name);
bool is_grid_task(TaskId task);

inline constexpr int kGridSize = 11;
inline constexpr int kGridCells = kGridSize * kGridSize;
inline constexpr int kPaletteSize = 4;

enum class BlockKind : std::uint8_t {
  None = 0,
  Wall,
  YellowDoor,
  BlueDoor,
  Key,
  Hammer,
  Color0,
  Color1,
  Color2,
  Color3,
};

inline BlockKind colored_block(int color_id) {
  return static_cast<BlockKind>(static_cast<int>(BlockKind::Color0) + color_id);
}
inline bool is_colored(BlockKind k) { return k >= BlockKind::Color0 && k <= BlockKind::Color3; }
inline int color_of(BlockKind k) { return static_cast<int>(k) - static_cast<int>(BlockKind::Color0); }

// Ordered block kinds that get an observation channel, per task.
const std::vector<BlockKind>& task_block_kinds(TaskId task);

enum class GridAction : std::uint8_t { MoveN = 0, MoveS, MoveE, MoveW, Stop, PickUp, PutDown };
inline constexpr int kGridActionCount = 7;
inline constexpr int kPassingDemoActionCount = 5;

const char* action_name(GridAction a);

// Number of actions available to each agent; actions are the first N enum values.
int demo_action_count(TaskId task);
int learner_action_count(TaskId task);

struct Pos {
  int row = 0;
  int col = 0;
  bool operator==(const Pos&) const = default;
};

inline int cell_index(Pos p) { return p.row * kGridSize + p.col; }
inline Pos cell_pos(int index) { return {index / kGridSize, index % kGridSize}; }
inline bool in_bounds(Pos p) {
  return p.row >= 0 && p.row < kGridSize && p.col >= 0 && p.col < kGridSize;
}

// Neighbour scan order used by PickUp/PutDown: N, S, W, E.
inline constexpr std::array<Pos, 4> kScanOffsets{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

Pos move_offset(GridAction a);

struct Rect {
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;  // inclusive bounds
  bool contains(Pos p) const { return p.row >= row0 && p.row <= row1 && p.col >= col0 && p.col <= col1; }
  bool operator==(const Rect&) const = default;
};

struct ConstructionGoal {
  int color_a = 0;
  int color_b = 1;
  bool operator==(const ConstructionGoal&) const = default;
};

struct GridWorldState {
  TaskId task = TaskId::Passing;
  std::array<BlockKind, kGridCells> occupancy{};
  Pos demonstrator{};
  std::optional<Pos> learner;  // empty when the learner is removed from the world
  BlockKind demonstrator_inventory = BlockKind::None;
  BlockKind learner_inventory = BlockKind::None;
  int step_count = 0;
  int t_max = 15;
  std::optional<ConstructionGoal> goal;
  Rect goal_region{};  // Passing / Maze: the demonstrator must enter it

  BlockKind at(Pos p) const { return occupancy[static_cast<std::size_t>(cell_index(p))]; }
  BlockKind& at(Pos p) { return occupancy[static_cast<std::size_t>(cell_index(p))]; }

  bool operator==(const GridWorldState&) const = default;
};

// Who is acting; item rules differ (only the learner relocates walls in
// Passing and carries door blocks in Maze).
enum class Role { Demonstrator, Learner };

enum class PickEffect { None, Take, Open };

// What PickUp does to a neighbouring cell holding `target` for an agent
// carrying `held`. Open removes a door with the matching tool.
PickEffect pick_effect(TaskId task, Role role, BlockKind held, BlockKind target);

// Cell selected by PickUp / PutDown under the N,S,W,E scan, if any.
std::optional<Pos> pickup_target(const GridWorldState& s, Role role);
std::optional<Pos> putdown_target(const GridWorldState& s, Role role);

// True if an agent may enter `p` (in bounds, no block, not the other agent).
bool passable(const GridWorldState& s, Pos p, Role mover);

struct GridStepResult {
  GridWorldState state;
  bool terminal = false;
};

// Demonstrator resolves first, then the learner. Illegal moves are no-ops.
GridStepResult step_grid(const GridWorldState& state, GridAction demo_action,
                         GridAction learner_action);

bool goal_reached(const GridWorldState& state);

ObservationTensor encode_grid_observation(const GridWorldState& state, Viewpoint viewpoint);

std::uint64_t grid_digest(const GridWorldState& state);

// One char per cell: '.' empty, '#' wall, 'Y'/'B' doors, 'k' key, 'h' hammer,
// '0'-'3' coloured blocks, 'D' demonstrator, 'L' learner.
std::string render_grid(const GridWorldState& state);

// Inverse of render_grid for occupancy and agent positions. Inventories,
// step counter and goal must be set separately.
GridWorldState parse_grid(TaskId task, const std::string& ascii);

}  // namespace probe
