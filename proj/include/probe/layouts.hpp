#pragma once

#include <cstdint>
#include <vector>

#include "probe/kv_document.hpp"
#include "probe/world.hpp"

namespace probe {

// Geometry and randomisation parameters of one grid task. The defaults are
// the shipped layouts; `to_kv` / `from_kv` round-trip them as plain text.
struct GridTaskConfig {
  TaskId task = TaskId::Passing;
  int t_max = 15;
  int wall_row = 5;  // Passing middle wall, Maze horizontal wall
  int wall_col = 5;  // Maze vertical wall
  Pos demo_start{};
  Pos learner_start{};
  Rect goal_region{};

  // Passing
  int train_gap_col = 1;
  Rect test_demo_region{};

  // Maze: tool / demonstrator placement region, wall gaps, loose training doors
  Rect tool_region{};
  std::vector<Pos> gaps;
  std::vector<Pos> loose_yellow_doors;
  std::vector<Pos> loose_blue_doors;

  // Construction
  std::vector<Pos> block_cells;
  int palette_size = kPaletteSize;
  int test_obstacles = 6;

  KvDocument to_kv() const;
  static GridTaskConfig from_kv(const KvDocument& doc);
};

GridTaskConfig default_grid_config(TaskId task);

inline constexpr int kMaxLayoutAttempts = 1000;

// Train mode reproduces the fixed training layout (random elements drawn from
// `seed` only where the task randomises them); Test mode draws a fresh setting
// and resamples until the demonstrator's goal is reachable.
GridWorldState reset_grid(TaskId task, Mode mode, std::uint64_t seed,
                          const GridTaskConfig& config);
GridWorldState reset_grid(TaskId task, Mode mode, std::uint64_t seed);

}  // namespace probe
