#include "probe/layouts.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <sstream>
#include <stdexcept>

#include "probe/demonstrators.hpp"

namespace probe {
namespace {

std::string format_pos(Pos p) { return std::to_string(p.row) + "," + std::to_string(p.col); }

std::string format_positions(const std::vector<Pos>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ";";
    out += format_pos(ps[i]);
  }
  return out;
}

std::string format_rect(const Rect& r) {
  return std::to_string(r.row0) + "," + std::to_string(r.col0) + "," + std::to_string(r.row1) +
         "," + std::to_string(r.col1);
}

std::vector<int> parse_ints(const std::string& s, char sep) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: " + s);
    }
  }
  return out;
}

Pos parse_pos(const std::string& s) {
  const auto v = parse_ints(s, ',');
  if (v.size() != 2) throw ConfigError("expected row,col: " + s);
  return {v[0], v[1]};
}

std::vector<Pos> parse_positions(const std::string& s) {
  std::vector<Pos> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(parse_pos(item));
  }
  return out;
}

Rect parse_rect(const std::string& s) {
  const auto v = parse_ints(s, ',');
  if (v.size() != 4) throw ConfigError("expected row0,col0,row1,col1: " + s);
  return {v[0], v[1], v[2], v[3]};
}

void add_border(GridWorldState& s) {
  for (int i = 0; i < kGridSize; ++i) {
    s.at({0, i}) = BlockKind::Wall;
    s.at({kGridSize - 1, i}) = BlockKind::Wall;
    s.at({i, 0}) = BlockKind::Wall;
    s.at({i, kGridSize - 1}) = BlockKind::Wall;
  }
}

GridWorldState blank(const GridTaskConfig& cfg) {
  GridWorldState s;
  s.task = cfg.task;
  s.t_max = cfg.t_max;
  s.goal_region = cfg.goal_region;
  add_border(s);
  return s;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Pos uniform_in(std::mt19937_64& rng, const Rect& r) {
  return {uniform_int(rng, r.row0, r.row1), uniform_int(rng, r.col0, r.col1)};
}

// Distinct cells drawn uniformly from `r`, skipping `exclude`.
std::vector<Pos> distinct_in(std::mt19937_64& rng, const Rect& r, std::size_t n,
                             const std::vector<Pos>& exclude) {
  std::vector<Pos> pool;
  for (int row = r.row0; row <= r.row1; ++row)
    for (int col = r.col0; col <= r.col1; ++col) {
      const Pos p{row, col};
      if (std::find(exclude.begin(), exclude.end(), p) == exclude.end()) pool.push_back(p);
    }
  if (pool.size() < n) throw std::runtime_error("placement region too small");
  std::vector<Pos> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(i), static_cast<int>(pool.size()) - 1));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

GridWorldState passing_layout(const GridTaskConfig& cfg, Mode mode, std::mt19937_64& rng) {
  GridWorldState s = blank(cfg);
  int gap = cfg.train_gap_col;
  s.demonstrator = cfg.demo_start;
  s.learner = cfg.learner_start;
  if (mode == Mode::Test) {
    gap = uniform_int(rng, 1, kGridSize - 2);
    s.demonstrator = uniform_in(rng, cfg.test_demo_region);
    s.learner = uniform_in(rng, {1, 1, cfg.wall_row - 1, kGridSize - 2});
  }
  for (int c = 1; c < kGridSize - 1; ++c) {
    if (c != gap) s.at({cfg.wall_row, c}) = BlockKind::Wall;
  }
  return s;
}

GridWorldState maze_layout(const GridTaskConfig& cfg, Mode mode, std::mt19937_64& rng) {
  GridWorldState s = blank(cfg);
  for (int i = 0; i < kGridSize; ++i) {
    s.at({cfg.wall_row, i}) = BlockKind::Wall;
    s.at({i, cfg.wall_col}) = BlockKind::Wall;
  }
  for (const Pos g : cfg.gaps) s.at(g) = BlockKind::None;
  s.learner = cfg.learner_start;
  if (mode == Mode::Train) {
    s.demonstrator = cfg.demo_start;
    for (const Pos p : cfg.loose_yellow_doors) s.at(p) = BlockKind::YellowDoor;
    for (const Pos p : cfg.loose_blue_doors) s.at(p) = BlockKind::BlueDoor;
    const auto tools = distinct_in(rng, cfg.tool_region, 2, {s.demonstrator});
    s.at(tools[0]) = BlockKind::Key;
    s.at(tools[1]) = BlockKind::Hammer;
    return s;
  }
  const int doors = uniform_int(rng, 1, 2);
  std::vector<Pos> gaps = cfg.gaps;
  for (int i = 0; i < doors; ++i) {
    const int j = uniform_int(rng, i, static_cast<int>(gaps.size()) - 1);
    std::swap(gaps[static_cast<std::size_t>(i)], gaps[static_cast<std::size_t>(j)]);
    s.at(gaps[static_cast<std::size_t>(i)]) =
        uniform_int(rng, 0, 1) == 0 ? BlockKind::YellowDoor : BlockKind::BlueDoor;
  }
  const auto cells = distinct_in(rng, cfg.tool_region, 3, {});
  s.demonstrator = cells[0];
  s.at(cells[1]) = BlockKind::Key;
  s.at(cells[2]) = BlockKind::Hammer;
  return s;
}

GridWorldState construction_layout(const GridTaskConfig& cfg, Mode mode, std::mt19937_64& rng) {
  GridWorldState s = blank(cfg);
  s.demonstrator = cfg.demo_start;
  s.learner = cfg.learner_start;
  std::vector<int> colors(static_cast<std::size_t>(cfg.palette_size));
  for (int i = 0; i < cfg.palette_size; ++i) colors[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = 0; i < cfg.block_cells.size(); ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(i), cfg.palette_size - 1));
    std::swap(colors[i], colors[j]);
    s.at(cfg.block_cells[i]) = colored_block(colors[i]);
  }
  const int n = static_cast<int>(cfg.block_cells.size());
  const int first = uniform_int(rng, 0, n - 1);
  int second = uniform_int(rng, 0, n - 2);
  if (second >= first) ++second;
  const int ca = colors[static_cast<std::size_t>(first)];
  const int cb = colors[static_cast<std::size_t>(second)];
  s.goal = ConstructionGoal{std::min(ca, cb), std::max(ca, cb)};
  if (mode == Mode::Train) return s;

  std::vector<Pos> candidates;
  for (int i = 0; i < kGridCells; ++i) {
    const Pos p = cell_pos(i);
    if (s.at(p) != BlockKind::None || p == s.demonstrator || p == *s.learner) continue;
    const bool near_block = std::any_of(cfg.block_cells.begin(), cfg.block_cells.end(), [p](Pos b) {
      return std::max(std::abs(b.row - p.row), std::abs(b.col - p.col)) == 1;
    });
    if (near_block) candidates.push_back(p);
  }
  for (int i = 0; i < cfg.test_obstacles && i < static_cast<int>(candidates.size()); ++i) {
    const int j = uniform_int(rng, i, static_cast<int>(candidates.size()) - 1);
    std::swap(candidates[static_cast<std::size_t>(i)], candidates[static_cast<std::size_t>(j)]);
    s.at(candidates[static_cast<std::size_t>(i)]) = BlockKind::Wall;
  }
  return s;
}

}  // namespace

GridTaskConfig default_grid_config(TaskId task) {
  GridTaskConfig c;
  c.task = task;
  switch (task) {
    case TaskId::Passing:
      c.t_max = 15;
      c.demo_start = {9, 9};
      c.learner_start = {2, 5};
      c.goal_region = {0, 0, c.wall_row - 1, kGridSize - 1};
      c.train_gap_col = 1;
      c.test_demo_region = {c.wall_row + 1, 1, kGridSize - 2, kGridSize - 2};
      break;
    case TaskId::Maze:
      c.t_max = 60;
      c.demo_start = {1, 9};
      c.learner_start = {3, 2};
      c.goal_region = {1, 1, 4, 4};
      c.tool_region = {1, 7, 4, 9};
      c.gaps = {{2, 5}, {5, 7}, {8, 5}, {5, 2}};
      c.loose_yellow_doors = {{1, 1}};
      c.loose_blue_doors = {{1, 2}};
      break;
    case TaskId::Construction:
      c.t_max = 30;
      c.demo_start = {9, 1};
      c.learner_start = {1, 9};
      c.block_cells = {{3, 3}, {3, 7}, {7, 5}};
      break;
    case TaskId::Sorting:
      throw std::invalid_argument("sorting is not a grid task");
  }
  return c;
}

KvDocument GridTaskConfig::to_kv() const {
  KvDocument d;
  d.set("task", task_name(task));
  d.set("grid_size", kGridSize);
  d.set("t_max", t_max);
  d.set("wall_row", wall_row);
  d.set("wall_col", wall_col);
  d.set("demo_start", format_pos(demo_start));
  d.set("learner_start", format_pos(learner_start));
  d.set("goal_region", format_rect(goal_region));
  d.set("train_gap_col", train_gap_col);
  d.set("test_demo_region", format_rect(test_demo_region));
  d.set("tool_region", format_rect(tool_region));
  d.set("gaps", format_positions(gaps));
  d.set("loose_yellow_doors", format_positions(loose_yellow_doors));
  d.set("loose_blue_doors", format_positions(loose_blue_doors));
  d.set("block_cells", format_positions(block_cells));
  d.set("palette_size", palette_size);
  d.set("test_obstacles", test_obstacles);
  return d;
}

GridTaskConfig GridTaskConfig::from_kv(const KvDocument& d) {
  d.reject_unknown({"task", "grid_size", "t_max", "wall_row", "wall_col", "demo_start",
                    "learner_start", "goal_region", "train_gap_col", "test_demo_region",
                    "tool_region", "gaps", "loose_yellow_doors", "loose_blue_doors",
                    "block_cells", "palette_size", "test_obstacles"});
  GridTaskConfig c = default_grid_config(parse_task(d.get_string("task")));
  if (d.get_int("grid_size", kGridSize) != kGridSize) throw ConfigError("grid_size must be 11");
  c.t_max = static_cast<int>(d.get_int("t_max", c.t_max));
  c.wall_row = static_cast<int>(d.get_int("wall_row", c.wall_row));
  c.wall_col = static_cast<int>(d.get_int("wall_col", c.wall_col));
  if (auto v = d.find("demo_start")) c.demo_start = parse_pos(*v);
  if (auto v = d.find("learner_start")) c.learner_start = parse_pos(*v);
  if (auto v = d.find("goal_region")) c.goal_region = parse_rect(*v);
  c.train_gap_col = static_cast<int>(d.get_int("train_gap_col", c.train_gap_col));
  if (auto v = d.find("test_demo_region")) c.test_demo_region = parse_rect(*v);
  if (auto v = d.find("tool_region")) c.tool_region = parse_rect(*v);
  if (auto v = d.find("gaps")) c.gaps = parse_positions(*v);
  if (auto v = d.find("loose_yellow_doors")) c.loose_yellow_doors = parse_positions(*v);
  if (auto v = d.find("loose_blue_doors")) c.loose_blue_doors = parse_positions(*v);
  if (auto v = d.find("block_cells")) c.block_cells = parse_positions(*v);
  c.palette_size = static_cast<int>(d.get_int("palette_size", c.palette_size));
  c.test_obstacles = static_cast<int>(d.get_int("test_obstacles", c.test_obstacles));
  if (c.t_max <= 0) throw ConfigError("t_max must be positive");
  if (c.palette_size < 2 || c.palette_size > kPaletteSize) throw ConfigError("palette_size out of range");
  if (c.task == TaskId::Construction &&
      (c.block_cells.size() < 2 || static_cast<int>(c.block_cells.size()) > c.palette_size)) {
    throw ConfigError("construction needs between 2 and palette_size blocks");
  }
  return c;
}

GridWorldState reset_grid(TaskId task, Mode mode, std::uint64_t seed, const GridTaskConfig& cfg) {
  if (cfg.task != task) throw std::invalid_argument("config is for a different task");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kMaxLayoutAttempts; ++attempt) {
    GridWorldState s;
    switch (task) {
      case TaskId::Passing: s = passing_layout(cfg, mode, rng); break;
      case TaskId::Maze: s = maze_layout(cfg, mode, rng); break;
      case TaskId::Construction: s = construction_layout(cfg, mode, rng); break;
      case TaskId::Sorting: throw std::invalid_argument("sorting is not a grid task");
    }
    if (mode == Mode::Train || plan_length(s).has_value()) return s;
  }
  throw std::runtime_error(std::string("layout generator for ") + task_name(task) +
                           " produced no solvable setting in 1000 attempts");
}

GridWorldState reset_grid(TaskId task, Mode mode, std::uint64_t seed) {
  return reset_grid(task, mode, seed, default_grid_config(task));
}

}  // namespace probe
