#include "probe/world.hpp"

#include <stdexcept>

namespace probe {

const char* task_name(TaskId task) {
  switch (task) {
    case TaskId::Passing: return "passing";
    case TaskId::Maze: return "maze";
    case TaskId::Construction: return "construction";
    case TaskId::Sorting: return "sorting";
  }
  return "?";
}

TaskId parse_task(const std::string& name) {
  if (name == "passing") return TaskId::Passing;
  if (name == "maze") return TaskId::Maze;
  if (name == "construction") return TaskId::Construction;
  if (name == "sorting") return TaskId::Sorting;
  throw std::invalid_argument("unknown task: " + name);
}

bool is_grid_task(TaskId task) { return task != TaskId::Sorting; }

const std::vector<BlockKind>& task_block_kinds(TaskId task) {
  static const std::vector<BlockKind> passing{BlockKind::Wall};
  static const std::vector<BlockKind> maze{BlockKind::Wall, BlockKind::YellowDoor,
                                           BlockKind::BlueDoor, BlockKind::Key, BlockKind::Hammer};
  static const std::vector<BlockKind> construction{BlockKind::Wall, BlockKind::Color0,
                                                   BlockKind::Color1, BlockKind::Color2,
                                                   BlockKind::Color3};
  switch (task) {
    case TaskId::Passing: return passing;
    case TaskId::Maze: return maze;
    case TaskId::Construction: return construction;
    case TaskId::Sorting: break;
  }
  throw std::invalid_argument("sorting has no grid block kinds");
}

const char* action_name(GridAction a) {
  switch (a) {
    case GridAction::MoveN: return "N";
    case GridAction::MoveS: return "S";
    case GridAction::MoveE: return "E";
    case GridAction::MoveW: return "W";
    case GridAction::Stop: return "stop";
    case GridAction::PickUp: return "pick";
    case GridAction::PutDown: return "put";
  }
  return "?";
}

int demo_action_count(TaskId task) {
  return task == TaskId::Passing ? kPassingDemoActionCount : kGridActionCount;
}

int learner_action_count(TaskId) { return kGridActionCount; }

Pos move_offset(GridAction a) {
  switch (a) {
    case GridAction::MoveN: return {-1, 0};
    case GridAction::MoveS: return {1, 0};
    case GridAction::MoveE: return {0, 1};
    case GridAction::MoveW: return {0, -1};
    default: return {0, 0};
  }
}

PickEffect pick_effect(TaskId task, Role role, BlockKind held, BlockKind target) {
  switch (task) {
    case TaskId::Passing:
      if (role == Role::Learner && held == BlockKind::None && target == BlockKind::Wall) {
        return PickEffect::Take;
      }
      return PickEffect::None;
    case TaskId::Maze:
      if (held == BlockKind::None) {
        if (target == BlockKind::Key || target == BlockKind::Hammer) return PickEffect::Take;
        if (role == Role::Learner &&
            (target == BlockKind::YellowDoor || target == BlockKind::BlueDoor)) {
          return PickEffect::Take;
        }
        return PickEffect::None;
      }
      if (role == Role::Demonstrator) {
        if (held == BlockKind::Key && target == BlockKind::YellowDoor) return PickEffect::Open;
        if (held == BlockKind::Hammer && target == BlockKind::BlueDoor) return PickEffect::Open;
      }
      return PickEffect::None;
    case TaskId::Construction:
      return held == BlockKind::None && is_colored(target) ? PickEffect::Take : PickEffect::None;
    case TaskId::Sorting: break;
  }
  return PickEffect::None;
}

namespace {

Pos agent_pos(const GridWorldState& s, Role role) {
  return role == Role::Demonstrator ? s.demonstrator : *s.learner;
}

BlockKind held_item(const GridWorldState& s, Role role) {
  return role == Role::Demonstrator ? s.demonstrator_inventory : s.learner_inventory;
}

bool occupied_by_other(const GridWorldState& s, Pos p, Role self) {
  if (self == Role::Demonstrator) return s.learner && *s.learner == p;
  return s.demonstrator == p;
}

void check_action(TaskId task, Role role, GridAction a) {
  const int limit = role == Role::Demonstrator ? demo_action_count(task) : learner_action_count(task);
  if (static_cast<int>(a) >= limit) {
    throw std::invalid_argument(std::string("action ") + action_name(a) +
                                " is outside the agent's action set");
  }
}

void apply_action(GridWorldState& s, Role role, GridAction a) {
  Pos& pos = role == Role::Demonstrator ? s.demonstrator : *s.learner;
  BlockKind& inv = role == Role::Demonstrator ? s.demonstrator_inventory : s.learner_inventory;
  switch (a) {
    case GridAction::MoveN:
    case GridAction::MoveS:
    case GridAction::MoveE:
    case GridAction::MoveW: {
      const Pos off = move_offset(a);
      const Pos next{pos.row + off.row, pos.col + off.col};
      if (passable(s, next, role)) pos = next;
      break;
    }
    case GridAction::Stop: break;
    case GridAction::PickUp: {
      const auto target = pickup_target(s, role);
      if (!target) break;
      BlockKind& cell = s.at(*target);
      if (pick_effect(s.task, role, inv, cell) == PickEffect::Take) inv = cell;
      cell = BlockKind::None;
      break;
    }
    case GridAction::PutDown: {
      const auto target = putdown_target(s, role);
      if (!target) break;
      s.at(*target) = inv;
      inv = BlockKind::None;
      break;
    }
  }
}

}  // namespace

bool passable(const GridWorldState& s, Pos p, Role mover) {
  return in_bounds(p) && s.at(p) == BlockKind::None && !occupied_by_other(s, p, mover);
}

std::optional<Pos> pickup_target(const GridWorldState& s, Role role) {
  const Pos pos = agent_pos(s, role);
  const BlockKind held = held_item(s, role);
  for (const Pos off : kScanOffsets) {
    const Pos p{pos.row + off.row, pos.col + off.col};
    if (!in_bounds(p)) continue;
    if (pick_effect(s.task, role, held, s.at(p)) != PickEffect::None) return p;
  }
  return std::nullopt;
}

std::optional<Pos> putdown_target(const GridWorldState& s, Role role) {
  if (held_item(s, role) == BlockKind::None) return std::nullopt;
  const Pos pos = agent_pos(s, role);
  for (const Pos off : kScanOffsets) {
    const Pos p{pos.row + off.row, pos.col + off.col};
    if (passable(s, p, role)) return p;
  }
  return std::nullopt;
}

GridStepResult step_grid(const GridWorldState& state, GridAction demo_action,
                         GridAction learner_action) {
  check_action(state.task, Role::Demonstrator, demo_action);
  GridStepResult out{state, false};
  apply_action(out.state, Role::Demonstrator, demo_action);
  if (out.state.learner) {
    check_action(state.task, Role::Learner, learner_action);
    apply_action(out.state, Role::Learner, learner_action);
  }
  ++out.state.step_count;
  out.terminal = goal_reached(out.state) || out.state.step_count >= out.state.t_max;
  return out;
}

bool goal_reached(const GridWorldState& s) {
  switch (s.task) {
    case TaskId::Passing:
    case TaskId::Maze:
      return s.goal_region.contains(s.demonstrator);
    case TaskId::Construction: {
      if (!s.goal) return false;
      const BlockKind a = colored_block(s.goal->color_a);
      const BlockKind b = colored_block(s.goal->color_b);
      for (int i = 0; i < kGridCells; ++i) {
        if (s.occupancy[static_cast<std::size_t>(i)] != a) continue;
        const Pos p = cell_pos(i);
        for (const Pos off : kScanOffsets) {
          const Pos q{p.row + off.row, p.col + off.col};
          if (in_bounds(q) && s.at(q) == b) return true;
        }
      }
      return false;
    }
    case TaskId::Sorting: break;
  }
  return false;
}

ObservationTensor encode_grid_observation(const GridWorldState& s, Viewpoint viewpoint) {
  const auto& kinds = task_block_kinds(s.task);
  const int channels = static_cast<int>(kinds.size()) + 1;
  ObservationTensor obs(kGridSize, kGridSize, channels);
  std::array<int, 16> channel_of{};
  channel_of.fill(-1);
  for (int c = 0; c < static_cast<int>(kinds.size()); ++c) {
    channel_of[static_cast<std::size_t>(kinds[static_cast<std::size_t>(c)])] = c;
  }
  for (int i = 0; i < kGridCells; ++i) {
    const int ch = channel_of[static_cast<std::size_t>(s.occupancy[static_cast<std::size_t>(i)])];
    if (ch >= 0) obs.data[static_cast<std::size_t>(i * channels + ch)] = 1.0;
  }
  Pos self = s.demonstrator;
  std::optional<Pos> other = s.learner;
  if (viewpoint == Viewpoint::Learner) {
    if (!s.learner) throw std::invalid_argument("learner view requested but learner is absent");
    self = *s.learner;
    other = s.demonstrator;
  }
  // The other agent is an obstacle in the wall channel (channel 0 for every grid task).
  if (other) obs.at(other->row, other->col, 0) = 1.0;
  obs.at(self.row, self.col, channels - 1) = 1.0;
  return obs;
}

std::uint64_t grid_digest(const GridWorldState& s) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(s.task));
  for (BlockKind k : s.occupancy) mix(static_cast<std::uint64_t>(k));
  mix(static_cast<std::uint64_t>(cell_index(s.demonstrator)));
  mix(s.learner ? static_cast<std::uint64_t>(cell_index(*s.learner)) : 0xFFFFULL);
  mix(static_cast<std::uint64_t>(s.demonstrator_inventory));
  mix(static_cast<std::uint64_t>(s.learner_inventory));
  if (s.goal) {
    mix(static_cast<std::uint64_t>(s.goal->color_a));
    mix(static_cast<std::uint64_t>(s.goal->color_b));
  }
  return h;
}

namespace {

char block_char(BlockKind k) {
  switch (k) {
    case BlockKind::None: return '.';
    case BlockKind::Wall: return '#';
    case BlockKind::YellowDoor: return 'Y';
    case BlockKind::BlueDoor: return 'B';
    case BlockKind::Key: return 'k';
    case BlockKind::Hammer: return 'h';
    default: return static_cast<char>('0' + color_of(k));
  }
}

BlockKind char_block(char c) {
  switch (c) {
    case '.': case 'D': case 'L': return BlockKind::None;
    case '#': return BlockKind::Wall;
    case 'Y': return BlockKind::YellowDoor;
    case 'B': return BlockKind::BlueDoor;
    case 'k': return BlockKind::Key;
    case 'h': return BlockKind::Hammer;
    default:
      if (c >= '0' && c < '0' + kPaletteSize) return colored_block(c - '0');
  }
  throw std::invalid_argument(std::string("bad grid char: ") + c);
}

}  // namespace

std::string render_grid(const GridWorldState& s) {
  std::string out;
  out.reserve(static_cast<std::size_t>(kGridCells + kGridSize));
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Pos p{r, c};
      char ch = block_char(s.at(p));
      if (s.demonstrator == p) ch = 'D';
      if (s.learner && *s.learner == p) ch = 'L';
      out += ch;
    }
    out += '\n';
  }
  return out;
}

GridWorldState parse_grid(TaskId task, const std::string& ascii) {
  GridWorldState s;
  s.task = task;
  int r = 0;
  int c = 0;
  bool seen_demo = false;
  for (char ch : ascii) {
    if (ch == '\r') continue;
    if (ch == '\n') {
      if (c != 0) {
        if (c != kGridSize) throw std::invalid_argument("grid row has wrong width");
        ++r;
        c = 0;
      }
      continue;
    }
    if (r >= kGridSize || c >= kGridSize) throw std::invalid_argument("grid too large");
    const Pos p{r, c};
    s.at(p) = char_block(ch);
    if (ch == 'D') {
      s.demonstrator = p;
      seen_demo = true;
    }
    if (ch == 'L') s.learner = p;
    ++c;
  }
  if (c == kGridSize) ++r;
  if (r != kGridSize) throw std::invalid_argument("grid has wrong height");
  if (!seen_demo) throw std::invalid_argument("grid has no demonstrator");
  return s;
}

}  // namespace probe
