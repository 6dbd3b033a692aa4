#include "probe/demonstrators.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace probe {
namespace {

// PlanNode layout (64-bit packed):
//   bits  0..6   demonstrator cell
//   bits  7..9   inventory slot (0 = empty, k+1 = movable item k)
//   bits 10..37  up to 4 movable items, 7 bits each (kOffGrid when carried/absent)
//   bits 38..53  door presence mask (Maze)
constexpr std::uint64_t kOffGrid = 0x7F;
constexpr int kMaxItems = 4;
constexpr int kMaxDoors = 16;

// Static snapshot of everything the demonstrator cannot change, plus the
// identities of the items and doors it can.
class PlanDomain {
 public:
  explicit PlanDomain(const GridWorldState& s) : task_(s.task), goal_(s.goal), region_(s.goal_region) {
    for (int i = 0; i < kGridCells; ++i) {
      const BlockKind k = s.occupancy[static_cast<std::size_t>(i)];
      statics_[static_cast<std::size_t>(i)] = k;
      if (is_item(k)) {
        statics_[static_cast<std::size_t>(i)] = BlockKind::None;
        add_item(k, i);
      } else if (task_ == TaskId::Maze && (k == BlockKind::YellowDoor || k == BlockKind::BlueDoor)) {
        if (doors_ >= kMaxDoors) throw std::runtime_error("too many doors for the planner");
        statics_[static_cast<std::size_t>(i)] = BlockKind::None;
        door_cell_[static_cast<std::size_t>(doors_)] = i;
        door_kind_[static_cast<std::size_t>(doors_)] = k;
        start_doors_ |= 1ULL << doors_;
        ++doors_;
      }
    }
    if (s.learner) learner_cell_ = cell_index(*s.learner);
    start_ |= static_cast<std::uint64_t>(cell_index(s.demonstrator));
    if (s.demonstrator_inventory != BlockKind::None) {
      const int slot = add_item(s.demonstrator_inventory, -1);
      start_ |= static_cast<std::uint64_t>(slot + 1) << 7;
    }
    start_ |= start_doors_ << 38;
  }

  std::uint64_t start() const { return start_; }

  bool goal(std::uint64_t n) const {
    if (task_ == TaskId::Construction) {
      if (!goal_) return false;
      int a = -1;
      int b = -1;
      for (int k = 0; k < items_; ++k) {
        const BlockKind kind = item_kind_[static_cast<std::size_t>(k)];
        if (kind == colored_block(goal_->color_a)) a = item_cell(n, k);
        if (kind == colored_block(goal_->color_b)) b = item_cell(n, k);
      }
      if (a < 0 || b < 0) return false;
      const Pos pa = cell_pos(a);
      const Pos pb = cell_pos(b);
      return std::abs(pa.row - pb.row) + std::abs(pa.col - pb.col) == 1;
    }
    return region_.contains(cell_pos(pos(n)));
  }

  std::optional<std::uint64_t> next(std::uint64_t n, GridAction a) const {
    const Pos here = cell_pos(pos(n));
    switch (a) {
      case GridAction::MoveN:
      case GridAction::MoveS:
      case GridAction::MoveE:
      case GridAction::MoveW: {
        const Pos off = move_offset(a);
        const Pos p{here.row + off.row, here.col + off.col};
        if (!free(n, p)) return std::nullopt;
        return (n & ~0x7FULL) | static_cast<std::uint64_t>(cell_index(p));
      }
      case GridAction::PickUp: {
        if (task_ == TaskId::Passing) return std::nullopt;
        const int slot = held(n);
        const BlockKind held_kind = slot < 0 ? BlockKind::None : item_kind_[static_cast<std::size_t>(slot)];
        for (const Pos off : kScanOffsets) {
          const Pos p{here.row + off.row, here.col + off.col};
          if (!in_bounds(p)) continue;
          const int cell = cell_index(p);
          int item = -1;
          int door = -1;
          const BlockKind k = content(n, cell, &item, &door);
          const PickEffect effect = pick_effect(task_, Role::Demonstrator, held_kind, k);
          if (effect == PickEffect::None) continue;
          if (effect == PickEffect::Open) return n & ~(1ULL << (38 + door));
          if (!item_movable_[static_cast<std::size_t>(item)]) return std::nullopt;
          std::uint64_t out = set_item_cell(n, item, kOffGrid);
          out = (out & ~(0x7ULL << 7)) | (static_cast<std::uint64_t>(item + 1) << 7);
          return out;
        }
        return std::nullopt;
      }
      case GridAction::PutDown: {
        const int slot = held(n);
        if (slot < 0) return std::nullopt;
        for (const Pos off : kScanOffsets) {
          const Pos p{here.row + off.row, here.col + off.col};
          if (!free(n, p)) continue;
          std::uint64_t out = set_item_cell(n, slot, static_cast<std::uint64_t>(cell_index(p)));
          return out & ~(0x7ULL << 7);
        }
        return std::nullopt;
      }
      case GridAction::Stop: break;
    }
    return std::nullopt;
  }

 private:
  static bool is_item(BlockKind k) {
    return k == BlockKind::Key || k == BlockKind::Hammer || is_colored(k);
  }

  int add_item(BlockKind k, int cell) {
    if (items_ >= kMaxItems) throw std::runtime_error("too many movable items for the planner");
    const int slot = items_++;
    item_kind_[static_cast<std::size_t>(slot)] = k;
    bool movable = true;
    if (task_ == TaskId::Construction) {
      movable = goal_ && (k == colored_block(goal_->color_a) || k == colored_block(goal_->color_b));
    }
    item_movable_[static_cast<std::size_t>(slot)] = movable;
    const std::uint64_t c = cell < 0 ? kOffGrid : static_cast<std::uint64_t>(cell);
    start_ |= c << (10 + 7 * slot);
    return slot;
  }

  static int pos(std::uint64_t n) { return static_cast<int>(n & 0x7F); }
  static int held(std::uint64_t n) { return static_cast<int>((n >> 7) & 0x7) - 1; }
  static int item_cell(std::uint64_t n, int k) {
    const auto c = (n >> (10 + 7 * k)) & 0x7F;
    return c == kOffGrid ? -1 : static_cast<int>(c);
  }
  static std::uint64_t set_item_cell(std::uint64_t n, int k, std::uint64_t cell) {
    const int shift = 10 + 7 * k;
    return (n & ~(0x7FULL << shift)) | (cell << shift);
  }

  BlockKind content(std::uint64_t n, int cell, int* item, int* door) const {
    const BlockKind s = statics_[static_cast<std::size_t>(cell)];
    if (s != BlockKind::None) return s;
    for (int k = 0; k < items_; ++k) {
      if (item_cell(n, k) == cell) {
        *item = k;
        return item_kind_[static_cast<std::size_t>(k)];
      }
    }
    for (int d = 0; d < doors_; ++d) {
      if (door_cell_[static_cast<std::size_t>(d)] == cell && (n >> (38 + d)) & 1ULL) {
        *door = d;
        return door_kind_[static_cast<std::size_t>(d)];
      }
    }
    return BlockKind::None;
  }

  bool free(std::uint64_t n, Pos p) const {
    if (!in_bounds(p)) return false;
    const int cell = cell_index(p);
    if (cell == learner_cell_) return false;
    int item = -1;
    int door = -1;
    return content(n, cell, &item, &door) == BlockKind::None;
  }

  TaskId task_;
  std::optional<ConstructionGoal> goal_;
  Rect region_;
  std::array<BlockKind, kGridCells> statics_{};
  int learner_cell_ = -1;
  int items_ = 0;
  std::array<BlockKind, kMaxItems> item_kind_{};
  std::array<bool, kMaxItems> item_movable_{};
  int doors_ = 0;
  std::array<int, kMaxDoors> door_cell_{};
  std::array<BlockKind, kMaxDoors> door_kind_{};
  std::uint64_t start_doors_ = 0;
  std::uint64_t start_ = 0;
};

}  // namespace

PlanResult plan_grid(const GridWorldState& state) {
  const PlanDomain domain(state);
  PlanResult result;
  const std::uint64_t start = domain.start();
  if (domain.goal(start)) {
    result.length = 0;
    return result;
  }
  struct Entry {
    std::uint64_t node;
    GridAction first;
    int depth;
  };
  // Nodes are enqueued in lexicographic order of their plans, so the first
  // goal discovered is the lexicographically smallest shortest plan.
  std::vector<Entry> queue;
  queue.reserve(1024);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(4096);
  seen.insert(start);
  queue.push_back({start, GridAction::Stop, 0});
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Entry e = queue[head];
    ++result.expanded;
    for (const GridAction a : kPlannerActionOrder) {
      const auto next = domain.next(e.node, a);
      if (!next || !seen.insert(*next).second) continue;
      const GridAction first = e.depth == 0 ? a : e.first;
      if (domain.goal(*next)) {
        result.first_action = first;
        result.length = e.depth + 1;
        return result;
      }
      queue.push_back({*next, first, e.depth + 1});
    }
  }
  return result;
}

std::pair<SortDemoAction, BubbleSortCursor> bubble_sort_action(const SortState& state) {
  if (is_ascending(state.values)) return {SortDemoAction::noop(), state.cursor};
  constexpr int n = kSortLength;
  int i = state.cursor.i;
  for (int c = 0; c < n - 1; ++c) {
    if (state.values[static_cast<std::size_t>(i)] > state.values[static_cast<std::size_t>(i + 1)]) {
      return {SortDemoAction::swap(i, i + 1), BubbleSortCursor{i}};
    }
    i = (i + 1) % (n - 1);
  }
  // Unreachable: an unsorted array has an adjacent inversion.
  throw std::logic_error("bubble sort found no inversion in an unsorted array");
}

GridAction with_action_noise(GridAction action, TaskId task, double noise_rate,
                             std::mt19937_64& rng) {
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= noise_rate) return action;
  const int n = demo_action_count(task);
  return static_cast<GridAction>(std::uniform_int_distribution<int>(0, n - 1)(rng));
}

SortDemoAction with_action_noise(SortDemoAction action, double noise_rate, std::mt19937_64& rng) {
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= noise_rate) return action;
  std::uniform_int_distribution<int> index(0, kSortLength);
  const int first = index(rng);
  const int second = index(rng);
  return {first, second};
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string demonstrator_trace(const GridWorldState& start) {
  GridWorldState s = start;
  s.learner.reset();
  std::string out;
  bool terminal = goal_reached(s);
  while (!terminal) {
    const GridAction a = plan_grid_action(s);
    out += std::to_string(s.step_count) + " " + hex64(grid_digest(s)) + " " + action_name(a) + "\n";
    const auto r = step_grid(s, a, GridAction::Stop);
    s = r.state;
    terminal = r.terminal;
  }
  return out;
}

std::string demonstrator_trace(const SortState& start) {
  SortState s = start;
  std::string out;
  bool terminal = is_ascending(s.values);
  while (!terminal) {
    const auto [a, cursor] = bubble_sort_action(s);
    out += std::to_string(s.step_count) + " " + hex64(sort_digest(s)) + " swap(" +
           std::to_string(a.first) + "," + std::to_string(a.second) + ")\n";
    s.cursor = cursor;
    std::optional<SortLearnerAction> learner;
    if (s.learner_due()) learner = SortLearnerAction::noop();
    const auto r = step_sort(s, a, learner);
    s = r.state;
    terminal = r.terminal;
  }
  return out;
}

}  // namespace probe
