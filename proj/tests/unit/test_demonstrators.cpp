#include <doctest.h>

#include <algorithm>
#include <climits>
#include <map>
#include <random>
#include <sstream>

#include "../support/grid_oracle.hpp"
#include "probe/demonstrators.hpp"
#include "probe/layouts.hpp"

using namespace probe;

namespace {

int tie_rank(GridAction a) {
  const auto it = std::find(kPlannerActionOrder.begin(), kPlannerActionOrder.end(), a);
  return static_cast<int>(it - kPlannerActionOrder.begin());
}

// Runs the planner in a static world; returns the number of moves to the goal.
std::optional<int> planned_moves(GridWorldState s) {
  s.t_max = INT_MAX;
  for (int n = 0; n < 500; ++n) {
    if (goal_reached(s)) return n;
    const GridAction a = plan_grid_action(s);
    if (a == GridAction::Stop) return std::nullopt;
    s = step_grid(s, a, GridAction::Stop).state;
  }
  return std::nullopt;
}

// First action of the tie-order-smallest shortest plan, by brute force.
GridAction oracle_first_action(const GridWorldState& s) {
  const auto d = testing::oracle_distance(s);
  if (!d || *d == 0) return GridAction::Stop;
  std::optional<GridAction> best;
  for (int i = 0; i < demo_action_count(s.task); ++i) {
    const auto a = static_cast<GridAction>(i);
    if (!testing::demo_may(s, a)) continue;
    GridWorldState next = step_grid(s, a, GridAction::Stop).state;
    if (grid_digest(next) == grid_digest(s)) continue;
    const auto dn = testing::oracle_distance(next);
    if (dn && *dn == *d - 1 && (!best || tie_rank(a) < tie_rank(*best))) best = a;
  }
  return best.value_or(GridAction::Stop);
}

}  // namespace

TEST_SUITE("demonstrators") {

TEST_CASE("passing: straight up through the gap") {
  GridWorldState s = reset_grid(TaskId::Passing, Mode::Train, 0);
  s.demonstrator = {6, 1};
  CHECK(plan_grid_action(s) == GridAction::MoveN);
}

TEST_CASE("passing: a sealed wall makes the demonstrator wait") {
  GridWorldState s = reset_grid(TaskId::Passing, Mode::Train, 0);
  s.at({5, 1}) = BlockKind::Wall;
  CHECK(plan_grid_action(s) == GridAction::Stop);
  CHECK_FALSE(plan_length(s).has_value());
}

TEST_CASE("passing: a learner standing in the gap also blocks the plan") {
  GridWorldState s = reset_grid(TaskId::Passing, Mode::Train, 0);
  s.learner = Pos{5, 1};
  CHECK(plan_grid_action(s) == GridAction::Stop);
}

TEST_CASE("maze training layout: the first move matches the brute-force search") {
  const auto s = reset_grid(TaskId::Maze, Mode::Train, 0);
  CHECK(plan_grid_action(s) == oracle_first_action(s));
  CHECK(plan_length(s) == testing::oracle_distance(s));
}

TEST_CASE("first actions follow the tie-break order on random layouts") {
  for (TaskId t : {TaskId::Passing, TaskId::Construction}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const auto s = reset_grid(t, Mode::Test, seed);
      CHECK(plan_grid_action(s) == oracle_first_action(s));
    }
  }
}

TEST_CASE("property: planner rollouts take exactly the oracle distance") {
  for (TaskId t : {TaskId::Passing, TaskId::Maze, TaskId::Construction}) {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      for (Mode m : {Mode::Train, Mode::Test}) {
        const auto s = reset_grid(t, m, seed);
        const auto d = testing::oracle_distance(s);
        CAPTURE(task_name(t));
        CAPTURE(seed);
        REQUIRE(d.has_value());
        CHECK(planned_moves(s) == d);
        CHECK(plan_length(s) == d);
      }
    }
  }
}

TEST_CASE("property: opening a shorter route is picked up on the next plan") {
  GridWorldState s = reset_grid(TaskId::Passing, Mode::Train, 0);
  const int before = *plan_length(s);
  s.at({5, 8}) = BlockKind::None;
  const auto d = testing::oracle_distance(s);
  REQUIRE(d.has_value());
  CHECK(*d < before);
  CHECK(plan_length(s) == d);
  CHECK(planned_moves(s) == d);
}

TEST_CASE("bubble sort on the training array") {
  SortState s = reset_sort(Mode::Train, 0);
  auto [a, cur] = bubble_sort_action(s);
  CHECK(a == SortDemoAction::swap(0, 1));
  s = step_sort(s, a, std::nullopt).state;
  s.cursor = cur;
  auto [b, cur2] = bubble_sort_action(s);
  CHECK(b == SortDemoAction::swap(4, 5));
  CHECK(cur2.i == 4);

  SortState sorted = s;
  sorted.values = {0, 0, 1, 2, 3, 3, 9, 10, 11, 15};
  CHECK(bubble_sort_action(sorted).first.is_noop());
}

TEST_CASE("property: bubble sort survives arbitrary bit flips and only swaps inversions") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> idx(0, kSortLength), bit(0, kSortBits - 1);
  for (int trial = 0; trial < 200; ++trial) {
    SortState s = reset_sort(Mode::Test, static_cast<std::uint64_t>(trial));
    s.step_limit = INT_MAX;
    const int flip_ticks = static_cast<int>(rng() % 60);
    int t = 0;
    while (true) {
      auto [a, cur] = bubble_sort_action(s);
      if (!a.is_noop()) {
        CHECK(a.second == a.first + 1);
        CHECK(s.values[static_cast<std::size_t>(a.first)] > s.values[static_cast<std::size_t>(a.second)]);
      }
      std::optional<SortLearnerAction> l;
      if (s.learner_due()) l = t < flip_ticks ? SortLearnerAction::flip(idx(rng), bit(rng)) : SortLearnerAction::noop();
      const auto r = step_sort(s, a, l);
      s = r.state;
      s.cursor = cur;
      ++t;
      if (t > flip_ticks && r.terminal) break;
      if (t > flip_ticks + 200) break;
    }
    CHECK(is_ascending(s.values));
    CHECK(s.cursor.i >= 0);
    CHECK(s.cursor.i < kSortLength - 1);
  }
}

TEST_CASE("noise: rate 0 is the identity") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(with_action_noise(GridAction::MoveE, TaskId::Maze, 0.0, rng) == GridAction::MoveE);
    CHECK(with_action_noise(SortDemoAction::swap(3, 4), 0.0, rng) == SortDemoAction::swap(3, 4));
  }
}

TEST_CASE("noise: rate 1 is uniform over the action set") {
  std::mt19937_64 rng(2);
  const int n = demo_action_count(TaskId::Maze);
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  const int samples = 10000;
  for (int i = 0; i < samples; ++i) {
    const int a = static_cast<int>(with_action_noise(GridAction::MoveN, TaskId::Maze, 1.0, rng));
    REQUIRE(a < n);
    ++counts[static_cast<std::size_t>(a)];
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(samples) / n;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 22.46);  // chi-square, 6 dof, p = 0.001
}

TEST_CASE("noise: rate 0.1 replaces about one action in ten") {
  std::mt19937_64 rng(3);
  const int n = demo_action_count(TaskId::Passing);
  int changed = 0;
  const int samples = 10000;
  for (int i = 0; i < samples; ++i) changed += with_action_noise(GridAction::MoveN, TaskId::Passing, 0.1, rng) != GridAction::MoveN;
  // A replacement draws the original action again with probability 1/n.
  const double replaced = static_cast<double>(changed) / samples * n / (n - 1);
  CHECK(replaced == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("traces: one line per step with a 16-digit digest") {
  const auto s = reset_grid(TaskId::Passing, Mode::Train, 0);
  std::istringstream in(demonstrator_trace(s));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    int step = -1;
    std::string digest, action;
    fields >> step >> digest >> action;
    CHECK(step == n);
    CHECK(digest.size() == 16);
    CHECK_FALSE(action.empty());
    ++n;
  }
  CHECK(n == *plan_length(s));
  CHECK(demonstrator_trace(s) == demonstrator_trace(s));
  const std::string sort_trace = demonstrator_trace(reset_sort(Mode::Train, 0));
  CHECK(sort_trace.rfind("0 ", 0) == 0);
}

}
