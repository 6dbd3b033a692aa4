#include "probe/episode.hpp"

#include <stdexcept>

#include "probe/demonstrators.hpp"

namespace probe {

int TaskSpec::demo_action_channels() const {
  int n = 0;
  for (int h : demo_heads) n += h;
  return n;
}

TaskSpec task_spec(TaskId task) {
  if (task == TaskId::Sorting) {
    TaskSpec s;
    s.task = task;
    s.height = kSortLength;
    s.width = 1;
    s.channels = kSortBits;
    // Index kSortLength in either factor decodes to NoOp.
    s.demo_heads = {kSortLength + 1, kSortLength + 1};
    s.learner_heads = {kSortLength + 1, kSortBits};
    s.t_max = kSortTimeLimit;
    return s;
  }
  return task_spec(task, default_grid_config(task));
}

TaskSpec task_spec(TaskId task, const GridTaskConfig& config) {
  if (task == TaskId::Sorting) return task_spec(task);
  TaskSpec s;
  s.task = task;
  s.height = kGridSize;
  s.width = kGridSize;
  s.channels = static_cast<int>(task_block_kinds(task).size()) + 1;
  s.demo_heads = {demo_action_count(task)};
  s.learner_heads = {learner_action_count(task)};
  s.t_max = config.t_max;
  return s;
}

Episode Episode::grid(GridWorldState state) {
  Episode e;
  e.presence_ = state.learner ? LearnerPresence::Active : LearnerPresence::Absent;
  e.state_ = std::move(state);
  e.terminal_ = e.goal_reached() || e.step_count() >= e.t_max();
  return e;
}

Episode Episode::sorting(SortState state, LearnerPresence presence) {
  Episode e;
  e.state_ = state;
  e.presence_ = presence;
  e.terminal_ = e.goal_reached() || e.step_count() >= e.t_max();
  return e;
}

Episode Episode::reset(TaskId task, Mode mode, std::uint64_t seed, const GridTaskConfig* config,
                       LearnerPresence presence) {
  if (task == TaskId::Sorting) {
    return sorting(reset_sort(mode, seed), presence);
  }
  GridWorldState s = config ? reset_grid(task, mode, seed, *config) : reset_grid(task, mode, seed);
  if (presence == LearnerPresence::Absent) s.learner.reset();
  return grid(std::move(s));
}

TaskId Episode::task() const {
  return is_grid() ? grid_state().task : TaskId::Sorting;
}

int Episode::step_count() const {
  return is_grid() ? grid_state().step_count : sort_state().step_count;
}

int Episode::t_max() const { return is_grid() ? grid_state().t_max : sort_state().step_limit; }

bool Episode::goal_reached() const {
  return is_grid() ? probe::goal_reached(grid_state()) : is_ascending(sort_state().values);
}

bool Episode::learner_acts() const {
  if (!learner_present()) return false;
  return is_grid() || sort_state().learner_due();
}

ObservationTensor Episode::demo_observation() const {
  return is_grid() ? encode_grid_observation(grid_state(), Viewpoint::Demonstrator)
                   : encode_sort_observation(sort_state());
}

ObservationTensor Episode::learner_observation() const {
  return is_grid() ? encode_grid_observation(grid_state(), Viewpoint::Learner)
                   : encode_sort_observation(sort_state());
}

FactoredAction Episode::expert_action() const {
  if (is_grid()) return {{static_cast<int>(plan_grid_action(grid_state())), 0}};
  return from_sort_demo(bubble_sort_action(sort_state()).first);
}

void Episode::step(FactoredAction demo, FactoredAction learner) {
  if (terminal_) throw std::logic_error("step on a finished episode");
  if (is_grid()) {
    const auto r = step_grid(grid_state(), static_cast<GridAction>(demo.part[0]),
                             static_cast<GridAction>(learner.part[0]));
    grid_state() = r.state;
    terminal_ = r.terminal;
    return;
  }
  SortState& s = sort_state();
  s.cursor = bubble_sort_action(s).second;
  std::optional<SortLearnerAction> l;
  if (s.learner_due()) l = learner_acts() ? to_sort_learner(learner) : SortLearnerAction::noop();
  const auto r = step_sort(s, to_sort_demo(demo), l);
  s = r.state;
  terminal_ = r.terminal;
}

std::uint64_t Episode::digest() const {
  return is_grid() ? grid_digest(grid_state()) : sort_digest(sort_state());
}

std::string Episode::render() const {
  return is_grid() ? render_grid(grid_state()) : render_sort(sort_state()) + "\n";
}

std::string Episode::describe_demo_action(FactoredAction a) const {
  if (is_grid()) return action_name(static_cast<GridAction>(a.part[0]));
  const SortDemoAction d = to_sort_demo(a);
  if (d.is_noop()) return "noop";
  return "swap(" + std::to_string(d.first) + "," + std::to_string(d.second) + ")";
}

std::string Episode::describe_learner_action(FactoredAction a) const {
  if (is_grid()) return action_name(static_cast<GridAction>(a.part[0]));
  const SortLearnerAction l = to_sort_learner(a);
  if (l.is_noop()) return "noop";
  return "flip(" + std::to_string(l.index) + "," + std::to_string(l.bit) + ")";
}

// Pairs with an index of kSortLength keep their raw encoding so that noisy
// NoOps remain distinguishable from the demonstrator's own (n, n).
FactoredAction from_sort_demo(SortDemoAction a) {
  auto clamp = [](int i) { return i < 0 || i > kSortLength ? kSortLength : i; };
  return {{clamp(a.first), clamp(a.second)}};
}

SortDemoAction to_sort_demo(FactoredAction a) {
  SortDemoAction d{a.part[0], a.part[1]};
  return d.is_noop() ? SortDemoAction::noop() : d;
}

SortLearnerAction to_sort_learner(FactoredAction a) {
  SortLearnerAction l{a.part[0], a.part[1]};
  return l.is_noop() ? SortLearnerAction::noop() : l;
}

FactoredAction noop_sort_learner() { return {{kSortLength, 0}}; }

FactoredAction noisy_demo_action(TaskId task, FactoredAction a, double noise_rate,
                                 std::mt19937_64& rng) {
  if (task == TaskId::Sorting) return from_sort_demo(with_action_noise(to_sort_demo(a), noise_rate, rng));
  return {{static_cast<int>(with_action_noise(static_cast<GridAction>(a.part[0]), task, noise_rate, rng)), 0}};
}

}  // namespace probe
