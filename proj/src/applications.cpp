#include "probe/applications.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "probe/demonstrators.hpp"

namespace probe {

const char* transfer_mode_name(TransferMode m) {
  return m == TransferMode::Collaborate ? "collaborate" : "compete";
}

double task_reward(TransferMode mode, bool goal_reached) {
  if (mode == TransferMode::Collaborate) {
    return -kCollaborateStepPenalty + (goal_reached ? kCollaborateGoalReward : 0.0);
  }
  return kCompeteStepReward - (goal_reached ? kCompeteOpponentPenalty : 0.0);
}

std::vector<double> task_tick_rewards(TransferMode mode, const Trajectory& traj) {
  std::vector<double> r;
  r.reserve(static_cast<std::size_t>(traj.length()));
  for (int t = 0; t < traj.length(); ++t) {
    const bool last = t + 1 == traj.length();
    r.push_back(task_reward(mode, last && traj.goal_reached));
  }
  return r;
}

double episode_task_return(TransferMode mode, int steps, bool goal_reached) {
  double g = 0.0;
  for (int t = 0; t < steps; ++t) g += task_reward(mode, goal_reached && t + 1 == steps);
  return g;
}

namespace {

GridWorldState without_learner(GridWorldState s) {
  s.learner.reset();
  s.learner_inventory = BlockKind::None;
  return s;
}

constexpr int kFar = 1 << 20;

// Shortest walks over cells free of walls and non-goal blocks.
class StaticDistances {
 public:
  StaticDistances(const GridWorldState& s, BlockKind a, BlockKind b) {
    for (int i = 0; i < kGridCells; ++i) {
      const BlockKind k = s.occupancy[static_cast<std::size_t>(i)];
      open_[static_cast<std::size_t>(i)] = k == BlockKind::None || k == a || k == b;
    }
    for (int src = 0; src < kGridCells; ++src) bfs(src);
  }

  bool open(int cell) const { return open_[static_cast<std::size_t>(cell)]; }
  int operator()(int from, int to) const { return dist_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)]; }

 private:
  void bfs(int src) {
    auto& d = dist_[static_cast<std::size_t>(src)];
    d.fill(kFar);
    if (!open(src)) return;
    std::vector<int> queue{src};
    d[static_cast<std::size_t>(src)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Pos p = cell_pos(queue[head]);
      for (const Pos off : kScanOffsets) {
        const Pos q{p.row + off.row, p.col + off.col};
        if (!in_bounds(q)) continue;
        const int c = cell_index(q);
        if (!open(c) || d[static_cast<std::size_t>(c)] != kFar) continue;
        d[static_cast<std::size_t>(c)] = d[static_cast<std::size_t>(queue[head])] + 1;
        queue.push_back(c);
      }
    }
  }

  std::array<bool, kGridCells> open_{};
  std::array<std::array<int, kGridCells>, kGridCells> dist_{};
};

std::vector<int> open_neighbours(const StaticDistances& d, int cell) {
  std::vector<int> out;
  const Pos p = cell_pos(cell);
  for (const Pos off : kScanOffsets) {
    const Pos q{p.row + off.row, p.col + off.col};
    if (in_bounds(q) && d.open(cell_index(q))) out.push_back(cell_index(q));
  }
  return out;
}

// Ticks for an agent at `agent` to move the block at `from` onto `to`: walk
// next to it, pick up, walk next to `to`, put down.
std::vector<int> carry_costs(const StaticDistances& d, int agent, int from) {
  std::vector<int> cost(kGridCells, kFar);
  cost[static_cast<std::size_t>(from)] = 0;
  for (int n1 : open_neighbours(d, from)) {
    const int reach = d(agent, n1);
    if (reach >= kFar) continue;
    for (int to = 0; to < kGridCells; ++to) {
      if (to == from || !d.open(to)) continue;
      for (int n2 : open_neighbours(d, to)) {
        const int walk = d(n1, n2);
        if (walk >= kFar) continue;
        cost[static_cast<std::size_t>(to)] = std::min(cost[static_cast<std::size_t>(to)], reach + 1 + walk + 1);
      }
    }
  }
  return cost;
}

}  // namespace

std::optional<int> optimal_completion_steps(const GridWorldState& state) {
  if (state.task != TaskId::Construction) throw std::invalid_argument("transfer tasks are built on Construction");
  if (!state.goal) return std::nullopt;
  if (goal_reached(state)) return 0;
  const BlockKind ka = colored_block(state.goal->color_a);
  const BlockKind kb = colored_block(state.goal->color_b);
  int xa = -1, xb = -1;
  for (int i = 0; i < kGridCells; ++i) {
    if (state.occupancy[static_cast<std::size_t>(i)] == ka) xa = i;
    if (state.occupancy[static_cast<std::size_t>(i)] == kb) xb = i;
  }
  // Blocks already in an inventory are outside this bound's scope.
  if (xa < 0 || xb < 0) return plan_length(without_learner(state));

  const StaticDistances d(state, ka, kb);
  std::vector<int> agents{cell_index(state.demonstrator)};
  if (state.learner) agents.push_back(cell_index(*state.learner));
  // cost[block][agent][cell]; an idle block costs nothing to leave in place.
  std::vector<std::vector<std::vector<int>>> cost(2);
  for (int agent : agents) {
    cost[0].push_back(carry_costs(d, agent, xa));
    cost[1].push_back(carry_costs(d, agent, xb));
  }
  int best = kFar;
  const int n_agents = static_cast<int>(agents.size());
  for (int ca = 0; ca < kGridCells; ++ca) {
    if (!d.open(ca)) continue;
    for (int cb : open_neighbours(d, ca)) {
      for (int i = 0; i < n_agents; ++i) {
        const int ta = cost[0][static_cast<std::size_t>(i)][static_cast<std::size_t>(ca)];
        // Either one agent moves a single block, or the two agents move one each.
        if (cb == xb) best = std::min(best, ta);
        if (ca == xa) best = std::min(best, cost[1][static_cast<std::size_t>(i)][static_cast<std::size_t>(cb)]);
        for (int j = 0; j < n_agents; ++j) {
          if (j == i) continue;
          best = std::min(best, std::max(ta, cost[1][static_cast<std::size_t>(j)][static_cast<std::size_t>(cb)]));
        }
      }
    }
  }
  if (best >= kFar) return std::nullopt;
  return best;
}

double theoretical_max_return(TransferMode mode, const GridWorldState& state) {
  if (mode == TransferMode::Compete) return kCompeteStepReward * state.t_max;
  const auto steps = optimal_completion_steps(state);
  if (!steps) throw std::runtime_error("construction layout has no solution");
  return episode_task_return(mode, std::max(*steps, 1), true);
}

double demonstrator_only_return(TransferMode mode, const GridWorldState& state) {
  const auto len = plan_length(without_learner(state));
  if (len && *len <= state.t_max) return episode_task_return(mode, std::max(*len, 1), true);
  return episode_task_return(mode, state.t_max, false);
}

namespace {

struct LayoutScale {
  double max_return = 1.0;
  double demo_only = 0.0;
};

class ScaleCache {
 public:
  explicit ScaleCache(TransferMode mode) : mode_(mode) {}

  const LayoutScale& get(const GridWorldState& s) {
    const std::uint64_t key = grid_digest(s);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    LayoutScale v;
    v.max_return = theoretical_max_return(mode_, s);
    // A layout whose optimum cannot beat the step penalty has no positive scale.
    if (v.max_return <= 0.0) throw std::runtime_error("non-positive theoretical maximum return");
    v.demo_only = demonstrator_only_return(mode_, s);
    return cache_.emplace(key, v).first->second;
  }

 private:
  TransferMode mode_;
  std::unordered_map<std::uint64_t, LayoutScale> cache_;
};

RetrainResult run_transfer(MindModel model, const RetrainConfig& config) {
  if (config.grid.task != TaskId::Construction) throw std::invalid_argument("transfer tasks are built on Construction");
  if (!(config.gamma > 0.0 && config.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (config.iterations <= 0) throw std::invalid_argument("iterations must be positive");

  RmsProp opt(config.optimizer);
  std::mt19937_64 rng(derive_seed(config.seed, 2));
  ScaleCache scales(config.mode);
  RetrainResult out{std::move(model), {}};
  out.curve.reserve(static_cast<std::size_t>(config.iterations));

  for (long long i = 0; i < config.iterations; ++i) {
    const std::uint64_t episode_seed = rng();
    Episode ep = Episode::reset(TaskId::Construction, Mode::Train, episode_seed, &config.grid, LearnerPresence::Active);
    const LayoutScale scale = scales.get(ep.grid_state());

    RolloutOptions opts;
    opts.epsilon = epsilon_at(i, config.iterations, config.epsilon_start, config.epsilon_end);
    const Trajectory traj = rollout(out.model, std::move(ep), opts, rng);
    const std::vector<double> ticks = task_tick_rewards(config.mode, traj);
    rl_update(out.model, opt, traj, learner_rewards(traj, ticks), config.gamma, config.entropy_weight);

    CurvePoint p;
    p.iteration = i + 1;
    for (double r : ticks) p.episode_return += r;
    p.rescaled = p.episode_return / scale.max_return;
    p.demo_only_rescaled = scale.demo_only / scale.max_return;
    p.episode_length = traj.length();
    p.demo_success = traj.goal_reached;
    out.curve.push_back(p);
  }
  return out;
}

}  // namespace

RetrainResult retrain_with_fixed_tracker(const Checkpoint& pretrained, const RetrainConfig& config) {
  const MindModel source = load_model(pretrained);
  ModelConfig mc = source.config();
  if (mc.spec.task != TaskId::Construction) throw std::invalid_argument("pretrained model is not a Construction model");
  mc.with_learner = true;
  mc.no_mind = false;
  MindModel model(mc, derive_seed(config.seed, 1));
  restore_blocks(model, pretrained, {Block::Tracker, Block::Demo});
  return run_transfer(std::move(model), config);
}

RetrainResult train_no_mind_baseline(const RetrainConfig& config) {
  ModelConfig mc;
  mc.spec = task_spec(TaskId::Construction, config.grid);
  mc.no_mind = true;
  return run_transfer(MindModel(mc, derive_seed(config.seed, 1)), config);
}

double final_mean_rescaled(const std::vector<CurvePoint>& curve, double fraction) {
  if (curve.empty()) return 0.0;
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(curve.size()) * fraction));
  double sum = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) sum += curve[i].rescaled;
  return sum / static_cast<double>(n);
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "iteration,return,rescaled,demo_only_rescaled,episode_length,demo_success\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.6f,%d,%d\n", p.iteration, p.episode_return, p.rescaled,
                  p.demo_only_rescaled, p.episode_length, p.demo_success ? 1 : 0);
    out << buf;
  }
  return out.str();
}

}  // namespace probe
