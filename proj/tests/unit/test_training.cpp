#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "probe/checkpoint.hpp"
#include "probe/demonstrators.hpp"
#include "probe/training.hpp"

using namespace probe;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("probe_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TrainConfig quick_config(TaskId task, RewardMode mode, long long n) {
  TrainConfig c = TrainConfig::defaults(task);
  c.reward_mode = mode;
  c.iterations = n;
  c.seed = 17;
  return c;
}

ModelConfig small(TaskId t) {
  ModelConfig c;
  c.spec = task_spec(t);
  c.latent_dim = 3;
  c.filters = 4;
  c.hidden = 8;
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("probing reward") {
  CHECK(probing_reward({1.0, -2.0}, {1.0, -2.0}) == 0.0);
  CHECK(probing_reward({0.0, 0.0}, {3.0, 4.0}) == 25.0);
  CHECK(probing_reward({1.0, 1.0, 1.0, 1.0}, {0.0, 0.0, 0.0, 0.0}) == 4.0);
  CHECK_THROWS(probing_reward({1.0}, {1.0, 2.0}));
}

TEST_CASE("discounted returns") {
  const auto r = discounted_returns({1.0, 1.0, 1.0}, 0.95);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(2.8525).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(1.95).epsilon(1e-12));
  CHECK(r[2] == 1.0);
  CHECK(discounted_returns({}, 0.9).empty());
}

TEST_CASE("property: returns satisfy the backward recursion") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> rewards(static_cast<std::size_t>(1 + trial % 40));
    for (double& x : rewards) x = nd(rng);
    const auto R = discounted_returns(rewards, 0.95);
    for (std::size_t t = 0; t < R.size(); ++t) {
      const double next = t + 1 < R.size() ? R[t + 1] : 0.0;
      CHECK(R[t] == doctest::Approx(rewards[t] + 0.95 * next).epsilon(1e-12));
    }
  }
}

TEST_CASE("epsilon schedule") {
  CHECK(epsilon_at(0, 100, 0.1, 0.01) == 0.1);
  CHECK(epsilon_at(99, 100, 0.1, 0.01) == doctest::Approx(0.01));
  for (long long i : {0LL, 10LL, 37LL, 99LL}) CHECK(epsilon_at(i, 100, 0.1, 0.01) == doctest::Approx(0.1 - 0.09 * i / 99.0));
  double prev = 1.0;
  for (long long i = 0; i < 100; ++i) {
    const double e = epsilon_at(i, 100, 0.1, 0.01);
    CHECK(e <= prev);
    prev = e;
  }
  CHECK(epsilon_at(0, 1, 0.1, 0.01) == 0.1);
}

TEST_CASE("count bonus") {
  CountBonus c;
  CHECK(c.visit(42) == 1.0);
  c.visit(42);
  c.visit(42);
  CHECK(c.visit(42) == 0.5);
  CHECK(c.visit(7) == 1.0);
  double prev = 10.0;
  for (int i = 0; i < 20; ++i) {
    const double r = c.visit(99);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("reward scaler") {
  RewardScaler s;
  CHECK(s.rms() == 0.0);
  // The first episode is scaled by its own RMS.
  const auto first = s.scale({3.0, 4.0});
  CHECK(s.rms() == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(first[0] == doctest::Approx(3.0 / std::sqrt(12.5)).epsilon(1e-12));
  CHECK(first[1] == doctest::Approx(4.0 / std::sqrt(12.5)).epsilon(1e-12));

  // Oracle: weights 0.99^(n-k) over episodes, normalised.
  const std::vector<std::vector<double>> eps = {{1.0, 1.0}, {2.0}, {0.0, 0.0, 6.0}};
  std::vector<double> ms = {12.5};
  for (const auto& e : eps) {
    double m = 0.0;
    for (double r : e) m += r * r;
    ms.push_back(m / static_cast<double>(e.size()));
    const auto out = s.scale(e);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const double w = std::pow(0.99, static_cast<double>(ms.size() - 1 - k));
      num += w * ms[k];
      den += w;
    }
    const double rms = std::sqrt(num / den);
    CHECK(s.rms() == doctest::Approx(rms).epsilon(1e-12));
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(out[i] == doctest::Approx(e[i] / rms).epsilon(1e-12));
  }

  RewardScaler zero;
  CHECK(zero.scale({0.0, 0.0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("learner rewards sum the ticks between decisions") {
  Trajectory traj;
  traj.learner_ticks = {4, 9};
  std::vector<double> ticks(12);
  for (int t = 0; t < 12; ++t) ticks[static_cast<std::size_t>(t)] = t;
  const auto r = learner_rewards(traj, ticks);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 4 + 5 + 6 + 7 + 8);
  CHECK(r[1] == 9 + 10 + 11);
}

TEST_CASE("rollout bookkeeping") {
  const MindModel m(small(TaskId::Passing), 1);
  std::mt19937_64 rng(2);
  const Trajectory traj = rollout(m, Episode::reset(TaskId::Passing, Mode::Train, 0, nullptr, LearnerPresence::Active), {}, rng);
  const int T = traj.length();
  CHECK(T > 0);
  CHECK(traj.minds.size() == static_cast<std::size_t>(T * 3));
  CHECK(traj.mind_change.size() == static_cast<std::size_t>(T));
  CHECK(traj.learner_ticks.size() == static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    CHECK(traj.mind_change[static_cast<std::size_t>(t)] == probing_reward(traj.mind_before(t), traj.mind_before(t + 1)));
  }
}

TEST_CASE("rollout: sorting learner decides on every fifth tick only") {
  const MindModel m(small(TaskId::Sorting), 3);
  std::mt19937_64 rng(4);
  const Trajectory traj = rollout(m, Episode::reset(TaskId::Sorting, Mode::Test, 1, nullptr, LearnerPresence::Active), {}, rng);
  for (std::size_t k = 0; k < traj.learner_ticks.size(); ++k) CHECK(traj.learner_ticks[k] == static_cast<int>(5 * k + 4));
}

TEST_CASE("rollout: epsilon 1 gives uniform learner actions") {
  const MindModel m(small(TaskId::Maze), 5);
  std::mt19937_64 rng(6);
  RolloutOptions o;
  o.epsilon = 1.0;
  std::vector<int> counts(7, 0);
  int n = 0;
  for (int ep = 0; ep < 120; ++ep) {
    const Trajectory traj = rollout(m, Episode::reset(TaskId::Maze, Mode::Test, static_cast<std::uint64_t>(ep), nullptr,
                                                      LearnerPresence::Active), o, rng);
    for (const auto& a : traj.learner_actions) {
      ++counts[static_cast<std::size_t>(a.part[0])];
      ++n;
    }
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  CHECK(chi2 < 22.46);
}

TEST_CASE("rollout: passive episodes replay the planner alone") {
  const MindModel m(small(TaskId::Maze), 7);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    std::mt19937_64 rng(8);
    RolloutOptions o;
    o.presence = LearnerPresence::Absent;
    const Trajectory traj = rollout(m, Episode::reset(TaskId::Maze, Mode::Test, seed, nullptr, LearnerPresence::Absent), o, rng);
    CHECK(traj.learner_ticks.empty());
    CHECK(traj.learner_actions.empty());
    GridWorldState s = reset_grid(TaskId::Maze, Mode::Test, seed);
    s.learner.reset();
    std::vector<std::uint64_t> digests;
    bool terminal = false;
    while (!terminal) {
      const auto r = step_grid(s, plan_grid_action(s), GridAction::Stop);
      s = r.state;
      terminal = r.terminal;
      digests.push_back(grid_digest(s));
    }
    CHECK(traj.next_digests == digests);
  }
}

TEST_CASE("imitation loss of a uniform policy is ln 5 per step") {
  MindModel m(small(TaskId::Passing), 9);
  for (auto& p : m.params().all()) {
    if (p.name.rfind("demo.head", 0) == 0) std::fill(p.value.begin(), p.value.end(), 0.0);
  }
  std::mt19937_64 rng(1);
  const Trajectory traj = rollout(m, Episode::reset(TaskId::Passing, Mode::Train, 0, nullptr, LearnerPresence::Active), {}, rng);
  CHECK(il_gradients(m, traj).loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("imitation overfits a fixed five-step demonstration") {
  ModelConfig c;
  c.spec = task_spec(TaskId::Passing);
  MindModel m(c, 10);
  GridWorldState s = reset_grid(TaskId::Passing, Mode::Train, 0);
  s.t_max = 5;
  std::mt19937_64 rng(3);
  const Trajectory traj = rollout(m, Episode::grid(s), {}, rng);
  REQUIRE(traj.length() == 5);
  RmsProp opt;
  double loss = 0.0;
  for (int i = 0; i < 200; ++i) loss = il_update(m, opt, traj).loss;
  CHECK(il_gradients(m, traj).loss < 0.05);
  CHECK(loss < 1.0);
}

TEST_CASE("updates keep to their blocks") {
  MindModel m(small(TaskId::Construction), 11);
  std::mt19937_64 rng(12);
  const Trajectory traj = rollout(m, Episode::reset(TaskId::Construction, Mode::Test, 2, nullptr, LearnerPresence::Active), {}, rng);
  RmsProp opt;
  const auto tracker = m.params().snapshot(Block::Tracker);
  const auto demo = m.params().snapshot(Block::Demo);
  std::vector<double> rewards(traj.learner_ticks.size(), 1.0);
  CHECK(rl_update(m, opt, traj, rewards, 0.95, 0.01).applied);
  CHECK(m.params().snapshot(Block::Tracker) == tracker);
  CHECK(m.params().snapshot(Block::Demo) == demo);

  const auto learner = m.params().snapshot(Block::Learner);
  const auto value = m.params().snapshot(Block::Value);
  CHECK(il_update(m, opt, traj).applied);
  CHECK(m.params().snapshot(Block::Learner) == learner);
  CHECK(m.params().snapshot(Block::Value) == value);
  CHECK(m.params().snapshot(Block::Tracker) != tracker);
}

TEST_CASE("rl with zero rewards and zero value is driven by entropy alone") {
  MindModel m(small(TaskId::Passing), 13);
  auto& vw = m.params()[m.params().find("value.w")];
  std::fill(vw.value.begin(), vw.value.end(), 0.0);
  std::mt19937_64 rng(14);
  const Trajectory traj = rollout(m, Episode::reset(TaskId::Passing, Mode::Train, 0, nullptr, LearnerPresence::Active), {}, rng);
  const std::vector<double> zeros(traj.learner_ticks.size(), 0.0);
  rl_gradients(m, traj, zeros, 0.95, 0.0);
  CHECK(m.params().grad_sq_norm(Block::Learner) == 0.0);
  CHECK(m.params().grad_sq_norm(Block::Value) == 0.0);
  const RlResult r = rl_gradients(m, traj, zeros, 0.95, 0.01);
  CHECK(m.params().grad_sq_norm(Block::Learner) > 0.0);
  CHECK(r.entropy >= 0.0);
  CHECK(r.entropy <= std::log(static_cast<double>(learner_action_count(TaskId::Passing))) + 1e-12);
}

TEST_CASE("optimizer") {
  ParameterStore ps;
  const int a = ps.add("a", Block::Learner, 3, 1);
  const int b = ps.add("b", Block::Tracker, 2, 1);
  ps[a].value = {1.0, 2.0, 3.0};
  ps[b].value = {4.0, 5.0};
  RmsProp opt;

  SUBCASE("zero gradient leaves parameters alone") {
    opt.step(ps, {Block::Learner});
    CHECK(ps[a].value == std::vector<double>{1.0, 2.0, 3.0});
  }
  SUBCASE("first step closed form, then shrinking steps") {
    const double c = 0.2;
    ps[a].grad = {c, c, c};
    opt.step(ps, {Block::Learner});
    const double first = 1e-3 * c / (std::sqrt(0.01 * c * c) + 1e-8);
    CHECK(1.0 - ps[a].value[0] == doctest::Approx(first).epsilon(1e-9));
    CHECK(2.0 - ps[a].value[1] == doctest::Approx(first).epsilon(1e-9));
    const double before = ps[a].value[0];
    opt.step(ps, {Block::Learner});
    CHECK(before - ps[a].value[0] < first);
    CHECK(ps[b].value == std::vector<double>{4.0, 5.0});
    CHECK_FALSE(opt.has_state(Block::Tracker, ps));
    CHECK(opt.has_state(Block::Learner, ps));
  }
  SUBCASE("global norm clipping") {
    ps[a].grad = {30.0, 40.0, 0.0};
    ps[b].grad = {0.0, 0.0};
    RmsProp clip({1.0, 0.0, 1e-300, 5.0});  // rho 0: the step is sign(g)
    const auto rep = clip.step(ps, {Block::Learner});
    CHECK(rep.grad_norm == doctest::Approx(50.0));
    CHECK(ps[a].value[0] == doctest::Approx(0.0));
    CHECK(ps[a].value[2] == 3.0);
  }
  SUBCASE("non-finite gradients abort the step") {
    ps[a].grad = {1.0, std::nan(""), 1.0};
    CHECK_FALSE(opt.step(ps, {Block::Learner}).applied);
    CHECK(ps[a].value == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(opt.state().empty());
  }
}

TEST_CASE("checkpoints round-trip bit for bit") {
  MindModel m(small(TaskId::Sorting), 15);
  m.params()[0].value[0] = -0.0;
  m.params()[0].value[1] = 1e-310;
  const Checkpoint ck = model_checkpoint(m);
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(ck));
  CHECK(back.arrays == ck.arrays);
  CHECK(std::signbit(back.arrays.begin()->second[0]) == std::signbit(ck.arrays.begin()->second[0]));
  const MindModel loaded = load_model(back);
  for (int i = 0; i < m.params().size(); ++i) {
    CHECK(std::memcmp(loaded.params()[i].value.data(), m.params()[i].value.data(), m.params()[i].size() * sizeof(double)) == 0);
  }
  std::string bytes = serialize_checkpoint(ck);
  bytes[0] = 'X';
  CHECK_THROWS(deserialize_checkpoint(bytes));
  CHECK_THROWS(deserialize_checkpoint(serialize_checkpoint(ck).substr(0, 40)));
}

TEST_CASE("train: one iteration gives one row and a final checkpoint") {
  const fs::path dir = scratch_dir("n1");
  const auto summary = train(quick_config(TaskId::Passing, RewardMode::MindChange, 1), dir.string());
  CHECK(summary.records.size() == 1);
  CHECK(read_lines(dir / "metrics.jsonl").size() == 1);
  CHECK(fs::exists(dir / "final.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("train: fixed seed runs produce identical logs") {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  train(quick_config(TaskId::Sorting, RewardMode::MindChange, 4), a.string());
  train(quick_config(TaskId::Sorting, RewardMode::MindChange, 4), b.string());
  CHECK(read_lines(a / "metrics.jsonl") == read_lines(b / "metrics.jsonl"));
  CHECK(serialize_checkpoint(read_checkpoint((a / "final.ckpt").string())) ==
        serialize_checkpoint(read_checkpoint((b / "final.ckpt").string())));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("train: a resumed run matches an uninterrupted one") {
  const fs::path full = scratch_dir("full"), part = scratch_dir("part");
  TrainConfig c = quick_config(TaskId::Passing, RewardMode::CountBased, 4);
  c.checkpoint_interval = 2;
  train(c, full.string());
  // Pretend the run died just after its first checkpoint.
  fs::copy(full, part, fs::copy_options::recursive);
  fs::remove(part / "final.ckpt");
  fs::remove(part / "checkpoints" / "iter_00000004.ckpt");
  const auto resumed = train(c, part.string());
  CHECK(resumed.resumed);
  CHECK(resumed.records.size() == 2);
  CHECK(read_lines(full / "metrics.jsonl") == read_lines(part / "metrics.jsonl"));
  CHECK(serialize_checkpoint(read_checkpoint((full / "final.ckpt").string())) ==
        serialize_checkpoint(read_checkpoint((part / "final.ckpt").string())));
  fs::remove_all(full);
  fs::remove_all(part);
}

TEST_CASE("train: passive and random-probe runs never create learner optimizer state") {
  for (RewardMode mode : {RewardMode::Passive, RewardMode::RandomProbe}) {
    Trainer t(quick_config(TaskId::Passing, mode, 2));
    t.iterate();
    t.iterate();
    CHECK_FALSE(t.optimizer().has_state(Block::Learner, t.model().params()));
    CHECK_FALSE(t.optimizer().has_state(Block::Value, t.model().params()));
    CHECK(t.optimizer().has_state(Block::Tracker, t.model().params()));
  }
  Trainer p(quick_config(TaskId::Passing, RewardMode::Passive, 1));
  CHECK_FALSE(p.model().params().has_block(Block::Learner));
}

TEST_CASE("config validation") {
  TrainConfig c = TrainConfig::defaults(TaskId::Maze);
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig::defaults(TaskId::Maze);
  c.epsilon_end = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig::defaults(TaskId::Maze);
  c.latent_dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

}
