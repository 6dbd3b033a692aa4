#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/gradient_oracle.hpp"
#include "probe/episode.hpp"
#include "probe/mind_model.hpp"
#include "probe/training.hpp"

using namespace probe;
using namespace probe::testing;

namespace {

ModelConfig small_config(TaskId task, bool no_mind = false) {
  ModelConfig c;
  c.spec = task_spec(task);
  c.latent_dim = 3;
  c.filters = 3;
  c.hidden = 5;
  c.no_mind = no_mind;
  return c;
}

Episode short_episode(TaskId task, int steps, std::uint64_t seed) {
  if (task == TaskId::Sorting) {
    SortState s = reset_sort(Mode::Test, seed);
    s.step_limit = steps;
    return Episode::sorting(s);
  }
  GridWorldState s = reset_grid(task, Mode::Test, seed);
  s.t_max = steps;
  return Episode::grid(s);
}

Trajectory random_trajectory(const MindModel& model, TaskId task, int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RolloutOptions o;
  o.control = LearnerControl::Uniform;
  o.demo_noise = 0.5;
  return rollout(model, short_episode(task, steps, seed), o, rng);
}

template <class Loss>
void check_gradients(MindModel& model, const std::vector<Block>& blocks, Loss loss) {
  for (const auto& e : testing::gradient_errors(model, blocks, loss)) {
    CAPTURE(e.name);
    CHECK(e.relative < 1e-4);
  }
}

}  // namespace

TEST_SUITE("mind_model") {

TEST_CASE("blocks are disjoint and complete") {
  const MindModel m(small_config(TaskId::Maze), 1);
  for (Block b : {Block::Tracker, Block::Demo, Block::Learner, Block::Value}) CHECK(m.params().count(b) > 0);
  for (const auto& p : m.params().all()) {
    const std::string prefix = p.name.substr(0, p.name.find('.'));
    const Block expected = prefix == "tracker" ? Block::Tracker
                           : prefix == "demo"  ? Block::Demo
                           : prefix == "learner" ? Block::Learner
                                                 : Block::Value;
    CHECK(p.block == expected);
  }
  ModelConfig passive = small_config(TaskId::Maze);
  passive.with_learner = false;
  const MindModel pm(passive, 1);
  CHECK_FALSE(pm.params().has_block(Block::Learner));
  CHECK_FALSE(pm.params().has_block(Block::Value));
}

TEST_CASE("initialisation: forget bias one, other biases zero, weights inside the glorot bound") {
  const MindModel m(small_config(TaskId::Passing), 2);
  const int H = m.config().hidden;
  for (const auto& p : m.params().all()) {
    if (p.cols == 1) {
      const bool lstm = p.name.find("lstm.b") != std::string::npos;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const bool forget = lstm && static_cast<int>(i) >= H && static_cast<int>(i) < 2 * H;
        CHECK(p.value[i] == (forget ? 1.0 : 0.0));
      }
    } else {
      const double a = std::sqrt(6.0 / (p.rows + p.cols));
      for (double w : p.value) CHECK(std::abs(w) <= a);
    }
  }
}

TEST_CASE("freshly initialised policies are near uniform") {
  for (TaskId t : {TaskId::Passing, TaskId::Maze, TaskId::Construction, TaskId::Sorting}) {
    ModelConfig c;
    c.spec = task_spec(t);
    const MindModel m(c, 3);
    Episode ep = Episode::reset(t, Mode::Test, 4, nullptr, LearnerPresence::Active);
    const auto s = ep.demo_observation();
    const std::vector<double> m0(static_cast<std::size_t>(c.latent_dim), 0.0), m1(static_cast<std::size_t>(c.latent_dim), 1.0);
    for (const auto* mp : {&m0, &m1}) {
      for (Branch b : {Branch::Demo, Branch::Learner}) {
        PolicyRunner r(m, b);
        for (const auto& probs : r.step(s, *mp)) {
          const auto [lo, hi] = std::minmax_element(probs.begin(), probs.end());
          CAPTURE(task_name(t));
          CHECK(*hi / *lo < 1.5);
        }
      }
    }
  }
}

TEST_CASE("policy outputs are distributions, attention gates stay in [0, 1]") {
  std::mt19937_64 rng(4);
  MindModel m(small_config(TaskId::Sorting), 5);
  for (auto& p : m.params().all()) {
    for (double& w : p.value) w *= 20.0;  // push into saturation
  }
  const Trajectory traj = random_trajectory(m, TaskId::Sorting, 10, 6);
  PolicyTape tape;
  std::vector<double> m_prev = traj.minds_prev();
  for (double& x : m_prev) x *= 1e3;
  const auto out = m.policy_forward(Branch::Demo, ptrs(traj.demo_obs), nullptr, m_prev, m.zero_state(), &tape);
  const auto& heads = m.heads(Branch::Demo);
  REQUIRE(heads.size() == 2);
  for (int t = 0; t < traj.length(); ++t) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      double s = 0.0;
      for (int j = 0; j < heads[h]; ++j) {
        const double p = std::exp(out.log_probs[h][static_cast<std::size_t>(t * heads[h] + j)]);
        CHECK(p >= 0.0);
        s += p;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  for (double a : tape.att) CHECK((a >= 0.0 && a <= 1.0));
}

TEST_CASE("conv: zero input gives the activated bias, a one-cell change stays local") {
  MindModel m(small_config(TaskId::Passing), 6);
  const int F = m.config().filters;
  auto& cb = m.params()[m.params().find("demo.conv.b")];
  cb.value = {0.3, -0.2, 0.7};
  const auto spec = m.config().spec;
  ObservationTensor zero(spec.height, spec.width, spec.channels);
  PolicyTape tape;
  const std::vector<double> m0(3, 0.0);
  m.policy_forward(Branch::Demo, {&zero}, nullptr, m0, m.zero_state(), &tape);
  for (int cell = 0; cell < spec.cells(); ++cell) {
    CHECK(tape.feat[static_cast<std::size_t>(cell * F + 0)] == 0.3);
    CHECK(tape.feat[static_cast<std::size_t>(cell * F + 1)] == 0.0);
    CHECK(tape.feat[static_cast<std::size_t>(cell * F + 2)] == 0.7);
  }
  ObservationTensor one = zero;
  one.at(4, 7, 0) = 1.0;
  PolicyTape tape2;
  m.policy_forward(Branch::Demo, {&one}, nullptr, m0, m.zero_state(), &tape2);
  const int changed = 4 * spec.width + 7;
  for (int cell = 0; cell < spec.cells(); ++cell) {
    if (cell == changed) continue;
    for (int f = 0; f < F; ++f) CHECK(tape2.feat[static_cast<std::size_t>(cell * F + f)] == tape.feat[static_cast<std::size_t>(cell * F + f)]);
  }
}

TEST_CASE("fusion scales each feature map by its gate") {
  MindModel m(small_config(TaskId::Passing), 7);
  const int F = m.config().filters;
  auto& aw = m.params()[m.params().find("demo.att.w")];
  auto& ab = m.params()[m.params().find("demo.att.b")];
  std::fill(aw.value.begin(), aw.value.end(), 0.0);
  ab.value = {1e3, -1e3, 0.0};  // open, shut, half
  Episode ep = Episode::reset(TaskId::Passing, Mode::Train, 0, nullptr, LearnerPresence::Active);
  const auto s = ep.demo_observation();
  PolicyTape tape;
  const std::vector<double> m0(3, 0.5);
  m.policy_forward(Branch::Demo, {&s}, nullptr, m0, m.zero_state(), &tape);
  for (int cell = 0; cell < s.cells(); ++cell) {
    const auto i = static_cast<std::size_t>(cell * F);
    CHECK(tape.fused[i] == tape.feat[i]);
    CHECK(tape.fused[i + 1] == 0.0);
    CHECK(tape.fused[i + 2] == 0.5 * tape.feat[i + 2]);
  }
}

TEST_CASE("tracker: action channels, determinism, m^0") {
  const MindModel m(small_config(TaskId::Maze), 8);
  Episode ep = Episode::reset(TaskId::Maze, Mode::Train, 0, nullptr, LearnerPresence::Active);
  const auto s = ep.demo_observation();
  TrackerTape a, b;
  const auto ma = m.tracker_forward({&s}, {FactoredAction{{0, 0}}}, m.zero_state(), nullptr, &a);
  const auto mb = m.tracker_forward({&s}, {FactoredAction{{3, 0}}}, m.zero_state(), nullptr, &b);
  int differ = 0;
  for (std::size_t i = 0; i < a.input.size(); ++i) differ += a.input[i] != b.input[i];
  CHECK(differ == 2 * s.cells());
  CHECK(ma != mb);
  CHECK(m.tracker_forward({&s}, {FactoredAction{{0, 0}}}, m.zero_state(), nullptr, nullptr) == ma);

  const Trajectory traj = random_trajectory(m, TaskId::Maze, 4, 1);
  const auto m_first = traj.mind_before(0);
  CHECK(std::all_of(m_first.begin(), m_first.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("property: rollout minds equal a batched recomputation bit for bit") {
  for (TaskId t : {TaskId::Passing, TaskId::Sorting}) {
    ModelConfig c;
    c.spec = task_spec(t);
    c.filters = 8;
    c.hidden = 16;
    const MindModel m(c, 9);
    std::mt19937_64 rng(10);
    const Trajectory traj = rollout(m, Episode::reset(t, Mode::Test, 3, nullptr, LearnerPresence::Active), {}, rng);
    CHECK(m.tracker_forward(ptrs(traj.demo_obs), traj.demo_actions, m.zero_state(), nullptr, nullptr) == traj.minds);
    // Learner probabilities from the stepwise runner match the batched pass too.
    PolicyRunner runner(m, Branch::Learner);
    const auto batched = m.policy_forward(Branch::Learner, ptrs(traj.learner_obs), nullptr, traj.learner_minds_prev(),
                                          m.zero_state(), nullptr);
    const auto mp = traj.learner_minds_prev();
    const auto D = static_cast<std::size_t>(c.latent_dim);
    for (std::size_t k = 0; k < traj.learner_obs.size(); ++k) {
      const std::vector<double> mk(mp.begin() + static_cast<long>(k * D), mp.begin() + static_cast<long>((k + 1) * D));
      const auto probs = runner.step(traj.learner_obs[k], mk);
      for (std::size_t h = 0; h < probs.size(); ++h) {
        const auto n = probs[h].size();
        for (std::size_t j = 0; j < n; ++j) CHECK(probs[h][j] == doctest::Approx(std::exp(batched.log_probs[h][k * n + j])).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("no-mind learner ignores the mind vector") {
  const MindModel m(small_config(TaskId::Construction, true), 11);
  CHECK(m.config().learner_input_channels() == 2 * m.config().spec.channels);
  CHECK(m.params().find("learner.att.w") < 0);
  Episode ep = Episode::reset(TaskId::Construction, Mode::Test, 2, nullptr, LearnerPresence::Active);
  const auto sl = ep.learner_observation();
  const auto sd = ep.demo_observation();
  const std::vector<const ObservationTensor*> other{&sd};
  const auto a = m.policy_forward(Branch::Learner, {&sl}, &other, std::vector<double>(3, 0.0), m.zero_state(), nullptr);
  const auto b = m.policy_forward(Branch::Learner, {&sl}, &other, std::vector<double>(3, 9.0), m.zero_state(), nullptr);
  CHECK(a.log_probs == b.log_probs);
}

TEST_CASE("value head") {
  MindModel m(small_config(TaskId::Passing), 12);
  const std::vector<double> zero(5, 0.0);
  CHECK(m.value(zero.data()) == 0.0);
  const std::vector<double> h{0.3, -0.1, 0.5, 0.2, -0.4};
  CHECK(m.value(h.data()) == m.value(h.data()));

  // Regress on the discounted return of a long constant-reward stream.
  const std::vector<double> rewards(400, 1.0);
  const double target = discounted_returns(rewards, 0.95)[0];
  RmsProp opt({1e-2, 0.99, 1e-8, 5.0});
  for (int i = 0; i < 3000; ++i) {
    m.params().zero_grad();
    m.value_backward(h.data(), -(target - m.value(h.data())));
    opt.step(m.params(), {Block::Value});
  }
  CHECK(m.value(h.data()) == doctest::Approx(1.0 / (1.0 - 0.95)).epsilon(0.05));
}

TEST_CASE("backward: zero objective gives zero gradients, a tape is used once") {
  MindModel m(small_config(TaskId::Passing), 13);
  const Trajectory traj = random_trajectory(m, TaskId::Passing, 3, 2);
  PolicyTape tape;
  m.policy_forward(Branch::Demo, ptrs(traj.demo_obs), nullptr, traj.minds_prev(), m.zero_state(), &tape);
  m.params().zero_grad();
  std::vector<std::vector<double>> d(1, std::vector<double>(static_cast<std::size_t>(3 * m.heads(Branch::Demo)[0]), 0.0));
  std::vector<double> d_m;
  m.policy_backward(tape, d, {}, &d_m);
  for (Block b : {Block::Tracker, Block::Demo, Block::Learner, Block::Value}) CHECK(m.params().grad_sq_norm(b) == 0.0);
  CHECK_THROWS_AS(m.policy_backward(tape, d, {}, nullptr), std::logic_error);

  TrackerTape tt;
  m.tracker_forward(ptrs(traj.demo_obs), traj.demo_actions, m.zero_state(), nullptr, &tt);
  m.tracker_backward(tt, std::vector<double>(9, 0.0));
  CHECK_THROWS_AS(m.tracker_backward(tt, std::vector<double>(9, 0.0)), std::logic_error);
}

TEST_CASE("imitation gradients match finite differences") {
  for (TaskId t : {TaskId::Maze, TaskId::Sorting}) {
    CAPTURE(task_name(t));
    MindModel m(small_config(t), 14);
    jitter_biases(m, 1);
    const Trajectory traj = random_trajectory(m, t, t == TaskId::Sorting ? 4 : 3, 3);
    m.params().zero_grad();
    const IlResult r = il_gradients(m, traj);
    CHECK(r.loss == doctest::Approx(il_loss_oracle(m, traj)).epsilon(1e-12));
    CHECK(m.params().grad_sq_norm(Block::Learner) == 0.0);
    CHECK(m.params().grad_sq_norm(Block::Value) == 0.0);
    CHECK(m.params().grad_sq_norm(Block::Tracker) > 0.0);
    check_gradients(m, {Block::Tracker, Block::Demo}, [&] { return il_loss_oracle(m, traj); });
  }
}

TEST_CASE("actor-critic gradients match finite differences and never reach the tracker") {
  for (TaskId t : {TaskId::Maze, TaskId::Sorting}) {
    for (bool no_mind : {false, true}) {
      CAPTURE(task_name(t));
      CAPTURE(no_mind);
      MindModel m(small_config(t, no_mind), 15);
      jitter_biases(m, 2);
      // Nonzero value weights so the advantage is not just the return.
      auto& vb = m.params()[m.params().find("value.b")];
      vb.value[0] = 0.4;
      const Trajectory traj = random_trajectory(m, t, t == TaskId::Sorting ? 10 : 3, 4);
      REQUIRE(!traj.learner_ticks.empty());
      std::vector<double> rewards;
      for (std::size_t k = 0; k < traj.learner_ticks.size(); ++k) rewards.push_back(0.3 + 0.7 * static_cast<double>(k));
      m.params().zero_grad();
      rl_gradients(m, traj, rewards, 0.95, 0.01);
      CHECK(m.params().grad_sq_norm(Block::Tracker) == 0.0);
      CHECK(m.params().grad_sq_norm(Block::Demo) == 0.0);
      const RlBase base = rl_base(m, traj, rewards, 0.95);
      check_gradients(m, {Block::Learner, Block::Value}, [&] { return rl_loss_oracle(m, traj, base, 0.01); });
    }
  }
}

}
