#include <doctest.h>

#include <cmath>
#include <sstream>

#include "probe/evaluation.hpp"

using namespace probe;

namespace {

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
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

TEST_SUITE("evaluation") {

TEST_CASE("oracle predictor scores 1, uniform scores chance") {
  for (TaskId t : {TaskId::Passing, TaskId::Maze, TaskId::Construction, TaskId::Sorting}) {
    const EvalSuite suite = make_suite(t, 20, 500);
    OraclePredictor oracle;
    CHECK(eval_prediction_accuracy(oracle, suite).accuracy == 1.0);
  }
  const EvalSuite suite = make_suite(TaskId::Passing, 100, 500);
  UniformPredictor uniform(task_spec(TaskId::Passing).demo_heads, 3);
  const auto r = eval_prediction_accuracy(uniform, suite);
  const double p = 0.2;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.steps));
  CHECK(std::abs(r.accuracy - p) < 3 * sigma);
}

TEST_CASE("untrained sorting model sits near chance for the swap pair") {
  const MindModel m(small(TaskId::Sorting), 1);
  const auto r = eval_prediction_accuracy(m, make_suite(TaskId::Sorting, 100, 7));
  CHECK(r.accuracy < 0.1);
}

TEST_CASE("noise: rate 0 matches the plain evaluation, the oracle hits the analytic ceiling") {
  const EvalSuite suite = make_suite(TaskId::Passing, 30, 900);
  const MindModel m(small(TaskId::Passing), 2);
  ModelPredictor a(m), b(m);
  CHECK(eval_noise_robustness(a, suite, 0.0).accuracy == eval_prediction_accuracy(b, suite).accuracy);

  EvalSuite big = make_suite(TaskId::Passing, 1000, 1);
  big.noise_seed = 5;
  OraclePredictor oracle;
  const auto r = eval_noise_robustness(oracle, big, 0.1);
  CHECK(r.steps >= 5000);
  CHECK(r.accuracy == doctest::Approx(0.9 + 0.1 / 5).epsilon(0.02 / 0.92));

  OraclePredictor again;
  const auto chance = eval_noise_robustness(again, make_suite(TaskId::Passing, 200, 1), 1.0);
  CHECK(chance.accuracy == doctest::Approx(0.2).epsilon(0.25));
}

TEST_CASE("evaluation is deterministic and leaves the model untouched") {
  MindModel m(small(TaskId::Maze), 3);
  const auto before = m.params().snapshot(Block::Learner);
  const auto tracker = m.params().snapshot(Block::Tracker);
  const EvalSuite suite = make_suite(TaskId::Maze, 10, 40);
  const auto a = eval_prediction_accuracy(m, suite);
  const auto b = eval_prediction_accuracy(m, suite);
  CHECK(a.correct == b.correct);
  CHECK(accuracy_csv(a) == accuracy_csv(b));
  CHECK(success_csv(eval_distillation(m, suite)) == success_csv(eval_distillation(m, suite)));
  CHECK(m.params().snapshot(Block::Learner) == before);
  CHECK(m.params().snapshot(Block::Tracker) == tracker);
}

TEST_CASE("distillation harness") {
  for (TaskId t : {TaskId::Passing, TaskId::Maze, TaskId::Construction}) {
    PlannerActor planner;
    CHECK(eval_distillation(planner, make_suite(t, 20, 77)).success_rate == 1.0);
  }
  // Some random arrays need more swaps than the time limit allows; keep the solvable ones.
  EvalSuite sorting;
  sorting.task = TaskId::Sorting;
  for (std::uint64_t s = 0; sorting.arrays.size() < 20; ++s) {
    const SortArray a = reset_sort(Mode::Test, s).values;
    int inversions = 0;
    for (int i = 0; i < kSortLength; ++i) {
      for (int j = i + 1; j < kSortLength; ++j) inversions += a[static_cast<std::size_t>(i)] > a[static_cast<std::size_t>(j)];
    }
    if (inversions <= kSortTimeLimit) sorting.arrays.push_back(a);
  }
  PlannerActor planner;
  CHECK(eval_distillation(planner, sorting).success_rate == 1.0);

  // A maze with a single door leaves one gap open, so a random walk occasionally gets through.
  UniformActor random(task_spec(TaskId::Maze).demo_heads, 9);
  CHECK(eval_distillation(random, make_suite(TaskId::Maze, 100, 77)).success_rate < 0.15);
}

TEST_CASE("demonstrator success under different learners") {
  RolloutOptions absent;
  absent.presence = LearnerPresence::Absent;
  CHECK(eval_demonstrator_success(nullptr, TaskId::Passing, absent, 20, 1).success_rate == 1.0);

  // Stand in the gap for the whole episode.
  RolloutOptions blocker;
  blocker.control = LearnerControl::Scripted;
  blocker.script = [](const Episode& ep) {
    const Pos p = *ep.grid_state().learner;
    FactoredAction a;
    if (p.row > 5) a.part[0] = static_cast<int>(GridAction::MoveN);
    else if (p.row < 5 && p.col > 1) a.part[0] = static_cast<int>(GridAction::MoveW);
    else if (p.row < 5) a.part[0] = static_cast<int>(GridAction::MoveS);
    else a.part[0] = static_cast<int>(GridAction::Stop);
    return a;
  };
  CHECK(eval_demonstrator_success(nullptr, TaskId::Passing, blocker, 20, 1).success_rate == 0.0);

  RolloutOptions uniform;
  uniform.control = LearnerControl::Uniform;
  const double u = eval_demonstrator_success(nullptr, TaskId::Passing, uniform, 100, 1).success_rate;
  CHECK(u > 0.0);
  CHECK(u < 1.0);
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ties get average ranks: x ranks (1.5, 1.5, 3), y ranks (1, 2, 3).
  CHECK(spearman({1, 1, 2}, {1, 2, 3}) == doctest::Approx(0.8660254037844386));
}

TEST_CASE("suites") {
  const EvalSuite a = make_suite(TaskId::Construction, 10, 3);
  CHECK(suite_digest(a) == suite_digest(make_suite(TaskId::Construction, 10, 3)));
  CHECK(suite_digest(a) != suite_digest(make_suite(TaskId::Construction, 10, 4)));
  EvalSuite arrays;
  arrays.task = TaskId::Sorting;
  for (std::uint64_t s = 0; s < 100; ++s) arrays.arrays.push_back(reset_sort(Mode::Test, s).values);
  CHECK(arrays.size() == 100);
  const MindModel m(small(TaskId::Sorting), 4);
  const std::string csv = accuracy_csv(eval_prediction_accuracy(m, arrays));
  CHECK(count_lines(csv) == 1 + 100 + 1);
  CHECK(csv.find("\nall,") != std::string::npos);
}

TEST_CASE("ablation grid: one cell, one row, shared digest") {
  TrainConfig base = TrainConfig::defaults(TaskId::Sorting);
  base.iterations = 2;
  const EvalSuite suite = make_suite(TaskId::Sorting, 5, 10);
  const auto rows = run_ablation({{TaskId::Sorting, 2, RewardMode::Passive, 0}}, base, suite, "");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ok);
  CHECK(rows[0].suite_digest == suite_digest(suite));
  CHECK(count_lines(ablation_csv(rows)) == 2);
}

TEST_CASE("ablation grid records a failing cell and carries on") {
  TrainConfig base = TrainConfig::defaults(TaskId::Sorting);
  base.iterations = 1;
  const EvalSuite suite = make_suite(TaskId::Sorting, 3, 10);
  const auto rows = run_ablation({{TaskId::Sorting, 0, RewardMode::Passive, 0}, {TaskId::Sorting, 2, RewardMode::Passive, 0}},
                                 base, suite, "");
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].ok);
  CHECK_FALSE(rows[0].error.empty());
  CHECK(rows[1].ok);
}

}
