#include "probe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace probe {

Episode EvalSuite::setting(int i) const {
  if (!arrays.empty()) {
    SortState s;
    s.values = arrays[static_cast<std::size_t>(i)];
    return Episode::sorting(s, LearnerPresence::Absent);
  }
  return Episode::reset(task, mode, seeds[static_cast<std::size_t>(i)], is_grid_task(task) ? &grid : nullptr,
                        LearnerPresence::Absent);
}

EvalSuite make_suite(TaskId task, int n, std::uint64_t first_seed, Mode mode) {
  EvalSuite s;
  s.task = task;
  s.mode = mode;
  if (is_grid_task(task)) s.grid = default_grid_config(task);
  for (int i = 0; i < n; ++i) s.seeds.push_back(first_seed + static_cast<std::uint64_t>(i));
  return s;
}

std::uint64_t suite_digest(const EvalSuite& suite) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int i = 0; i < suite.size(); ++i) {
    h ^= suite.setting(i).digest();
    h *= 1099511628211ULL;
  }
  return h;
}

void ModelPredictor::reset() {
  tracker_ = TrackerRunner(*model_);
  policy_ = PolicyRunner(*model_, Branch::Demo);
}

FactoredAction ModelPredictor::predict(const Episode&, const ObservationTensor& s_d) {
  return argmax_action(policy_.step(s_d, tracker_.mind()));
}

void ModelPredictor::observe(const ObservationTensor& s_d, FactoredAction executed) {
  tracker_.observe(s_d, executed);
}

namespace {

std::uint64_t setting_seed(const EvalSuite& suite, int i) {
  return suite.arrays.empty() ? suite.seeds[static_cast<std::size_t>(i)] : static_cast<std::uint64_t>(i);
}

}  // namespace

AccuracyReport eval_prediction_accuracy(DemoPredictor& predictor, const EvalSuite& suite) {
  AccuracyReport report;
  std::mt19937_64 noise_rng(suite.noise_seed);
  for (int i = 0; i < suite.size(); ++i) {
    Episode ep = suite.setting(i);
    predictor.reset();
    SettingResult r;
    r.index = i;
    r.seed = setting_seed(suite, i);
    while (!ep.terminal()) {
      const ObservationTensor s_d = ep.demo_observation();
      const FactoredAction predicted = predictor.predict(ep, s_d);
      FactoredAction executed = ep.expert_action();
      if (suite.noise_rate > 0.0) executed = noisy_demo_action(ep.task(), executed, suite.noise_rate, noise_rng);
      r.correct += predicted == executed ? 1 : 0;
      ++r.steps;
      predictor.observe(s_d, executed);
      ep.step(executed, {});
    }
    r.success = ep.goal_reached();
    report.steps += r.steps;
    report.correct += r.correct;
    report.settings.push_back(r);
  }
  report.accuracy = report.steps ? static_cast<double>(report.correct) / static_cast<double>(report.steps) : 0.0;
  return report;
}

AccuracyReport eval_prediction_accuracy(const MindModel& model, const EvalSuite& suite) {
  ModelPredictor p(model);
  return eval_prediction_accuracy(p, suite);
}

AccuracyReport eval_noise_robustness(DemoPredictor& predictor, EvalSuite suite, double noise_rate) {
  suite.noise_rate = noise_rate;
  return eval_prediction_accuracy(predictor, suite);
}

SuccessReport eval_distillation(Actor& actor, const EvalSuite& suite) {
  SuccessReport report;
  int successes = 0;
  for (int i = 0; i < suite.size(); ++i) {
    Episode ep = suite.setting(i);
    actor.reset();
    // Construction hand-over: the rule-based demonstrator fetches the first block.
    bool handed_over = ep.task() != TaskId::Construction;
    SettingResult r;
    r.index = i;
    r.seed = setting_seed(suite, i);
    while (!ep.terminal()) {
      const ObservationTensor s_d = ep.demo_observation();
      if (!handed_over && ep.grid_state().demonstrator_inventory != BlockKind::None) handed_over = true;
      FactoredAction a;
      if (handed_over) {
        a = actor.act(ep, s_d);
      } else {
        a = ep.expert_action();
      }
      actor.observe(s_d, a);
      ep.step(a, {});
      ++r.steps;
    }
    r.success = ep.goal_reached();
    successes += r.success ? 1 : 0;
    report.settings.push_back(r);
  }
  report.success_rate = suite.size() ? static_cast<double>(successes) / suite.size() : 0.0;
  return report;
}

SuccessReport eval_distillation(const MindModel& model, const EvalSuite& suite) {
  ModelActor actor(model);
  return eval_distillation(actor, suite);
}

SuccessReport eval_demonstrator_success(const MindModel* model, TaskId task, const RolloutOptions& learner,
                                        int episodes, std::uint64_t seed, const GridTaskConfig* grid) {
  if (!model && learner.control == LearnerControl::Policy && learner.presence == LearnerPresence::Active) {
    throw std::invalid_argument("a policy-controlled learner needs a model");
  }
  // Rollouts still run the tracker; a throwaway model serves when none is given.
  std::optional<MindModel> scratch;
  if (!model) {
    ModelConfig mc;
    mc.spec = grid ? task_spec(task, *grid) : task_spec(task);
    scratch.emplace(mc, 0);
    model = &*scratch;
  }
  std::mt19937_64 rng(seed);
  SuccessReport report;
  int successes = 0;
  for (int i = 0; i < episodes; ++i) {
    const std::uint64_t episode_seed = rng();
    Episode ep = Episode::reset(task, Mode::Train, episode_seed, grid, learner.presence);
    const Trajectory tr = rollout(*model, std::move(ep), learner, rng);
    SettingResult r;
    r.index = i;
    r.seed = episode_seed;
    r.steps = tr.length();
    r.success = tr.goal_reached;
    successes += r.success ? 1 : 0;
    report.settings.push_back(r);
  }
  report.success_rate = episodes ? static_cast<double>(successes) / episodes : 0.0;
  return report;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal series of length >= 2");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const TrainConfig& base,
                                      const EvalSuite& suite, const std::string& out_root) {
  std::vector<AblationRow> rows;
  const std::uint64_t digest = suite_digest(suite);
  for (const AblationCell& cell : cells) {
    AblationRow row;
    row.cell = cell;
    row.suite_digest = digest;
    try {
      TrainConfig cfg = base;
      cfg.task = cell.task;
      cfg.latent_dim = cell.latent_dim;
      cfg.reward_mode = cell.mode;
      cfg.seed = cell.seed;
      if (is_grid_task(cell.task) && cfg.grid.task != cell.task) cfg.grid = default_grid_config(cell.task);
      if (suite.task != cell.task) throw std::invalid_argument("suite task differs from cell task");
      std::unique_ptr<Trainer> trainer;
      if (!out_root.empty()) {
        const auto dir = std::filesystem::path(out_root) / task_name(cell.task) / reward_mode_name(cell.mode) /
                         ("d" + std::to_string(cell.latent_dim)) / std::to_string(cell.seed);
        const TrainSummary summary = train(cfg, dir.string());
        trainer = std::make_unique<Trainer>(cfg);
        trainer->load_state(read_checkpoint(summary.checkpoints.back()));
        if (!summary.records.empty()) row.final_il_loss = summary.records.back().il_loss;
      } else {
        trainer = std::make_unique<Trainer>(cfg);
        while (!trainer->finished()) row.final_il_loss = trainer->iterate().il_loss;
      }
      const MindModel& model = trainer->model();
      row.test_accuracy = eval_prediction_accuracy(model, suite).accuracy;
      ModelPredictor p(model);
      row.noise_accuracy = eval_noise_robustness(p, suite, 0.1).accuracy;
      row.distill_success = eval_distillation(model, suite).success_rate;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "task,latent_dim,reward_mode,seed,status,final_il_loss,test_accuracy,noise_accuracy,distill_success,suite_digest,error\n";
  for (const auto& r : rows) {
    out << task_name(r.cell.task) << ',' << r.cell.latent_dim << ',' << reward_mode_name(r.cell.mode) << ','
        << r.cell.seed << ',' << (r.ok ? "ok" : "failed") << ',' << fmt(r.final_il_loss) << ','
        << fmt(r.test_accuracy) << ',' << fmt(r.noise_accuracy) << ',' << fmt(r.distill_success) << ','
        << hex(r.suite_digest) << ',' << csv_field(r.error) << '\n';
  }
  return out.str();
}

std::string accuracy_csv(const AccuracyReport& report) {
  std::ostringstream out;
  out << "setting,seed,steps,correct,accuracy\n";
  for (const auto& s : report.settings) {
    out << s.index << ',' << s.seed << ',' << s.steps << ',' << s.correct << ','
        << fmt(s.steps ? static_cast<double>(s.correct) / s.steps : 0.0) << '\n';
  }
  out << "all,," << report.steps << ',' << report.correct << ',' << fmt(report.accuracy) << '\n';
  return out.str();
}

std::string success_csv(const SuccessReport& report) {
  std::ostringstream out;
  out << "setting,seed,steps,success\n";
  for (const auto& s : report.settings) {
    out << s.index << ',' << s.seed << ',' << s.steps << ',' << (s.success ? 1 : 0) << '\n';
  }
  out << "all,,," << fmt(report.success_rate) << '\n';
  return out.str();
}

}  // namespace probe
