#include "probe/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace probe {

namespace fs = std::filesystem;

const std::vector<std::string>& experiment_keys() {
  static const std::vector<std::string> keys{
      "task", "reward_mode", "latent_dim", "iterations", "gamma", "entropy_weight", "learning_rate", "rms_rho",
      "rms_epsilon", "clip_norm", "epsilon_start", "epsilon_end", "t_max", "checkpoint_interval", "seed", "seeds",
      "count_beta", "normalize_rewards", "output_root", "eval_settings", "eval_first_seed", "eval_mode", "noise_rate", "suite_file",
      "transfer_iterations", "ablate_latent_dims", "ablate_reward_modes"};
  return keys;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty list element in '" + s + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects integers, got '" + v + "'");
  }
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < 0) throw ConfigError("'" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(x);
}

Mode parse_mode(const std::string& v) {
  if (v == "train") return Mode::Train;
  if (v == "test") return Mode::Test;
  throw ConfigError("eval_mode must be 'train' or 'test', got '" + v + "'");
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::ostream& log_of(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }

}  // namespace

ExperimentConfig parse_experiment_config(const KvDocument& doc) {
  const auto& keys = experiment_keys();
  doc.reject_unknown(std::set<std::string>(keys.begin(), keys.end()));

  ExperimentConfig c;
  TaskId task = TaskId::Passing;
  if (auto t = doc.find("task")) {
    try {
      task = parse_task(*t);
    } catch (const std::exception&) {
      throw ConfigError("unknown task '" + *t + "'");
    }
    c.task_given = true;
  }
  TrainConfig& tc = c.train;
  tc = TrainConfig::defaults(task);
  if (auto m = doc.find("reward_mode")) {
    try {
      tc.reward_mode = parse_reward_mode(*m);
    } catch (const std::exception&) {
      throw ConfigError("unknown reward_mode '" + *m + "'");
    }
  }
  tc.latent_dim = static_cast<int>(doc.get_int("latent_dim", tc.latent_dim));
  tc.iterations = doc.get_int("iterations", tc.iterations);
  tc.gamma = doc.get_double("gamma", tc.gamma);
  tc.entropy_weight = doc.get_double("entropy_weight", tc.entropy_weight);
  tc.optimizer.learning_rate = doc.get_double("learning_rate", tc.optimizer.learning_rate);
  tc.optimizer.rho = doc.get_double("rms_rho", tc.optimizer.rho);
  tc.optimizer.epsilon = doc.get_double("rms_epsilon", tc.optimizer.epsilon);
  tc.optimizer.clip_norm = doc.get_double("clip_norm", tc.optimizer.clip_norm);
  tc.epsilon_start = doc.get_double("epsilon_start", tc.epsilon_start);
  tc.epsilon_end = doc.get_double("epsilon_end", tc.epsilon_end);
  tc.t_max = static_cast<int>(doc.get_int("t_max", tc.t_max));
  tc.checkpoint_interval = doc.get_int("checkpoint_interval", tc.checkpoint_interval);
  if (auto s = doc.find("seed")) tc.seed = parse_seed("seed", *s);
  tc.count_beta = doc.get_double("count_beta", tc.count_beta);
  tc.normalize_rewards = doc.get_bool("normalize_rewards", tc.normalize_rewards);

  if (auto s = doc.find("seeds")) {
    for (const auto& item : split_list(*s)) c.seeds.push_back(parse_seed("seeds", item));
  }
  if (c.seeds.empty()) c.seeds.push_back(tc.seed);
  c.output_root = doc.get_string("output_root", "");
  c.eval_settings = static_cast<int>(doc.get_int("eval_settings", c.eval_settings));
  if (auto s = doc.find("eval_first_seed")) c.eval_first_seed = parse_seed("eval_first_seed", *s);
  if (auto m = doc.find("eval_mode")) c.eval_mode = parse_mode(*m);
  c.noise_rate = doc.get_double("noise_rate", c.noise_rate);
  c.suite_file = doc.get_string("suite_file", "");
  c.transfer_iterations = doc.get_int("transfer_iterations", c.transfer_iterations);
  if (auto s = doc.find("ablate_latent_dims")) {
    for (const auto& item : split_list(*s)) c.ablate_latent_dims.push_back(static_cast<int>(parse_int("ablate_latent_dims", item)));
  }
  if (auto s = doc.find("ablate_reward_modes")) {
    for (const auto& item : split_list(*s)) {
      try {
        c.ablate_reward_modes.push_back(parse_reward_mode(item));
      } catch (const std::exception&) {
        throw ConfigError("unknown reward mode '" + item + "' in ablate_reward_modes");
      }
    }
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  train.validate();
  if (eval_settings <= 0) throw ConfigError("eval_settings must be positive");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("noise_rate must lie in [0, 1]");
  if (transfer_iterations <= 0) throw ConfigError("transfer_iterations must be positive");
  for (int d : ablate_latent_dims) {
    if (d <= 0) throw ConfigError("ablate_latent_dims must be positive");
  }
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ConfigError("seeds must be distinct");
  if (!suite_file.empty() && train.task != TaskId::Sorting) throw ConfigError("suite_file only applies to Sorting");
}

KvDocument ExperimentConfig::to_kv() const {
  KvDocument d = train.to_kv();
  std::vector<std::string> s;
  for (auto x : seeds) s.push_back(std::to_string(x));
  d.set("seeds", join(s));
  if (!output_root.empty()) d.set("output_root", output_root);
  d.set("eval_settings", eval_settings);
  d.set("eval_first_seed", static_cast<long long>(eval_first_seed));
  d.set("eval_mode", eval_mode == Mode::Train ? "train" : "test");
  d.set("noise_rate", noise_rate);
  if (!suite_file.empty()) d.set("suite_file", suite_file);
  d.set("transfer_iterations", transfer_iterations);
  if (!ablate_latent_dims.empty()) {
    std::vector<std::string> v;
    for (int x : ablate_latent_dims) v.push_back(std::to_string(x));
    d.set("ablate_latent_dims", join(v));
  }
  if (!ablate_reward_modes.empty()) {
    std::vector<std::string> v;
    for (auto m : ablate_reward_modes) v.push_back(reward_mode_name(m));
    d.set("ablate_reward_modes", join(v));
  }
  return d;
}

void apply_overrides(KvDocument& doc, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    doc.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
}

fs::path resolve_output_root(const std::string& flag, const ExperimentConfig& config) {
  if (!flag.empty()) return flag;
  if (!config.output_root.empty()) return config.output_root;
  if (const char* env = std::getenv(kRunsRootEnv); env && *env) return env;
  return "runs";
}

fs::path run_directory(const fs::path& root, const std::string& task, const std::string& mode, std::uint64_t seed) {
  return root / task / mode / std::to_string(seed);
}

EvalSuite suite_for(const ExperimentConfig& config, TaskId task) {
  EvalSuite suite = make_suite(task, config.eval_settings, config.eval_first_seed, config.eval_mode);
  if (is_grid_task(task) && config.train.t_max > 0) suite.grid.t_max = config.train.t_max;
  if (!config.suite_file.empty()) {
    std::ifstream in(config.suite_file);
    if (!in) throw ConfigError("cannot read suite_file " + config.suite_file);
    suite.arrays = read_sort_suite(in);
    if (suite.arrays.empty()) throw ConfigError("suite_file holds no arrays");
  }
  suite.noise_seed = derive_seed(config.eval_first_seed, 3);
  return suite;
}

int cmd_train(const ExperimentConfig& config, const CommandContext& ctx) {
  config.validate();
  for (const std::uint64_t seed : config.seeds) {
    ExperimentConfig run = config;
    run.train.seed = seed;
    run.seeds = {seed};
    const fs::path dir = run_directory(ctx.root, task_name(run.train.task), reward_mode_name(run.train.reward_mode), seed);
    fs::create_directories(dir);
    write_text(dir / "config.cfg", run.to_kv().to_string());
    const TrainSummary summary = train(run.train, dir.string());
    log_of(ctx) << "train " << task_name(run.train.task) << ' ' << reward_mode_name(run.train.reward_mode) << " seed "
                << seed << ": " << summary.records.size() << " iterations"
                << (summary.resumed ? " (resumed)" : "") << ", final il_loss "
                << (summary.records.empty() ? std::string("n/a") : std::to_string(summary.records.back().il_loss))
                << " -> " << dir.string() << '\n';
  }
  return kExitOk;
}

namespace {

MindModel model_for_task(const Checkpoint& ckpt, const ExperimentConfig& config) {
  MindModel model = load_model(ckpt);
  if (config.task_given && model.config().spec.task != config.train.task) {
    throw ConfigError(std::string("checkpoint is a ") + task_name(model.config().spec.task) + " model, config asks for " +
                      task_name(config.train.task));
  }
  return model;
}

// Tables go next to the run a checkpoint came from unless told otherwise.
fs::path table_dir(const std::string& checkpoint, const std::string& out_dir) {
  if (!out_dir.empty()) return out_dir;
  const fs::path parent = fs::absolute(checkpoint).parent_path();
  return parent.filename() == "checkpoints" ? parent.parent_path() : parent;
}

// <task>_<reward mode>_d<D>_s<seed>, from what the checkpoint records.
std::string table_stem(const Checkpoint& ckpt, const MindModel& model) {
  const auto& m = ckpt.manifest;
  std::string stem = std::string(task_name(model.config().spec.task)) + "_" + m.get_string("train.reward_mode", "model") +
                     "_d" + std::to_string(model.config().latent_dim);
  if (auto seed = m.find("train.seed")) stem += "_s" + *seed;
  return stem;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

int cmd_eval(const std::string& checkpoint, const ExperimentConfig& config, const std::string& out_dir,
             const CommandContext& ctx) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const MindModel model = model_for_task(ckpt, config);
  const TaskId task = model.config().spec.task;
  ExperimentConfig c = config;
  c.train.task = task;
  const EvalSuite suite = suite_for(c, task);
  const AccuracyReport clean = eval_prediction_accuracy(model, suite);
  ModelPredictor predictor(model);
  const AccuracyReport noisy = eval_noise_robustness(predictor, suite, config.noise_rate);

  const fs::path dir = table_dir(checkpoint, out_dir);
  const std::string stem = table_stem(ckpt, model);
  write_text(dir / (stem + "_accuracy.csv"), accuracy_csv(clean));
  write_text(dir / (stem + "_noise_accuracy.csv"), accuracy_csv(noisy));
  log_of(ctx) << "eval " << task_name(task) << ": settings " << suite.size() << ", accuracy " << fmt(clean.accuracy)
              << ", noise " << fmt(config.noise_rate) << " accuracy " << fmt(noisy.accuracy) << '\n';
  return kExitOk;
}

int cmd_distill(const std::string& checkpoint, const ExperimentConfig& config, const std::string& out_dir,
                const CommandContext& ctx) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const MindModel model = model_for_task(ckpt, config);
  const TaskId task = model.config().spec.task;
  ExperimentConfig c = config;
  c.train.task = task;
  const SuccessReport report = eval_distillation(model, suite_for(c, task));
  write_text(table_dir(checkpoint, out_dir) / (table_stem(ckpt, model) + "_distill.csv"), success_csv(report));
  log_of(ctx) << "distill " << task_name(task) << ": settings " << report.settings.size() << ", success "
              << fmt(report.success_rate) << '\n';
  return kExitOk;
}

int cmd_transfer(TransferMode mode, const std::string& checkpoint, const ExperimentConfig& config,
                 const CommandContext& ctx) {
  if (config.task_given && config.train.task != TaskId::Construction) {
    throw ConfigError("collaboration and competition run on the construction task");
  }
  ExperimentConfig base = config;
  base.train.task = TaskId::Construction;
  base.train.grid = default_grid_config(TaskId::Construction);
  if (base.train.t_max > 0) base.train.grid.t_max = base.train.t_max;
  base.validate();

  double tracker_sum = 0.0, no_mind_sum = 0.0;
  for (const std::uint64_t seed : base.seeds) {
    std::string source = checkpoint;
    if (source.empty()) {
      // Pretrain the tracker with the configured reward mode first.
      ExperimentConfig pre = base;
      pre.train.seed = seed;
      pre.seeds = {seed};
      const fs::path pdir = run_directory(ctx.root, "construction", reward_mode_name(pre.train.reward_mode), seed);
      fs::create_directories(pdir);
      write_text(pdir / "config.cfg", pre.to_kv().to_string());
      source = train(pre.train, pdir.string()).checkpoints.back();
    }
    const Checkpoint pretrained = read_checkpoint(source);

    RetrainConfig rc;
    rc.mode = mode;
    rc.iterations = base.transfer_iterations;
    rc.seed = seed;
    rc.gamma = base.train.gamma;
    rc.entropy_weight = base.train.entropy_weight;
    rc.optimizer = base.train.optimizer;
    rc.epsilon_start = base.train.epsilon_start;
    rc.epsilon_end = base.train.epsilon_end;
    rc.grid = base.train.grid;

    const fs::path dir = run_directory(ctx.root, "construction", transfer_mode_name(mode), seed);
    fs::create_directories(dir);
    KvDocument snapshot = base.to_kv();
    snapshot.set("seed", static_cast<long long>(seed));
    snapshot.set("seeds", std::to_string(seed));
    write_text(dir / "config.cfg", snapshot.to_string());
    write_text(dir / "pretrained.txt", source + "\n");

    const RetrainResult with_tracker = retrain_with_fixed_tracker(pretrained, rc);
    const RetrainResult no_mind = train_no_mind_baseline(rc);
    write_text(dir / "curve_tracker.csv", curve_csv(with_tracker.curve));
    write_text(dir / "curve_no_mind.csv", curve_csv(no_mind.curve));
    write_checkpoint((dir / "checkpoints" / "tracker_policy.ckpt").string(), model_checkpoint(with_tracker.model));
    write_checkpoint((dir / "checkpoints" / "no_mind_policy.ckpt").string(), model_checkpoint(no_mind.model));

    const double a = final_mean_rescaled(with_tracker.curve);
    const double b = final_mean_rescaled(no_mind.curve);
    tracker_sum += a;
    no_mind_sum += b;
    log_of(ctx) << transfer_mode_name(mode) << " seed " << seed << ": final rescaled return tracker " << fmt(a)
                << ", no-mind " << fmt(b) << ", demonstrator alone " << fmt(with_tracker.curve.back().demo_only_rescaled)
                << '\n';
  }
  const double n = static_cast<double>(base.seeds.size());
  log_of(ctx) << transfer_mode_name(mode) << " mean over " << base.seeds.size() << " seeds: tracker "
              << fmt(tracker_sum / n) << ", no-mind " << fmt(no_mind_sum / n) << '\n';
  return kExitOk;
}

int cmd_ablate(const ExperimentConfig& config, const CommandContext& ctx) {
  config.validate();
  const TaskId task = config.train.task;
  std::vector<int> dims = config.ablate_latent_dims;
  if (dims.empty()) dims.push_back(config.train.latent_dim);
  std::vector<RewardMode> modes = config.ablate_reward_modes;
  if (modes.empty()) modes.push_back(config.train.reward_mode);

  std::vector<AblationCell> cells;
  for (int d : dims) {
    for (RewardMode m : modes) {
      for (std::uint64_t s : config.seeds) cells.push_back({task, d, m, s});
    }
  }
  const EvalSuite suite = suite_for(config, task);
  const fs::path out_root = ctx.root / "ablate";
  const auto rows = run_ablation(cells, config.train, suite, out_root.string());
  write_text(out_root / task_name(task) / "ablation.csv", ablation_csv(rows));
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.ok) {
      ++failed;
      log_of(ctx) << "cell d" << r.cell.latent_dim << ' ' << reward_mode_name(r.cell.mode) << " seed " << r.cell.seed
                  << " failed: " << r.error << '\n';
    }
  }
  log_of(ctx) << "ablate " << task_name(task) << ": " << rows.size() - static_cast<std::size_t>(failed) << '/'
              << rows.size() << " cells ok -> " << (out_root / task_name(task) / "ablation.csv").string() << '\n';
  return failed ? kExitRuntime : kExitOk;
}

std::string replay_trace(const MindModel& model, const ReplayOptions& options) {
  const ModelConfig& mc = model.config();
  const TaskId task = mc.spec.task;
  GridTaskConfig grid;
  if (is_grid_task(task)) {
    grid = default_grid_config(task);
    grid.t_max = mc.spec.t_max;
  }
  const bool learner = mc.with_learner && options.learner;
  const LearnerPresence presence = learner ? LearnerPresence::Active : LearnerPresence::Absent;
  Episode start = Episode::reset(task, options.mode, options.seed, is_grid_task(task) ? &grid : nullptr, presence);
  if (!start.is_grid()) start.sort_state().step_limit = mc.spec.t_max;

  RolloutOptions opts;
  opts.presence = presence;
  std::mt19937_64 rng(derive_seed(options.seed, 2));
  const Trajectory tr = rollout(model, start, opts, rng);

  std::ostringstream out;
  out << "task " << task_name(task) << " mode " << (options.mode == Mode::Train ? "train" : "test") << " seed "
      << options.seed << " latent_dim " << mc.latent_dim << " learner " << (learner ? "policy" : "absent") << '\n';
  Episode ep = start;
  const int D = tr.latent_dim;
  std::size_t next_decision = 0;
  char buf[64];
  for (int t = 0; t < tr.length(); ++t) {
    const FactoredAction a_d = tr.demo_actions[static_cast<std::size_t>(t)];
    FactoredAction a_l{};
    const bool acted = next_decision < tr.learner_ticks.size() && tr.learner_ticks[next_decision] == t;
    if (acted) a_l = tr.learner_actions[next_decision++];

    out << "frame " << t << '\n' << ep.render();
    out << "demo " << ep.describe_demo_action(a_d) << '\n';
    out << "learner " << (acted ? ep.describe_learner_action(a_l) : std::string("-")) << '\n';
    const double* m = tr.minds.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(D);
    double norm = 0.0;
    out << "m";
    for (int k = 0; k < D; ++k) {
      std::snprintf(buf, sizeof(buf), " %.17g", m[k]);
      out << buf;
      norm += m[k] * m[k];
    }
    std::snprintf(buf, sizeof(buf), "\n|m| %.6f\nreward %.17g\n", std::sqrt(norm), tr.mind_change[static_cast<std::size_t>(t)]);
    out << buf;
    ep.step(a_d, a_l);
  }
  out << "end steps " << tr.length() << " goal " << (tr.goal_reached ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace probe
