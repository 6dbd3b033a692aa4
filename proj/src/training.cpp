#include "probe/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace probe {
namespace fs = std::filesystem;

const char* reward_mode_name(RewardMode m) {
  switch (m) {
    case RewardMode::MindChange: return "mind_change";
    case RewardMode::CountBased: return "count_based";
    case RewardMode::SelfSupervised: return "self_supervised";
    case RewardMode::RandomProbe: return "random_probe";
    case RewardMode::Passive: return "passive";
  }
  return "?";
}

RewardMode parse_reward_mode(const std::string& name) {
  for (RewardMode m : {RewardMode::MindChange, RewardMode::CountBased, RewardMode::SelfSupervised,
                       RewardMode::RandomProbe, RewardMode::Passive}) {
    if (name == reward_mode_name(m)) return m;
  }
  throw ConfigError("unknown reward mode: " + name);
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (entropy_weight < 0.0) throw ConfigError("entropy_weight must be non-negative");
  if (latent_dim <= 0) throw ConfigError("latent_dim must be positive");
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(optimizer.rho > 0.0 && optimizer.rho < 1.0)) throw ConfigError("rms_rho must lie in (0, 1)");
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("rms_epsilon must be positive");
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0) {
    throw ConfigError("exploration epsilon must lie in [0, 1]");
  }
  if (epsilon_end > epsilon_start) throw ConfigError("exploration epsilon must not increase");
  if (t_max < 0) throw ConfigError("t_max must be non-negative");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
  if (count_beta <= 0.0) throw ConfigError("count_beta must be positive");
  if (is_grid_task(task) && grid.task != task) throw ConfigError("grid layout is for another task");
}

KvDocument TrainConfig::to_kv() const {
  KvDocument d;
  d.set("task", task_name(task));
  d.set("reward_mode", reward_mode_name(reward_mode));
  d.set("latent_dim", latent_dim);
  d.set("iterations", iterations);
  d.set("gamma", gamma);
  d.set("entropy_weight", entropy_weight);
  d.set("learning_rate", optimizer.learning_rate);
  d.set("rms_rho", optimizer.rho);
  d.set("rms_epsilon", optimizer.epsilon);
  d.set("clip_norm", optimizer.clip_norm);
  d.set("epsilon_start", epsilon_start);
  d.set("epsilon_end", epsilon_end);
  d.set("t_max", t_max);
  d.set("checkpoint_interval", checkpoint_interval);
  d.set("seed", static_cast<long long>(seed));
  d.set("count_beta", count_beta);
  d.set("normalize_rewards", normalize_rewards ? "true" : "false");
  return d;
}

TrainConfig TrainConfig::defaults(TaskId task) {
  TrainConfig c;
  c.task = task;
  if (is_grid_task(task)) c.grid = default_grid_config(task);
  // Desk-scale budgets, calibrated on one CPU core.
  switch (task) {
    case TaskId::Passing: c.iterations = 3000; break;
    case TaskId::Maze: c.iterations = 3000; break;
    case TaskId::Construction: c.iterations = 2000; break;
    case TaskId::Sorting: c.iterations = 20000; break;
  }
  return c;
}

double probing_reward(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = b[i] - a[i];
    s += d * d;
  }
  return s;
}

double probing_reward(const std::vector<double>& m_prev, const std::vector<double>& m_cur) {
  if (m_prev.size() != m_cur.size()) throw std::invalid_argument("mind vectors differ in dimension");
  return probing_reward(m_prev.data(), m_cur.data(), static_cast<int>(m_prev.size()));
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

double epsilon_at(long long i, long long n, double start, double end) {
  if (n <= 1) return start;
  const double frac = static_cast<double>(std::clamp(i, 0LL, n - 1)) / static_cast<double>(n - 1);
  return start - (start - end) * frac;
}

std::vector<double> Trajectory::mind_before(int tick) const {
  const auto D = static_cast<std::size_t>(latent_dim);
  if (tick == 0) return std::vector<double>(D, 0.0);
  const auto off = static_cast<std::size_t>(tick - 1) * D;
  return {minds.begin() + static_cast<std::ptrdiff_t>(off), minds.begin() + static_cast<std::ptrdiff_t>(off + D)};
}

std::vector<double> Trajectory::minds_prev() const {
  std::vector<double> out;
  out.reserve(minds.size());
  for (int t = 0; t < length(); ++t) {
    const auto m = mind_before(t);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

std::vector<double> Trajectory::learner_minds_prev() const {
  std::vector<double> out;
  for (int t : learner_ticks) {
    const auto m = mind_before(t);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

FactoredAction sample_action(const std::vector<std::vector<double>>& probs, std::mt19937_64& rng) {
  FactoredAction a;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t h = 0; h < probs.size(); ++h) {
    const double x = u(rng);
    double cum = 0.0;
    int pick = static_cast<int>(probs[h].size()) - 1;
    for (std::size_t j = 0; j < probs[h].size(); ++j) {
      cum += probs[h][j];
      if (x < cum) {
        pick = static_cast<int>(j);
        break;
      }
    }
    a.part[h] = pick;
  }
  return a;
}

FactoredAction uniform_action(const std::vector<int>& heads, std::mt19937_64& rng) {
  FactoredAction a;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    a.part[h] = std::uniform_int_distribution<int>(0, heads[h] - 1)(rng);
  }
  return a;
}

FactoredAction argmax_action(const std::vector<std::vector<double>>& probs) {
  FactoredAction a;
  for (std::size_t h = 0; h < probs.size(); ++h) {
    a.part[h] = static_cast<int>(std::max_element(probs[h].begin(), probs[h].end()) - probs[h].begin());
  }
  return a;
}

Trajectory rollout(const MindModel& model, Episode ep, const RolloutOptions& o, std::mt19937_64& rng) {
  const ModelConfig& cfg = model.config();
  Trajectory tr;
  tr.latent_dim = cfg.latent_dim;
  TrackerRunner tracker(model);
  std::optional<PolicyRunner> policy;
  if (o.control == LearnerControl::Policy && ep.learner_present()) policy.emplace(model, Branch::Learner);
  const auto& heads = cfg.spec.learner_heads;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  while (!ep.terminal()) {
    ObservationTensor s_d = ep.demo_observation();
    FactoredAction a_d = ep.expert_action();
    if (o.demo_noise > 0.0) a_d = noisy_demo_action(ep.task(), a_d, o.demo_noise, rng);
    FactoredAction a_l{};
    if (ep.learner_acts()) {
      ObservationTensor s_l = ep.learner_observation();
      switch (o.control) {
        case LearnerControl::Policy: {
          const auto probs = policy->step(s_l, tracker.mind(), cfg.no_mind ? &s_d : nullptr);
          a_l = u(rng) < o.epsilon ? uniform_action(heads, rng) : sample_action(probs, rng);
          break;
        }
        case LearnerControl::Uniform: a_l = uniform_action(heads, rng); break;
        case LearnerControl::Scripted: a_l = o.script(ep); break;
      }
      tr.learner_ticks.push_back(tr.length());
      tr.learner_obs.push_back(std::move(s_l));
      if (cfg.no_mind) tr.learner_other.push_back(s_d);
      tr.learner_actions.push_back(a_l);
    }
    ep.step(a_d, a_l);
    const std::vector<double> m_prev = tracker.mind();
    const auto& m = tracker.observe(s_d, a_d);
    tr.mind_change.push_back(probing_reward(m_prev, m));
    tr.minds.insert(tr.minds.end(), m.begin(), m.end());
    tr.next_digests.push_back(ep.digest());
    tr.demo_obs.push_back(std::move(s_d));
    tr.demo_actions.push_back(a_d);
  }
  tr.goal_reached = ep.goal_reached();
  return tr;
}

namespace {

std::vector<const ObservationTensor*> pointers(const std::vector<ObservationTensor>& v) {
  std::vector<const ObservationTensor*> out;
  out.reserve(v.size());
  for (const auto& o : v) out.push_back(&o);
  return out;
}

}  // namespace

IlResult il_gradients(MindModel& model, const Trajectory& traj) {
  if (traj.length() == 0) throw std::invalid_argument("imitation needs a non-empty trajectory");
  model.params().zero_grad(Block::Tracker);
  model.params().zero_grad(Block::Demo);
  const int T = traj.length();
  const int D = model.config().latent_dim;
  const auto obs = pointers(traj.demo_obs);

  TrackerTape ttape;
  const std::vector<double> minds = model.tracker_forward(obs, traj.demo_actions, model.zero_state(), nullptr, &ttape);
  std::vector<double> m_prev(minds.size(), 0.0);
  std::copy(minds.begin(), minds.end() - D, m_prev.begin() + D);

  PolicyTape ptape;
  const PolicyOutput out = model.policy_forward(Branch::Demo, obs, nullptr, m_prev, model.zero_state(), &ptape);
  const auto& heads = model.heads(Branch::Demo);
  IlResult res;
  res.step_loss.assign(static_cast<std::size_t>(T), 0.0);
  std::vector<std::vector<double>> d_logits(heads.size());
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const int n = heads[h];
    d_logits[h].assign(static_cast<std::size_t>(T * n), 0.0);
    for (int t = 0; t < T; ++t) {
      const double* lp = out.log_probs[h].data() + static_cast<std::size_t>(t * n);
      double* g = d_logits[h].data() + static_cast<std::size_t>(t * n);
      const int a = traj.demo_actions[static_cast<std::size_t>(t)].part[h];
      res.step_loss[static_cast<std::size_t>(t)] -= lp[a];
      for (int j = 0; j < n; ++j) g[j] = std::exp(lp[j]) / T;
      g[a] -= 1.0 / T;
    }
  }
  for (double l : res.step_loss) res.loss += l;
  res.loss /= T;

  std::vector<double> d_m_prev;
  model.policy_backward(ptape, d_logits, {}, &d_m_prev);
  // m_prev row t is m^t = tracker output row t-1.
  std::vector<double> d_m(minds.size(), 0.0);
  std::copy(d_m_prev.begin() + D, d_m_prev.end(), d_m.begin());
  model.tracker_backward(ttape, d_m);
  return res;
}

IlResult il_update(MindModel& model, RmsProp& opt, const Trajectory& traj) {
  IlResult res = il_gradients(model, traj);
  if (!std::isfinite(res.loss)) throw std::runtime_error("non-finite imitation loss");
  res.applied = opt.step(model.params(), {Block::Tracker, Block::Demo}).applied;
  if (!res.applied) std::cerr << "warning: non-finite imitation gradient, update skipped\n";
  return res;
}

std::vector<double> learner_rewards(const Trajectory& traj, const std::vector<double>& tick_rewards) {
  std::vector<double> out;
  const auto& ticks = traj.learner_ticks;
  for (std::size_t k = 0; k < ticks.size(); ++k) {
    const int end = k + 1 < ticks.size() ? ticks[k + 1] : static_cast<int>(tick_rewards.size());
    double r = 0.0;
    for (int t = ticks[k]; t < end; ++t) r += tick_rewards[static_cast<std::size_t>(t)];
    out.push_back(r);
  }
  return out;
}

RlResult rl_gradients(MindModel& model, const Trajectory& traj, const std::vector<double>& rewards,
                      double gamma, double entropy_weight) {
  model.params().zero_grad(Block::Learner);
  model.params().zero_grad(Block::Value);
  RlResult res;
  const int K = static_cast<int>(traj.learner_ticks.size());
  if (K == 0) return res;
  if (static_cast<int>(rewards.size()) != K) throw std::invalid_argument("one reward per learner decision");
  const int H = model.config().hidden;
  const auto obs = pointers(traj.learner_obs);
  const auto other = pointers(traj.learner_other);
  PolicyTape tape;
  const PolicyOutput out = model.policy_forward(Branch::Learner, obs, model.config().no_mind ? &other : nullptr,
                                                traj.learner_minds_prev(), model.zero_state(), &tape);
  res.returns = discounted_returns(rewards, gamma);
  const auto& heads = model.heads(Branch::Learner);
  std::vector<std::vector<double>> d_logits(heads.size());
  for (std::size_t h = 0; h < heads.size(); ++h) d_logits[h].assign(static_cast<std::size_t>(K * heads[h]), 0.0);

  for (int k = 0; k < K; ++k) {
    const double* hk = out.hidden.data() + static_cast<std::size_t>(k * H);
    const double v = model.value(hk);
    const double R = res.returns[static_cast<std::size_t>(k)];
    const double adv = R - v;
    double logp_a = 0.0;
    double ent = 0.0;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const int n = heads[h];
      const double* lp = out.log_probs[h].data() + static_cast<std::size_t>(k * n);
      double* g = d_logits[h].data() + static_cast<std::size_t>(k * n);
      const int a = traj.learner_actions[static_cast<std::size_t>(k)].part[h];
      double eh = 0.0;
      for (int j = 0; j < n; ++j) eh -= std::exp(lp[j]) * lp[j];
      for (int j = 0; j < n; ++j) {
        const double p = std::exp(lp[j]);
        g[j] = adv * p / K + entropy_weight * p * (lp[j] + eh) / K;
      }
      g[a] -= adv / K;
      logp_a += lp[a];
      ent += eh;
    }
    res.policy_objective += (adv * logp_a + entropy_weight * ent) / K;
    res.entropy += ent / K;
    res.value_loss += 0.5 * adv * adv / K;
    model.value_backward(hk, -adv / K);
  }
  model.policy_backward(tape, d_logits, {}, nullptr);
  return res;
}

RlResult rl_update(MindModel& model, RmsProp& opt, const Trajectory& traj, const std::vector<double>& rewards,
                   double gamma, double entropy_weight) {
  RlResult res = rl_gradients(model, traj, rewards, gamma, entropy_weight);
  if (traj.learner_ticks.empty()) return res;
  if (!std::isfinite(res.policy_objective) || !std::isfinite(res.value_loss)) {
    throw std::runtime_error("non-finite actor-critic loss");
  }
  res.applied = opt.step(model.params(), {Block::Learner, Block::Value}).applied;
  if (!res.applied) std::cerr << "warning: non-finite actor-critic gradient, update skipped\n";
  return res;
}

std::vector<double> RewardScaler::scale(const std::vector<double>& rewards) {
  double ms = 0.0;
  for (double r : rewards) ms += r * r;
  if (!rewards.empty()) ms /= static_cast<double>(rewards.size());
  mean_square = kDecay * mean_square + (1.0 - kDecay) * ms;
  ++episodes;
  const double rms_now = rms();
  std::vector<double> out(rewards);
  if (rms_now > 0.0) {
    for (double& r : out) r /= rms_now;
  }
  return out;
}

double RewardScaler::rms() const {
  if (episodes == 0) return 0.0;
  return std::sqrt(mean_square / (1.0 - std::pow(kDecay, static_cast<double>(episodes))));
}

double CountBonus::visit(std::uint64_t digest) {
  const auto n = ++counts_[digest];
  return beta_ / std::sqrt(static_cast<double>(n));
}

std::string IterationRecord::to_json() const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["episode_length"] = episode_length;
  j["il_loss"] = il_loss;
  j["mean_probing_reward"] = mean_probing_reward;
  j["entropy"] = entropy;
  j["epsilon"] = epsilon;
  j["value_loss"] = value_loss;
  j["demo_success"] = demo_success;
  return j.dump();
}

ModelConfig model_config_for(const TrainConfig& config) {
  ModelConfig m;
  m.spec = is_grid_task(config.task) ? task_spec(config.task, config.grid) : task_spec(config.task);
  if (config.t_max > 0) m.spec.t_max = config.t_max;
  m.latent_dim = config.latent_dim;
  m.with_learner = config.reward_mode != RewardMode::Passive;
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Trainer::Trainer(const TrainConfig& config)
    : config_(config),
      model_(model_config_for(config), derive_seed(config.seed, 1)),
      opt_(config.optimizer),
      rng_(derive_seed(config.seed, 2)),
      counts_(config.count_beta) {
  config_.validate();
  if (config_.t_max > 0) config_.grid.t_max = config_.t_max;
}

IterationRecord Trainer::iterate() {
  const RewardMode mode = config_.reward_mode;
  IterationRecord rec;
  rec.iteration = iteration_ + 1;
  rec.epsilon = epsilon_at(iteration_, config_.iterations, config_.epsilon_start, config_.epsilon_end);

  const std::uint64_t episode_seed = rng_();
  const LearnerPresence presence = mode == RewardMode::Passive ? LearnerPresence::Absent : LearnerPresence::Active;
  Episode ep = Episode::reset(config_.task, Mode::Train, episode_seed, &config_.grid, presence);
  if (!ep.is_grid() && config_.t_max > 0) ep.sort_state().step_limit = config_.t_max;

  RolloutOptions opts;
  opts.presence = presence;
  opts.control = mode == RewardMode::RandomProbe ? LearnerControl::Uniform : LearnerControl::Policy;
  opts.epsilon = rec.epsilon;
  const Trajectory traj = rollout(model_, std::move(ep), opts, rng_);

  const IlResult il = il_update(model_, opt_, traj);
  rec.il_loss = il.loss;
  rec.episode_length = traj.length();
  rec.demo_success = traj.goal_reached;
  double total = 0.0;
  for (double r : traj.mind_change) total += r;
  rec.mean_probing_reward = total / traj.length();

  std::vector<double> tick_rewards;
  switch (mode) {
    case RewardMode::MindChange: tick_rewards = traj.mind_change; break;
    case RewardMode::CountBased:
      for (auto d : traj.next_digests) tick_rewards.push_back(counts_.visit(d));
      break;
    case RewardMode::SelfSupervised: tick_rewards = il.step_loss; break;
    case RewardMode::RandomProbe:
      for (int h : model_.heads(Branch::Learner)) rec.entropy += std::log(static_cast<double>(h));
      break;
    case RewardMode::Passive: break;
  }
  if (!tick_rewards.empty()) {
    if (config_.normalize_rewards) tick_rewards = scaler_.scale(tick_rewards);
    const RlResult rl = rl_update(model_, opt_, traj, learner_rewards(traj, tick_rewards), config_.gamma,
                                  config_.entropy_weight);
    rec.entropy = rl.entropy;
    rec.value_loss = rl.value_loss;
  }
  ++iteration_;
  return rec;
}

namespace {

std::vector<double> u64_to_doubles(const std::vector<std::uint64_t>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (auto x : v) out.push_back(std::bit_cast<double>(x));
  return out;
}

std::vector<std::uint64_t> doubles_to_u64(const std::vector<double>& v) {
  std::vector<std::uint64_t> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(std::bit_cast<std::uint64_t>(x));
  return out;
}

}  // namespace

Checkpoint Trainer::save_state() const {
  Checkpoint ckpt = model_checkpoint(model_);
  const KvDocument train_kv = config_.to_kv();
  for (const auto& [k, v] : train_kv.entries()) ckpt.manifest.set("train." + k, v);
  ckpt.manifest.set("iteration", iteration_);
  std::ostringstream rng;
  rng << rng_;
  ckpt.manifest.set("rng", rng.str());
  for (const auto& [name, acc] : opt_.state()) ckpt.arrays["rms/" + name] = acc;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> counts(counts_.counts().begin(), counts_.counts().end());
  std::sort(counts.begin(), counts.end());
  std::vector<std::uint64_t> keys, values;
  for (const auto& [k, v] : counts) {
    keys.push_back(k);
    values.push_back(v);
  }
  ckpt.arrays["counts/keys"] = u64_to_doubles(keys);
  ckpt.arrays["counts/values"] = u64_to_doubles(values);
  ckpt.arrays["reward_scale"] = {scaler_.mean_square, static_cast<double>(scaler_.episodes)};
  return ckpt;
}

void Trainer::load_state(const Checkpoint& ckpt) {
  restore_blocks(model_, ckpt, {Block::Tracker, Block::Demo, Block::Learner, Block::Value});
  iteration_ = ckpt.manifest.get_int("iteration");
  std::istringstream rng(ckpt.manifest.get_string("rng"));
  rng >> rng_;
  if (!rng) throw std::runtime_error("checkpoint has a corrupt RNG state");
  opt_.state().clear();
  for (const auto& [name, values] : ckpt.arrays) {
    if (name.rfind("rms/", 0) == 0) opt_.state()[name.substr(4)] = values;
  }
  counts_.counts().clear();
  const auto keys = doubles_to_u64(ckpt.arrays.at("counts/keys"));
  const auto values = doubles_to_u64(ckpt.arrays.at("counts/values"));
  for (std::size_t i = 0; i < keys.size(); ++i) counts_.counts()[keys[i]] = values[i];
  scaler_ = RewardScaler{};
  if (auto it = ckpt.arrays.find("reward_scale"); it != ckpt.arrays.end() && it->second.size() == 2) {
    scaler_.mean_square = it->second[0];
    scaler_.episodes = static_cast<long long>(it->second[1]);
  }
}

std::vector<std::pair<long long, std::string>> list_checkpoints(const std::string& out_dir) {
  std::vector<std::pair<long long, std::string>> out;
  const fs::path dir = fs::path(out_dir) / "checkpoints";
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    long long it = 0;
    if (std::sscanf(name.c_str(), "iter_%lld.ckpt", &it) == 1 && name.size() > 5 &&
        name.substr(name.size() - 5) == ".ckpt") {
      out.emplace_back(it, entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::string checkpoint_path(const std::string& out_dir, long long iteration) {
  char name[64];
  std::snprintf(name, sizeof(name), "iter_%08lld.ckpt", iteration);
  return (fs::path(out_dir) / "checkpoints" / name).string();
}

// Keeps only the first `lines` lines of a file.
void truncate_lines(const std::string& path, long long lines) {
  std::ifstream in(path);
  std::string kept;
  std::string line;
  for (long long i = 0; i < lines && std::getline(in, line); ++i) kept += line + "\n";
  in.close();
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << kept;
}

}  // namespace

TrainSummary train(const TrainConfig& config, const std::string& out_dir) {
  TrainSummary summary;
  fs::create_directories(fs::path(out_dir) / "checkpoints");
  Trainer trainer(config);
  const std::string metrics_path = (fs::path(out_dir) / "metrics.jsonl").string();
  const std::string timing_path = (fs::path(out_dir) / "timing.jsonl").string();
  const auto existing = list_checkpoints(out_dir);
  if (!existing.empty()) {
    trainer.load_state(read_checkpoint(existing.back().second));
    summary.resumed = true;
    truncate_lines(metrics_path, trainer.iteration());
    truncate_lines(timing_path, trainer.iteration());
  } else {
    std::ofstream(metrics_path, std::ios::trunc);
    std::ofstream(timing_path, std::ios::trunc);
  }
  std::ofstream metrics(metrics_path, std::ios::app | std::ios::binary);
  std::ofstream timing(timing_path, std::ios::app | std::ios::binary);
  if (!metrics || !timing) throw std::runtime_error("cannot write metrics under " + out_dir);

  const auto start = std::chrono::steady_clock::now();
  while (!trainer.finished()) {
    const IterationRecord rec = trainer.iterate();
    metrics << rec.to_json() << '\n';
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    timing << "{\"iteration\":" << rec.iteration << ",\"wall_time\":" << wall << "}\n";
    summary.records.push_back(rec);
    const bool periodic = config.checkpoint_interval > 0 && rec.iteration % config.checkpoint_interval == 0;
    if (periodic || trainer.finished()) {
      metrics.flush();
      timing.flush();
      const std::string path = checkpoint_path(out_dir, rec.iteration);
      write_checkpoint(path, trainer.save_state());
      summary.checkpoints.push_back(path);
    }
  }
  if (!metrics) throw std::runtime_error("failed writing " + metrics_path);
  const std::string final_path = (fs::path(out_dir) / "final.ckpt").string();
  write_checkpoint(final_path, trainer.save_state());
  summary.checkpoints.push_back(final_path);
  return summary;
}

}  // namespace probe
