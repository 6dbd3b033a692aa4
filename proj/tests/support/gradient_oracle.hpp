#pragma once

// Losses recomputed from plain forward passes, and a central-difference
// comparison against the analytic gradients left in the parameter store.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "probe/mind_model.hpp"
#include "probe/training.hpp"

namespace probe::testing {

inline std::vector<const ObservationTensor*> ptrs(const std::vector<ObservationTensor>& v) {
  std::vector<const ObservationTensor*> out;
  for (const auto& o : v) out.push_back(&o);
  return out;
}

inline double il_loss_oracle(const MindModel& model, const Trajectory& traj) {
  const int T = traj.length();
  const int D = model.config().latent_dim;
  const auto obs = ptrs(traj.demo_obs);
  const std::vector<double> M = model.tracker_forward(obs, traj.demo_actions, model.zero_state(), nullptr, nullptr);
  std::vector<double> m_prev(static_cast<std::size_t>(T * D), 0.0);
  std::copy(M.begin(), M.end() - D, m_prev.begin() + D);
  const PolicyOutput out = model.policy_forward(Branch::Demo, obs, nullptr, m_prev, model.zero_state(), nullptr);
  double loss = 0.0;
  const auto& heads = model.heads(Branch::Demo);
  for (int t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      loss -= out.log_probs[h][static_cast<std::size_t>(t * heads[h] + traj.demo_actions[static_cast<std::size_t>(t)].part[h])];
    }
  }
  return loss / T;
}

struct RlBase {
  std::vector<double> hidden;      // K x H at the base parameters, detached
  std::vector<double> advantages;  // detached
  std::vector<double> returns;
};

inline RlBase rl_base(const MindModel& model, const Trajectory& traj, const std::vector<double>& rewards, double gamma) {
  RlBase b;
  const auto other = ptrs(traj.learner_other);
  const auto out = model.policy_forward(Branch::Learner, ptrs(traj.learner_obs),
                                        model.config().no_mind ? &other : nullptr, traj.learner_minds_prev(),
                                        model.zero_state(), nullptr);
  b.hidden = out.hidden;
  b.returns = discounted_returns(rewards, gamma);
  const int H = model.config().hidden;
  for (std::size_t k = 0; k < b.returns.size(); ++k) {
    b.advantages.push_back(b.returns[k] - model.value(b.hidden.data() + k * static_cast<std::size_t>(H)));
  }
  return b;
}

// Actor-critic surrogate with the advantages held fixed and V read from the
// base hidden states.
inline double rl_loss_oracle(const MindModel& model, const Trajectory& traj, const RlBase& base, double lambda) {
  const int K = static_cast<int>(traj.learner_ticks.size());
  const int H = model.config().hidden;
  const auto other = ptrs(traj.learner_other);
  const auto out = model.policy_forward(Branch::Learner, ptrs(traj.learner_obs),
                                        model.config().no_mind ? &other : nullptr, traj.learner_minds_prev(),
                                        model.zero_state(), nullptr);
  const auto& heads = model.heads(Branch::Learner);
  double loss = 0.0;
  for (int k = 0; k < K; ++k) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const double* lp = out.log_probs[h].data() + static_cast<std::size_t>(k * heads[h]);
      double ent = 0.0;
      for (int j = 0; j < heads[h]; ++j) ent -= std::exp(lp[j]) * lp[j];
      loss -= base.advantages[static_cast<std::size_t>(k)] * lp[traj.learner_actions[static_cast<std::size_t>(k)].part[h]];
      loss -= lambda * ent;
    }
    const double v = model.value(base.hidden.data() + static_cast<std::size_t>(k * H));
    const double e = base.returns[static_cast<std::size_t>(k)] - v;
    loss += 0.5 * e * e;
  }
  return loss / K;
}

// Zero biases put many ReLU inputs exactly on the kink (empty cells feed the
// conv nothing but its bias); jitter them so differences are taken on one side.
inline void jitter_biases(MindModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& p : model.params().all()) {
    if (p.cols != 1) continue;
    for (double& b : p.value) b += u(rng);
  }
}

struct GradientError {
  std::string name;
  double relative = 0.0;
};

// ||fd - analytic|| / max(||fd||, ||analytic||) per parameter array of the
// given blocks.
template <class Loss>
std::vector<GradientError> gradient_errors(MindModel& model, const std::vector<Block>& blocks, Loss loss) {
  const double h = 1e-6;
  std::vector<GradientError> out;
  for (auto& p : model.params().all()) {
    if (std::find(blocks.begin(), blocks.end(), p.block) == blocks.end()) continue;
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p.value[i];
      p.value[i] = keep + h;
      const double up = loss();
      p.value[i] = keep - h;
      const double down = loss();
      p.value[i] = keep;
      const double fd = (up - down) / (2 * h);
      diff += (fd - p.grad[i]) * (fd - p.grad[i]);
      na += p.grad[i] * p.grad[i];
      nf += fd * fd;
    }
    const double scale = std::max({std::sqrt(na), std::sqrt(nf), 1e-7});
    out.push_back({p.name, std::sqrt(diff) / scale});
  }
  return out;
}

}  // namespace probe::testing
