#include "probe/mind_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "probe/kernels.hpp"

namespace probe {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t sz(long long n) { return static_cast<std::size_t>(n); }

void add_bias(std::vector<double>& y, int rows, const std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  for (int r = 0; r < rows; ++r) {
    double* row = y.data() + sz(static_cast<long long>(r) * n);
    for (int j = 0; j < n; ++j) row[j] += b[sz(j)];
  }
}

void relu(std::vector<double>& y) {
  for (double& v : y) v = v > 0.0 ? v : 0.0;
}

// y = W x + b over `rows` samples.
std::vector<double> dense(const Param& w, const Param& b, const std::vector<double>& x, int rows) {
  std::vector<double> y(sz(static_cast<long long>(rows) * w.rows));
  kernels::active().gemm_nt(w.w(), sz(w.rows), sz(w.cols), x.data(), sz(rows), y.data());
  add_bias(y, rows, b.value);
  return y;
}

// Accumulates weight/bias gradients of a dense layer; returns dx when asked.
std::vector<double> dense_backward(Param& w, Param& b, const std::vector<double>& x,
                                   const std::vector<double>& dy, int rows, bool want_dx) {
  const auto& k = kernels::active();
  k.outer_acc(dy.data(), sz(rows), sz(w.rows), x.data(), sz(w.cols), w.g());
  for (int r = 0; r < rows; ++r) {
    const double* g = dy.data() + sz(static_cast<long long>(r) * w.rows);
    for (int j = 0; j < w.rows; ++j) b.grad[sz(j)] += g[j];
  }
  std::vector<double> dx;
  if (want_dx) {
    dx.assign(sz(static_cast<long long>(rows) * w.cols), 0.0);
    k.gemm_tn_acc(dy.data(), sz(rows), sz(w.rows), w.w(), sz(w.cols), dx.data());
  }
  return dx;
}

void relu_backward(std::vector<double>& d, const std::vector<double>& post) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (post[i] <= 0.0) d[i] = 0.0;
  }
}

void check_obs(const ObservationTensor& o, const TaskSpec& spec) {
  if (o.height != spec.height || o.width != spec.width || o.channels != spec.channels) {
    throw std::invalid_argument("observation shape does not match the model");
  }
}

}  // namespace

void log_softmax_rows(std::vector<double>& x, int rows, int n) {
  for (int r = 0; r < rows; ++r) {
    double* row = x.data() + sz(static_cast<long long>(r) * n);
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < n; ++j) row[j] -= lse;
  }
}

KvDocument ModelConfig::to_kv() const {
  KvDocument d;
  d.set("task", task_name(spec.task));
  d.set("latent_dim", latent_dim);
  d.set("filters", filters);
  d.set("hidden", hidden);
  d.set("with_learner", with_learner ? "true" : "false");
  d.set("no_mind", no_mind ? "true" : "false");
  d.set("t_max", spec.t_max);
  d.set("obs_shape", std::to_string(spec.height) + "x" + std::to_string(spec.width) + "x" +
                         std::to_string(spec.channels));
  auto heads = [](const std::vector<int>& h) {
    std::string s;
    for (std::size_t i = 0; i < h.size(); ++i) s += (i ? "," : "") + std::to_string(h[i]);
    return s;
  };
  d.set("demo_heads", heads(spec.demo_heads));
  d.set("learner_heads", heads(spec.learner_heads));
  return d;
}

ModelConfig ModelConfig::from_kv(const KvDocument& d) {
  ModelConfig c;
  c.spec = task_spec(parse_task(d.get_string("task")));
  c.spec.t_max = static_cast<int>(d.get_int("t_max", c.spec.t_max));
  c.latent_dim = static_cast<int>(d.get_int("latent_dim"));
  c.filters = static_cast<int>(d.get_int("filters"));
  c.hidden = static_cast<int>(d.get_int("hidden"));
  c.with_learner = d.get_bool("with_learner");
  c.no_mind = d.get_bool("no_mind");
  // Shapes are derived from the task; a stored mismatch means an incompatible file.
  const ModelConfig derived = c;
  if (d.get_string("demo_heads") != derived.to_kv().get_string("demo_heads") ||
      d.get_string("learner_heads") != derived.to_kv().get_string("learner_heads") ||
      d.get_string("obs_shape") != derived.to_kv().get_string("obs_shape")) {
    throw ConfigError("checkpoint shapes do not match task " + d.get_string("task"));
  }
  return c;
}

MindModel::MindModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  const int P = config_.spec.cells();
  const int F = config_.filters;
  const int H = config_.hidden;
  const int D = config_.latent_dim;
  if (D <= 0 || F <= 0 || H <= 0) throw std::invalid_argument("model sizes must be positive");
  std::mt19937_64 rng(seed);
  auto weight = [&](const std::string& name, Block blk, int rows, int cols) {
    const int i = params_.add(name, blk, rows, cols);
    glorot_uniform(params_[i], cols, rows, rng);
    return i;
  };
  auto bias = [&](const std::string& name, Block blk, int rows) { return params_.add(name, blk, rows, 1); };
  auto lstm_bias = [&](const std::string& name, Block blk) {
    const int i = bias(name, blk, 4 * H);
    for (int j = H; j < 2 * H; ++j) params_[i].value[sz(j)] = 1.0;  // forget gate
    return i;
  };

  const int tin = config_.tracker_input_channels();
  t_conv_w_ = weight("tracker.conv.w", Block::Tracker, F, tin);
  t_conv_b_ = bias("tracker.conv.b", Block::Tracker, F);
  t_fc1_w_ = weight("tracker.fc1.w", Block::Tracker, H, P * F);
  t_fc1_b_ = bias("tracker.fc1.b", Block::Tracker, H);
  t_fc2_w_ = weight("tracker.fc2.w", Block::Tracker, H, H);
  t_fc2_b_ = bias("tracker.fc2.b", Block::Tracker, H);
  t_lstm_wx_ = weight("tracker.lstm.wx", Block::Tracker, 4 * H, H);
  t_lstm_wh_ = weight("tracker.lstm.wh", Block::Tracker, 4 * H, H);
  t_lstm_b_ = lstm_bias("tracker.lstm.b", Block::Tracker);
  t_out_w_ = weight("tracker.out.w", Block::Tracker, D, H);
  t_out_b_ = bias("tracker.out.b", Block::Tracker, D);

  auto make_branch = [&](BranchParams& bp, const std::string& pre, Block blk, int cin, bool fuse,
                         const std::vector<int>& heads) {
    bp.conv_w = weight(pre + ".conv.w", blk, F, cin);
    bp.conv_b = bias(pre + ".conv.b", blk, F);
    if (fuse) {
      bp.att_w = weight(pre + ".att.w", blk, F, D);
      bp.att_b = bias(pre + ".att.b", blk, F);
    }
    bp.lstm_wx = weight(pre + ".lstm.wx", blk, 4 * H, P * F);
    bp.lstm_wh = weight(pre + ".lstm.wh", blk, 4 * H, H);
    bp.lstm_b = lstm_bias(pre + ".lstm.b", blk);
    for (std::size_t k = 0; k < heads.size(); ++k) {
      const std::string name = pre + ".head" + std::to_string(k);
      bp.head_w.push_back(weight(name + ".w", blk, heads[k], H));
      bp.head_b.push_back(bias(name + ".b", blk, heads[k]));
    }
  };
  make_branch(demo_, "demo", Block::Demo, config_.demo_input_channels(), true, config_.spec.demo_heads);
  if (config_.with_learner) {
    make_branch(learner_, "learner", Block::Learner, config_.learner_input_channels(),
                !config_.no_mind, config_.spec.learner_heads);
    v_w_ = weight("value.w", Block::Value, 1, H);
    v_b_ = bias("value.b", Block::Value, 1);
  }
}

LstmState MindModel::zero_state() const {
  const auto H = sz(config_.hidden);
  return {std::vector<double>(H, 0.0), std::vector<double>(H, 0.0)};
}

void MindModel::lstm_forward(int wx, int wh, int b, const std::vector<double>& x, int in, int steps,
                             const LstmState& start, LstmTape* tape, std::vector<double>& h_out,
                             LstmState* final_state) const {
  const auto& k = kernels::active();
  const int H = config_.hidden;
  const Param& Wx = params_[wx];
  const Param& Wh = params_[wh];
  const Param& B = params_[b];
  std::vector<double> xproj(sz(static_cast<long long>(steps) * 4 * H));
  k.gemm_nt(Wx.w(), sz(4 * H), sz(in), x.data(), sz(steps), xproj.data());
  h_out.assign(sz(static_cast<long long>(steps) * H), 0.0);
  std::vector<double> h = start.h;
  std::vector<double> c = start.c;
  std::vector<double> rec(sz(4 * H));
  std::vector<double> gates(sz(4 * H));
  if (tape) {
    tape->steps = steps;
    const auto n = sz(static_cast<long long>(steps) * H);
    tape->gates.assign(n * 4, 0.0);
    tape->c.assign(n, 0.0);
    tape->tanh_c.assign(n, 0.0);
    tape->h_prev.assign(n, 0.0);
    tape->c_prev.assign(n, 0.0);
    tape->h.assign(n, 0.0);
  }
  for (int t = 0; t < steps; ++t) {
    k.gemm_nt(Wh.w(), sz(4 * H), sz(H), h.data(), 1, rec.data());
    const double* xp = xproj.data() + sz(static_cast<long long>(t) * 4 * H);
    for (int j = 0; j < 4 * H; ++j) {
      const double pre = xp[j] + rec[sz(j)] + B.value[sz(j)];
      gates[sz(j)] = (j >= 2 * H && j < 3 * H) ? std::tanh(pre) : sigmoid(pre);
    }
    if (tape) {
      const auto off = sz(static_cast<long long>(t) * H);
      std::copy(h.begin(), h.end(), tape->h_prev.begin() + static_cast<std::ptrdiff_t>(off));
      std::copy(c.begin(), c.end(), tape->c_prev.begin() + static_cast<std::ptrdiff_t>(off));
      std::copy(gates.begin(), gates.end(),
                tape->gates.begin() + static_cast<std::ptrdiff_t>(off * 4));
    }
    for (int j = 0; j < H; ++j) {
      const double ig = gates[sz(j)];
      const double fg = gates[sz(H + j)];
      const double gg = gates[sz(2 * H + j)];
      const double og = gates[sz(3 * H + j)];
      c[sz(j)] = fg * c[sz(j)] + ig * gg;
      const double tc = std::tanh(c[sz(j)]);
      h[sz(j)] = og * tc;
      if (tape) {
        const auto at = sz(static_cast<long long>(t) * H + j);
        tape->c[at] = c[sz(j)];
        tape->tanh_c[at] = tc;
        tape->h[at] = h[sz(j)];
      }
    }
    std::copy(h.begin(), h.end(), h_out.begin() + static_cast<std::ptrdiff_t>(t) * H);
  }
  if (final_state) *final_state = {h, c};
}

std::vector<double> MindModel::lstm_backward(int wx, int wh, int b, const std::vector<double>& x,
                                             int in, const LstmTape& tape, std::vector<double> d_h,
                                             bool want_dx) {
  const auto& k = kernels::active();
  const int H = config_.hidden;
  const int T = tape.steps;
  Param& Wx = params_[wx];
  Param& Wh = params_[wh];
  Param& B = params_[b];
  std::vector<double> d_pre(sz(static_cast<long long>(T) * 4 * H), 0.0);
  std::vector<double> dc(sz(H), 0.0);
  std::vector<double> dh_rec(sz(H), 0.0);
  for (int t = T - 1; t >= 0; --t) {
    const auto off = sz(static_cast<long long>(t) * H);
    const double* g = tape.gates.data() + off * 4;
    double* dp = d_pre.data() + off * 4;
    for (int j = 0; j < H; ++j) {
      const double dh = d_h[off + sz(j)] + dh_rec[sz(j)];
      const double ig = g[j], fg = g[H + j], gg = g[2 * H + j], og = g[3 * H + j];
      const double tc = tape.tanh_c[off + sz(j)];
      const double dct = dc[sz(j)] + dh * og * (1.0 - tc * tc);
      dp[j] = dct * gg * ig * (1.0 - ig);
      dp[H + j] = dct * tape.c_prev[off + sz(j)] * fg * (1.0 - fg);
      dp[2 * H + j] = dct * ig * (1.0 - gg * gg);
      dp[3 * H + j] = dh * tc * og * (1.0 - og);
      dc[sz(j)] = dct * fg;
    }
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    k.gemm_tn_acc(dp, 1, sz(4 * H), Wh.w(), sz(H), dh_rec.data());
  }
  k.outer_acc(d_pre.data(), sz(T), sz(4 * H), tape.h_prev.data(), sz(H), Wh.g());
  for (int t = 0; t < T; ++t) {
    const double* dp = d_pre.data() + sz(static_cast<long long>(t) * 4 * H);
    for (int j = 0; j < 4 * H; ++j) B.grad[sz(j)] += dp[j];
  }
  k.outer_acc(d_pre.data(), sz(T), sz(4 * H), x.data(), sz(in), Wx.g());
  std::vector<double> dx;
  if (want_dx) {
    dx.assign(sz(static_cast<long long>(T) * in), 0.0);
    k.gemm_tn_acc(d_pre.data(), sz(T), sz(4 * H), Wx.w(), sz(in), dx.data());
  }
  return dx;
}

std::vector<double> MindModel::tracker_forward(const std::vector<const ObservationTensor*>& obs,
                                               const std::vector<FactoredAction>& actions,
                                               const LstmState& start, LstmState* final_state,
                                               TrackerTape* tape) const {
  if (obs.size() != actions.size()) throw std::invalid_argument("tracker needs one action per state");
  const TaskSpec& spec = config_.spec;
  const int T = static_cast<int>(obs.size());
  const int P = spec.cells();
  const int C = spec.channels;
  const int cin = config_.tracker_input_channels();
  std::vector<double> input(sz(static_cast<long long>(T) * P * cin), 0.0);
  for (int t = 0; t < T; ++t) {
    check_obs(*obs[sz(t)], spec);
    // Action channels: one block per head, the chosen entry set on every cell.
    std::vector<int> hot;
    int base = C;
    for (std::size_t h = 0; h < spec.demo_heads.size(); ++h) {
      const int a = actions[sz(t)].part[h];
      if (a < 0 || a >= spec.demo_heads[h]) throw std::invalid_argument("demonstrator action out of range");
      hot.push_back(base + a);
      base += spec.demo_heads[h];
    }
    for (int cell = 0; cell < P; ++cell) {
      double* row = input.data() + sz((static_cast<long long>(t) * P + cell) * cin);
      const double* o = obs[sz(t)]->data.data() + sz(static_cast<long long>(cell) * C);
      std::copy(o, o + C, row);
      for (int j : hot) row[j] = 1.0;
    }
  }
  std::vector<double> feat = dense(params_[t_conv_w_], params_[t_conv_b_], input, T * P);
  relu(feat);
  std::vector<double> z1 = dense(params_[t_fc1_w_], params_[t_fc1_b_], feat, T);
  relu(z1);
  std::vector<double> z2 = dense(params_[t_fc2_w_], params_[t_fc2_b_], z1, T);
  relu(z2);
  std::vector<double> h;
  lstm_forward(t_lstm_wx_, t_lstm_wh_, t_lstm_b_, z2, config_.hidden, T, start,
               tape ? &tape->lstm : nullptr, h, final_state);
  std::vector<double> m = dense(params_[t_out_w_], params_[t_out_b_], h, T);
  if (tape) {
    tape->steps = T;
    tape->input = std::move(input);
    tape->feat = std::move(feat);
    tape->z1 = std::move(z1);
    tape->z2 = std::move(z2);
    tape->consumed = false;
  }
  return m;
}

void MindModel::tracker_backward(TrackerTape& tape, const std::vector<double>& d_m) {
  if (tape.consumed) throw std::logic_error("backward called twice on one forward pass");
  tape.consumed = true;
  const int T = tape.steps;
  const int P = config_.spec.cells();
  auto d_h = dense_backward(params_[t_out_w_], params_[t_out_b_], tape.lstm.h, d_m, T, true);
  auto d_z2 = lstm_backward(t_lstm_wx_, t_lstm_wh_, t_lstm_b_, tape.z2, config_.hidden, tape.lstm,
                            std::move(d_h), true);
  relu_backward(d_z2, tape.z2);
  auto d_z1 = dense_backward(params_[t_fc2_w_], params_[t_fc2_b_], tape.z1, d_z2, T, true);
  relu_backward(d_z1, tape.z1);
  auto d_feat = dense_backward(params_[t_fc1_w_], params_[t_fc1_b_], tape.feat, d_z1, T, true);
  relu_backward(d_feat, tape.feat);
  dense_backward(params_[t_conv_w_], params_[t_conv_b_], tape.input, d_feat, T * P, false);
}

PolicyOutput MindModel::policy_forward(Branch which, const std::vector<const ObservationTensor*>& obs,
                                       const std::vector<const ObservationTensor*>* other,
                                       const std::vector<double>& m_prev, const LstmState& start,
                                       PolicyTape* tape) const {
  if (which == Branch::Learner && !config_.with_learner) {
    throw std::logic_error("model was built without a learner branch");
  }
  const TaskSpec& spec = config_.spec;
  const BranchParams& bp = branch(which);
  const bool fuse = fused(which);
  const int T = static_cast<int>(obs.size());
  const int P = spec.cells();
  const int C = spec.channels;
  const int F = config_.filters;
  const int D = config_.latent_dim;
  const int cin = which == Branch::Demo ? config_.demo_input_channels() : config_.learner_input_channels();
  const bool stacked = cin != C;
  if (stacked && (!other || other->size() != obs.size())) {
    throw std::invalid_argument("no-mind learner needs the demonstrator's view for every step");
  }
  if (fuse && m_prev.size() != sz(static_cast<long long>(T) * D)) {
    throw std::invalid_argument("m_prev must hold one mind vector per step");
  }

  std::vector<double> input(sz(static_cast<long long>(T) * P * cin), 0.0);
  for (int t = 0; t < T; ++t) {
    check_obs(*obs[sz(t)], spec);
    if (stacked) check_obs(*(*other)[sz(t)], spec);
    for (int cell = 0; cell < P; ++cell) {
      double* row = input.data() + sz((static_cast<long long>(t) * P + cell) * cin);
      const double* o = obs[sz(t)]->data.data() + sz(static_cast<long long>(cell) * C);
      std::copy(o, o + C, row);
      if (stacked) {
        const double* q = (*other)[sz(t)]->data.data() + sz(static_cast<long long>(cell) * C);
        std::copy(q, q + C, row + C);
      }
    }
  }
  std::vector<double> feat = dense(params_[bp.conv_w], params_[bp.conv_b], input, T * P);
  relu(feat);
  std::vector<double> att;
  std::vector<double> fused_maps;
  if (fuse) {
    att = dense(params_[bp.att_w], params_[bp.att_b], m_prev, T);
    for (double& a : att) a = sigmoid(a);
    fused_maps.resize(feat.size());
    for (int t = 0; t < T; ++t) {
      const double* a = att.data() + sz(static_cast<long long>(t) * F);
      for (int cell = 0; cell < P; ++cell) {
        const auto off = sz((static_cast<long long>(t) * P + cell) * F);
        for (int f = 0; f < F; ++f) fused_maps[off + sz(f)] = a[f] * feat[off + sz(f)];
      }
    }
  }
  const std::vector<double>& lstm_in = fuse ? fused_maps : feat;

  PolicyOutput out;
  lstm_forward(bp.lstm_wx, bp.lstm_wh, bp.lstm_b, lstm_in, P * F, T, start,
               tape ? &tape->lstm : nullptr, out.hidden, &out.final_state);
  const auto& heads = this->heads(which);
  for (std::size_t k = 0; k < heads.size(); ++k) {
    std::vector<double> logits = dense(params_[bp.head_w[k]], params_[bp.head_b[k]], out.hidden, T);
    log_softmax_rows(logits, T, heads[k]);
    out.log_probs.push_back(std::move(logits));
  }
  if (tape) {
    tape->branch = which;
    tape->steps = T;
    tape->input = std::move(input);
    tape->feat = std::move(feat);
    tape->m_prev = fuse ? m_prev : std::vector<double>{};
    tape->att = std::move(att);
    tape->fused = std::move(fused_maps);
    tape->consumed = false;
  }
  return out;
}

void MindModel::policy_backward(PolicyTape& tape, const std::vector<std::vector<double>>& d_logits,
                                const std::vector<double>& d_hidden, std::vector<double>* d_m_prev) {
  if (tape.consumed) throw std::logic_error("backward called twice on one forward pass");
  tape.consumed = true;
  const BranchParams& bp = branch(tape.branch);
  const bool fuse = fused(tape.branch);
  const int T = tape.steps;
  const int P = config_.spec.cells();
  const int F = config_.filters;
  const int H = config_.hidden;
  const auto& heads = this->heads(tape.branch);
  if (d_logits.size() != heads.size()) throw std::invalid_argument("one logit gradient per head");

  std::vector<double> d_h = d_hidden.empty() ? std::vector<double>(sz(static_cast<long long>(T) * H), 0.0)
                                             : d_hidden;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    auto dh = dense_backward(params_[bp.head_w[k]], params_[bp.head_b[k]], tape.lstm.h, d_logits[k], T, true);
    for (std::size_t i = 0; i < d_h.size(); ++i) d_h[i] += dh[i];
  }
  const std::vector<double>& lstm_in = fuse ? tape.fused : tape.feat;
  auto d_in = lstm_backward(bp.lstm_wx, bp.lstm_wh, bp.lstm_b, lstm_in, P * F, tape.lstm, std::move(d_h), true);

  std::vector<double> d_feat;
  if (fuse) {
    d_feat.resize(d_in.size());
    std::vector<double> d_att(sz(static_cast<long long>(T) * F), 0.0);
    for (int t = 0; t < T; ++t) {
      const double* a = tape.att.data() + sz(static_cast<long long>(t) * F);
      double* da = d_att.data() + sz(static_cast<long long>(t) * F);
      for (int cell = 0; cell < P; ++cell) {
        const auto off = sz((static_cast<long long>(t) * P + cell) * F);
        for (int f = 0; f < F; ++f) {
          da[f] += d_in[off + sz(f)] * tape.feat[off + sz(f)];
          d_feat[off + sz(f)] = d_in[off + sz(f)] * a[f];
        }
      }
    }
    for (std::size_t i = 0; i < d_att.size(); ++i) d_att[i] *= tape.att[i] * (1.0 - tape.att[i]);
    auto dm = dense_backward(params_[bp.att_w], params_[bp.att_b], tape.m_prev, d_att, T, d_m_prev != nullptr);
    if (d_m_prev) *d_m_prev = std::move(dm);
  } else {
    d_feat = std::move(d_in);
    if (d_m_prev) d_m_prev->assign(sz(static_cast<long long>(T) * config_.latent_dim), 0.0);
  }
  relu_backward(d_feat, tape.feat);
  dense_backward(params_[bp.conv_w], params_[bp.conv_b], tape.input, d_feat, T * P, false);
}

double MindModel::value(const double* h) const {
  const Param& w = params_[v_w_];
  return kernels::active().dot(w.w(), h, sz(config_.hidden)) + params_[v_b_].value[0];
}

void MindModel::value_backward(const double* h, double d_value) {
  Param& w = params_[v_w_];
  kernels::active().axpy(d_value, h, w.g(), sz(config_.hidden));
  params_[v_b_].grad[0] += d_value;
}

TrackerRunner::TrackerRunner(const MindModel& model)
    : model_(&model), state_(model.zero_state()), m_(sz(model.config().latent_dim), 0.0) {}

const std::vector<double>& TrackerRunner::observe(const ObservationTensor& s_d, FactoredAction a_d) {
  LstmState next;
  m_ = model_->tracker_forward({&s_d}, {a_d}, state_, &next, nullptr);
  state_ = std::move(next);
  return m_;
}

PolicyRunner::PolicyRunner(const MindModel& model, Branch branch)
    : model_(&model), branch_(branch), state_(model.zero_state()) {}

std::vector<std::vector<double>> PolicyRunner::step(const ObservationTensor& s,
                                                    const std::vector<double>& m_prev,
                                                    const ObservationTensor* other) {
  std::vector<const ObservationTensor*> others{other};
  auto out = model_->policy_forward(branch_, {&s}, other ? &others : nullptr, m_prev, state_, nullptr);
  state_ = out.final_state;
  std::vector<std::vector<double>> probs;
  for (auto& lp : out.log_probs) {
    for (double& v : lp) v = std::exp(v);
    probs.push_back(std::move(lp));
  }
  return probs;
}

}  // namespace probe
