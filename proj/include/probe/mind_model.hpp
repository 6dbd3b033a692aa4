#pragma once

#include <cstdint>
#include <vector>

#include "probe/episode.hpp"
#include "probe/kv_document.hpp"
#include "probe/observation.hpp"
#include "probe/tensor.hpp"

namespace probe {

struct ModelConfig {
  TaskSpec spec;
  int latent_dim = 8;
  int filters = 32;
  int hidden = 128;
  bool with_learner = true;  // allocate the learner policy and value blocks
  bool no_mind = false;      // learner sees both views stacked and ignores m

  int demo_input_channels() const { return spec.channels; }
  int learner_input_channels() const { return no_mind ? 2 * spec.channels : spec.channels; }
  int tracker_input_channels() const { return spec.channels + spec.demo_action_channels(); }

  KvDocument to_kv() const;
  static ModelConfig from_kv(const KvDocument& doc);
};

enum class Branch { Demo, Learner };

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

// Forward values of one LSTM pass kept for backpropagation through time.
struct LstmTape {
  int steps = 0;
  std::vector<double> gates;  // T x 4H, post-activation, order i f g o
  std::vector<double> c;      // T x H
  std::vector<double> tanh_c; // T x H
  std::vector<double> h_prev; // T x H
  std::vector<double> c_prev; // T x H
  std::vector<double> h;      // T x H
};

struct TrackerTape {
  int steps = 0;
  std::vector<double> input;  // (T*P) x Cin
  std::vector<double> feat;   // T x P*F (post-relu)
  std::vector<double> z1;     // T x H
  std::vector<double> z2;     // T x H
  LstmTape lstm;
  bool consumed = false;
};

struct PolicyTape {
  Branch branch = Branch::Demo;
  int steps = 0;
  std::vector<double> input;   // (T*P) x Cin
  std::vector<double> feat;    // T x P*F
  std::vector<double> m_prev;  // T x D
  std::vector<double> att;     // T x F
  std::vector<double> fused;   // T x P*F
  LstmTape lstm;
  bool consumed = false;
};

struct PolicyOutput {
  std::vector<std::vector<double>> log_probs;  // per head, T x n_k
  std::vector<double> hidden;                  // T x H (LSTM output)
  LstmState final_state;
};

// The learner's model of the demonstrator: behaviour tracker, demonstrator
// policy, learner policy and value head, each a disjoint parameter block.
class MindModel {
 public:
  MindModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  LstmState zero_state() const;

  // Tracker over `steps` consecutive (s_d, a_d) pairs starting from `start`.
  // Returns m^1..m^T as a T x D array; `final_state` receives the last state.
  std::vector<double> tracker_forward(const std::vector<const ObservationTensor*>& obs,
                                      const std::vector<FactoredAction>& actions,
                                      const LstmState& start, LstmState* final_state,
                                      TrackerTape* tape) const;
  // Accumulates θ_M gradients for dL/dM (T x D).
  void tracker_backward(TrackerTape& tape, const std::vector<double>& d_m);

  // Policy branch over T steps. `m_prev` is T x D (ignored by the no-mind
  // learner); `other` holds the demonstrator views for the no-mind learner.
  PolicyOutput policy_forward(Branch branch, const std::vector<const ObservationTensor*>& obs,
                              const std::vector<const ObservationTensor*>* other,
                              const std::vector<double>& m_prev, const LstmState& start,
                              PolicyTape* tape) const;
  // `d_logits[k]` is T x n_k; `d_hidden` (T x H) may be empty. Writes dL/dm_prev
  // into `d_m_prev` when non-null.
  void policy_backward(PolicyTape& tape, const std::vector<std::vector<double>>& d_logits,
                       const std::vector<double>& d_hidden, std::vector<double>* d_m_prev);

  // V = w . h + b on the learner hidden state.
  double value(const double* learner_hidden) const;
  void value_backward(const double* learner_hidden, double d_value);

  const std::vector<int>& heads(Branch b) const {
    return b == Branch::Demo ? config_.spec.demo_heads : config_.spec.learner_heads;
  }

 private:
  struct BranchParams {
    int conv_w = -1, conv_b = -1, att_w = -1, att_b = -1;
    int lstm_wx = -1, lstm_wh = -1, lstm_b = -1;
    std::vector<int> head_w, head_b;
  };

  const BranchParams& branch(Branch b) const { return b == Branch::Demo ? demo_ : learner_; }
  bool fused(Branch b) const { return b == Branch::Demo || !config_.no_mind; }

  void lstm_forward(int wx, int wh, int b, const std::vector<double>& x, int in, int steps,
                    const LstmState& start, LstmTape* tape, std::vector<double>& h_out,
                    LstmState* final_state) const;
  // Returns dL/dx (T x in) when `want_dx`.
  std::vector<double> lstm_backward(int wx, int wh, int b, const std::vector<double>& x, int in,
                                    const LstmTape& tape, std::vector<double> d_h, bool want_dx);

  ModelConfig config_;
  ParameterStore params_;
  int t_conv_w_ = -1, t_conv_b_ = -1, t_fc1_w_ = -1, t_fc1_b_ = -1, t_fc2_w_ = -1, t_fc2_b_ = -1;
  int t_lstm_wx_ = -1, t_lstm_wh_ = -1, t_lstm_b_ = -1, t_out_w_ = -1, t_out_b_ = -1;
  BranchParams demo_;
  BranchParams learner_;
  int v_w_ = -1, v_b_ = -1;
};

// In-place log-softmax of each row of a rows x n array.
void log_softmax_rows(std::vector<double>& x, int rows, int n);

// Step-by-step inference helpers used during rollouts and evaluation.
class TrackerRunner {
 public:
  explicit TrackerRunner(const MindModel& model);
  // Consumes (s_d^t, a_d^t) and returns m^t.
  const std::vector<double>& observe(const ObservationTensor& s_d, FactoredAction a_d);
  const std::vector<double>& mind() const { return m_; }

 private:
  const MindModel* model_;
  LstmState state_;
  std::vector<double> m_;
};

class PolicyRunner {
 public:
  PolicyRunner(const MindModel& model, Branch branch);
  // Per-head probabilities for the current step; advances the recurrent state.
  std::vector<std::vector<double>> step(const ObservationTensor& s, const std::vector<double>& m_prev,
                                        const ObservationTensor* other = nullptr);
  const LstmState& state() const { return state_; }

 private:
  const MindModel* model_;
  Branch branch_;
  LstmState state_;
};

}  // namespace probe
