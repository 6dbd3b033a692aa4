#pragma once

#include <map>
#include <string>
#include <vector>

#include "probe/tensor.hpp"

namespace probe {

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double rho = 0.99;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient norm over the updated blocks; <= 0 disables
};

struct StepReport {
  bool applied = false;
  double grad_norm = 0.0;  // before clipping
};

// RMSProp with one accumulator per parameter array. Accumulators are created
// lazily, so blocks that are never updated never get optimizer state.
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig config = {}) : config_(config) {}

  // Clips the joint gradient of `blocks`, then updates them. A non-finite
  // gradient aborts the whole step (nothing is modified) and reports
  // applied=false. Gradients are left in place.
  StepReport step(ParameterStore& params, const std::vector<Block>& blocks);

  bool has_state(Block b, const ParameterStore& params) const;
  const std::map<std::string, std::vector<double>>& state() const { return acc_; }
  std::map<std::string, std::vector<double>>& state() { return acc_; }
  const RmsPropConfig& config() const { return config_; }

 private:
  RmsPropConfig config_;
  std::map<std::string, std::vector<double>> acc_;
};

}  // namespace probe
