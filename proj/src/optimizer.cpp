#include "probe/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "probe/kernels.hpp"

namespace probe {

StepReport RmsProp::step(ParameterStore& params, const std::vector<Block>& blocks) {
  auto selected = [&](const Param& p) {
    return std::find(blocks.begin(), blocks.end(), p.block) != blocks.end();
  };
  StepReport report;
  double sq = 0.0;
  for (Block b : blocks) sq += params.grad_sq_norm(b);
  report.grad_norm = std::sqrt(sq);
  if (!std::isfinite(report.grad_norm)) return report;

  const double scale =
      config_.clip_norm > 0.0 && report.grad_norm > config_.clip_norm ? config_.clip_norm / report.grad_norm : 1.0;
  const auto& k = kernels::active();
  std::vector<double> clipped;
  for (auto& p : params.all()) {
    if (!selected(p)) continue;
    auto& acc = acc_[p.name];
    if (acc.empty()) acc.assign(p.size(), 0.0);
    const double* g = p.grad.data();
    if (scale != 1.0) {
      clipped.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) clipped[i] = p.grad[i] * scale;
      g = clipped.data();
    }
    k.rmsprop(p.value.data(), g, acc.data(), p.size(), config_.learning_rate, config_.rho, config_.epsilon);
  }
  report.applied = true;
  return report;
}

bool RmsProp::has_state(Block b, const ParameterStore& params) const {
  for (const auto& p : params.all()) {
    if (p.block == b && acc_.count(p.name)) return true;
  }
  return false;
}

}  // namespace probe
