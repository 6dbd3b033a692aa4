#include "probe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "probe/kernels.hpp"

namespace probe {

const char* block_name(Block b) {
  switch (b) {
    case Block::Tracker: return "tracker";
    case Block::Demo: return "demo";
    case Block::Learner: return "learner";
    case Block::Value: return "value";
  }
  return "?";
}

int ParameterStore::add(const std::string& name, Block block, int rows, int cols) {
  if (find(name) >= 0) throw std::logic_error("duplicate parameter " + name);
  Param p;
  p.name = name;
  p.block = block;
  p.rows = rows;
  p.cols = cols;
  const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

int ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

void ParameterStore::zero_grad(Block b) {
  for (auto& p : params_) {
    if (p.block == b) std::fill(p.grad.begin(), p.grad.end(), 0.0);
  }
}

double ParameterStore::grad_sq_norm(Block b) const {
  const auto& k = kernels::active();
  double s = 0.0;
  for (const auto& p : params_) {
    if (p.block == b) s += k.sum_sq(p.grad.data(), p.grad.size());
  }
  return s;
}

std::size_t ParameterStore::count(Block b) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.block == b) n += p.size();
  }
  return n;
}

bool ParameterStore::has_block(Block b) const {
  return std::any_of(params_.begin(), params_.end(), [b](const Param& p) { return p.block == b; });
}

std::vector<double> ParameterStore::snapshot(Block b) const {
  std::vector<double> out;
  for (const auto& p : params_) {
    if (p.block == b) out.insert(out.end(), p.value.begin(), p.value.end());
  }
  return out;
}

void glorot_uniform(Param& p, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  for (double& v : p.value) v = u(rng);
}

}  // namespace probe
