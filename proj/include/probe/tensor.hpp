#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace probe {

// The four disjoint parameter groups of the mind model.
enum class Block { Tracker = 0, Demo = 1, Learner = 2, Value = 3 };
inline constexpr int kBlockCount = 4;

const char* block_name(Block b);

struct Param {
  std::string name;
  Block block = Block::Tracker;
  int rows = 0;
  int cols = 1;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
  double* w() { return value.data(); }
  const double* w() const { return value.data(); }
  double* g() { return grad.data(); }
};

// Named flat parameter arrays with paired gradient buffers. Indices returned
// by `add` are stable for the lifetime of the store.
class ParameterStore {
 public:
  int add(const std::string& name, Block block, int rows, int cols);

  Param& operator[](int i) { return params_[static_cast<std::size_t>(i)]; }
  const Param& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(params_.size()); }
  int find(const std::string& name) const;  // -1 when absent

  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }

  void zero_grad();
  void zero_grad(Block b);
  double grad_sq_norm(Block b) const;
  std::size_t count(Block b) const;
  bool has_block(Block b) const;

  // Bytes of every value array of a block, for bit-identity checks.
  std::vector<double> snapshot(Block b) const;

 private:
  std::vector<Param> params_;
};

// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Param& p, int fan_in, int fan_out, std::mt19937_64& rng);

}  // namespace probe
