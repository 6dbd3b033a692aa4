#include "probe/sorting.hpp"

#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace probe {

bool is_ascending(const SortArray& values) {
  for (int i = 0; i + 1 < kSortLength; ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(i + 1)]) return false;
  }
  return true;
}

SortState reset_sort(Mode mode, std::uint64_t seed) {
  SortState s;
  if (mode == Mode::Train) {
    s.values = kTrainingArray;
    return s;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(0, kSortMaxValue);
  for (int& v : s.values) v = value(rng);
  return s;
}

SortStepResult step_sort(const SortState& state, SortDemoAction demo,
                         std::optional<SortLearnerAction> learner) {
  if (learner.has_value() != state.learner_due()) {
    throw std::invalid_argument(learner ? "learner acted off schedule"
                                        : "learner action missing on its scheduled tick");
  }
  SortStepResult out{state, false};
  SortState& s = out.state;
  if (!demo.is_noop()) {
    std::swap(s.values[static_cast<std::size_t>(demo.first)],
              s.values[static_cast<std::size_t>(demo.second)]);
  }
  if (learner) {
    if (!learner->is_noop()) s.values[static_cast<std::size_t>(learner->index)] ^= 1 << learner->bit;
    s.demo_steps_since_learner = 0;
  } else {
    ++s.demo_steps_since_learner;
  }
  ++s.step_count;
  out.terminal = is_ascending(s.values) || s.step_count >= s.step_limit;
  return out;
}

ObservationTensor encode_sort_observation(const SortState& state) {
  ObservationTensor obs(kSortLength, 1, kSortBits);
  for (int p = 0; p < kSortLength; ++p) {
    for (int b = 0; b < kSortBits; ++b) {
      obs.at(p, 0, b) = (state.values[static_cast<std::size_t>(p)] >> b) & 1 ? 1.0 : 0.0;
    }
  }
  return obs;
}

SortArray decode_sort_observation(const ObservationTensor& obs) {
  SortArray out{};
  for (int p = 0; p < kSortLength; ++p) {
    int v = 0;
    for (int b = 0; b < kSortBits; ++b) v |= (obs.at(p, 0, b) > 0.5 ? 1 : 0) << b;
    out[static_cast<std::size_t>(p)] = v;
  }
  return out;
}

std::uint64_t sort_digest(const SortState& state) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int v : state.values) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string render_sort(const SortState& state) {
  std::string out = "[";
  for (int i = 0; i < kSortLength; ++i) {
    if (i) out += ", ";
    out += std::to_string(state.values[static_cast<std::size_t>(i)]);
  }
  return out + "]";
}

void write_sort_suite(std::ostream& out, const std::vector<SortArray>& arrays) {
  for (const auto& a : arrays) {
    for (int i = 0; i < kSortLength; ++i) {
      if (i) out << ',';
      out << a[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
}

std::vector<SortArray> read_sort_suite(std::istream& in) {
  std::vector<SortArray> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string item;
    SortArray a{};
    int n = 0;
    while (std::getline(ss, item, ',')) {
      if (n >= kSortLength) throw std::invalid_argument("line " + std::to_string(lineno) + ": too many values");
      const int v = std::stoi(item);
      if (v < 0 || v > kSortMaxValue) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": value out of range");
      }
      a[static_cast<std::size_t>(n++)] = v;
    }
    if (n != kSortLength) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 10 values");
    out.push_back(a);
  }
  return out;
}

}  // namespace probe
