#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "probe/observation.hpp"
#include "probe/world.hpp"

namespace probe {

inline constexpr int kSortLength = 10;
inline constexpr int kSortBits = 4;
inline constexpr int kSortMaxValue = (1 << kSortBits) - 1;
inline constexpr int kSortTimeLimit = 30;
inline constexpr int kLearnerPeriod = 5;  // learner acts once per this many demonstrator steps

using SortArray = std::array<int, kSortLength>;

inline constexpr SortArray kTrainingArray{2, 0, 5, 12, 14, 10, 3, 11, 9, 7};

// Persistent scan position of the modified bubble sort, in [0, n-1).
struct BubbleSortCursor {
  int i = 0;
  bool operator==(const BubbleSortCursor&) const = default;
};

struct SortState {
  SortArray values{};
  int step_count = 0;
  int demo_steps_since_learner = 0;
  BubbleSortCursor cursor{};
  int step_limit = kSortTimeLimit;

  // The learner is scheduled on this tick.
  bool learner_due() const { return demo_steps_since_learner == kLearnerPeriod - 1; }
  bool operator==(const SortState&) const = default;
};

// Swap(first, second); any index >= kSortLength means NoOp.
struct SortDemoAction {
  int first = kSortLength;
  int second = kSortLength;

  static SortDemoAction swap(int i, int j) { return {i, j}; }
  static SortDemoAction noop() { return {}; }
  bool is_noop() const {
    return first < 0 || second < 0 || first >= kSortLength || second >= kSortLength;
  }
  bool operator==(const SortDemoAction&) const = default;
};

// FlipBit(index, bit); index >= kSortLength means NoOp.
struct SortLearnerAction {
  int index = kSortLength;
  int bit = 0;

  static SortLearnerAction flip(int idx, int b) { return {idx, b}; }
  static SortLearnerAction noop() { return {}; }
  bool is_noop() const { return index < 0 || index >= kSortLength || bit < 0 || bit >= kSortBits; }
  bool operator==(const SortLearnerAction&) const = default;
};

bool is_ascending(const SortArray& values);

SortState reset_sort(Mode mode, std::uint64_t seed);

struct SortStepResult {
  SortState state;
  bool terminal = false;
};

// Applies the swap, then the bit flip when scheduled. Throws if the learner
// action's presence does not match the schedule.
SortStepResult step_sort(const SortState& state, SortDemoAction demo,
                         std::optional<SortLearnerAction> learner);

// 10 x 1 x 4; channel b of position p is bit b (LSB first) of values[p].
ObservationTensor encode_sort_observation(const SortState& state);
SortArray decode_sort_observation(const ObservationTensor& obs);

std::uint64_t sort_digest(const SortState& state);

std::string render_sort(const SortState& state);

// One array per line, comma separated.
void write_sort_suite(std::ostream& out, const std::vector<SortArray>& arrays);
std::vector<SortArray> read_sort_suite(std::istream& in);

}  // namespace probe
