#pragma once

#include <cstddef>
#include <vector>

namespace probe {

// H x W x C tensor stored cell-major: data[(row * width + col) * channels + ch].
// A 1x1 convolution over it is a dense layer applied to each of the H*W rows.
struct ObservationTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  ObservationTensor() = default;
  ObservationTensor(int h, int w, int c)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h * w * c), 0.0) {}

  int cells() const { return height * width; }

  double& at(int row, int col, int ch) {
    return data[static_cast<std::size_t>((row * width + col) * channels + ch)];
  }
  double at(int row, int col, int ch) const {
    return data[static_cast<std::size_t>((row * width + col) * channels + ch)];
  }

  double channel_sum(int ch) const {
    double s = 0.0;
    for (int cell = 0; cell < cells(); ++cell) s += data[static_cast<std::size_t>(cell * channels + ch)];
    return s;
  }

  bool operator==(const ObservationTensor&) const = default;
};

}  // namespace probe
