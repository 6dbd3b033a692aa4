#include <cmath>

#include "probe/kernels.hpp"

namespace probe::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt(const double* w, std::size_t rows, std::size_t cols, const double* x,
             std::size_t batch, double* y) {
  for (std::size_t t = 0; t < batch; ++t) {
    const double* xt = x + t * cols;
    double* yt = y + t * rows;
    for (std::size_t o = 0; o < rows; ++o) yt[o] = dot(w + o * cols, xt, cols);
  }
}

void gemm_tn_acc(const double* g, std::size_t batch, std::size_t rows, const double* w,
                 std::size_t cols, double* dx) {
  for (std::size_t t = 0; t < batch; ++t) {
    const double* gt = g + t * rows;
    double* dxt = dx + t * cols;
    for (std::size_t o = 0; o < rows; ++o) {
      if (gt[o] != 0.0) axpy(gt[o], w + o * cols, dxt, cols);
    }
  }
}

void outer_acc(const double* g, std::size_t batch, std::size_t rows, const double* x,
               std::size_t cols, double* dw) {
  for (std::size_t t = 0; t < batch; ++t) {
    const double* gt = g + t * rows;
    const double* xt = x + t * cols;
    for (std::size_t o = 0; o < rows; ++o) {
      if (gt[o] != 0.0) axpy(gt[o], xt, dw + o * cols, cols);
    }
  }
}

void rmsprop(double* p, const double* g, double* acc, std::size_t n, double lr, double rho,
             double eps) {
  const double one_minus = 1.0 - rho;
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = rho * acc[i] + one_minus * (g[i] * g[i]);
    p[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

double sum_sq(const double* a, std::size_t n) { return dot(a, a, n); }

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot, axpy, gemm_nt, gemm_tn_acc, outer_acc, rmsprop,
                                 sum_sq};
  return table;
}

}  // namespace probe::kernels
