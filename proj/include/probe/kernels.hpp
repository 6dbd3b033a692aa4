#pragma once

#include <cstddef>
#include <string_view>

namespace probe::kernels {

// Dense double-precision primitives behind every layer of the mind model.
// Matrices are row-major. `rows x cols` weight W, batch X with one sample per row.
//
// Two implementations exist: a portable scalar reference and an AVX2/FMA
// variant. The active table is chosen once at startup from CPUID, and can be
// forced with PROBE_KERNELS=scalar|avx2.
//
// Within one implementation, gemm_nt(W, X) with any batch size produces
// bit-identical results to dot(W[o], X[t]); recurrent step-by-step inference
// and batched replays therefore agree exactly.
struct KernelTable {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // Y[t][o] = dot(W[o], X[t]) for t < batch, o < rows.
  void (*gemm_nt)(const double* w, std::size_t rows, std::size_t cols, const double* x,
                  std::size_t batch, double* y);

  // dX[t][i] += sum_o G[t][o] * W[o][i]
  void (*gemm_tn_acc)(const double* g, std::size_t batch, std::size_t rows, const double* w,
                      std::size_t cols, double* dx);

  // dW[o][i] += sum_t G[t][o] * X[t][i]
  void (*outer_acc)(const double* g, std::size_t batch, std::size_t rows, const double* x,
                    std::size_t cols, double* dw);

  // acc = rho*acc + (1-rho)*g^2 ; p -= lr * g / (sqrt(acc) + eps)
  void (*rmsprop)(double* p, const double* g, double* acc, std::size_t n, double lr, double rho,
                  double eps);

  // sum of squares
  double (*sum_sq)(const double* a, std::size_t n);
};

const KernelTable& scalar_table();

// Returns nullptr when the binary or CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// The table selected for this process.
const KernelTable& active();

// Override the active table (tests, benchmarks). Not thread-safe.
void set_active(const KernelTable& table);

}  // namespace probe::kernels
