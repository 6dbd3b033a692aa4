// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "probe/kernels.hpp"

namespace probe::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const double l0 = _mm_cvtsd_f64(lo);
  const double l1 = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  const double h0 = _mm_cvtsd_f64(hi);
  const double h1 = _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
  return (l0 + l1) + (h0 + h1);
}

// Every output element follows the same recipe: one 4-lane FMA chain over the
// vector body, a fixed horizontal reduction, then a scalar FMA tail.
template <int R, int C>
inline void dot_tile(const double* const* w, const double* const* x, std::size_t n,
                     double* out /* R*C, row-major by r */) {
  __m256d acc[R][C];
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) acc[r][c] = _mm256_setzero_pd();
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t k = 0; k < body; k += 4) {
    __m256d wv[R];
    for (int r = 0; r < R; ++r) wv[r] = _mm256_loadu_pd(w[r] + k);
    for (int c = 0; c < C; ++c) {
      const __m256d xv = _mm256_loadu_pd(x[c] + k);
      for (int r = 0; r < R; ++r) acc[r][c] = _mm256_fmadd_pd(wv[r], xv, acc[r][c]);
    }
  }
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      double s = hsum(acc[r][c]);
      for (std::size_t k = body; k < n; ++k) s = std::fma(w[r][k], x[c][k], s);
      out[r * C + c] = s;
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double out;
  dot_tile<1, 1>(&a, &b, n, &out);
  return out;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (std::size_t i = body; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

template <int R, int C>
inline void run_tile(const double* w, std::size_t rows, std::size_t cols, const double* x,
                     std::size_t o, std::size_t t, double* y) {
  const double* wp[R];
  const double* xp[C];
  for (int r = 0; r < R; ++r) wp[r] = w + (o + r) * cols;
  for (int c = 0; c < C; ++c) xp[c] = x + (t + c) * cols;
  double out[R * C];
  dot_tile<R, C>(wp, xp, cols, out);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) y[(t + c) * rows + o + r] = out[r * C + c];
}

void gemm_nt(const double* w, std::size_t rows, std::size_t cols, const double* x,
             std::size_t batch, double* y) {
  // Panels of W rows stay cache-resident while every batch column visits them.
  constexpr std::size_t kPanel = 8;
  for (std::size_t o0 = 0; o0 < rows; o0 += kPanel) {
    const std::size_t o1 = std::min(rows, o0 + kPanel);
    std::size_t t = 0;
    for (; t + 4 <= batch; t += 4) {
      std::size_t o = o0;
      for (; o + 2 <= o1; o += 2) run_tile<2, 4>(w, rows, cols, x, o, t, y);
      for (; o < o1; ++o) run_tile<1, 4>(w, rows, cols, x, o, t, y);
    }
    for (; t < batch; ++t) {
      std::size_t o = o0;
      for (; o + 4 <= o1; o += 4) run_tile<4, 1>(w, rows, cols, x, o, t, y);
      for (; o < o1; ++o) run_tile<1, 1>(w, rows, cols, x, o, t, y);
    }
  }
}

void gemm_tn_acc(const double* g, std::size_t batch, std::size_t rows, const double* w,
                 std::size_t cols, double* dx) {
  const std::size_t body = cols & ~std::size_t{3};
  constexpr std::size_t kBlock = 4;
  for (std::size_t o0 = 0; o0 < rows; o0 += kBlock) {
    const std::size_t nb = std::min(kBlock, rows - o0);
    for (std::size_t t = 0; t < batch; ++t) {
      const double* gt = g + t * rows + o0;
      double* dxt = dx + t * cols;
      if (nb == kBlock) {
        if (gt[0] == 0.0 && gt[1] == 0.0 && gt[2] == 0.0 && gt[3] == 0.0) continue;
        const __m256d g0 = _mm256_set1_pd(gt[0]);
        const __m256d g1 = _mm256_set1_pd(gt[1]);
        const __m256d g2 = _mm256_set1_pd(gt[2]);
        const __m256d g3 = _mm256_set1_pd(gt[3]);
        const double* w0 = w + o0 * cols;
        const double* w1 = w0 + cols;
        const double* w2 = w1 + cols;
        const double* w3 = w2 + cols;
        for (std::size_t i = 0; i < body; i += 4) {
          __m256d acc = _mm256_loadu_pd(dxt + i);
          acc = _mm256_fmadd_pd(g0, _mm256_loadu_pd(w0 + i), acc);
          acc = _mm256_fmadd_pd(g1, _mm256_loadu_pd(w1 + i), acc);
          acc = _mm256_fmadd_pd(g2, _mm256_loadu_pd(w2 + i), acc);
          acc = _mm256_fmadd_pd(g3, _mm256_loadu_pd(w3 + i), acc);
          _mm256_storeu_pd(dxt + i, acc);
        }
        for (std::size_t i = body; i < cols; ++i) {
          double s = dxt[i];
          s = std::fma(gt[0], w0[i], s);
          s = std::fma(gt[1], w1[i], s);
          s = std::fma(gt[2], w2[i], s);
          s = std::fma(gt[3], w3[i], s);
          dxt[i] = s;
        }
      } else {
        for (std::size_t r = 0; r < nb; ++r) {
          if (gt[r] != 0.0) axpy(gt[r], w + (o0 + r) * cols, dxt, cols);
        }
      }
    }
  }
}

void outer_acc(const double* g, std::size_t batch, std::size_t rows, const double* x,
               std::size_t cols, double* dw) {
  const std::size_t body = cols & ~std::size_t{3};
  for (std::size_t o = 0; o < rows; ++o) {
    double* row = dw + o * cols;
    bool any = false;
    for (std::size_t t = 0; t < batch; ++t) any = any || g[t * rows + o] != 0.0;
    if (!any) continue;
    for (std::size_t i = 0; i < body; i += 4) {
      __m256d acc = _mm256_loadu_pd(row + i);
      for (std::size_t t = 0; t < batch; ++t) {
        acc = _mm256_fmadd_pd(_mm256_set1_pd(g[t * rows + o]), _mm256_loadu_pd(x + t * cols + i),
                              acc);
      }
      _mm256_storeu_pd(row + i, acc);
    }
    for (std::size_t i = body; i < cols; ++i) {
      double s = row[i];
      for (std::size_t t = 0; t < batch; ++t) s = std::fma(g[t * rows + o], x[t * cols + i], s);
      row[i] = s;
    }
  }
}

void rmsprop(double* p, const double* g, double* acc, std::size_t n, double lr, double rho,
             double eps) {
  const __m256d rv = _mm256_set1_pd(rho);
  const __m256d omr = _mm256_set1_pd(1.0 - rho);
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d ev = _mm256_set1_pd(eps);
  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d av = _mm256_mul_pd(rv, _mm256_loadu_pd(acc + i));
    av = _mm256_add_pd(av, _mm256_mul_pd(omr, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(acc + i, av);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(av), ev);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, gv), den);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  const double one_minus = 1.0 - rho;
  for (std::size_t i = body; i < n; ++i) {
    acc[i] = rho * acc[i] + one_minus * (g[i] * g[i]);
    p[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

double sum_sq(const double* a, std::size_t n) { return dot(a, a, n); }

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2", dot, axpy, gemm_nt, gemm_tn_acc, outer_acc, rmsprop,
                                 sum_sq};
  return table;
}

}  // namespace probe::kernels
