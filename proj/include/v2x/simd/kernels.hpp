#pragma once

// Dense double-precision kernels used by the Q-network.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from CPUID and can
// be forced with V2X_SIMD=scalar|avx2 or select_backend().
//
// Elementwise kernels (axpy, scale_add, relu, adam) are bit-identical across
// backends. Reductions (dot, gemv) reorder the summation and agree to within
// a few ulps.

#include <cstddef>
#include <span>
#include <string_view>

namespace v2x::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + b, W row-major rows x cols
  void (*gemv)(const double* w, const double* x, const double* b, double* y,
               std::size_t rows, std::size_t cols);
  // x_grad = W^T d, W row-major rows x cols
  void (*gemv_t)(const double* w, const double* d, double* x_grad,
                 std::size_t rows, std::size_t cols);
  // G += d x^T, G row-major rows x cols
  void (*outer_acc)(const double* d, const double* x, double* g,
                    std::size_t rows, std::size_t cols);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  // g[i] = pre[i] > 0 ? g[i] : 0
  void (*relu_mask)(const double* pre, double* g, std::size_t n);
  // y[i] = a * x[i] + b * y[i]
  void (*scale_add)(double a, const double* x, double b, double* y,
                    std::size_t n);
  // One bias-corrected Adam update over a flat parameter block.
  // m_corr = 1 / (1 - beta1^t), v_corr = 1 / (1 - beta2^t).
  void (*adam)(double* p, const double* g, double* m, double* v,
               std::size_t n, double beta1, double beta2, double lr,
               double m_corr, double v_corr, double eps);
};

const KernelTable& scalar_kernels();
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

// Kernels currently in use by the library.
const KernelTable& active();

// Forces a backend. Returns false (and leaves the selection unchanged) when
// the requested backend is not available on this CPU.
bool select_backend(Backend b);

std::string_view backend_name(Backend b);

// Span conveniences over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace v2x::simd
