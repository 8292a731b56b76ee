#include "v2x/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace v2x::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = b[r] + dot_scalar(w + r * cols, x, cols);
  }
}

void gemv_t_scalar(const double* w, const double* d, double* x_grad,
                   std::size_t rows, std::size_t cols) {
  std::fill(x_grad, x_grad + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (d[r] != 0.0) axpy_scalar(d[r], w + r * cols, x_grad, cols);
  }
}

void outer_acc_scalar(const double* d, const double* x, double* g,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (d[r] == 0.0) continue;
    axpy_scalar(d[r], x, g + r * cols, cols);
  }
}

void relu_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_scalar(const double* pre, double* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  }
}

void scale_add_scalar(double a, const double* x, double b, double* y,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void adam_scalar(double* p, const double* g, double* m, double* v,
                 std::size_t n, double beta1, double beta2, double lr,
                 double m_corr, double v_corr, double eps) {
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + one_m_b1 * g[i];
    v[i] = beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    const double m_hat = m[i] * m_corr;
    const double v_hat = v[i] * v_corr;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Backend::Scalar, dot_scalar,      axpy_scalar,      gemv_scalar,
      gemv_t_scalar,   outer_acc_scalar, relu_scalar,     relu_mask_scalar,
      scale_add_scalar, adam_scalar};
  return table;
}

}  // namespace v2x::simd
