#pragma once

#include <cstddef>

namespace esv::kern {

/// Dense double-precision primitives behind the model forward passes. One
/// scalar reference implementation always exists; wider variants are picked
/// at runtime from CPU capabilities (override with ESV_KERNELS=scalar|avx2|
/// neon|auto). Variants are equivalence-tested against the scalar kernels.
struct Backend {
  const char* name;
  double (*dot)(const double* a, const double* b, size_t len);
  void (*axpy)(double alpha, const double* x, double* y, size_t len);
  void (*scal)(double alpha, double* x, size_t len);
  void (*relu)(double* x, size_t len);
};

const Backend& scalar_backend();
/// Backend chosen for this process; the choice is made once and then sticky.
const Backend& active_backend();

/// y = W x + b with W row-major rows x cols; b may be null.
void gemv(const Backend& k, const double* w, size_t rows, size_t cols, const double* x,
          const double* b, double* y);

inline double dot(const double* a, const double* b, size_t len) {
  return active_backend().dot(a, b, len);
}
inline void axpy(double alpha, const double* x, double* y, size_t len) {
  active_backend().axpy(alpha, x, y, len);
}
inline void scal(double alpha, double* x, size_t len) { active_backend().scal(alpha, x, len); }
inline void relu(double* x, size_t len) { active_backend().relu(x, len); }
inline void gemv(const double* w, size_t rows, size_t cols, const double* x, const double* b,
                 double* y) {
  gemv(active_backend(), w, rows, cols, x, b, y);
}

}  // namespace esv::kern
