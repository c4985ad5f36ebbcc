#pragma once

#include <cstddef>

// Internal declarations shared by the kernel backends. The avx2 translation
// unit is the only one compiled with -mavx2 -mfma; nothing here may be
// called unless CPUID reports support.
namespace times2d::kernels::detail {

namespace scalar {
template <typename T> void add(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void sub(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void mul(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void div(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void scale(const T* a, T s, T* out, std::size_t n);
template <typename T> void axpy(T alpha, const T* x, T* y, std::size_t n);
template <typename T> void accumulate(const T* x, T* y, std::size_t n);
template <typename T> T dot(const T* a, const T* b, std::size_t n);
template <typename T> T sum(const T* a, std::size_t n);
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);
} // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
#define TIMES2D_HAVE_AVX2_TU 1
namespace avx2 {
void add(const float* a, const float* b, float* out, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const float* a, const float* b, float* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const float* a, const float* b, float* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void div(const float* a, const float* b, float* out, std::size_t n);
void div(const double* a, const double* b, double* out, std::size_t n);
void scale(const float* a, float s, float* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void accumulate(const float* x, float* y, std::size_t n);
void accumulate(const double* x, double* y, std::size_t n);
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
float sum(const float* a, std::size_t n);
double sum(const double* a, std::size_t n);
void matmul(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
} // namespace avx2
#endif

} // namespace times2d::kernels::detail
