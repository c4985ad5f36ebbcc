#pragma once

#include <cstddef>

// Data-parallel inner loops behind the tensor operations. Every kernel has a
// scalar reference implementation and, on x86-64, an AVX2+FMA variant. The
// backend is chosen once at startup from CPUID (override with the
// TIMES2D_KERNELS environment variable or set_backend()); the two variants
// are equivalence-tested against each other.
namespace times2d::kernels {

enum class Backend { Scalar, Avx2 };

/// Currently active backend.
Backend active_backend();

/// Force a backend (throws ConfigError if Avx2 is requested on a CPU
/// without AVX2+FMA support).
void set_backend(Backend b);

/// True when the running CPU supports the AVX2 variants.
bool avx2_supported();
const char* backend_name(Backend b);

// Elementwise: out[i] = a[i] (op) b[i].
template <typename T> void add(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void sub(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void mul(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void div(const T* a, const T* b, T* out, std::size_t n);

/// out[i] = a[i] * s
template <typename T> void scale(const T* a, T s, T* out, std::size_t n);
/// y[i] += alpha * x[i]
template <typename T> void axpy(T alpha, const T* x, T* y, std::size_t n);
/// y[i] += x[i]
template <typename T> void accumulate(const T* x, T* y, std::size_t n);

template <typename T> T dot(const T* a, const T* b, std::size_t n);
template <typename T> T sum(const T* a, std::size_t n);

/// Row-major c[m,n] = a[m,k] * b[k,n]. c is overwritten.
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);

} // namespace times2d::kernels
