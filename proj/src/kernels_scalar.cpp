#include "kernels_impl.hpp"

// Reference kernels. Deliberately written as the plainest possible loops:
// these are the semantics the SIMD variants are tested against.
namespace times2d::kernels::detail::scalar {

template <typename T> void add(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T> void sub(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T> void mul(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T> void div(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}

template <typename T> void scale(const T* a, T s, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

template <typename T> void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T> void accumulate(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

template <typename T> T dot(const T* a, const T* b, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T> T sum(const T* a, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
    // i-k-j order keeps the inner loop contiguous over rows of b and c.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T aik = a[i * k + kk];
            const T* brow = b + kk * n;
            T* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

template void add<float>(const float*, const float*, float*, std::size_t);
template void add<double>(const double*, const double*, double*, std::size_t);
template void sub<float>(const float*, const float*, float*, std::size_t);
template void sub<double>(const double*, const double*, double*, std::size_t);
template void mul<float>(const float*, const float*, float*, std::size_t);
template void mul<double>(const double*, const double*, double*, std::size_t);
template void div<float>(const float*, const float*, float*, std::size_t);
template void div<double>(const double*, const double*, double*, std::size_t);
template void scale<float>(const float*, float, float*, std::size_t);
template void scale<double>(const double*, double, double*, std::size_t);
template void axpy<float>(float, const float*, float*, std::size_t);
template void axpy<double>(double, const double*, double*, std::size_t);
template void accumulate<float>(const float*, float*, std::size_t);
template void accumulate<double>(const double*, double*, std::size_t);
template float dot<float>(const float*, const float*, std::size_t);
template double dot<double>(const double*, const double*, std::size_t);
template float sum<float>(const float*, std::size_t);
template double sum<double>(const double*, std::size_t);
template void matmul<float>(const float*, const float*, float*, std::size_t, std::size_t, std::size_t);
template void matmul<double>(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);

} // namespace times2d::kernels::detail::scalar
