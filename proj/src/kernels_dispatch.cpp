#include "times2d/kernels.hpp"

#include "kernels_impl.hpp"
#include "times2d/errors.hpp"

#include <cstdlib>
#include <cstring>

namespace times2d::kernels {

namespace {

bool detect_avx2() {
#if defined(TIMES2D_HAVE_AVX2_TU) && defined(__GNUC__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("TIMES2D_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && detect_avx2()) return Backend::Avx2;
        return Backend::Scalar;
    }
    return detect_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend g_backend = initial_backend();

} // namespace

bool avx2_supported() {
    static const bool supported = detect_avx2();
    return supported;
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported())
        throw ConfigError("kernels: AVX2 backend requested but CPU lacks avx2+fma");
    g_backend = b;
}

const char* backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

#if defined(TIMES2D_HAVE_AVX2_TU)
#define TIMES2D_DISPATCH(fn, ...)                                  \
    if (g_backend == Backend::Avx2) return detail::avx2::fn(__VA_ARGS__); \
    return detail::scalar::fn(__VA_ARGS__)
#else
#define TIMES2D_DISPATCH(fn, ...) return detail::scalar::fn(__VA_ARGS__)
#endif

template <typename T> void add(const T* a, const T* b, T* out, std::size_t n) {
    TIMES2D_DISPATCH(add, a, b, out, n);
}
template <typename T> void sub(const T* a, const T* b, T* out, std::size_t n) {
    TIMES2D_DISPATCH(sub, a, b, out, n);
}
template <typename T> void mul(const T* a, const T* b, T* out, std::size_t n) {
    TIMES2D_DISPATCH(mul, a, b, out, n);
}
template <typename T> void div(const T* a, const T* b, T* out, std::size_t n) {
    TIMES2D_DISPATCH(div, a, b, out, n);
}
template <typename T> void scale(const T* a, T s, T* out, std::size_t n) {
    TIMES2D_DISPATCH(scale, a, s, out, n);
}
template <typename T> void axpy(T alpha, const T* x, T* y, std::size_t n) {
    TIMES2D_DISPATCH(axpy, alpha, x, y, n);
}
template <typename T> void accumulate(const T* x, T* y, std::size_t n) {
    TIMES2D_DISPATCH(accumulate, x, y, n);
}
template <typename T> T dot(const T* a, const T* b, std::size_t n) {
    TIMES2D_DISPATCH(dot, a, b, n);
}
template <typename T> T sum(const T* a, std::size_t n) {
    TIMES2D_DISPATCH(sum, a, n);
}
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    TIMES2D_DISPATCH(matmul, a, b, c, m, k, n);
}

#undef TIMES2D_DISPATCH

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

} // namespace times2d::kernels
