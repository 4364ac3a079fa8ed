#include "kgfuse/kernels/vec_kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace kgfuse::kernels {

namespace scalar {

float dot(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

float squared_distance(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void scale(float* a, std::size_t n, float s) {
    for (std::size_t i = 0; i < n; ++i) a[i] *= s;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void scale(double* a, std::size_t n, double s) {
    for (std::size_t i = 0; i < n; ++i) a[i] *= s;
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
float dot(const float* a, const float* b, std::size_t n);
float squared_distance(const float* a, const float* b, std::size_t n);
void scale(float* a, std::size_t n, float s);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void scale(double* a, std::size_t n, double s);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
float dot(const float* a, const float* b, std::size_t n);
float squared_distance(const float* a, const float* b, std::size_t n);
void scale(float* a, std::size_t n, float s);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void scale(double* a, std::size_t n, double s);
}  // namespace neon
#endif

namespace {

struct KernelTable {
    float (*dot_f32)(const float*, const float*, std::size_t);
    float (*sqdist_f32)(const float*, const float*, std::size_t);
    void (*scale_f32)(float*, std::size_t, float);
    double (*dot_f64)(const double*, const double*, std::size_t);
    double (*sqdist_f64)(const double*, const double*, std::size_t);
    void (*scale_f64)(double*, std::size_t, double);
    Backend backend;
};

constexpr KernelTable kScalarTable{
    scalar::dot, scalar::squared_distance, scalar::scale,
    scalar::dot, scalar::squared_distance, scalar::scale,
    Backend::scalar};

KernelTable table_for(Backend b) {
    switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return {avx2::dot, avx2::squared_distance, avx2::scale,
                    avx2::dot, avx2::squared_distance, avx2::scale,
                    Backend::avx2};
#endif
#if defined(__aarch64__)
        case Backend::neon:
            return {neon::dot, neon::squared_distance, neon::scale,
                    neon::dot, neon::squared_distance, neon::scale,
                    Backend::neon};
#endif
        default:
            return kScalarTable;
    }
}

Backend detect_backend() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2")) return Backend::avx2;
#elif defined(__aarch64__)
    return Backend::neon;  // NEON is baseline on aarch64
#endif
    return Backend::scalar;
}

KernelTable g_table = table_for(detect_backend());

}  // namespace

bool backend_available(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case Backend::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() { return g_table.backend; }

void force_backend(Backend b) {
    if (!backend_available(b))
        throw std::invalid_argument("kernel backend not available on this CPU: " +
                                    backend_name(b));
    g_table = table_for(b);
}

void reset_backend() { g_table = table_for(detect_backend()); }

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

float dot(const float* a, const float* b, std::size_t n) {
    return g_table.dot_f32(a, b, n);
}

float squared_distance(const float* a, const float* b, std::size_t n) {
    return g_table.sqdist_f32(a, b, n);
}

void scale(float* a, std::size_t n, float s) { g_table.scale_f32(a, n, s); }

double dot(const double* a, const double* b, std::size_t n) {
    return g_table.dot_f64(a, b, n);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    return g_table.sqdist_f64(a, b, n);
}

void scale(double* a, std::size_t n, double s) { g_table.scale_f64(a, n, s); }

float l2_normalize(float* a, std::size_t n) {
    float norm = std::sqrt(dot(a, a, n));
    if (norm > 0.0f) scale(a, n, 1.0f / norm);
    return norm;
}

double l2_normalize(double* a, std::size_t n) {
    double norm = std::sqrt(dot(a, a, n));
    if (norm > 0.0) scale(a, n, 1.0 / norm);
    return norm;
}

}  // namespace kgfuse::kernels
