// NEON kernel variants for aarch64 hosts.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>

namespace kgfuse::kernels::neon {

float dot(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = vmlaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    }
    float sum = vaddvq_f32(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

float squared_distance(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t d = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
        acc = vmlaq_f32(acc, d, d);
    }
    float sum = vaddvq_f32(acc);
    for (; i < n; ++i) {
        float d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void scale(float* a, std::size_t n, float s) {
    float32x4_t vs = vdupq_n_f32(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(a + i, vmulq_f32(vld1q_f32(a + i), vs));
    }
    for (; i < n; ++i) a[i] *= s;
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vmlaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double sum = vaddvq_f64(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vmlaq_f64(acc, d, d);
    }
    double sum = vaddvq_f64(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void scale(double* a, std::size_t n, double s) {
    float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(a + i, vmulq_f64(vld1q_f64(a + i), vs));
    }
    for (; i < n; ++i) a[i] *= s;
}

}  // namespace kgfuse::kernels::neon

#endif  // aarch64
