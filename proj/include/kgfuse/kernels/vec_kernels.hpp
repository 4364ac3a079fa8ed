#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>

namespace kgfuse::kernels {

enum class Backend { scalar, avx2, neon };

// Reference implementations. The dispatched entry points below must agree
// with these up to floating-point reassociation (see tests/test_kernels.cpp).
namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
float squared_distance(const float* a, const float* b, std::size_t n);
void scale(float* a, std::size_t n, float s);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void scale(double* a, std::size_t n, double s);
}  // namespace scalar

bool backend_available(Backend b);
Backend active_backend();
void force_backend(Backend b);  // throws std::invalid_argument if unavailable
void reset_backend();           // back to runtime auto-detection
std::string backend_name(Backend b);

float dot(const float* a, const float* b, std::size_t n);
float squared_distance(const float* a, const float* b, std::size_t n);
void scale(float* a, std::size_t n, float s);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void scale(double* a, std::size_t n, double s);

inline float dot(std::span<const float> a, std::span<const float> b) {
    return dot(a.data(), b.data(), std::min(a.size(), b.size()));
}
inline float squared_distance(std::span<const float> a, std::span<const float> b) {
    return squared_distance(a.data(), b.data(), std::min(a.size(), b.size()));
}
inline void scale(std::span<float> a, float s) { scale(a.data(), a.size(), s); }
inline double dot(std::span<const double> a, std::span<const double> b) {
    return dot(a.data(), b.data(), std::min(a.size(), b.size()));
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    return squared_distance(a.data(), b.data(), std::min(a.size(), b.size()));
}
inline void scale(std::span<double> a, double s) { scale(a.data(), a.size(), s); }

// In-place L2 normalization; returns the original norm. Zero vectors are
// left untouched and 0 is returned.
float l2_normalize(float* a, std::size_t n);
double l2_normalize(double* a, std::size_t n);
inline float l2_normalize(std::span<float> a) { return l2_normalize(a.data(), a.size()); }
inline double l2_normalize(std::span<double> a) { return l2_normalize(a.data(), a.size()); }

}  // namespace kgfuse::kernels
