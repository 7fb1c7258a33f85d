#include "ganaug/simd/kernels.hpp"

namespace ganaug::simd {
namespace {

void gemm_scalar(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        float* c = C + static_cast<std::size_t>(i) * N;
        if (!accumulate) {
            for (int j = 0; j < N; ++j) c[j] = 0.0f;
        }
        const float* a = A + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const float av = a[k];
            const float* b = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

void gemm_nt_scalar(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        const float* a = A + static_cast<std::size_t>(i) * K;
        for (int j = 0; j < N; ++j) {
            const float* b = B + static_cast<std::size_t>(j) * K;
            float s = 0.0f;
            for (int k = 0; k < K; ++k) s += a[k] * b[k];
            float& c = C[static_cast<std::size_t>(i) * N + j];
            c = accumulate ? c + s : s;
        }
    }
}

float dot_scalar(const float* x, const float* y, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(float a, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

float l2sq_scalar(const float* x, const float* y, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        const float d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{gemm_scalar, gemm_nt_scalar, dot_scalar, axpy_scalar, l2sq_scalar, "scalar"};
    return table;
}

}  // namespace ganaug::simd
