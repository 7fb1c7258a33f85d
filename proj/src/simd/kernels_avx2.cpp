// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cstdint>

#include "ganaug/simd/kernels.hpp"

namespace ganaug::simd {
namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

inline __m256i tail_mask(int count) {
    alignas(32) static const std::int32_t table[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 8 - count));
}

// Register tile of ROWS x 16 outputs; the K loop streams one 16-wide strip of B.
template <int ROWS>
inline void tile16(int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    __m256 acc[ROWS][2];
    for (int r = 0; r < ROWS; ++r) acc[r][0] = acc[r][1] = _mm256_setzero_ps();
    for (int k = 0; k < K; ++k) {
        const __m256 b0 = _mm256_loadu_ps(B + static_cast<std::size_t>(k) * N);
        const __m256 b1 = _mm256_loadu_ps(B + static_cast<std::size_t>(k) * N + 8);
        for (int r = 0; r < ROWS; ++r) {
            const __m256 a = _mm256_broadcast_ss(A + static_cast<std::size_t>(r) * K + k);
            acc[r][0] = _mm256_fmadd_ps(a, b0, acc[r][0]);
            acc[r][1] = _mm256_fmadd_ps(a, b1, acc[r][1]);
        }
    }
    for (int r = 0; r < ROWS; ++r) {
        float* c = C + static_cast<std::size_t>(r) * N;
        if (accumulate) {
            acc[r][0] = _mm256_add_ps(acc[r][0], _mm256_loadu_ps(c));
            acc[r][1] = _mm256_add_ps(acc[r][1], _mm256_loadu_ps(c + 8));
        }
        _mm256_storeu_ps(c, acc[r][0]);
        _mm256_storeu_ps(c + 8, acc[r][1]);
    }
}

// Same as tile16 for a strip narrower than 8 columns (or exactly 8) using masked access.
template <int ROWS>
inline void tile_masked(int N, int K, int width, const float* A, const float* B, float* C, bool accumulate) {
    const __m256i mask = tail_mask(width);
    __m256 acc[ROWS];
    for (int r = 0; r < ROWS; ++r) acc[r] = _mm256_setzero_ps();
    for (int k = 0; k < K; ++k) {
        const __m256 b = _mm256_maskload_ps(B + static_cast<std::size_t>(k) * N, mask);
        for (int r = 0; r < ROWS; ++r) {
            const __m256 a = _mm256_broadcast_ss(A + static_cast<std::size_t>(r) * K + k);
            acc[r] = _mm256_fmadd_ps(a, b, acc[r]);
        }
    }
    for (int r = 0; r < ROWS; ++r) {
        float* c = C + static_cast<std::size_t>(r) * N;
        if (accumulate) acc[r] = _mm256_add_ps(acc[r], _mm256_maskload_ps(c, mask));
        _mm256_maskstore_ps(c, mask, acc[r]);
    }
}

template <int ROWS>
inline void row_block(int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    int j = 0;
    for (; j + 16 <= N; j += 16) tile16<ROWS>(N, K, A, B + j, C + j, accumulate);
    for (; j < N; j += 8) {
        const int width = N - j < 8 ? N - j : 8;
        tile_masked<ROWS>(N, K, width, A, B + j, C + j, accumulate);
    }
}

void gemm_avx2(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    int i = 0;
    for (; i + 6 <= M; i += 6) {
        row_block<6>(N, K, A + static_cast<std::size_t>(i) * K, B, C + static_cast<std::size_t>(i) * N,
                     accumulate);
    }
    for (; i + 4 <= M; i += 4) {
        row_block<4>(N, K, A + static_cast<std::size_t>(i) * K, B, C + static_cast<std::size_t>(i) * N,
                     accumulate);
    }
    for (; i < M; ++i) {
        row_block<1>(N, K, A + static_cast<std::size_t>(i) * K, B, C + static_cast<std::size_t>(i) * N,
                     accumulate);
    }
}

// RA rows of A against RB rows of B, each pair reduced over the shared K axis.
template <int RA, int RB>
inline void nt_tile(int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    __m256 acc[RA][RB];
    for (int r = 0; r < RA; ++r)
        for (int q = 0; q < RB; ++q) acc[r][q] = _mm256_setzero_ps();
    int k = 0;
    for (; k + 8 <= K; k += 8) {
        __m256 b[RB];
        for (int q = 0; q < RB; ++q) b[q] = _mm256_loadu_ps(B + static_cast<std::size_t>(q) * K + k);
        for (int r = 0; r < RA; ++r) {
            const __m256 a = _mm256_loadu_ps(A + static_cast<std::size_t>(r) * K + k);
            for (int q = 0; q < RB; ++q) acc[r][q] = _mm256_fmadd_ps(a, b[q], acc[r][q]);
        }
    }
    if (k < K) {
        const __m256i mask = tail_mask(K - k);
        __m256 b[RB];
        for (int q = 0; q < RB; ++q) b[q] = _mm256_maskload_ps(B + static_cast<std::size_t>(q) * K + k, mask);
        for (int r = 0; r < RA; ++r) {
            const __m256 a = _mm256_maskload_ps(A + static_cast<std::size_t>(r) * K + k, mask);
            for (int q = 0; q < RB; ++q) acc[r][q] = _mm256_fmadd_ps(a, b[q], acc[r][q]);
        }
    }
    for (int r = 0; r < RA; ++r)
        for (int q = 0; q < RB; ++q) {
            float& c = C[static_cast<std::size_t>(r) * N + q];
            const float s = hsum(acc[r][q]);
            c = accumulate ? c + s : s;
        }
}

template <int RA>
inline void nt_rows(int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    int j = 0;
    for (; j + 4 <= N; j += 4) nt_tile<RA, 4>(N, K, A, B + static_cast<std::size_t>(j) * K, C + j, accumulate);
    for (; j < N; ++j) nt_tile<RA, 1>(N, K, A, B + static_cast<std::size_t>(j) * K, C + j, accumulate);
}

void gemm_nt_avx2(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate) {
    int i = 0;
    for (; i + 2 <= M; i += 2) {
        nt_rows<2>(N, K, A + static_cast<std::size_t>(i) * K, B, C + static_cast<std::size_t>(i) * N, accumulate);
    }
    for (; i < M; ++i) {
        nt_rows<1>(N, K, A + static_cast<std::size_t>(i) * K, B, C + static_cast<std::size_t>(i) * N, accumulate);
    }
}

float dot_avx2(const float* x, const float* y, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    float s = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_avx2(float a, const float* x, float* y, std::size_t n) {
    const __m256 av = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

float l2sq_avx2(const float* x, const float* y, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 d0 = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        const __m256 d1 = _mm256_sub_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8));
        acc0 = _mm256_fmadd_ps(d0, d0, acc0);
        acc1 = _mm256_fmadd_ps(d1, d1, acc1);
    }
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        acc0 = _mm256_fmadd_ps(d, d, acc0);
    }
    float s = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) {
        const float d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable table{gemm_avx2, gemm_nt_avx2, dot_avx2, axpy_avx2, l2sq_avx2, "avx2"};
    return &table;
}

}  // namespace ganaug::simd
