#pragma once

// Data-parallel inner loops used by the tensor engine and the nearest-neighbour
// audit. Every kernel has a portable scalar reference implementation; wider
// variants are compiled separately and picked at runtime from the CPU flags.

#include <cstddef>
#include <string>
#include <string_view>

namespace ganaug::simd {

enum class Isa { scalar, avx2 };

/// Kernel signatures. All matrices are dense row-major with leading dimension
/// equal to the column count.
struct KernelTable {
    /// C[M,N] = A[M,K] * B[K,N], or C += A*B when `accumulate` is set.
    void (*gemm)(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
    /// C[M,N] (+)= A[M,K] * B[N,K]^T; both operands walk K contiguously.
    void (*gemm_nt)(int M, int N, int K, const float* A, const float* B, float* C, bool accumulate);
    float (*dot)(const float* x, const float* y, std::size_t n);
    /// y += a * x
    void (*axpy)(float a, const float* x, float* y, std::size_t n);
    /// Squared Euclidean distance.
    float (*l2sq)(const float* x, const float* y, std::size_t n);
    const char* name;
};

const KernelTable& scalar_kernels();
/// Returns nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();

bool isa_supported(Isa isa);
Isa best_isa();

/// The table every caller goes through. Initialised from GANAUG_SIMD
/// (auto|scalar|avx2) on first use; set_active_isa overrides it.
const KernelTable& kernels();
Isa active_isa();
void set_active_isa(Isa isa);

Isa parse_isa(std::string_view text);
std::string to_string(Isa isa);

/// General matrix product with optional transposes, built on the active
/// kernel table. Operands are packed into row-major form before the call.
/// C[M,N] (+)= op(A) * op(B) where op(A) is MxK and op(B) is KxN.
void gemm(bool trans_a, bool trans_b, int M, int N, int K, const float* A, const float* B, float* C,
          bool accumulate);

}  // namespace ganaug::simd
