#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "ganaug/simd/kernels.hpp"

namespace ganaug::simd {

#ifndef GANAUG_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
            return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa parse_isa(std::string_view text) {
    if (text == "scalar") return Isa::scalar;
    if (text == "avx2") return Isa::avx2;
    if (text == "auto" || text.empty()) return best_isa();
    throw std::invalid_argument("unknown SIMD level '" + std::string(text) + "' (expected auto|scalar|avx2)");
}

std::string to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace {

const KernelTable& table_for(Isa isa) {
    if (isa == Isa::avx2 && isa_supported(Isa::avx2)) return *avx2_kernels();
    return scalar_kernels();
}

Isa initial_isa() {
    const char* env = std::getenv("GANAUG_SIMD");
    Isa isa = env ? parse_isa(env) : best_isa();
    return isa_supported(isa) ? isa : Isa::scalar;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> table{&table_for(initial_isa())};
    return table;
}

}  // namespace

const KernelTable& kernels() { return *active_table().load(std::memory_order_relaxed); }

Isa active_isa() { return &kernels() == &scalar_kernels() ? Isa::scalar : Isa::avx2; }

void set_active_isa(Isa isa) {
    if (!isa_supported(isa)) throw std::runtime_error("SIMD level " + to_string(isa) + " not supported on this CPU");
    active_table().store(&table_for(isa), std::memory_order_relaxed);
}

void gemm(bool trans_a, bool trans_b, int M, int N, int K, const float* A, const float* B, float* C,
          bool accumulate) {
    if (M == 0 || N == 0) return;
    if (K == 0) {
        if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, 0.0f);
        return;
    }
    if (trans_b && !trans_a) {
        kernels().gemm_nt(M, N, K, A, B, C, accumulate);
        return;
    }
    thread_local std::vector<float> pack_a;
    thread_local std::vector<float> pack_b;
    const float* a = A;
    const float* b = B;
    if (trans_a) {
        // A is stored KxM.
        pack_a.resize(static_cast<std::size_t>(M) * K);
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < M; ++i) pack_a[static_cast<std::size_t>(i) * K + k] = A[static_cast<std::size_t>(k) * M + i];
        a = pack_a.data();
    }
    if (trans_b) {
        // B is stored NxK.
        pack_b.resize(static_cast<std::size_t>(K) * N);
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < K; ++k) pack_b[static_cast<std::size_t>(k) * N + j] = B[static_cast<std::size_t>(j) * K + k];
        b = pack_b.data();
    }
    kernels().gemm(M, N, K, a, b, C, accumulate);
}

}  // namespace ganaug::simd
