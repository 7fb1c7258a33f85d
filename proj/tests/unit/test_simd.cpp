#include <random>
#include <vector>

#include "doctest.h"
#include "ganaug/simd/kernels.hpp"

using namespace ganaug::simd;

namespace {

std::vector<float> random_vec(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Reference in double precision, independent of both kernel tables.
std::vector<double> gemm_reference(int M, int N, int K, const std::vector<float>& A, const std::vector<float>& B) {
    std::vector<double> C(static_cast<std::size_t>(M) * N, 0.0);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < K; ++k) C[i * N + j] += double(A[i * K + k]) * B[k * N + j];
    return C;
}

struct IsaGuard {
    Isa saved = active_isa();
    ~IsaGuard() { set_active_isa(saved); }
};

}  // namespace

TEST_CASE("scalar gemm matches double-precision reference over awkward sizes") {
    std::mt19937 rng(7);
    for (int M : {1, 3, 4, 5, 17})
        for (int N : {1, 7, 8, 9, 16, 33})
            for (int K : {1, 2, 9, 31}) {
                auto A = random_vec(M * K, rng);
                auto B = random_vec(K * N, rng);
                std::vector<float> C(M * N, 0.5f);
                scalar_kernels().gemm(M, N, K, A.data(), B.data(), C.data(), false);
                auto ref = gemm_reference(M, N, K, A, B);
                for (int i = 0; i < M * N; ++i) CHECK(C[i] == doctest::Approx(ref[i]).epsilon(1e-5));
            }
}

TEST_CASE("scalar gemm_nt matches double-precision reference") {
    std::mt19937 rng(8);
    for (int M : {1, 2, 3, 7})
        for (int N : {1, 4, 5, 9})
            for (int K : {1, 8, 13, 70}) {
                auto A = random_vec(M * K, rng);
                auto B = random_vec(K * N, rng);
                std::vector<float> Bt(static_cast<std::size_t>(N) * K);
                for (int k = 0; k < K; ++k)
                    for (int j = 0; j < N; ++j) Bt[j * K + k] = B[k * N + j];
                std::vector<float> C(M * N, 0.5f);
                scalar_kernels().gemm_nt(M, N, K, A.data(), Bt.data(), C.data(), false);
                auto ref = gemm_reference(M, N, K, A, B);
                for (int i = 0; i < M * N; ++i) CHECK(C[i] == doctest::Approx(ref[i]).epsilon(1e-5));
            }
}

TEST_CASE("avx2 kernels agree with scalar reference") {
    if (!isa_supported(Isa::avx2)) {
        MESSAGE("avx2 not available on this CPU; equivalence check skipped");
        return;
    }
    const KernelTable& s = scalar_kernels();
    const KernelTable& v = *avx2_kernels();
    std::mt19937 rng(11);
    for (int M : {1, 4, 6, 13})
        for (int N : {1, 5, 8, 15, 16, 17, 40})
            for (int K : {1, 3, 64}) {
                auto A = random_vec(M * K, rng);
                auto B = random_vec(K * N, rng);
                auto C0 = random_vec(M * N, rng);
                for (bool acc : {false, true}) {
                    auto cs = C0;
                    auto cv = C0;
                    s.gemm(M, N, K, A.data(), B.data(), cs.data(), acc);
                    v.gemm(M, N, K, A.data(), B.data(), cv.data(), acc);
                    for (int i = 0; i < M * N; ++i) CHECK(cv[i] == doctest::Approx(cs[i]).epsilon(1e-5).scale(1.0));
                }
            }
    for (int M : {1, 2, 3, 5})
        for (int N : {1, 3, 4, 9})
            for (int K : {1, 7, 8, 9, 100}) {
                auto A = random_vec(M * K, rng);
                auto B = random_vec(N * K, rng);
                auto C0 = random_vec(M * N, rng);
                for (bool acc : {false, true}) {
                    auto cs = C0;
                    auto cv = C0;
                    s.gemm_nt(M, N, K, A.data(), B.data(), cs.data(), acc);
                    v.gemm_nt(M, N, K, A.data(), B.data(), cv.data(), acc);
                    for (int i = 0; i < M * N; ++i) CHECK(cv[i] == doctest::Approx(cs[i]).epsilon(1e-5).scale(1.0));
                }
            }
    for (std::size_t n : {0u, 1u, 7u, 8u, 15u, 16u, 17u, 100u, 1031u}) {
        auto x = random_vec(n, rng);
        auto y = random_vec(n, rng);
        CHECK(v.dot(x.data(), y.data(), n) == doctest::Approx(s.dot(x.data(), y.data(), n)).epsilon(1e-5).scale(1.0));
        CHECK(v.l2sq(x.data(), y.data(), n) == doctest::Approx(s.l2sq(x.data(), y.data(), n)).epsilon(1e-5));
        auto ys = y;
        auto yv = y;
        s.axpy(0.37f, x.data(), ys.data(), n);
        v.axpy(0.37f, x.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(yv[i] == doctest::Approx(ys[i]).epsilon(1e-6));
    }
}

TEST_CASE("transposed gemm wrapper handles all four layouts") {
    IsaGuard guard;
    std::mt19937 rng(3);
    const int M = 5, N = 11, K = 7;
    auto A = random_vec(M * K, rng);
    auto B = random_vec(K * N, rng);
    std::vector<float> At(K * M), Bt(N * K);
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k) At[k * M + i] = A[i * K + k];
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < N; ++j) Bt[j * K + k] = B[k * N + j];
    const auto ref = gemm_reference(M, N, K, A, B);
    for (Isa isa : {Isa::scalar, best_isa()}) {
        set_active_isa(isa);
        for (int layout = 0; layout < 4; ++layout) {
            const bool ta = layout & 1, tb = layout & 2;
            std::vector<float> C(M * N);
            gemm(ta, tb, M, N, K, ta ? At.data() : A.data(), tb ? Bt.data() : B.data(), C.data(), false);
            for (int i = 0; i < M * N; ++i) CHECK(C[i] == doctest::Approx(ref[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("isa parsing") {
    CHECK(parse_isa("scalar") == Isa::scalar);
    CHECK(parse_isa("auto") == best_isa());
    CHECK_THROWS(parse_isa("sse9"));
}
