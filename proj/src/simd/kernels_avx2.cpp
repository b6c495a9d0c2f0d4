#include "melm/simd/kernels.hpp"

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma;
// nothing here may run unless the dispatcher confirmed cpu support.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace melm::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    double total = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

void scal_avx2(std::size_t n, double a, double* x) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

void shift_avx2(std::size_t n, double a, double* x) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_add_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] += a;
}

void mix_avx2(std::size_t n, double a, const double* x, double b, const double* y, double* z) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(z + i, _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), ax));
    }
    for (; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

void hadamard_avx2(std::size_t n, const double* x, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] *= x[i];
}

double sqdist_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double total = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        total += d * d;
    }
    return total;
}

// Packed GEMM. A and B are repacked into microtile-contiguous panels so the
// 8x4 microkernel streams both operands linearly; blocking constants keep
// the A panel in L2 and the B microtile column in L1.
constexpr std::size_t kMr = 8;
constexpr std::size_t kNr = 4;
constexpr std::size_t kMc = 128;
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 1024;

// Apack: for each 8-row microtile, kc runs of 8 contiguous values
// (zero-padded past m). Bpack: for each 4-column microtile, kc runs of 4.
void pack_a(std::size_t mc, std::size_t kc, const double* a, std::size_t lda, double* dst) {
    for (std::size_t i0 = 0; i0 < mc; i0 += kMr) {
        const std::size_t mr = (mc - i0 < kMr) ? mc - i0 : kMr;
        for (std::size_t p = 0; p < kc; ++p) {
            const double* src = a + i0 + p * lda;
            std::size_t r = 0;
            for (; r < mr; ++r) dst[r] = src[r];
            for (; r < kMr; ++r) dst[r] = 0.0;
            dst += kMr;
        }
    }
}

void pack_b(std::size_t kc, std::size_t nc, const double* b, std::size_t ldb, double* dst) {
    for (std::size_t j0 = 0; j0 < nc; j0 += kNr) {
        const std::size_t nr = (nc - j0 < kNr) ? nc - j0 : kNr;
        for (std::size_t p = 0; p < kc; ++p) {
            std::size_t cidx = 0;
            for (; cidx < nr; ++cidx) dst[cidx] = b[p + (j0 + cidx) * ldb];
            for (; cidx < kNr; ++cidx) dst[cidx] = 0.0;
            dst += kNr;
        }
    }
}

// C tile += Apack(8 x kc) * Bpack(kc x 4); mr/nr trim the store.
inline void gemm_microkernel(std::size_t kc, const double* ap, const double* bp,
                             double* c, std::size_t ldc, std::size_t mr, std::size_t nr) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    for (std::size_t p = 0; p < kc; ++p) {
        const __m256d a0 = _mm256_load_pd(ap);
        const __m256d a1 = _mm256_load_pd(ap + 4);
        ap += kMr;
        __m256d bj = _mm256_broadcast_sd(bp + 0);
        c00 = _mm256_fmadd_pd(a0, bj, c00);
        c01 = _mm256_fmadd_pd(a1, bj, c01);
        bj = _mm256_broadcast_sd(bp + 1);
        c10 = _mm256_fmadd_pd(a0, bj, c10);
        c11 = _mm256_fmadd_pd(a1, bj, c11);
        bj = _mm256_broadcast_sd(bp + 2);
        c20 = _mm256_fmadd_pd(a0, bj, c20);
        c21 = _mm256_fmadd_pd(a1, bj, c21);
        bj = _mm256_broadcast_sd(bp + 3);
        c30 = _mm256_fmadd_pd(a0, bj, c30);
        c31 = _mm256_fmadd_pd(a1, bj, c31);
        bp += kNr;
    }
    if (mr == kMr && nr == kNr) {
        double* c0 = c;
        _mm256_storeu_pd(c0, _mm256_add_pd(c00, _mm256_loadu_pd(c0)));
        _mm256_storeu_pd(c0 + 4, _mm256_add_pd(c01, _mm256_loadu_pd(c0 + 4)));
        c0 = c + ldc;
        _mm256_storeu_pd(c0, _mm256_add_pd(c10, _mm256_loadu_pd(c0)));
        _mm256_storeu_pd(c0 + 4, _mm256_add_pd(c11, _mm256_loadu_pd(c0 + 4)));
        c0 = c + 2 * ldc;
        _mm256_storeu_pd(c0, _mm256_add_pd(c20, _mm256_loadu_pd(c0)));
        _mm256_storeu_pd(c0 + 4, _mm256_add_pd(c21, _mm256_loadu_pd(c0 + 4)));
        c0 = c + 3 * ldc;
        _mm256_storeu_pd(c0, _mm256_add_pd(c30, _mm256_loadu_pd(c0)));
        _mm256_storeu_pd(c0 + 4, _mm256_add_pd(c31, _mm256_loadu_pd(c0 + 4)));
        return;
    }
    alignas(32) double tile[kMr * kNr];
    _mm256_store_pd(tile + 0, c00);
    _mm256_store_pd(tile + 4, c01);
    _mm256_store_pd(tile + 8, c10);
    _mm256_store_pd(tile + 12, c11);
    _mm256_store_pd(tile + 16, c20);
    _mm256_store_pd(tile + 20, c21);
    _mm256_store_pd(tile + 24, c30);
    _mm256_store_pd(tile + 28, c31);
    for (std::size_t jj = 0; jj < nr; ++jj)
        for (std::size_t ii = 0; ii < mr; ++ii) c[ii + jj * ldc] += tile[ii + jj * kMr];
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k,
               const double* a, std::size_t lda,
               const double* b, std::size_t ldb,
               double* c, std::size_t ldc, bool accumulate) {
    if (!accumulate) {
        for (std::size_t j = 0; j < n; ++j) std::memset(c + j * ldc, 0, m * sizeof(double));
    }
    if (m == 0 || n == 0 || k == 0) return;

    thread_local std::vector<double> apack, bpack;
    apack.resize(((kMc + kMr - 1) / kMr) * kMr * kKc + 8);
    bpack.resize(((kNc + kNr - 1) / kNr) * kNr * kKc + 8);
    // Align pack bases for the aligned microkernel loads.
    auto aligned = [](double* p) {
        auto addr = reinterpret_cast<std::uintptr_t>(p);
        return reinterpret_cast<double*>((addr + 31) & ~std::uintptr_t{31});
    };
    double* apk = aligned(apack.data());
    double* bpk = aligned(bpack.data());

    for (std::size_t jj = 0; jj < n; jj += kNc) {
        const std::size_t nc = (n - jj < kNc) ? n - jj : kNc;
        for (std::size_t pp = 0; pp < k; pp += kKc) {
            const std::size_t kc = (k - pp < kKc) ? k - pp : kKc;
            pack_b(kc, nc, b + pp + jj * ldb, ldb, bpk);
            for (std::size_t ii = 0; ii < m; ii += kMc) {
                const std::size_t mc = (m - ii < kMc) ? m - ii : kMc;
                pack_a(mc, kc, a + ii + pp * lda, lda, apk);
                for (std::size_t j0 = 0; j0 < nc; j0 += kNr) {
                    const std::size_t nr = (nc - j0 < kNr) ? nc - j0 : kNr;
                    const double* bp = bpk + (j0 / kNr) * kc * kNr;
                    for (std::size_t i0 = 0; i0 < mc; i0 += kMr) {
                        const std::size_t mr = (mc - i0 < kMr) ? mc - i0 : kMr;
                        gemm_microkernel(kc, apk + (i0 / kMr) * kc * kMr, bp,
                                         c + (ii + i0) + (jj + j0) * ldc, ldc, mr, nr);
                    }
                }
            }
        }
    }
}

void sqdist_matrix_avx2(std::size_t dim, std::size_t ns, std::size_t nc,
                        const double* x, std::size_t ldx,
                        const double* centers, std::size_t ldc,
                        double* d, std::size_t ldd) {
    // 2x2 tile over (sample, center) pairs shares vector loads.
    std::size_t j = 0;
    for (; j + 2 <= nc; j += 2) {
        const double* c0 = centers + j * ldc;
        const double* c1 = centers + (j + 1) * ldc;
        std::size_t i = 0;
        for (; i + 2 <= ns; i += 2) {
            const double* x0 = x + i * ldx;
            const double* x1 = x + (i + 1) * ldx;
            __m256d a00 = _mm256_setzero_pd();
            __m256d a01 = _mm256_setzero_pd();
            __m256d a10 = _mm256_setzero_pd();
            __m256d a11 = _mm256_setzero_pd();
            std::size_t p = 0;
            for (; p + 4 <= dim; p += 4) {
                const __m256d vx0 = _mm256_loadu_pd(x0 + p);
                const __m256d vx1 = _mm256_loadu_pd(x1 + p);
                const __m256d vc0 = _mm256_loadu_pd(c0 + p);
                const __m256d vc1 = _mm256_loadu_pd(c1 + p);
                const __m256d d00 = _mm256_sub_pd(vx0, vc0);
                const __m256d d01 = _mm256_sub_pd(vx0, vc1);
                const __m256d d10 = _mm256_sub_pd(vx1, vc0);
                const __m256d d11 = _mm256_sub_pd(vx1, vc1);
                a00 = _mm256_fmadd_pd(d00, d00, a00);
                a01 = _mm256_fmadd_pd(d01, d01, a01);
                a10 = _mm256_fmadd_pd(d10, d10, a10);
                a11 = _mm256_fmadd_pd(d11, d11, a11);
            }
            double s00 = hsum(a00), s01 = hsum(a01), s10 = hsum(a10), s11 = hsum(a11);
            for (; p < dim; ++p) {
                const double e00 = x0[p] - c0[p];
                const double e01 = x0[p] - c1[p];
                const double e10 = x1[p] - c0[p];
                const double e11 = x1[p] - c1[p];
                s00 += e00 * e00;
                s01 += e01 * e01;
                s10 += e10 * e10;
                s11 += e11 * e11;
            }
            d[i + j * ldd] = s00;
            d[i + (j + 1) * ldd] = s01;
            d[i + 1 + j * ldd] = s10;
            d[i + 1 + (j + 1) * ldd] = s11;
        }
        for (; i < ns; ++i) {
            d[i + j * ldd] = sqdist_avx2(dim, x + i * ldx, c0);
            d[i + (j + 1) * ldd] = sqdist_avx2(dim, x + i * ldx, c1);
        }
    }
    for (; j < nc; ++j) {
        const double* cj = centers + j * ldc;
        for (std::size_t i = 0; i < ns; ++i) {
            d[i + j * ldd] = sqdist_avx2(dim, x + i * ldx, cj);
        }
    }
}

void relu_avx2(std::size_t n, double* z) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(z + i, _mm256_max_pd(zero, _mm256_loadu_pd(z + i)));
    }
    for (; i < n; ++i) z[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void softlim_avx2(std::size_t n, double* z) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(z + i);
        v = _mm256_max_pd(zero, v);
        v = _mm256_min_pd(one, v);
        _mm256_storeu_pd(z + i, v);
    }
    for (; i < n; ++i) {
        double v = z[i];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        z[i] = v;
    }
}

void hardlim_avx2(std::size_t n, double* z) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gt = _mm256_cmp_pd(_mm256_loadu_pd(z + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(z + i, _mm256_and_pd(gt, one));
    }
    for (; i < n; ++i) z[i] = z[i] > 0.0 ? 1.0 : 0.0;
}

// mul+add rather than fma so the rounding matches the scalar kernel exactly.
void multiquadric_avx2(std::size_t n, double* z) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(z + i);
        _mm256_storeu_pd(z + i, _mm256_sqrt_pd(_mm256_add_pd(one, _mm256_mul_pd(v, v))));
    }
    for (; i < n; ++i) z[i] = std::sqrt(1.0 + z[i] * z[i]);
}

// tanh stays on libm in both tables so results are identical.
void tanh_avx2(std::size_t n, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = std::tanh(z[i]);
}

}  // namespace

const Kernels* avx2_kernels() {
    static const Kernels table = {
        "avx2",
        axpy_avx2,
        dot_avx2,
        scal_avx2,
        shift_avx2,
        mix_avx2,
        hadamard_avx2,
        sqdist_avx2,
        gemm_avx2,
        sqdist_matrix_avx2,
        relu_avx2,
        softlim_avx2,
        hardlim_avx2,
        multiquadric_avx2,
        tanh_avx2,
    };
    const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &table : nullptr;
}

}  // namespace melm::simd

#else  // non-x86 targets: no AVX2 table

namespace melm::simd {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace melm::simd

#endif
