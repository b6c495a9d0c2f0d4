#pragma once

#include <cstddef>
#include <string>

// Arithmetic kernel table. Every routine exists in a scalar reference
// version and, on x86-64, an AVX2+FMA version; the active table is chosen
// once at startup from cpuid. Matrix arguments are column-major with an
// explicit leading dimension, LAPACK style.
//
// Contract notes:
//  - relu/softlim/hardlim/multiquadric are exact operations (max, clamp,
//    compare, sqrt), so scalar and SIMD variants agree bit-for-bit.
//  - dot/gemm/sqdist reassociate sums; variants agree to rounding error
//    and the equivalence tests bound the difference.

namespace melm::simd {

struct Kernels {
    const char* name;

    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // sum x[i] * y[i]
    double (*dot)(std::size_t n, const double* x, const double* y);
    // x[i] *= a
    void (*scal)(std::size_t n, double a, double* x);
    // x[i] += a
    void (*shift)(std::size_t n, double a, double* x);
    // z[i] = a*x[i] + b*y[i]
    void (*mix)(std::size_t n, double a, const double* x, double b, const double* y, double* z);
    // y[i] *= x[i]
    void (*hadamard)(std::size_t n, const double* x, double* y);
    // sum (x[i] - y[i])^2
    double (*sqdist)(std::size_t n, const double* x, const double* y);

    // C = A*B (or C += A*B when accumulate), col-major, C m x n, A m x k, B k x n.
    void (*gemm)(std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda,
                 const double* b, std::size_t ldb,
                 double* c, std::size_t ldc, bool accumulate);

    // D[i + j*ldd] = squared distance between column i of X (dim x ns) and
    // column j of C (dim x nc).
    void (*sqdist_matrix)(std::size_t dim, std::size_t ns, std::size_t nc,
                          const double* x, std::size_t ldx,
                          const double* centers, std::size_t ldc,
                          double* d, std::size_t ldd);

    // Elementwise activations, in place.
    void (*relu)(std::size_t n, double* z);
    void (*softlim)(std::size_t n, double* z);         // clamp to [0,1]
    void (*hardlim)(std::size_t n, double* z);         // z > 0 ? 1 : 0
    void (*multiquadric)(std::size_t n, double* z);    // sqrt(1 + z^2)
    void (*tanh_act)(std::size_t n, double* z);
};

// Scalar reference table; always available.
const Kernels& scalar_kernels();

// AVX2+FMA table, or nullptr when the build target or the running CPU
// lacks support.
const Kernels* avx2_kernels();

// Runtime-selected table. Honors MELM_KERNELS=scalar|avx2 from the
// environment (evaluated once); requesting avx2 on an unsupported CPU
// falls back to scalar.
const Kernels& active_kernels();

// Name of the active table ("scalar" or "avx2"), for diagnostics.
std::string active_kernel_name();

}  // namespace melm::simd
