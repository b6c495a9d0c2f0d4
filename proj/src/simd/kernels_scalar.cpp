#include "melm/simd/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops, no intrinsics; these define the
// semantics the vector variants are tested against.

namespace melm::simd {
namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void scal_scalar(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void shift_scalar(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] += a;
}

void mix_scalar(std::size_t n, double a, const double* x, double b, const double* y, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

void hadamard_scalar(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

double sqdist_scalar(std::size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

void gemm_scalar(std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda,
                 const double* b, std::size_t ldb,
                 double* c, std::size_t ldc, bool accumulate) {
    for (std::size_t j = 0; j < n; ++j) {
        double* cj = c + j * ldc;
        if (!accumulate) {
            for (std::size_t i = 0; i < m; ++i) cj[i] = 0.0;
        }
        for (std::size_t p = 0; p < k; ++p) {
            const double bpj = b[p + j * ldb];
            if (bpj == 0.0) continue;
            const double* ap = a + p * lda;
            for (std::size_t i = 0; i < m; ++i) cj[i] += ap[i] * bpj;
        }
    }
}

void sqdist_matrix_scalar(std::size_t dim, std::size_t ns, std::size_t nc,
                          const double* x, std::size_t ldx,
                          const double* centers, std::size_t ldc,
                          double* d, std::size_t ldd) {
    for (std::size_t j = 0; j < nc; ++j) {
        const double* cj = centers + j * ldc;
        for (std::size_t i = 0; i < ns; ++i) {
            d[i + j * ldd] = sqdist_scalar(dim, x + i * ldx, cj);
        }
    }
}

void relu_scalar(std::size_t n, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void softlim_scalar(std::size_t n, double* z) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = z[i];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        z[i] = v;
    }
}

void hardlim_scalar(std::size_t n, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = z[i] > 0.0 ? 1.0 : 0.0;
}

void multiquadric_scalar(std::size_t n, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = std::sqrt(1.0 + z[i] * z[i]);
}

void tanh_scalar(std::size_t n, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = std::tanh(z[i]);
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels table = {
        "scalar",
        axpy_scalar,
        dot_scalar,
        scal_scalar,
        shift_scalar,
        mix_scalar,
        hadamard_scalar,
        sqdist_scalar,
        gemm_scalar,
        sqdist_matrix_scalar,
        relu_scalar,
        softlim_scalar,
        hardlim_scalar,
        multiquadric_scalar,
        tanh_scalar,
    };
    return table;
}

}  // namespace melm::simd
