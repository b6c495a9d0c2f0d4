#include "melm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "melm/simd/kernels.hpp"

namespace melm {
namespace {

using simd::active_kernels;

constexpr std::size_t kPanel = 32;          // QR panel width
constexpr double kFastPathRelTol = 1e-6;    // diag ratio below this -> pivoted fallback

double col_sqnorm(const double* x, std::size_t n) { return active_kernels().dot(n, x, x); }

// Householder reflector for x (length n, n >= 1): overwrites x[0] with beta,
// x[1:] with the normalized tail of v (v[0] == 1 implicit), returns tau.
// H = I - tau*v*v^T maps x to beta*e1.
double make_householder(double* x, std::size_t n) {
    if (n == 1) return 0.0;
    const double x0 = x[0];
    const double sigma = col_sqnorm(x + 1, n - 1);
    if (sigma == 0.0) return 0.0;
    const double mu = std::sqrt(x0 * x0 + sigma);
    const double beta = (x0 <= 0.0) ? mu : -mu;
    const double v0 = x0 - beta;
    active_kernels().scal(n - 1, 1.0 / v0, x + 1);
    x[0] = beta;
    return -v0 / beta;
}

// Applies H = I - tau*v*v^T to column c (length n, same indexing as v).
// v[0] == 1 is implicit; v[1:] lives in vtail.
void apply_reflector(const double* vtail, double tau, double* c, std::size_t n) {
    if (tau == 0.0) return;
    double w = c[0];
    if (n > 1) w += active_kernels().dot(n - 1, vtail, c + 1);
    w *= tau;
    c[0] -= w;
    if (n > 1) active_kernels().axpy(n - 1, -w, vtail, c + 1);
}

// In-place Householder QR with compact-WY blocked trailing updates.
// On return the upper triangle of a holds R and the columns below the
// diagonal hold the reflector tails; tau holds min(m,n) scalars.
void householder_qr(Matrix& a, std::vector<double>& tau) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t k = std::min(m, n);
    tau.assign(k, 0.0);

    std::vector<double> vpanel;   // materialized V, (m - j0) x pnb
    std::vector<double> vtrans;   // V^T
    std::vector<double> tmat;     // pnb x pnb upper triangular T
    std::vector<double> work;

    for (std::size_t j0 = 0; j0 < k; j0 += kPanel) {
        const std::size_t pnb = std::min(kPanel, k - j0);
        const std::size_t mrows = m - j0;

        // Unblocked factorization of the panel.
        for (std::size_t jj = 0; jj < pnb; ++jj) {
            const std::size_t j = j0 + jj;
            double* colj = a.col(j) + j;
            tau[j] = make_householder(colj, m - j);
            for (std::size_t c = j + 1; c < j0 + pnb; ++c) {
                apply_reflector(colj + 1, tau[j], a.col(c) + j, m - j);
            }
        }

        const std::size_t ntrail = n - (j0 + pnb);
        if (ntrail == 0) continue;

        // Materialize V (unit lower trapezoidal) and V^T.
        vpanel.assign(mrows * pnb, 0.0);
        for (std::size_t jj = 0; jj < pnb; ++jj) {
            const std::size_t j = j0 + jj;
            double* dst = vpanel.data() + jj * mrows;
            dst[jj] = 1.0;
            const double* src = a.col(j) + j + 1;
            std::copy(src, src + (m - j - 1), dst + jj + 1);
        }
        vtrans.assign(pnb * mrows, 0.0);
        for (std::size_t r = 0; r < mrows; ++r)
            for (std::size_t c = 0; c < pnb; ++c)
                vtrans[c + r * pnb] = vpanel[r + c * mrows];

        // T(:,i) = -tau_i * T * (V^T v_i); T(i,i) = tau_i.
        tmat.assign(pnb * pnb, 0.0);
        work.assign(pnb, 0.0);
        for (std::size_t i = 0; i < pnb; ++i) {
            const double ti = tau[j0 + i];
            for (std::size_t r = 0; r < i; ++r) {
                tmat[r + i * pnb] = active_kernels().dot(
                    mrows, vpanel.data() + r * mrows, vpanel.data() + i * mrows);
            }
            for (std::size_t r = 0; r < i; ++r) {
                double acc = 0.0;
                for (std::size_t s = r; s < i; ++s) acc += tmat[r + s * pnb] * tmat[s + i * pnb];
                work[r] = -ti * acc;
            }
            for (std::size_t r = 0; r < i; ++r) tmat[r + i * pnb] = work[r];
            tmat[i + i * pnb] = ti;
        }

        // Trailing update: C -= V * (T^T * (V^T * C)).
        double* ctrail = a.col(j0 + pnb) + j0;
        const std::size_t ldc = m;
        std::vector<double> w1(pnb * ntrail);
        active_kernels().gemm(pnb, ntrail, mrows, vtrans.data(), pnb, ctrail, ldc,
                              w1.data(), pnb, false);
        std::vector<double> w2(pnb * ntrail, 0.0);
        for (std::size_t c = 0; c < ntrail; ++c) {
            for (std::size_t r = 0; r < pnb; ++r) {
                double acc = 0.0;
                for (std::size_t s = 0; s <= r; ++s) acc += tmat[s + r * pnb] * w1[s + c * pnb];
                w2[r + c * pnb] = -acc;
            }
        }
        active_kernels().gemm(mrows, ntrail, pnb, vpanel.data(), mrows, w2.data(), pnb,
                              ctrail, ldc, true);
    }
}

// B <- Q^T * B given the factored matrix (reflectors applied first to last).
void apply_qt(const Matrix& qr, const std::vector<double>& tau, Matrix& b) {
    const std::size_t m = qr.rows();
    for (std::size_t j = 0; j < tau.size(); ++j) {
        const double* vtail = qr.col(j) + j + 1;
        for (std::size_t c = 0; c < b.cols(); ++c) {
            apply_reflector(vtail, tau[j], b.col(c) + j, m - j);
        }
    }
}

// B <- Q * B (reflectors applied last to first).
void apply_q(const Matrix& qr, const std::vector<double>& tau, Matrix& b) {
    const std::size_t m = qr.rows();
    for (std::size_t j = tau.size(); j-- > 0;) {
        const double* vtail = qr.col(j) + j + 1;
        for (std::size_t c = 0; c < b.cols(); ++c) {
            apply_reflector(vtail, tau[j], b.col(c) + j, m - j);
        }
    }
}

// Solves R x = b in place for the leading `rank` rows, R upper triangular
// from a factored matrix.
void solve_upper(const Matrix& r, Matrix& b, std::size_t rank) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
        double* bc = b.col(c);
        for (std::size_t i = rank; i-- > 0;) {
            double acc = bc[i];
            for (std::size_t j = i + 1; j < rank; ++j) acc -= r(i, j) * bc[j];
            bc[i] = acc / r(i, i);
        }
    }
}

// Solves R^T x = b in place for the leading `rank` rows (forward
// substitution; columns of R are contiguous).
void solve_upper_transposed(const Matrix& r, Matrix& b, std::size_t rank) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
        double* bc = b.col(c);
        for (std::size_t i = 0; i < rank; ++i) {
            double acc = bc[i];
            if (i > 0) acc -= active_kernels().dot(i, r.col(i), bc);
            bc[i] = acc / r(i, i);
        }
    }
}

struct DiagStats {
    double max_abs = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
};

DiagStats diag_stats(const Matrix& a, std::size_t k) {
    DiagStats s;
    for (std::size_t i = 0; i < k; ++i) {
        const double v = std::abs(a(i, i));
        s.max_abs = std::max(s.max_abs, v);
        s.min_abs = std::min(s.min_abs, v);
    }
    return s;
}

// Column-pivoted Householder QR (unblocked). Column norms are downdated and
// recomputed from scratch when cancellation makes them untrustworthy.
void pivoted_qr(Matrix& a, std::vector<double>& tau, std::vector<std::size_t>& perm) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t k = std::min(m, n);
    tau.assign(k, 0.0);
    perm.resize(n);
    for (std::size_t j = 0; j < n; ++j) perm[j] = j;

    std::vector<double> norms(n), orig(n);
    for (std::size_t j = 0; j < n; ++j) orig[j] = norms[j] = col_sqnorm(a.col(j), m);

    for (std::size_t j = 0; j < k; ++j) {
        std::size_t pivot = j;
        for (std::size_t c = j + 1; c < n; ++c) {
            if (norms[c] > norms[pivot]) pivot = c;
        }
        if (pivot != j) {
            for (std::size_t r = 0; r < m; ++r) std::swap(a(r, j), a(r, pivot));
            std::swap(norms[j], norms[pivot]);
            std::swap(orig[j], orig[pivot]);
            std::swap(perm[j], perm[pivot]);
        }

        double* colj = a.col(j) + j;
        tau[j] = make_householder(colj, m - j);
        for (std::size_t c = j + 1; c < n; ++c) {
            apply_reflector(colj + 1, tau[j], a.col(c) + j, m - j);
            const double rjc = a(j, c);
            norms[c] -= rjc * rjc;
            if (norms[c] < 1e-8 * orig[c] || norms[c] < 0.0) {
                norms[c] = (j + 1 < m) ? col_sqnorm(a.col(c) + j + 1, m - j - 1) : 0.0;
                orig[c] = norms[c];
            }
        }
    }
}

std::size_t numeric_rank(const Matrix& factored, std::size_t k, std::size_t m, std::size_t n) {
    if (k == 0) return 0;
    const double dmax = std::abs(factored(0, 0));  // pivoting puts the largest first
    if (dmax == 0.0) return 0;
    const double tol = static_cast<double>(std::max(m, n)) *
                       std::numeric_limits<double>::epsilon() * dmax;
    std::size_t r = 0;
    while (r < k && std::abs(factored(r, r)) > tol) ++r;
    return r;
}

// Rank-revealing route: CPQR + complete orthogonal decomposition, returns
// the minimum-norm minimizer for any rank.
Matrix cod_solve(const Matrix& h, const Matrix& y) {
    const std::size_t m = h.rows();
    const std::size_t n = h.cols();
    const std::size_t p = y.cols();

    Matrix a = h;
    std::vector<double> tau;
    std::vector<std::size_t> perm;
    pivoted_qr(a, tau, perm);

    const std::size_t r = numeric_rank(a, std::min(m, n), m, n);
    Matrix beta(n, p);
    if (r == 0) return beta;

    Matrix c = y;
    apply_qt(a, tau, c);

    if (r == n) {
        // Full column rank after pivoting: plain triangular solve.
        solve_upper(a, c, r);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) beta(perm[i], j) = c(i, j);
        return beta;
    }

    // S = top r rows of R (r x n, full row rank); factor S^T = Q2 R2, then
    // the minimum-norm z solving S z = c1 is Q2 * (R2^{-T} c1).
    Matrix st(n, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = i; j < n; ++j) st(j, i) = a(i, j);
    std::vector<double> tau2;
    householder_qr(st, tau2);

    Matrix z(n, p);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < p; ++j) z(i, j) = c(i, j);
    solve_upper_transposed(st, z, r);
    apply_q(st, tau2, z);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) beta(perm[i], j) = z(i, j);
    return beta;
}

Matrix solve_unregularized(const Matrix& h, const Matrix& y) {
    const std::size_t m = h.rows();
    const std::size_t n = h.cols();
    const std::size_t p = y.cols();

    if (m >= n) {
        Matrix a = h;
        std::vector<double> tau;
        householder_qr(a, tau);
        const DiagStats d = diag_stats(a, n);
        if (d.max_abs > 0.0 && d.min_abs > kFastPathRelTol * d.max_abs) {
            Matrix c = y;
            apply_qt(a, tau, c);
            solve_upper(a, c, n);
            Matrix beta(n, p);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < p; ++j) beta(i, j) = c(i, j);
            return beta;
        }
        return cod_solve(h, y);
    }

    // Wide system: QR of H^T gives H = L Q with L = R^T; the minimum-norm
    // solution is Q^T's leading columns applied to L^{-1} Y.
    Matrix at = transpose(h);
    std::vector<double> tau;
    householder_qr(at, tau);
    const DiagStats d = diag_stats(at, m);
    if (d.max_abs > 0.0 && d.min_abs > kFastPathRelTol * d.max_abs) {
        Matrix z(n, p);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j) z(i, j) = y(i, j);
        solve_upper_transposed(at, z, m);
        apply_q(at, tau, z);
        return z;
    }
    return cod_solve(h, y);
}

}  // namespace

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    constexpr std::size_t kBlock = 32;
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += kBlock) {
        const std::size_t j1 = std::min(j0 + kBlock, a.cols());
        for (std::size_t i0 = 0; i0 < a.rows(); i0 += kBlock) {
            const std::size_t i1 = std::min(i0 + kBlock, a.rows());
            for (std::size_t j = j0; j < j1; ++j)
                for (std::size_t i = i0; i < i1; ++i) t(j, i) = a(i, j);
        }
    }
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols());
    if (a.rows() == 0 || b.cols() == 0 || a.cols() == 0) return c;
    active_kernels().gemm(a.rows(), b.cols(), a.cols(), a.data(), a.rows(), b.data(),
                          b.rows(), c.data(), c.rows(), false);
    return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

double frobenius_norm(const Matrix& a) {
    return std::sqrt(col_sqnorm(a.data(), a.size()));
}

Matrix least_squares_solve(const Matrix& h, const Matrix& y, const LstsqOptions& opts) {
    if (h.rows() != y.rows()) {
        throw std::invalid_argument("least_squares_solve: H has " + std::to_string(h.rows()) +
                                    " rows but Y has " + std::to_string(y.rows()));
    }
    if (h.rows() == 0 || h.cols() == 0) {
        throw std::invalid_argument("least_squares_solve: empty system");
    }
    if (opts.ridge < 0.0) {
        throw std::invalid_argument("least_squares_solve: ridge must be nonnegative");
    }

    if (opts.ridge > 0.0) {
        const std::size_t m = h.rows(), n = h.cols(), p = y.cols();
        Matrix haug(m + n, n);
        Matrix yaug(m + n, p);
        const double s = std::sqrt(opts.ridge);
        for (std::size_t j = 0; j < n; ++j) {
            std::copy(h.col(j), h.col(j) + m, haug.col(j));
            haug(m + j, j) = s;
        }
        for (std::size_t j = 0; j < p; ++j) std::copy(y.col(j), y.col(j) + m, yaug.col(j));
        return solve_unregularized(haug, yaug);
    }
    return solve_unregularized(h, y);
}

}  // namespace melm
