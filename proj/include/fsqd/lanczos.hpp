#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "fsqd/errors.hpp"

namespace fsqd {

struct LanczosOptions {
    long krylov_dim = 8;      // Krylov space per restart cycle
    long max_restarts = 200;  // restart = rebuild Krylov space from best Ritz vector
    double tol = 1e-10;       // residual norm ||A x - theta x|| target (absolute)
};

struct LanczosResult {
    double value = 0.0;
    Eigen::VectorXcd vector;
    double residual = 0.0;
    long matvecs = 0;
    bool converged = false;
};

// Lowest eigenpair of a Hermitian operator given as a matvec functor, using
// restarted Lanczos with full (twice-repeated) reorthogonalization.
template <class MatVec>
LanczosResult lanczos_lowest(const MatVec& apply, Eigen::VectorXcd v0, const LanczosOptions& opt) {
    const long dim = v0.size();
    if (dim == 0) throw validation_error("lanczos on empty space");
    double nrm = v0.norm();
    if (!(nrm > 0)) throw validation_error("lanczos requires a nonzero start vector");

    LanczosResult res;
    Eigen::VectorXcd x = v0 / nrm;
    const long k_max = std::min(opt.krylov_dim, dim);

    for (long restart = 0; restart < opt.max_restarts; ++restart) {
        Eigen::MatrixXcd basis(dim, k_max);
        Eigen::VectorXd alpha(k_max), beta(k_max);
        basis.col(0) = x;
        long k = 0;
        double last_beta = 0.0;
        for (; k < k_max; ++k) {
            Eigen::VectorXcd w = apply(Eigen::VectorXcd(basis.col(k)));
            ++res.matvecs;
            alpha[k] = std::real(basis.col(k).dot(w));
            // Full reorthogonalization, repeated once for stability.
            for (int pass = 0; pass < 2; ++pass)
                for (long j = 0; j <= k; ++j) w -= basis.col(j).dot(w) * basis.col(j);
            const double b = w.norm();
            if (k + 1 < k_max) {
                if (b < 1e-14 * std::max(1.0, std::abs(alpha[k]))) {
                    ++k;  // exact invariant subspace
                    last_beta = 0.0;
                    break;
                }
                beta[k] = b;
                basis.col(k + 1) = w / b;
            } else {
                last_beta = b;
            }
        }

        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k, k);
        for (long i = 0; i < k; ++i) {
            tri(i, i) = alpha[i];
            if (i + 1 < k) tri(i, i + 1) = tri(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        const Eigen::VectorXd ritz = es.eigenvectors().col(0);
        res.value = es.eigenvalues()[0];
        x = basis.leftCols(k) * ritz.cast<std::complex<double>>();
        x /= x.norm();
        res.residual = std::abs(last_beta * ritz[k - 1]);
        if (res.residual <= opt.tol || k >= dim) {
            res.converged = (res.residual <= opt.tol) || k >= dim;
            break;
        }
    }
    res.vector = x;
    return res;
}

}  // namespace fsqd
