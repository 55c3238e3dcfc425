#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "tenrec/errors.hpp"
#include "tenrec/rng.hpp"

namespace tenrec {

struct EigResult {
    Eigen::VectorXd values;  // r eigenvalues, descending (algebraic order)
    Eigen::MatrixXd basis;   // d x r, orthonormal columns
    int sweeps = 0;
};

struct SingularPair {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd left1;
    Eigen::VectorXd right1;
    int sweeps = 0;
};

namespace detail {

inline Eigen::MatrixXd thin_q(const Eigen::MatrixXd& x) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

}  // namespace detail

/// Top-r eigenpairs (largest algebraic eigenvalues) of a symmetric matrix
/// via blocked subspace iteration with a seeded Gaussian start block and a
/// Rayleigh-Ritz projection each sweep. The power step runs on S + c*I with
/// c = ||S||_F, which is positive semidefinite, so magnitude ordering under
/// iteration coincides with algebraic ordering on S. Converged when every
/// returned pair has residual ||S q - lambda q|| <= tol * ||S||_F.
inline EigResult top_r_eigs(const Eigen::MatrixXd& S, int r, double tol = 1e-10,
                            int max_iter = 1000, std::uint64_t seed = 0) {
    const int d = static_cast<int>(S.rows());
    if (S.cols() != d) throw DimensionError("top_r_eigs: matrix not square");
    if (r < 1 || r > d) throw DimensionError("top_r_eigs: need 1 <= r <= d");
    const double scale = S.cwiseAbs().maxCoeff();
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + scale))
        throw DimensionError("top_r_eigs: matrix not symmetric");

    const double norm_f = S.norm();
    const double shift = norm_f;
    const int block = std::min(d, r + 4);

    Rng rng(seed);
    Eigen::MatrixXd q = detail::thin_q(rng.gaussian_matrix(d, block));

    EigResult out;
    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        const Eigen::MatrixXd sq = S * q;
        // Rayleigh-Ritz on S restricted to span(q).
        Eigen::MatrixXd g = q.transpose() * sq;
        g = 0.5 * (g + g.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        // Ascending from Eigen; take the r largest.
        Eigen::MatrixXd rot(block, r);
        Eigen::VectorXd vals(r);
        for (int c = 0; c < r; ++c) {
            rot.col(c) = es.eigenvectors().col(block - 1 - c);
            vals[c] = es.eigenvalues()[block - 1 - c];
        }
        const Eigen::MatrixXd ritz = q * rot;
        const Eigen::MatrixXd resid = sq * rot - ritz * vals.asDiagonal();
        double max_resid = 0.0;
        for (int c = 0; c < r; ++c)
            max_resid = std::max(max_resid, resid.col(c).norm());
        if (max_resid <= tol * norm_f) {
            out.values = vals;
            out.basis = ritz;
            out.sweeps = sweep;
            return out;
        }
        q = detail::thin_q(sq + shift * q);
    }
    throw ConvergenceError("top_r_eigs: no convergence after max_iter sweeps");
}

/// Two largest singular values of M plus the leading singular pair, via
/// subspace iteration on the Gram operator M^T M (block size 4). left1 is
/// recovered as M right1 / sigma1; for sigma1 = 0 both vectors default to e1.
inline SingularPair top_two_singular(const Eigen::MatrixXd& M,
                                     double tol = 1e-10, int max_iter = 1000,
                                     std::uint64_t seed = 0) {
    const int m = static_cast<int>(M.rows());
    const int n = static_cast<int>(M.cols());
    if (m == 0 || n == 0) throw DimensionError("top_two_singular: empty matrix");

    SingularPair out;
    const double gram_norm = (M.transpose() * M).norm();
    if (gram_norm == 0.0) {
        out.left1 = Eigen::VectorXd::Unit(m, 0);
        out.right1 = Eigen::VectorXd::Unit(n, 0);
        return out;
    }

    const int block = std::min(n, 4);
    const int want = std::min(n, 2);
    Rng rng(seed);
    Eigen::MatrixXd q = detail::thin_q(rng.gaussian_matrix(n, block));

    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        const Eigen::MatrixXd mq = M * q;
        const Eigen::MatrixXd gq = M.transpose() * mq;  // (M^T M) q
        Eigen::MatrixXd g = q.transpose() * gq;
        g = 0.5 * (g + g.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        Eigen::MatrixXd rot(block, want);
        Eigen::VectorXd vals(want);
        for (int c = 0; c < want; ++c) {
            rot.col(c) = es.eigenvectors().col(block - 1 - c);
            vals[c] = es.eigenvalues()[block - 1 - c];
        }
        const Eigen::MatrixXd ritz = q * rot;
        const Eigen::MatrixXd resid = gq * rot - ritz * vals.asDiagonal();
        double max_resid = 0.0;
        for (int c = 0; c < want; ++c)
            max_resid = std::max(max_resid, resid.col(c).norm());
        if (max_resid <= tol * gram_norm) {
            out.sigma1 = std::sqrt(std::max(0.0, vals[0]));
            out.sigma2 = want > 1 ? std::sqrt(std::max(0.0, vals[1])) : 0.0;
            out.right1 = ritz.col(0);
            const Eigen::VectorXd mv = M * out.right1;
            const double len = mv.norm();
            out.left1 = len > 0.0 ? Eigen::VectorXd(mv / len)
                                  : Eigen::VectorXd::Unit(m, 0);
            out.sigma1 = len;  // consistent with the returned pair
            out.sigma2 = std::min(out.sigma2, out.sigma1);
            out.sweeps = sweep;
            return out;
        }
        q = detail::thin_q(gq);
    }
    throw ConvergenceError("top_two_singular: no convergence after max_iter sweeps");
}

}  // namespace tenrec
