#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tenrec/errors.hpp"
#include "tenrec/instances.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

/// Exact min-cost perfect matching on a square cost matrix via the shortest
/// augmenting path method with potentials (O(n^3)). Returns, for each
/// column b, the row matched to it.
inline std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw DimensionError("solve_assignment: not square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_of_col(n);
    for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
    return row_of_col;
}

/// Permutation pi minimizing sum_i ||u_{pi(i)} - u*_i||_2^2; pi[i] is the
/// column of U matched to column i of Ustar.
inline std::vector<int> match_permutation(const FactorMatrix& U,
                                          const FactorMatrix& Ustar) {
    if (U.rows() != Ustar.rows() || U.cols() != Ustar.cols())
        throw DimensionError("match_permutation: shape mismatch");
    const int r = static_cast<int>(U.cols());
    Eigen::MatrixXd cost(r, r);
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b)
            cost(a, b) = (U.col(a) - Ustar.col(b)).squaredNorm();
    return solve_assignment(cost);
}

struct FactorErrors {
    double dist_f = 0.0;
    double dist_2inf = 0.0;
    double dist_inf = 0.0;
    std::vector<int> matched_perm;
};

/// All three distances evaluated at the dist_F-optimal permutation.
inline FactorErrors factor_errors(const FactorMatrix& U,
                                  const FactorMatrix& Ustar) {
    FactorErrors e;
    e.matched_perm = match_permutation(U, Ustar);
    const int r = static_cast<int>(U.cols());
    Eigen::MatrixXd diff(U.rows(), r);
    for (int c = 0; c < r; ++c)
        diff.col(c) = U.col(e.matched_perm[c]) - Ustar.col(c);
    e.dist_f = diff.norm();
    e.dist_2inf = std::sqrt(diff.rowwise().squaredNorm().maxCoeff());
    e.dist_inf = diff.cwiseAbs().maxCoeff();
    return e;
}

/// <sum_i u_i^(x)3, sum_j v_j^(x)3> = sum_{ij} <u_i, v_j>^3.
inline double cp_inner(const FactorMatrix& U, const FactorMatrix& V) {
    const Eigen::MatrixXd g = U.transpose() * V;
    return g.array().cube().sum();
}

/// (||That - T*||_F / ||T*||_F, ||That - T*||_inf / ||T*||_inf) with
/// That = cp_compose(U), T* = cp_compose(Ustar). The Frobenius part uses
/// the Gram identity; the sup norm scans d x d slabs, so neither tensor is
/// materialized.
inline std::pair<double, double> tensor_errors(const FactorMatrix& U,
                                               const FactorMatrix& Ustar) {
    if (U.rows() != Ustar.rows())
        throw DimensionError("tensor_errors: shape mismatch");
    const int d = static_cast<int>(U.rows());
    const double star_sq = cp_frob_sq(Ustar);
    if (star_sq == 0.0) throw Error("tensor_errors: ground truth is zero");
    const double diff_sq =
        cp_frob_sq(U) - 2.0 * cp_inner(U, Ustar) + star_sq;
    const double rel_f = std::sqrt(std::max(0.0, diff_sq) / star_sq);

    // That[:,:,k] - T*[:,:,k] = [U U*] diag(U(k,:), -U*(k,:)) [U U*]^T
    Eigen::MatrixXd c(d, U.cols() + Ustar.cols());
    c << U, Ustar;
    Eigen::VectorXd w(c.cols());
    double diff_inf = 0.0;
    double star_inf = 0.0;
    Eigen::MatrixXd slab;
    for (int k = 0; k < d; ++k) {
        w.head(U.cols()) = U.row(k).transpose();
        w.tail(Ustar.cols()) = -Ustar.row(k).transpose();
        slab.noalias() = c * w.asDiagonal() * c.transpose();
        diff_inf = std::max(diff_inf, slab.cwiseAbs().maxCoeff());
        slab.noalias() =
            Ustar * Ustar.row(k).asDiagonal() * Ustar.transpose();
        star_inf = std::max(star_inf, slab.cwiseAbs().maxCoeff());
    }
    return {rel_f, diff_inf / star_inf};
}

/// Trial success criterion: dist_F(U, U*) / ||U*||_F <= threshold.
inline bool success(const FactorMatrix& U, const FactorMatrix& Ustar,
                    double threshold = 0.01) {
    return factor_errors(U, Ustar).dist_f <= threshold * Ustar.norm();
}

inline nlohmann::json metrics_json(const FactorMatrix& U,
                                   const FactorMatrix& Ustar,
                                   double threshold = 0.01) {
    const FactorErrors fe = factor_errors(U, Ustar);
    const auto [rel_f, rel_inf] = tensor_errors(U, Ustar);
    return {
        {"dist_f", fe.dist_f},
        {"dist_2inf", fe.dist_2inf},
        {"dist_inf", fe.dist_inf},
        {"rel_tensor_f", rel_f},
        {"rel_tensor_inf", rel_inf},
        {"success", fe.dist_f <= threshold * Ustar.norm()},
    };
}

}  // namespace tenrec
