#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "tenrec/errors.hpp"

namespace tenrec {

/// d x r matrix whose columns are CP factors.
using FactorMatrix = Eigen::MatrixXd;

/// Dense order-3 tensor, row-major: (i, j, k) -> (i*d2 + j)*d3 + k.
struct Tensor3 {
    int d1 = 0, d2 = 0, d3 = 0;
    std::vector<double> values;

    Tensor3() = default;
    Tensor3(int n1, int n2, int n3)
        : d1(n1), d2(n2), d3(n3),
          values(static_cast<std::size_t>(n1) * n2 * n3, 0.0) {}

    double& operator()(int i, int j, int k) {
        return values[(static_cast<std::size_t>(i) * d2 + j) * d3 + k];
    }
    double operator()(int i, int j, int k) const {
        return values[(static_cast<std::size_t>(i) * d2 + j) * d3 + k];
    }
};

/// Symmetric order-3 tensor with full d^3 storage. Writes go through
/// set_orbit, which stores one value at all index permutations, so the
/// array is symmetric exactly (bit-for-bit), not just to rounding.
struct SymTensor3 {
    Tensor3 data;

    SymTensor3() = default;
    explicit SymTensor3(int d) : data(d, d, d) {}

    int dim() const { return data.d1; }
    double operator()(int i, int j, int k) const { return data(i, j, k); }

    void set_orbit(int i, int j, int k, double v) {
        data(i, j, k) = v;
        data(i, k, j) = v;
        data(j, i, k) = v;
        data(j, k, i) = v;
        data(k, i, j) = v;
        data(k, j, i) = v;
    }
};

namespace detail {
inline void require(bool ok, const char* what) {
    if (!ok) throw DimensionError(what);
}
}  // namespace detail

/// result[i,j,k] = u_i v_j w_k.
inline Tensor3 outer3(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const Eigen::VectorXd& w) {
    Tensor3 t(static_cast<int>(u.size()), static_cast<int>(v.size()),
              static_cast<int>(w.size()));
    std::size_t pos = 0;
    for (int i = 0; i < t.d1; ++i)
        for (int j = 0; j < t.d2; ++j) {
            const double uv = u[i] * v[j];
            for (int k = 0; k < t.d3; ++k) t.values[pos++] = uv * w[k];
        }
    return t;
}

/// sum_i u_i (x) u_i (x) u_i; exactly symmetric by construction.
inline SymTensor3 cp_compose(const FactorMatrix& U) {
    const int d = static_cast<int>(U.rows());
    const int r = static_cast<int>(U.cols());
    SymTensor3 t(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int k = j; k < d; ++k) {
                double v = 0.0;
                for (int c = 0; c < r; ++c) v += U(i, c) * U(j, c) * U(k, c);
                t.set_orbit(i, j, k, v);
            }
    return t;
}

/// Contract one mode with a vector. axis=3: result[i,j] = sum_k T[i,j,k] u_k;
/// axis=1 gives a d2 x d3 matrix, axis=2 a d1 x d3 matrix.
inline Eigen::MatrixXd mode_product(const Tensor3& T, int axis,
                                    const Eigen::VectorXd& u) {
    switch (axis) {
        case 1: {
            detail::require(u.size() == T.d1, "mode_product axis 1: bad length");
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T.d2, T.d3);
            for (int i = 0; i < T.d1; ++i)
                for (int j = 0; j < T.d2; ++j)
                    for (int k = 0; k < T.d3; ++k) m(j, k) += T(i, j, k) * u[i];
            return m;
        }
        case 2: {
            detail::require(u.size() == T.d2, "mode_product axis 2: bad length");
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T.d1, T.d3);
            for (int i = 0; i < T.d1; ++i)
                for (int j = 0; j < T.d2; ++j)
                    for (int k = 0; k < T.d3; ++k) m(i, k) += T(i, j, k) * u[j];
            return m;
        }
        case 3: {
            detail::require(u.size() == T.d3, "mode_product axis 3: bad length");
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T.d1, T.d2);
            for (int i = 0; i < T.d1; ++i)
                for (int j = 0; j < T.d2; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < T.d3; ++k) s += T(i, j, k) * u[k];
                    m(i, j) = s;
                }
            return m;
        }
        default:
            throw DimensionError("mode_product: axis must be 1, 2 or 3");
    }
}

/// Contract two modes at once; e.g. axes (1,2): result[k] = sum_ij T[i,j,k] u_i v_j.
inline Eigen::VectorXd mode_product2(const Tensor3& T, int axis_a, int axis_b,
                                     const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& v) {
    if (axis_a == axis_b) throw DimensionError("mode_product2: axes must differ");
    if (axis_a > axis_b) return mode_product2(T, axis_b, axis_a, v, u);
    const int dims[3] = {T.d1, T.d2, T.d3};
    detail::require(u.size() == dims[axis_a - 1], "mode_product2: bad u length");
    detail::require(v.size() == dims[axis_b - 1], "mode_product2: bad v length");
    const int free_axis = 6 - axis_a - axis_b;  // 1+2+3 = 6
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dims[free_axis - 1]);
    for (int i = 0; i < T.d1; ++i)
        for (int j = 0; j < T.d2; ++j)
            for (int k = 0; k < T.d3; ++k) {
                const int idx[3] = {i, j, k};
                out[idx[free_axis - 1]] +=
                    T(i, j, k) * u[idx[axis_a - 1]] * v[idx[axis_b - 1]];
            }
    return out;
}

/// Column i of the result is T x_1 u_i x_2 v_i (length d3).
inline Eigen::MatrixXd seq_product(const Tensor3& T, const FactorMatrix& U,
                                   const FactorMatrix& V) {
    detail::require(U.cols() == V.cols(), "seq_product: rank mismatch");
    detail::require(U.rows() == T.d1 && V.rows() == T.d2,
                    "seq_product: factor rows mismatch");
    Eigen::MatrixXd out(T.d3, U.cols());
    for (int c = 0; c < U.cols(); ++c)
        out.col(c) = mode_product2(T, 1, 2, U.col(c), V.col(c));
    return out;
}

/// Mode-1 matricization, column index j*d3 + k.
inline Eigen::MatrixXd unfold1(const Tensor3& T) {
    Eigen::MatrixXd m(T.d1, static_cast<Eigen::Index>(T.d2) * T.d3);
    for (int i = 0; i < T.d1; ++i)
        for (int j = 0; j < T.d2; ++j)
            for (int k = 0; k < T.d3; ++k)
                m(i, static_cast<Eigen::Index>(j) * T.d3 + k) = T(i, j, k);
    return m;
}

inline double inner(const Tensor3& T, const Tensor3& R) {
    detail::require(T.d1 == R.d1 && T.d2 == R.d2 && T.d3 == R.d3,
                    "inner: dimension mismatch");
    double s = 0.0;
    for (std::size_t n = 0; n < T.values.size(); ++n)
        s += T.values[n] * R.values[n];
    return s;
}

inline double frob_norm(const Tensor3& T) {
    double s = 0.0;
    for (double v : T.values) s += v * v;
    return std::sqrt(s);
}

inline double inf_norm(const Tensor3& T) {
    double m = 0.0;
    for (double v : T.values) m = std::max(m, std::abs(v));
    return m;
}

/// Number of distinct permutations of a canonical triple i <= j <= k.
inline int orbit_size(int i, int j, int k) {
    if (i == j && j == k) return 1;
    if (i == j || j == k) return 3;
    return 6;
}

/// Visit the distinct permutations of a canonical triple in a fixed order.
template <class F>
inline void for_each_permutation(int i, int j, int k, F&& f) {
    f(i, j, k);
    if (i == j && j == k) return;
    if (i == j) {  // (i, i, k)
        f(i, k, i);
        f(k, i, i);
        return;
    }
    if (j == k) {  // (i, j, j)
        f(j, i, j);
        f(j, j, i);
        return;
    }
    f(i, k, j);
    f(j, i, k);
    f(j, k, i);
    f(k, i, j);
    f(k, j, i);
}

}  // namespace tenrec
