#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tenrec/errors.hpp"
#include "tenrec/instances.hpp"
#include "tenrec/metrics.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

namespace detail {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// f(U) and, when grad != nullptr, its gradient, in one pass over the
/// canonical entries. The expanded symmetric mask is never materialized:
/// each canonical triple contributes with its orbit multiplicity.
inline double loss_grad(const ObservationSet& obs, const RowMajorMatrix& u,
                        RowMajorMatrix* grad) {
    const int r = static_cast<int>(u.cols());
    if (u.rows() != obs.d) throw DimensionError("loss: factor rows != d");
    if (grad) grad->setZero(obs.d, r);
    double sum_sq = 0.0;
    for (const ObsEntry& e : obs.entries) {
        const double* ri = u.data() + static_cast<std::size_t>(e.i) * r;
        const double* rj = u.data() + static_cast<std::size_t>(e.j) * r;
        const double* rk = u.data() + static_cast<std::size_t>(e.k) * r;
        double s = 0.0;
        for (int c = 0; c < r; ++c) s += ri[c] * rj[c] * rk[c];
        const double rho = s - e.value;
        sum_sq += orbit_size(e.i, e.j, e.k) * rho * rho;
        if (!grad) continue;
        double* gi = grad->data() + static_cast<std::size_t>(e.i) * r;
        double* gj = grad->data() + static_cast<std::size_t>(e.j) * r;
        double* gk = grad->data() + static_cast<std::size_t>(e.k) * r;
        // Summed over the orbit: each expanded (j,k,l) adds rho * u_j.c * u_k.c
        // to row l of the gradient.
        if (e.i < e.j && e.j < e.k) {
            for (int c = 0; c < r; ++c) {
                gi[c] += 2.0 * rho * rj[c] * rk[c];
                gj[c] += 2.0 * rho * ri[c] * rk[c];
                gk[c] += 2.0 * rho * ri[c] * rj[c];
            }
        } else if (e.i == e.j && e.j == e.k) {
            for (int c = 0; c < r; ++c) gi[c] += rho * ri[c] * ri[c];
        } else if (e.i == e.j) {  // (i, i, k)
            for (int c = 0; c < r; ++c) {
                gk[c] += rho * ri[c] * ri[c];
                gi[c] += 2.0 * rho * ri[c] * rk[c];
            }
        } else {  // (i, j, j)
            for (int c = 0; c < r; ++c) {
                gi[c] += rho * rj[c] * rj[c];
                gj[c] += 2.0 * rho * ri[c] * rj[c];
            }
        }
    }
    if (grad) *grad *= 1.0 / obs.p;
    return sum_sq / (6.0 * obs.p);
}

}  // namespace detail

/// f(U) = (1/6p) sum over the expanded observed mask of the squared
/// residual of sum_i u_i^(x)3 against the observed values.
inline double loss(const ObservationSet& obs, const FactorMatrix& U) {
    const detail::RowMajorMatrix u = U;
    return detail::loss_grad(obs, u, nullptr);
}

/// grad f(U) = (1/p) P_Omega(sum_i u_i^(x)3 - T) x1seq U x2seq U.
inline FactorMatrix gradient(const ObservationSet& obs, const FactorMatrix& U) {
    const detail::RowMajorMatrix u = U;
    detail::RowMajorMatrix g;
    detail::loss_grad(obs, u, &g);
    return g;
}

struct GdTraceRow {
    int t = 0;
    double loss = 0.0;
    bool has_truth = false;
    double rel_dist_f = 0.0;
    double rel_dist_2inf = 0.0;
    double rel_tensor_f = 0.0;
    double rel_tensor_inf = 0.0;
};

struct GdResult {
    FactorMatrix factors;
    std::vector<GdTraceRow> trace;  // t0 + 1 rows, iterate 0 included
};

namespace detail {

inline GdTraceRow trace_row(int t, double loss_value, const FactorMatrix& u,
                            const FactorMatrix* truth) {
    GdTraceRow row;
    row.t = t;
    row.loss = loss_value;
    if (truth) {
        row.has_truth = true;
        const FactorErrors fe = factor_errors(u, *truth);
        row.rel_dist_f = fe.dist_f / truth->norm();
        row.rel_dist_2inf =
            fe.dist_2inf /
            std::sqrt(truth->rowwise().squaredNorm().maxCoeff());
        const auto [rel_f, rel_inf] = tensor_errors(u, *truth);
        row.rel_tensor_f = rel_f;
        row.rel_tensor_inf = rel_inf;
    }
    return row;
}

}  // namespace detail

/// Constant-stepsize gradient descent, t0 updates, no projection and no
/// regularization. eta is the literal stepsize of the update rule
/// U <- U - eta * grad f(U); callers wanting a scale-free parameter divide
/// by max_i ||u_i^0||^4 first (see the CLI). Throws DivergenceError with
/// the iteration index if an iterate stops being finite.
inline GdResult gd_run(const ObservationSet& obs, const FactorMatrix& U0,
                       double eta, int t0,
                       const FactorMatrix* truth = nullptr) {
    if (!(eta >= 0.0)) throw DimensionError("gd_run: need eta >= 0");
    if (t0 < 0) throw DimensionError("gd_run: need t0 >= 0");
    GdResult res;
    res.trace.reserve(t0 + 1);
    detail::RowMajorMatrix u = U0;
    detail::RowMajorMatrix g;
    for (int t = 0; t <= t0; ++t) {
        const double f = detail::loss_grad(obs, u, t < t0 ? &g : nullptr);
        res.trace.push_back(detail::trace_row(t, f, u, truth));
        if (t == t0) break;
        u -= eta * g;
        if (!u.allFinite())
            throw DivergenceError(
                "gd_run: non-finite iterate at iteration " + std::to_string(t + 1),
                t + 1);
    }
    res.factors = u;
    return res;
}

/// CSV schema: t,loss,rel_dist_f,rel_dist_2inf,rel_tensor_f,rel_tensor_inf
/// with the truth-dependent columns left empty when no truth was supplied.
inline void write_trace_csv(const std::vector<GdTraceRow>& trace,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "t,loss,rel_dist_f,rel_dist_2inf,rel_tensor_f,rel_tensor_inf\n";
    for (const GdTraceRow& row : trace) {
        out << row.t << ',' << detail::fmt_double(row.loss) << ',';
        if (row.has_truth) {
            out << detail::fmt_double(row.rel_dist_f) << ','
                << detail::fmt_double(row.rel_dist_2inf) << ','
                << detail::fmt_double(row.rel_tensor_f) << ','
                << detail::fmt_double(row.rel_tensor_inf);
        } else {
            out << ",,,";
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace tenrec
