#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tenrec/errors.hpp"
#include "tenrec/gd.hpp"
#include "tenrec/instances.hpp"
#include "tenrec/metrics.hpp"
#include "tenrec/rng.hpp"
#include "tenrec/spectral.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

/// Factor triple for an asymmetric CP tensor sum_i u_i (x) v_i (x) w_i.
struct AsymFactors {
    Eigen::MatrixXd U;  // d1 x r
    Eigen::MatrixXd V;  // d2 x r
    Eigen::MatrixXd W;  // d3 x r

    int rank() const { return static_cast<int>(U.cols()); }
};

struct AsymEntry {
    int i = 0, j = 0, k = 0;
    double value = 0.0;
};

/// Bernoulli-sampled noisy entries of an asymmetric tensor; no
/// symmetrization, one entry per sampled triple.
struct AsymObservationSet {
    int d1 = 0, d2 = 0, d3 = 0;
    double p = 1.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    int r_hint = 0;
    std::vector<AsymEntry> entries;

    void normalize() {
        std::sort(entries.begin(), entries.end(),
                  [](const AsymEntry& a, const AsymEntry& b) {
                      if (a.i != b.i) return a.i < b.i;
                      if (a.j != b.j) return a.j < b.j;
                      return a.k < b.k;
                  });
        for (std::size_t n = 0; n < entries.size(); ++n) {
            const AsymEntry& e = entries[n];
            if (!(0 <= e.i && e.i < d1 && 0 <= e.j && e.j < d2 && 0 <= e.k &&
                  e.k < d3))
                throw DimensionError("AsymObservationSet: index out of range");
            if (!std::isfinite(e.value))
                throw DimensionError("AsymObservationSet: non-finite value");
            if (n > 0) {
                const AsymEntry& prev = entries[n - 1];
                if (prev.i == e.i && prev.j == e.j && prev.k == e.k)
                    throw DimensionError("AsymObservationSet: duplicate triple");
            }
        }
    }
};

/// Ground truth with the balance convention ||u_i|| = ||v_i|| = ||w_i||:
/// raw Gaussian draws are reduced to unit directions, and each direction is
/// scaled by lambda_i^{1/3} with lambda_i the product of the raw norms.
inline AsymFactors gen_asym_factors(int d1, int d2, int d3, int r,
                                    std::uint64_t seed) {
    if (d1 < 1 || d2 < 1 || d3 < 1 || r < 1)
        throw DimensionError("gen_asym_factors: need dims, r >= 1");
    Rng rng(derive_seed(seed, stream::factors));
    AsymFactors f;
    f.U.resize(d1, r);
    f.V.resize(d2, r);
    f.W.resize(d3, r);
    for (int c = 0; c < r; ++c) {
        const Eigen::VectorXd u = rng.gaussian_vector(d1);
        const Eigen::VectorXd v = rng.gaussian_vector(d2);
        const Eigen::VectorXd w = rng.gaussian_vector(d3);
        const double lambda = u.norm() * v.norm() * w.norm();
        const double s = std::cbrt(lambda);
        f.U.col(c) = s * u.normalized();
        f.V.col(c) = s * v.normalized();
        f.W.col(c) = s * w.normalized();
    }
    return f;
}

inline double asym_truth_entry(const AsymFactors& f, int i, int j, int k) {
    double v = 0.0;
    for (int c = 0; c < f.U.cols(); ++c)
        v += f.U(i, c) * f.V(j, c) * f.W(k, c);
    return v;
}

inline AsymObservationSet sample_asym_observations(const AsymFactors& f,
                                                   double p, double sigma,
                                                   std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0))
        throw DimensionError("sample_asym_observations: need 0 < p <= 1");
    if (sigma < 0.0)
        throw DimensionError("sample_asym_observations: need sigma >= 0");
    AsymObservationSet obs;
    obs.d1 = static_cast<int>(f.U.rows());
    obs.d2 = static_cast<int>(f.V.rows());
    obs.d3 = static_cast<int>(f.W.rows());
    obs.p = p;
    obs.sigma = sigma;
    obs.seed = seed;
    obs.r_hint = f.rank();
    Rng mask(derive_seed(seed, stream::mask));
    Rng noise(derive_seed(seed, stream::noise));
    for (int i = 0; i < obs.d1; ++i)
        for (int j = 0; j < obs.d2; ++j)
            for (int k = 0; k < obs.d3; ++k) {
                if (mask.uniform() >= p) continue;
                double v = asym_truth_entry(f, i, j, k);
                if (sigma > 0.0) v += sigma * noise.gaussian();
                obs.entries.push_back({i, j, k, v});
            }
    return obs;
}

/// Balance penalty (1/24) sum_i alpha_i [(|u|^2-|v|^2)^2 + (|u|^2-|w|^2)^2
/// + (|v|^2-|w|^2)^2].
inline double reg(const AsymFactors& f, const Eigen::VectorXd& alpha) {
    if (alpha.size() != f.rank()) throw DimensionError("reg: alpha size != r");
    double s = 0.0;
    for (int c = 0; c < f.rank(); ++c) {
        const double a = f.U.col(c).squaredNorm();
        const double b = f.V.col(c).squaredNorm();
        const double w = f.W.col(c).squaredNorm();
        s += alpha[c] *
             ((a - b) * (a - b) + (a - w) * (a - w) + (b - w) * (b - w));
    }
    return s / 24.0;
}

namespace detail {

inline double asym_data_loss_grad(const AsymObservationSet& obs,
                                  const RowMajorMatrix& u,
                                  const RowMajorMatrix& v,
                                  const RowMajorMatrix& w, RowMajorMatrix* gu,
                                  RowMajorMatrix* gv, RowMajorMatrix* gw) {
    const int r = static_cast<int>(u.cols());
    if (u.rows() != obs.d1 || v.rows() != obs.d2 || w.rows() != obs.d3 ||
        v.cols() != r || w.cols() != r)
        throw DimensionError("loss_asym: shape mismatch");
    if (gu) {
        gu->setZero(obs.d1, r);
        gv->setZero(obs.d2, r);
        gw->setZero(obs.d3, r);
    }
    double sum_sq = 0.0;
    for (const AsymEntry& e : obs.entries) {
        const double* ru = u.data() + static_cast<std::size_t>(e.i) * r;
        const double* rv = v.data() + static_cast<std::size_t>(e.j) * r;
        const double* rw = w.data() + static_cast<std::size_t>(e.k) * r;
        double s = 0.0;
        for (int c = 0; c < r; ++c) s += ru[c] * rv[c] * rw[c];
        const double rho = s - e.value;
        sum_sq += rho * rho;
        if (!gu) continue;
        double* pu = gu->data() + static_cast<std::size_t>(e.i) * r;
        double* pv = gv->data() + static_cast<std::size_t>(e.j) * r;
        double* pw = gw->data() + static_cast<std::size_t>(e.k) * r;
        for (int c = 0; c < r; ++c) {
            pu[c] += rho * rv[c] * rw[c];
            pv[c] += rho * ru[c] * rw[c];
            pw[c] += rho * ru[c] * rv[c];
        }
    }
    return sum_sq;
}

}  // namespace detail

/// g(U,V,W) = (1/6p) ||P_Omega(sum_i u_i (x) v_i (x) w_i - T)||_F^2
///            + reg(U,V,W; alpha).
inline double loss_asym(const AsymObservationSet& obs, const AsymFactors& f,
                        const Eigen::VectorXd& alpha) {
    const detail::RowMajorMatrix u = f.U, v = f.V, w = f.W;
    const double data =
        detail::asym_data_loss_grad(obs, u, v, w, nullptr, nullptr, nullptr);
    return data / (6.0 * obs.p) + reg(f, alpha);
}

struct AsymGrad {
    Eigen::MatrixXd dU, dV, dW;
};

/// Gradients of loss_asym: the data term is (1/3p) of the residual
/// contraction, the balance term (1/6) alpha_i (2|x_i|^2 - |y_i|^2 -
/// |z_i|^2) x_i per factor column.
inline AsymGrad grad_asym(const AsymObservationSet& obs, const AsymFactors& f,
                          const Eigen::VectorXd& alpha) {
    if (alpha.size() != f.rank())
        throw DimensionError("grad_asym: alpha size != r");
    const detail::RowMajorMatrix u = f.U, v = f.V, w = f.W;
    detail::RowMajorMatrix gu, gv, gw;
    detail::asym_data_loss_grad(obs, u, v, w, &gu, &gv, &gw);
    AsymGrad g;
    g.dU = gu / (3.0 * obs.p);
    g.dV = gv / (3.0 * obs.p);
    g.dW = gw / (3.0 * obs.p);
    for (int c = 0; c < f.rank(); ++c) {
        const double a = f.U.col(c).squaredNorm();
        const double b = f.V.col(c).squaredNorm();
        const double ww = f.W.col(c).squaredNorm();
        g.dU.col(c) += alpha[c] / 6.0 * (2.0 * a - b - ww) * f.U.col(c);
        g.dV.col(c) += alpha[c] / 6.0 * (2.0 * b - a - ww) * f.V.col(c);
        g.dW.col(c) += alpha[c] / 6.0 * (2.0 * ww - a - b) * f.W.col(c);
    }
    return g;
}

struct AsymCandidate {
    Eigen::VectorXd nu1, nu2, nu3;
    double lambda = 0.0;
    double spec_gap = 0.0;
};

struct AsymInit {
    AsymFactors factors;       // balanced: column c scaled by lambda_c^{1/3}
    Eigen::VectorXd lambdas;   // magnitude estimates from the retrieval
};

namespace detail {

/// Flip so the largest-magnitude entry is positive (ties: lowest index).
inline void sign_normalize(Eigen::VectorXd& v) {
    int arg = 0;
    for (int i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0) v = -v;
}

}  // namespace detail

/// Asymmetric initialization. Subspace: top-r eigenbasis of
/// P_offdiag(A A^T), A = unfold1(p^{-1}T) in R^{d1 x d2 d3}. Per trial:
/// M = p^{-1}T x_1 (U U^T g); nu2/nu3 the leading left/right singular
/// vectors (sign-normalized); z = p^{-1}T x_2 nu2 x_3 nu3; lambda = ||z||,
/// nu1 = z / lambda. Pruning tests |<nu2_tau, v^i>|. Output columns are the
/// unit directions scaled by lambda^{1/3}, so the balance convention holds
/// at initialization.
inline AsymInit init_asym(const AsymObservationSet& obs, int r, int L,
                          double eps_th, std::uint64_t seed) {
    if (L < r) throw DimensionError("init_asym: need L >= r");
    if (r < 1 || r > std::min({obs.d1, obs.d2, obs.d3}))
        throw DimensionError("init_asym: bad rank");
    const int d1 = obs.d1, d2 = obs.d2, d3 = obs.d3;

    // B = P_offdiag(A A^T) from the sparse mode-1 columns of A.
    std::vector<std::vector<std::pair<int, double>>> cols(
        static_cast<std::size_t>(d2) * d3);
    for (const AsymEntry& e : obs.entries)
        cols[static_cast<std::size_t>(e.j) * d3 + e.k].emplace_back(
            e.i, e.value / obs.p);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d1, d1);
    for (const auto& col : cols)
        for (const auto& [x, xv] : col)
            for (const auto& [y, yv] : col) b(x, y) += xv * yv;
    b.diagonal().setZero();
    const Eigen::MatrixXd subspace =
        top_r_eigs(b, r, 1e-10, 1000, derive_seed(seed, stream::subspace)).basis;

    std::vector<AsymCandidate> candidates;
    candidates.reserve(L);
    for (int trial = 0; trial < L; ++trial) {
        Rng rng(derive_seed(seed, stream::retrieval, trial));
        const Eigen::VectorXd g = rng.gaussian_vector(d1);
        const Eigen::VectorXd theta = subspace * (subspace.transpose() * g);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d2, d3);
        for (const AsymEntry& e : obs.entries)
            m(e.j, e.k) += e.value / obs.p * theta[e.i];
        const SingularPair sp = top_two_singular(m, 1e-10, 1000, 0x5fd1ULL);
        AsymCandidate cand;
        cand.nu2 = sp.left1;
        cand.nu3 = sp.right1;
        detail::sign_normalize(cand.nu2);
        detail::sign_normalize(cand.nu3);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(d1);
        for (const AsymEntry& e : obs.entries)
            z[e.i] += e.value / obs.p * cand.nu2[e.j] * cand.nu3[e.k];
        cand.lambda = z.norm();
        cand.nu1 = cand.lambda > 0.0 ? Eigen::VectorXd(z / cand.lambda)
                                     : Eigen::VectorXd::Unit(d1, 0);
        cand.spec_gap = sp.sigma1 - sp.sigma2;
        candidates.push_back(std::move(cand));
    }

    // Greedy prune on the second-mode directions.
    std::vector<char> alive(candidates.size(), 1);
    AsymInit out;
    out.factors.U.resize(d1, r);
    out.factors.V.resize(d2, r);
    out.factors.W.resize(d3, r);
    out.lambdas.resize(r);
    for (int slot = 0; slot < r; ++slot) {
        int best = -1;
        for (std::size_t t = 0; t < candidates.size(); ++t)
            if (alive[t] &&
                (best < 0 || candidates[t].spec_gap > candidates[best].spec_gap))
                best = static_cast<int>(t);
        if (best < 0)
            throw InitFailureError(
                "init_asym: candidate pool exhausted after " +
                    std::to_string(slot) + " of " + std::to_string(r) +
                    " factors",
                slot);
        const AsymCandidate& cand = candidates[best];
        const double s = std::cbrt(cand.lambda);
        out.factors.U.col(slot) = s * cand.nu1;
        out.factors.V.col(slot) = s * cand.nu2;
        out.factors.W.col(slot) = s * cand.nu3;
        out.lambdas[slot] = cand.lambda;
        for (std::size_t t = 0; t < candidates.size(); ++t)
            if (alive[t] && std::abs(candidates[t].nu2.dot(cand.nu2)) >
                                1.0 - eps_th)
                alive[t] = 0;
    }
    return out;
}

struct AsymGdResult {
    AsymFactors factors;
    std::vector<GdTraceRow> trace;
};

struct AsymFactorErrors {
    double rel_u = 0.0, rel_v = 0.0, rel_w = 0.0;
    std::vector<int> perm;      // column of F matched to column i of Fstar
    std::vector<int> sign;      // +1 / -1 per matched pair, from U's match
};

namespace detail {

/// min over permutation and per-column signs of ||F Pi S - F*||_F, solved
/// as an assignment with cost min(||f_a - f*_b||^2, ||f_a + f*_b||^2).
inline void signed_match(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Fstar,
                         std::vector<int>& perm, std::vector<int>& sign,
                         double& rel_err) {
    const int r = static_cast<int>(F.cols());
    Eigen::MatrixXd cost(r, r);
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b)
            cost(a, b) = std::min((F.col(a) - Fstar.col(b)).squaredNorm(),
                                  (F.col(a) + Fstar.col(b)).squaredNorm());
    perm = solve_assignment(cost);
    sign.assign(r, 1);
    double err_sq = 0.0;
    for (int b = 0; b < r; ++b) {
        const int a = perm[b];
        const double minus = (F.col(a) - Fstar.col(b)).squaredNorm();
        const double plus = (F.col(a) + Fstar.col(b)).squaredNorm();
        sign[b] = minus <= plus ? 1 : -1;
        err_sq += std::min(minus, plus);
    }
    rel_err = std::sqrt(err_sq) / Fstar.norm();
}

}  // namespace detail

/// Per-matrix relative errors up to global permutation and signs.
inline AsymFactorErrors asym_factor_errors(const AsymFactors& f,
                                           const AsymFactors& fstar) {
    if (f.U.rows() != fstar.U.rows() || f.V.rows() != fstar.V.rows() ||
        f.W.rows() != fstar.W.rows() || f.rank() != fstar.rank())
        throw DimensionError("asym_factor_errors: shape mismatch");
    AsymFactorErrors e;
    std::vector<int> perm_v, perm_w, sign_v, sign_w;
    detail::signed_match(f.U, fstar.U, e.perm, e.sign, e.rel_u);
    detail::signed_match(f.V, fstar.V, perm_v, sign_v, e.rel_v);
    detail::signed_match(f.W, fstar.W, perm_w, sign_w, e.rel_w);
    return e;
}

/// <sum u_i(x)v_i(x)w_i, sum u'_j(x)v'_j(x)w'_j>
///   = sum_{ij} <u_i,u'_j><v_i,v'_j><w_i,w'_j>.
inline double asym_cp_inner(const AsymFactors& a, const AsymFactors& b) {
    const Eigen::MatrixXd gu = a.U.transpose() * b.U;
    const Eigen::MatrixXd gv = a.V.transpose() * b.V;
    const Eigen::MatrixXd gw = a.W.transpose() * b.W;
    return (gu.array() * gv.array() * gw.array()).sum();
}

/// (relative Frobenius, relative sup-norm) error of the composed tensor.
inline std::pair<double, double> asym_tensor_errors(const AsymFactors& f,
                                                    const AsymFactors& fstar) {
    const double star_sq = asym_cp_inner(fstar, fstar);
    if (star_sq == 0.0) throw Error("asym_tensor_errors: ground truth is zero");
    const double diff_sq = asym_cp_inner(f, f) - 2.0 * asym_cp_inner(f, fstar) +
                           star_sq;
    const double rel_f = std::sqrt(std::max(0.0, diff_sq) / star_sq);

    // Slabs over the first mode: That[i,:,:] - T*[i,:,:]
    //   = [V V*] diag(U(i,:), -U*(i,:)) [W W*]^T.
    const int r = f.rank();
    Eigen::MatrixXd left(f.V.rows(), 2 * r), right(f.W.rows(), 2 * r);
    left << f.V, fstar.V;
    right << f.W, fstar.W;
    Eigen::VectorXd wts(2 * r);
    double diff_inf = 0.0, star_inf = 0.0;
    Eigen::MatrixXd slab;
    for (int i = 0; i < f.U.rows(); ++i) {
        wts.head(r) = f.U.row(i).transpose();
        wts.tail(r) = -fstar.U.row(i).transpose();
        slab.noalias() = left * wts.asDiagonal() * right.transpose();
        diff_inf = std::max(diff_inf, slab.cwiseAbs().maxCoeff());
        slab.noalias() = fstar.V * fstar.U.row(i).asDiagonal() *
                         fstar.W.transpose();
        star_inf = std::max(star_inf, slab.cwiseAbs().maxCoeff());
    }
    return {rel_f, diff_inf / star_inf};
}

namespace detail {

inline GdTraceRow asym_trace_row(int t, double loss_value,
                                 const AsymFactors& f,
                                 const AsymFactors* truth) {
    GdTraceRow row;
    row.t = t;
    row.loss = loss_value;
    if (truth) {
        row.has_truth = true;
        const AsymFactorErrors fe = asym_factor_errors(f, *truth);
        row.rel_dist_f = std::max({fe.rel_u, fe.rel_v, fe.rel_w});
        double rel_2inf = 0.0;
        const auto matrix_2inf = [](const Eigen::MatrixXd& m) {
            return std::sqrt(m.rowwise().squaredNorm().maxCoeff());
        };
        // 2,inf distances at the same matched permutation and signs.
        const Eigen::MatrixXd* pairs[3][2] = {
            {&f.U, &truth->U}, {&f.V, &truth->V}, {&f.W, &truth->W}};
        for (auto& pair : pairs) {
            std::vector<int> perm, sign;
            double rel = 0.0;
            signed_match(*pair[0], *pair[1], perm, sign, rel);
            Eigen::MatrixXd diff(pair[0]->rows(), pair[0]->cols());
            for (int b = 0; b < pair[0]->cols(); ++b)
                diff.col(b) = sign[b] * pair[0]->col(perm[b]) - pair[1]->col(b);
            rel_2inf = std::max(rel_2inf,
                                matrix_2inf(diff) / matrix_2inf(*pair[1]));
        }
        row.rel_dist_2inf = rel_2inf;
        const auto [rel_f, rel_inf] = asym_tensor_errors(f, *truth);
        row.rel_tensor_f = rel_f;
        row.rel_tensor_inf = rel_inf;
    }
    return row;
}

}  // namespace detail

/// Gradient descent on the regularized asymmetric loss, simultaneous
/// updates of U, V, W evaluated at the current iterate. eta is literal,
/// as in gd_run.
inline AsymGdResult gd_asym(const AsymObservationSet& obs,
                            const AsymFactors& f0, const Eigen::VectorXd& alpha,
                            double eta, int t0,
                            const AsymFactors* truth = nullptr) {
    if (!(eta >= 0.0)) throw DimensionError("gd_asym: need eta >= 0");
    if (t0 < 0) throw DimensionError("gd_asym: need t0 >= 0");
    AsymGdResult res;
    res.trace.reserve(t0 + 1);
    AsymFactors f = f0;
    for (int t = 0; t <= t0; ++t) {
        res.trace.push_back(
            detail::asym_trace_row(t, loss_asym(obs, f, alpha), f, truth));
        if (t == t0) break;
        const AsymGrad g = grad_asym(obs, f, alpha);
        f.U -= eta * g.dU;
        f.V -= eta * g.dV;
        f.W -= eta * g.dW;
        if (!(f.U.allFinite() && f.V.allFinite() && f.W.allFinite()))
            throw DivergenceError(
                "gd_asym: non-finite iterate at iteration " +
                    std::to_string(t + 1),
                t + 1);
    }
    res.factors = f;
    return res;
}

// --------------------------------------------------------------------------
// Asymmetric observation directory: manifest.json {"d1","d2","d3","p",
// "sigma","seed","num_entries"} + entries.csv "i,j,k,value". Factors are
// three CSVs U.csv / V.csv / W.csv in the factor-matrix format.
// --------------------------------------------------------------------------

inline void write_asym_observations(const AsymObservationSet& obs,
                                    const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto manifest_path =
        (std::filesystem::path(dir) / "manifest.json").string();
    nlohmann::json manifest = {
        {"d1", obs.d1},         {"d2", obs.d2},   {"d3", obs.d3},
        {"p", obs.p},           {"sigma", obs.sigma}, {"seed", obs.seed},
        {"r_hint", obs.r_hint}, {"num_entries", obs.entries.size()},
    };
    {
        std::ofstream out(manifest_path);
        if (!out) throw IoError("cannot open for writing: " + manifest_path);
        out << manifest.dump(2) << '\n';
    }
    const auto entries_path =
        (std::filesystem::path(dir) / "entries.csv").string();
    std::ofstream out(entries_path);
    if (!out) throw IoError("cannot open for writing: " + entries_path);
    out << "i,j,k,value\n";
    for (const AsymEntry& e : obs.entries)
        out << e.i << ',' << e.j << ',' << e.k << ','
            << detail::fmt_double(e.value) << '\n';
    if (!out) throw IoError("write failed: " + entries_path);
}

inline AsymObservationSet read_asym_observations(const std::string& dir) {
    const auto manifest_path =
        (std::filesystem::path(dir) / "manifest.json").string();
    std::ifstream min(manifest_path);
    if (!min) throw IoError("cannot open: " + manifest_path);
    nlohmann::json manifest;
    try {
        min >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what(), manifest_path,
                         0);
    }
    AsymObservationSet obs;
    try {
        obs.d1 = manifest.at("d1").get<int>();
        obs.d2 = manifest.at("d2").get<int>();
        obs.d3 = manifest.at("d3").get<int>();
        obs.p = manifest.at("p").get<double>();
        obs.sigma = manifest.at("sigma").get<double>();
        obs.seed = manifest.at("seed").get<std::uint64_t>();
        obs.r_hint = manifest.value("r_hint", 0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what(), manifest_path,
                         0);
    }
    const std::size_t num_entries = manifest.at("num_entries").get<std::size_t>();

    const auto entries_path =
        (std::filesystem::path(dir) / "entries.csv").string();
    std::ifstream in(entries_path);
    if (!in) throw IoError("cannot open: " + entries_path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line))
        throw ParseError("empty entries file", entries_path, 0);
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 4)
            throw ParseError("expected 4 fields at " + entries_path + ":" +
                                 std::to_string(line_no),
                             entries_path, line_no);
        AsymEntry e;
        e.i = detail::parse_int(fields[0], entries_path, line_no);
        e.j = detail::parse_int(fields[1], entries_path, line_no);
        e.k = detail::parse_int(fields[2], entries_path, line_no);
        e.value = detail::parse_double(fields[3], entries_path, line_no);
        obs.entries.push_back(e);
    }
    if (obs.entries.size() != num_entries)
        throw ParseError("entry count does not match manifest num_entries",
                         entries_path, 0);
    obs.normalize();
    return obs;
}

}  // namespace tenrec
