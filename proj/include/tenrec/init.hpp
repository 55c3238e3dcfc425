#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tenrec/errors.hpp"
#include "tenrec/gd.hpp"
#include "tenrec/instances.hpp"
#include "tenrec/rng.hpp"
#include "tenrec/spectral.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

/// Output of one retrieval trial: a unit direction, its magnitude estimate
/// lambda = <p^{-1}T, nu^(x)3>, and the spectral gap of the projected matrix.
struct Candidate {
    Eigen::VectorXd nu;
    double lambda = 0.0;
    double spec_gap = 0.0;
};

struct PrunedFactor {
    Eigen::VectorXd w;
    double lambda = 0.0;
};

/// Signed cube root, so that lambda^{1/3} w reproduces lambda * w^(x)3 for
/// negative lambda as well.
inline double cbrt_signed(double x) { return std::cbrt(x); }

/// B = P_offdiag(A A^T) with A = unfold1(p^{-1} T), accumulated from the
/// sparse mode-1 columns of A; the d x d^2 unfolding is never materialized.
inline Eigen::MatrixXd build_gram(const ObservationSet& obs) {
    const int d = obs.d;
    std::vector<std::vector<std::pair<int, double>>> cols(
        static_cast<std::size_t>(d) * d);
    for (const ObsEntry& e : obs.entries) {
        const double v = e.value / obs.p;
        for_each_permutation(e.i, e.j, e.k, [&](int a, int b, int c) {
            cols[static_cast<std::size_t>(b) * d + c].emplace_back(a, v);
        });
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
    for (const auto& col : cols)
        for (const auto& [x, xv] : col)
            for (const auto& [y, yv] : col) b(x, y) += xv * yv;
    b.diagonal().setZero();
    return b;
}

/// Top-r eigenbasis of build_gram(obs); columns orthonormal.
inline Eigen::MatrixXd subspace_estimate(const ObservationSet& obs, int r,
                                         std::uint64_t seed) {
    if (r < 1 || r > obs.d)
        throw DimensionError("subspace_estimate: need 1 <= r <= d");
    return top_r_eigs(build_gram(obs), r, 1e-10, 1000,
                      derive_seed(seed, stream::subspace))
        .basis;
}

/// <T, nu^(x)3> summed over observed entries only (T vanishes off Omega).
inline double observed_cubic_form(const ObservationSet& obs,
                                  const Eigen::VectorXd& nu) {
    double s = 0.0;
    for (const ObsEntry& e : obs.entries)
        s += orbit_size(e.i, e.j, e.k) * e.value * nu[e.i] * nu[e.j] * nu[e.k];
    return s;
}

/// One retrieval trial: theta = U U^T g, M = p^{-1} T x_3 theta, nu the
/// leading singular vector of M signed so that <T, nu^(x)3> >= 0.
inline Candidate retrieve_one_factor(const ObservationSet& obs,
                                     const Eigen::MatrixXd& U,
                                     const Eigen::VectorXd& g) {
    const int d = obs.d;
    if (U.rows() != d || g.size() != d)
        throw DimensionError("retrieve_one_factor: shape mismatch");
    const Eigen::VectorXd theta = U * (U.transpose() * g);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (const ObsEntry& e : obs.entries) {
        const double v = e.value / obs.p;
        for_each_permutation(e.i, e.j, e.k, [&](int a, int b, int c) {
            m(a, b) += v * theta[c];
        });
    }
    const SingularPair sp = top_two_singular(m, 1e-10, 1000, /*seed=*/0x5fd1ULL);
    Candidate cand;
    cand.nu = sp.right1;
    cand.spec_gap = sp.sigma1 - sp.sigma2;
    const double form = observed_cubic_form(obs, cand.nu);
    if (form < 0.0) cand.nu = -cand.nu;
    cand.lambda = std::abs(form) / obs.p;
    return cand;
}

/// Greedy de-duplication: repeatedly keep the remaining candidate with the
/// largest spec_gap (ties: lowest trial index) and drop everything within
/// inner product 1 - eps_th of it. Throws InitFailureError if fewer than r
/// factors survive.
inline std::vector<PrunedFactor> prune(const std::vector<Candidate>& candidates,
                                       int r, double eps_th) {
    if (!(eps_th > 0.0 && eps_th < 1.0))
        throw DimensionError("prune: need eps_th in (0,1)");
    if (candidates.empty()) throw DimensionError("prune: empty candidate set");
    std::vector<char> alive(candidates.size(), 1);
    std::vector<PrunedFactor> out;
    for (int slot = 0; slot < r; ++slot) {
        int best = -1;
        for (std::size_t t = 0; t < candidates.size(); ++t)
            if (alive[t] &&
                (best < 0 || candidates[t].spec_gap > candidates[best].spec_gap))
                best = static_cast<int>(t);
        if (best < 0)
            throw InitFailureError(
                "prune: candidate pool exhausted after " +
                    std::to_string(slot) + " of " + std::to_string(r) +
                    " factors",
                slot);
        const Eigen::VectorXd& w = candidates[best].nu;
        out.push_back({w, candidates[best].lambda});
        for (std::size_t t = 0; t < candidates.size(); ++t)
            if (alive[t] &&
                std::abs(candidates[t].nu.dot(w)) > 1.0 - eps_th)
                alive[t] = 0;
    }
    return out;
}

/// Full initialization: subspace estimate, L randomized retrievals, prune,
/// then U^0 = [lambda_1^{1/3} w^1, ..., lambda_r^{1/3} w^r].
inline FactorMatrix init(const ObservationSet& obs, int r, int L,
                         double eps_th, std::uint64_t seed) {
    if (L < r) throw DimensionError("init: need L >= r");
    const Eigen::MatrixXd U = subspace_estimate(obs, r, seed);
    std::vector<Candidate> candidates;
    candidates.reserve(L);
    for (int trial = 0; trial < L; ++trial) {
        Rng rng(derive_seed(seed, stream::retrieval, trial));
        candidates.push_back(
            retrieve_one_factor(obs, U, rng.gaussian_vector(obs.d)));
    }
    const std::vector<PrunedFactor> factors = prune(candidates, r, eps_th);
    FactorMatrix u0(obs.d, r);
    for (int c = 0; c < r; ++c)
        u0.col(c) = cbrt_signed(factors[c].lambda) * factors[c].w;
    return u0;
}

/// t_init independent runs of init; returns the one with the smallest
/// empirical loss. Individual failures are tolerated; throws only when
/// every restart fails.
inline FactorMatrix best_of_restarts(const ObservationSet& obs, int r, int L,
                                     double eps_th, int t_init,
                                     std::uint64_t seed) {
    if (t_init < 1) throw DimensionError("best_of_restarts: need t_init >= 1");
    FactorMatrix best;
    double best_loss = std::numeric_limits<double>::infinity();
    int failures = 0;
    std::string last_error;
    for (int k = 0; k < t_init; ++k) {
        try {
            FactorMatrix u0 =
                init(obs, r, L, eps_th, derive_seed(seed, stream::restart, k));
            const double f = loss(obs, u0);
            if (f < best_loss) {
                best_loss = f;
                best = std::move(u0);
            }
        } catch (const Error& err) {
            ++failures;
            last_error = err.what();
        }
    }
    if (failures == t_init)
        throw InitFailureError(
            "best_of_restarts: all " + std::to_string(t_init) +
                " restarts failed; last error: " + last_error,
            0);
    return best;
}

/// Tensor power method baseline: per factor slot, the best of `restarts`
/// random unit starts iterated `iters` times on the deflated rescaled data,
/// scored by the cubic form; the winner is deflated before the next slot.
inline FactorMatrix tpm_baseline(const ObservationSet& obs, int r, int iters,
                                 int restarts, std::uint64_t seed) {
    if (iters < 1 || restarts < 1)
        throw DimensionError("tpm_baseline: need iters, restarts >= 1");
    const int d = obs.d;
    std::vector<Eigen::VectorXd> ws;
    std::vector<double> lambdas;

    // (p^{-1}T_defl x1 u x2 u), with the rank-one corrections kept implicit.
    const auto power_step = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
        for (const ObsEntry& e : obs.entries) {
            const double v = e.value / obs.p;
            for_each_permutation(e.i, e.j, e.k, [&](int a, int b, int c) {
                out[c] += v * u[a] * u[b];
            });
        }
        for (std::size_t s = 0; s < ws.size(); ++s) {
            const double dot = ws[s].dot(u);
            out -= lambdas[s] * dot * dot * ws[s];
        }
        return out;
    };
    const auto score = [&](const Eigen::VectorXd& u) {
        double s = observed_cubic_form(obs, u) / obs.p;
        for (std::size_t t = 0; t < ws.size(); ++t) {
            const double dot = ws[t].dot(u);
            s -= lambdas[t] * dot * dot * dot;
        }
        return s;
    };

    FactorMatrix u0(d, r);
    for (int slot = 0; slot < r; ++slot) {
        Eigen::VectorXd best_u;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < restarts; ++m) {
            Rng rng(derive_seed(seed, stream::tpm,
                                static_cast<std::uint64_t>(slot) * restarts + m));
            Eigen::VectorXd u = rng.gaussian_vector(d).normalized();
            for (int it = 0; it < iters; ++it) {
                Eigen::VectorXd v = power_step(u);
                const double len = v.norm();
                if (len < 1e-300) {
                    u = rng.gaussian_vector(d).normalized();
                    continue;
                }
                u = v / len;
            }
            const double s = score(u);
            if (s > best_score) {
                best_score = s;
                best_u = u;
            }
        }
        ws.push_back(best_u);
        lambdas.push_back(best_score);
        u0.col(slot) = cbrt_signed(best_score) * best_u;
    }
    return u0;
}

}  // namespace tenrec
