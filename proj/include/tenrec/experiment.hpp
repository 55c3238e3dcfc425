#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tenrec/asym.hpp"
#include "tenrec/errors.hpp"
#include "tenrec/gd.hpp"
#include "tenrec/init.hpp"
#include "tenrec/instances.hpp"
#include "tenrec/metrics.hpp"

namespace tenrec {

enum class ExperimentKind { convergence, phase, rank, snr, asym_convergence };

inline ExperimentKind parse_kind(const std::string& s) {
    if (s == "convergence") return ExperimentKind::convergence;
    if (s == "phase") return ExperimentKind::phase;
    if (s == "rank") return ExperimentKind::rank;
    if (s == "snr") return ExperimentKind::snr;
    if (s == "asym-convergence") return ExperimentKind::asym_convergence;
    throw ParseError("unknown experiment kind '" + s + "'", "config", 0);
}

inline std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::phase: return "phase";
        case ExperimentKind::rank: return "rank";
        case ExperimentKind::snr: return "snr";
        case ExperimentKind::asym_convergence: return "asym-convergence";
    }
    return "?";
}

/// Monte Carlo sweep configuration. --eta is scale-free: each trial runs
/// gradient descent with the literal stepsize eta / max_i ||u_i^0||_2^4,
/// where U^0 is that trial's initialization.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::convergence;
    int d = 100;
    int d1 = 100, d2 = 150, d3 = 200;  // asym-convergence dims
    int r = 4;
    double p = 0.1;
    double sigma = 0.0;
    std::vector<double> p_grid;    // phase
    std::vector<double> r_grid;    // rank
    std::vector<double> snr_grid;  // snr / asym (value <= 0 means noiseless)
    int trials = 100;
    std::uint64_t base_seed = 1;
    int L = 16;
    double eps_th = 0.4;
    int t_init = 5;
    double eta = 0.2;     // scale-free; asym default is 0.5 when unset
    bool eta_set = false;
    int t0 = 100;
    double success_threshold = 0.01;
    int tpm_iters = 16;
    int tpm_restarts = 16;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (trials < 1) throw ParseError("config: trials must be >= 1", "config", 0);
        for (double v : p_grid)
            if (!(v > 0.0 && v <= 1.0))
                throw ParseError("config: p values must lie in (0,1]", "config", 0);
        if (!(p > 0.0 && p <= 1.0))
            throw ParseError("config: p must lie in (0,1]", "config", 0);
        if (kind == ExperimentKind::phase && p_grid.empty())
            throw ParseError("config: phase experiment needs p_grid", "config", 0);
        if (kind == ExperimentKind::rank && r_grid.empty())
            throw ParseError("config: rank experiment needs r_grid", "config", 0);
        if (kind == ExperimentKind::snr && snr_grid.empty())
            throw ParseError("config: snr experiment needs snr_grid", "config", 0);
    }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.kind = parse_kind(j.at("kind").get<std::string>());
        c.d = j.value("d", c.d);
        c.d1 = j.value("d1", c.d1);
        c.d2 = j.value("d2", c.d2);
        c.d3 = j.value("d3", c.d3);
        c.r = j.value("r", c.r);
        c.p = j.value("p", c.p);
        c.sigma = j.value("sigma", c.sigma);
        c.p_grid = j.value("p_grid", c.p_grid);
        c.r_grid = j.value("r_grid", c.r_grid);
        c.snr_grid = j.value("snr_grid", c.snr_grid);
        c.trials = j.value("trials", c.trials);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.L = j.value("L", c.L);
        c.eps_th = j.value("eps_th", c.eps_th);
        c.t_init = j.value("t_init", c.t_init);
        if (j.contains("eta")) {
            c.eta = j.at("eta").get<double>();
            c.eta_set = true;
        }
        c.t0 = j.value("t0", c.t0);
        c.success_threshold = j.value("success_threshold", c.success_threshold);
        c.tpm_iters = j.value("tpm_iters", c.tpm_iters);
        c.tpm_restarts = j.value("tpm_restarts", c.tpm_restarts);
        c.threads = j.value("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad experiment config: ") + e.what(),
                         "config", 0);
    }
    // Documented defaults; the paper does not publish these grids.
    if (c.kind == ExperimentKind::phase && c.p_grid.empty())
        for (int i = 1; i <= 10; ++i) c.p_grid.push_back(0.01 * i);
    if (c.kind == ExperimentKind::rank && c.r_grid.empty())
        for (int i = 1; i <= 10; ++i) c.r_grid.push_back(i);
    if (c.kind == ExperimentKind::snr && c.snr_grid.empty())
        c.snr_grid = {1, 3, 10, 30, 100};
    if (c.kind == ExperimentKind::asym_convergence && c.snr_grid.empty())
        c.snr_grid = {0};  // noiseless
    c.validate();
    return c;
}

/// Per-trial row. Wall time lives here but is excluded from rows.csv so
/// that rows.csv is byte-identical across thread counts; aggregate.csv
/// reports mean wall time instead.
struct TrialRow {
    int grid_index = 0;
    double grid_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::string method;  // "proposed" or "tpm"
    int error_code = 0;  // 0 ok, 2 init failure, 3 divergence
    bool success = false;
    double loss_final = 0.0;
    double rel_dist_f = 0.0;
    double rel_dist_2inf = 0.0;
    double rel_dist_inf = 0.0;
    double rel_tensor_f = 0.0;
    double rel_tensor_inf = 0.0;
    double wall_ms = 0.0;
};

struct AggregateRow {
    int grid_index = 0;
    double grid_value = 0.0;
    std::string method;
    int trials = 0;
    int successes = 0;
    int completed = 0;  // trials that ran to t0 without error
    double success_rate = 0.0;
    double mean_rel_dist_f = 0.0;
    double median_rel_dist_f = 0.0;
    double mean_sq_rel_dist_f = 0.0;
    double mean_rel_tensor_f = 0.0;
    double mean_wall_ms = 0.0;
};

struct ExperimentResult {
    std::vector<TrialRow> rows;
    std::vector<AggregateRow> aggregates;
};

/// Documented offset formula relating a row to its seed.
inline std::uint64_t trial_seed(std::uint64_t base_seed, int grid_index,
                                int trial_index) {
    return base_seed + 10007ULL * static_cast<std::uint64_t>(grid_index) +
           static_cast<std::uint64_t>(trial_index);
}

/// Scale-free stepsize -> literal stepsize for this initialization:
/// eta / lambda_min^{4/3} with lambda_min^{1/3} the smallest initial column
/// norm. This pins the slowest error mode's contraction at 1 - eta, so the
/// iteration budget needed for a target accuracy does not depend on the
/// instance scale.
inline double literal_eta(double eta, const FactorMatrix& u0) {
    double min_norm_sq = std::numeric_limits<double>::infinity();
    for (int c = 0; c < u0.cols(); ++c)
        min_norm_sq = std::min(min_norm_sq, u0.col(c).squaredNorm());
    if (!(min_norm_sq > 0.0) || !std::isfinite(min_norm_sq)) return eta;
    return eta / (min_norm_sq * min_norm_sq);
}

namespace detail {

inline void fill_final_metrics(TrialRow& row, const FactorMatrix& u,
                               const FactorMatrix& ustar, double threshold) {
    const FactorErrors fe = factor_errors(u, ustar);
    row.rel_dist_f = fe.dist_f / ustar.norm();
    row.rel_dist_2inf =
        fe.dist_2inf / std::sqrt(ustar.rowwise().squaredNorm().maxCoeff());
    row.rel_dist_inf = fe.dist_inf / ustar.cwiseAbs().maxCoeff();
    const auto [rel_f, rel_inf] = tensor_errors(u, ustar);
    row.rel_tensor_f = rel_f;
    row.rel_tensor_inf = rel_inf;
    row.success = fe.dist_f <= threshold * ustar.norm();
}

inline TrialRow run_sym_trial(const ExperimentConfig& cfg, int grid_index,
                              double grid_value, int trial, bool tpm) {
    TrialRow row;
    row.grid_index = grid_index;
    row.grid_value = grid_value;
    row.trial = trial;
    row.seed = trial_seed(cfg.base_seed, grid_index, trial);
    row.method = tpm ? "tpm" : "proposed";
    const auto t_start = std::chrono::steady_clock::now();

    double p = cfg.p;
    int r = cfg.r;
    int L = cfg.L;
    double sigma = cfg.sigma;
    if (cfg.kind == ExperimentKind::phase) p = grid_value;
    if (cfg.kind == ExperimentKind::rank) {
        r = static_cast<int>(grid_value);
        const double logd = std::log(static_cast<double>(cfg.d));
        p = r * std::pow(cfg.d, -1.5) * logd * logd;
        L = r * r;
    }

    const FactorMatrix ustar = gen_factors(cfg.d, r, row.seed);
    if (cfg.kind == ExperimentKind::snr)
        sigma = std::sqrt(cp_frob_sq(ustar) /
                          (std::pow(cfg.d, 3) * grid_value));
    const ObservationSet obs = sample_observations(ustar, p, sigma, row.seed);

    try {
        const FactorMatrix u0 =
            tpm ? tpm_baseline(obs, r, cfg.tpm_iters, cfg.tpm_restarts, row.seed)
                : best_of_restarts(obs, r, L, cfg.eps_th, cfg.t_init, row.seed);
        const GdResult gd =
            gd_run(obs, u0, literal_eta(cfg.eta, u0), cfg.t0, nullptr);
        row.loss_final = gd.trace.back().loss;
        fill_final_metrics(row, gd.factors, ustar, cfg.success_threshold);
    } catch (const DivergenceError&) {
        row.error_code = 3;
    } catch (const Error&) {
        row.error_code = 2;
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    return row;
}

inline TrialRow run_asym_trial(const ExperimentConfig& cfg, int grid_index,
                               double snr, int trial) {
    TrialRow row;
    row.grid_index = grid_index;
    row.grid_value = snr;
    row.trial = trial;
    row.seed = trial_seed(cfg.base_seed, grid_index, trial);
    row.method = "proposed";
    const auto t_start = std::chrono::steady_clock::now();

    const AsymFactors fstar =
        gen_asym_factors(cfg.d1, cfg.d2, cfg.d3, cfg.r, row.seed);
    double sigma = 0.0;
    if (snr > 0.0)
        sigma = std::sqrt(asym_cp_inner(fstar, fstar) /
                          (static_cast<double>(cfg.d1) * cfg.d2 * cfg.d3 * snr));
    const AsymObservationSet obs =
        sample_asym_observations(fstar, cfg.p, sigma, row.seed);

    try {
        const AsymInit ini = init_asym(obs, cfg.r, cfg.L, cfg.eps_th, row.seed);
        const Eigen::VectorXd alpha =
            ini.lambdas.array().pow(2.0 / 3.0).matrix();
        const double eta_norm = cfg.eta_set ? cfg.eta : 0.5;
        const AsymGdResult gd =
            gd_asym(obs, ini.factors, alpha,
                    literal_eta(eta_norm, ini.factors.U), cfg.t0, nullptr);
        row.loss_final = gd.trace.back().loss;
        const AsymFactorErrors fe = asym_factor_errors(gd.factors, fstar);
        row.rel_dist_f = std::max({fe.rel_u, fe.rel_v, fe.rel_w});
        const auto [rel_f, rel_inf] = asym_tensor_errors(gd.factors, fstar);
        row.rel_tensor_f = rel_f;
        row.rel_tensor_inf = rel_inf;
        row.success = row.rel_dist_f <= cfg.success_threshold;
    } catch (const DivergenceError&) {
        row.error_code = 3;
    } catch (const Error&) {
        row.error_code = 2;
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    return row;
}

}  // namespace detail

inline std::vector<double> experiment_grid(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::phase: return cfg.p_grid;
        case ExperimentKind::rank: return cfg.r_grid;
        case ExperimentKind::snr: return cfg.snr_grid;
        case ExperimentKind::asym_convergence: return cfg.snr_grid;
        case ExperimentKind::convergence: return {cfg.p};
    }
    return {cfg.p};
}

/// Runs trials x grid points (x methods when with_tpm), each trial on its
/// pre-derived seed, on a bounded worker pool. Results land in slots fixed
/// by (grid, trial, method), so the output is schedule-independent.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       bool with_tpm = false) {
    cfg.validate();
    const std::vector<double> grid = experiment_grid(cfg);
    const int methods = with_tpm ? 2 : 1;
    const std::size_t total = grid.size() * cfg.trials * methods;

    ExperimentResult result;
    result.rows.resize(total);
    std::atomic<std::size_t> next{0};
    const int want = cfg.threads > 0
                         ? cfg.threads
                         : static_cast<int>(std::thread::hardware_concurrency());
    const int workers =
        std::max(1, std::min<int>(want > 0 ? want : 1, static_cast<int>(total)));

    const auto work = [&]() {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) return;
            const int method = static_cast<int>(task % methods);
            const std::size_t pair = task / methods;
            const int trial = static_cast<int>(pair % cfg.trials);
            const int gi = static_cast<int>(pair / cfg.trials);
            TrialRow row;
            if (cfg.kind == ExperimentKind::asym_convergence)
                row = detail::run_asym_trial(cfg, gi, grid[gi], trial);
            else
                row = detail::run_sym_trial(cfg, gi, grid[gi], trial,
                                            method == 1);
            result.rows[task] = std::move(row);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    // Aggregates per (grid point, method), over completed trials.
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        for (int method = 0; method < methods; ++method) {
            AggregateRow agg;
            agg.grid_index = static_cast<int>(gi);
            agg.grid_value = grid[gi];
            agg.method = method == 1 ? "tpm" : "proposed";
            agg.trials = cfg.trials;
            std::vector<double> dists;
            double sum_d = 0.0, sum_sq = 0.0, sum_tf = 0.0, sum_ms = 0.0;
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const std::size_t idx =
                    (gi * cfg.trials + trial) * methods + method;
                const TrialRow& row = result.rows[idx];
                agg.successes += row.success ? 1 : 0;
                sum_ms += row.wall_ms;
                if (row.error_code != 0) continue;
                ++agg.completed;
                dists.push_back(row.rel_dist_f);
                sum_d += row.rel_dist_f;
                sum_sq += row.rel_dist_f * row.rel_dist_f;
                sum_tf += row.rel_tensor_f;
            }
            agg.success_rate =
                static_cast<double>(agg.successes) / agg.trials;
            if (!dists.empty()) {
                agg.mean_rel_dist_f = sum_d / dists.size();
                agg.mean_sq_rel_dist_f = sum_sq / dists.size();
                agg.mean_rel_tensor_f = sum_tf / dists.size();
                std::sort(dists.begin(), dists.end());
                const std::size_t mid = dists.size() / 2;
                agg.median_rel_dist_f =
                    dists.size() % 2 ? dists[mid]
                                     : 0.5 * (dists[mid - 1] + dists[mid]);
            }
            agg.mean_wall_ms = sum_ms / cfg.trials;
            result.aggregates.push_back(std::move(agg));
        }
    }
    return result;
}

inline void write_rows_csv(const std::vector<TrialRow>& rows,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "grid_index,grid_value,trial,seed,method,error_code,success,"
           "loss,rel_dist_f,rel_dist_2inf,rel_dist_inf,rel_tensor_f,"
           "rel_tensor_inf\n";
    for (const TrialRow& row : rows) {
        out << row.grid_index << ',' << detail::fmt_double(row.grid_value)
            << ',' << row.trial << ',' << row.seed << ',' << row.method << ','
            << row.error_code << ',' << (row.success ? 1 : 0) << ',';
        if (row.error_code == 0) {
            out << detail::fmt_double(row.loss_final) << ','
                << detail::fmt_double(row.rel_dist_f) << ','
                << detail::fmt_double(row.rel_dist_2inf) << ','
                << detail::fmt_double(row.rel_dist_inf) << ','
                << detail::fmt_double(row.rel_tensor_f) << ','
                << detail::fmt_double(row.rel_tensor_inf);
        } else {
            out << ",,,,,";
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void write_aggregate_csv(const std::vector<AggregateRow>& aggs,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "grid_index,grid_value,method,trials,completed,successes,"
           "success_rate,mean_rel_dist_f,median_rel_dist_f,"
           "mean_sq_rel_dist_f,mean_rel_tensor_f,mean_wall_ms\n";
    for (const AggregateRow& a : aggs) {
        out << a.grid_index << ',' << detail::fmt_double(a.grid_value) << ','
            << a.method << ',' << a.trials << ',' << a.completed << ','
            << a.successes << ',' << detail::fmt_double(a.success_rate) << ','
            << detail::fmt_double(a.mean_rel_dist_f) << ','
            << detail::fmt_double(a.median_rel_dist_f) << ','
            << detail::fmt_double(a.mean_sq_rel_dist_f) << ','
            << detail::fmt_double(a.mean_rel_tensor_f) << ','
            << detail::fmt_double(a.mean_wall_ms) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace tenrec
