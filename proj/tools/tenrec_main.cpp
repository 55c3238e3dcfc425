// Command-line driver for nonconvex low-rank tensor completion: instance
// generation, single pipeline runs, and Monte Carlo experiment sweeps.
//
// Exit codes: 0 ok, 2 initialization failure, 3 divergence, 4 I/O or parse
// error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tenrec/asym.hpp"
#include "tenrec/experiment.hpp"
#include "tenrec/gd.hpp"
#include "tenrec/init.hpp"
#include "tenrec/instances.hpp"
#include "tenrec/metrics.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tenrec;

struct GenArgs {
    int d = 100, r = 4;
    double p = 0.1, sigma = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

struct CompleteArgs {
    std::string obs, out, truth;
    int r = 0;  // 0: take r_hint from the manifest
    int L = 16;
    double eps_th = 0.4;
    int t_init = 5;
    double eta = 0.2;
    bool eta_set = false;
    int iters = 100;
    std::uint64_t seed = 1;
    double success_threshold = 0.01;
};

void cmd_gen(const GenArgs& a) {
    const FactorMatrix ustar = gen_factors(a.d, a.r, a.seed);
    ObservationSet obs = sample_observations(ustar, a.p, a.sigma, a.seed);
    fs::create_directories(a.out);
    write_factors(ustar, (fs::path(a.out) / "Ustar.csv").string());
    write_observations(obs, a.out);
    std::cout << "wrote " << obs.entries.size() << " canonical entries to "
              << a.out << "\n";
}

void cmd_complete(const CompleteArgs& a) {
    ObservationSet obs = read_observations(a.obs);
    const int r = a.r > 0 ? a.r : obs.r_hint;
    if (r < 1) throw ParseError("rank not given and manifest has no r_hint",
                                a.obs, 0);
    FactorMatrix truth;
    const bool have_truth = !a.truth.empty();
    if (have_truth) truth = read_factors(a.truth);

    const FactorMatrix u0 =
        best_of_restarts(obs, r, a.L, a.eps_th, a.t_init, a.seed);
    const GdResult gd = gd_run(obs, u0, literal_eta(a.eta, u0), a.iters,
                               have_truth ? &truth : nullptr);

    fs::create_directories(a.out);
    write_factors(gd.factors, (fs::path(a.out) / "U.csv").string());
    write_trace_csv(gd.trace, (fs::path(a.out) / "trace.csv").string());
    if (have_truth) {
        std::ofstream out((fs::path(a.out) / "metrics.json").string());
        out << metrics_json(gd.factors, truth, a.success_threshold).dump(2)
            << '\n';
    }
    std::cout << "final loss " << gd.trace.back().loss;
    if (have_truth)
        std::cout << ", rel dist_F " << gd.trace.back().rel_dist_f;
    std::cout << "\n";
}

void cmd_eval(const std::string& estimate, const std::string& truth,
              const std::string& out, double threshold) {
    const FactorMatrix u = read_factors(estimate);
    const FactorMatrix ustar = read_factors(truth);
    const nlohmann::json j = metrics_json(u, ustar, threshold);
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream os(out);
        if (!os) throw IoError("cannot open for writing: " + out);
        os << j.dump(2) << '\n';
    }
}

ExperimentConfig load_config(const std::string& path, int threads) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad config json: ") + e.what(), path, 0);
    }
    ExperimentConfig cfg = config_from_json(j);
    if (threads > 0) cfg.threads = threads;
    return cfg;
}

void cmd_experiment(const std::string& config_path, const std::string& out,
                    int threads, bool with_tpm) {
    const ExperimentConfig cfg = load_config(config_path, threads);
    const ExperimentResult res = run_experiment(cfg, with_tpm);
    fs::create_directories(out);
    write_rows_csv(res.rows, (fs::path(out) / "rows.csv").string());
    write_aggregate_csv(res.aggregates,
                        (fs::path(out) / "aggregate.csv").string());
    std::cout << kind_name(cfg.kind) << ": " << res.rows.size()
              << " trial rows -> " << out << "\n";
    for (const AggregateRow& a : res.aggregates)
        std::cout << "  grid " << a.grid_value << " [" << a.method
                  << "] success rate " << a.success_rate << "\n";
}

struct AsymGenArgs {
    int d1 = 100, d2 = 150, d3 = 200, r = 4;
    double p = 0.05, sigma = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

void cmd_asym_gen(const AsymGenArgs& a) {
    const AsymFactors fstar = gen_asym_factors(a.d1, a.d2, a.d3, a.r, a.seed);
    const AsymObservationSet obs =
        sample_asym_observations(fstar, a.p, a.sigma, a.seed);
    fs::create_directories(a.out);
    write_factors(fstar.U, (fs::path(a.out) / "Ustar.csv").string());
    write_factors(fstar.V, (fs::path(a.out) / "Vstar.csv").string());
    write_factors(fstar.W, (fs::path(a.out) / "Wstar.csv").string());
    write_asym_observations(obs, a.out);
    std::cout << "wrote " << obs.entries.size() << " entries to " << a.out
              << "\n";
}

void cmd_asym_complete(const CompleteArgs& a) {
    AsymObservationSet obs = read_asym_observations(a.obs);
    const int r = a.r > 0 ? a.r : obs.r_hint;
    if (r < 1) throw ParseError("rank not given and manifest has no r_hint",
                                a.obs, 0);
    AsymFactors truth;
    const bool have_truth = !a.truth.empty();
    if (have_truth) {
        truth.U = read_factors((fs::path(a.truth) / "Ustar.csv").string());
        truth.V = read_factors((fs::path(a.truth) / "Vstar.csv").string());
        truth.W = read_factors((fs::path(a.truth) / "Wstar.csv").string());
    }

    const AsymInit ini = init_asym(obs, r, a.L, a.eps_th, a.seed);
    const Eigen::VectorXd alpha = ini.lambdas.array().pow(2.0 / 3.0).matrix();
    const double eta_norm = a.eta_set ? a.eta : 0.5;
    const AsymGdResult gd =
        gd_asym(obs, ini.factors, alpha, literal_eta(eta_norm, ini.factors.U),
                a.iters, have_truth ? &truth : nullptr);

    fs::create_directories(a.out);
    write_factors(gd.factors.U, (fs::path(a.out) / "U.csv").string());
    write_factors(gd.factors.V, (fs::path(a.out) / "V.csv").string());
    write_factors(gd.factors.W, (fs::path(a.out) / "W.csv").string());
    write_trace_csv(gd.trace, (fs::path(a.out) / "trace.csv").string());
    if (have_truth) {
        const AsymFactorErrors fe = asym_factor_errors(gd.factors, truth);
        const auto [rel_f, rel_inf] = asym_tensor_errors(gd.factors, truth);
        const double worst = std::max({fe.rel_u, fe.rel_v, fe.rel_w});
        const nlohmann::json j = {
            {"rel_u_f", fe.rel_u},
            {"rel_v_f", fe.rel_v},
            {"rel_w_f", fe.rel_w},
            {"rel_tensor_f", rel_f},
            {"rel_tensor_inf", rel_inf},
            {"success", worst <= a.success_threshold},
        };
        std::ofstream out((fs::path(a.out) / "metrics.json").string());
        out << j.dump(2) << '\n';
    }
    std::cout << "final loss " << gd.trace.back().loss << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tenrec: nonconvex completion of low-CP-rank order-3 tensors"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* c_gen = app.add_subcommand("gen", "generate a synthetic instance");
    c_gen->add_option("--d", gen.d, "tensor dimension");
    c_gen->add_option("--r", gen.r, "CP rank");
    c_gen->add_option("--p", gen.p, "sampling rate in (0,1]");
    c_gen->add_option("--sigma", gen.sigma, "noise standard deviation");
    c_gen->add_option("--seed", gen.seed, "master seed");
    c_gen->add_option("--out", gen.out, "output directory")->required();

    CompleteArgs comp;
    CLI::App* c_comp =
        app.add_subcommand("complete", "initialize + gradient descent");
    c_comp->add_option("--obs", comp.obs, "observation directory")->required();
    c_comp->add_option("--out", comp.out, "output directory")->required();
    c_comp->add_option("--truth", comp.truth, "ground-truth factor CSV");
    c_comp->add_option("--r", comp.r, "CP rank (default: manifest r_hint)");
    c_comp->add_option("--L", comp.L, "retrieval trials");
    c_comp->add_option("--eps-th", comp.eps_th, "pruning threshold");
    c_comp->add_option("--init-restarts", comp.t_init, "initialization restarts");
    c_comp->add_option("--eta", comp.eta, "scale-free stepsize")
        ->each([&comp](const std::string&) { comp.eta_set = true; });
    c_comp->add_option("--iters", comp.iters, "gradient descent iterations");
    c_comp->add_option("--seed", comp.seed, "master seed");
    c_comp->add_option("--success-threshold", comp.success_threshold,
                       "relative dist_F success cutoff");

    std::string eval_estimate, eval_truth, eval_out;
    double eval_threshold = 0.01;
    CLI::App* c_eval =
        app.add_subcommand("eval", "metrics for an estimate vs ground truth");
    c_eval->add_option("estimate", eval_estimate, "estimated factor CSV")
        ->required();
    c_eval->add_option("--truth", eval_truth, "ground-truth factor CSV")
        ->required();
    c_eval->add_option("--out", eval_out, "metrics.json path (default stdout)");
    c_eval->add_option("--success-threshold", eval_threshold,
                       "relative dist_F success cutoff");

    std::string exp_config, exp_out;
    int exp_threads = 0;
    CLI::App* c_exp =
        app.add_subcommand("experiment", "Monte Carlo sweep from a JSON config");
    c_exp->add_option("--config", exp_config, "config JSON")->required();
    c_exp->add_option("--out", exp_out, "output directory")->required();
    c_exp->add_option("--threads", exp_threads, "worker threads");

    std::string tpm_config, tpm_out;
    int tpm_threads = 0;
    CLI::App* c_tpm = app.add_subcommand(
        "tpm-compare", "sweep run for both proposed and TPM initialization");
    c_tpm->add_option("--config", tpm_config, "config JSON")->required();
    c_tpm->add_option("--out", tpm_out, "output directory")->required();
    c_tpm->add_option("--threads", tpm_threads, "worker threads");

    AsymGenArgs agen;
    CLI::App* c_agen =
        app.add_subcommand("asym-gen", "generate an asymmetric instance");
    c_agen->add_option("--d1", agen.d1, "first dimension");
    c_agen->add_option("--d2", agen.d2, "second dimension");
    c_agen->add_option("--d3", agen.d3, "third dimension");
    c_agen->add_option("--r", agen.r, "CP rank");
    c_agen->add_option("--p", agen.p, "sampling rate in (0,1]");
    c_agen->add_option("--sigma", agen.sigma, "noise standard deviation");
    c_agen->add_option("--seed", agen.seed, "master seed");
    c_agen->add_option("--out", agen.out, "output directory")->required();

    CompleteArgs acomp;
    acomp.L = 16;
    acomp.eta = 0.5;
    CLI::App* c_acomp = app.add_subcommand(
        "asym-complete", "asymmetric initialize + gradient descent");
    c_acomp->add_option("--obs", acomp.obs, "observation directory")->required();
    c_acomp->add_option("--out", acomp.out, "output directory")->required();
    c_acomp->add_option("--truth", acomp.truth,
                        "directory with Ustar/Vstar/Wstar.csv");
    c_acomp->add_option("--r", acomp.r, "CP rank (default: manifest r_hint)");
    c_acomp->add_option("--L", acomp.L, "retrieval trials");
    c_acomp->add_option("--eps-th", acomp.eps_th, "pruning threshold");
    c_acomp->add_option("--eta", acomp.eta, "scale-free stepsize (default 0.5)")
        ->each([&acomp](const std::string&) { acomp.eta_set = true; });
    c_acomp->add_option("--iters", acomp.iters, "gradient descent iterations");
    c_acomp->add_option("--seed", acomp.seed, "master seed");
    c_acomp->add_option("--success-threshold", acomp.success_threshold,
                        "max per-matrix relative error cutoff");

    std::string aexp_config, aexp_out;
    int aexp_threads = 0;
    CLI::App* c_aexp = app.add_subcommand(
        "asym-experiment", "asymmetric Monte Carlo sweep from a JSON config");
    c_aexp->add_option("--config", aexp_config, "config JSON")->required();
    c_aexp->add_option("--out", aexp_out, "output directory")->required();
    c_aexp->add_option("--threads", aexp_threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_gen->parsed()) cmd_gen(gen);
        if (c_comp->parsed()) cmd_complete(comp);
        if (c_eval->parsed())
            cmd_eval(eval_estimate, eval_truth, eval_out, eval_threshold);
        if (c_exp->parsed()) cmd_experiment(exp_config, exp_out, exp_threads, false);
        if (c_tpm->parsed()) cmd_experiment(tpm_config, tpm_out, tpm_threads, true);
        if (c_agen->parsed()) cmd_asym_gen(agen);
        if (c_acomp->parsed()) cmd_asym_complete(acomp);
        if (c_aexp->parsed()) {
            const ExperimentConfig cfg = load_config(aexp_config, aexp_threads);
            if (cfg.kind != ExperimentKind::asym_convergence)
                throw ParseError("asym-experiment needs kind asym-convergence",
                                 aexp_config, 0);
            const ExperimentResult res = run_experiment(cfg, false);
            fs::create_directories(aexp_out);
            write_rows_csv(res.rows, (fs::path(aexp_out) / "rows.csv").string());
            write_aggregate_csv(res.aggregates,
                                (fs::path(aexp_out) / "aggregate.csv").string());
            std::cout << res.rows.size() << " trial rows -> " << aexp_out << "\n";
        }
    } catch (const InitFailureError& e) {
        std::cerr << "initialization failed: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
