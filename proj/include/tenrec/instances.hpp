#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tenrec/errors.hpp"
#include "tenrec/rng.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

/// One observed canonical entry (i <= j <= k).
struct ObsEntry {
    int i = 0, j = 0, k = 0;
    double value = 0.0;
};

/// Sampled noisy entries of a symmetric ground-truth tensor. Entries are
/// stored once per canonical triple; the observed set is, by convention,
/// the union of all index permutations of each triple with the same value.
/// Entries are kept sorted, so every consumer sees one canonical order no
/// matter how the set was assembled.
struct ObservationSet {
    int d = 0;
    double p = 1.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    int r_hint = 0;
    std::vector<ObsEntry> entries;

    void normalize() {
        std::sort(entries.begin(), entries.end(),
                  [](const ObsEntry& a, const ObsEntry& b) {
                      if (a.i != b.i) return a.i < b.i;
                      if (a.j != b.j) return a.j < b.j;
                      return a.k < b.k;
                  });
        for (std::size_t n = 0; n < entries.size(); ++n) {
            const ObsEntry& e = entries[n];
            if (!(0 <= e.i && e.i <= e.j && e.j <= e.k && e.k < d))
                throw DimensionError("ObservationSet: non-canonical triple");
            if (!std::isfinite(e.value))
                throw DimensionError("ObservationSet: non-finite value");
            if (n > 0) {
                const ObsEntry& prev = entries[n - 1];
                if (prev.i == e.i && prev.j == e.j && prev.k == e.k)
                    throw DimensionError("ObservationSet: duplicate triple");
            }
        }
    }
};

/// r columns drawn i.i.d. standard Gaussian N(0, I_d).
inline FactorMatrix gen_factors(int d, int r, std::uint64_t seed) {
    if (d < 1 || r < 1) throw DimensionError("gen_factors: need d, r >= 1");
    Rng rng(derive_seed(seed, stream::factors));
    return rng.gaussian_matrix(d, r);
}

/// [cp_compose(U)]_{i,j,k} without materializing the tensor.
inline double truth_entry(const FactorMatrix& U, int i, int j, int k) {
    double v = 0.0;
    for (int c = 0; c < U.cols(); ++c) v += U(i, c) * U(j, c) * U(k, c);
    return v;
}

/// Bernoulli-p sampling over canonical triples i <= j <= k, one noise draw
/// per included triple (replicated over the orbit by the expansion
/// convention). Mask and noise use separate streams of the seed, so the
/// sampled locations do not depend on sigma.
inline ObservationSet sample_observations(const FactorMatrix& Ustar, double p,
                                          double sigma, std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0))
        throw DimensionError("sample_observations: need 0 < p <= 1");
    if (sigma < 0.0) throw DimensionError("sample_observations: need sigma >= 0");
    ObservationSet obs;
    obs.d = static_cast<int>(Ustar.rows());
    obs.p = p;
    obs.sigma = sigma;
    obs.seed = seed;
    obs.r_hint = static_cast<int>(Ustar.cols());
    Rng mask(derive_seed(seed, stream::mask));
    Rng noise(derive_seed(seed, stream::noise));
    for (int i = 0; i < obs.d; ++i)
        for (int j = i; j < obs.d; ++j)
            for (int k = j; k < obs.d; ++k) {
                if (mask.uniform() >= p) continue;
                double v = truth_entry(Ustar, i, j, k);
                if (sigma > 0.0) v += sigma * noise.gaussian();
                obs.entries.push_back({i, j, k, v});
            }
    return obs;
}

struct IncoherenceStats {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double kappa = 1.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

/// ||sum_i u_i^(x)3||_F^2 = sum_{ij} <u_i, u_j>^3.
inline double cp_frob_sq(const FactorMatrix& U) {
    const Eigen::MatrixXd g = U.transpose() * U;
    return g.array().cube().sum();
}

/// Max-abs entry of cp_compose(U), one d x d slab at a time.
inline double cp_inf_norm(const FactorMatrix& U) {
    const int d = static_cast<int>(U.rows());
    double m = 0.0;
    Eigen::MatrixXd slab;
    for (int k = 0; k < d; ++k) {
        slab.noalias() = U * U.row(k).asDiagonal() * U.transpose();
        m = std::max(m, slab.cwiseAbs().maxCoeff());
    }
    return m;
}

inline IncoherenceStats incoherence_stats(const FactorMatrix& Ustar) {
    const int d = static_cast<int>(Ustar.rows());
    const int r = static_cast<int>(Ustar.cols());
    IncoherenceStats s;
    Eigen::VectorXd norms(r);
    for (int c = 0; c < r; ++c) {
        norms[c] = Ustar.col(c).norm();
        if (norms[c] == 0.0)
            throw Error("incoherence_stats: zero column");
    }
    const double fro_sq = cp_frob_sq(Ustar);
    const double inf = cp_inf_norm(Ustar);
    s.mu0 = static_cast<double>(d) * d * d * inf * inf / fro_sq;
    s.mu1 = 0.0;
    for (int c = 0; c < r; ++c) {
        const double m = Ustar.col(c).cwiseAbs().maxCoeff();
        s.mu1 = std::max(s.mu1, d * m * m / (norms[c] * norms[c]));
    }
    s.mu2 = 0.0;
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) {
            if (a == b) continue;
            const double dot = Ustar.col(a).dot(Ustar.col(b));
            s.mu2 = std::max(s.mu2, d * dot * dot /
                                        (norms[a] * norms[a] * norms[b] * norms[b]));
        }
    s.kappa = norms.maxCoeff() / norms.minCoeff();
    s.lambda_min = std::pow(norms.minCoeff(), 3);
    s.lambda_max = std::pow(norms.maxCoeff(), 3);
    return s;
}

// --------------------------------------------------------------------------
// File formats.
//   observation dir: manifest.json {"d","r_hint","p","sigma","seed",
//                    "num_canonical"} + entries.csv "i,j,k,value"
//   factor matrix:   CSV, d rows x r columns, no header
// Floats are printed with 17 significant digits, so round trips are exact.
// --------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& path,
                           int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad number '" + s + "' at " + path + ":" +
                             std::to_string(line),
                         path, line);
    }
}

inline int parse_int(const std::string& s, const std::string& path, int line) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad integer '" + s + "' at " + path + ":" +
                             std::to_string(line),
                         path, line);
    }
}

}  // namespace detail

inline void write_factors(const FactorMatrix& F, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (int i = 0; i < F.rows(); ++i) {
        for (int c = 0; c < F.cols(); ++c) {
            if (c) out << ',';
            out << detail::fmt_double(F(i, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline FactorMatrix read_factors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields)
            row.push_back(detail::parse_double(f, path, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("inconsistent row width at " + path + ":" +
                                 std::to_string(line_no),
                             path, line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty factor file " + path, path, 0);
    FactorMatrix F(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < rows.front().size(); ++c)
            F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                rows[i][c];
    return F;
}

inline void write_observations(const ObservationSet& obs,
                               const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto manifest_path = (std::filesystem::path(dir) / "manifest.json").string();
    nlohmann::json manifest = {
        {"d", obs.d},
        {"r_hint", obs.r_hint},
        {"p", obs.p},
        {"sigma", obs.sigma},
        {"seed", obs.seed},
        {"num_canonical", obs.entries.size()},
    };
    {
        std::ofstream out(manifest_path);
        if (!out) throw IoError("cannot open for writing: " + manifest_path);
        out << manifest.dump(2) << '\n';
    }
    const auto entries_path = (std::filesystem::path(dir) / "entries.csv").string();
    std::ofstream out(entries_path);
    if (!out) throw IoError("cannot open for writing: " + entries_path);
    out << "i,j,k,value\n";
    for (const ObsEntry& e : obs.entries)
        out << e.i << ',' << e.j << ',' << e.k << ','
            << detail::fmt_double(e.value) << '\n';
    if (!out) throw IoError("write failed: " + entries_path);
}

inline ObservationSet read_observations(const std::string& dir) {
    const auto manifest_path = (std::filesystem::path(dir) / "manifest.json").string();
    std::ifstream min(manifest_path);
    if (!min) throw IoError("cannot open: " + manifest_path);
    nlohmann::json manifest;
    try {
        min >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what(), manifest_path, 0);
    }
    ObservationSet obs;
    try {
        obs.d = manifest.at("d").get<int>();
        obs.r_hint = manifest.value("r_hint", 0);
        obs.p = manifest.at("p").get<double>();
        obs.sigma = manifest.at("sigma").get<double>();
        obs.seed = manifest.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what(), manifest_path, 0);
    }
    const std::size_t num_canonical = manifest.at("num_canonical").get<std::size_t>();

    const auto entries_path = (std::filesystem::path(dir) / "entries.csv").string();
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
        ObsEntry e;
        e.i = detail::parse_int(fields[0], entries_path, line_no);
        e.j = detail::parse_int(fields[1], entries_path, line_no);
        e.k = detail::parse_int(fields[2], entries_path, line_no);
        e.value = detail::parse_double(fields[3], entries_path, line_no);
        if (!(0 <= e.i && e.i <= e.j && e.j <= e.k && e.k < obs.d))
            throw ParseError("non-canonical triple at " + entries_path + ":" +
                                 std::to_string(line_no),
                             entries_path, line_no);
        obs.entries.push_back(e);
    }
    if (obs.entries.size() != num_canonical)
        throw ParseError("entry count " + std::to_string(obs.entries.size()) +
                             " does not match manifest num_canonical " +
                             std::to_string(num_canonical),
                         entries_path, 0);
    obs.normalize();
    return obs;
}

}  // namespace tenrec
