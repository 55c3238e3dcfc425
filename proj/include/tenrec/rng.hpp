#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace tenrec {

/// SplitMix64 finalizer, used to decorrelate seeds derived from one master.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named substream of a master seed. Every random purpose
/// (factor draws, sampling mask, noise, retrieval vectors, solver start
/// blocks, ...) gets its own (tag, index) pair so draws for one purpose
/// never shift another.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index = 0) {
    return splitmix64(master ^ splitmix64(tag ^ splitmix64(index)));
}

namespace stream {
inline constexpr std::uint64_t factors = 1;
inline constexpr std::uint64_t mask = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t subspace = 4;
inline constexpr std::uint64_t retrieval = 5;
inline constexpr std::uint64_t tpm = 6;
inline constexpr std::uint64_t restart = 7;
inline constexpr std::uint64_t svd = 8;
}  // namespace stream

/// Deterministic random stream: std::mt19937_64 (bit-exact per the
/// standard) with gaussians via the Box-Muller transform. The spare
/// Box-Muller deviate is cached, so consumption order is fixed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925287;
        spare_ = radius * std::sin(two_pi * u2);
        have_spare_ = true;
        return radius * std::cos(two_pi * u2);
    }

    Eigen::VectorXd gaussian_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    /// Column-major fill order.
    Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) m(i, j) = gaussian();
        return m;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tenrec
