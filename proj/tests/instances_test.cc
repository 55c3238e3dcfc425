#include "tenrec/instances.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "tenrec/rng.hpp"

namespace tenrec {
namespace {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("tenrec_test_" + std::to_string(counter_++)) ;
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string str() const { return path_.string(); }
    fs::path path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

TEST(GenFactorsTest, DeterministicGivenSeed) {
    const FactorMatrix a = gen_factors(20, 3, 77);
    const FactorMatrix b = gen_factors(20, 3, 77);
    EXPECT_TRUE(a == b);
    const FactorMatrix c = gen_factors(20, 3, 78);
    EXPECT_FALSE(a == c);
}

TEST(GenFactorsTest, ColumnNormsConcentrate) {
    // chi-square_100 mass outside [60, 140] is ~6e-3 per column; the fixed
    // seed keeps this deterministic.
    const FactorMatrix u = gen_factors(100, 4, 2024);
    for (int c = 0; c < 4; ++c) {
        const double n2 = u.col(c).squaredNorm();
        EXPECT_GE(n2, 60.0);
        EXPECT_LE(n2, 140.0);
    }
}

TEST(GenFactorsTest, EmpiricalMeanNearZero) {
    const FactorMatrix u = gen_factors(1000, 1, 5);
    EXPECT_LE(std::abs(u.col(0).mean()), 0.1);
}

TEST(SampleObservationsTest, FullSamplingNoiselessReproducesTruth) {
    const FactorMatrix u = gen_factors(8, 2, 11);
    const ObservationSet obs = sample_observations(u, 1.0, 0.0, 11);
    EXPECT_EQ(obs.entries.size(), 8u * 9 * 10 / 6);  // C(d+2, 3)
    for (const ObsEntry& e : obs.entries)
        EXPECT_DOUBLE_EQ(e.value, truth_entry(u, e.i, e.j, e.k));
}

TEST(SampleObservationsTest, BoundaryRatesRejected) {
    const FactorMatrix u = gen_factors(4, 1, 1);
    EXPECT_THROW(sample_observations(u, 0.0, 0.0, 1), DimensionError);
    EXPECT_THROW(sample_observations(u, 1.5, 0.0, 1), DimensionError);
    EXPECT_THROW(sample_observations(u, 0.5, -1.0, 1), DimensionError);
}

TEST(SampleObservationsTest, TinyRateAlmostSurelyEmpty) {
    const FactorMatrix u = gen_factors(10, 1, 3);
    const ObservationSet obs = sample_observations(u, 1e-9, 0.0, 3);
    EXPECT_LE(obs.entries.size(), 1u);
}

TEST(SampleObservationsTest, BinomialConcentration) {
    const FactorMatrix u = gen_factors(50, 2, 17);
    const ObservationSet obs = sample_observations(u, 0.1, 0.0, 17);
    const double n = 50.0 * 51 * 52 / 6;
    const double mean = n * 0.1;
    EXPECT_LE(std::abs(obs.entries.size() - mean), 4.0 * std::sqrt(mean));
}

TEST(SampleObservationsTest, CanonicalSortedDistinct) {
    const FactorMatrix u = gen_factors(12, 2, 19);
    ObservationSet obs = sample_observations(u, 0.4, 0.5, 19);
    for (std::size_t n = 0; n < obs.entries.size(); ++n) {
        const ObsEntry& e = obs.entries[n];
        EXPECT_TRUE(e.i <= e.j && e.j <= e.k);
        if (n > 0) {
            const ObsEntry& prev = obs.entries[n - 1];
            EXPECT_TRUE(std::tie(prev.i, prev.j, prev.k) <
                        std::tie(e.i, e.j, e.k));
        }
    }
    EXPECT_NO_THROW(obs.normalize());
}

TEST(SampleObservationsTest, MaskIndependentOfSigma) {
    const FactorMatrix u = gen_factors(10, 2, 23);
    const ObservationSet a = sample_observations(u, 0.3, 0.0, 23);
    const ObservationSet b = sample_observations(u, 0.3, 2.0, 23);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t n = 0; n < a.entries.size(); ++n) {
        EXPECT_EQ(a.entries[n].i, b.entries[n].i);
        EXPECT_EQ(a.entries[n].j, b.entries[n].j);
        EXPECT_EQ(a.entries[n].k, b.entries[n].k);
    }
}

TEST(IncoherenceTest, FlatSingleColumn) {
    const int d = 16;
    FactorMatrix u = FactorMatrix::Constant(d, 1, 1.0 / std::sqrt(double(d)));
    const IncoherenceStats s = incoherence_stats(u);
    EXPECT_NEAR(s.mu1, 1.0, 1e-12);
    EXPECT_NEAR(s.kappa, 1.0, 1e-12);
    EXPECT_EQ(s.mu2, 0.0);
    EXPECT_NEAR(s.lambda_min, 1.0, 1e-12);
}

TEST(IncoherenceTest, SpikeSingleColumn) {
    const int d = 9;
    FactorMatrix u = FactorMatrix::Zero(d, 1);
    u(0, 0) = 1.0;
    EXPECT_NEAR(incoherence_stats(u).mu1, double(d), 1e-12);
}

TEST(IncoherenceTest, OrthogonalEqualNormColumns) {
    FactorMatrix u = FactorMatrix::Zero(6, 2);
    u(0, 0) = 2.0;
    u(3, 1) = 2.0;
    const IncoherenceStats s = incoherence_stats(u);
    EXPECT_NEAR(s.mu2, 0.0, 1e-15);
    EXPECT_NEAR(s.kappa, 1.0, 1e-15);
    EXPECT_NEAR(s.lambda_max, 8.0, 1e-12);
}

TEST(IncoherenceTest, RangeInvariants) {
    const FactorMatrix u = gen_factors(30, 3, 29);
    const IncoherenceStats s = incoherence_stats(u);
    EXPECT_GE(s.mu1, 1.0);
    EXPECT_LE(s.mu1, 30.0);
    EXPECT_GE(s.kappa, 1.0);
    EXPECT_LE(s.lambda_min, s.lambda_max);
    EXPECT_GE(s.mu0, 0.0);
}

TEST(IncoherenceTest, ColumnPermutationInvariance) {
    const FactorMatrix u = gen_factors(15, 4, 31);
    FactorMatrix perm(15, 4);
    perm << u.col(2), u.col(0), u.col(3), u.col(1);
    const IncoherenceStats a = incoherence_stats(u);
    const IncoherenceStats b = incoherence_stats(perm);
    EXPECT_EQ(a.mu0, b.mu0);
    EXPECT_EQ(a.mu1, b.mu1);
    EXPECT_EQ(a.mu2, b.mu2);
    EXPECT_EQ(a.kappa, b.kappa);
    EXPECT_EQ(a.lambda_min, b.lambda_min);
}

TEST(IncoherenceTest, ScalingLaw) {
    const FactorMatrix u = gen_factors(12, 2, 37);
    const double c = 2.5;
    const IncoherenceStats a = incoherence_stats(u);
    const IncoherenceStats b = incoherence_stats(c * u);
    EXPECT_NEAR(a.mu0, b.mu0, 1e-9 * a.mu0);
    EXPECT_NEAR(a.mu1, b.mu1, 1e-12 * a.mu1);
    EXPECT_NEAR(a.mu2, b.mu2, 1e-9 * (1.0 + a.mu2));
    EXPECT_NEAR(a.kappa, b.kappa, 1e-12);
    EXPECT_NEAR(b.lambda_min, std::pow(c, 3) * a.lambda_min,
                1e-9 * b.lambda_min);
    EXPECT_NEAR(b.lambda_max, std::pow(c, 3) * a.lambda_max,
                1e-9 * b.lambda_max);
}

TEST(IncoherenceTest, ZeroColumnRejected) {
    FactorMatrix u = FactorMatrix::Zero(5, 2);
    u(0, 0) = 1.0;
    EXPECT_THROW(incoherence_stats(u), Error);
}

TEST(IncoherenceTest, Mu0MatchesDenseOracle) {
    const FactorMatrix u = gen_factors(7, 3, 41);
    const Tensor3 t = oracle::cp_compose(u);
    double inf = 0.0, fro = 0.0;
    for (double v : t.values) {
        inf = std::max(inf, std::abs(v));
        fro += v * v;
    }
    const IncoherenceStats s = incoherence_stats(u);
    EXPECT_NEAR(s.mu0, 343.0 * inf * inf / fro, 1e-9 * s.mu0);
}

TEST(ObservationIoTest, RoundTrip) {
    const FactorMatrix u = gen_factors(9, 2, 43);
    const ObservationSet obs = sample_observations(u, 0.5, 0.3, 43);
    TempDir dir;
    write_observations(obs, dir.str());
    const ObservationSet back = read_observations(dir.str());
    EXPECT_EQ(back.d, obs.d);
    EXPECT_EQ(back.p, obs.p);
    EXPECT_EQ(back.sigma, obs.sigma);
    EXPECT_EQ(back.seed, obs.seed);
    ASSERT_EQ(back.entries.size(), obs.entries.size());
    for (std::size_t n = 0; n < obs.entries.size(); ++n) {
        EXPECT_EQ(back.entries[n].i, obs.entries[n].i);
        EXPECT_EQ(back.entries[n].value, obs.entries[n].value);  // bit-exact
    }
}

TEST(ObservationIoTest, NonCanonicalTripleNamesLine) {
    const FactorMatrix u = gen_factors(6, 1, 47);
    const ObservationSet obs = sample_observations(u, 1.0, 0.0, 47);
    TempDir dir;
    write_observations(obs, dir.str());
    {
        std::ofstream out(dir.path() / "entries.csv", std::ios::app);
        out << "3,5,4,1.0\n";  // j > k
    }
    // Fix the manifest count so the triple check is what trips.
    {
        nlohmann::json manifest;
        std::ifstream in(dir.path() / "manifest.json");
        in >> manifest;
        manifest["num_canonical"] = obs.entries.size() + 1;
        std::ofstream out(dir.path() / "manifest.json");
        out << manifest.dump(2);
    }
    try {
        read_observations(dir.str());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, static_cast<int>(obs.entries.size()) + 2);
    }
}

TEST(ObservationIoTest, CountMismatchRejected) {
    const FactorMatrix u = gen_factors(5, 1, 53);
    const ObservationSet obs = sample_observations(u, 1.0, 0.0, 53);
    TempDir dir;
    write_observations(obs, dir.str());
    std::ofstream out(dir.path() / "entries.csv", std::ios::app);
    out << "0,1,2,0.5\n";
    out.close();
    EXPECT_THROW(read_observations(dir.str()), ParseError);
}

TEST(ObservationIoTest, MissingDirectoryIsIoError) {
    EXPECT_THROW(read_observations("/nonexistent/tenrec"), IoError);
}

TEST(FactorIoTest, RoundTripExact) {
    const FactorMatrix u = gen_factors(11, 3, 59);
    TempDir dir;
    const std::string path = (dir.path() / "U.csv").string();
    write_factors(u, path);
    const FactorMatrix back = read_factors(path);
    EXPECT_TRUE(back == u);
}

TEST(FactorIoTest, InconsistentRowWidthRejected) {
    TempDir dir;
    const std::string path = (dir.path() / "bad.csv").string();
    std::ofstream out(path);
    out << "1.0,2.0\n1.0\n";
    out.close();
    try {
        read_factors(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2);
    }
}

TEST(FactorIoTest, BadNumberRejected) {
    TempDir dir;
    const std::string path = (dir.path() / "bad.csv").string();
    std::ofstream out(path);
    out << "1.0,zap\n";
    out.close();
    EXPECT_THROW(read_factors(path), ParseError);
}

// sigma = 0, p = 1: reconstruction through cp_compose leaves zero residual.
TEST(SampleObservationsTest, NoiselessFullReconstruction) {
    const FactorMatrix u = gen_factors(6, 2, 61);
    const ObservationSet obs = sample_observations(u, 1.0, 0.0, 61);
    const SymTensor3 t = cp_compose(u);
    for (const ObsEntry& e : obs.entries)
        EXPECT_DOUBLE_EQ(t(e.i, e.j, e.k), e.value);
}

}  // namespace
}  // namespace tenrec
