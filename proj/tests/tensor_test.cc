#include "tenrec/tensor.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tenrec/rng.hpp"

namespace tenrec {
namespace {

double rel_err(double got, double want) {
    const double scale = std::max({std::abs(got), std::abs(want), 1e-300});
    return std::abs(got - want) / scale;
}

TEST(Outer3Test, BasisCase) {
    Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
    const Tensor3 t = outer3(e1, e1, e1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                EXPECT_DOUBLE_EQ(t(i, j, k), i == 0 && j == 0 && k == 0 ? 1.0 : 0.0);
}

TEST(Outer3Test, HandExpansion) {
    Eigen::VectorXd u(2), v(2), w(2);
    u << 1, 2;
    v << 1, 0;
    w << 0, 1;
    const Tensor3 t = outer3(u, v, w);
    EXPECT_DOUBLE_EQ(t(0, 0, 1), 1.0);
    EXPECT_DOUBLE_EQ(t(1, 0, 1), 2.0);
    double sum_abs = 0.0;
    for (double x : t.values) sum_abs += std::abs(x);
    EXPECT_DOUBLE_EQ(sum_abs, 3.0);
}

TEST(Outer3Test, MatchesTripleLoop) {
    Rng rng(42);
    const Eigen::VectorXd u = rng.gaussian_vector(4);
    const Eigen::VectorXd v = rng.gaussian_vector(4);
    const Eigen::VectorXd w = rng.gaussian_vector(4);
    const Tensor3 got = outer3(u, v, w);
    const Tensor3 want = oracle::outer3(u, v, w);
    for (std::size_t n = 0; n < got.values.size(); ++n)
        EXPECT_LE(rel_err(got.values[n], want.values[n]), 1e-12);
}

TEST(CpComposeTest, SingleColumn) {
    FactorMatrix u(2, 1);
    u << 1, 0;
    const SymTensor3 t = cp_compose(u);
    EXPECT_DOUBLE_EQ(t(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(frob_norm(t.data), 1.0);
}

TEST(CpComposeTest, TwoIdenticalColumnsDouble) {
    Rng rng(7);
    const Eigen::VectorXd u = rng.gaussian_vector(5);
    FactorMatrix two(5, 2);
    two << u, u;
    const SymTensor3 got = cp_compose(two);
    const Tensor3 want = oracle::outer3(u, u, u);
    for (std::size_t n = 0; n < want.values.size(); ++n)
        EXPECT_NEAR(got.data.values[n], 2.0 * want.values[n], 1e-12);
}

TEST(CpComposeTest, MatchesTripleLoop) {
    Rng rng(3);
    const FactorMatrix u = rng.gaussian_matrix(5, 3);
    const SymTensor3 got = cp_compose(u);
    const Tensor3 want = oracle::cp_compose(u);
    for (std::size_t n = 0; n < want.values.size(); ++n)
        EXPECT_LE(rel_err(got.data.values[n], want.values[n]), 1e-12);
}

TEST(CpComposeTest, ExactSixWaySymmetry) {
    for (int d = 2; d <= 8; d += 3) {
        Rng rng(d);
        const SymTensor3 t = cp_compose(rng.gaussian_matrix(d, 2));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    const double v = t(i, j, k);
                    EXPECT_EQ(v, t(i, k, j));
                    EXPECT_EQ(v, t(j, i, k));
                    EXPECT_EQ(v, t(j, k, i));
                    EXPECT_EQ(v, t(k, i, j));
                    EXPECT_EQ(v, t(k, j, i));
                }
    }
}

TEST(ModeProductTest, RankOneFactorization) {
    Rng rng(11);
    const Eigen::VectorXd a = rng.gaussian_vector(3);
    const Eigen::VectorXd b = rng.gaussian_vector(4);
    const Eigen::VectorXd c = rng.gaussian_vector(5);
    const Eigen::VectorXd u = rng.gaussian_vector(5);
    const Eigen::MatrixXd got = mode_product(outer3(a, b, c), 3, u);
    const Eigen::MatrixXd want = c.dot(u) * a * b.transpose();
    EXPECT_LE((got - want).norm(), 1e-12 * want.norm());
}

TEST(ModeProductTest, ZeroVectorGivesZero) {
    Rng rng(12);
    const Tensor3 t = oracle::outer3(rng.gaussian_vector(3),
                                     rng.gaussian_vector(3),
                                     rng.gaussian_vector(3));
    EXPECT_EQ(mode_product(t, 3, Eigen::VectorXd::Zero(3)).norm(), 0.0);
}

TEST(ModeProductTest, AllAxesMatchTripleLoop) {
    Rng rng(13);
    Tensor3 t(3, 4, 5);
    for (double& v : t.values) v = rng.gaussian();

    const Eigen::VectorXd u3 = rng.gaussian_vector(5);
    const Eigen::MatrixXd got3 = mode_product(t, 3, u3);
    EXPECT_LE((got3 - oracle::mode3_product(t, u3)).norm(), 1e-12);

    const Eigen::VectorXd u1 = rng.gaussian_vector(3);
    const Eigen::MatrixXd got1 = mode_product(t, 1, u1);
    Eigen::MatrixXd want1 = Eigen::MatrixXd::Zero(4, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 5; ++k) want1(j, k) += t(i, j, k) * u1[i];
    EXPECT_LE((got1 - want1).norm(), 1e-12);

    const Eigen::VectorXd u2 = rng.gaussian_vector(4);
    const Eigen::MatrixXd got2 = mode_product(t, 2, u2);
    Eigen::MatrixXd want2 = Eigen::MatrixXd::Zero(3, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 5; ++k) want2(i, k) += t(i, j, k) * u2[j];
    EXPECT_LE((got2 - want2).norm(), 1e-12);
}

TEST(ModeProductTest, DimensionMismatchThrows) {
    Tensor3 t(3, 4, 5);
    EXPECT_THROW(mode_product(t, 3, Eigen::VectorXd::Zero(4)), DimensionError);
    EXPECT_THROW(mode_product(t, 0, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST(ModeProduct2Test, RankOneClosedForm) {
    Rng rng(21);
    const Eigen::VectorXd a = rng.gaussian_vector(4);
    const Eigen::VectorXd b = rng.gaussian_vector(4);
    const Eigen::VectorXd c = rng.gaussian_vector(4);
    const Eigen::VectorXd u = rng.gaussian_vector(4);
    const Eigen::VectorXd v = rng.gaussian_vector(4);
    const Eigen::VectorXd got = mode_product2(outer3(a, b, c), 1, 2, u, v);
    const Eigen::VectorXd want = a.dot(u) * b.dot(v) * c;
    EXPECT_LE((got - want).norm(), 1e-12 * want.norm());
}

TEST(ModeProduct2Test, SelectorsPickFiber) {
    Rng rng(22);
    Tensor3 t(3, 3, 3);
    for (double& v : t.values) v = rng.gaussian();
    const Eigen::VectorXd got = mode_product2(t, 1, 2, Eigen::VectorXd::Unit(3, 1),
                                              Eigen::VectorXd::Unit(3, 2));
    for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(got[k], t(1, 2, k));
}

TEST(ModeProduct2Test, AllOrderedPairsMatchTripleLoop) {
    Rng rng(23);
    Tensor3 t(4, 4, 4);
    for (double& v : t.values) v = rng.gaussian();
    const Eigen::VectorXd u = rng.gaussian_vector(4);
    const Eigen::VectorXd v = rng.gaussian_vector(4);
    const int axes[6][2] = {{1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3}, {3, 2}};
    for (const auto& ab : axes) {
        const Eigen::VectorXd got = mode_product2(t, ab[0], ab[1], u, v);
        Eigen::VectorXd want = Eigen::VectorXd::Zero(4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) {
                    const int idx[3] = {i, j, k};
                    const int free_axis = 6 - ab[0] - ab[1];
                    want[idx[free_axis - 1]] +=
                        t(i, j, k) * u[idx[ab[0] - 1]] * v[idx[ab[1] - 1]];
                }
        EXPECT_LE((got - want).norm(), 1e-12 * (1.0 + want.norm()));
    }
}

TEST(SeqProductTest, RankOneReducesToModeProduct2) {
    Rng rng(31);
    Tensor3 t(3, 4, 5);
    for (double& v : t.values) v = rng.gaussian();
    const FactorMatrix u = rng.gaussian_matrix(3, 1);
    const FactorMatrix v = rng.gaussian_matrix(4, 1);
    const Eigen::MatrixXd got = seq_product(t, u, v);
    EXPECT_EQ(got.cols(), 1);
    EXPECT_EQ((got.col(0) - mode_product2(t, 1, 2, u.col(0), v.col(0))).norm(),
              0.0);
}

TEST(SeqProductTest, SymmetricRankDecompositionEntries) {
    // T = sum_i l_i q_i^(x)3 with orthonormal q_i: column i of
    // seq_product(T, Q, Q) equals l_i q_i.
    Eigen::MatrixXd q(3, 2);
    q << 1, 0, 0, 1, 0, 0;
    Eigen::VectorXd l(2);
    l << 2.0, -0.5;
    FactorMatrix u(3, 2);
    for (int c = 0; c < 2; ++c) u.col(c) = std::cbrt(l[c]) * q.col(c);
    const SymTensor3 t = cp_compose(u);
    const Eigen::MatrixXd got = seq_product(t.data, q, q);
    for (int c = 0; c < 2; ++c)
        EXPECT_LE((got.col(c) - l[c] * q.col(c)).norm(), 1e-12);
}

TEST(SeqProductTest, ZeroTensorGivesZero) {
    Tensor3 t(3, 3, 3);
    Rng rng(32);
    const FactorMatrix u = rng.gaussian_matrix(3, 2);
    EXPECT_EQ(seq_product(t, u, u).norm(), 0.0);
}

TEST(Unfold1Test, RankOneKronecker) {
    Rng rng(41);
    const Eigen::VectorXd u = rng.gaussian_vector(3);
    const Eigen::VectorXd v = rng.gaussian_vector(4);
    const Eigen::VectorXd w = rng.gaussian_vector(5);
    const Eigen::MatrixXd a = unfold1(outer3(u, v, w));
    Eigen::VectorXd vw(20);
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 5; ++k) vw[j * 5 + k] = v[j] * w[k];
    EXPECT_LE((a - u * vw.transpose()).norm(), 1e-12 * a.norm());
}

TEST(Unfold1Test, RoundTripBijection) {
    Rng rng(42);
    Tensor3 t(3, 4, 5);
    for (double& v : t.values) v = rng.gaussian();
    const Eigen::MatrixXd a = unfold1(t);
    Tensor3 back(3, 4, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 5; ++k) back(i, j, k) = a(i, j * 5 + k);
    EXPECT_EQ(back.values, t.values);
}

TEST(Unfold1Test, InnerProductIdentity) {
    Rng rng(43);
    Tensor3 t(4, 4, 4);
    for (double& v : t.values) v = rng.gaussian();
    const Eigen::VectorXd u = rng.gaussian_vector(4);
    const Eigen::VectorXd v = rng.gaussian_vector(4);
    const Eigen::VectorXd w = rng.gaussian_vector(4);
    Eigen::VectorXd vw(16);
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) vw[j * 4 + k] = v[j] * w[k];
    const double got = u.transpose() * unfold1(t) * vw;
    const double want = oracle::inner(t, oracle::outer3(u, v, w));
    EXPECT_LE(rel_err(got, want), 1e-12);
}

TEST(NormsTest, InnerSelfIsFrobSquared) {
    Rng rng(51);
    Tensor3 t(3, 4, 2);
    for (double& v : t.values) v = rng.gaussian();
    EXPECT_LE(rel_err(inner(t, t), frob_norm(t) * frob_norm(t)), 1e-12);
}

TEST(NormsTest, RankOneInnerIsDotCubed) {
    Rng rng(52);
    const Eigen::VectorXd u = rng.gaussian_vector(6);
    const Eigen::VectorXd v = rng.gaussian_vector(6);
    const double got = inner(outer3(u, u, u), outer3(v, v, v));
    EXPECT_LE(rel_err(got, std::pow(u.dot(v), 3)), 1e-12);
}

TEST(NormsTest, InfNormBasis) {
    Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
    EXPECT_DOUBLE_EQ(inf_norm(outer3(e1, e1, e1)), 1.0);
}

TEST(NormsTest, DimensionMismatchThrows) {
    Tensor3 a(2, 2, 2), b(2, 2, 3);
    EXPECT_THROW(inner(a, b), DimensionError);
}

TEST(PermutationHelperTest, OrbitSizes) {
    EXPECT_EQ(orbit_size(0, 0, 0), 1);
    EXPECT_EQ(orbit_size(0, 0, 1), 3);
    EXPECT_EQ(orbit_size(0, 1, 1), 3);
    EXPECT_EQ(orbit_size(0, 1, 2), 6);
    int count = 0;
    for_each_permutation(1, 2, 3, [&](int, int, int) { ++count; });
    EXPECT_EQ(count, 6);
    count = 0;
    for_each_permutation(2, 2, 2, [&](int, int, int) { ++count; });
    EXPECT_EQ(count, 1);
}

// Operations must not mutate their inputs.
TEST(PurityTest, InputsUntouched) {
    Rng rng(61);
    Tensor3 t(3, 3, 3);
    for (double& v : t.values) v = rng.gaussian();
    const std::vector<double> before = t.values;
    const Eigen::VectorXd u = rng.gaussian_vector(3);
    mode_product(t, 2, u);
    mode_product2(t, 1, 3, u, u);
    unfold1(t);
    frob_norm(t);
    EXPECT_EQ(t.values, before);
}

}  // namespace
}  // namespace tenrec
