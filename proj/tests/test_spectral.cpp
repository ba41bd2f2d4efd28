#include "sem2d/error.hpp"
#include "sem2d/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace sem;

namespace {

// Lagrange basis derivative via the product rule, independent of the
// barycentric formulas used by the library.
double lagrange_deriv(const Vector& x, int j, double t)
{
    double sum = 0.0;
    for (int m = 0; m < x.size(); ++m) {
        if (m == j) continue;
        double prod = 1.0 / (x[j] - x[m]);
        for (int k = 0; k < x.size(); ++k)
            if (k != j && k != m) prod *= (t - x[k]) / (x[j] - x[k]);
        sum += prod;
    }
    return sum;
}

} // namespace

TEST(NodeSet, SmallGridsHaveClosedFormValues)
{
    const auto n2 = NodeSet1D::cheb_lobatto(2);
    EXPECT_DOUBLE_EQ(n2.nodes()[0], 1.0);
    EXPECT_DOUBLE_EQ(n2.nodes()[1], -1.0);

    const auto n3 = NodeSet1D::cheb_lobatto(3);
    EXPECT_DOUBLE_EQ(n3.nodes()[1], 0.0);

    const auto n5 = NodeSet1D::cheb_lobatto(5);
    EXPECT_NEAR(n5.nodes()[1], std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(n5.nodes()[3], -std::sqrt(0.5), 1e-15);
    EXPECT_DOUBLE_EQ(n5.nodes()[2], 0.0);
}

TEST(NodeSet, WeightsAlternateWithHalvedEnds)
{
    const auto ns = NodeSet1D::cheb_lobatto(6);
    const std::vector<double> expect{0.5, -1.0, 1.0, -1.0, 1.0, -0.5};
    for (int k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(ns.bary_weights()[k], expect[k]);
}

TEST(NodeSet, RejectsTooFewNodes)
{
    try {
        (void)NodeSet1D::cheb_lobatto(1);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}

TEST(DiffMatrix, MatchesLagrangeDerivative)
{
    const auto ns = NodeSet1D::cheb_lobatto(9);
    const Matrix d = diff_matrix(ns, 1);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) EXPECT_NEAR(d(i, j), lagrange_deriv(ns.nodes(), j, ns.nodes()[i]), 1e-11);
}

TEST(DiffMatrix, ExactOnPolynomials)
{
    const auto ns = NodeSet1D::cheb_lobatto(6);
    const Vector& x = ns.nodes();
    const Matrix d1 = diff_matrix(ns, 1);
    const Matrix d2 = diff_matrix(ns, 2);
    const Vector ones = Vector::Ones(6);
    EXPECT_LT((d1 * ones).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((d1 * x - ones).cwiseAbs().maxCoeff(), 1e-13);
    const Vector x3 = x.array().cube();
    EXPECT_LT((d1 * x3 - 3.0 * x.array().square().matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((d2 * x3 - 6.0 * x).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT((d2 - d1 * d1).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DiffMatrix, RejectsThirdOrder)
{
    EXPECT_THROW((void)diff_matrix(NodeSet1D::cheb_lobatto(4), 3), Error);
}

TEST(ClenshawCurtis, SimpsonAtThreeNodes)
{
    const RowVector w = clenshaw_curtis_weights(NodeSet1D::cheb_lobatto(3));
    EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(w[1], 4.0 / 3.0, 1e-15);
    EXPECT_NEAR(w[2], 1.0 / 3.0, 1e-15);
}

TEST(ClenshawCurtis, IntegratesMonomials)
{
    for (int n : {5, 8, 13}) {
        const auto ns = NodeSet1D::cheb_lobatto(n);
        const RowVector w = clenshaw_curtis_weights(ns);
        for (int p = 0; p < n; ++p) {
            const double exact = (p % 2 == 0) ? 2.0 / (p + 1) : 0.0;
            const double approx = w.dot(ns.nodes().array().pow(p).matrix().transpose());
            EXPECT_NEAR(approx, exact, 1e-13) << "n=" << n << " p=" << p;
        }
    }
}

TEST(ClenshawCurtis, ConvergesOnSmoothFunction)
{
    const auto ns = NodeSet1D::cheb_lobatto(20);
    const RowVector w = clenshaw_curtis_weights(ns);
    const Vector f = ns.nodes().array().exp();
    EXPECT_NEAR(w.dot(f.transpose()), std::exp(1.0) - std::exp(-1.0), 1e-14);
}

TEST(Interp1D, ReproducesDegreeFivePolynomial)
{
    const auto ns = NodeSet1D::cheb_lobatto(8);
    Vector t(50);
    for (int k = 0; k < 50; ++k) t[k] = -1.0 + 2.0 * k / 49.0;
    const Matrix p = interp_matrix_1d(ns, t);
    const Vector f = ns.nodes().array().pow(5);
    const Vector exact = t.array().pow(5);
    EXPECT_LT((p * f - exact).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((p.rowwise().sum() - Vector::Ones(50)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Interp1D, NodeHitGivesUnitRow)
{
    const auto ns = NodeSet1D::cheb_lobatto(7);
    const double t = ns.nodes()[3];
    const Matrix p = interp_matrix_1d(ns, std::span<const double>(&t, 1));
    for (int j = 0; j < 7; ++j) EXPECT_EQ(p(0, j), j == 3 ? 1.0 : 0.0);
}

TEST(Interp1D, ExtrapolationFlag)
{
    const std::vector<double> inside{-1.0, 0.3, 1.0};
    const std::vector<double> outside{0.0, 1.2};
    EXPECT_FALSE(is_extrapolating(inside));
    EXPECT_TRUE(is_extrapolating(outside));
}

TEST(Tensor, OrderingConvention)
{
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    const Matrix id = Matrix::Identity(3, 3);
    const Matrix k = tensor2d(a, id);
    // (A (x) I) acts on the slow index: entry ((i1,i2),(j1,j2)) = A(i1,j1) delta(i2,j2)
    for (int i1 = 0; i1 < 2; ++i1)
        for (int i2 = 0; i2 < 3; ++i2)
            for (int j1 = 0; j1 < 2; ++j1)
                for (int j2 = 0; j2 < 3; ++j2)
                    EXPECT_EQ(k(i1 * 3 + i2, j1 * 3 + j2), i2 == j2 ? a(i1, j1) : 0.0);
    const SpMat ks = tensor2d_sparse(a, id);
    EXPECT_LT((Matrix(ks) - k).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
}

TEST(Tensor, TwoDimensionalDerivatives)
{
    const int n1 = 6, n2 = 5;
    const auto s1 = NodeSet1D::cheb_lobatto(n1);
    const auto s2 = NodeSet1D::cheb_lobatto(n2);
    const Matrix d1 = tensor2d(diff_matrix(s1, 1), Matrix::Identity(n2, n2));
    const Matrix d2 = tensor2d(Matrix::Identity(n1, n1), diff_matrix(s2, 1));
    Vector f(n1 * n2), f1(n1 * n2), f2(n1 * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const double x = s1.nodes()[i], y = s2.nodes()[j];
            f[i * n2 + j] = x * x * x * y * y;
            f1[i * n2 + j] = 3 * x * x * y * y;
            f2[i * n2 + j] = 2 * x * x * x * y;
        }
    EXPECT_LT((d1 * f - f1).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((d2 * f - f2).cwiseAbs().maxCoeff(), 1e-12);
}
