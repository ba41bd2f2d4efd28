#include "oracles.hpp"

#include "sem2d/error.hpp"
#include "sem2d/steady.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

using namespace sem;

TEST(ErrorMeasure, TrivialCases)
{
    const auto ms = MultiShape::build({Element::quad({{Vec2(0, 0), Vec2(0, 1), Vec2(1, 1), Vec2(1, 0)}, 6, 6})});
    const Vector f = ms.evaluate([](double x, double y) { return x + y; });
    EXPECT_EQ(error_measure(f, f, ms), 0.0);
    const Vector zero = Vector::Zero(ms.size());
    const Vector c = Vector::Constant(ms.size(), 0.5);
    EXPECT_NEAR(error_measure(c, zero, ms), 0.5 / 1e-10, 1e-2);
    const Vector g = f + 0.01 * c;
    EXPECT_NEAR(error_measure(f + 0.02 * c, f, ms), 2.0 * error_measure(g, f, ms), 1e-14);
    EXPECT_NEAR(error_measure_abs(1.5, 1.0), 0.5 / (1.0 + 1e-10), 1e-15);
    Vector a(3), b(3);
    a << 1, 2, 3;
    b << 1, 2, 4;
    EXPECT_NEAR(error_measure_linf(a, b), 1.0 / (4.0 + 1e-10), 1e-15);
}

TEST(TestFunctions, G1DerivativesMatchFiniteDifferences)
{
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    const double h = 1e-4;
    for (int k = 0; k < 20; ++k) {
        const double x = u(gen), y = u(gen);
        const Vec2 g = testfn::grad_g1(x, y);
        const double fx = (testfn::g1(x + h, y) - testfn::g1(x - h, y)) / (2 * h);
        const double fy = (testfn::g1(x, y + h) - testfn::g1(x, y - h)) / (2 * h);
        const double lap = (testfn::g1(x + h, y) + testfn::g1(x - h, y) + testfn::g1(x, y + h) +
                            testfn::g1(x, y - h) - 4 * testfn::g1(x, y)) /
                           (h * h);
        EXPECT_NEAR(g[0], fx, 1e-7);
        EXPECT_NEAR(g[1], fy, 1e-7);
        EXPECT_NEAR(testfn::lap_g1(x, y), lap, 1e-5);
    }
}

TEST(TestFunctions, PoissonRightHandSide)
{
    const double h = 1e-4;
    for (double x : {-0.5, 0.3, 1.7})
        for (double y : {0.1, 1.2}) {
            const double lap = (testfn::poisson_u(x + h, y) + testfn::poisson_u(x - h, y) +
                                testfn::poisson_u(x, y + h) + testfn::poisson_u(x, y - h) -
                                4 * testfn::poisson_u(x, y)) /
                               (h * h);
            EXPECT_NEAR(testfn::poisson_f(x, y), lap, 1e-6);
        }
}

TEST(Quadrature, GaussLegendreAgreesWithOracle)
{
    Vector x, w;
    gauss_legendre(12, -1.0, 2.0, x, w);
    const auto r = oracle::gauss_legendre(12, -1.0, 2.0);
    double s1 = 0, s2 = 0;
    for (int k = 0; k < 12; ++k) {
        s1 += w[k] * std::pow(x[k], 9);
        s2 += r.w[k] * std::pow(r.x[k], 9);
    }
    const double exact = (std::pow(2.0, 10) - 1.0) / 10.0;
    EXPECT_NEAR(s1, exact, 1e-11);
    EXPECT_NEAR(s2, exact, 1e-11);
}

TEST(Quadrature, ExactG2IntegralsMatchBruteForce)
{
    EXPECT_NEAR(exact_int_g2("a"), oracle::box_integral(testfn::g2, 0, 2, 0, 2, 80), 1e-14);
    EXPECT_NEAR(exact_int_g2("h"),
                oracle::wedge_integral(testfn::g2, 1, 2, 0, std::numbers::pi / 2, 0, 0, 80), 1e-14);
}

TEST(Poisson, ConstantsAreExact)
{
    for (const char* c : {"a", "c", "d", "g", "h", "fig1"}) {
        const auto ms = make_validation_multishape(c, 16);
        const Vector one = Vector::Ones(ms.size());
        EXPECT_LT((solve_poisson(ms, Vector::Zero(ms.size()), one).array() - 1.0).abs().maxCoeff(), 1e-11) << c;
    }
}

TEST(Poisson, LinearFieldsAreExactOnBoxes)
{
    for (const char* c : {"a", "b", "c", "d"}) {
        const auto ms = make_validation_multishape(c, 16);
        const Vector lin = ms.evaluate([](double x, double) { return x; });
        EXPECT_LT((solve_poisson(ms, Vector::Zero(ms.size()), lin) - lin).cwiseAbs().maxCoeff(), 1e-10) << c;
    }
}

TEST(Poisson, LinearFieldsConvergeOnCurvedCases)
{
    // x1 is not a polynomial in (r, theta), so wedges only resolve it spectrally
    for (const char* c : {"g", "h", "fig1"}) {
        const auto ms = make_validation_multishape(c, 40);
        const Vector lin = ms.evaluate([](double x, double) { return x; });
        EXPECT_LT((solve_poisson(ms, Vector::Zero(ms.size()), lin) - lin).cwiseAbs().maxCoeff(), 1e-8) << c;
    }
}

TEST(Poisson, BoundaryValuesInBoundOrder)
{
    const auto ms = make_validation_multishape("b", 12);
    const Vector lin = ms.evaluate([](double x, double y) { return 2 * x - y; });
    Vector gb(static_cast<int>(ms.bound().size()));
    for (std::size_t b = 0; b < ms.bound().size(); ++b) gb[static_cast<int>(b)] = lin[ms.bound()[b]];
    EXPECT_LT((solve_poisson(ms, Vector::Zero(ms.size()), gb) - lin).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Poisson, DiscreteMaximumPrinciple)
{
    for (const char* c : {"d", "h"}) {
        const auto ms = make_validation_multishape(c, 24);
        const Vector g = ms.evaluate([](double x, double y) { return std::cos(2 * x * y) + 0.3 * x; });
        Vector gb(static_cast<int>(ms.bound().size()));
        for (std::size_t b = 0; b < ms.bound().size(); ++b) gb[static_cast<int>(b)] = g[ms.bound()[b]];
        const Vector rho = solve_poisson(ms, Vector::Zero(ms.size()), g);
        EXPECT_LE(rho.maxCoeff(), gb.maxCoeff() + 1e-8) << c;
        EXPECT_GE(rho.minCoeff(), gb.minCoeff() - 1e-8) << c;
    }
}

TEST(Poisson, ContinuousAcrossQuadWedgeInterface)
{
    const auto ms = make_validation_multishape("fig1", 32);
    const Vector u = ms.evaluate(testfn::poisson_u);
    const Vector rho = solve_poisson(ms, ms.evaluate(testfn::poisson_f), u);
    ASSERT_EQ(ms.intersections().size(), 1u);
    const auto& inter = ms.intersections()[0];
    for (std::size_t a = 0; a < inter.nodes_i.size(); ++a)
        EXPECT_LT(std::abs(rho[inter.nodes_i[a]] - rho[inter.nodes_j[a]]), 1e-10);
    EXPECT_LT(error_measure(rho, u, ms), 1e-4);
}

TEST(Poisson, RejectsBadLengths)
{
    const auto ms = make_validation_multishape("a", 6);
    EXPECT_THROW((void)solve_poisson(ms, Vector::Zero(3), Vector::Zero(ms.size())), Error);
}

TEST(Validation, UnknownCaseIsConfigError)
{
    try {
        (void)make_validation_multishape("z", 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
}

TEST(Validation, PointBudgetIsSharedPerDirection)
{
    const auto c = make_validation_multishape("c", 30);
    for (const auto& e : c.elements()) {
        EXPECT_EQ(e.n1(), 10);
        EXPECT_EQ(e.n2(), 30);
    }
    const auto d = make_validation_multishape("d", 30);
    for (const auto& e : d.elements()) {
        EXPECT_EQ(e.n1(), 15);
        EXPECT_EQ(e.n2(), 15);
    }
    const auto h = make_validation_multishape("h", 30);
    for (const auto& e : h.elements()) EXPECT_EQ(e.n2(), 10);
}

TEST(Validation, ThreeWaySplitConvergesMoreSlowly)
{
    for (const char* op : {"lap", "grad", "interp"})
        EXPECT_GT(validation_error("c", op, 22), validation_error("d", op, 22)) << op;
}

TEST(Validation, ErrorsDecreaseOnEveryCase)
{
    for (const char* c : {"a", "b", "c", "d", "e", "f", "g", "h"})
        for (const char* op : {"lap", "grad", "div", "interp", "int", "conv", "poisson"})
            EXPECT_LT(validation_error(c, op, 14), validation_error(c, op, 8)) << c << " " << op;
}

TEST(Validation, SuiteWritesCsv)
{
    ValidationOptions opt;
    opt.cases = {"a"};
    opt.operators = {"int"};
    opt.n_sigma = {6, 10};
    const auto rows = run_validation_suite(opt);
    ASSERT_EQ(rows.size(), 2u);
    const auto path = std::filesystem::temp_directory_path() / "sem2d_validation_test.csv";
    write_validation_csv(path, rows);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "case,operator,N_Sigma,error,wall_ms");
}
