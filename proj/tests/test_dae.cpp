#include "sem2d/dae.hpp"
#include "sem2d/error.hpp"
#include "sem2d/multishape.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sem;

namespace {

DAESystem decay()
{
    DAESystem s;
    s.dim = 1;
    s.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(1);
        f[0] = -y[0];
    };
    s.mass_mask = Vector::Ones(1);
    return s;
}

DAESystem oscillator()
{
    DAESystem s;
    s.dim = 2;
    s.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(2);
        f << y[1], -y[0];
    };
    s.mass_mask = Vector::Ones(2);
    return s;
}

StepperConfig tight()
{
    // local error control: global error is roughly (number of steps) * tol
    StepperConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-11;
    return cfg;
}

} // namespace

TEST(Dae, ExponentialDecay)
{
    StepperConfig cfg = tight();
    const Trajectory tr = integrate(decay(), Vector::Ones(1), 0.0, 1.0, cfg);
    ASSERT_EQ(tr.times.back(), 1.0);
    EXPECT_NEAR(tr.states.back()[0], std::exp(-1.0), 1e-7);
}

TEST(Dae, OutputTimesAreHitExactly)
{
    StepperConfig cfg = tight();
    cfg.output_times = {0.0, 0.25, 0.5, 0.75};
    const Trajectory tr = integrate(decay(), Vector::Ones(1), 0.0, 1.0, cfg);
    ASSERT_EQ(tr.times.size(), 5u);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        EXPECT_EQ(tr.times[k], 0.25 * static_cast<double>(k));
        EXPECT_NEAR(tr.states[k][0], std::exp(-tr.times[k]), 1e-7);
    }
}

TEST(Dae, ConsistentInitialisation)
{
    DAESystem s;
    s.dim = 2;
    s.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(2);
        f << -y[0], y[1] - y[0];
    };
    s.mass_mask = Vector(2);
    s.mass_mask << 1, 0;
    Vector y(2);
    y << 0.7, 3.0;
    const Vector c = consistent_init(s, 0.0, y);
    EXPECT_EQ(c[0], 0.7);
    EXPECT_NEAR(c[1], 0.7, 1e-12);
    const Vector again = consistent_init(s, 0.0, c);
    EXPECT_EQ(again[0], c[0]);
    EXPECT_EQ(again[1], c[1]);
}

TEST(Dae, ConsistentInitialisationFailureIsReported)
{
    DAESystem s;
    s.dim = 2;
    s.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(2);
        f << -y[0], y[1] * y[1] + 1.0; // no real root
    };
    s.mass_mask = Vector(2);
    s.mass_mask << 1, 0;
    try {
        (void)consistent_init(s, 0.0, Vector::Ones(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NumericFailure);
    }
}

TEST(Dae, HeatEquationWithDirichletRows)
{
    const int n = 16;
    const auto ms =
        MultiShape::build({Element::quad({{Vec2(0, 0), Vec2(0, 1), Vec2(1, 1), Vec2(1, 0)}, n, n})});
    const SpMat lap = ms.lap();
    const auto& bound = ms.bound();
    DAESystem s;
    s.dim = ms.size();
    s.mass_mask = Vector::Ones(s.dim);
    for (int b : bound) s.mass_mask[b] = 0.0;
    s.rhs = [&](double, const Vector& u, Vector& f) {
        f = lap * u;
        for (int b : bound) f[b] = u[b];
    };
    s.jacobian = [&](double, const Vector&, Matrix& j) {
        j = Matrix(lap);
        for (int b : bound) {
            j.row(b).setZero();
            j(b, b) = 1.0;
        }
    };
    const double pi = std::numbers::pi;
    const Vector u0 = ms.evaluate([pi](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    const Vector y0 = consistent_init(s, 0.0, u0);
    StepperConfig cfg;
    cfg.rtol = cfg.atol = 1e-10;
    const Trajectory tr = integrate(s, y0, 0.0, 0.1, cfg);
    const Vector exact = std::exp(-2 * pi * pi * 0.1) * u0;
    EXPECT_LT((tr.states.back() - exact).cwiseAbs().maxCoeff(), 1e-6);
    for (int b : bound) EXPECT_LE(std::abs(tr.states.back()[b]), 1e-8);
}

TEST(Dae, AllDifferentialMaskMatchesAugmentedSystem)
{
    // y' = -y alone vs. the same ODE carrying an algebraic copy z = y
    DAESystem aug;
    aug.dim = 2;
    aug.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(2);
        f << -y[0], y[1] - y[0];
    };
    aug.mass_mask = Vector(2);
    aug.mass_mask << 1, 0;
    StepperConfig cfg;
    const Trajectory a = integrate(decay(), Vector::Ones(1), 0.0, 2.0, cfg);
    const Trajectory b = integrate(aug, Vector::Ones(2), 0.0, 2.0, cfg);
    EXPECT_NEAR(a.states.back()[0], b.states.back()[0], 1e-8);
    EXPECT_NEAR(b.states.back()[1], b.states.back()[0], 1e-9);
}

TEST(Dae, FixedStepOrderIsTwo)
{
    std::vector<double> errs;
    for (double h : {0.02, 0.01, 0.005}) {
        StepperConfig cfg;
        cfg.adaptive = false;
        cfg.max_order = 2;
        cfg.dt_init = h;
        cfg.dt_min = 1e-6;
        Vector y0(2);
        y0 << 1.0, 0.0;
        const Trajectory tr = integrate(oscillator(), y0, 0.0, 1.0, cfg);
        Vector ex(2);
        ex << std::cos(1.0), -std::sin(1.0);
        errs.push_back((tr.states.back() - ex).norm());
    }
    EXPECT_GE(std::log2(errs[0] / errs[1]), 1.9);
    EXPECT_GE(std::log2(errs[1] / errs[2]), 1.9);
}

TEST(Dae, HigherOrderTakesFewerSteps)
{
    Vector y0(2);
    y0 << 1.0, 0.0;
    Vector ex(2);
    ex << std::cos(10.0), -std::sin(10.0);
    StepperConfig lo;
    lo.max_order = 2;
    StepperConfig hi;
    const Trajectory a = integrate(oscillator(), y0, 0.0, 10.0, lo);
    const Trajectory b = integrate(oscillator(), y0, 0.0, 10.0, hi);
    EXPECT_LT(3 * b.stats.steps, a.stats.steps);
    EXPECT_LT((b.states.back() - ex).norm(), 1e-6);
}

TEST(Dae, NonlinearConstraintHeldAtOutputs)
{
    DAESystem s;
    s.dim = 2;
    s.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(2);
        f << -y[0] + y[1], y[1] - std::sin(y[0]);
    };
    s.mass_mask = Vector(2);
    s.mass_mask << 1, 0;
    Vector y0(2);
    y0 << 1.0, 0.0;
    const Vector yc = consistent_init(s, 0.0, y0);
    StepperConfig cfg;
    for (int k = 1; k < 10; ++k) cfg.output_times.push_back(0.3 * k);
    const Trajectory tr = integrate(s, yc, 0.0, 3.0, cfg);
    for (const auto& y : tr.states) EXPECT_LE(std::abs(y[1] - std::sin(y[0])), 10 * cfg.atol);
}

TEST(Dae, Deterministic)
{
    StepperConfig cfg;
    cfg.output_times = {0.5, 1.0, 1.5};
    Vector y0(2);
    y0 << 1.0, 0.2;
    const Trajectory a = integrate(oscillator(), y0, 0.0, 2.0, cfg);
    const Trajectory b = integrate(oscillator(), y0, 0.0, 2.0, cfg);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_TRUE((a.states[k].array() == b.states[k].array()).all());
    EXPECT_EQ(a.stats.steps, b.stats.steps);
}

TEST(Dae, BlowUpGivesStepFailure)
{
    DAESystem s;
    s.dim = 1;
    s.rhs = [](double, const Vector& y, Vector& f) {
        f.resize(1);
        f[0] = y[0] * y[0];
    };
    s.mass_mask = Vector::Ones(1);
    StepperConfig cfg;
    cfg.dt_min = 1e-10;
    try {
        (void)integrate(s, Vector::Ones(1), 0.0, 2.0, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::StepFailure);
    }
}

TEST(Dae, DenseOutput)
{
    StepperConfig cfg = tight();
    cfg.keep_steps = true;
    Vector y0(2);
    y0 << 1.0, 0.0;
    const Trajectory tr = integrate(oscillator(), y0, 0.0, 2.0, cfg);
    for (double t : {0.0, 0.13, 0.77, 1.5, 2.0}) {
        const Vector y = tr.dense(t);
        EXPECT_NEAR(y[0], std::cos(t), 1e-6);
        EXPECT_NEAR(y[1], -std::sin(t), 1e-6);
    }
    EXPECT_THROW((void)tr.dense(2.5), Error);
}

TEST(Dae, RejectsBadConfiguration)
{
    StepperConfig cfg;
    cfg.rtol = 0.0;
    EXPECT_THROW((void)integrate(decay(), Vector::Ones(1), 0.0, 1.0, cfg), Error);
    DAESystem bad = decay();
    bad.mass_mask = Vector::Constant(1, 0.5);
    EXPECT_THROW((void)integrate(bad, Vector::Ones(1), 0.0, 1.0, StepperConfig{}), Error);
}
