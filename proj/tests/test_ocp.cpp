#include "sem2d/error.hpp"
#include "sem2d/ocp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sem;

namespace {

MultiShape unit_box(int n)
{
    return MultiShape::build({Element::quad({{Vec2(0, 0), Vec2(0, 1), Vec2(1, 1), Vec2(1, 0)}, n, n})});
}

SpeciesParams one_species(const MultiShape& ms, double kappa, double sigma, const Vector& v = {})
{
    SpeciesParams p;
    p.n_s = 1;
    p.kappa = Matrix::Constant(1, 1, kappa);
    p.sigma = Matrix::Constant(1, 1, sigma);
    p.v_ext = {v.size() ? v : Vector(Vector::Zero(ms.size()))};
    p.c_mass = {1.0};
    return p;
}

StepperConfig tight()
{
    StepperConfig s;
    s.rtol = 1e-11;
    s.atol = 1e-11;
    return s;
}

std::vector<Vector> constant_flow(const MultiShape& ms, int n, double w1, double w2)
{
    Vector w(2 * ms.size());
    w << Vector::Constant(ms.size(), w1), Vector::Constant(ms.size(), w2);
    return std::vector<Vector>(n, w);
}

// Small single-species problem whose targets come from a forward run with a
// background flow, so control can reduce the misfit. The data satisfy the
// no-flux condition at t = 0 (flows tangential to the walls, initial profile
// with zero normal derivative), which keeps the solution free of an initial
// boundary layer.
Vector wall_tangential(const MultiShape& ms, double a1, double a2)
{
    Vector w(2 * ms.size());
    w << ms.evaluate([a1](double x, double) { return a1 * x * (1 - x); }),
        ms.evaluate([a2](double, double y) { return a2 * y * (1 - y); });
    return w;
}

struct Tiny {
    MultiShape ms;
    DDFTModel model;
    OCPConfig cfg;

    explicit Tiny(double beta, int n = 6) : ms(unit_box(n)), model(ms, one_species(ms, 0.5, 0.5))
    {
        cfg.beta = beta;
        cfg.t_final = 1.0;
        cfg.time_nodes = 4;
        cfg.stepper = tight();
        cfg.rho0 = model.normalize_ic({ms.evaluate([](double x, double y) {
            return 1.0 + 0.3 * std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y);
        })});
        const TimeGrid grid(cfg.time_nodes, cfg.t_final);
        cfg.targets = state_solve(model, grid, std::vector<Vector>(cfg.time_nodes, wall_tangential(ms, 1.6, -0.8)),
                                  cfg.rho0, cfg.stepper)
                          .rho;
    }
};

} // namespace

TEST(TimeGrid, NodesWeightsAndInterpolation)
{
    const TimeGrid g(6, 5.0);
    EXPECT_EQ(g.nodes()[0], 0.0);
    EXPECT_EQ(g.nodes()[5], 5.0);
    for (int k = 1; k < 6; ++k) EXPECT_GT(g.nodes()[k], g.nodes()[k - 1]);
    EXPECT_NEAR(g.weights().sum(), 5.0, 1e-13);
    // Quadrature of t^3 on [0, 5] is exact.
    EXPECT_NEAR(g.weights().dot(g.nodes().array().cube().matrix()), std::pow(5.0, 4) / 4.0, 1e-11);
    std::vector<Vector> vals;
    for (int k = 0; k < 6; ++k) vals.push_back(Vector::Constant(1, std::pow(g.nodes()[k], 5) - g.nodes()[k]));
    EXPECT_NEAR(g.interpolate(vals, 1.3)[0], std::pow(1.3, 5) - 1.3, 1e-10);
    const Vector l = g.basis(g.nodes()[2]);
    EXPECT_EQ(l[2], 1.0);
    EXPECT_EQ(l.sum(), 1.0);
}

TEST(OcpCost, ZeroAtTargetsAndQuadraticInControl)
{
    const auto ms = unit_box(5);
    const DDFTModel model(ms, one_species(ms, 0.0, 1.0));
    const TimeGrid g(4, 2.0);
    const std::vector<Vector> rho(4, Vector::Ones(ms.size()));
    const auto zero = constant_flow(ms, 4, 0.0, 0.0);
    EXPECT_EQ(ocp_cost(model, g, rho, rho, zero, 0.1), 0.0);

    // Uniform misfit c on the unit box over [0, 2]: J = 1/2 * 2 * c^2.
    const std::vector<Vector> shifted(4, Vector::Constant(ms.size(), 1.5));
    EXPECT_NEAR(ocp_cost(model, g, shifted, rho, zero, 0.1), 0.25, 1e-13);

    const auto w1 = constant_flow(ms, 4, 0.3, -0.4);
    const auto w2 = constant_flow(ms, 4, 0.6, -0.8);
    const double c1 = ocp_cost(model, g, rho, rho, w1, 0.1);
    EXPECT_NEAR(c1, 0.5 * 0.1 * 2.0 * 0.25, 1e-13);
    EXPECT_NEAR(ocp_cost(model, g, rho, rho, w2, 0.1), 4.0 * c1, 1e-13);
}

TEST(GradientEquation, SingleNodeArithmetic)
{
    // q = 3 x1 - x2 has gradient (3, -1) at every node; rho = 2, beta = 0.5.
    const auto ms = unit_box(4);
    const DDFTModel model(ms, one_species(ms, 0.0, 1.0));
    const Vector q = ms.evaluate([](double x, double y) { return 3.0 * x - y; });
    const auto w = gradient_equation(model, {Vector::Constant(ms.size(), 2.0)}, {q}, 0.5);
    for (int i = 0; i < ms.size(); ++i) {
        EXPECT_NEAR(w[0][i], -12.0, 1e-12);
        EXPECT_NEAR(w[0][ms.size() + i], 4.0, 1e-12);
    }
    const auto w2 = gradient_equation(model, {Vector::Constant(ms.size(), 2.0)}, {q}, 1.0);
    EXPECT_NEAR((w2[0] - 0.5 * w[0]).norm(), 0.0, 1e-12);
    const auto w0 = gradient_equation(model, {Vector::Constant(ms.size(), 2.0)}, {Vector::Zero(ms.size())}, 0.5);
    EXPECT_EQ(w0[0].norm(), 0.0);
}

TEST(StateSolve, ZeroControlMatchesDynamics)
{
    Tiny p(1e-2);
    const TimeGrid g(p.cfg.time_nodes, p.cfg.t_final);
    const auto st = state_solve(p.model, g, constant_flow(p.ms, 4, 0.0, 0.0), p.cfg.rho0, p.cfg.stepper);
    StepperConfig s = p.cfg.stepper;
    const auto dyn = simulate_dynamics(p.model, {p.cfg.rho0}, 0.0, 1.0, s);
    EXPECT_LT((st.rho.back() - dyn.trajectory.states.back()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(StateSolve, ControlKeepsMass)
{
    // Initial data compatible with the no-flux condition for this flow.
    const auto ms = unit_box(12);
    const DDFTModel model(ms, one_species(ms, 0.0, 1.0, ms.evaluate([](double x, double) { return 0.5 * x; })));
    const TimeGrid g(4, 1.0);
    const Vector rho0 = model.normalize_ic({ms.evaluate([](double x, double y) {
        return std::exp(-0.3 * x + 0.1 * y) * (1.0 + 0.3 * std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y));
    })});
    const auto sc = state_solve(model, g, constant_flow(ms, 4, 0.2, 0.1), rho0, tight());
    for (const Vector& r : sc.rho) EXPECT_NEAR(model.masses(r)[0], 1.0, 1e-9);
}

TEST(AdjointSolve, VanishesWhenTargetsAreMet)
{
    const auto ms = unit_box(6);
    const DDFTModel model(ms, one_species(ms, 0.0, 1.0));
    const TimeGrid g(5, 1.0);
    const Vector rho0 = model.normalize_ic({ms.evaluate([](double x, double) { return 1.0 + 0.5 * x; })});
    const auto w = constant_flow(ms, 5, 0.0, 0.0);
    const auto st = state_solve(model, g, w, rho0, tight());
    const auto adj = adjoint_solve(model, g, st, w, st.rho, tight());
    for (const Vector& q : adj.q) EXPECT_EQ(q.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdjointSolve, FinalConditionIsExact)
{
    Tiny p(1e-2);
    const TimeGrid g(p.cfg.time_nodes, p.cfg.t_final);
    const auto w = constant_flow(p.ms, 4, 0.1, 0.0);
    const auto st = state_solve(p.model, g, w, p.cfg.rho0, p.cfg.stepper);
    const auto adj = adjoint_solve(p.model, g, st, w, p.cfg.targets, p.cfg.stepper);
    EXPECT_EQ(adj.q.back().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(adj.q.front().cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdjointSolve, LinearCaseMatchesImplicitEulerOracle)
{
    // kappa = 0: dq/ds = lap q + (w - grad V) . grad q with Neumann rows,
    // stepped here by an independent dense implicit Euler with Richardson
    // extrapolation, including the node-weighted misfit jumps.
    const auto ms = unit_box(5);
    const int m = ms.size();
    const Vector v = ms.evaluate([](double x, double y) { return 0.4 * x - 0.3 * y; });
    const DDFTModel model(ms, one_species(ms, 0.0, 1.0, v));
    const TimeGrid g(4, 0.5);
    const Vector rho0 = model.normalize_ic({ms.evaluate([](double x, double y) { return 1.0 + 0.4 * x * y; })});
    const auto w = constant_flow(ms, 4, 0.3, 0.1);
    const auto st = state_solve(model, g, w, rho0, tight());
    std::vector<Vector> targets(4, Vector::Constant(m, 1.0));
    const auto adj = adjoint_solve(model, g, st, w, targets, tight());

    // Dense operator from first principles.
    const Matrix grad = Matrix(ms.grad());
    const Vector gv = grad * v;
    Matrix a = Matrix(ms.lap());
    a += (0.3 - gv.head(m).array()).matrix().asDiagonal() * grad.topRows(m);
    a += (0.1 - gv.tail(m).array()).matrix().asDiagonal() * grad.bottomRows(m);
    Matrix mask = Matrix::Identity(m, m);
    const Matrix ng = Matrix(ms.normal_op()) * grad;
    for (std::size_t k = 0; k < ms.bound().size(); ++k) {
        a.row(ms.bound()[k]) = ng.row(static_cast<Eigen::Index>(k));
        mask(ms.bound()[k], ms.bound()[k]) = 0.0;
    }
    auto run = [&](int steps_per_segment) {
        Vector q = Vector::Zero(m);
        for (int k = 2; k >= 0; --k) {
            q += g.weights()[k + 1] * (st.rho[k + 1] - targets[k + 1]);
            const double h = (g.nodes()[k + 1] - g.nodes()[k]) / steps_per_segment;
            const Eigen::PartialPivLU<Matrix> lu(mask - h * a);
            for (int s = 0; s < steps_per_segment; ++s) q = lu.solve(mask * q);
        }
        return q;
    };
    const Vector q1 = run(400);
    const Vector q2 = run(800);
    const Vector oracle = 2.0 * q2 - q1;
    EXPECT_LT((adj.q[0] - oracle).cwiseAbs().maxCoeff(), 1e-6 * oracle.cwiseAbs().maxCoeff());
}

TEST(ReducedGradient, MatchesCentralDifferences)
{
    // The adjoint is the discretised adjoint PDE, so agreement with the
    // derivative of the discrete cost is up to spatial truncation; N = 10
    // resolves this problem well below the tolerance.
    Tiny p(5e-2, 10);
    const TimeGrid g(p.cfg.time_nodes, p.cfg.t_final);
    const int m2 = 2 * p.ms.size();
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    // Random smooth fields tangential to the walls, per time node.
    auto smooth_field = [&](double scale) {
        Vector out(m2);
        for (int c = 0; c < 2; ++c) {
            double a[6];
            for (double& x : a) x = scale * nd(rng);
            out.segment(c * p.ms.size(), p.ms.size()) = p.ms.evaluate([&a, c](double x, double y) {
                const double wall = c == 0 ? x * (1 - x) : y * (1 - y);
                return wall * (a[0] + a[1] * x + a[2] * y + a[3] * x * x + a[4] * x * y + a[5] * y * y);
            });
        }
        return out;
    };
    std::vector<Vector> w(4);
    for (auto& wk : w) wk = smooth_field(0.8);
    auto cost = [&](const std::vector<Vector>& ww) {
        const auto st = state_solve(p.model, g, ww, p.cfg.rho0, p.cfg.stepper);
        return ocp_cost(p.model, g, st.rho, p.cfg.targets, ww, p.cfg.beta);
    };
    const auto st = state_solve(p.model, g, w, p.cfg.rho0, p.cfg.stepper);
    const auto adj = adjoint_solve(p.model, g, st, w, p.cfg.targets, p.cfg.stepper);
    const auto grad = reduced_gradient(g, adj, w, p.cfg.beta);
    for (int dir = 0; dir < 5; ++dir) {
        std::vector<Vector> d(4);
        for (auto& dk : d) dk = smooth_field(1.0);
        const double eps = 1e-4;
        std::vector<Vector> wp = w, wm = w;
        for (int k = 0; k < 4; ++k) {
            wp[k] += eps * d[k];
            wm[k] -= eps * d[k];
        }
        const double fd = (cost(wp) - cost(wm)) / (2 * eps);
        const double adjoint = control_inner(p.ms, grad, d);
        EXPECT_LT(std::abs(adjoint - fd), 1e-4 * std::abs(fd)) << "direction " << dir << " fd " << fd << " adj " << adjoint;
    }
}

TEST(SolveOcp, SelfTargetNeedsNoControl)
{
    Tiny p(1e-3);
    const TimeGrid g(p.cfg.time_nodes, p.cfg.t_final);
    p.cfg.targets = state_solve(p.model, g, constant_flow(p.ms, 4, 0.0, 0.0), p.cfg.rho0, p.cfg.stepper).rho;
    const auto sol = solve_ocp(p.model, p.cfg);
    EXPECT_LE(sol.j_value, 1e-6);
    EXPECT_LE(sol.control_norm, 1e-6);
    EXPECT_TRUE(sol.converged);
}

TEST(SolveOcp, LargeBetaRecoversUncontrolledCost)
{
    Tiny p(1e6);
    p.cfg.max_sweeps = 5;
    const auto sol = solve_ocp(p.model, p.cfg);
    EXPECT_GT(sol.j_uncontrolled, 0.0);
    EXPECT_LE(std::abs(sol.j_value - sol.j_uncontrolled), 1e-2 * sol.j_uncontrolled);
}

TEST(SolveOcp, ControlHalvesReachableMisfit)
{
    Tiny p(1e-3);
    p.cfg.max_sweeps = 30;
    const auto sol = solve_ocp(p.model, p.cfg);
    EXPECT_LE(sol.j_value, 0.5 * sol.j_uncontrolled);
    for (std::size_t k = 1; k < sol.history.size(); ++k) EXPECT_LE(sol.history[k].j, sol.history[k - 1].j);
    EXPECT_LE(sol.j_value, sol.j_uncontrolled);
}

TEST(OcpConfig, RejectsBadParameters)
{
    Tiny p(1e-3);
    OCPConfig c = p.cfg;
    c.beta = 0.0;
    EXPECT_THROW(c.validate(p.model), Error);
    c = p.cfg;
    c.targets.pop_back();
    EXPECT_THROW(c.validate(p.model), Error);
    EXPECT_THROW(TimeGrid(2, 1.0), Error);
}
