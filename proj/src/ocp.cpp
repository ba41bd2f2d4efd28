#include "sem2d/ocp.hpp"

#include "sem2d/convolution.hpp"
#include "sem2d/error.hpp"
#include "sem2d/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace sem {

namespace {

using Index = Eigen::Index;

// Quadrature points per time segment for the projected gradient source.
constexpr int kSegmentQuad = 17;

double sq_norm_w(const MultiShape& ms, const Vector& v)
{
    const int m = ms.size();
    return ms.int_row().dot(v.head(m).cwiseAbs2()) + ms.int_row().dot(v.tail(m).cwiseAbs2());
}

double space_time_norm(const MultiShape& ms, const TimeGrid& grid, const std::vector<Vector>& f)
{
    double s = 0.0;
    for (int k = 0; k < grid.size(); ++k) s += grid.weights()[k] * sq_norm_w(ms, f[k]);
    return std::sqrt(std::max(0.0, s));
}

// sum_a [rho_a; rho_a] .* grad q_a, 2M local components.
Vector rho_grad_q(const DDFTModel& model, const Vector& rho, const Vector& q)
{
    const MultiShape& ms = model.multishape();
    const int m = ms.size();
    Vector out = Vector::Zero(2 * m);
    for (int a = 0; a < model.n_species(); ++a) {
        const Vector ra = model.species(rho, a);
        const Vector gq = ms.grad() * model.species(q, a);
        out.head(m) += ra.cwiseProduct(gq.head(m));
        out.tail(m) += ra.cwiseProduct(gq.tail(m));
    }
    return out;
}

} // namespace

TimeGrid::TimeGrid(int n, double t_final) : t_final_(t_final)
{
    SEM_REQUIRE(n >= 3, InvalidArgument, "at least three time nodes are needed");
    SEM_REQUIRE(t_final > 0.0, InvalidArgument, "final time must be positive");
    const NodeSet1D ns = NodeSet1D::cheb_lobatto(n);
    x_ = ns.nodes();
    bary_ = ns.bary_weights();
    t_ = (0.5 * t_final) * (1.0 - x_.array()).matrix();
    t_[0] = 0.0;
    t_[n - 1] = t_final;
    w_ = (0.5 * t_final) * clenshaw_curtis_weights(ns).transpose();
}

Vector TimeGrid::basis(double t) const
{
    const int n = size();
    const double x = 1.0 - 2.0 * t / t_final_;
    Vector l = Vector::Zero(n);
    for (int k = 0; k < n; ++k)
        if (x == x_[k] || t == t_[k]) {
            l[k] = 1.0;
            return l;
        }
    double den = 0.0;
    for (int k = 0; k < n; ++k) {
        l[k] = bary_[k] / (x - x_[k]);
        den += l[k];
    }
    return l / den;
}

Vector TimeGrid::interpolate(const std::vector<Vector>& values, double t) const
{
    SEM_REQUIRE(static_cast<int>(values.size()) == size(), InvalidArgument, "one value per time node needed");
    const Vector l = basis(t);
    Vector out = Vector::Zero(values[0].size());
    for (int k = 0; k < size(); ++k)
        if (l[k] != 0.0) out += l[k] * values[k];
    return out;
}

void OCPConfig::validate(const DDFTModel& model) const
{
    SEM_REQUIRE(beta > 0.0, InvalidArgument, "beta must be positive");
    SEM_REQUIRE(t_final > 0.0, InvalidArgument, "final time must be positive");
    SEM_REQUIRE(time_nodes >= 3, InvalidArgument, "at least three time nodes are needed");
    SEM_REQUIRE(gamma > 0.0 && gamma <= 1.0, InvalidArgument, "relaxation must lie in (0, 1]");
    SEM_REQUIRE(max_sweeps >= 1, InvalidArgument, "max_sweeps must be positive");
    SEM_REQUIRE(rho0.size() == model.dim(), InvalidArgument, "initial state has the wrong length");
    SEM_REQUIRE(static_cast<int>(targets.size()) == time_nodes, InvalidArgument, "one target per time node needed");
    for (const Vector& t : targets)
        SEM_REQUIRE(t.size() == model.dim(), InvalidArgument, "target has the wrong length");
}

double ocp_cost(const DDFTModel& model, const TimeGrid& grid, const std::vector<Vector>& rho,
                const std::vector<Vector>& targets, const std::vector<Vector>& w, double beta)
{
    const MultiShape& ms = model.multishape();
    const int n = grid.size();
    SEM_REQUIRE(static_cast<int>(rho.size()) == n && static_cast<int>(targets.size()) == n &&
                    static_cast<int>(w.size()) == n,
                InvalidArgument, "cost needs states, targets and controls at every time node");
    double j = 0.0;
    for (int k = 0; k < n; ++k) {
        double misfit = 0.0;
        for (int a = 0; a < model.n_species(); ++a) {
            const Vector d = model.species(rho[k], a) - model.species(targets[k], a);
            misfit += ms.int_row().dot(d.cwiseAbs2());
        }
        j += grid.weights()[k] * (misfit + beta * sq_norm_w(ms, w[k]));
    }
    return 0.5 * j;
}

StateTrajectory state_solve(const DDFTModel& model, const TimeGrid& grid, const std::vector<Vector>& w,
                            const Vector& rho0, const StepperConfig& stepper)
{
    SEM_REQUIRE(static_cast<int>(w.size()) == grid.size(), InvalidArgument, "one control per time node needed");
    const DAESystem sys = model.system([&grid, &w](double t) { return grid.interpolate(w, t); });
    StepperConfig cfg = stepper;
    cfg.output_times.assign(grid.nodes().begin(), grid.nodes().end());
    cfg.keep_steps = true;
    const Vector y0 = model.consistent_state(sys, 0.0, rho0, cfg.atol);
    StateTrajectory out;
    out.path = integrate(sys, y0, 0.0, grid.t_final(), cfg);
    SEM_REQUIRE(static_cast<int>(out.path.states.size()) == grid.size(), NumericFailure,
                "forward solve did not report every time node");
    out.rho = out.path.states;
    return out;
}

AdjointOperator::AdjointOperator(const DDFTModel& model) : model_(&model)
{
    const MultiShape& ms = model.multishape();
    const int m = ms.size();
    const int ns = model.n_species();
    const auto& p = model.params();
    kgrad_.assign(static_cast<std::size_t>(ns * ns), Matrix());
    for (int b = 0; b < ns; ++b)
        for (int c = 0; c < ns; ++c) {
            if (p.kappa(b, c) == 0.0) continue;
            const InteractionKernel k = interaction_kernel(b, c, p);
            const Matrix stacked = convolution_matrix_vector_field(ms, k.d1, k.d2);
            Matrix side(m, 2 * m);
            side.leftCols(m) = stacked.topRows(m);
            side.rightCols(m) = stacked.bottomRows(m);
            // Folding the rotation in lets the operator act on local components.
            kgrad_[b * ns + c] = side * ms.local_to_cartesian();
        }
}

Vector AdjointOperator::apply(const Vector& q, const Vector& rho, const Vector& w) const
{
    const DDFTModel& model = *model_;
    const MultiShape& ms = model.multishape();
    const int m = ms.size();
    const int ns = model.n_species();
    const auto& bound = ms.bound();
    std::vector<Vector> gq(ns);
    std::vector<Vector> rgq(ns);
    for (int a = 0; a < ns; ++a) {
        gq[a] = ms.grad() * model.species(q, a);
        rgq[a] = ms.make_vector(model.species(rho, a)).cwiseProduct(gq[a]);
    }
    Vector out(model.dim());
    for (int c = 0; c < ns; ++c) {
        Vector u = model.v_ext_grad(c) - w;
        for (int b = 0; b < ns; ++b)
            if (model.params().kappa(c, b) != 0.0) u.noalias() += model.grad_conv(c, b) * model.species(rho, b);
        Vector r = ms.lap() * model.species(q, c);
        r -= u.head(m).cwiseProduct(gq[c].head(m)) + u.tail(m).cwiseProduct(gq[c].tail(m));
        for (int b = 0; b < ns; ++b) {
            const Matrix& kg = kgrad_[b * ns + c];
            if (kg.size()) r.noalias() += kg * rgq[b];
        }
        r = ms.apply_intersection_bcs(r, Vector(model.species(q, c)), gq[c]);
        const Vector nq = ms.normal_op() * gq[c];
        for (std::size_t k = 0; k < bound.size(); ++k) r[bound[k]] = nq[static_cast<Index>(k)];
        out.segment(static_cast<Index>(c) * m, m) = r;
    }
    return out;
}

Matrix AdjointOperator::matrix(const Vector& rho, const Vector& w) const
{
    const DDFTModel& model = *model_;
    const MultiShape& ms = model.multishape();
    const int m = ms.size();
    const int ns = model.n_species();
    const auto& bound = ms.bound();
    const Matrix grad = Matrix(ms.grad());
    const Matrix eye = Matrix::Identity(m, m);
    const Matrix zero = Matrix::Zero(m, m);
    const Matrix zero2 = Matrix::Zero(2 * m, m);
    const Matrix ngrad = ms.normal_op() * grad;
    Matrix out(model.dim(), model.dim());
    for (int c = 0; c < ns; ++c) {
        Vector u = model.v_ext_grad(c) - w;
        for (int b = 0; b < ns; ++b)
            if (model.params().kappa(c, b) != 0.0) u.noalias() += model.grad_conv(c, b) * model.species(rho, b);
        for (int b = 0; b < ns; ++b) {
            Matrix block = Matrix::Zero(m, m);
            const Matrix& kg = kgrad_[b * ns + c];
            if (kg.size()) block.noalias() = (kg * ms.make_vector(model.species(rho, b)).asDiagonal()) * grad;
            if (b == c) {
                block += Matrix(ms.lap());
                block.noalias() -= u.head(m).asDiagonal() * grad.topRows(m);
                block.noalias() -= u.tail(m).asDiagonal() * grad.bottomRows(m);
            }
            ms.apply_intersection_bcs_matrix(block, b == c ? eye : zero, b == c ? grad : zero2);
            for (std::size_t k = 0; k < bound.size(); ++k)
                block.row(bound[k]) = b == c ? Matrix(ngrad.row(static_cast<Index>(k))) : Matrix::Zero(1, m);
            out.block(static_cast<Index>(c) * m, static_cast<Index>(b) * m, m, m) = block;
        }
    }
    return out;
}

AdjointTrajectory adjoint_solve(const DDFTModel& model, const TimeGrid& grid, const StateTrajectory& state,
                                const std::vector<Vector>& w, const std::vector<Vector>& targets,
                                const StepperConfig& stepper)
{
    const int n = grid.size();
    const MultiShape& ms = model.multishape();
    const int m = ms.size();
    SEM_REQUIRE(static_cast<int>(state.rho.size()) == n && static_cast<int>(w.size()) == n &&
                    static_cast<int>(targets.size()) == n,
                InvalidArgument, "adjoint needs states, controls and targets at every time node");
    const auto op = std::make_shared<AdjointOperator>(model);

    AdjointTrajectory out;
    out.q.assign(n, Vector::Zero(model.dim()));
    out.source.assign(n, Vector::Zero(2 * m));

    const NodeSet1D quad_nodes = NodeSet1D::cheb_lobatto(kSegmentQuad);
    const RowVector quad_w = clenshaw_curtis_weights(quad_nodes);

    Vector q_right = Vector::Zero(model.dim()); // q(t_{k+1}+)
    for (int k = n - 2; k >= 0; --k) {
        const double t_hi = grid.nodes()[k + 1];
        const double t_lo = grid.nodes()[k];
        const double h = t_hi - t_lo;

        // Cache rho(t) and w(t): the integrator revisits the same time often.
        struct Coeffs {
            double t = std::numeric_limits<double>::quiet_NaN();
            Vector rho;
            Vector w;
        };
        auto cache = std::make_shared<Coeffs>();
        auto coeffs = [&state, &grid, &w, cache, t_hi](double s) -> const Coeffs& {
            const double t = t_hi - s;
            if (t != cache->t) {
                cache->t = t;
                cache->rho = state.path.dense(t);
                cache->w = grid.interpolate(w, t);
            }
            return *cache;
        };
        DAESystem sys;
        sys.dim = model.dim();
        sys.mass_mask = model.mass_mask();
        sys.rhs = [op, coeffs](double s, const Vector& q, Vector& f) {
            const Coeffs& c = coeffs(s);
            f = op->apply(q, c.rho, c.w);
        };
        sys.jacobian = [op, coeffs](double s, const Vector&, Matrix& jac) {
            const Coeffs& c = coeffs(s);
            jac = op->matrix(c.rho, c.w);
        };

        // Misfit source at the node, weighted as in the time quadrature.
        Vector q_left = q_right + grid.weights()[k + 1] * (state.rho[k + 1] - targets[k + 1]);
        q_left = consistent_init(sys, 0.0, q_left, stepper.atol);
        StepperConfig cfg = stepper;
        cfg.output_times.clear();
        cfg.keep_steps = true;
        cfg.dt_max = std::min(cfg.dt_max, h);
        const Trajectory path = integrate(sys, q_left, 0.0, h, cfg);
        q_right = path.states.back();
        out.q[k] = q_right;

        // int over the segment of l_j(t) sum_a rho_a grad q_a
        for (int i = 0; i < kSegmentQuad; ++i) {
            const double s = 0.5 * h * (1.0 - quad_nodes.nodes()[i]);
            const double t = t_hi - s;
            const Vector p = rho_grad_q(model, state.path.dense(t), path.dense(s));
            const Vector l = grid.basis(t);
            const double cw = 0.5 * h * quad_w[i];
            for (int j = 0; j < n; ++j)
                if (l[j] != 0.0) out.source[j] += (cw * l[j]) * p;
        }
    }
    for (int k = 0; k < n; ++k) out.source[k] /= grid.weights()[k];
    return out;
}

std::vector<Vector> gradient_equation(const DDFTModel& model, const std::vector<Vector>& rho,
                                      const std::vector<Vector>& q, double beta)
{
    SEM_REQUIRE(beta > 0.0, InvalidArgument, "beta must be positive");
    SEM_REQUIRE(rho.size() == q.size(), InvalidArgument, "states and adjoints must have the same time nodes");
    std::vector<Vector> w(rho.size());
    for (std::size_t k = 0; k < rho.size(); ++k) w[k] = (-1.0 / beta) * rho_grad_q(model, rho[k], q[k]);
    return w;
}

std::vector<Vector> reduced_gradient(const TimeGrid& grid, const AdjointTrajectory& adj,
                                     const std::vector<Vector>& w, double beta)
{
    std::vector<Vector> g(w.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        g[k] = grid.weights()[static_cast<Index>(k)] * (beta * w[k] + adj.source[k]);
    return g;
}

double control_inner(const MultiShape& ms, const std::vector<Vector>& a, const std::vector<Vector>& b)
{
    SEM_REQUIRE(a.size() == b.size(), InvalidArgument, "control fields must have the same time nodes");
    const int m = ms.size();
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const Vector prod = a[k].cwiseProduct(b[k]);
        s += ms.int_row().dot(prod.head(m)) + ms.int_row().dot(prod.tail(m));
    }
    return s;
}

OCPSolution solve_ocp(const DDFTModel& model, const OCPConfig& cfg)
{
    cfg.validate(model);
    const MultiShape& ms = model.multishape();
    const int n = cfg.time_nodes;
    const TimeGrid grid(n, cfg.t_final);

    OCPSolution sol;
    sol.grid = grid;
    std::vector<Vector> w(n, Vector::Zero(2 * ms.size()));
    StateTrajectory state = state_solve(model, grid, w, cfg.rho0, cfg.stepper);
    ++sol.forward_solves;
    double j = ocp_cost(model, grid, state.rho, cfg.targets, w, cfg.beta);
    sol.j_uncontrolled = j;

    double gamma = cfg.gamma;
    const double gamma_min = 1e-6 * cfg.gamma;
    bool converged = false;
    int sweeps = 0;
    for (;;) {
        const AdjointTrajectory adj = adjoint_solve(model, grid, state, w, cfg.targets, cfg.stepper);
        std::vector<Vector> residual(n);
        std::vector<Vector> bw(n);
        for (int k = 0; k < n; ++k) {
            bw[k] = cfg.beta * w[k];
            residual[k] = bw[k] + adj.source[k];
        }
        sol.rho = state.rho;
        sol.q = adj.q;
        sol.w = w;
        sol.j_value = j;
        sol.grad_residual = space_time_norm(ms, grid, residual);
        sol.control_norm = space_time_norm(ms, grid, bw);
        sol.history.push_back({sweeps, j, sol.grad_residual, gamma});
        // Already stationary, e.g. targets reached without control.
        if (sol.grad_residual <= cfg.sweep_tol * sol.control_norm) converged = true;
        if (converged || sweeps >= cfg.max_sweeps) break;

        bool accepted = false;
        while (gamma >= gamma_min) {
            std::vector<Vector> trial(n);
            for (int k = 0; k < n; ++k) trial[k] = w[k] - (gamma / cfg.beta) * residual[k];
            StateTrajectory ts = state_solve(model, grid, trial, cfg.rho0, cfg.stepper);
            ++sol.forward_solves;
            const double jt = ocp_cost(model, grid, ts.rho, cfg.targets, trial, cfg.beta);
            if (jt < j) {
                std::vector<Vector> dw(n);
                for (int k = 0; k < n; ++k) dw[k] = trial[k] - w[k];
                const double rel_j = (j - jt) / std::max(j, std::numeric_limits<double>::min());
                const double wn = space_time_norm(ms, grid, trial);
                const double rel_w = space_time_norm(ms, grid, dw) / std::max(wn, std::numeric_limits<double>::min());
                converged = rel_j <= cfg.sweep_tol && rel_w <= cfg.sweep_tol;
                w = std::move(trial);
                state = std::move(ts);
                j = jt;
                accepted = true;
                gamma = std::min(cfg.gamma, 2.0 * gamma);
                break;
            }
            gamma *= 0.5;
        }
        ++sweeps;
        if (!accepted) break;
    }
    sol.converged = converged;
    return sol;
}

} // namespace sem
