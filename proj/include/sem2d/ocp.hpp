#pragma once

// Optimal control of the DDFT dynamics by a background flow w:
//
//   J = 1/2 sum_a int_0^T int (rho_a - target_a)^2 + beta/2 int_0^T int |w|^2
//
// Time is discretised on Chebyshev-Lobatto nodes in [0, T] with
// Clenshaw-Curtis weights; w is a polynomial in time through its nodal
// values. The adjoint is integrated backwards between the time nodes and
// picks up the misfit source at each node with its quadrature weight, which
// makes the adjoint gradient the exact derivative of the time-discrete cost.

#include "sem2d/dae.hpp"
#include "sem2d/ddft.hpp"

#include <vector>

namespace sem {

/// Chebyshev-Lobatto time nodes on [0, T] in ascending order.
class TimeGrid {
public:
    TimeGrid(int n, double t_final);

    int size() const { return static_cast<int>(t_.size()); }
    double t_final() const { return t_final_; }
    const Vector& nodes() const { return t_; }
    /// Clenshaw-Curtis weights scaled to [0, T].
    const Vector& weights() const { return w_; }
    /// Lagrange basis values l_k(t), k = 0..n-1.
    Vector basis(double t) const;
    /// Barycentric interpolation of nodal fields at time t.
    Vector interpolate(const std::vector<Vector>& values, double t) const;

private:
    double t_final_;
    Vector x_; ///< reference nodes on [-1, 1], x = 1 - 2 t / T
    Vector bary_;
    Vector t_;
    Vector w_;
};

struct OCPConfig {
    double beta = 1e-3;
    double t_final = 1.0;
    int time_nodes = 10;
    Vector rho0;                  ///< initial state, stacked over species
    std::vector<Vector> targets;  ///< per time node, stacked over species
    double gamma = 0.3;           ///< sweep relaxation
    int max_sweeps = 50;
    double sweep_tol = 1e-4;
    StepperConfig stepper;

    /// InvalidArgument on inconsistent sizes or parameters.
    void validate(const DDFTModel& model) const;
};

/// Forward state trajectory for one control.
struct StateTrajectory {
    std::vector<Vector> rho; ///< per time node
    Trajectory path;         ///< with dense output
};

/// Adjoint trajectory. q holds the right limits q(t_k+), so q at the final
/// node is exactly zero; `source` is the time-projected sum_a rho_a grad q_a
/// per node (2M local components), i.e. W_k^-1 int l_k(t) sum_a rho_a grad q_a dt.
struct AdjointTrajectory {
    std::vector<Vector> q;
    std::vector<Vector> source;
};

/// Cost with space integrals by the multishape quadrature and time by the
/// grid weights; |w|^2 sums both components.
double ocp_cost(const DDFTModel& model, const TimeGrid& grid, const std::vector<Vector>& rho,
                const std::vector<Vector>& targets, const std::vector<Vector>& w, double beta);

/// Forward solve with the advecting control interpolated in time.
StateTrajectory state_solve(const DDFTModel& model, const TimeGrid& grid, const std::vector<Vector>& w,
                            const Vector& rho0, const StepperConfig& stepper);

/// Linear adjoint operator at one instant, with no-flux (Neumann) rows on the
/// boundary and continuity and normal-derivative matching at intersections.
class AdjointOperator {
public:
    explicit AdjointOperator(const DDFTModel& model);

    /// d q / ds in reversed time s = T - t, given rho(t) and w(t).
    Vector apply(const Vector& q, const Vector& rho, const Vector& w) const;
    Matrix matrix(const Vector& rho, const Vector& w) const;

private:
    const DDFTModel* model_;
    /// Per (b, c) pair: [K1 K2] for the kernel gradient of V_bc, M x 2M.
    std::vector<Matrix> kgrad_;
};

AdjointTrajectory adjoint_solve(const DDFTModel& model, const TimeGrid& grid, const StateTrajectory& state,
                                const std::vector<Vector>& w, const std::vector<Vector>& targets,
                                const StepperConfig& stepper);

/// Pointwise gradient equation w = -(1/beta) sum_a rho_a grad q_a.
std::vector<Vector> gradient_equation(const DDFTModel& model, const std::vector<Vector>& rho,
                                      const std::vector<Vector>& q, double beta);

/// Gradient of the reduced cost with respect to the nodal control values,
/// g_k = W_k (beta w_k + source_k), paired through control_inner.
std::vector<Vector> reduced_gradient(const TimeGrid& grid, const AdjointTrajectory& adj,
                                     const std::vector<Vector>& w, double beta);

/// sum_k sum_i Int_i (a_k . b_k)_i over both components.
double control_inner(const MultiShape& ms, const std::vector<Vector>& a, const std::vector<Vector>& b);

struct OCPIteration {
    int iter = 0;
    double j = 0.0;
    double grad_residual = 0.0; ///< space-time L2 norm of beta w + sum_a rho_a grad q_a
    double gamma = 0.0;
};

struct OCPSolution {
    TimeGrid grid{3, 1.0};
    std::vector<Vector> rho;
    std::vector<Vector> q;
    std::vector<Vector> w;
    double j_value = 0.0;
    double j_uncontrolled = 0.0;
    double grad_residual = 0.0;
    double control_norm = 0.0; ///< space-time L2 norm of beta w
    std::vector<OCPIteration> history;
    int forward_solves = 0;
    bool converged = false;
};

/// Relaxed forward-backward sweep w <- w + gamma (w_new - w), w_new from the
/// gradient equation. A step that raises J is retried with gamma halved; the
/// best iterate is returned. Starts from w = 0.
OCPSolution solve_ocp(const DDFTModel& model, const OCPConfig& cfg);

} // namespace sem
