#pragma once

// Variable-step BDF integrator for semi-explicit DAEs  M y' = f(t, y)  with a
// diagonal 0/1 mass mask. Rows with mask 0 are algebraic constraints f_i = 0.
//
// The first step is backward Euler, checked by step doubling; later steps
// use variable-coefficient BDF of order 1 to max_order in Lagrange form. The
// local error is estimated from the distance between the corrector and a
// polynomial predictor; the order follows the smallest estimated error.

#include "sem2d/types.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace sem {

struct DAESystem {
    int dim = 0;
    std::function<void(double t, const Vector& y, Vector& f)> rhs;
    Vector mass_mask; ///< 1 for differential rows, 0 for algebraic rows
    /// Optional analytic Jacobian df/dy (dim x dim). Finite differences otherwise.
    std::function<void(double t, const Vector& y, Matrix& jac)> jacobian;
};

struct StepperConfig {
    double rtol = 1e-9;
    double atol = 1e-9;
    double dt_init = 1e-4;
    double dt_min = 1e-14;
    double dt_max = std::numeric_limits<double>::infinity();
    int max_newton_iters = 6;
    int max_steps = 200000;
    std::vector<double> output_times; ///< ascending, inside [t0, t1]; t1 is always reported
    /// Fixed steps of length dt_init when false (used for order checks).
    bool adaptive = true;
    /// Highest BDF order (1 to 5).
    int max_order = 5;
    /// Keep every accepted step for dense output.
    bool keep_steps = false;
};

struct SolverStats {
    int steps = 0;
    int rejected = 0;
    int newton_iters = 0;
    int newton_failures = 0;
    int jacobian_evals = 0;
    int factorizations = 0;
    int rhs_evals = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    SolverStats stats;

    /// Accepted steps, when StepperConfig::keep_steps is set.
    std::vector<double> step_times;
    std::vector<Vector> step_states;

    /// Cubic interpolation through the stored steps nearest to t.
    Vector dense(double t) const;
};

/// Newton on the algebraic unknowns only, so that the algebraic rows hold to
/// within atol (max norm). Differential entries are returned unchanged.
Vector consistent_init(const DAESystem& sys, double t0, const Vector& y0_guess, double atol = 1e-9);

/// Integrate from (t0, y0) to t1. Steps land exactly on the output times.
Trajectory integrate(const DAESystem& sys, const Vector& y0, double t0, double t1, const StepperConfig& cfg);

/// Finite-difference Jacobian of sys.rhs, one column per perturbation.
Matrix fd_jacobian(const DAESystem& sys, double t, const Vector& y);

} // namespace sem
