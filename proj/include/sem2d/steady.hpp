#pragma once

// Error measures, the Dirichlet Poisson solver and the operator validation
// harness over the box and wedge discretisations.

#include "sem2d/multishape.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sem {

/// ||num - ex||_L2 / (||ex||_L2 + 1e-10), norms taken with the multishape
/// integration row. Stacked vector fields (length 2M) use the norm of the
/// pointwise Euclidean length.
double error_measure(const Vector& num, const Vector& ex, const MultiShape& ms);
/// Same ratio with vector max norms.
double error_measure_linf(const Vector& num, const Vector& ex);
/// Same ratio for scalars.
double error_measure_abs(double num, double ex);

/// Solve Lap rho = f with rho = g on the boundary and matching conditions
/// (continuity and normal-derivative continuity) across intersections.
/// `g` is either a full field (length M) or the boundary values in bound order.
Vector solve_poisson(const MultiShape& ms, const Vector& f, const Vector& g);

namespace testfn {

double g1(double x1, double x2);
Vec2 grad_g1(double x1, double x2);
double lap_g1(double x1, double x2);
double g2(double x1, double x2);

double chi_c(double d1, double d2);
double n_c(double z1, double z2);
double chi_p(double d1, double d2);
double n_p(double z1, double z2);

/// Exact solution and right-hand side of the validation Poisson problem.
double poisson_u(double x1, double x2);
double poisson_f(double x1, double x2);

} // namespace testfn

/// Gauss-Legendre rule with n points on [a, b] (Golub-Welsch).
void gauss_legendre(int n, double a, double b, Vector& nodes, Vector& weights);

enum class PointSplit { Equal, HalfFirst, HalfSecond };

/// Box cases on [0,2]^2:
///   a: one element   b: split at x1 = 0.5   c: x1 split in thirds
///   d: four quadrants
/// Wedge cases on r in [1,2], theta in [0, pi/2] about the origin:
///   e: one element   f: split at r = 1.5   g: split at theta = pi/4
///   h: three angular sectors
/// fig1: the quadrilateral [0,3]^2 with the half-annulus r in [1,4],
///   theta in [0, pi] about (4,3), sharing the quad's top side.
/// N_Sigma points per direction are shared equally between the elements
/// crossed in that direction (at least 2 each). For fig1 every element gets
/// N_Sigma/2 per direction; `split` halves one direction instead.
MultiShape make_validation_multishape(const std::string& case_id, int n_sigma, PointSplit split = PointSplit::Equal);

bool is_box_case(const std::string& case_id);

/// Exact integral of g2 over the case domain.
double exact_int_g2(const std::string& case_id);

/// Reference values of the convolution test at the multishape nodes: the
/// box cases use chi_C and n_C (separable Gauss-Legendre integrals), the
/// wedge cases chi_P and n_P (closed form).
Vector reference_convolution(const std::string& case_id, const MultiShape& ms);

struct ValidationRow {
    std::string case_id;
    std::string op;
    int n_sigma = 0;
    double error = 0.0;
    double wall_ms = 0.0;
};

struct ValidationOptions {
    std::vector<std::string> cases{"a", "b", "c", "d", "e", "f", "g", "h"};
    std::vector<std::string> operators{"lap", "grad", "div", "interp", "int", "conv", "poisson"};
    std::vector<int> n_sigma{6, 10, 14, 18, 22, 26, 30, 34, 38, 42, 46, 50};
    bool fig1_timing = false; ///< add the fig1 point-distribution study
    std::vector<int> fig1_n{6, 10, 14, 18, 22, 26, 30};
};

/// Error of a single (case, operator) pair at one N_Sigma.
double validation_error(const std::string& case_id, const std::string& op, int n_sigma,
                        PointSplit split = PointSplit::Equal);

std::vector<ValidationRow> run_validation_suite(const ValidationOptions& options);

/// Columns: case, operator, N_Sigma, error, wall_ms.
void write_validation_csv(const std::filesystem::path& path, const std::vector<ValidationRow>& rows);

} // namespace sem
