#pragma once

// Mean-field DDFT on a multishape: free energy, fluxes, the no-flux dynamics
// right-hand side with its Jacobian, and the Picard equilibrium iteration.
//
// Species densities are stacked: rho = [rho_1; ...; rho_ns], each of length M.

#include "sem2d/convolution.hpp"
#include "sem2d/dae.hpp"
#include "sem2d/multishape.hpp"

#include <functional>
#include <vector>

namespace sem {

struct SpeciesParams {
    int n_s = 1;
    Matrix kappa; ///< n_s x n_s interaction strengths
    Matrix sigma; ///< n_s x n_s interaction ranges, > 0
    std::vector<Vector> v_ext;      ///< per species, length M (empty means zero)
    std::vector<Vector> v_ext_grad; ///< per species, length 2M local components (empty means grad * v_ext)
    std::vector<double> c_mass;     ///< per species target mass

    /// Throws InvalidArgument on inconsistent sizes or nonpositive sigma.
    void validate(int m) const;
};

struct InteractionKernel {
    Kernel potential;
    Kernel d1; ///< derivative with respect to the first displacement component
    Kernel d2;
};

/// V_ab(r) = kappa_ab exp(-(r / sigma_ab)^2) and its Cartesian gradient.
InteractionKernel interaction_kernel(int a, int b, const SpeciesParams& params);

class DDFTModel {
public:
    DDFTModel(const MultiShape& ms, SpeciesParams params);

    const MultiShape& multishape() const { return *ms_; }
    const SpeciesParams& params() const { return params_; }
    int n_species() const { return params_.n_s; }
    int dim() const { return params_.n_s * ms_->size(); }

    const Matrix& conv(int a, int b) const { return conv_[a * params_.n_s + b]; }
    /// grad * conv(a, b), 2M x M.
    const Matrix& grad_conv(int a, int b) const { return grad_conv_[a * params_.n_s + b]; }
    const Vector& v_ext(int a) const { return v_[a]; }
    const Vector& v_ext_grad(int a) const { return gv_[a]; }

    Eigen::Map<const Vector> species(const Vector& rho, int a) const;

    /// Sum of ideal, external and mean-field interaction terms. DomainError
    /// if any nodal density is nonpositive.
    double free_energy(const Vector& rho) const;

    /// Flux of species a, 2M local components. `w` is an optional advecting
    /// velocity (2M local components), entering as + rho_a w.
    Vector flux(int a, const Vector& rho, const Vector* w = nullptr) const;

    /// Semi-discrete right-hand side: -div(flux) in the interior, matching
    /// rows at intersections, and the normal flux on the boundary.
    Vector rhs(const Vector& rho, const Vector* w = nullptr) const;
    Matrix jacobian(const Vector& rho, const Vector* w = nullptr) const;

    /// 1 on interior rows, 0 on boundary and intersection rows.
    Vector mass_mask() const;
    Vector masses(const Vector& rho) const;

    /// c_M,a f_a / Int f_a for each species. DomainError if f is not positive.
    Vector normalize_ic(const std::vector<Vector>& f) const;

    /// Initial state satisfying the algebraic rows of `sys` and the target
    /// masses: projection onto the constraints alternates with rescaling.
    Vector consistent_state(const DAESystem& sys, double t0, const Vector& rho, double atol) const;

    /// DAE for the dynamics; `w(t)` gives the advecting velocity if set.
    DAESystem system(std::function<Vector(double)> w = {}) const;

private:
    const MultiShape* ms_;
    SpeciesParams params_;
    std::vector<Matrix> conv_;
    std::vector<Matrix> grad_conv_;
    std::vector<Vector> v_;
    std::vector<Vector> gv_;
    std::vector<int> interior_;
};

struct DynamicsResult {
    Trajectory trajectory;
    std::vector<Vector> masses;       ///< per output time
    std::vector<double> free_energy;  ///< per output time (nan if undefined)
    double max_mass_drift = 0.0;      ///< max relative drift over species and frames
};

/// Normalise the initial data, make it consistent with the algebraic rows
/// and integrate the no-flux dynamics.
DynamicsResult simulate_dynamics(const DDFTModel& model, const std::vector<Vector>& f_ic, double t0, double t1,
                                 const StepperConfig& cfg);

struct PicardOptions {
    double lambda = 0.5;
    double tol = 1e-8;
    int max_iters = 10000;
};

struct PicardResult {
    Vector rho;
    int iterations = 0;
    std::vector<double> errors;      ///< per iteration, max over species
    std::vector<double> free_energy; ///< per iteration, of the mixed iterate before the update
    double final_error = 0.0;
    /// log10 |F_k - F_final| per iteration (nan where F_k == F_final).
    std::vector<double> shifted_log_free_energy() const;
};

/// One fixed-point map application: Z_a^-1 exp(-V_a - sum_b Conv_ab rho_b).
/// NumericFailure if an exponent exceeds 700 in magnitude.
Vector picard_map(const DDFTModel& model, const Vector& rho);

/// Damped Picard iteration. NonConvergence after max_iters.
PicardResult picard_equilibrium(const DDFTModel& model, const Vector& rho_guess, const PicardOptions& options);

/// Piecewise wall made of segments and circular arcs, for distance-based
/// repulsive potentials.
class WallCurve {
public:
    WallCurve& segment(const Vec2& a, const Vec2& b);
    /// Arc of radius r about c between angles th1 < th2.
    WallCurve& arc(const Vec2& c, double r, double th1, double th2);

    double distance(const Vec2& p) const;
    bool empty() const { return pieces_.empty(); }

private:
    struct Piece {
        bool is_arc = false;
        Vec2 a = Vec2::Zero();
        Vec2 b = Vec2::Zero();
        double r = 0.0;
        double th1 = 0.0;
        double th2 = 0.0;
    };
    std::vector<Piece> pieces_;
};

} // namespace sem
