#include "sem2d/ddft.hpp"

#include "sem2d/error.hpp"
#include "sem2d/steady.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sem {

void SpeciesParams::validate(int m) const
{
    SEM_REQUIRE(n_s >= 1, InvalidArgument, "species count must be at least 1");
    SEM_REQUIRE(kappa.rows() == n_s && kappa.cols() == n_s, InvalidArgument, "kappa must be n_s x n_s");
    SEM_REQUIRE(sigma.rows() == n_s && sigma.cols() == n_s, InvalidArgument, "sigma must be n_s x n_s");
    SEM_REQUIRE((sigma.array() > 0.0).all(), InvalidArgument, "sigma entries must be positive");
    SEM_REQUIRE(static_cast<int>(c_mass.size()) == n_s, InvalidArgument, "c_mass needs one entry per species");
    SEM_REQUIRE(v_ext.empty() || static_cast<int>(v_ext.size()) == n_s, InvalidArgument,
                "v_ext needs one field per species");
    for (const auto& v : v_ext)
        SEM_REQUIRE(v.size() == 0 || v.size() == m, InvalidArgument, "v_ext fields must have length M");
    SEM_REQUIRE(v_ext_grad.empty() || static_cast<int>(v_ext_grad.size()) == n_s, InvalidArgument,
                "v_ext_grad needs one field per species");
    for (const auto& g : v_ext_grad)
        SEM_REQUIRE(g.size() == 0 || g.size() == 2 * m, InvalidArgument, "v_ext_grad fields must have length 2M");
}

InteractionKernel interaction_kernel(int a, int b, const SpeciesParams& params)
{
    SEM_REQUIRE(a >= 0 && a < params.n_s && b >= 0 && b < params.n_s, InvalidArgument, "species index out of range");
    const double k = params.kappa(a, b);
    const double s = params.sigma(a, b);
    auto [d1, d2] = Kernel::gaussian_gradient(k, s);
    return {Kernel::gaussian(k, s), std::move(d1), std::move(d2)};
}

DDFTModel::DDFTModel(const MultiShape& ms, SpeciesParams params) : ms_(&ms), params_(std::move(params))
{
    const int m = ms.size();
    const int ns = params_.n_s;
    params_.validate(m);
    conv_.resize(ns * ns);
    grad_conv_.resize(ns * ns);
    for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b) {
            if (params_.kappa(a, b) == 0.0) {
                conv_[a * ns + b] = Matrix::Zero(m, m);
                grad_conv_[a * ns + b] = Matrix::Zero(2 * m, m);
                continue;
            }
            // Symmetric pairs share the matrix.
            if (b < a && params_.kappa(a, b) == params_.kappa(b, a) && params_.sigma(a, b) == params_.sigma(b, a)) {
                conv_[a * ns + b] = conv_[b * ns + a];
                grad_conv_[a * ns + b] = grad_conv_[b * ns + a];
                continue;
            }
            conv_[a * ns + b] = convolution_matrix(ms, interaction_kernel(a, b, params_).potential);
            grad_conv_[a * ns + b] = ms.grad() * conv_[a * ns + b];
        }
    v_.resize(ns);
    gv_.resize(ns);
    for (int a = 0; a < ns; ++a) {
        v_[a] = (params_.v_ext.empty() || params_.v_ext[a].size() == 0) ? Vector(Vector::Zero(m)) : params_.v_ext[a];
        if (!params_.v_ext_grad.empty() && params_.v_ext_grad[a].size() == 2 * m)
            gv_[a] = params_.v_ext_grad[a];
        else
            gv_[a] = ms.grad() * v_[a];
    }
    std::vector<char> algebraic(m, 0);
    for (int g : ms.bound()) algebraic[g] = 1;
    for (int g : ms.intersection_nodes()) algebraic[g] = 1;
    for (int g = 0; g < m; ++g)
        if (!algebraic[g]) interior_.push_back(g);
}

Eigen::Map<const Vector> DDFTModel::species(const Vector& rho, int a) const
{
    SEM_REQUIRE(rho.size() == dim(), InvalidArgument, "stacked density has the wrong length");
    const int m = ms_->size();
    return Eigen::Map<const Vector>(rho.data() + static_cast<Eigen::Index>(a) * m, m);
}

double DDFTModel::free_energy(const Vector& rho) const
{
    const RowVector& w = ms_->int_row();
    double f = 0.0;
    for (int a = 0; a < params_.n_s; ++a) {
        const auto ra = species(rho, a);
        SEM_REQUIRE((ra.array() > 0.0).all(), DomainError, "free energy needs a strictly positive density");
        f += w.dot((ra.array() * (ra.array().log() - 1.0)).matrix());
        f += w.dot(ra.cwiseProduct(v_[a]));
        for (int b = 0; b < params_.n_s; ++b) {
            if (params_.kappa(a, b) == 0.0) continue;
            f += 0.5 * w.dot(ra.cwiseProduct(conv(a, b) * species(rho, b)));
        }
    }
    return f;
}

Vector DDFTModel::flux(int a, const Vector& rho, const Vector* w) const
{
    const int m = ms_->size();
    const auto ra = species(rho, a);
    // u = grad V_a + sum_b grad(Conv_ab rho_b) - w
    Vector u = gv_[a];
    for (int b = 0; b < params_.n_s; ++b)
        if (params_.kappa(a, b) != 0.0) u.noalias() += grad_conv(a, b) * species(rho, b);
    if (w) u -= *w;
    Vector j = ms_->grad() * ra;
    j.head(m) += ra.cwiseProduct(u.head(m));
    j.tail(m) += ra.cwiseProduct(u.tail(m));
    return -j;
}

Vector DDFTModel::rhs(const Vector& rho, const Vector* w) const
{
    const int m = ms_->size();
    Vector out(dim());
    const auto& bound = ms_->bound();
    for (int a = 0; a < params_.n_s; ++a) {
        const Vector j = flux(a, rho, w);
        Vector r = -(ms_->div() * j);
        r = ms_->apply_intersection_bcs(r, species(rho, a), j);
        const Vector nj = ms_->normal_op() * j;
        for (std::size_t k = 0; k < bound.size(); ++k) r[bound[k]] = nj[k];
        out.segment(static_cast<Eigen::Index>(a) * m, m) = r;
    }
    return out;
}

Matrix DDFTModel::jacobian(const Vector& rho, const Vector* w) const
{
    const int m = ms_->size();
    const int ns = params_.n_s;
    Matrix jac(dim(), dim());
    const auto& bound = ms_->bound();
    const SpMat& grad = ms_->grad();
    const Matrix eye = Matrix::Identity(m, m);
    const Matrix zero = Matrix::Zero(m, m);
    for (int a = 0; a < ns; ++a) {
        const auto ra = species(rho, a);
        Vector u = gv_[a];
        for (int b = 0; b < ns; ++b)
            if (params_.kappa(a, b) != 0.0) u.noalias() += grad_conv(a, b) * species(rho, b);
        if (w) u -= *w;
        for (int b = 0; b < ns; ++b) {
            // dflux_a / drho_b = -(delta_ab (grad + diag(u) E) + diag(E rho_a) grad_conv_ab)
            Matrix dj = Matrix::Zero(2 * m, m);
            if (params_.kappa(a, b) != 0.0) {
                dj.topRows(m) = ra.asDiagonal() * grad_conv(a, b).topRows(m);
                dj.bottomRows(m) = ra.asDiagonal() * grad_conv(a, b).bottomRows(m);
            }
            if (a == b) {
                dj += Matrix(grad);
                dj.topRows(m).diagonal() += u.head(m);
                dj.bottomRows(m).diagonal() += u.tail(m);
            }
            dj = -dj;
            Matrix block = -(ms_->div() * dj);
            ms_->apply_intersection_bcs_matrix(block, a == b ? eye : zero, dj);
            const Matrix ndj = ms_->normal_op() * dj;
            for (std::size_t k = 0; k < bound.size(); ++k) block.row(bound[k]) = ndj.row(static_cast<Eigen::Index>(k));
            jac.block(static_cast<Eigen::Index>(a) * m, static_cast<Eigen::Index>(b) * m, m, m) = block;
        }
    }
    return jac;
}

Vector DDFTModel::mass_mask() const
{
    const int m = ms_->size();
    Vector mask = Vector::Zero(dim());
    for (int a = 0; a < params_.n_s; ++a)
        for (int g : interior_) mask[static_cast<Eigen::Index>(a) * m + g] = 1.0;
    return mask;
}

Vector DDFTModel::masses(const Vector& rho) const
{
    Vector out(params_.n_s);
    for (int a = 0; a < params_.n_s; ++a) out[a] = ms_->int_row().dot(species(rho, a));
    return out;
}

Vector DDFTModel::normalize_ic(const std::vector<Vector>& f) const
{
    const int m = ms_->size();
    SEM_REQUIRE(static_cast<int>(f.size()) == params_.n_s, InvalidArgument, "one initial profile per species needed");
    Vector out(dim());
    for (int a = 0; a < params_.n_s; ++a) {
        SEM_REQUIRE(f[a].size() == m, InvalidArgument, "initial profiles must have length M");
        SEM_REQUIRE((f[a].array() > 0.0).all(), DomainError, "initial profiles must be positive");
        const double z = ms_->int_row().dot(f[a]);
        out.segment(static_cast<Eigen::Index>(a) * m, m) = params_.c_mass[a] * f[a] / z;
    }
    return out;
}

Vector DDFTModel::consistent_state(const DAESystem& sys, double t0, const Vector& rho, double atol) const
{
    const int m = ms_->size();
    const Vector mask = mass_mask();
    Vector y = rho;
    Vector f(dim());
    for (int it = 0; it < 50; ++it) {
        y = consistent_init(sys, t0, y, atol);
        const Vector mass = masses(y);
        double worst = 0.0;
        for (int a = 0; a < params_.n_s; ++a) {
            SEM_REQUIRE(mass[a] > 0.0, DomainError, "initial mass must be positive");
            worst = std::max(worst, std::abs(mass[a] / params_.c_mass[a] - 1.0));
            y.segment(static_cast<Eigen::Index>(a) * m, m) *= params_.c_mass[a] / mass[a];
        }
        sys.rhs(t0, y, f);
        const double alg = (f.array() * (1.0 - mask.array())).abs().maxCoeff();
        if (alg <= atol && worst <= 1e-15) return y;
        if (alg <= atol && worst <= 1e-14 && it > 0) return y;
    }
    fail(ErrorKind::NumericFailure, "could not make the initial state consistent with the boundary rows and masses");
}

DAESystem DDFTModel::system(std::function<Vector(double)> w) const
{
    DAESystem sys;
    sys.dim = dim();
    sys.mass_mask = mass_mask();
    if (w) {
        sys.rhs = [this, w](double t, const Vector& y, Vector& f) {
            const Vector wt = w(t);
            f = rhs(y, &wt);
        };
        sys.jacobian = [this, w](double t, const Vector& y, Matrix& jac) {
            const Vector wt = w(t);
            jac = jacobian(y, &wt);
        };
    } else {
        sys.rhs = [this](double, const Vector& y, Vector& f) { f = rhs(y); };
        sys.jacobian = [this](double, const Vector& y, Matrix& jac) { jac = jacobian(y); };
    }
    return sys;
}

DynamicsResult simulate_dynamics(const DDFTModel& model, const std::vector<Vector>& f_ic, double t0, double t1,
                                 const StepperConfig& cfg)
{
    const DAESystem sys = model.system();
    const Vector y0 = model.consistent_state(sys, t0, model.normalize_ic(f_ic), cfg.atol);
    DynamicsResult res;
    res.trajectory = integrate(sys, y0, t0, t1, cfg);
    const auto& c = model.params().c_mass;
    for (const Vector& y : res.trajectory.states) {
        Vector mass = model.masses(y);
        for (int a = 0; a < model.n_species(); ++a)
            res.max_mass_drift = std::max(res.max_mass_drift, std::abs(mass[a] - c[a]) / std::abs(c[a]));
        res.masses.push_back(std::move(mass));
        double f = std::numeric_limits<double>::quiet_NaN();
        if ((y.array() > 0.0).all()) f = model.free_energy(y);
        res.free_energy.push_back(f);
    }
    return res;
}

Vector picard_map(const DDFTModel& model, const Vector& rho)
{
    const MultiShape& ms = model.multishape();
    const int m = ms.size();
    const int ns = model.n_species();
    const auto& p = model.params();
    Vector out(model.dim());
    for (int a = 0; a < ns; ++a) {
        Vector arg = -model.v_ext(a);
        for (int b = 0; b < ns; ++b)
            if (p.kappa(a, b) != 0.0) arg.noalias() -= model.conv(a, b) * model.species(rho, b);
        const double peak = arg.cwiseAbs().maxCoeff();
        SEM_REQUIRE(std::isfinite(peak) && peak <= 700.0, NumericFailure,
                    "Picard exponent reached " + std::to_string(peak) + "; try a smaller mixing parameter");
        // Shifting by the max keeps the exponentials in range before normalising.
        const Vector e = (arg.array() - arg.maxCoeff()).exp().matrix();
        const double z = ms.int_row().dot(e);
        SEM_REQUIRE(z > 0.0 && std::isfinite(z), NumericFailure, "Picard normalisation is not positive");
        out.segment(static_cast<Eigen::Index>(a) * m, m) = p.c_mass[a] * e / z;
    }
    return out;
}

PicardResult picard_equilibrium(const DDFTModel& model, const Vector& rho_guess, const PicardOptions& options)
{
    SEM_REQUIRE(options.lambda > 0.0 && options.lambda <= 1.0, InvalidArgument, "mixing parameter must be in (0, 1]");
    SEM_REQUIRE(options.tol > 0.0, InvalidArgument, "tolerance must be positive");
    SEM_REQUIRE(rho_guess.size() == model.dim(), InvalidArgument, "initial guess has the wrong length");
    SEM_REQUIRE((rho_guess.array() > 0.0).all(), DomainError, "initial guess must be positive");
    const MultiShape& ms = model.multishape();
    const int ns = model.n_species();

    PicardResult res;
    Vector rho = rho_guess;
    for (int it = 1; it <= options.max_iters; ++it) {
        const Vector next = picard_map(model, rho);
        double err = 0.0;
        for (int a = 0; a < ns; ++a)
            err = std::max(err, error_measure(Vector(model.species(rho, a)), Vector(model.species(next, a)), ms));
        res.free_energy.push_back(model.free_energy(rho));
        res.errors.push_back(err);
        res.iterations = it;
        res.final_error = err;
        if (err < options.tol) {
            res.rho = rho;
            return res;
        }
        rho = (1.0 - options.lambda) * rho + options.lambda * next;
    }
    fail(ErrorKind::NonConvergence, "Picard iteration did not reach tol " + std::to_string(options.tol) + " in " +
                                        std::to_string(options.max_iters) + " iterations (error " +
                                        std::to_string(res.final_error) + ")");
}

std::vector<double> PicardResult::shifted_log_free_energy() const
{
    std::vector<double> out;
    if (free_energy.empty()) return out;
    const double fin = free_energy.back();
    for (double f : free_energy) {
        const double d = std::abs(f - fin);
        out.push_back(d > 0.0 ? std::log10(d) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

WallCurve& WallCurve::segment(const Vec2& a, const Vec2& b)
{
    Piece p;
    p.a = a;
    p.b = b;
    pieces_.push_back(p);
    return *this;
}

WallCurve& WallCurve::arc(const Vec2& c, double r, double th1, double th2)
{
    SEM_REQUIRE(r > 0.0 && th2 > th1, InvalidArgument, "arc needs r > 0 and th2 > th1");
    Piece p;
    p.is_arc = true;
    p.a = c;
    p.r = r;
    p.th1 = th1;
    p.th2 = th2;
    pieces_.push_back(p);
    return *this;
}

double WallCurve::distance(const Vec2& x) const
{
    SEM_REQUIRE(!pieces_.empty(), InvalidArgument, "wall curve has no pieces");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) {
        double d;
        if (!p.is_arc) {
            const Vec2 ab = p.b - p.a;
            const double len2 = ab.squaredNorm();
            const double s = len2 > 0.0 ? std::clamp((x - p.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
            d = (x - (p.a + s * ab)).norm();
        } else {
            const Vec2 rel = x - p.a;
            const double mid = 0.5 * (p.th1 + p.th2);
            double th = std::atan2(rel.y(), rel.x());
            th = mid + std::remainder(th - mid, 2.0 * std::numbers::pi);
            if (th >= p.th1 && th <= p.th2) {
                d = std::abs(rel.norm() - p.r);
            } else {
                const Vec2 e1 = p.a + p.r * Vec2(std::cos(p.th1), std::sin(p.th1));
                const Vec2 e2 = p.a + p.r * Vec2(std::cos(p.th2), std::sin(p.th2));
                d = std::min((x - e1).norm(), (x - e2).norm());
            }
        }
        best = std::min(best, d);
    }
    return best;
}

} // namespace sem
