#include "sem2d/dae.hpp"

#include "sem2d/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <span>
#include <sstream>

namespace sem {

namespace {

constexpr double kNewtonTol = 0.03; // weighted norm of the last Newton update
constexpr double kSafety = 0.9;
constexpr double kMaxGrowth = 2.0; // step ratio cap for zero-stability of variable-step BDF
constexpr double kMinShrink = 0.2;
constexpr double kRefactor = 0.6; // relative change of h*beta that forces a new LU

double wrms(const Vector& e, const Vector& y, double rtol, double atol)
{
    const Vector w = (rtol * y.cwiseAbs()).array() + atol;
    return std::sqrt((e.cwiseQuotient(w)).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(e.size(), 1)));
}

/// Lagrange basis weights l_j(t) through the given nodes.
std::vector<double> lagrange_weights(std::span<const double> nodes, double t)
{
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 1.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = 0; m < n; ++m)
            if (m != j) w[j] *= (t - nodes[m]) / (nodes[j] - nodes[m]);
    return w;
}

/// Derivatives l_j'(nodes[0]) of the Lagrange basis at the first node.
std::vector<double> lagrange_derivative_at_first(std::span<const double> nodes)
{
    const std::size_t n = nodes.size();
    std::vector<double> d(n, 0.0);
    const double t0 = nodes[0];
    for (std::size_t m = 1; m < n; ++m) d[0] += 1.0 / (t0 - nodes[m]);
    for (std::size_t j = 1; j < n; ++j) {
        double v = 1.0 / (nodes[j] - t0);
        for (std::size_t m = 1; m < n; ++m)
            if (m != j) v *= (t0 - nodes[m]) / (nodes[j] - nodes[m]);
        d[j] = v;
    }
    return d;
}

/// Highest divided difference of vector data.
Vector divided_difference(std::span<const double> ts, std::span<const Vector* const> ys)
{
    const std::size_t n = ts.size();
    std::vector<Vector> col;
    col.reserve(n);
    for (std::size_t j = 0; j < n; ++j) col.push_back(*ys[j]);
    for (std::size_t lvl = 1; lvl < n; ++lvl)
        for (std::size_t j = 0; j + lvl < n; ++j) col[j] = (col[j + 1] - col[j]) / (ts[j + lvl] - ts[j]);
    return col[0];
}

/// Accepted steps, newest first, kept for the BDF formulas.
struct History {
    std::deque<double> t;
    std::deque<Vector> y;

    void push(double tn, const Vector& yn, std::size_t cap)
    {
        t.push_front(tn);
        y.push_front(yn);
        while (t.size() > cap) {
            t.pop_back();
            y.pop_back();
        }
    }
    std::size_t size() const { return t.size(); }
};

class Newton {
public:
    Newton(const DAESystem& sys, const StepperConfig& cfg, SolverStats& stats) : sys_(sys), cfg_(cfg), stats_(stats) {}

    /// Solve M (y - psi) = hb f(t, y). Returns false on divergence.
    bool solve(double t, double hb, const Vector& psi, Vector& y, bool& jac_was_fresh)
    {
        if (!have_jac_) refresh_jacobian(t, y);
        jac_was_fresh = fresh_;
        if (!have_lu_ || std::abs(hb / lu_hb_ - 1.0) > kRefactor) factor(hb);
        const Vector& m = sys_.mass_mask;
        Vector f(sys_.dim);
        double prev = std::numeric_limits<double>::infinity();
        double nd = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= cfg_.max_newton_iters; ++k) {
            eval(t, y, f);
            if (!f.allFinite()) return false;
            if (k > 0 && nd <= kNewtonTol && alg_residual(f) <= cfg_.atol) return true;
            if (k == cfg_.max_newton_iters) break;
            // the stale LU was built for lu_hb_; scale the algebraic rows consistently
            const Vector g = m.cwiseProduct(y - psi) - hb * f;
            Vector rhs = -g;
            for (int i = 0; i < sys_.dim; ++i)
                if (m[i] == 0.0) rhs[i] *= lu_hb_ / hb;
            const Vector dy = lu_.solve(rhs);
            y += dy;
            ++stats_.newton_iters;
            nd = wrms(dy, y, cfg_.rtol, cfg_.atol);
            if (!std::isfinite(nd)) return false;
            if (k > 0 && nd > kNewtonTol && nd > 0.9 * prev) return false;
            prev = nd;
        }
        return false;
    }

    void invalidate_jacobian() { have_jac_ = false; }
    void mark_stale() { fresh_ = false; }

    void refresh_jacobian(double t, const Vector& y)
    {
        if (sys_.jacobian) {
            jac_.resize(sys_.dim, sys_.dim);
            sys_.jacobian(t, y, jac_);
        } else {
            jac_ = fd_jacobian(sys_, t, y);
            stats_.rhs_evals += sys_.dim + 1;
        }
        ++stats_.jacobian_evals;
        have_jac_ = true;
        have_lu_ = false;
        fresh_ = true;
    }

private:
    void eval(double t, const Vector& y, Vector& f)
    {
        sys_.rhs(t, y, f);
        ++stats_.rhs_evals;
    }

    double alg_residual(const Vector& f) const
    {
        double r = 0.0;
        for (int i = 0; i < sys_.dim; ++i)
            if (sys_.mass_mask[i] == 0.0) r = std::max(r, std::abs(f[i]));
        return r;
    }

    void factor(double hb)
    {
        Matrix a = -hb * jac_;
        a.diagonal() += sys_.mass_mask;
        lu_.compute(a);
        lu_hb_ = hb;
        have_lu_ = true;
        ++stats_.factorizations;
    }

    const DAESystem& sys_;
    const StepperConfig& cfg_;
    SolverStats& stats_;
    Matrix jac_;
    Eigen::PartialPivLU<Matrix> lu_;
    double lu_hb_ = 0.0;
    bool have_jac_ = false;
    bool have_lu_ = false;
    bool fresh_ = false;
};

void check_system(const DAESystem& sys, const Vector& y0)
{
    SEM_REQUIRE(sys.dim > 0 && static_cast<bool>(sys.rhs), InvalidArgument, "DAE system needs dim > 0 and a rhs");
    SEM_REQUIRE(y0.size() == sys.dim, InvalidArgument, "initial state has the wrong length");
    SEM_REQUIRE(sys.mass_mask.size() == sys.dim, InvalidArgument, "mass mask has the wrong length");
    for (int i = 0; i < sys.dim; ++i)
        SEM_REQUIRE(sys.mass_mask[i] == 0.0 || sys.mass_mask[i] == 1.0, InvalidArgument,
                    "mass mask entries must be 0 or 1");
}

} // namespace

Matrix fd_jacobian(const DAESystem& sys, double t, const Vector& y)
{
    const int n = sys.dim;
    Matrix jac(n, n);
    Vector f0(n), f1(n);
    sys.rhs(t, y, f0);
    Vector yp = y;
    for (int j = 0; j < n; ++j) {
        const double h = 1.5e-8 * std::max(1.0, std::abs(y[j]));
        yp[j] = y[j] + h;
        sys.rhs(t, yp, f1);
        jac.col(j) = (f1 - f0) / h;
        yp[j] = y[j];
    }
    return jac;
}

Vector consistent_init(const DAESystem& sys, double t0, const Vector& y0_guess, double atol)
{
    check_system(sys, y0_guess);
    std::vector<int> alg;
    for (int i = 0; i < sys.dim; ++i)
        if (sys.mass_mask[i] == 0.0) alg.push_back(i);
    Vector y = y0_guess;
    if (alg.empty()) return y;
    const int na = static_cast<int>(alg.size());
    Vector f(sys.dim);
    auto residual = [&](Vector& g) {
        sys.rhs(t0, y, f);
        g.resize(na);
        for (int a = 0; a < na; ++a) g[a] = f[alg[a]];
        return g.cwiseAbs().maxCoeff();
    };
    Vector g;
    double res = residual(g);
    for (int it = 0; it < 30 && res > atol; ++it) {
        Matrix jac;
        if (sys.jacobian) {
            jac.resize(sys.dim, sys.dim);
            sys.jacobian(t0, y, jac);
        } else {
            jac = fd_jacobian(sys, t0, y);
        }
        Matrix jaa(na, na);
        for (int a = 0; a < na; ++a)
            for (int b = 0; b < na; ++b) jaa(a, b) = jac(alg[a], alg[b]);
        const Vector d = jaa.partialPivLu().solve(-g);
        for (int a = 0; a < na; ++a) y[alg[a]] += d[a];
        const double next = residual(g);
        if (!std::isfinite(next)) break;
        res = next;
    }
    if (!(res <= atol)) {
        std::ostringstream os;
        os << "consistent initialisation failed: algebraic residual " << res << " > " << atol
           << "; supply an initial guess closer to the constraint manifold";
        fail(ErrorKind::NumericFailure, os.str());
    }
    return y;
}

Vector Trajectory::dense(double t) const
{
    SEM_REQUIRE(step_times.size() >= 2, InvalidArgument, "dense output needs keep_steps and at least two steps");
    const auto n = static_cast<int>(step_times.size());
    const double eps = 1e-12 * std::max(1.0, std::abs(step_times.back()));
    SEM_REQUIRE(t >= step_times.front() - eps && t <= step_times.back() + eps, InvalidArgument,
                "dense output requested outside the integrated interval");
    int k = static_cast<int>(std::upper_bound(step_times.begin(), step_times.end(), t) - step_times.begin());
    k = std::clamp(k, 1, n - 1); // t in [t_{k-1}, t_k]
    if (t == step_times[k - 1]) return step_states[k - 1];
    if (t == step_times[k]) return step_states[k];
    // cubic through the two steps on either side, shifted inward at the ends
    const int npts = std::min(4, n);
    const int lo = std::clamp(k - npts / 2, 0, n - npts);
    const std::span<const double> nodes(step_times.data() + lo, static_cast<std::size_t>(npts));
    const auto w = lagrange_weights(nodes, t);
    Vector out = Vector::Zero(step_states[0].size());
    for (int j = 0; j < npts; ++j) out += w[j] * step_states[lo + j];
    return out;
}

Trajectory integrate(const DAESystem& sys, const Vector& y0, double t0, double t1, const StepperConfig& cfg)
{
    check_system(sys, y0);
    SEM_REQUIRE(t1 > t0, InvalidArgument, "integration interval must have t1 > t0");
    SEM_REQUIRE(cfg.rtol > 0.0 && cfg.atol > 0.0, InvalidArgument, "tolerances must be positive");
    SEM_REQUIRE(cfg.dt_init > 0.0 && cfg.dt_min > 0.0 && cfg.dt_min <= cfg.dt_init && cfg.dt_init <= cfg.dt_max,
                InvalidArgument, "step sizes must satisfy 0 < dt_min <= dt_init <= dt_max");
    SEM_REQUIRE(cfg.max_order >= 1 && cfg.max_order <= 5, InvalidArgument, "max_order must be between 1 and 5");

    std::vector<double> outs;
    for (double to : cfg.output_times) {
        SEM_REQUIRE(to >= t0 && to <= t1, InvalidArgument, "output time outside the integration interval");
        outs.push_back(to);
    }
    outs.push_back(t1);
    std::sort(outs.begin(), outs.end());
    outs.erase(std::unique(outs.begin(), outs.end()), outs.end());

    Trajectory traj;
    SolverStats& st = traj.stats;
    Newton newton(sys, cfg, st);
    std::size_t next_out = 0;
    auto record = [&](double t, const Vector& y) {
        while (next_out < outs.size() && outs[next_out] == t) {
            traj.times.push_back(t);
            traj.states.push_back(y);
            ++next_out;
        }
        if (cfg.keep_steps) {
            traj.step_times.push_back(t);
            traj.step_states.push_back(y);
        }
    };

    double t = t0;
    Vector y = y0;
    record(t, y);
    const double span = t1 - t0;
    const double land_eps = 1e-12 * std::max(1.0, std::abs(t1));
    const std::size_t hist_cap = static_cast<std::size_t>(cfg.max_order) + 2;

    auto clip = [&](double h) {
        h = std::min(h, cfg.dt_max);
        const double tout = outs[next_out];
        // land exactly on the next output time, avoiding slivers
        if (t + h >= tout - land_eps || tout - (t + h) < 0.1 * h) h = tout - t;
        return h;
    };
    auto step_fail = [&](double h, const char* why) {
        std::ostringstream os;
        os << "step size " << h << " fell below dt_min = " << cfg.dt_min << " at t = " << t << " (" << why
           << "); steps=" << st.steps << " rejected=" << st.rejected << " newton_failures=" << st.newton_failures;
        fail(ErrorKind::StepFailure, os.str());
    };

    // ---- first step: backward Euler with step doubling
    double h = std::min(cfg.dt_init, span);
    History hist;
    double err = 0.0;
    for (;;) {
        h = clip(h);
        if (h < cfg.dt_min) step_fail(h, "first step");
        Vector yf = y, yh1 = y, yh2;
        bool fresh = false;
        bool ok = newton.solve(t + h, h, y, yf, fresh) && newton.solve(t + 0.5 * h, 0.5 * h, y, yh1, fresh);
        if (ok) {
            yh2 = yh1;
            ok = newton.solve(t + h, 0.5 * h, yh1, yh2, fresh);
        }
        if (!ok) {
            ++st.newton_failures;
            if (!fresh) {
                newton.refresh_jacobian(t, y);
                continue;
            }
            h *= 0.25;
            if (!cfg.adaptive) step_fail(h, "Newton failure in fixed-step mode");
            continue;
        }
        err = wrms(yh2 - yf, yh2, cfg.rtol, cfg.atol);
        if (cfg.adaptive && err > 1.0) {
            ++st.rejected;
            h *= std::max(kMinShrink, kSafety / std::sqrt(err));
            continue;
        }
        hist.push(t, y, hist_cap);
        hist.push(t + 0.5 * h, yh1, hist_cap);
        t = (next_out < outs.size() && std::abs(outs[next_out] - (t + h)) <= land_eps) ? outs[next_out] : t + h;
        y = yh2;
        hist.push(t, y, hist_cap);
        ++st.steps;
        record(t, y);
        break;
    }
    if (cfg.adaptive) h *= std::min(kMaxGrowth, std::max(kMinShrink, kSafety / std::sqrt(std::max(err, 1e-10))));
    else h = cfg.dt_init;

    // ---- variable-order BDF steps
    int order = std::min(2, cfg.max_order);
    int steps_at_order = 0;
    int fails = 0;
    std::vector<double> nodes;
    std::vector<const Vector*> pts;
    while (next_out < outs.size()) {
        if (st.steps >= cfg.max_steps)
            fail(ErrorKind::StepFailure, "maximum number of steps reached at t = " + std::to_string(t));
        if (cfg.adaptive) h = std::min(h, kMaxGrowth * (hist.t[0] - hist.t[1]));
        h = clip(h);
        if (h < cfg.dt_min) step_fail(h, "step size control");
        const int k = std::min<int>(order, static_cast<int>(hist.size()) - 1);
        const double tn = t + h;

        // corrector: sum_j l_j'(tn) y_j = f(tn, y_0) over nodes {tn, t_0, ..., t_{k-1}}
        nodes.assign(1, tn);
        for (int j = 0; j < k; ++j) nodes.push_back(hist.t[j]);
        const auto d = lagrange_derivative_at_first(nodes);
        const double hb = 1.0 / d[0];
        Vector psi = Vector::Zero(sys.dim);
        for (int j = 1; j <= k; ++j) psi -= (d[j] / d[0]) * hist.y[j - 1];

        // predictor: extrapolation through k + 1 past points
        nodes.assign(hist.t.begin(), hist.t.begin() + k + 1);
        const auto lw = lagrange_weights(nodes, tn);
        Vector pred = Vector::Zero(sys.dim);
        for (int j = 0; j <= k; ++j) pred += lw[j] * hist.y[j];

        Vector ynew = pred;
        bool fresh = false;
        if (!newton.solve(tn, hb, psi, ynew, fresh)) {
            ++st.newton_failures;
            if (!fresh) {
                newton.refresh_jacobian(t, y);
                continue;
            }
            if (!cfg.adaptive) step_fail(h, "Newton failure in fixed-step mode");
            h *= 0.25;
            fails = std::max(fails, 1);
            continue;
        }
        double cc = hb, cp = 1.0;
        for (int j = 1; j <= k; ++j) cc *= tn - hist.t[j - 1];
        for (int j = 0; j <= k; ++j) cp *= tn - hist.t[j];
        err = cc / (cc + cp) * wrms(ynew - pred, ynew, cfg.rtol, cfg.atol);
        if (cfg.adaptive && err > 1.0) {
            ++st.rejected;
            ++fails;
            h *= std::max(kMinShrink, kSafety * std::pow(1.0 / err, 1.0 / (k + 1)));
            if (fails >= 2 && order > 1) {
                order = std::max(1, k - 1);
                steps_at_order = 0;
            }
            continue;
        }

        hist.push(tn, ynew, hist_cap);
        t = (std::abs(outs[next_out] - tn) <= land_eps) ? outs[next_out] : tn;
        hist.t[0] = t;
        y = ynew;
        ++st.steps;
        ++steps_at_order;
        record(t, y);
        newton.mark_stale();

        if (!cfg.adaptive) {
            h = cfg.dt_init;
            if (order < cfg.max_order && static_cast<int>(hist.size()) > order + 1) ++order;
            fails = 0;
            continue;
        }

        // error estimates at orders q = k-1, k, k+1 from divided differences of
        // the history including the new point
        auto estimate = [&](int q) {
            double c = 0.0;
            for (int j = 1; j <= q; ++j) c += 1.0 / (hist.t[0] - hist.t[j]);
            c = 1.0 / c;
            for (int j = 1; j <= q; ++j) c *= hist.t[0] - hist.t[j];
            nodes.assign(hist.t.begin(), hist.t.begin() + q + 2);
            pts.clear();
            for (int j = 0; j < q + 2; ++j) pts.push_back(&hist.y[j]);
            return c * wrms(divided_difference(nodes, pts), y, cfg.rtol, cfg.atol);
        };
        auto factor = [](double e, int q, double bias) {
            return 1.0 / (std::pow(bias * std::max(e, 1e-16), 1.0 / (q + 1)) + 1e-6);
        };
        double best = factor(err, k, 1.2);
        int best_order = k;
        if (fails == 0 && steps_at_order > k) {
            if (k > 1) {
                const double r = factor(estimate(k - 1), k - 1, 1.3);
                if (r > best) {
                    best = r;
                    best_order = k - 1;
                }
            }
            if (k < cfg.max_order && static_cast<int>(hist.size()) >= k + 3) {
                const double r = factor(estimate(k + 1), k + 1, 1.4);
                if (r > best) {
                    best = r;
                    best_order = k + 1;
                }
            }
        }
        if (best_order != order) {
            order = best_order;
            steps_at_order = 0;
        }
        double fac = std::min(fails > 0 ? 1.0 : kMaxGrowth, std::max(kMinShrink, best));
        if (fac > 1.0 && fac < 1.5) fac = 1.0; // keep h, and the factorisation, unless the gain is worth it
        h *= fac;
        fails = 0;
    }
    return traj;
}

} // namespace sem
