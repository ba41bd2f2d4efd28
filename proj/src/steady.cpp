#include "sem2d/steady.hpp"

#include "sem2d/convolution.hpp"
#include "sem2d/csv.hpp"
#include "sem2d/error.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <numbers>

namespace sem {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kReg = 1e-10;

double l2_norm(const Vector& v, const MultiShape& ms)
{
    const int m = ms.size();
    Vector sq;
    if (v.size() == m)
        sq = v.cwiseAbs2();
    else
        sq = v.head(m).cwiseAbs2() + v.tail(m).cwiseAbs2();
    return std::sqrt(std::max(0.0, ms.int_row().dot(sq.transpose())));
}

Element box_el(double a, double b, double c, double d, int n1, int n2)
{
    return Element::quad({{Vec2(a, c), Vec2(a, d), Vec2(b, d), Vec2(b, c)}, n1, n2});
}

Element wedge_el(double r0, double r1, double t0, double t1, Vec2 origin, int n1, int n2)
{
    WedgeSpec w;
    w.r_in = r0;
    w.r_out = r1;
    w.th1 = t0;
    w.th2 = t1;
    w.origin = origin;
    w.n1 = n1;
    w.n2 = n2;
    return Element::wedge(w);
}

int share(int n, int k) { return std::max(2, static_cast<int>(std::lround(static_cast<double>(n) / k))); }

} // namespace

double error_measure(const Vector& num, const Vector& ex, const MultiShape& ms)
{
    SEM_REQUIRE(num.size() == ex.size(), InvalidArgument, "error_measure: length mismatch");
    SEM_REQUIRE(num.size() == ms.size() || num.size() == 2 * ms.size(), InvalidArgument,
                "error_measure: field length must be M or 2M");
    return l2_norm(num - ex, ms) / (l2_norm(ex, ms) + kReg);
}

double error_measure_linf(const Vector& num, const Vector& ex)
{
    SEM_REQUIRE(num.size() == ex.size(), InvalidArgument, "error_measure_linf: length mismatch");
    if (num.size() == 0) return 0.0;
    return (num - ex).cwiseAbs().maxCoeff() / (ex.cwiseAbs().maxCoeff() + kReg);
}

double error_measure_abs(double num, double ex) { return std::abs(num - ex) / (std::abs(ex) + kReg); }

Vector solve_poisson(const MultiShape& ms, const Vector& f, const Vector& g)
{
    const int m = ms.size();
    const auto& bound = ms.bound();
    SEM_REQUIRE(f.size() == m, InvalidArgument, "solve_poisson: f must have length M");
    SEM_REQUIRE(g.size() == m || g.size() == static_cast<Eigen::Index>(bound.size()), InvalidArgument,
                "solve_poisson: g must have length M or |bound|");

    Matrix a = Matrix(ms.lap());
    Vector rhs = f;
    const Matrix id = Matrix::Identity(m, m);
    const Matrix grad = Matrix(ms.grad());
    ms.apply_intersection_bcs_matrix(a, id, grad);
    Matrix rhs_m = rhs;
    ms.apply_intersection_bcs_matrix(rhs_m, Matrix::Zero(m, 1), Matrix::Zero(2 * m, 1));
    rhs = rhs_m.col(0);
    for (std::size_t b = 0; b < bound.size(); ++b) {
        const int k = bound[b];
        a.row(k).setZero();
        a(k, k) = 1.0;
        rhs[k] = g.size() == m ? g[k] : g[static_cast<int>(b)];
    }
    // row equilibration: PDE rows scale like n^4 while boundary rows are O(1)
    const Vector scale = a.rowwise().lpNorm<Eigen::Infinity>().cwiseMax(1e-300).cwiseInverse();
    a = scale.asDiagonal() * a;
    rhs = scale.cwiseProduct(rhs);
    const Eigen::PartialPivLU<Matrix> lu(a);
    const double rc = lu.rcond();
    SEM_REQUIRE(rc > 1e-15 && std::isfinite(rc), NumericFailure,
                "Poisson system is singular (reciprocal condition estimate " + std::to_string(rc) + ")");
    return lu.solve(rhs);
}

namespace testfn {

namespace {

struct G1Parts {
    double g, d1, d2;
};

G1Parts g1_parts(double s)
{
    const double u = s - 1.0;
    const double e = std::exp(-u * u / 20.0);
    const double e1 = -u / 10.0 * e;
    const double e2 = (u * u / 100.0 - 0.1) * e;
    const double sn = std::sin(s / 4.0);
    const double s1 = std::cos(s / 4.0) / 4.0;
    const double s2 = -sn / 16.0;
    return {e * sn, e1 * sn + e * s1, e2 * sn + 2.0 * e1 * s1 + e * s2};
}

} // namespace

double g1(double x1, double x2) { return g1_parts(x1 * x2).g; }

Vec2 grad_g1(double x1, double x2)
{
    const double d = g1_parts(x1 * x2).d1;
    return Vec2(x2 * d, x1 * d);
}

double lap_g1(double x1, double x2) { return (x1 * x1 + x2 * x2) * g1_parts(x1 * x2).d2; }

double g2(double x1, double x2) { return std::exp(-x1 * x1 - x2 * x2); }

double chi_c(double d1, double d2) { return std::exp((d1 * d1 - d2 * d2) / 10.0); }
double n_c(double z1, double z2) { return z1 * z1 + z1 * z2; }
double chi_p(double d1, double d2) { return std::exp(d1 + d2); }
double n_p(double z1, double z2) { return std::exp(-z1 * z1 - z2 * z2 + z1 + z2); }

double poisson_u(double x1, double x2)
{
    return std::exp(-0.5 * (x1 - 0.5) * (x1 - 0.5) - 0.5 * (x2 - 0.5) * (x2 - 0.5));
}

double poisson_f(double x1, double x2)
{
    return ((x1 * x1 - x1 - 0.75) + (x2 * x2 - x2 - 0.75)) * poisson_u(x1, x2);
}

} // namespace testfn

void gauss_legendre(int n, double a, double b, Vector& nodes, Vector& weights)
{
    SEM_REQUIRE(n >= 1, InvalidArgument, "Gauss-Legendre rule needs n >= 1");
    Matrix jac = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = beta;
        jac(k - 1, k) = beta;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
    const double h = 0.5 * (b - a);
    nodes = (es.eigenvalues().array() + 1.0) * h + a;
    weights = 2.0 * es.eigenvectors().row(0).transpose().array().square() * h;
}

bool is_box_case(const std::string& c) { return c == "a" || c == "b" || c == "c" || c == "d"; }

MultiShape make_validation_multishape(const std::string& c, int n, PointSplit split)
{
    SEM_REQUIRE(n >= 2, InvalidArgument, "N_Sigma must be at least 2");
    std::vector<Element> els;
    const Vec2 o(0, 0);
    const double q = kPi / 2;
    if (c == "a") {
        els.push_back(box_el(0, 2, 0, 2, n, n));
    } else if (c == "b") {
        els.push_back(box_el(0, 0.5, 0, 2, share(n, 2), n));
        els.push_back(box_el(0.5, 2, 0, 2, share(n, 2), n));
    } else if (c == "c") {
        const double t = 2.0 / 3.0;
        for (int k = 0; k < 3; ++k) els.push_back(box_el(k * t, (k + 1) * t, 0, 2, share(n, 3), n));
    } else if (c == "d") {
        const int h = share(n, 2);
        els.push_back(box_el(0, 1, 0, 1, h, h));
        els.push_back(box_el(1, 2, 0, 1, h, h));
        els.push_back(box_el(0, 1, 1, 2, h, h));
        els.push_back(box_el(1, 2, 1, 2, h, h));
    } else if (c == "e") {
        els.push_back(wedge_el(1, 2, 0, q, o, n, n));
    } else if (c == "f") {
        els.push_back(wedge_el(1, 1.5, 0, q, o, share(n, 2), n));
        els.push_back(wedge_el(1.5, 2, 0, q, o, share(n, 2), n));
    } else if (c == "g") {
        els.push_back(wedge_el(1, 2, 0, q / 2, o, n, share(n, 2)));
        els.push_back(wedge_el(1, 2, q / 2, q, o, n, share(n, 2)));
    } else if (c == "h") {
        for (int k = 0; k < 3; ++k) els.push_back(wedge_el(1, 2, k * q / 3, (k + 1) * q / 3, o, n, share(n, 3)));
    } else if (c == "fig1") {
        int n1 = share(n, 2);
        int n2 = share(n, 2);
        if (split == PointSplit::HalfFirst) n1 = share(n, 4);
        if (split == PointSplit::HalfSecond) n2 = share(n, 4);
        els.push_back(box_el(0, 3, 0, 3, n1, n2));
        els.push_back(wedge_el(1, 4, 0, kPi, Vec2(4, 3), n1, n2));
    } else {
        fail(ErrorKind::ConfigError, "unknown validation case '" + c + "' (expected a-h or fig1)");
    }
    return MultiShape::build(std::move(els));
}

double exact_int_g2(const std::string& c)
{
    if (is_box_case(c)) {
        const double one = 0.5 * std::sqrt(kPi) * std::erf(2.0);
        return one * one;
    }
    if (c == "fig1") fail(ErrorKind::InvalidArgument, "no closed-form g2 integral for fig1");
    return 0.5 * (kPi / 2) * (std::exp(-1.0) - std::exp(-4.0));
}

Vector reference_convolution(const std::string& c, const MultiShape& ms)
{
    const int m = ms.size();
    Vector out(m);
    if (is_box_case(c)) {
        // chi_C(y - z) n_C(z) = e^{(y1-z1)^2/10} e^{-(y2-z2)^2/10} (z1^2 + z1 z2): separable
        Vector z, w;
        gauss_legendre(60, 0.0, 2.0, z, w);
        for (int k = 0; k < m; ++k) {
            const double y1 = ms.cart_points()(k, 0);
            const double y2 = ms.cart_points()(k, 1);
            double a1 = 0, a2 = 0, b0 = 0, b1 = 0;
            for (int q = 0; q < z.size(); ++q) {
                const double ea = w[q] * std::exp((y1 - z[q]) * (y1 - z[q]) / 10.0);
                const double eb = w[q] * std::exp(-(y2 - z[q]) * (y2 - z[q]) / 10.0);
                a1 += ea * z[q];
                a2 += ea * z[q] * z[q];
                b0 += eb;
                b1 += eb * z[q];
            }
            out[k] = a2 * b0 + a1 * b1;
        }
        return out;
    }
    const double ig2 = exact_int_g2(c);
    for (int k = 0; k < m; ++k) out[k] = std::exp(ms.cart_points()(k, 0) + ms.cart_points()(k, 1)) * ig2;
    return out;
}

double validation_error(const std::string& c, const std::string& op, int n, PointSplit split)
{
    const MultiShape ms = make_validation_multishape(c, n, split);
    const int m = ms.size();
    const bool box = is_box_case(c);

    if (op == "lap") {
        return error_measure(ms.lap() * ms.evaluate(testfn::g1), ms.evaluate(testfn::lap_g1), ms);
    }
    if (op == "grad" || op == "div") {
        Vector ex_cart(2 * m);
        for (int k = 0; k < m; ++k) {
            const Vec2 gr = testfn::grad_g1(ms.cart_points()(k, 0), ms.cart_points()(k, 1));
            ex_cart[k] = gr[0];
            ex_cart[m + k] = gr[1];
        }
        const Vector ex_local = ms.cartesian_to_local() * ex_cart;
        if (op == "grad") return error_measure(ms.grad() * ms.evaluate(testfn::g1), ex_local, ms);
        return error_measure(ms.div() * ex_local, ms.evaluate(testfn::lap_g1), ms);
    }
    if (op == "interp") {
        const Matrix& x = ms.cart_points();
        const Vec2 lo = x.colwise().minCoeff().transpose();
        const Vec2 hi = x.colwise().maxCoeff().transpose();
        constexpr int nu = 50;
        Matrix t(nu * nu, 2);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nu; ++j) {
                t(i * nu + j, 0) = lo[0] + (hi[0] - lo[0]) * i / (nu - 1.0);
                t(i * nu + j, 1) = lo[1] + (hi[1] - lo[1]) * j / (nu - 1.0);
            }
        std::vector<char> inside;
        const SpMat p = ms.interpolation(t, &inside);
        const Vector num = p * ms.evaluate(testfn::g1);
        std::vector<double> a, b;
        for (int k = 0; k < nu * nu; ++k)
            if (inside[k]) {
                a.push_back(num[k]);
                b.push_back(testfn::g1(t(k, 0), t(k, 1)));
            }
        return error_measure_linf(Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size())),
                                  Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    if (op == "int") {
        const double num = ms.int_row().dot(ms.evaluate(testfn::g2).transpose());
        return error_measure_abs(num, exact_int_g2(c));
    }
    if (op == "conv") {
        const Kernel k = box ? Kernel::displacement(testfn::chi_c, "chi_c") : Kernel::displacement(testfn::chi_p, "chi_p");
        const Vector dens = ms.evaluate(box ? testfn::n_c : testfn::n_p);
        return error_measure(convolution_matrix(ms, k) * dens, reference_convolution(c, ms), ms);
    }
    if (op == "poisson") {
        const Vector u = ms.evaluate(testfn::poisson_u);
        return error_measure(solve_poisson(ms, ms.evaluate(testfn::poisson_f), u), u, ms);
    }
    fail(ErrorKind::ConfigError, "unknown validation operator '" + op + "'");
}

namespace {

bool too_coarse_for_poisson(const std::string& c, int n)
{
    const MultiShape ms = make_validation_multishape(c, n);
    for (const auto& e : ms.elements())
        if (e.n1() < 3 || e.n2() < 3) return true;
    return false;
}

} // namespace

std::vector<ValidationRow> run_validation_suite(const ValidationOptions& opt)
{
    using clock = std::chrono::steady_clock;
    std::vector<ValidationRow> rows;
    for (const auto& c : opt.cases)
        for (const auto& op : opt.operators)
            for (int n : opt.n_sigma) {
                // an element without interior nodes leaves the Poisson system without PDE rows
                if (op == "poisson" && too_coarse_for_poisson(c, n)) continue;
                const auto t0 = clock::now();
                const double err = validation_error(c, op, n);
                const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
                rows.push_back({c, op, n, err, ms});
            }
    if (opt.fig1_timing) {
        const std::pair<const char*, PointSplit> variants[] = {
            {"fig1_equal", PointSplit::Equal}, {"fig1_half_first", PointSplit::HalfFirst},
            {"fig1_half_second", PointSplit::HalfSecond}};
        for (const auto& [name, split] : variants)
            for (int n : opt.fig1_n) {
                const auto t0 = clock::now();
                const double err = validation_error("fig1", "poisson", n, split);
                const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
                rows.push_back({name, "poisson", n, err, ms});
            }
    }
    return rows;
}

void write_validation_csv(const std::filesystem::path& path, const std::vector<ValidationRow>& rows)
{
    CsvWriter w(path, {"case", "operator", "N_Sigma", "error", "wall_ms"});
    for (const auto& r : rows) w.row({r.case_id, r.op, static_cast<long long>(r.n_sigma), r.error, r.wall_ms});
}

} // namespace sem
