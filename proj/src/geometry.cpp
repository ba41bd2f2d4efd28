#include "sem2d/geometry.hpp"

#include "sem2d/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sem {

namespace {

constexpr double kMembershipTol = 1e-10;

std::array<Vec2, 4> comp_corners()
{
    return {Vec2(-1, -1), Vec2(-1, 1), Vec2(1, 1), Vec2(1, -1)};
}

// Collect the nonzeros of `m` into `trips`, shifted by (row0, col0).
void append_triplets(const SpMat& m, int row0, int col0, std::vector<Eigen::Triplet<double>>& trips)
{
    for (int r = 0; r < m.outerSize(); ++r)
        for (SpMat::InnerIterator it(m, r); it; ++it)
            trips.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()), it.value());
}

SpMat vstack(const SpMat& a, const SpMat& b)
{
    std::vector<Eigen::Triplet<double>> trips;
    append_triplets(a, 0, 0, trips);
    append_triplets(b, static_cast<int>(a.rows()), 0, trips);
    SpMat out(a.rows() + b.rows(), a.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SpMat hstack(const SpMat& a, const SpMat& b)
{
    std::vector<Eigen::Triplet<double>> trips;
    append_triplets(a, 0, 0, trips);
    append_triplets(b, 0, static_cast<int>(a.cols()), trips);
    SpMat out(a.rows(), a.cols() + b.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SpMat diag_times(const Vector& d, const SpMat& m) { return d.asDiagonal() * m; }

} // namespace

const char* face_name(FaceId f, CoordSystem cs)
{
    if (cs == CoordSystem::Cartesian) {
        switch (f) {
        case FaceId::Bottom: return "bottom";
        case FaceId::Right: return "right";
        case FaceId::Top: return "top";
        case FaceId::Left: return "left";
        }
    }
    switch (f) {
    case FaceId::Bottom: return "theta_min";
    case FaceId::Right: return "outer";
    case FaceId::Top: return "theta_max";
    case FaceId::Left: return "inner";
    }
    return "?";
}

Element Element::quad(const QuadSpec& spec)
{
    SEM_REQUIRE(spec.n1 >= 2 && spec.n2 >= 2, InvalidArgument, "quadrilateral needs at least 2 nodes per direction");
    Element e;
    e.cs_ = CoordSystem::Cartesian;
    e.n1_ = spec.n1;
    e.n2_ = spec.n2;
    e.corners_ = spec.corners;

    auto corner_dets = [&e] {
        std::array<double, 4> dets{};
        const auto cc = comp_corners();
        for (int k = 0; k < 4; ++k) {
            Eigen::Matrix2d jac;
            e.jacobian(cc[k], jac);
            dets[k] = jac.determinant();
        }
        return dets;
    };

    auto dets = corner_dets();
    const double scale = std::max(e.diameter() * e.diameter(), 1e-300);
    const bool all_neg = std::all_of(dets.begin(), dets.end(), [&](double d) { return d < -1e-12 * scale; });
    if (all_neg) {
        std::swap(e.corners_[1], e.corners_[3]);
        dets = corner_dets();
    }
    const bool all_pos = std::all_of(dets.begin(), dets.end(), [&](double d) { return d > 1e-12 * scale; });
    SEM_REQUIRE(all_pos, InvalidGeometry,
                "quadrilateral is degenerate, non-convex or self-intersecting: " + e.describe());
    return e;
}

Element Element::wedge(const WedgeSpec& spec)
{
    SEM_REQUIRE(spec.n1 >= 2 && spec.n2 >= 2, InvalidArgument, "wedge needs at least 2 nodes per direction");
    SEM_REQUIRE(spec.r_in > 0.0, InvalidGeometry, "wedge inner radius must be positive (full discs are not supported)");
    SEM_REQUIRE(spec.r_in < spec.r_out, InvalidGeometry, "wedge needs r_in < r_out");
    SEM_REQUIRE(spec.th1 < spec.th2, InvalidGeometry, "wedge needs th1 < th2");
    SEM_REQUIRE(spec.th2 - spec.th1 <= 2.0 * std::numbers::pi + 1e-14, InvalidGeometry,
                "wedge opening angle exceeds 2*pi");
    Element e;
    e.cs_ = CoordSystem::Polar;
    e.n1_ = spec.n1;
    e.n2_ = spec.n2;
    e.wedge_ = spec;
    return e;
}

int Element::face_size(FaceId f) const
{
    return (f == FaceId::Bottom || f == FaceId::Top) ? n1_ : n2_;
}

void Element::jacobian(const Vec2& comp, Eigen::Matrix2d& jac) const
{
    const double s = comp[0];
    const double t = comp[1];
    const auto& c = corners_;
    const Vec2 dxs = 0.25 * (-(1 - t) * c[0] - (1 + t) * c[1] + (1 + t) * c[2] + (1 - t) * c[3]);
    const Vec2 dxt = 0.25 * (-(1 - s) * c[0] + (1 - s) * c[1] + (1 + s) * c[2] - (1 + s) * c[3]);
    jac.col(0) = dxs;
    jac.col(1) = dxt;
}

Vec2 Element::map_to_physical(const Vec2& comp) const
{
    const double s = comp[0];
    const double t = comp[1];
    if (cs_ == CoordSystem::Cartesian) {
        const auto& c = corners_;
        return 0.25 * ((1 - s) * (1 - t) * c[0] + (1 - s) * (1 + t) * c[1] + (1 + s) * (1 + t) * c[2] +
                       (1 + s) * (1 - t) * c[3]);
    }
    const auto& w = wedge_;
    return Vec2(w.r_in + 0.5 * (s + 1.0) * (w.r_out - w.r_in), w.th1 + 0.5 * (t + 1.0) * (w.th2 - w.th1));
}

Vec2 Element::to_cartesian(const Vec2& native) const
{
    if (cs_ == CoordSystem::Cartesian) return native;
    return wedge_.origin + native[0] * Vec2(std::cos(native[1]), std::sin(native[1]));
}

std::optional<Vec2> Element::inverse_map(const Vec2& cart, double tol) const
{
    SEM_REQUIRE(tol > 0.0, InvalidArgument, "inverse_map tolerance must be positive");
    const double lim = 1.0 + kMembershipTol;
    auto inside = [lim](const Vec2& c) { return std::abs(c[0]) <= lim && std::abs(c[1]) <= lim; };

    if (cs_ == CoordSystem::Polar) {
        const auto& w = wedge_;
        const Vec2 d = cart - w.origin;
        const double r = d.norm();
        double th = std::atan2(d[1], d[0]);
        // angle branch centred on the wedge so any opening up to 2*pi is covered
        const double centre = 0.5 * (w.th1 + w.th2);
        th = centre + std::remainder(th - centre, 2.0 * std::numbers::pi);
        const Vec2 comp(2.0 * (r - w.r_in) / (w.r_out - w.r_in) - 1.0, 2.0 * (th - w.th1) / (w.th2 - w.th1) - 1.0);
        if (!inside(comp)) return std::nullopt;
        return comp;
    }

    const double diam = diameter();
    Vec2 lo = corners_[0];
    Vec2 hi = corners_[0];
    for (const auto& c : corners_) {
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    const double margin = kMembershipTol * diam;
    if ((cart.array() < lo.array() - margin).any() || (cart.array() > hi.array() + margin).any()) return std::nullopt;

    Vec2 comp = Vec2::Zero();
    for (int it = 0; it < 50; ++it) {
        const Vec2 res = map_to_physical(comp) - cart;
        if (res.norm() <= tol * diam) {
            if (!inside(comp)) return std::nullopt;
            return comp;
        }
        Eigen::Matrix2d jac;
        jacobian(comp, jac);
        comp -= jac.inverse() * res;
        if (comp.cwiseAbs().maxCoeff() > 1e3) return std::nullopt;
    }
    fail(ErrorKind::NumericFailure, "inverse bilinear map did not converge for point (" + std::to_string(cart[0]) +
                                        ", " + std::to_string(cart[1]) + ") in " + describe());
}

Eigen::Matrix2d Element::local_to_cartesian(const Vec2& native) const
{
    if (cs_ == CoordSystem::Cartesian) return Eigen::Matrix2d::Identity();
    const double c = std::cos(native[1]);
    const double s = std::sin(native[1]);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    return rot;
}

ElementGrid Element::grid() const
{
    const NodeSet1D ns1 = NodeSet1D::cheb_lobatto(n1_);
    const NodeSet1D ns2 = NodeSet1D::cheb_lobatto(n2_);
    const int n = size();
    ElementGrid g;
    g.coord_system = cs_;
    g.phys_points.resize(n, 2);
    g.cart_points.resize(n, 2);
    for (int i1 = 0; i1 < n1_; ++i1)
        for (int i2 = 0; i2 < n2_; ++i2) {
            const int k = i1 * n2_ + i2;
            const Vec2 comp(ns1.nodes()[i1], ns2.nodes()[i2]);
            const Vec2 p = map_to_physical(comp);
            g.phys_points.row(k) = p.transpose();
            g.cart_points.row(k) = to_cartesian(p).transpose();
        }

    auto normal_at = [&](int k, FaceId f) -> Vec2 {
        const int i1 = k / n2_;
        const int i2 = k % n2_;
        const Vec2 comp(ns1.nodes()[i1], ns2.nodes()[i2]);
        if (cs_ == CoordSystem::Polar) {
            const double th = map_to_physical(comp)[1];
            const Vec2 rhat(std::cos(th), std::sin(th));
            const Vec2 that(-std::sin(th), std::cos(th));
            switch (f) {
            case FaceId::Right: return rhat;
            case FaceId::Left: return -rhat;
            case FaceId::Top: return that;
            case FaceId::Bottom: return -that;
            }
        }
        Eigen::Matrix2d jac;
        jacobian(comp, jac);
        Vec2 nrm;
        // contravariant directions grad(xi1), grad(xi2) up to the positive factor 1/det
        if (f == FaceId::Right || f == FaceId::Left)
            nrm = Vec2(jac(1, 1), -jac(0, 1));
        else
            nrm = Vec2(-jac(1, 0), jac(0, 0));
        if (f == FaceId::Left || f == FaceId::Bottom) nrm = -nrm;
        return nrm.normalized();
    };

    auto fill_face = [&](FaceId f, auto index_of, int count) {
        Face& face = g.faces[static_cast<int>(f)];
        for (int m = 0; m < count; ++m) {
            const int k = index_of(m);
            face.nodes.push_back(k);
            face.normals.push_back(normal_at(k, f));
        }
    };
    const int n1 = n1_;
    const int n2 = n2_;
    fill_face(FaceId::Bottom, [n2](int m) { return m * n2 + n2 - 1; }, n1);
    fill_face(FaceId::Right, [](int m) { return m; }, n2);
    fill_face(FaceId::Top, [n2](int m) { return m * n2; }, n1);
    fill_face(FaceId::Left, [n1, n2](int m) { return (n1 - 1) * n2 + m; }, n2);
    return g;
}

ElementOperators Element::operators() const
{
    const NodeSet1D ns1 = NodeSet1D::cheb_lobatto(n1_);
    const NodeSet1D ns2 = NodeSet1D::cheb_lobatto(n2_);
    const Matrix d1 = diff_matrix(ns1, 1);
    const Matrix d2 = diff_matrix(ns2, 1);
    const Matrix dd1 = diff_matrix(ns1, 2);
    const Matrix dd2 = diff_matrix(ns2, 2);
    const Matrix i1 = Matrix::Identity(n1_, n1_);
    const Matrix i2 = Matrix::Identity(n2_, n2_);
    const SpMat ds = tensor2d_sparse(d1, i2);
    const SpMat dt = tensor2d_sparse(i1, d2);
    const SpMat dss = tensor2d_sparse(dd1, i2);
    const SpMat dtt = tensor2d_sparse(i1, dd2);
    const RowVector w1 = clenshaw_curtis_weights(ns1);
    const RowVector w2 = clenshaw_curtis_weights(ns2);
    const int n = size();

    RowVector wts(n);
    for (int a = 0; a < n1_; ++a)
        for (int b = 0; b < n2_; ++b) wts[a * n2_ + b] = w1[a] * w2[b];

    ElementOperators ops;
    ops.coord_system = cs_;

    if (cs_ == CoordSystem::Polar) {
        const auto& w = wedge_;
        const double hr = 0.5 * (w.r_out - w.r_in);
        const double ht = 0.5 * (w.th2 - w.th1);
        Vector r(n);
        for (int a = 0; a < n1_; ++a)
            for (int b = 0; b < n2_; ++b) r[a * n2_ + b] = w.r_in + (ns1.nodes()[a] + 1.0) * hr;
        const Vector rinv = r.cwiseInverse();
        const SpMat dr = ds / hr;
        const SpMat dth = dt / ht;
        const SpMat drr = dss / (hr * hr);
        const SpMat dthth = dtt / (ht * ht);
        const SpMat dth_r = diag_times(rinv, dth);
        ops.grad = vstack(dr, dth_r);
        const SpMat div_r = SpMat(rinv.asDiagonal() * dr * r.asDiagonal());
        ops.div = hstack(div_r, dth_r);
        ops.lap = SpMat(drr + diag_times(rinv, dr) + diag_times(rinv.cwiseAbs2(), dthth));
        ops.int_row = wts.cwiseProduct(r.transpose()) * (hr * ht);
        return ops;
    }

    // Quadrilateral: chain rule through the bilinear map.
    Vector a11(n), a12(n), a21(n), a22(n), det(n);
    for (int a = 0; a < n1_; ++a)
        for (int b = 0; b < n2_; ++b) {
            const int k = a * n2_ + b;
            Eigen::Matrix2d jac;
            jacobian(Vec2(ns1.nodes()[a], ns2.nodes()[b]), jac);
            const double dj = jac.determinant();
            det[k] = dj;
            a11[k] = jac(1, 1) / dj;  // d xi1 / d x1
            a12[k] = -jac(0, 1) / dj; // d xi1 / d x2
            a21[k] = -jac(1, 0) / dj; // d xi2 / d x1
            a22[k] = jac(0, 0) / dj;  // d xi2 / d x2
        }
    const SpMat dx1 = SpMat(diag_times(a11, ds) + diag_times(a21, dt));
    const SpMat dx2 = SpMat(diag_times(a12, ds) + diag_times(a22, dt));
    ops.grad = vstack(dx1, dx2);
    ops.div = hstack(dx1, dx2);

    const auto& c = corners_;
    const bool affine = ((c[0] + c[2]) - (c[1] + c[3])).norm() <= 1e-14 * diameter();
    if (affine) {
        // constant metric: use the dedicated second-derivative matrices
        const double c11 = a11[0] * a11[0] + a12[0] * a12[0];
        const double c22 = a21[0] * a21[0] + a22[0] * a22[0];
        const double c12 = a11[0] * a21[0] + a12[0] * a22[0];
        SpMat lap = c11 * dss + c22 * dtt;
        if (c12 != 0.0) lap += 2.0 * c12 * tensor2d_sparse(d1, d2);
        ops.lap = lap;
    } else {
        ops.lap = SpMat(dx1 * dx1 + dx2 * dx2);
    }
    ops.int_row = wts.cwiseProduct(det.transpose());
    return ops;
}

double Element::area() const
{
    if (cs_ == CoordSystem::Polar) {
        const auto& w = wedge_;
        return 0.5 * (w.th2 - w.th1) * (w.r_out * w.r_out - w.r_in * w.r_in);
    }
    double a = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Vec2& p = corners_[k];
        const Vec2& q = corners_[(k + 1) % 4];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * std::abs(a);
}

double Element::diameter() const
{
    std::vector<Vec2> pts;
    if (cs_ == CoordSystem::Cartesian) {
        pts.assign(corners_.begin(), corners_.end());
    } else {
        for (int a = 0; a <= 8; ++a)
            for (double s : {-1.0, 1.0}) pts.push_back(map_to_cartesian(Vec2(s, -1.0 + a / 4.0)));
    }
    double d = 0.0;
    for (const auto& p : pts)
        for (const auto& q : pts) d = std::max(d, (p - q).norm());
    return d;
}

std::string Element::describe() const
{
    std::ostringstream os;
    os.precision(6);
    if (cs_ == CoordSystem::Cartesian) {
        os << "quad[";
        for (int k = 0; k < 4; ++k) os << (k ? " " : "") << "(" << corners_[k][0] << "," << corners_[k][1] << ")";
        os << "] n=(" << n1_ << "," << n2_ << ")";
    } else {
        const auto& w = wedge_;
        os << "wedge[r=" << w.r_in << ".." << w.r_out << " th=" << w.th1 << ".." << w.th2 << " origin=("
           << w.origin[0] << "," << w.origin[1] << ")] n=(" << n1_ << "," << n2_ << ")";
    }
    return os.str();
}

} // namespace sem
