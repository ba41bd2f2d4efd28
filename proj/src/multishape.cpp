#include "sem2d/multishape.hpp"

#include "sem2d/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace sem {

namespace {

std::string pt_str(const Vec2& p)
{
    std::ostringstream os;
    os.precision(10);
    os << "(" << p[0] << ", " << p[1] << ")";
    return os.str();
}

std::vector<Vec2> face_points(const Element& e, const ElementGrid& g, FaceId f)
{
    (void)e;
    std::vector<Vec2> pts;
    for (int k : g.faces[static_cast<int>(f)].nodes) pts.emplace_back(g.cart_points(k, 0), g.cart_points(k, 1));
    return pts;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a)
    {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

constexpr std::array<FaceId, 4> kFaces{FaceId::Bottom, FaceId::Right, FaceId::Top, FaceId::Left};

} // namespace

std::vector<IntersectionSpec> detect_intersections(const std::vector<Element>& elements, double tol)
{
    SEM_REQUIRE(tol > 0.0, InvalidArgument, "intersection tolerance must be positive");
    std::vector<ElementGrid> grids;
    grids.reserve(elements.size());
    for (const auto& e : elements) grids.push_back(e.grid());

    std::vector<IntersectionSpec> out;
    const int ne = static_cast<int>(elements.size());
    for (int i = 0; i < ne; ++i)
        for (int j = i + 1; j < ne; ++j)
            for (FaceId fk : kFaces)
                for (FaceId fl : kFaces) {
                    const auto pk = face_points(elements[i], grids[i], fk);
                    const auto pl = face_points(elements[j], grids[j], fl);
                    std::vector<int> hits;
                    for (std::size_t a = 0; a < pk.size(); ++a)
                        for (const auto& q : pl)
                            if ((pk[a] - q).norm() <= tol) {
                                hits.push_back(static_cast<int>(a));
                                break;
                            }
                    if (hits.size() < 2) continue;

                    const std::string where = "element " + std::to_string(i) + " face '" +
                                              face_name(fk, elements[i].coord_system()) + "' and element " +
                                              std::to_string(j) + " face '" +
                                              face_name(fl, elements[j].coord_system()) + "'";
                    if (pk.size() != pl.size())
                        fail(ErrorKind::ConfigError, "mismatched face node counts (" + std::to_string(pk.size()) +
                                                         " vs " + std::to_string(pl.size()) + ") between " + where);
                    const std::size_t n = pk.size();
                    bool same = true;
                    bool rev = true;
                    for (std::size_t a = 0; a < n; ++a) {
                        same = same && (pk[a] - pl[a]).norm() <= tol;
                        rev = rev && (pk[a] - pl[n - 1 - a]).norm() <= tol;
                    }
                    if (!same && !rev) {
                        std::string msg = "partial overlap between " + where + "; unmatched nodes of element " +
                                          std::to_string(i) + ":";
                        for (std::size_t a = 0; a < n; ++a)
                            if (std::find(hits.begin(), hits.end(), static_cast<int>(a)) == hits.end())
                                msg += " " + pt_str(pk[a]);
                        fail(ErrorKind::ConfigError, msg);
                    }
                    IntersectionSpec s;
                    s.elem_i = i;
                    s.elem_j = j;
                    s.face_k = fk;
                    s.face_l = fl;
                    s.reversed = !same;
                    out.push_back(s);
                }
    return out;
}

MultiShape MultiShape::build(std::vector<Element> elements, const BuildOptions& options)
{
    SEM_REQUIRE(!elements.empty(), InvalidArgument, "a multishape needs at least one element");
    MultiShape ms;
    ms.elements_ = std::move(elements);
    const int ne = ms.num_elements();

    int m = 0;
    for (const auto& e : ms.elements_) {
        ms.offsets_.push_back(m);
        m += e.size();
    }
    ms.m_ = m;
    ms.owner_.resize(m);
    ms.native_pts_.resize(m, 2);
    ms.cart_pts_.resize(m, 2);
    ms.int_.resize(m);

    std::vector<Eigen::Triplet<double>> tg, td, tl, tc;
    for (int e = 0; e < ne; ++e) {
        const Element& el = ms.elements_[e];
        ms.grids_.push_back(el.grid());
        const ElementGrid& g = ms.grids_.back();
        const ElementOperators ops = el.operators();
        const int off = ms.offsets_[e];
        const int n = el.size();
        for (int k = 0; k < n; ++k) ms.owner_[off + k] = e;
        ms.native_pts_.middleRows(off, n) = g.phys_points;
        ms.cart_pts_.middleRows(off, n) = g.cart_points;
        ms.int_.segment(off, n) = ops.int_row;

        auto vec_index = [m, off, n](int r) { return r < n ? off + r : m + off + (r - n); };
        for (int r = 0; r < ops.grad.outerSize(); ++r)
            for (SpMat::InnerIterator it(ops.grad, r); it; ++it)
                tg.emplace_back(vec_index(static_cast<int>(it.row())), off + static_cast<int>(it.col()), it.value());
        for (int r = 0; r < ops.div.outerSize(); ++r)
            for (SpMat::InnerIterator it(ops.div, r); it; ++it)
                td.emplace_back(off + static_cast<int>(it.row()), vec_index(static_cast<int>(it.col())), it.value());
        for (int r = 0; r < ops.lap.outerSize(); ++r)
            for (SpMat::InnerIterator it(ops.lap, r); it; ++it)
                tl.emplace_back(off + static_cast<int>(it.row()), off + static_cast<int>(it.col()), it.value());
        for (int k = 0; k < n; ++k) {
            const Eigen::Matrix2d rot = el.local_to_cartesian(g.phys_points.row(k).transpose());
            const int gk = off + k;
            tc.emplace_back(gk, gk, rot(0, 0));
            tc.emplace_back(gk, m + gk, rot(0, 1));
            tc.emplace_back(m + gk, gk, rot(1, 0));
            tc.emplace_back(m + gk, m + gk, rot(1, 1));
        }
    }
    ms.grad_.resize(2 * m, m);
    ms.grad_.setFromTriplets(tg.begin(), tg.end());
    ms.div_.resize(m, 2 * m);
    ms.div_.setFromTriplets(td.begin(), td.end());
    ms.lap_.resize(m, m);
    ms.lap_.setFromTriplets(tl.begin(), tl.end());
    ms.to_cart_.resize(2 * m, 2 * m);
    ms.to_cart_.setFromTriplets(tc.begin(), tc.end());
    ms.from_cart_ = SpMat(ms.to_cart_.transpose());

    const Vec2 lo = ms.cart_pts_.colwise().minCoeff().transpose();
    const Vec2 hi = ms.cart_pts_.colwise().maxCoeff().transpose();
    ms.diameter_ = (hi - lo).norm();

    // intersections
    ms.specs_ = detect_intersections(ms.elements_, options.match_tol * ms.diameter_);
    for (auto& s : ms.specs_)
        for (const auto& flag : options.conditions) {
            const int a = std::min(flag.elem_a, flag.elem_b);
            const int b = std::max(flag.elem_a, flag.elem_b);
            if (a == s.elem_i && b == s.elem_j) s.condition = flag.condition;
        }
    for (const auto& flag : options.conditions) {
        const int a = std::min(flag.elem_a, flag.elem_b);
        const int b = std::max(flag.elem_a, flag.elem_b);
        const bool found = std::any_of(ms.specs_.begin(), ms.specs_.end(),
                                       [&](const IntersectionSpec& s) { return s.elem_i == a && s.elem_j == b; });
        SEM_REQUIRE(found, ConfigError,
                    "interface condition given for elements " + std::to_string(a) + " and " + std::to_string(b) +
                        ", which do not intersect");
    }

    std::vector<std::array<bool, 4>> face_used(ne, {false, false, false, false});
    for (const auto& s : ms.specs_) {
        face_used[s.elem_i][static_cast<int>(s.face_k)] = true;
        face_used[s.elem_j][static_cast<int>(s.face_l)] = true;
        Intersection inter;
        inter.spec = s;
        const Face& fk = ms.grids_[s.elem_i].faces[static_cast<int>(s.face_k)];
        const Face& fl = ms.grids_[s.elem_j].faces[static_cast<int>(s.face_l)];
        const int n = static_cast<int>(fk.nodes.size());
        for (int a = 0; a < n; ++a) {
            const int b = s.reversed ? n - 1 - a : a;
            inter.nodes_i.push_back(ms.offsets_[s.elem_i] + fk.nodes[a]);
            inter.nodes_j.push_back(ms.offsets_[s.elem_j] + fl.nodes[b]);
            inter.normals_i.push_back(fk.normals[a]);
            inter.normals_j.push_back(fl.normals[b]);
        }
        ms.intersections_.push_back(std::move(inter));
    }

    std::set<int> bound;
    std::set<int> inter_all;
    for (int e = 0; e < ne; ++e)
        for (FaceId f : kFaces) {
            const Face& face = ms.grids_[e].faces[static_cast<int>(f)];
            for (int k : face.nodes) {
                if (face_used[e][static_cast<int>(f)])
                    inter_all.insert(ms.offsets_[e] + k);
                else
                    bound.insert(ms.offsets_[e] + k);
            }
        }
    ms.bound_.assign(bound.begin(), bound.end());
    for (int g : inter_all)
        if (!bound.count(g)) ms.inter_nodes_.push_back(g);

    // per-node coefficients R^T n for the flux-matching rows
    auto coef = [&ms](int g, const Vec2& nrm) -> Vec2 {
        const Element& el = ms.elements_[ms.owner_[g]];
        const Eigen::Matrix2d rot = el.local_to_cartesian(ms.native_pts_.row(g).transpose());
        return rot.transpose() * nrm;
    };
    for (const auto& inter : ms.intersections_) {
        std::vector<Vec2> ci, cj;
        for (std::size_t a = 0; a < inter.nodes_i.size(); ++a) {
            ci.push_back(coef(inter.nodes_i[a], inter.normals_i[a]));
            cj.push_back(coef(inter.nodes_j[a], inter.normals_j[a]));
        }
        ms.coef_i_.push_back(std::move(ci));
        ms.coef_j_.push_back(std::move(cj));
    }

    ms.build_normals(options);
    return ms;
}

void MultiShape::build_normals(const BuildOptions& options)
{
    // group coincident nodes through the intersection correspondences
    UnionFind uf(m_);
    for (const auto& inter : intersections_)
        for (std::size_t a = 0; a < inter.nodes_i.size(); ++a) uf.unite(inter.nodes_i[a], inter.nodes_j[a]);

    // normals of boundary faces (faces not part of any intersection) per node
    std::vector<std::vector<Vec2>> node_normals(m_);
    std::set<std::pair<int, int>> used;
    for (const auto& s : specs_) {
        used.insert({s.elem_i, static_cast<int>(s.face_k)});
        used.insert({s.elem_j, static_cast<int>(s.face_l)});
    }
    for (int e = 0; e < num_elements(); ++e)
        for (FaceId f : kFaces) {
            if (used.count({e, static_cast<int>(f)})) continue;
            const Face& face = grids_[e].faces[static_cast<int>(f)];
            for (std::size_t a = 0; a < face.nodes.size(); ++a)
                node_normals[offsets_[e] + face.nodes[a]].push_back(face.normals[a]);
        }
    std::map<int, std::vector<Vec2>> group_normals;
    for (int g = 0; g < m_; ++g)
        for (const auto& n : node_normals[g]) {
            auto& list = group_normals[uf.find(g)];
            const bool dup = std::any_of(list.begin(), list.end(), [&](const Vec2& v) { return (v - n).norm() < 1e-12; });
            if (!dup) list.push_back(n);
        }

    const double tol = options.match_tol * diameter_;
    normals_.resize(static_cast<int>(bound_.size()), 2);
    std::vector<int> degenerate;
    for (std::size_t b = 0; b < bound_.size(); ++b) {
        const int g = bound_[b];
        Vec2 avg = Vec2::Zero();
        for (const auto& n : group_normals[uf.find(g)]) avg += n;
        const Vec2 p = cart_pts_.row(g).transpose();
        const bool overridden = std::any_of(options.normal_overrides.begin(), options.normal_overrides.end(),
                                            [&](const NormalOverride& o) { return (o.point - p).norm() <= tol; });
        if (avg.norm() < 1e-12) {
            if (!overridden) degenerate.push_back(g);
            normals_.row(static_cast<int>(b)).setZero();
        } else {
            normals_.row(static_cast<int>(b)) = avg.normalized().transpose();
        }
    }
    for (const auto& o : options.normal_overrides) {
        SEM_REQUIRE(o.normal.norm() > 0.0, InvalidArgument, "override normal must be nonzero");
        bool hit = false;
        for (std::size_t b = 0; b < bound_.size(); ++b) {
            const Vec2 p = cart_pts_.row(bound_[b]).transpose();
            if ((o.point - p).norm() <= tol) {
                normals_.row(static_cast<int>(b)) = o.normal.normalized().transpose();
                hit = true;
            }
        }
        SEM_REQUIRE(hit, ConfigError, "normal override at " + pt_str(o.point) + " matches no boundary node");
    }
    if (!degenerate.empty()) {
        std::string msg = "boundary normal averages to zero at";
        for (int g : degenerate) msg += " " + pt_str(cart_pts_.row(g).transpose());
        msg += "; supply a manual normal override for these points";
        fail(ErrorKind::NumericFailure, msg);
    }
    build_normal_op();
}

void MultiShape::build_normal_op()
{
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t b = 0; b < bound_.size(); ++b) {
        const int g = bound_[b];
        const Element& el = elements_[owner_[g]];
        const Eigen::Matrix2d rot = el.local_to_cartesian(native_pts_.row(g).transpose());
        const Vec2 c = rot.transpose() * normals_.row(static_cast<int>(b)).transpose();
        trips.emplace_back(static_cast<int>(b), g, c[0]);
        trips.emplace_back(static_cast<int>(b), m_ + g, c[1]);
    }
    normal_op_.resize(static_cast<int>(bound_.size()), 2 * m_);
    normal_op_.setFromTriplets(trips.begin(), trips.end());
}

void MultiShape::override_normals(std::span<const int> nodes, std::span<const Vec2> normals)
{
    SEM_REQUIRE(nodes.size() == normals.size(), InvalidArgument, "override_normals: size mismatch");
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const auto it = std::lower_bound(bound_.begin(), bound_.end(), nodes[a]);
        SEM_REQUIRE(it != bound_.end() && *it == nodes[a], InvalidArgument,
                    "override_normals: node " + std::to_string(nodes[a]) + " is not a boundary node");
        SEM_REQUIRE(normals[a].norm() > 0.0, InvalidArgument, "override_normals: zero normal");
        normals_.row(static_cast<int>(it - bound_.begin())) = normals[a].normalized().transpose();
    }
    build_normal_op();
}

SpMat MultiShape::interpolation(const Matrix& targets, std::vector<char>* in_domain) const
{
    SEM_REQUIRE(targets.cols() == 2, InvalidArgument, "interpolation targets must be K x 2");
    const int k = static_cast<int>(targets.rows());
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<int> missing;
    if (in_domain) in_domain->assign(k, 0);
    for (int t = 0; t < k; ++t) {
        const Vec2 p = targets.row(t).transpose();
        bool found = false;
        for (int e = 0; e < num_elements() && !found; ++e) {
            const Element& el = elements_[e];
            const auto comp = el.inverse_map(p);
            if (!comp) continue;
            found = true;
            const double c1 = (*comp)[0];
            const double c2 = (*comp)[1];
            const Matrix r1 = interp_matrix_1d(NodeSet1D::cheb_lobatto(el.n1()), std::span<const double>(&c1, 1));
            const Matrix r2 = interp_matrix_1d(NodeSet1D::cheb_lobatto(el.n2()), std::span<const double>(&c2, 1));
            for (int a = 0; a < el.n1(); ++a) {
                if (r1(0, a) == 0.0) continue;
                for (int b = 0; b < el.n2(); ++b)
                    if (r2(0, b) != 0.0) trips.emplace_back(t, offsets_[e] + a * el.n2() + b, r1(0, a) * r2(0, b));
            }
        }
        if (!found) missing.push_back(t);
        if (in_domain) (*in_domain)[t] = found ? 1 : 0;
    }
    if (!missing.empty() && !in_domain) {
        std::string msg = std::to_string(missing.size()) + " interpolation target(s) outside the multishape:";
        for (std::size_t a = 0; a < std::min<std::size_t>(missing.size(), 10); ++a)
            msg += " " + pt_str(targets.row(missing[a]).transpose());
        fail(ErrorKind::OutOfDomain, msg);
    }
    SpMat out(k, m_);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

void MultiShape::apply_intersection_bcs_matrix(Eigen::Ref<Matrix> rhs, const Eigen::Ref<const Matrix>& rho,
                                        const Eigen::Ref<const Matrix>& flux) const
{
    SEM_REQUIRE(rhs.rows() == m_ && rho.rows() == m_, InvalidArgument,
                "apply_intersection_bcs: rhs and rho need M rows");
    SEM_REQUIRE(flux.rows() == 2 * m_, InvalidArgument,
                "apply_intersection_bcs: flux data (2M rows) is required for match and wall conditions");
    SEM_REQUIRE(rho.cols() == rhs.cols() && flux.cols() == rhs.cols(), InvalidArgument,
                "apply_intersection_bcs: column counts differ");
    for (std::size_t s = 0; s < intersections_.size(); ++s) {
        const auto& inter = intersections_[s];
        for (std::size_t a = 0; a < inter.nodes_i.size(); ++a) {
            const int gi = inter.nodes_i[a];
            const int gj = inter.nodes_j[a];
            const Vec2& ci = coef_i_[s][a];
            const Vec2& cj = coef_j_[s][a];
            if (inter.spec.condition == InterfaceCondition::Match) {
                rhs.row(gi) = rho.row(gi) - rho.row(gj);
                rhs.row(gj) = ci[0] * flux.row(gi) + ci[1] * flux.row(m_ + gi) + cj[0] * flux.row(gj) +
                              cj[1] * flux.row(m_ + gj);
            } else {
                rhs.row(gi) = ci[0] * flux.row(gi) + ci[1] * flux.row(m_ + gi);
                rhs.row(gj) = cj[0] * flux.row(gj) + cj[1] * flux.row(m_ + gj);
            }
        }
    }
}

Vector MultiShape::apply_intersection_bcs(const Vector& rhs, const Vector& rho, const Vector& flux) const
{
    Matrix out = rhs;
    const Matrix rho_m = rho;
    const Matrix flux_m = flux;
    apply_intersection_bcs_matrix(out, rho_m, flux_m);
    return out.col(0);
}

Vector MultiShape::make_vector(const Vector& f) const
{
    SEM_REQUIRE(f.size() == m_, InvalidArgument, "make_vector expects a scalar field of length M");
    Vector v(2 * m_);
    v << f, f;
    return v;
}

Vector MultiShape::evaluate(const std::function<double(double, double)>& f) const
{
    Vector v(m_);
    for (int g = 0; g < m_; ++g) v[g] = f(cart_pts_(g, 0), cart_pts_(g, 1));
    return v;
}

double MultiShape::area() const
{
    double a = 0.0;
    for (const auto& e : elements_) a += e.area();
    return a;
}

} // namespace sem
