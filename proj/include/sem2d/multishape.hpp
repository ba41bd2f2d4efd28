#pragma once

// Composite domains assembled from quadrilateral and wedge elements.
//
// Scalar fields are stacked element by element into a vector of length M.
// Vector fields have length 2M: all first components, then all second
// components, each in the owning element's local basis.

#include "sem2d/geometry.hpp"
#include "sem2d/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sem {

enum class InterfaceCondition { Match, Wall };

struct IntersectionSpec {
    int elem_i = 0; ///< always the lower element index
    int elem_j = 0;
    FaceId face_k = FaceId::Bottom; ///< face of elem_i
    FaceId face_l = FaceId::Bottom; ///< face of elem_j
    bool reversed = false;          ///< face_l nodes run opposite to face_k nodes
    InterfaceCondition condition = InterfaceCondition::Match;

    bool operator==(const IntersectionSpec&) const = default;
};

/// Intersection with its node correspondence in global indices.
struct Intersection {
    IntersectionSpec spec;
    std::vector<int> nodes_i; ///< global indices on elem_i, face order
    std::vector<int> nodes_j; ///< partner of nodes_i[m] is nodes_j[m]
    std::vector<Vec2> normals_i; ///< outward face normals of elem_i (Cartesian)
    std::vector<Vec2> normals_j;
};

struct ConditionFlag {
    int elem_a = 0;
    int elem_b = 0;
    InterfaceCondition condition = InterfaceCondition::Match;
};

/// Replace the boundary normal at every boundary node located at `point`.
struct NormalOverride {
    Vec2 point = Vec2::Zero();
    Vec2 normal = Vec2::Zero();
};

struct BuildOptions {
    std::vector<ConditionFlag> conditions;
    std::vector<NormalOverride> normal_overrides;
    double match_tol = 1e-10; ///< relative to the multishape diameter
};

/// Find every face pair whose nodes coincide pairwise, in the same or the
/// reversed order. `tol` is an absolute distance.
std::vector<IntersectionSpec> detect_intersections(const std::vector<Element>& elements, double tol);

class MultiShape {
public:
    static MultiShape build(std::vector<Element> elements, const BuildOptions& options = {});

    int size() const { return m_; }
    int num_elements() const { return static_cast<int>(elements_.size()); }
    const Element& element(int e) const { return elements_.at(e); }
    const std::vector<Element>& elements() const { return elements_; }
    int offset(int e) const { return offsets_.at(e); }
    int element_of(int node) const { return owner_.at(node); }

    const Matrix& points() const { return native_pts_; } ///< M x 2, element-native
    const Matrix& cart_points() const { return cart_pts_; } ///< M x 2, Cartesian

    const SpMat& grad() const { return grad_; }
    const SpMat& div() const { return div_; }
    const SpMat& lap() const { return lap_; }
    const RowVector& int_row() const { return int_; }

    /// Rotation of stacked vector fields from local components to Cartesian.
    const SpMat& local_to_cartesian() const { return to_cart_; }
    /// Inverse rotation (transpose of local_to_cartesian).
    const SpMat& cartesian_to_local() const { return from_cart_; }

    const std::vector<int>& bound() const { return bound_; }
    const std::vector<int>& intersection_nodes() const { return inter_nodes_; }
    const std::vector<Intersection>& intersections() const { return intersections_; }

    /// Outward unit normals at the boundary nodes (|bound| x 2, Cartesian).
    const Matrix& boundary_normals() const { return normals_; }
    /// |bound| x 2M operator giving the outward normal component of a vector field.
    const SpMat& normal_op() const { return normal_op_; }

    /// Replace the stored normals at the given boundary nodes (global indices).
    /// Build-phase only: call before any operator is handed out.
    void override_normals(std::span<const int> nodes, std::span<const Vec2> normals);

    /// Interpolation onto Cartesian targets (K x 2). Each target is assigned
    /// to the lowest-index element containing it. Targets outside the domain
    /// raise OutOfDomain unless `in_domain` is given, in which case their rows
    /// stay zero and the flag is cleared.
    SpMat interpolation(const Matrix& targets, std::vector<char>* in_domain = nullptr) const;

    /// Replace rows at intersection nodes with continuity / flux-matching
    /// residuals. Each column of `rho` (M rows) and `flux` (2M rows) is a
    /// separate field; `rhs` is overwritten in place.
    void apply_intersection_bcs_matrix(Eigen::Ref<Matrix> rhs, const Eigen::Ref<const Matrix>& rho,
                                const Eigen::Ref<const Matrix>& flux) const;
    Vector apply_intersection_bcs(const Vector& rhs, const Vector& rho, const Vector& flux) const;

    /// [f; f], a scalar field duplicated into both vector components.
    Vector make_vector(const Vector& f) const;

    /// Sample a function of Cartesian coordinates at every node.
    Vector evaluate(const std::function<double(double, double)>& f) const;

    double diameter() const { return diameter_; }
    double area() const;

    const std::vector<IntersectionSpec>& intersection_specs() const { return specs_; }

private:
    MultiShape() = default;
    void build_normals(const BuildOptions& options);
    void build_normal_op();

    std::vector<Element> elements_;
    std::vector<ElementGrid> grids_;
    std::vector<int> offsets_;
    std::vector<int> owner_;
    int m_ = 0;
    double diameter_ = 0.0;

    Matrix native_pts_;
    Matrix cart_pts_;
    SpMat grad_, div_, lap_;
    RowVector int_;
    SpMat to_cart_, from_cart_;

    std::vector<IntersectionSpec> specs_;
    std::vector<Intersection> intersections_;
    std::vector<int> bound_;
    std::vector<int> inter_nodes_;
    Matrix normals_;
    SpMat normal_op_;
    // per intersection, per node: c = R^T n for both sides
    std::vector<std::vector<Vec2>> coef_i_, coef_j_;
};

} // namespace sem
