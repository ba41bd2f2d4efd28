#pragma once

// Quadrilateral and annular-wedge elements.
//
// Every element maps the computational square [-1,1]^2 onto its physical
// region. Quadrilaterals use the bilinear map through their corners; the
// corner k sits at the computational corner
//     0: (-1,-1)   1: (-1,+1)   2: (+1,+1)   3: (+1,-1).
// Wedges map affinely onto [r_in, r_out] x [th1, th2] in polar coordinates
// about their origin, with the first computational direction radial.
//
// Stacked vector fields on an element use (x1, x2) components on
// quadrilaterals and (radial, angular) components on wedges.

#include "sem2d/spectral.hpp"
#include "sem2d/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace sem {

enum class CoordSystem { Cartesian, Polar };

/// Faces in computational terms. For a box with corners (xmin,ymin),
/// (xmin,ymax), (xmax,ymax), (xmax,ymin)
/// these are the geometric bottom/right/top/left sides; for a wedge, Bottom
/// and Top are the th1 and th2 angular sides, Left and Right the inner and
/// outer radial sides.
enum class FaceId : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

const char* face_name(FaceId f, CoordSystem cs);

struct QuadSpec {
    std::array<Vec2, 4> corners;
    int n1 = 0;
    int n2 = 0;
};

struct WedgeSpec {
    double r_in = 0.0;
    double r_out = 0.0;
    double th1 = 0.0;
    double th2 = 0.0;
    Vec2 origin = Vec2::Zero();
    int n1 = 0; ///< radial
    int n2 = 0; ///< angular
};

struct Face {
    std::vector<int> nodes;      ///< local node indices, ordered along the face
    std::vector<Vec2> normals;   ///< outward unit normals, Cartesian components
};

struct ElementGrid {
    CoordSystem coord_system = CoordSystem::Cartesian;
    Matrix phys_points; ///< n x 2, element-native coordinates
    Matrix cart_points; ///< n x 2, Cartesian coordinates
    std::array<Face, 4> faces;
};

struct ElementOperators {
    SpMat grad;       ///< 2n x n
    SpMat div;        ///< n x 2n
    SpMat lap;        ///< n x n
    RowVector int_row;
    CoordSystem coord_system = CoordSystem::Cartesian;
};

class Element {
public:
    /// Corners may be given in either orientation; reversed input is
    /// canonicalised by exchanging corners 1 and 3. Self-intersecting or
    /// degenerate quadrilaterals are rejected.
    static Element quad(const QuadSpec& spec);
    static Element wedge(const WedgeSpec& spec);

    CoordSystem coord_system() const { return cs_; }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int size() const { return n1_ * n2_; }
    int face_size(FaceId f) const;

    const std::array<Vec2, 4>& corners() const { return corners_; }
    const WedgeSpec& wedge_spec() const { return wedge_; }

    /// Computational point to element-native physical coordinates.
    Vec2 map_to_physical(const Vec2& comp) const;
    /// Element-native coordinates to Cartesian.
    Vec2 to_cartesian(const Vec2& native) const;
    Vec2 map_to_cartesian(const Vec2& comp) const { return to_cartesian(map_to_physical(comp)); }

    /// Inverse of map_to_cartesian. Returns nullopt when the point lies
    /// outside the element by more than the membership tolerance (1e-10 of the
    /// element diameter). `tol` is the residual tolerance of the quad Newton
    /// solve, relative to the element diameter.
    std::optional<Vec2> inverse_map(const Vec2& cart, double tol = 1e-13) const;

    /// Rotation from local vector components to Cartesian ones at a native
    /// point: identity for quads, [r_hat theta_hat] for wedges.
    Eigen::Matrix2d local_to_cartesian(const Vec2& native) const;

    ElementGrid grid() const;
    ElementOperators operators() const;

    double area() const;
    double diameter() const;

    std::string describe() const;

private:
    Element() = default;

    void jacobian(const Vec2& comp, Eigen::Matrix2d& jac) const;

    CoordSystem cs_ = CoordSystem::Cartesian;
    int n1_ = 0;
    int n2_ = 0;
    std::array<Vec2, 4> corners_{};
    WedgeSpec wedge_{};
};

} // namespace sem
