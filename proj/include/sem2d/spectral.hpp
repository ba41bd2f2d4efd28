#pragma once

// One-dimensional Chebyshev-Lobatto kernels and their tensor-product lifting.
//
// Node ordering is descending: node 0 sits at +1, node n-1 at -1.
// On a 2D grid with n1 nodes in the first computational direction and n2 in
// the second, node (i1, i2) has linear index i1 * n2 + i2, i.e. the first
// direction varies slowest. An operator acting along the first direction is
// therefore A (x) I and one acting along the second is I (x) B.

#include "sem2d/types.hpp"

#include <span>

namespace sem {

/// Chebyshev-Lobatto nodes on [-1, 1] with their barycentric weights.
class NodeSet1D {
public:
    static NodeSet1D cheb_lobatto(int n);

    int size() const { return static_cast<int>(nodes_.size()); }
    const Vector& nodes() const { return nodes_; }
    const Vector& bary_weights() const { return weights_; }

private:
    NodeSet1D(Vector nodes, Vector weights) : nodes_(std::move(nodes)), weights_(std::move(weights)) {}

    Vector nodes_;
    Vector weights_;
};

inline NodeSet1D cheb_lobatto_nodes(int n) { return NodeSet1D::cheb_lobatto(n); }

/// Collocation differentiation matrix of order 1 or 2.
///
/// Off-diagonal entries come from the barycentric formulas; the diagonal is
/// the negative row sum of the off-diagonals so constants are annihilated.
/// The second-order matrix uses its own closed form rather than D * D.
Matrix diff_matrix(const NodeSet1D& ns, int order);

/// Clenshaw-Curtis weights (1 x n) on the Chebyshev-Lobatto nodes.
RowVector clenshaw_curtis_weights(const NodeSet1D& ns);

/// Barycentric interpolation from the node set onto arbitrary targets.
/// Targets that coincide with a node produce a unit row.
Matrix interp_matrix_1d(const NodeSet1D& source, std::span<const double> targets);
Matrix interp_matrix_1d(const NodeSet1D& source, const Vector& targets);

/// Kronecker product a (x) b in the repo-wide lexicographic convention.
Matrix tensor2d(const Matrix& a, const Matrix& b);

/// Sparse Kronecker product; exact zeros of either factor are skipped.
SpMat tensor2d_sparse(const Matrix& a, const Matrix& b);

/// True when any target lies outside [-1, 1] beyond a small slack.
bool is_extrapolating(std::span<const double> targets, double slack = 1e-12);

} // namespace sem
