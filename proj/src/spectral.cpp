#include "sem2d/spectral.hpp"

#include "sem2d/error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace sem {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidGeometry: return "invalid-geometry";
    case ErrorKind::ConfigError: return "config-error";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::StepFailure: return "step-failure";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::DomainError: return "domain-error";
    }
    return "unknown";
}

NodeSet1D NodeSet1D::cheb_lobatto(int n)
{
    SEM_REQUIRE(n >= 2, InvalidArgument, "Chebyshev-Lobatto grid needs n >= 2, got " + std::to_string(n));
    Vector x(n);
    Vector w(n);
    const int N = n - 1;
    for (int k = 0; k < n; ++k) {
        // sin form keeps the grid exactly antisymmetric about 0
        x[k] = std::sin(std::numbers::pi * (N - 2.0 * k) / (2.0 * N));
        w[k] = (k % 2 == 0) ? 1.0 : -1.0;
    }
    x[0] = 1.0;
    x[N] = -1.0;
    w[0] *= 0.5;
    w[N] *= 0.5;
    return NodeSet1D(std::move(x), std::move(w));
}

Matrix diff_matrix(const NodeSet1D& ns, int order)
{
    SEM_REQUIRE(order == 1 || order == 2, InvalidArgument,
                "differentiation order must be 1 or 2, got " + std::to_string(order));
    const int n = ns.size();
    const Vector& x = ns.nodes();
    const Vector& w = ns.bary_weights();

    Matrix d1 = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            d1(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
            diag -= d1(i, j);
        }
        d1(i, i) = diag;
    }
    if (order == 1) return d1;

    Matrix d2 = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            d2(i, j) = 2.0 * d1(i, j) * (d1(i, i) - 1.0 / (x[i] - x[j]));
            diag -= d2(i, j);
        }
        d2(i, i) = diag;
    }
    return d2;
}

RowVector clenshaw_curtis_weights(const NodeSet1D& ns)
{
    const int n = ns.size();
    const int N = n - 1;
    RowVector w = RowVector::Zero(n);
    if (N == 1) {
        w.setConstant(1.0);
        return w;
    }
    std::vector<double> theta(n);
    for (int k = 0; k < n; ++k) theta[k] = std::numbers::pi * k / N;

    std::vector<double> v(N - 1, 1.0);
    if (N % 2 == 0) {
        w[0] = w[N] = 1.0 / (N * N - 1.0);
        for (int k = 1; k < N / 2; ++k)
            for (int i = 1; i < N; ++i) v[i - 1] -= 2.0 * std::cos(2.0 * k * theta[i]) / (4.0 * k * k - 1.0);
        for (int i = 1; i < N; ++i) v[i - 1] -= std::cos(N * theta[i]) / (N * N - 1.0);
    } else {
        w[0] = w[N] = 1.0 / (static_cast<double>(N) * N);
        for (int k = 1; k <= (N - 1) / 2; ++k)
            for (int i = 1; i < N; ++i) v[i - 1] -= 2.0 * std::cos(2.0 * k * theta[i]) / (4.0 * k * k - 1.0);
    }
    for (int i = 1; i < N; ++i) w[i] = 2.0 * v[i - 1] / N;
    return w;
}

Matrix interp_matrix_1d(const NodeSet1D& source, std::span<const double> targets)
{
    const int n = source.size();
    const Vector& x = source.nodes();
    const Vector& w = source.bary_weights();
    const int m = static_cast<int>(targets.size());
    Matrix out = Matrix::Zero(m, n);
    for (int r = 0; r < m; ++r) {
        const double t = targets[r];
        int hit = -1;
        for (int j = 0; j < n; ++j) {
            if (t == x[j]) {
                hit = j;
                break;
            }
        }
        if (hit >= 0) {
            out(r, hit) = 1.0;
            continue;
        }
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            const double c = w[j] / (t - x[j]);
            out(r, j) = c;
            denom += c;
        }
        out.row(r) /= denom;
    }
    return out;
}

Matrix interp_matrix_1d(const NodeSet1D& source, const Vector& targets)
{
    return interp_matrix_1d(source, std::span<const double>(targets.data(), static_cast<std::size_t>(targets.size())));
}

Matrix tensor2d(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

SpMat tensor2d_sparse(const Matrix& a, const Matrix& b)
{
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) == 0.0) continue;
            for (Eigen::Index p = 0; p < b.rows(); ++p)
                for (Eigen::Index q = 0; q < b.cols(); ++q)
                    if (b(p, q) != 0.0)
                        trips.emplace_back(static_cast<int>(i * b.rows() + p), static_cast<int>(j * b.cols() + q),
                                           a(i, j) * b(p, q));
        }
    SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

bool is_extrapolating(std::span<const double> targets, double slack)
{
    for (double t : targets)
        if (t > 1.0 + slack || t < -1.0 - slack) return true;
    return false;
}

} // namespace sem
