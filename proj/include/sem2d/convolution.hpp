#pragma once

// Dense convolution matrices over a whole multishape.
//
// Conv(m, n) = Int(n) * chi(x_m - x_n), with every point in Cartesian
// coordinates, so that (Conv * rho)_m approximates the integral of
// chi(y - z) rho(z) over the domain at y = x_m.

#include "sem2d/multishape.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>

namespace sem {

enum class KernelForm { Displacement, Radial };

class Kernel {
public:
    /// chi(d1, d2) of the Cartesian displacement.
    static Kernel displacement(std::function<double(double, double)> f, std::string name = {});
    /// chi(|d|) of the Euclidean distance.
    static Kernel radial(std::function<double(double)> f, std::string name = {});

    /// kappa * exp(-(r / sigma)^2).
    static Kernel gaussian(double kappa, double sigma);
    /// Components d/dd1 and d/dd2 of the Gaussian kernel.
    static std::pair<Kernel, Kernel> gaussian_gradient(double kappa, double sigma);

    KernelForm form() const { return form_; }
    const std::string& name() const { return name_; }
    double operator()(double d1, double d2) const;

private:
    Kernel() = default;

    KernelForm form_ = KernelForm::Displacement;
    std::function<double(double, double)> disp_;
    std::function<double(double)> radial_;
    std::string name_;
};

/// M x M convolution matrix. Rows are assembled in parallel.
Matrix convolution_matrix(const MultiShape& ms, const Kernel& kernel);

/// 2M x M stacked pair of convolution matrices for a vector-valued kernel.
/// Components are Cartesian; rotate with ms.cartesian_to_local() where local
/// components are needed.
Matrix convolution_matrix_vector_field(const MultiShape& ms, const Kernel& k1, const Kernel& k2);

/// Memoises convolution matrices by kernel name for one multishape, so a
/// matrix can be reused instead of recomputed. Unnamed kernels are never
/// cached.
class ConvolutionCache {
public:
    explicit ConvolutionCache(const MultiShape& ms) : ms_(&ms) {}

    const Matrix& get(const Kernel& kernel, bool reuse = true);
    std::size_t size() const { return cache_.size(); }

private:
    const MultiShape* ms_;
    std::map<std::string, Matrix> cache_;
    Matrix scratch_;
};

} // namespace sem
