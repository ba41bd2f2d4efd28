#include "sem2d/convolution.hpp"

#include "sem2d/error.hpp"

#include <cmath>
#include <sstream>

namespace sem {

Kernel Kernel::displacement(std::function<double(double, double)> f, std::string name)
{
    SEM_REQUIRE(static_cast<bool>(f), InvalidArgument, "kernel function is empty");
    Kernel k;
    k.form_ = KernelForm::Displacement;
    k.disp_ = std::move(f);
    k.name_ = std::move(name);
    return k;
}

Kernel Kernel::radial(std::function<double(double)> f, std::string name)
{
    SEM_REQUIRE(static_cast<bool>(f), InvalidArgument, "kernel function is empty");
    Kernel k;
    k.form_ = KernelForm::Radial;
    k.radial_ = std::move(f);
    k.name_ = std::move(name);
    return k;
}

namespace {

std::string gauss_name(const char* tag, double kappa, double sigma)
{
    std::ostringstream os;
    os.precision(17);
    os << tag << "(" << kappa << "," << sigma << ")";
    return os.str();
}

} // namespace

Kernel Kernel::gaussian(double kappa, double sigma)
{
    SEM_REQUIRE(sigma > 0.0, InvalidArgument, "Gaussian kernel width must be positive");
    return radial([kappa, sigma](double r) { return kappa * std::exp(-(r / sigma) * (r / sigma)); },
                  gauss_name("gauss", kappa, sigma));
}

std::pair<Kernel, Kernel> Kernel::gaussian_gradient(double kappa, double sigma)
{
    SEM_REQUIRE(sigma > 0.0, InvalidArgument, "Gaussian kernel width must be positive");
    const double s2 = sigma * sigma;
    auto comp = [kappa, s2](int c) {
        return [kappa, s2, c](double d1, double d2) {
            const double d = c == 0 ? d1 : d2;
            return -2.0 * d / s2 * kappa * std::exp(-(d1 * d1 + d2 * d2) / s2);
        };
    };
    return {displacement(comp(0), gauss_name("dgauss1", kappa, sigma)),
            displacement(comp(1), gauss_name("dgauss2", kappa, sigma))};
}

double Kernel::operator()(double d1, double d2) const
{
    if (form_ == KernelForm::Radial) return radial_(std::hypot(d1, d2));
    return disp_(d1, d2);
}

Matrix convolution_matrix(const MultiShape& ms, const Kernel& kernel)
{
    const int m = ms.size();
    const Matrix& x = ms.cart_points();
    const RowVector& w = ms.int_row();
    Matrix conv(m, m);
    int bad_row = -1;
    int bad_col = -1;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            const double v = kernel(x(r, 0) - x(c, 0), x(r, 1) - x(c, 1));
            if (!std::isfinite(v)) {
#pragma omp critical(sem_conv_bad)
                if (bad_row < 0 || r < bad_row) {
                    bad_row = r;
                    bad_col = c;
                }
            }
            conv(r, c) = w[c] * v;
        }
    }
    if (bad_row >= 0) {
        std::ostringstream os;
        os.precision(10);
        os << "kernel " << (kernel.name().empty() ? std::string("<unnamed>") : kernel.name())
           << " is not finite at displacement (" << x(bad_row, 0) - x(bad_col, 0) << ", "
           << x(bad_row, 1) - x(bad_col, 1) << ")";
        fail(ErrorKind::NumericFailure, os.str());
    }
    return conv;
}

Matrix convolution_matrix_vector_field(const MultiShape& ms, const Kernel& k1, const Kernel& k2)
{
    const int m = ms.size();
    Matrix out(2 * m, m);
    out.topRows(m) = convolution_matrix(ms, k1);
    out.bottomRows(m) = convolution_matrix(ms, k2);
    return out;
}

const Matrix& ConvolutionCache::get(const Kernel& kernel, bool reuse)
{
    if (kernel.name().empty()) {
        scratch_ = convolution_matrix(*ms_, kernel);
        return scratch_;
    }
    auto it = cache_.find(kernel.name());
    if (it != cache_.end() && reuse) return it->second;
    Matrix conv = convolution_matrix(*ms_, kernel);
    return cache_.insert_or_assign(kernel.name(), std::move(conv)).first->second;
}

} // namespace sem
