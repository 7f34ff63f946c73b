#include "vgpricer/vg_model.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vgp {

namespace {

double e1(double x) { return boost::math::expint(1, x); }

// 1 - e^{-z}(1+z), the mass factor of int_0^eps y e^{-lambda y} dy; series for
// small z where the direct form loses all leading digits.
double one_minus_exp_linear(double z) {
    if (z < 0.05) {
        // sum_{k>=2} (-1)^k z^k (k-1)/k!
        double z2 = z * z;
        return z2 * (0.5 + z * (-1.0 / 3.0 + z * (0.125 + z * (-1.0 / 30.0 + z / 144.0))));
    }
    return 1.0 - std::exp(-z) * (1.0 + z);
}

} // namespace

void VgParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("VgParams: sigma must be positive");
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw std::invalid_argument("VgParams: nu must be positive");
    if (!std::isfinite(theta))
        throw std::invalid_argument("VgParams: theta must be finite");
    // no-arbitrage: the martingale drift must be finite, equivalently the
    // positive-jump decay rate must exceed one
    if (!(1.0 - 0.5 * sigma * sigma * nu - theta * nu > 0.0))
        throw std::invalid_argument("VgParams: 1 - sigma^2 nu / 2 - theta nu must be positive");
}

void MarketEnv::validate() const {
    if (!(r >= 0.0) || !std::isfinite(r))
        throw std::invalid_argument("MarketEnv: r must be nonnegative");
    if (!(q >= 0.0) || !std::isfinite(q))
        throw std::invalid_argument("MarketEnv: q must be nonnegative");
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("MarketEnv: T must be positive");
}

Lambdas lambda_pn(const VgParams& p) {
    p.validate();
    double s2 = p.sigma * p.sigma;
    double root = std::sqrt(p.theta * p.theta / (s2 * s2) + 2.0 / (s2 * p.nu));
    return {root - p.theta / s2, root + p.theta / s2};
}

double levy_density(double y, const VgParams& p) {
    if (y == 0.0)
        throw std::invalid_argument("levy_density: y must be nonzero");
    Lambdas l = lambda_pn(p);
    double a = std::abs(y);
    double rate = y > 0.0 ? l.p : l.n;
    return std::exp(-rate * a) / (p.nu * a);
}

std::complex<double> char_exponent(std::complex<double> xi, const VgParams& p) {
    p.validate();
    std::complex<double> i(0.0, 1.0);
    std::complex<double> arg =
        1.0 + 0.5 * p.sigma * p.sigma * p.nu * xi * xi - i * p.theta * p.nu * xi;
    return -std::log(arg) / p.nu;
}

double martingale_drift(const VgParams& p) {
    p.validate();
    double arg = 1.0 - 0.5 * p.sigma * p.sigma * p.nu - p.theta * p.nu;
    if (!(arg > 0.0))
        throw std::invalid_argument(
            "martingale_drift: 1 - sigma^2 nu / 2 - theta nu must be positive");
    return std::log(arg) / p.nu;
}

double truncated_variance(double eps, const VgParams& p) {
    p.validate();
    if (!(eps > 0.0))
        throw std::invalid_argument("truncated_variance: eps must be positive");
    Lambdas l = lambda_pn(p);
    if (std::isinf(eps))
        return (1.0 / (l.p * l.p) + 1.0 / (l.n * l.n)) / p.nu;
    // int_0^eps y e^{-lambda y} dy = (1 - e^{-lambda eps}(1 + lambda eps)) / lambda^2
    double pos = one_minus_exp_linear(l.p * eps) / (l.p * l.p);
    double neg = one_minus_exp_linear(l.n * eps) / (l.n * l.n);
    return (pos + neg) / p.nu;
}

double truncated_drift(double eps, const VgParams& p) {
    p.validate();
    if (!(eps > 0.0))
        throw std::invalid_argument("truncated_drift: eps must be positive");
    Lambdas l = lambda_pn(p);
    if (!(l.p > 1.0))
        throw std::invalid_argument("truncated_drift: requires lambda_p > 1 (martingale drift undefined)");
    if (std::isinf(eps)) return 0.0;
    // int_eps^inf (1 - e^y) e^{-lambda_p y} / (nu y) dy   = (E1(lambda_p eps) - E1((lambda_p - 1) eps)) / nu
    // int_eps^inf (1 - e^-y) e^{-lambda_n y} / (nu y) dy  = (E1(lambda_n eps) - E1((lambda_n + 1) eps)) / nu
    double up = e1(l.p * eps) - e1((l.p - 1.0) * eps);
    double dn = e1(l.n * eps) - e1((l.n + 1.0) * eps);
    return (up + dn) / p.nu;
}

} // namespace vgp
