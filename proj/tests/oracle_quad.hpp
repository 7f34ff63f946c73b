#pragma once

// Brute-force oracle for the stationary premium-equation residual: one
// adaptive quadrature of the full jump integrand with no closed-form pieces.
// Deliberately independent of the production evaluation path so the two can
// cross-check each other.

#include "vgpricer/euro_fft.hpp"
#include "vgpricer/quad_core.hpp"
#include "vgpricer/vg_model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace vgp_test {

inline double g_oracle(double x, double k, const vgp::PremiumFit& fit,
                       const vgp::EuroCurve& curve) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    const vgp::Lambdas lam = vgp::lambda_pn(curve.params);
    const double nu = curve.params.nu;

    auto w_at = [&](double xx) { return vgp::premium_w(xx, k, fit, curve); };
    const double w0 = w_at(x);

    // truncate each tail where the density drops below 1e-15 k
    auto radius = [&](double decay) {
        double y = 1.0;
        while (std::exp(-decay * y) / (nu * y) > 1e-15 * k) y += 0.5;
        return y;
    };
    const double y_pos = radius(lam.p);
    const double y_neg = radius(lam.n);

    auto integrand = [&](double y) {
        double dens = y > 0.0 ? std::exp(-lam.p * y) / (nu * y)
                              : std::exp(lam.n * y) / (nu * (-y));
        return (w_at(x + y) - w0) * dens;
    };

    const double tol = 1e-11;
    double integral = gk::integrate(integrand, 1e-12, y_pos, 15, tol);
    const double split = fit.x_star - x; // premium branch switch
    if (split > -1e-12) {
        integral += gk::integrate(integrand, -y_neg, -1e-12, 15, tol);
    } else {
        integral += gk::integrate(integrand, -y_neg, split, 15, tol);
        integral += gk::integrate(integrand, split, -1e-12, 15, tol);
    }

    const vgp::MarketEnv& env = curve.env;
    const double rc = env.r < 1e-8 ? 1.0 / env.T : env.r / (1.0 - std::exp(-env.r * env.T));
    double w_x;
    if (x <= fit.x_star + 1e-14)
        w_x = -std::exp(x) - vgp::euro_put_dx(x, k, curve);
    else
        w_x = fit.lambda * w0;
    return (env.r - env.q + curve.omega) * w_x - rc * w0 + integral;
}

} // namespace vgp_test
