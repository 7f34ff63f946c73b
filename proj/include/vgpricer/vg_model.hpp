#pragma once

// Variance gamma model primitives: Levy density, characteristic exponent,
// martingale drift and the truncated moments used by the local-diffusion
// approximation of the small-jump region.

#include <complex>

namespace vgp {

struct VgParams {
    double sigma; // volatility of the time-changed Brownian motion, > 0
    double nu;    // variance rate of the gamma clock, > 0
    double theta; // drift of the time-changed Brownian motion

    void validate() const; // throws std::invalid_argument
};

struct MarketEnv {
    double r; // riskless rate, >= 0
    double q; // dividend yield, >= 0
    double T; // maturity in years, > 0

    void validate() const;
};

// Exponential decay rates of the jump density on the positive (p) and
// negative (n) half-axes: lambda_{p,n} = sqrt(theta^2/sigma^4 + 2/(sigma^2 nu)) -/+ theta/sigma^2.
struct Lambdas {
    double p;
    double n;
};

Lambdas lambda_pn(const VgParams& p);

// k(y) = exp(-lambda_p y) / (nu y) for y > 0, exp(-lambda_n |y|) / (nu |y|) for y < 0.
double levy_density(double y, const VgParams& p);

// phi(xi) = -(1/nu) ln(1 + sigma^2 nu xi^2 / 2 - i theta nu xi), the unit-time
// log characteristic function. Accepts complex xi for damped transforms.
std::complex<double> char_exponent(std::complex<double> xi, const VgParams& p);

// omega = (1/nu) ln(1 - sigma^2 nu / 2 - theta nu) = -phi(-i); the compensator
// that makes exp((r-q)t + X_t + omega t) a martingale discounted at r - q.
// Throws std::invalid_argument when the log argument is not positive.
double martingale_drift(const VgParams& p);

// sigma^2(eps) = int_{|y|<=eps} y^2 k(y) dy. eps = +inf gives sigma^2 + nu theta^2.
double truncated_variance(double eps, const VgParams& p);

// omega(eps) = int_{|y|>eps} (1 - e^y) k(y) dy. Converges to martingale_drift
// as eps -> 0+. Requires lambda_p > 1, which is equivalent to the martingale
// drift being defined.
double truncated_drift(double eps, const VgParams& p);

} // namespace vgp
