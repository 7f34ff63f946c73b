#pragma once

// Diffusion-world helpers: Black-Scholes-Merton closed form, a fast American
// put approximation of the quadratic (static premium ODE) family, a binomial
// tree reference, and the transfer pricer that maps the variance gamma model
// onto an effective diffusion with truncated moments at a fixed jump cutoff.

#include "vgpricer/euro_fft.hpp"
#include "vgpricer/vg_model.hpp"

namespace vgp {

// European put; sigma is the diffusion volatility. q may be negative (the
// transfer method produces effective yields below zero).
double bms_put(double s, double k, const MarketEnv& env, double sigma);

enum class AmericanApprox { fast_approx, tree };

// American put. fast_approx solves the critical-price equation of the
// quadratic approximation and adds the power premium; tree is a Cox-Ross-
// Rubinstein binomial with >= 2000 steps.
double bms_american_put(double s, double k, const MarketEnv& env, double sigma,
                        AmericanApprox method = AmericanApprox::fast_approx, int tree_steps = 2000);

// Variance gamma American put by moment transfer at jump cutoff eps:
// effective vol = sqrt(sigma^2(eps)), effective yield = q - omega(eps), and
// the early-exercise premium of that diffusion is added to the exact
// (transform-priced) European put.
double simple_american_put(double s, double k, const MarketEnv& env, const VgParams& params,
                           const EuroCurve& curve, double eps = 0.65,
                           AmericanApprox method = AmericanApprox::fast_approx);

} // namespace vgp
