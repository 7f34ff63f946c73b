#pragma once

// European put pricing under the variance gamma model via the damped-transform
// FFT. One transform per parameter set produces a unit-spot put curve on a
// uniform log-moneyness grid; all (spot, strike) queries reduce to it through
// the homogeneity p(a s, a k) = a p(s, k).

#include "vgpricer/vg_model.hpp"

#include <vector>

namespace vgp {

struct FftConfig {
    int log2_n = 13;     // 8192 transform points
    double dk = 2.5e-3;  // log-strike spacing of the output grid
    double alpha = 1.5;  // damping exponent; needs E[S^(1+alpha)] finite
};

struct EuroCurve {
    MarketEnv env;
    VgParams params;
    double omega; // martingale drift correction
    Lambdas lam;
    double df_r;  // e^{-rT}
    double df_q;  // e^{-qT}
    double m0;    // first log-moneyness node ln(K/S)
    double dm;    // node spacing
    std::vector<double> puts; // unit-spot put values per node
};

// Runs the transform and tabulates the put curve. Throws std::invalid_argument
// when the damping moment condition fails for these parameters.
EuroCurve build_curve(const MarketEnv& env, const VgParams& params, const FftConfig& cfg = {});

// p(s, 0; k) by cubic interpolation of the curve in log-moneyness. Queries
// beyond the grid return the certified tail (parity intrinsic deep ITM, zero
// deep OTM) only when the neglected tail is provably below ~1e-13 k; otherwise
// they throw out_of_grid_error. k = 0 is a worthless put.
double euro_put(double s, double k, const EuroCurve& curve);

// d/dx p(e^x, 0; k) from the derivative of the same interpolant.
double euro_put_dx(double x, double k, const EuroCurve& curve);

} // namespace vgp
