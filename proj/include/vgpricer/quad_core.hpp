#pragma once

// Fast American put pricing by collocation on a stationary integro-
// differential equation for the early-exercise premium. The premium is
// approximated by an exponential in log-price above the exercise boundary and
// by intrinsic-minus-European below it; the two free parameters (tail slope
// lambda, boundary x_star) are fitted so the equation residual matches
// externally supplied correction targets at 7 collocation points.

#include "vgpricer/euro_fft.hpp"

#include <array>
#include <vector>

namespace vgp {

struct PremiumFit {
    double lambda; // premium tail slope, < 0
    double x_star; // exercise boundary in log-price
    double b;      // ln premium at the boundary, ln(k - e^x* - p(e^x*))
};

// correction values at the 7 collocation points; all zero reproduces the
// plain stationary equation
struct CollocationTargets {
    std::array<double, 7> e{};
};

inline constexpr int kCollocationN = 6;

// search box of the fit, relative to ln k. The gap ceiling covers deep
// dividend-dominant boundaries (r well below q pushes x_star far under ln k).
struct SolverBox {
    double lambda_lo = -60.0;
    double lambda_hi = -1e-3;
    double gap_lo = 1e-4; // smallest ln k - x_star
    double gap_hi = 3.0;  // largest ln k - x_star
};

// b such that the premium is continuous at the boundary. Throws
// infeasible_boundary_error when k - e^x* - p(e^x*) <= 0.
double b_from(double x_star, double k, const EuroCurve& curve);

// x_i = x_star + (2 i / n)(ln k - x_star), i = 0..n; x_{n/2} = ln k
std::vector<double> collocation_points(double x_star, double k, int n = kCollocationN);

// the approximating premium: k - e^x - p(e^x) at and below the boundary,
// exp(lambda (x - x_star) + b) above it
double premium_w(double x, double k, const PremiumFit& fit, const EuroCurve& curve);

// residual of the stationary premium equation at x >= x_star:
//   (r - q + omega) w_x - r/(1 - e^{-rT}) w + int (w(x+y) - w(x)) k(y) dy
// with closed forms on the continuation side of the jump integral and
// adaptive quadrature on the exercise side. r -> 0 uses the 1/T limit.
double g_eval(double x, double k, const PremiumFit& fit, const EuroCurve& curve);

// sum of squared residual-vs-target mismatches over the collocation points
double collocation_loss(const CollocationTargets& targets, double k, const PremiumFit& fit,
                        const EuroCurve& curve);

struct FitResult {
    PremiumFit fit{};
    double loss = 0.0;
    int restarts = 0;
    int evaluations = 0;
};

// derivative-free search over (lambda, x_star) inside the box, b re-derived
// from each candidate boundary; infeasible boundaries incur a 1e6 penalty.
// Restarts from 3 perturbed inits when the terminal loss exceeds
// 1e-4 (r/(1-e^{-rT}) w(ln k))^2.
FitResult solve_fit(const CollocationTargets& targets, double k, const EuroCurve& curve,
                    double lambda_init, double x_star_init, const SolverBox& box = {});

// assembled price: intrinsic at and below the boundary, European plus fitted
// premium above it, floored at intrinsic
double price_american(double s0, double k, const PremiumFit& fit, const EuroCurve& curve);

} // namespace vgp
