#pragma once

// Implicit finite-difference solver for the American/European put under the
// variance gamma dynamics. Small jumps (one grid cell) become a local
// diffusion/drift correction with the truncated moments; the remaining jump
// integral is evaluated explicitly against the previous time level using
// piecewise-linear values and closed-form cell masses of the jump density,
// with analytic tails beyond the grid. Early exercise is a per-step
// projection onto the payoff.

#include "vgpricer/vg_model.hpp"

#include <string>
#include <vector>

namespace vgp {

enum class Exercise { american, european };

struct FdGrid {
    int n_space = 0;
    int n_time = 0;
    double x_min = 0.0;
    double x_max = 0.0;
};

// Grid spans ln k +- (4 s sqrt(T) + 1), s^2 = sigma^2 + nu theta^2, with the
// lower edge pushed further down by up to 3 when q > r (the exercise boundary
// then sits near (r/q)-scaled strikes).
FdGrid make_fd_grid(double strike, const MarketEnv& env, const VgParams& params,
                    int n_space, int n_time);
FdGrid fd_fine_grid(double strike, const MarketEnv& env, const VgParams& params);   // 3000 x 250
FdGrid fd_coarse_grid(double strike, const MarketEnv& env, const VgParams& params); // 800 x 80

struct FdSolution {
    FdGrid grid;
    double strike = 0.0;
    std::vector<double> x;        // node log-prices
    std::vector<double> american; // empty in european mode
    std::vector<double> european;
    std::vector<double> premium;  // american - european (same grid, same scheme)
    double x_star = 0.0;          // filled by extract_boundary
    double lambda_hat = 0.0;      // filled by extract_lambda

    // linear interpolation of the american (european when absent) profile
    double value_at(double spot) const;
    double european_at(double spot) const;
};

// want_premium additionally runs the European sweep in american mode so the
// premium profile is available; skip it when only the price matters.
FdSolution fd_solve(double strike, const MarketEnv& env, const VgParams& params,
                    const FdGrid& grid, Exercise ex, bool want_premium = true);

// Largest node where american - (k - e^x) <= tol, linearly refined between the
// bracketing nodes. Throws no_exercise_region_error when the profile never
// (or always) touches the payoff.
double extract_boundary(const FdSolution& sol, double strike, double tol);

// OLS slope of ln(premium) over x in (x_star, x_star + 2 (ln k - x_star)).
// Nodes with non-positive premium are dropped; fewer than 5 usable nodes is a
// degenerate_window_error.
double extract_lambda(const FdSolution& sol, double x_star, double strike);

// Debug dump: tab-separated (x, american, european, premium) per node.
void write_profile(const FdSolution& sol, const std::string& path);

} // namespace vgp
