#pragma once

// Monte-Carlo pricing of the American put by least-squares continuation
// regression on simulated variance gamma paths. Gamma time increments are
// sampled exactly; identical seeds give identical prices on a given build.

#include "vgpricer/vg_model.hpp"

#include <cstdint>
#include <vector>

namespace vgp {

struct McConfig {
    int n_paths = 100000;
    int n_steps = 250;
    std::uint64_t seed = 42;
    bool antithetic = false; // pairs paths on mirrored Brownian draws
};

// Simulated price paths, row-major: prices[p * (n_steps + 1) + t] is the level
// of path p at step t, with column 0 pinned to the spot. Float storage keeps a
// 100k x 250 batch near 100 MB.
struct PathBatch {
    int n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    std::vector<float> prices;
};

// Draws per step: G ~ Gamma(dt/nu, nu), then dX = theta G + sigma sqrt(G) Z,
// and ln S accrues (r - q + omega) dt + dX. Deterministic for a given seed.
PathBatch simulate_paths(double s0, const MarketEnv& env, const VgParams& params,
                         int n_steps, int n_paths, std::uint64_t seed,
                         bool antithetic = false);

struct McResult {
    double price = 0.0;      // exercise-policy value at t = 0
    double std_error = 0.0;  // standard error of the policy value
    double euro_price = 0.0; // discounted terminal payoff on the same paths
    double euro_std_error = 0.0;
};

McResult lsm_price(double s0, double k, const MarketEnv& env, const VgParams& params,
                   const McConfig& cfg = {});

} // namespace vgp
