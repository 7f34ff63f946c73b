#include "vgpricer/mc_lsm.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace vgp {

PathBatch simulate_paths(double s0, const MarketEnv& env, const VgParams& params,
                         int n_steps, int n_paths, std::uint64_t seed, bool antithetic) {
    env.validate();
    params.validate();
    if (!(s0 > 0.0))
        throw std::invalid_argument("simulate_paths: spot must be positive");
    if (n_paths < 2 || n_steps < 1)
        throw std::invalid_argument("simulate_paths: need at least 2 paths and 1 step");
    if (antithetic && n_paths % 2 != 0)
        throw std::invalid_argument("simulate_paths: antithetic pairing needs an even path count");

    const double dt = env.T / n_steps;
    const double drift = (env.r - env.q + martingale_drift(params)) * dt;

    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(dt / params.nu, params.nu);
    std::normal_distribution<double> normal(0.0, 1.0);

    PathBatch batch;
    batch.n_paths = n_paths;
    batch.n_steps = n_steps;
    batch.seed = seed;
    batch.prices.resize(std::size_t(n_paths) * (n_steps + 1));
    std::vector<float>& s = batch.prices;
    const double x0 = std::log(s0);
    for (int p = 0; p < n_paths; ++p) s[std::size_t(p) * (n_steps + 1)] = float(s0);

    if (antithetic) {
        for (int p = 0; p < n_paths; p += 2) {
            double xa = x0, xb = x0;
            std::size_t ra = std::size_t(p) * (n_steps + 1);
            std::size_t rb = std::size_t(p + 1) * (n_steps + 1);
            for (int t = 1; t <= n_steps; ++t) {
                double g = gamma(rng);
                double z = normal(rng);
                double vol = params.sigma * std::sqrt(g);
                xa += drift + params.theta * g + vol * z;
                xb += drift + params.theta * g - vol * z;
                s[ra + t] = float(std::exp(xa));
                s[rb + t] = float(std::exp(xb));
            }
        }
    } else {
        for (int p = 0; p < n_paths; ++p) {
            double x = x0;
            std::size_t row = std::size_t(p) * (n_steps + 1);
            for (int t = 1; t <= n_steps; ++t) {
                double g = gamma(rng);
                double z = normal(rng);
                x += drift + params.theta * g + params.sigma * std::sqrt(g) * z;
                s[row + t] = float(std::exp(x));
            }
        }
    }
    return batch;
}

McResult lsm_price(double s0, double k, const MarketEnv& env, const VgParams& params,
                   const McConfig& cfg) {
    if (!(s0 > 0.0) || !(k > 0.0))
        throw std::invalid_argument("lsm_price: spot and strike must be positive");
    if (cfg.n_paths < 100 || cfg.n_steps < 1)
        throw std::invalid_argument("lsm_price: need at least 100 paths and 1 step");

    const int np = cfg.n_paths;
    const int ns = cfg.n_steps;
    const double dt = env.T / ns;
    const double disc = std::exp(-env.r * dt);

    PathBatch batch = simulate_paths(s0, env, params, ns, np, cfg.seed, cfg.antithetic);
    const std::vector<float>& s = batch.prices;

    // terminal payoffs; cashflow vector rolled backwards
    std::vector<double> cf(np);
    for (int p = 0; p < np; ++p) {
        double st = s[std::size_t(p) * (ns + 1) + ns];
        cf[p] = std::max(k - st, 0.0);
    }
    double euro_mean = 0.0, euro_m2 = 0.0;
    {
        double df = std::exp(-env.r * env.T);
        for (int p = 0; p < np; ++p) {
            double v = df * cf[p];
            double delta = v - euro_mean;
            euro_mean += delta / (p + 1);
            euro_m2 += delta * (v - euro_mean);
        }
    }

    // backward induction: regress discounted continuation on {1, s, s^2, s^3},
    // s = S/K, over in-the-money paths
    std::vector<int> itm;
    itm.reserve(np);
    for (int t = ns - 1; t >= 1; --t) {
        for (int p = 0; p < np; ++p) cf[p] *= disc;

        itm.clear();
        for (int p = 0; p < np; ++p)
            if (double(s[std::size_t(p) * (ns + 1) + t]) < k) itm.push_back(p);
        if (itm.size() < 8) continue;

        Eigen::Matrix4d xtx = Eigen::Matrix4d::Zero();
        Eigen::Vector4d xty = Eigen::Vector4d::Zero();
        for (int p : itm) {
            double m = double(s[std::size_t(p) * (ns + 1) + t]) / k;
            Eigen::Vector4d b(1.0, m, m * m, m * m * m);
            xtx.noalias() += b * b.transpose();
            xty.noalias() += b * cf[p];
        }
        Eigen::Vector4d coef = xtx.ldlt().solve(xty);

        for (int p : itm) {
            double sp = double(s[std::size_t(p) * (ns + 1) + t]);
            double m = sp / k;
            double cont = coef[0] + m * (coef[1] + m * (coef[2] + m * coef[3]));
            double ex = k - sp;
            if (ex > cont) cf[p] = ex;
        }
    }
    for (int p = 0; p < np; ++p) cf[p] *= disc;

    double mean = 0.0, m2 = 0.0;
    if (cfg.antithetic) {
        // pairwise averages are the independent samples
        int half = np / 2;
        for (int i = 0; i < half; ++i) {
            double v = 0.5 * (cf[2 * i] + cf[2 * i + 1]);
            double delta = v - mean;
            mean += delta / (i + 1);
            m2 += delta * (v - mean);
        }
        m2 = m2 / (half - 1.0) / half;
    } else {
        for (int p = 0; p < np; ++p) {
            double delta = cf[p] - mean;
            mean += delta / (p + 1);
            m2 += delta * (cf[p] - mean);
        }
        m2 = m2 / (np - 1.0) / np;
    }

    McResult res;
    res.price = std::max(mean, k - s0); // exercising immediately is always available
    res.std_error = std::sqrt(m2);
    res.euro_price = euro_mean;
    res.euro_std_error = std::sqrt(euro_m2 / (np - 1.0) / np);
    return res;
}

} // namespace vgp
