#include "vgpricer/bms_approx.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vgp {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// unlike MarketEnv::validate this admits q < 0: the moment transfer produces
// effective yields below zero whenever the truncated drift exceeds q
void check_diffusion_env(const MarketEnv& env) {
    if (!(env.r >= 0.0) || !std::isfinite(env.r) || !std::isfinite(env.q) || !(env.T > 0.0))
        throw std::invalid_argument("bms: need r >= 0, finite q, T > 0");
}

struct D12 {
    double d1;
    double d2;
};

D12 d12(double s, double k, const MarketEnv& env, double sigma) {
    double vol = sigma * std::sqrt(env.T);
    double d1 = (std::log(s / k) + (env.r - env.q + 0.5 * sigma * sigma) * env.T) / vol;
    return {d1, d1 - vol};
}

double put_value(double s, double k, const MarketEnv& env, double sigma) {
    D12 d = d12(s, k, env, sigma);
    return k * std::exp(-env.r * env.T) * norm_cdf(-d.d2) - s * std::exp(-env.q * env.T) * norm_cdf(-d.d1);
}

// critical price of the quadratic approximation: K - S = p(S) - (1 - e^{-qT} N(-d1)) S / q2
double critical_price(double k, const MarketEnv& env, double sigma, double q2) {
    auto f = [&](double s) {
        D12 d = d12(s, k, env, sigma);
        double rhs = put_value(s, k, env, sigma)
                     - (1.0 - std::exp(-env.q * env.T) * norm_cdf(-d.d1)) * s / q2;
        return k - s - rhs;
    };
    // f(0+) = K(1 - e^{-rT}) > 0 and f(K + drifted span) < 0; bisection is
    // robust against the flat tails of N(-d1)
    double lo = 1e-10 * k, hi = k;
    double flo = f(lo);
    double fhi = f(hi);
    while (fhi > 0.0 && hi < 1e6 * k) {
        hi *= 2.0;
        fhi = f(hi);
    }
    if (flo < 0.0 || fhi > 0.0)
        throw std::runtime_error("bms_american_put: critical price bracket failed");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm > 0.0) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-12 * k) break;
    }
    return 0.5 * (lo + hi);
}

double baw_put(double s, double k, const MarketEnv& env, double sigma) {
    // without carry on K the quadratic exponent degenerates; the value is the
    // European floored at intrinsic
    if (env.r < 1e-12) return std::max(put_value(s, k, env, sigma), k - s);
    double s2 = sigma * sigma;
    double M = 2.0 * env.r / s2;
    double N = 2.0 * (env.r - env.q) / s2;
    double h = 1.0 - std::exp(-env.r * env.T);
    double q2 = 0.5 * (-(N - 1.0) - std::sqrt((N - 1.0) * (N - 1.0) + 4.0 * M / h));
    double s_star = critical_price(k, env, sigma, q2);
    if (s <= s_star) return k - s;
    D12 d = d12(s_star, k, env, sigma);
    double a2 = -(s_star / q2) * (1.0 - std::exp(-env.q * env.T) * norm_cdf(-d.d1));
    double p = put_value(s, k, env, sigma) + a2 * std::pow(s / s_star, q2);
    return std::max(p, k - s);
}

double tree_put(double s, double k, const MarketEnv& env, double sigma, int steps) {
    if (steps < 2000)
        throw std::invalid_argument("bms_american_put: tree needs >= 2000 steps");
    double dt = env.T / steps;
    double u = std::exp(sigma * std::sqrt(dt));
    double d = 1.0 / u;
    double p = (std::exp((env.r - env.q) * dt) - d) / (u - d);
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("bms_american_put: tree probability outside (0,1); increase steps");
    double disc = std::exp(-env.r * dt);

    std::vector<double> v(steps + 1);
    // terminal layer: S u^j d^(steps - j)
    for (int j = 0; j <= steps; ++j) {
        double st = s * std::pow(u, 2 * j - steps);
        v[j] = std::max(k - st, 0.0);
    }
    for (int t = steps - 1; t >= 0; --t) {
        double st = s * std::pow(u, -t);
        for (int j = 0; j <= t; ++j) {
            double cont = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            v[j] = std::max(cont, k - st);
            st *= u * u;
        }
    }
    return v[0];
}

} // namespace

double bms_put(double s, double k, const MarketEnv& env, double sigma) {
    check_diffusion_env(env);
    if (!(s > 0.0) || !(k > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("bms_put: spot, strike, sigma must be positive");
    return put_value(s, k, env, sigma);
}

double bms_american_put(double s, double k, const MarketEnv& env, double sigma,
                        AmericanApprox method, int tree_steps) {
    check_diffusion_env(env);
    if (!(s > 0.0) || !(k > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("bms_american_put: spot, strike, sigma must be positive");
    if (method == AmericanApprox::tree) return tree_put(s, k, env, sigma, tree_steps);
    return baw_put(s, k, env, sigma);
}

double simple_american_put(double s, double k, const MarketEnv& env, const VgParams& params,
                           const EuroCurve& curve, double eps, AmericanApprox method) {
    env.validate();
    if (!(eps > 0.0))
        throw std::invalid_argument("simple_american_put: eps must be positive");
    double sig_eff = std::sqrt(truncated_variance(eps, params));
    MarketEnv env_eff{env.r, env.q - truncated_drift(eps, params), env.T};
    double euro_vg = euro_put(s, k, curve);
    double premium = bms_american_put(s, k, env_eff, sig_eff, method)
                     - put_value(s, k, env_eff, sig_eff);
    return euro_vg + std::max(premium, 0.0);
}

} // namespace vgp
