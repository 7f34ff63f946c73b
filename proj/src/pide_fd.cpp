#include "vgpricer/pide_fd.hpp"
#include "vgpricer/errors.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace vgp {

namespace {

double e1(double x) {
    if (x > 700.0) return 0.0; // below double underflow once scaled by e^-x
    return boost::math::expint(1, x);
}

struct Tridiag {
    // constant-coefficient Thomas solve: forward coefficients precomputed
    std::vector<double> cp;    // modified superdiagonal
    std::vector<double> denom; // 1 / (diag - sub * cp[i-1])
    double sub = 0.0, sup = 0.0;

    void init(double a_sub, double a_diag, double a_sup, int n) {
        sub = a_sub;
        sup = a_sup;
        cp.assign(n, 0.0);
        denom.assign(n, 0.0);
        double prev = 0.0;
        for (int i = 0; i < n; ++i) {
            double d = a_diag - a_sub * prev;
            denom[i] = 1.0 / d;
            prev = a_sup * denom[i];
            cp[i] = prev;
        }
    }

    void solve(std::vector<double>& rhs) const {
        int n = int(rhs.size());
        rhs[0] *= denom[0];
        for (int i = 1; i < n; ++i)
            rhs[i] = (rhs[i] - sub * rhs[i - 1]) * denom[i];
        for (int i = n - 2; i >= 0; --i)
            rhs[i] -= cp[i] * rhs[i + 1];
    }
};

} // namespace

FdGrid make_fd_grid(double strike, const MarketEnv& env, const VgParams& params,
                    int n_space, int n_time) {
    env.validate();
    params.validate();
    if (!(strike > 0.0))
        throw std::invalid_argument("make_fd_grid: strike must be positive");
    if (n_space < 16 || n_time < 1)
        throw std::invalid_argument("make_fd_grid: grid too small");
    double s_tot = std::sqrt(params.sigma * params.sigma + params.nu * params.theta * params.theta);
    double half = 4.0 * s_tot * std::sqrt(env.T) + 1.0;
    double extra_low = 0.0;
    if (env.q > env.r)
        extra_low = std::min(3.0, std::log(env.q / std::max(env.r, 1e-4)));
    FdGrid g;
    g.n_space = n_space;
    g.n_time = n_time;
    g.x_min = std::log(strike) - half - extra_low;
    g.x_max = std::log(strike) + half;
    return g;
}

FdGrid fd_fine_grid(double strike, const MarketEnv& env, const VgParams& params) {
    return make_fd_grid(strike, env, params, 3000, 250);
}

FdGrid fd_coarse_grid(double strike, const MarketEnv& env, const VgParams& params) {
    return make_fd_grid(strike, env, params, 800, 80);
}

namespace {

// One backward sweep of the scheme; used twice in american mode so the
// premium is a same-grid difference.
std::vector<double> sweep(double k, const MarketEnv& env, const VgParams& par,
                          const FdGrid& g, bool american) {
    const int n = g.n_space;
    const int m_steps = g.n_time;
    const double dx = (g.x_max - g.x_min) / double(n - 1);
    const double dt = env.T / double(m_steps);
    const double nu = par.nu;
    const Lambdas lam = lambda_pn(par);

    const double eps = dx;
    const double sig2e = truncated_variance(eps, par);
    const double om_eps = truncated_drift(eps, par);
    const double drift = env.r - env.q + om_eps - 0.5 * sig2e;
    const double big_lambda = (e1(lam.p * eps) + e1(lam.n * eps)) / nu;

    std::vector<double> x(n), ex(n), payoff(n);
    for (int i = 0; i < n; ++i) {
        x[i] = g.x_min + i * dx;
        ex[i] = std::exp(x[i]);
        payoff[i] = k - ex[i];
    }

    // node weights of the jump convolution, positive side: node i+m gets cp[m]
    const double w_tiny = 1e-18;
    auto cell_weights = [&](double lambda, std::vector<double>& near_w, std::vector<double>& far_w) {
        // cell [j dx, (j+1) dx]: near node offset j, far node offset j+1
        near_w.assign(n, 0.0);
        far_w.assign(n, 0.0);
        double e1_lo = e1(lambda * dx), ex_lo = std::exp(-lambda * dx);
        for (int j = 1; j <= n - 2; ++j) {
            double hi = (j + 1) * dx;
            double e1_hi = e1(lambda * hi), ex_hi = std::exp(-lambda * hi);
            double mass = (e1_lo - e1_hi) / nu;              // int k
            double moment = (ex_lo - ex_hi) / (nu * lambda); // int y k
            near_w[j] = ((j + 1) * dx * mass - moment) / dx;
            far_w[j] = (moment - double(j) * dx * mass) / dx;
            e1_lo = e1_hi;
            ex_lo = ex_hi;
            if (mass < w_tiny && j > 2) break;
        }
    };
    std::vector<double> wp_near, wp_far, wn_near, wn_far;
    cell_weights(lam.p, wp_near, wp_far);
    // negative side via t = -y: cells [ (jj-1) dx, jj dx ] in t for jj >= 2,
    // far node i-jj at t = jj dx, near node i-jj+1
    {
        wn_near.assign(n, 0.0);
        wn_far.assign(n, 0.0);
        double e1_lo = e1(lam.n * dx), ex_lo = std::exp(-lam.n * dx);
        for (int jj = 2; jj <= n - 1; ++jj) {
            double hi = jj * dx;
            double e1_hi = e1(lam.n * hi), ex_hi = std::exp(-lam.n * hi);
            double mass = (e1_lo - e1_hi) / nu;
            double moment = (ex_lo - ex_hi) / (nu * lam.n);
            wn_far[jj] = (moment - (jj - 1) * dx * mass) / dx;
            wn_near[jj] = (double(jj) * dx * mass - moment) / dx;
            e1_lo = e1_hi;
            ex_lo = ex_hi;
            if (mass < w_tiny && jj > 3) break;
        }
    }
    // combined per-node weights: cp[m] applies to V_{i+m}, cn[m] to V_{i-m}
    std::vector<double> cp(n, 0.0), cn(n, 0.0);
    int jp_cut = 1, jn_cut = 1;
    for (int m = 1; m <= n - 2; ++m) {
        cp[m] = wp_near[m] + (m >= 2 ? wp_far[m - 1] : 0.0);
        if (cp[m] > 0.0) jp_cut = m;
    }
    for (int m = 1; m <= n - 2; ++m) {
        cn[m] = (m >= 2 ? wn_far[m] : 0.0) + (m + 1 <= n - 1 ? wn_near[m + 1] : 0.0);
        if (cn[m] > 0.0) jn_cut = m;
    }

    // analytic tail below the grid: int_{-inf}^{x_0 - x_i} V(x_i + y) k(y) dy
    // with V = K e^{-r tau} - e^{x+y} e^{-q tau} (European) or K - e^{x+y}
    std::vector<double> tail_k(n, 0.0), tail_s(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
        double u = i * dx;
        tail_k[i] = e1(lam.n * u) / nu;
        tail_s[i] = ex[i] * e1((lam.n + 1.0) * u) / nu;
    }

    // local operator L: diffusion sig2e/2, drift, discounting, and the total
    // jump mass big_lambda. Keeping the mass on the implicit side makes the
    // split unconditionally stable; only the nonlocal convolution is lagged.
    const double diff = 0.5 * sig2e / (dx * dx);
    const double adv = 0.5 * drift / dx;
    const double lop_sub = diff - adv;
    const double lop_sup = diff + adv;
    const double lop_diag = -(2.0 * diff + env.r + big_lambda);

    // Crank-Nicolson in time with a Rannacher start: the first two steps are
    // split into implicit-Euler half steps to damp the payoff kink, after
    // which the trapezoidal rule gives second-order accuracy. The lagged
    // convolution is extrapolated across the two stored levels so the jump
    // term keeps the same order.
    // the Euler half step and the trapezoidal full step share I - (dt/2) L
    const int n_rann = std::min(2, m_steps);
    const double dt_h = 0.5 * dt;
    Tridiag tri;
    tri.init(-dt_h * lop_sub, 1.0 - dt_h * lop_diag, -dt_h * lop_sup, n - 2);

    std::vector<double> v(n), rhs(n - 2), jint(n), jprev(n);
    for (int i = 0; i < n; ++i) v[i] = std::max(payoff[i], 0.0);
    bool have_prev = false;

    // convolution of the current profile plus the analytic tail, at time to
    // maturity tau of the profile itself
    auto jump_term = [&](double tau) {
        const double disc_k = american ? k : k * std::exp(-env.r * tau);
        const double disc_s = american ? 1.0 : std::exp(-env.q * tau);
        for (int i = 1; i < n - 1; ++i) {
            double acc = 0.0;
            const int up = std::min(jp_cut, n - 2 - i);
            const double* vi = v.data() + i;
            for (int m = 1; m <= up; ++m) acc += cp[m] * vi[m];
            const int dn = std::min(jn_cut, i - 1);
            for (int m = 1; m <= dn; ++m) acc += cn[m] * vi[-m];
            acc += wn_far[i] * v[0]; // last on-grid cell touches the edge node
            acc += disc_k * tail_k[i] - disc_s * tail_s[i];
            jint[i] = acc;
        }
    };
    auto bc_at = [&](double tau) {
        return american ? payoff[0]
                        : k * std::exp(-env.r * tau) - ex[0] * std::exp(-env.q * tau);
    };
    auto finish_step = [&](double bc_low) {
        v[0] = bc_low;
        v[n - 1] = 0.0;
        if (american) {
            for (int i = 1; i < n - 1; ++i) v[i] = std::max(rhs[i - 1], payoff[i]);
        } else {
            for (int i = 1; i < n - 1; ++i) v[i] = rhs[i - 1];
        }
    };

    for (int step = 0; step < m_steps; ++step) {
        const double tau = step * dt;
        if (step < n_rann) {
            for (int sub = 0; sub < 2; ++sub) {
                const double t_old = tau + sub * dt_h;
                jump_term(t_old);
                double bc_low = bc_at(t_old + dt_h);
                for (int i = 1; i < n - 1; ++i) rhs[i - 1] = v[i] + dt_h * jint[i];
                rhs[0] += dt_h * lop_sub * bc_low;
                // upper boundary value is 0, nothing to fold
                tri.solve(rhs);
                finish_step(bc_low);
            }
            continue;
        }
        jump_term(tau);
        double bc_low = bc_at(tau + dt);
        for (int i = 1; i < n - 1; ++i) {
            double lv = lop_sub * v[i - 1] + lop_diag * v[i] + lop_sup * v[i + 1];
            double jx = have_prev ? 1.5 * jint[i] - 0.5 * jprev[i] : jint[i];
            rhs[i - 1] = v[i] + dt_h * lv + dt * jx;
        }
        rhs[0] += dt_h * lop_sub * bc_low;
        tri.solve(rhs);
        jprev.swap(jint);
        have_prev = true;
        finish_step(bc_low);
    }
    return v;
}

} // namespace

FdSolution fd_solve(double strike, const MarketEnv& env, const VgParams& params,
                    const FdGrid& grid, Exercise ex, bool want_premium) {
    env.validate();
    params.validate();
    if (!(strike > 0.0))
        throw std::invalid_argument("fd_solve: strike must be positive");
    if (grid.n_space < 16 || grid.n_time < 1 || !(grid.x_max > grid.x_min))
        throw std::invalid_argument("fd_solve: bad grid");
    martingale_drift(params); // rejects parameter sets without a martingale measure

    FdSolution sol;
    sol.grid = grid;
    sol.strike = strike;
    const int n = grid.n_space;
    const double dx = (grid.x_max - grid.x_min) / double(n - 1);
    sol.x.resize(n);
    for (int i = 0; i < n; ++i) sol.x[i] = grid.x_min + i * dx;

    if (ex == Exercise::european) {
        sol.european = sweep(strike, env, params, grid, false);
        return sol;
    }
    sol.american = sweep(strike, env, params, grid, true);
    if (want_premium) {
        sol.european = sweep(strike, env, params, grid, false);
        sol.premium.resize(n);
        for (int i = 0; i < n; ++i) sol.premium[i] = sol.american[i] - sol.european[i];
    }
    return sol;
}

namespace {

double interp_profile(const FdSolution& sol, const std::vector<double>& vals, double spot) {
    if (vals.empty())
        throw std::logic_error("fd interpolation: profile not computed");
    if (!(spot > 0.0))
        throw std::invalid_argument("fd interpolation: spot must be positive");
    double x = std::log(spot);
    if (x < sol.grid.x_min || x > sol.grid.x_max)
        throw std::invalid_argument("fd interpolation: spot outside solved grid");
    double dx = (sol.grid.x_max - sol.grid.x_min) / double(sol.grid.n_space - 1);
    int i = std::min(int((x - sol.grid.x_min) / dx), sol.grid.n_space - 2);
    double t = (x - sol.x[i]) / dx;
    return (1.0 - t) * vals[i] + t * vals[i + 1];
}

} // namespace

double FdSolution::value_at(double spot) const {
    return interp_profile(*this, american.empty() ? european : american, spot);
}

double FdSolution::european_at(double spot) const {
    return interp_profile(*this, european, spot);
}

double extract_boundary(const FdSolution& sol, double strike, double tol) {
    if (sol.american.empty())
        throw std::logic_error("extract_boundary: american profile not computed");
    if (!(tol > 0.0))
        throw std::invalid_argument("extract_boundary: tol must be positive");
    const int n = int(sol.x.size());
    int hit = -1;
    for (int i = n - 1; i >= 0; --i) {
        double d = sol.american[i] - (strike - std::exp(sol.x[i]));
        if (d <= tol) {
            hit = i;
            break;
        }
    }
    if (hit < 0)
        throw no_exercise_region_error("extract_boundary: price never touches payoff on the grid");
    if (hit == n - 1)
        throw no_exercise_region_error("extract_boundary: payoff touched at the upper grid edge");
    if (hit == 0)
        throw no_exercise_region_error(
            "extract_boundary: payoff touched only at the pinned lower grid edge");
    double d_lo = sol.american[hit] - (strike - std::exp(sol.x[hit]));
    double d_hi = sol.american[hit + 1] - (strike - std::exp(sol.x[hit + 1]));
    if (d_hi <= d_lo) return sol.x[hit];
    double frac = (tol - d_lo) / (d_hi - d_lo);
    return sol.x[hit] + frac * (sol.x[hit + 1] - sol.x[hit]);
}

double extract_lambda(const FdSolution& sol, double x_star, double strike) {
    if (sol.premium.empty())
        throw std::logic_error("extract_lambda: premium profile not computed");
    double lnk = std::log(strike);
    if (!(x_star < lnk))
        throw std::invalid_argument("extract_lambda: boundary must lie below ln k");
    double hi = x_star + 2.0 * (lnk - x_star);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < sol.x.size(); ++i) {
        if (sol.x[i] <= x_star || sol.x[i] >= hi) continue;
        if (!(sol.premium[i] > 0.0)) continue;
        double lx = sol.x[i], ly = std::log(sol.premium[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 5)
        throw degenerate_window_error("extract_lambda: fewer than 5 usable nodes in the fit window");
    double det = m * sxx - sx * sx;
    return (m * sxy - sx * sy) / det;
}

void write_profile(const FdSolution& sol, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        throw std::runtime_error("write_profile: cannot open " + path);
    std::fprintf(f, "x\tamerican\teuropean\tpremium\n");
    for (std::size_t i = 0; i < sol.x.size(); ++i) {
        double am = sol.american.empty() ? 0.0 : sol.american[i];
        double eu = sol.european.empty() ? 0.0 : sol.european[i];
        double pr = sol.premium.empty() ? 0.0 : sol.premium[i];
        std::fprintf(f, "%.17g\t%.17g\t%.17g\t%.17g\n", sol.x[i], am, eu, pr);
    }
    std::fclose(f);
}

} // namespace vgp
