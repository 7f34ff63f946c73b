#include "vgpricer/quad_core.hpp"
#include "vgpricer/errors.hpp"
#include "vgpricer/nelder_mead.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <stdexcept>

namespace vgp {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Ein(z) = int_0^z (1 - e^-t)/t dt, entire; for z < 0 it continues through
// Ei. Stable for any real argument not driving Ei into overflow.
double ein(double z) {
    double az = std::abs(z);
    if (az < 0.5) {
        // sum_{j>=1} (-1)^{j+1} z^j / (j j!)
        double term = z, sum = z;
        for (int j = 2; j < 20; ++j) {
            term *= -z / j;
            double add = term / j;
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    if (z > 0.0) {
        double e1 = z > 700.0 ? 0.0 : boost::math::expint(1, z);
        return kEulerGamma + std::log(z) + e1;
    }
    return kEulerGamma + std::log(az) - boost::math::expint(az);
}

// e^-t Ei(t) for t >= 40 by the asymptotic series sum k!/t^(k+1)
double ei_scaled(double t) {
    double term = 1.0 / t, sum = term;
    for (int k = 1; k < 200; ++k) {
        double next = term * k / t;
        if (next >= term) break; // series turned divergent
        term = next;
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// e^z E1(z) by the continued fraction 1/(z+1- 1/(z+3- 4/(z+5- ...))), modified
// Lentz recurrence; accurate for z >= 1 and free of the e^-z underflow
double e1_scaled(double z) {
    const double tiny = 1e-300;
    double f = z + 1.0, c = f, d = 0.0;
    for (int k = 1; k < 200; ++k) {
        double a = -static_cast<double>(k) * k;
        double b = z + 2.0 * k + 1.0;
        d = b + a * d;
        if (d == 0.0) d = tiny;
        c = b + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

double r_coefficient(const MarketEnv& env) {
    if (env.r < 1e-8) return 1.0 / env.T;
    return env.r / (1.0 - std::exp(-env.r * env.T));
}

// jump reach where the left-tail density drops below 1e-12 (strike-free so
// the truncation is invariant under strike scaling)
double left_truncation(const Lambdas& lam, double nu) {
    double y = 30.0 / lam.n;
    for (int it = 0; it < 50; ++it) {
        double next = (27.631021115928547 - std::log(nu * y)) / lam.n; // -ln(1e-12)
        if (std::abs(next - y) < 1e-12 * y) return next;
        y = next;
    }
    return y;
}

} // namespace

double b_from(double x_star, double k, const EuroCurve& curve) {
    if (!(k > 0.0))
        throw std::invalid_argument("b_from: strike must be positive");
    double s_star = std::exp(x_star);
    double gap = k - s_star - euro_put(s_star, k, curve);
    if (!(gap > 0.0))
        throw infeasible_boundary_error("b_from: exercise value does not exceed the European put");
    return std::log(gap);
}

std::vector<double> collocation_points(double x_star, double k, int n) {
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("collocation_points: n must be even and >= 2");
    double lnk = std::log(k);
    if (!(x_star < lnk))
        throw std::invalid_argument("collocation_points: boundary must lie below ln k");
    std::vector<double> pts(n + 1);
    for (int i = 0; i <= n; ++i)
        pts[i] = x_star + (2.0 * i / n) * (lnk - x_star);
    return pts;
}

double premium_w(double x, double k, const PremiumFit& fit, const EuroCurve& curve) {
    if (x <= fit.x_star) {
        double s = std::exp(x);
        return k - s - euro_put(s, k, curve);
    }
    return std::exp(fit.lambda * (x - fit.x_star) + fit.b);
}

namespace {

// Quantities of the exercise-region integral that depend on (fit, curve, k)
// but not on the evaluation point. Through put-call parity the exercise value
// splits as K - s - p(s) = K (1 - df_r) - s (1 - df_q) - c(s), whose constant
// and forward pieces integrate in closed form against the tail density
// e^{-lam_n t} / (nu t); the call piece is peeled by its boundary value times
// the certified tail decay e^{-lam_p (t - u)}, leaving a small smooth
// remainder for quadrature.
struct ExcShared {
    double y_cut;            // truncation of the downward jump range
    double kap, z1, zk;      // peel rate and shifted density rates
    double c_star;           // call value at the boundary spot
    double e1_n_y, e1_z1_y;  // E1 tails at the truncation
    double e1s_zk_y;         // e^z E1(z) tail for the peel rate
    double w_span;           // shared remainder window width in log-spot
    std::vector<double> zn, qw; // shared remainder nodes / weighted values
};

ExcShared exc_shared(double k, const PremiumFit& fit, const EuroCurve& curve) {
    ExcShared ex;
    const Lambdas& lam = curve.lam;
    ex.y_cut = left_truncation(lam, curve.params.nu);
    ex.kap = lam.p;
    ex.z1 = lam.n + 1.0;
    ex.zk = lam.n + ex.kap;
    double s_star = std::exp(fit.x_star);
    // call value at the boundary; exactly zero once the put curve has reached
    // its deep-in-the-money intrinsic tail
    ex.c_star = euro_put(s_star, k, curve) + s_star * curve.df_q - k * curve.df_r;
    ex.e1_n_y = boost::math::expint(1, lam.n * ex.y_cut);
    ex.e1_z1_y = boost::math::expint(1, ex.z1 * ex.y_cut);
    ex.e1s_zk_y = e1_scaled(ex.zk * ex.y_cut);
    ex.w_span = std::min(ex.y_cut, 36.0 / ex.z1);

    // Shared remainder quadrature. In log-spot z = x - t every collocation
    // point integrates the same function
    //   q(z) = (c(e^z) - c_star e^{-kap (x_star - z)}) e^{-lam_n (x_star - z)}
    // over (x_star - W, x_star), weighted by 1 / (x - z). Tabulate q once on
    // Gauss-Legendre panels that grow geometrically away from the boundary,
    // where the peel makes the integrand sharpest.
    using gl = boost::math::quadrature::gauss<double, 30>;
    const auto& xs = gl::abscissa(); // 15 non-negative nodes
    const auto& ws = gl::weights();
    double width_cap = 6.0 / ex.z1;
    double h = std::min({ex.w_span, 1.0 / ex.kap, width_cap});
    ex.zn.reserve(16 * 30);
    ex.qw.reserve(16 * 30);
    double m = 0.0; // distance of the panel's right edge below x_star
    while (m < ex.w_span) {
        double m_next = std::min(ex.w_span, m + h);
        double mid = fit.x_star - 0.5 * (m + m_next);
        double half = 0.5 * (m_next - m);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            int copies = xs[j] == 0.0 ? 1 : 2;
            for (int sgn = 0; sgn < copies; ++sgn) {
                double z = mid + (sgn == 0 ? half * xs[j] : -half * xs[j]);
                double d = fit.x_star - z;
                double cv = euro_put(std::exp(z), k, curve) + std::exp(z) * curve.df_q
                            - k * curve.df_r;
                double q = (cv - ex.c_star * std::exp(-ex.kap * d)) * std::exp(-lam.n * d);
                ex.zn.push_back(z);
                ex.qw.push_back(q * ws[j] * half);
            }
        }
        m = m_next;
        h = std::min(2.0 * h, width_cap);
    }
    return ex;
}

// All terms of g at one point given the shared pieces and the exercise-region
// remainder integral for that point.
double g_terms(double x, double k, const PremiumFit& fit, const EuroCurve& curve,
               const ExcShared& ex, double rem) {
    const MarketEnv& env = curve.env;
    const Lambdas& lam = curve.lam;
    const double nu = curve.params.nu;
    const double u = x - fit.x_star;
    if (u < 0.0)
        throw std::invalid_argument("g_eval: x below the exercise boundary");
    if (!(fit.lambda < 0.0))
        throw std::invalid_argument("g_eval: lambda must be negative");

    const double w0 = std::exp(fit.lambda * u + fit.b);

    // first derivative of the premium: exercise branch at the boundary point,
    // continuation branch above it
    double w_x;
    if (u == 0.0)
        w_x = -std::exp(x) - euro_put_dx(x, k, curve);
    else
        w_x = fit.lambda * w0;

    const double term_drift = (env.r - env.q + curve.omega) * w_x;
    const double term_r = -r_coefficient(env) * w0;

    // jumps up: continuation branch everywhere, Frullani closed form
    const double i_pos = w0 * std::log(lam.p / (lam.p - fit.lambda)) / nu;

    // jumps down within the continuation region, y in (x_star - x, 0):
    // (w0/nu) [Ein(lam_n u) - Ein((lambda + lam_n) u)], written to avoid
    // underflow(w0) * overflow(Ein) when lambda u is very negative
    double i_mid = 0.0;
    if (u > 0.0) {
        double zn = lam.n * u;
        double z = (fit.lambda + lam.n) * u;
        if (z >= -40.0) {
            i_mid = w0 * (ein(zn) - ein(z)) / nu;
        } else {
            i_mid = w0 * (ein(zn) - kEulerGamma - std::log(-z)) / nu
                    + std::exp(fit.b - zn) * ei_scaled(-z) / nu;
        }
    }

    // jumps down into the exercise region, t = -y in (u, Y)
    double i_exc = 0.0;
    if (u < ex.y_cut) {
        const double a_c = k * (1.0 - curve.df_r) - w0;
        const double b_c = (1.0 - curve.df_q) * std::exp(x);

        double cf_u;
        if (ex.zk * u < 30.0) {
            // grouped so the ln u singularity carries the coefficient
            // a_c - b_c - c_t, which vanishes as u -> 0
            const double c_t = ex.c_star * std::exp(ex.kap * u);
            const double d_c = a_c - b_c - c_t;
            cf_u = -a_c * std::log(lam.n) + b_c * std::log(ex.z1) + c_t * std::log(ex.zk)
                   + a_c * ein(lam.n * u) - b_c * ein(ex.z1 * u) - c_t * ein(ex.zk * u);
            if (u > 0.0) cf_u -= (kEulerGamma + std::log(u)) * d_c;
        } else {
            cf_u = a_c * boost::math::expint(1, lam.n * u)
                   - b_c * boost::math::expint(1, ex.z1 * u)
                   - ex.c_star * std::exp(-lam.n * u) * e1_scaled(ex.zk * u);
        }

        const double cf_y = a_c * ex.e1_n_y - b_c * ex.e1_z1_y
                            - ex.c_star * std::exp(ex.kap * u - ex.zk * ex.y_cut) * ex.e1s_zk_y;

        i_exc = (cf_u - cf_y - rem) / nu;
    }

    return term_drift + term_r + i_pos + i_mid + i_exc;
}

// Remainder integral from the shared tabulation. Nodes beyond the point's own
// truncation window only add contributions already below the tail threshold,
// so the same table serves every point above the boundary. Keeping a single
// evaluation path also makes the loss vanish identically at its own targets.
double exc_remainder(double x, const EuroCurve& curve, const PremiumFit& fit,
                     const ExcShared& ex) {
    const double u = x - fit.x_star;
    if (u >= ex.y_cut) return 0.0;
    double dot = 0.0;
    for (std::size_t n = 0; n < ex.zn.size(); ++n) dot += ex.qw[n] / (x - ex.zn[n]);
    return std::exp(-curve.lam.n * u) * dot;
}

} // namespace

double g_eval(double x, double k, const PremiumFit& fit, const EuroCurve& curve) {
    ExcShared ex = exc_shared(k, fit, curve);
    return g_terms(x, k, fit, curve, ex, exc_remainder(x, curve, fit, ex));
}

double collocation_loss(const CollocationTargets& targets, double k, const PremiumFit& fit,
                        const EuroCurve& curve) {
    std::vector<double> pts = collocation_points(fit.x_star, k);
    ExcShared ex = exc_shared(k, fit, curve);
    double acc = 0.0;
    for (int i = 0; i <= kCollocationN; ++i) {
        double d = g_terms(pts[i], k, fit, curve, ex, exc_remainder(pts[i], curve, fit, ex))
                   - targets.e[i];
        acc += d * d;
    }
    return acc;
}

FitResult solve_fit(const CollocationTargets& targets, double k, const EuroCurve& curve,
                    double lambda_init, double x_star_init, const SolverBox& box) {
    if (!(k > 0.0))
        throw std::invalid_argument("solve_fit: strike must be positive");
    const double lnk = std::log(k);
    const std::vector<double> lo{box.lambda_lo, lnk - box.gap_hi};
    const std::vector<double> hi{box.lambda_hi, lnk - box.gap_lo};

    int evals = 0;
    auto objective = [&](const std::vector<double>& p) {
        ++evals;
        PremiumFit fit{p[0], p[1], 0.0};
        try {
            fit.b = b_from(fit.x_star, k, curve);
        } catch (const infeasible_boundary_error&) {
            return 1e6;
        }
        return collocation_loss(targets, k, fit, curve);
    };

    NmOptions opt;
    opt.max_iter = 300;
    opt.f_tol_rel = 1e-10;
    // absolute spread floor, scaled like the loss (a squared residual of
    // magnitude ~ r_coefficient * premium); without it a near-exact fit
    // cycles on floating point noise until the iteration cap
    double w_scale = 0.01 * k;
    try {
        double x0 = std::clamp(x_star_init, lnk - box.gap_hi, lnk - box.gap_lo);
        double l0 = std::clamp(lambda_init, box.lambda_lo, box.lambda_hi);
        w_scale = std::exp(l0 * (lnk - x0) + b_from(x0, k, curve));
    } catch (const infeasible_boundary_error&) {
    }
    const double g_scale = r_coefficient(curve.env) * w_scale;
    opt.f_tol = 1e-9 * g_scale * g_scale;

    auto run_from = [&](double l0, double x0) {
        std::vector<double> start{std::clamp(l0, box.lambda_lo, box.lambda_hi),
                                  std::clamp(x0, lnk - box.gap_hi, lnk - box.gap_lo)};
        std::vector<double> step{std::max(0.3, 0.06 * std::abs(start[0])),
                                 -0.1 * (lnk - start[1])};
        return nelder_mead(objective, start, step, lo, hi, opt);
    };

    NmResult best = run_from(lambda_init, x_star_init);

    auto threshold = [&](const NmResult& r) {
        PremiumFit fit{r.x[0], r.x[1], 0.0};
        try {
            fit.b = b_from(fit.x_star, k, curve);
        } catch (const infeasible_boundary_error&) {
            return -1.0; // force restarts
        }
        double w_atm = std::exp(fit.lambda * (lnk - fit.x_star) + fit.b);
        double scale = r_coefficient(curve.env) * w_atm;
        return 1e-4 * scale * scale;
    };

    int restarts = 0;
    if (best.fval > threshold(best)) {
        const double gap0 = lnk - best.x[1];
        const double tries[3][2] = {
            {best.x[0] * 0.6, lnk - gap0 * 0.5},
            {best.x[0] * 1.6, lnk - gap0 * 1.6},
            {lambda_init * 1.0 - 2.0, lnk - 0.5 * box.gap_hi},
        };
        for (auto& t : tries) {
            ++restarts;
            NmResult r = run_from(t[0], t[1]);
            if (r.fval < best.fval) best = r;
            if (best.fval <= threshold(best)) break;
        }
    }

    FitResult out;
    out.fit.lambda = best.x[0];
    out.fit.x_star = best.x[1];
    out.fit.b = b_from(out.fit.x_star, k, curve);
    out.loss = best.fval;
    out.restarts = restarts;
    out.evaluations = evals;
    return out;
}

double price_american(double s0, double k, const PremiumFit& fit, const EuroCurve& curve) {
    if (!(s0 > 0.0) || !(k > 0.0))
        throw std::invalid_argument("price_american: spot and strike must be positive");
    double x = std::log(s0);
    if (x <= fit.x_star) return k - s0;
    double p = euro_put(s0, k, curve);
    double prem = std::exp(fit.lambda * (x - fit.x_star) + fit.b);
    return std::max(p + prem, std::max(k - s0, 0.0));
}

} // namespace vgp
