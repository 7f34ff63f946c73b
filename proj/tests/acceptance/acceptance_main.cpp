// Acceptance gate: exercises every primary deliverable end to end against the
// published reference values and the derived tolerance bands. Each criterion
// prints one [PASS]/[FAIL] line; the exit code is the number of failures.
//
// usage: vgpricer_acceptance <dataset.tsv> <models.json>
//
// The dataset is expected to cover the desk-scale training grid (the full
// production grid works too and tightens nothing here; it is a documented
// manual target because it takes hours to build).

#include "vgpricer/bench.hpp"
#include "vgpricer/bms_approx.hpp"
#include "vgpricer/correction_learn.hpp"
#include "vgpricer/errors.hpp"
#include "vgpricer/euro_fft.hpp"
#include "vgpricer/mc_lsm.hpp"
#include "vgpricer/pide_fd.hpp"
#include "vgpricer/quad_core.hpp"
#include "vgpricer/vg_model.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

using namespace vgp;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %-34s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct TimedPrices {
    std::vector<double> values;
    std::vector<double> seconds;
    double mean_seconds() const {
        double s = 0.0;
        for (double v : seconds) s += v;
        return s / double(seconds.size());
    }
    double max_seconds() const {
        double s = 0.0;
        for (double v : seconds) s = std::max(s, v);
        return s;
    }
};

TimedPrices fd_prices(const std::vector<BenchQuery>& qs, bool fine) {
    TimedPrices out;
    for (const BenchQuery& q : qs) {
        double t0 = now_s();
        FdGrid g = fine ? fd_fine_grid(q.k, q.env, q.params) : fd_coarse_grid(q.k, q.env, q.params);
        out.values.push_back(
            fd_solve(q.k, q.env, q.params, g, Exercise::american, false).value_at(q.s0));
        out.seconds.push_back(now_s() - t0);
    }
    return out;
}

TimedPrices main_prices(const std::vector<BenchQuery>& qs,
                        const std::vector<PrecalcRecord>& recs, const ModelSet& models) {
    TimedPrices out;
    for (const BenchQuery& q : qs) {
        double t0 = now_s();
        out.values.push_back(main_price(q.s0, q.k, q.env, q.params, recs, models).price);
        out.seconds.push_back(now_s() - t0);
    }
    return out;
}

TimedPrices simple_prices(const std::vector<BenchQuery>& qs) {
    TimedPrices out;
    for (const BenchQuery& q : qs) {
        double t0 = now_s();
        EuroCurve curve = build_curve(q.env, q.params);
        out.values.push_back(simple_american_put(q.s0, q.k, q.env, q.params, curve));
        out.seconds.push_back(now_s() - t0);
    }
    return out;
}

// published reference prices for the fine finite-difference engine, in query
// order (four parameter rows, strikes innermost)
const std::vector<double> kT2FdFine = {
    26.961, 53.119, 104.401,   // (0.10, 0.10, -0.50) x K 2800/2900/3000
    80.429, 100.103, 130.478,  // (0.40, 0.60, -0.50)
    12.088, 24.642, 99.999,    // (0.10, 0.60, -0.10)
    71.324, 110.992, 170.431}; // (0.40, 0.10, -0.10)

// quick re-checks of the analytic property suite; each sub-check prints an
// indented diagnostic and flips ok on failure
bool property_suite() {
    bool ok = true;
    auto sub = [&ok](const char* what, bool pass, double measured, double bound) {
        std::printf("       - %-44s %s (%.3e vs %.3e)\n", what, pass ? "ok" : "FAIL", measured,
                    bound);
        if (!pass) ok = false;
    };

    MarketEnv env{0.05, 0.01, 0.25};
    VgParams p{0.2, 0.3, -0.25};
    EuroCurve curve = build_curve(env, p);
    const double k = 1000.0;
    PremiumFit fit{-8.0, std::log(k) - 0.3, 0.0};
    fit.b = b_from(fit.x_star, k, curve);

    { // strike scaling of the residual stencil, normalized by its magnitude
        std::vector<double> xs = collocation_points(fit.x_star, k);
        double worst = 0.0;
        for (double alpha : {0.5, 2.0, 2.9}) {
            EuroCurve c2 = curve; // homogeneity: the unit-spot curve is shared
            PremiumFit f2{fit.lambda, fit.x_star + std::log(alpha), 0.0};
            f2.b = b_from(f2.x_star, alpha * k, c2);
            double scale = 0.0;
            std::vector<double> g1(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                g1[i] = g_eval(xs[i], k, fit, curve);
                scale = std::max(scale, std::abs(alpha * g1[i]));
            }
            for (std::size_t i = 0; i < xs.size(); ++i) {
                double g2 = g_eval(xs[i] + std::log(alpha), alpha * k, f2, c2);
                worst = std::max(worst, std::abs(g2 - alpha * g1[i]) / scale);
            }
        }
        sub("residual strike scaling (relative)", worst <= 1e-9, worst, 1e-9);
    }

    { // premium and European homogeneity
        double worst = 0.0;
        for (double alpha : {0.5, 2.9}) {
            PremiumFit f2{fit.lambda, fit.x_star + std::log(alpha), fit.b + std::log(alpha)};
            for (double dx : {0.05, 0.4, 1.1}) {
                double x = fit.x_star + dx;
                double w1 = premium_w(x, k, fit, curve);
                double w2 = premium_w(x + std::log(alpha), alpha * k, f2, curve);
                worst = std::max(worst, std::abs(w2 - alpha * w1) / (alpha * w1));
                double e1 = euro_put(std::exp(x), k, curve);
                double e2 = euro_put(alpha * std::exp(x), alpha * k, curve);
                worst = std::max(worst, std::abs(e2 - alpha * e1) / (alpha * e1));
            }
        }
        sub("premium/European homogeneity", worst <= 1e-10, worst, 1e-10);
    }

    { // loss at a definitional fixed point, then inverse-crime recovery
        CollocationTargets t;
        std::vector<double> xs = collocation_points(fit.x_star, k);
        for (std::size_t i = 0; i < xs.size(); ++i) t.e[i] = g_eval(xs[i], k, fit, curve);
        double l0 = collocation_loss(t, k, fit, curve);
        sub("loss zero at fixed point", l0 <= 1e-16, l0, 1e-16);
        FitResult rec = solve_fit(t, k, curve, fit.lambda + 0.5, fit.x_star - 0.02);
        double dl = std::abs(rec.fit.lambda - fit.lambda);
        double dx = std::abs(rec.fit.x_star - fit.x_star);
        sub("inverse-crime lambda recovery", dl <= 1e-3, dl, 1e-3);
        sub("inverse-crime boundary recovery", dx <= 1e-4, dx, 1e-4);
    }

    { // parity bounds and convexity of the European curve
        double worst_bound = 0.0, worst_convex = 0.0;
        for (int i = 0; i <= 20; ++i) {
            double kk = 700.0 + 30.0 * i;
            double pv = euro_put(1000.0, kk, curve);
            double intrinsic = std::max(0.0, kk * curve.df_r - 1000.0 * curve.df_q);
            worst_bound = std::max(worst_bound,
                                   std::max(intrinsic - pv, pv - kk * curve.df_r));
            if (i >= 2) {
                double a = euro_put(1000.0, kk - 60.0, curve);
                double b = euro_put(1000.0, kk - 30.0, curve);
                worst_convex = std::max(worst_convex, 2.0 * b - a - pv);
            }
        }
        sub("European parity bounds", worst_bound <= 1e-7 * k, worst_bound, 1e-7 * k);
        sub("European convexity in strike", worst_convex <= 1e-6 * k, worst_convex, 1e-6 * k);
    }

    { // truncated moments stitch back to the full ones
        double full_var = p.sigma * p.sigma + p.nu * p.theta * p.theta;
        double lo = truncated_variance(0.65, p);
        auto tail = [&p](double eps) {
            // crude Simpson on the explicit tail integrand, adequate at 1e-8
            auto f = [&p](double y) { return y * y * levy_density(y, p); };
            double acc = 0.0;
            for (double side : {-1.0, 1.0}) {
                double a = eps, b = 40.0;
                int n = 20000;
                double h = (b - a) / n;
                double s = f(side * a) + f(side * b);
                for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(side * (a + i * h));
                acc += s * h / 3.0;
            }
            return acc;
        };
        double stitched = lo + tail(0.65);
        double err_var = std::abs(stitched - full_var) / full_var;
        sub("truncated variance + tail identity", err_var <= 1e-6, err_var, 1e-6);
        double drift_gap = std::abs(truncated_drift(1e-4, p) - martingale_drift(p));
        sub("truncated drift converges to full drift", drift_gap <= 1e-5, drift_gap, 1e-5);
    }

    { // continuity of the assembled price across the small-rate switch
        VgParams pz{0.2, 0.3, -0.25};
        CollocationTargets zero;
        double prices[2];
        int idx = 0;
        for (double r : {1e-7, 1e-9}) {
            MarketEnv e0{r, 0.0, 0.25};
            EuroCurve c0 = build_curve(e0, pz);
            FitResult fr = solve_fit(zero, k, c0, -6.0, std::log(k) - 1.5);
            prices[idx++] = price_american(950.0, k, fr.fit, c0);
        }
        double gap = std::abs(prices[0] - prices[1]);
        sub("small-rate continuity of the main price", gap <= 1e-3, gap, 1e-3);
    }

    return ok;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: %s <dataset.tsv> <models.json>\n", argv[0]);
        return 64;
    }

    std::vector<PrecalcRecord> recs;
    ModelSet models;
    try {
        recs = load_dataset(argv[1]);
        models = load_models(argv[2]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: cannot load inputs: %s\n", e.what());
        return 64;
    }
    std::printf("dataset: %zu records (%s)\nmodels:  %s\n\n", recs.size(), argv[1], argv[2]);

    const std::vector<BenchQuery> t1 = table_queries(1);
    const std::vector<BenchQuery> t2 = table_queries(2);
    const std::vector<BenchQuery> t3 = table_queries(3);
    const std::vector<BenchQuery> t4 = table_queries(4);

    // reference solves are reused across all criteria below
    std::printf("computing fine FD references (48 solves)...\n");
    TimedPrices fine2 = fd_prices(t2, true);
    TimedPrices fine3 = fd_prices(t3, true);
    TimedPrices fine4 = fd_prices(t4, true);
    TimedPrices fine1 = fd_prices(t1, true);

    { // 1. fine FD reproduces the published reference column
        double worst = 0.0;
        for (std::size_t i = 0; i < fine2.values.size(); ++i)
            worst = std::max(worst, std::abs(fine2.values[i] - kT2FdFine[i]));
        bool ok = worst <= 0.3 && fine2.max_seconds() <= 30.0;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "worst |err| %.4f (tol 0.3), slowest solve %.2f s (tol 30)", worst,
                      fine2.max_seconds());
        report("1. fine FD vs published prices", ok, buf);
    }

    TimedPrices coarse2 = fd_prices(t2, false);
    { // 2. the coarse grid sits in the documented error band
        double r = rmse_of(coarse2.values, fine2.values);
        char buf[96];
        std::snprintf(buf, sizeof buf, "RMSE %.3f (band [0.2, 1.5])", r);
        report("2. coarse-grid error band", r >= 0.2 && r <= 1.5, buf);
    }

    TimedPrices main2 = main_prices(t2, recs, models);
    TimedPrices main3 = main_prices(t3, recs, models);
    TimedPrices main4 = main_prices(t4, recs, models);
    { // 3. fitted-correction accuracy on all three preset grids
        double r2 = rmse_of(main2.values, fine2.values);
        double r3 = rmse_of(main3.values, fine3.values);
        double r4 = rmse_of(main4.values, fine4.values);
        bool ok = r2 <= 1.0 && r3 <= 1.0 && r4 <= 3.5;
        char buf[128];
        std::snprintf(buf, sizeof buf, "RMSE %.3f / %.3f (tol 1.0), long-dated %.3f (tol 3.5)",
                      r2, r3, r4);
        report("3. fitted method accuracy", ok, buf);
    }

    { // 4. fitted-method speed relative to the fine reference
        double ratio = fine2.mean_seconds() / main2.mean_seconds();
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.1fx (fine %.2f s, fitted %.4f s; need >= 50x)", ratio,
                      fine2.mean_seconds(), main2.mean_seconds());
        report("4. fitted method speed", ratio >= 50.0, buf);
    }

    TimedPrices simple1 = simple_prices(t1);
    TimedPrices simple4 = simple_prices(t4);
    { // 5. transfer approximation stays in its characteristic error band
        double r1 = rmse_of(simple1.values, fine1.values);
        double r4 = rmse_of(simple4.values, fine4.values);
        bool ok = r1 >= 1.5 && r1 <= 7.0 && r4 >= 4.0 && r4 <= 16.0;
        char buf[128];
        std::snprintf(buf, sizeof buf, "RMSE %.3f (band [1.5, 7]) and %.3f (band [4, 16])", r1,
                      r4);
        report("5. simple method error band", ok, buf);
    }

    std::vector<double> mc2(t2.size());
    double mc_mean_seconds = 0.0;
    { // 6. simulation agrees with the fine reference within sampling noise
        int within = 0;
        for (std::size_t i = 0; i < t2.size(); ++i) {
            McConfig cfg;
            cfg.seed = 42 + i;
            double tq0 = now_s();
            McResult res = lsm_price(t2[i].s0, t2[i].k, t2[i].env, t2[i].params, cfg);
            mc_mean_seconds += now_s() - tq0;
            mc2[i] = res.price;
            if (std::abs(res.price - fine2.values[i]) <= 3.0 * res.std_error) ++within;
        }
        mc_mean_seconds /= double(t2.size());
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d of 12 rows within 3 s.e. (need >= 10)", within);
        report("6. simulation consistency", within >= 10, buf);
    }

    { // 7. analytic property suite
        std::printf("       property sub-checks:\n");
        bool ok = property_suite();
        report("7. property suite", ok, ok ? "all sub-checks hold" : "see sub-checks above");
    }

    { // 8. training-scale policy: desk grid in CI, full grid documented
        bool sizes = full_grid().size() == 3456 && desk_grid().size() == 144;
        bool desk_built = recs.size() >= 100;
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "grids 3456/144 %s, dataset %zu records (full build: manual target)",
                      sizes ? "ok" : "WRONG", recs.size());
        report("8. desk-scale training policy", sizes && desk_built, buf);
    }

    std::printf("\nsupplementary checks:\n");

    { // published spot checks of the fitted method
        double px = main2.values[11]; // (0.40, 0.10, -0.10), K = 3000
        bool ok1 = std::abs(px - 170.459) <= 1.0;
        char buf[96];
        std::snprintf(buf, sizeof buf, "K=3000 fitted %.3f vs 170.459 (tol 1.0)", px);
        report("fitted spot check, short maturity", ok1, buf);

        MarketEnv env{0.05, 0.05, 0.5};
        VgParams p{0.1, 0.6, -0.5};
        double px2 = main_price(2900.0, 2800.0, env, p, recs, models).price;
        bool ok2 = std::abs(px2 - 218.195) <= 1.0;
        std::snprintf(buf, sizeof buf, "half-year fitted %.3f vs 218.195 (tol 1.0)", px2);
        report("fitted spot check, rates sweep", ok2, buf);
    }

    { // end-to-end on a state absent from the training grid
        MarketEnv env{0.05, 0.01, 1.0 / 12.0};
        VgParams p{0.25, 0.35, -0.3};
        double ours = main_price(2900.0, 2900.0, env, p, recs, models).price;
        double ref = fd_solve(2900.0, env, p, fd_fine_grid(2900.0, env, p), Exercise::american,
                              false)
                         .value_at(2900.0);
        double err = std::abs(ours - ref);
        char buf[96];
        std::snprintf(buf, sizeof buf, "|%.3f - %.3f| = %.3f (tol 0.5)", ours, ref, err);
        report("held-out state price error", err <= 0.5, buf);
    }

    { // warm starts keep the optimizer budget small on held-out states
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int worst_evals = 0;
        for (int i = 0; i < 10; ++i) {
            MarketEnv env{0.01 + 0.09 * u(rng), 0.01 + 0.06 * u(rng), 1.0 / 12.0 + 0.9 * u(rng)};
            VgParams p{0.1 + 0.3 * u(rng), 0.1 + 0.5 * u(rng), -0.5 + 0.4 * u(rng)};
            double k = 2900.0;
            EuroCurve curve = build_curve(env, p);
            CollocationTargets targets = predict_correction(env, p, k, recs, models);
            InitGuess init = predict_init(env, p, k, recs, models);
            FitResult fr = solve_fit(targets, k, curve, init.lambda, init.x_star);
            worst_evals = std::max(worst_evals, fr.evaluations);
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "worst budget %d objective evaluations (tol 200)",
                      worst_evals);
        report("warm-start convergence budget", worst_evals <= 200, buf);
    }

    { // wall-time ordering of the methods, coarse grained
        double t_simple = 0.5 * (simple1.mean_seconds() + simple4.mean_seconds());
        double t_main = main2.mean_seconds();
        double t_coarse = coarse2.mean_seconds();
        double t_fine = fine2.mean_seconds();
        double t_mc = mc_mean_seconds;
        bool order = t_simple < t_main && t_main < t_coarse && t_coarse < t_fine;
        bool mc_class = t_mc > t_coarse && std::abs(std::log(t_mc / t_fine)) <= std::log(4.0);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.4f < %.4f < %.3f < %.2f ~ %.2f s", t_simple, t_main,
                      t_coarse, t_fine, t_mc);
        report("method cost ordering", order && mc_class, buf);
    }

    { // error-statistic invariants on the columns computed above
        bool ok = true;
        auto check_pair = [&ok](const std::vector<double>& col, const std::vector<double>& ref) {
            double r = rmse_of(col, ref), m = mae_of(col, ref);
            if (r > m + 1e-12) ok = false;
        };
        check_pair(coarse2.values, fine2.values);
        check_pair(main2.values, fine2.values);
        check_pair(mc2, fine2.values);
        check_pair(simple4.values, fine4.values);
        check_pair(fine2.values, fine2.values);
        double self = rmse_of(fine2.values, fine2.values);
        if (self != 0.0 || mae_of(fine2.values, fine2.values) != 0.0) ok = false;
        char buf[96];
        std::snprintf(buf, sizeof buf, "rmse <= mae on 4 columns, self error exactly 0");
        report("error statistic invariants", ok, buf);
    }

    { // long-maturity transfer method keeps its large, bounded worst case
        double m4 = mae_of(simple4.values, fine4.values);
        char buf[96];
        std::snprintf(buf, sizeof buf, "max |err| %.3f (band [10, 40])", m4);
        report("simple method worst-case band", m4 >= 10.0 && m4 <= 40.0, buf);
    }

    { // machine-readable report round-trips bit-exactly
        BenchConfig cfg;
        cfg.tables = {2};
        cfg.methods = {Method::euro, Method::simple};
        cfg.reps = 2;
        BenchReport rep = run_bench(cfg);
        std::string path =
            (std::filesystem::temp_directory_path() / "vgpricer_acceptance_report.txt").string();
        write_report(rep, path);
        bool ok = reports_equal(rep, read_report(path));
        std::filesystem::remove(path);
        report("report text round-trip", ok, ok ? "parse(emit(r)) == r" : "mismatch");
    }

    { // production-size simulation is reproducible seed by seed
        McConfig cfg;
        cfg.seed = 42;
        const BenchQuery& q = t2[7];
        McResult a = lsm_price(q.s0, q.k, q.env, q.params, cfg);
        McResult b = lsm_price(q.s0, q.k, q.env, q.params, cfg);
        cfg.seed = 43;
        McResult c = lsm_price(q.s0, q.k, q.env, q.params, cfg);
        bool ok = a.price == b.price && a.std_error == b.std_error && a.price != c.price;
        report("simulation seed determinism", ok,
               ok ? "identical seed, identical price" : "nondeterministic");
    }

    std::printf("\n%d criterion failure(s)\n", g_failures);
    return g_failures;
}
