#include "doctest.h"

#include "vgpricer/correction_learn.hpp"
#include "vgpricer/euro_fft.hpp"
#include "vgpricer/quad_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

using namespace vgp;
namespace fs = std::filesystem;

namespace {

PrecalcRecord make_rec(double r, double q, double T, double sigma, double nu, double theta,
                       double y) {
    PrecalcRecord rec;
    rec.env = MarketEnv{r, q, T};
    rec.params = VgParams{sigma, nu, theta};
    rec.k0 = 1000.0;
    rec.lambda_opt = -5.0 + y;
    rec.x_star_opt = std::log(1000.0) - 0.3 + 0.01 * y;
    rec.g.fill(y);
    return rec;
}

std::vector<PrecalcRecord> synthetic_records(int n, unsigned seed,
                                             const std::function<double(double)>& f_of_sigma) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PrecalcRecord> recs;
    for (int i = 0; i < n; ++i) {
        double sigma = 0.1 + 0.4 * i / double(n - 1);
        recs.push_back(make_rec(0.01 + 0.09 * u(rng), 0.01 + 0.06 * u(rng),
                                0.1 + 1.0 * u(rng), sigma, 0.1 + 0.5 * u(rng),
                                -0.5 + 0.4 * u(rng), f_of_sigma(sigma)));
    }
    return recs;
}

KernelModel flat_model(const std::string& response, double bw) {
    KernelModel m;
    m.response = response;
    m.bandwidths.fill(bw);
    return m;
}

ModelSet flat_models(double bw) {
    ModelSet ms;
    for (int i = 0; i <= 6; ++i) ms.g[std::size_t(i)] = flat_model("g_" + std::to_string(i), bw);
    ms.lambda = flat_model("lambda", bw);
    ms.x_star = flat_model("x_star", bw);
    return ms;
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              ("vgpricer_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

} // namespace

TEST_SUITE("correction_learn") {

TEST_CASE("parameter grids have the documented shapes") {
    std::vector<GridPoint> full = full_grid();
    std::vector<GridPoint> desk = desk_grid();
    CHECK(full.size() == 3456);
    CHECK(desk.size() == 144);
    for (const GridPoint& gp : {full.front(), full.back(), desk.front(), desk.back()}) {
        CHECK_NOTHROW(gp.env.validate());
        CHECK_NOTHROW(gp.params.validate());
    }
    // every desk state prices a put with negative skew inside the broad ranges
    for (const GridPoint& gp : desk) {
        CHECK(gp.env.r >= 0.01);
        CHECK(gp.env.r <= 0.10);
        CHECK(gp.env.T <= 1.1);
        CHECK(gp.params.theta < 0.0);
    }
}

TEST_CASE("kernel regression: exactness, bounds, permutation symmetry") {
    std::vector<PrecalcRecord> recs = synthetic_records(25, 11, [](double) { return 3.25; });
    KernelModel m = flat_model("lambda", 4.0);

    // constant responses are reproduced regardless of bandwidths
    double c = kernel_predict(recs, m, MarketEnv{0.04, 0.02, 0.6}, VgParams{0.22, 0.4, -0.3});
    CHECK(c == doctest::Approx(-5.0 + 3.25).epsilon(1e-14));

    // single record: the estimate collapses to that record
    std::vector<PrecalcRecord> one{make_rec(0.05, 0.01, 0.5, 0.2, 0.3, -0.2, 1.7)};
    double v = kernel_predict(one, m, MarketEnv{0.09, 0.07, 1.0}, VgParams{0.4, 0.6, -0.1});
    CHECK(v == doctest::Approx(one[0].lambda_opt).epsilon(1e-14));

    // convex-combination bounds and symmetry under record order
    std::vector<PrecalcRecord> mixed =
        synthetic_records(25, 13, [](double s) { return std::sin(9.0 * s); });
    double lo = 1e300, hi = -1e300;
    for (const PrecalcRecord& r : mixed) {
        lo = std::min(lo, r.lambda_opt);
        hi = std::max(hi, r.lambda_opt);
    }
    MarketEnv env{0.05, 0.03, 0.7};
    VgParams p{0.27, 0.35, -0.25};
    double pred = kernel_predict(mixed, m, env, p);
    CHECK(pred >= lo);
    CHECK(pred <= hi);

    std::vector<PrecalcRecord> shuffled = mixed;
    std::mt19937_64 rng(5);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(kernel_predict(shuffled, m, env, p) == doctest::Approx(pred).epsilon(1e-13));
}

TEST_CASE("large bandwidths concentrate the estimate on the matching record") {
    // convex response: a symmetric design would reproduce a linear one exactly
    std::vector<PrecalcRecord> recs;
    for (int i = 0; i < 5; ++i)
        recs.push_back(make_rec(0.05, 0.01, 0.5, 0.10 + 0.08 * i, 0.3, -0.2, double(i * i)));
    KernelModel wide = flat_model("lambda", 1.0 / (2.0 * 0.08 * 0.08));
    KernelModel sharp = wide;
    for (double& a : sharp.bandwidths) a *= 100.0;

    MarketEnv env{0.05, 0.01, 0.5};
    VgParams probe{0.26, 0.3, -0.2}; // exactly the i = 2 record
    double want = recs[2].lambda_opt;
    CHECK(std::abs(kernel_predict(recs, sharp, env, probe) - want) < 1e-3);
    // the wide kernel smooths visibly by comparison
    CHECK(std::abs(kernel_predict(recs, wide, env, probe) - want) >
          std::abs(kernel_predict(recs, sharp, env, probe) - want));
}

TEST_CASE("correction targets scale exactly with the strike") {
    std::vector<PrecalcRecord> recs =
        synthetic_records(15, 17, [](double s) { return 40.0 * s; });
    ModelSet ms = flat_models(3.0);
    MarketEnv env{0.05, 0.02, 0.5};
    VgParams p{0.3, 0.3, -0.2};
    CollocationTargets t1 = predict_correction(env, p, 1000.0, recs, ms);
    CollocationTargets t2 = predict_correction(env, p, 2000.0, recs, ms);
    for (std::size_t i = 0; i < t1.e.size(); ++i) CHECK(t2.e[i] == 2.0 * t1.e[i]);
}

TEST_CASE("warm-start prediction shifts the boundary with the strike ratio") {
    std::vector<PrecalcRecord> recs = synthetic_records(15, 19, [](double) { return 0.0; });
    ModelSet ms = flat_models(3.0);
    MarketEnv env{0.05, 0.02, 0.5};
    VgParams p{0.3, 0.3, -0.2};

    InitGuess at_ref = predict_init(env, p, 1000.0, recs, ms);
    InitGuess doubled = predict_init(env, p, 2000.0, recs, ms);
    // every synthetic record stores the same optimum, so the prediction is it
    CHECK(at_ref.lambda == doctest::Approx(-5.0).epsilon(1e-13));
    CHECK(at_ref.x_star == doctest::Approx(std::log(1000.0) - 0.3).epsilon(1e-13));
    CHECK(doubled.x_star - at_ref.x_star == doctest::Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(doubled.lambda == doctest::Approx(at_ref.lambda).epsilon(1e-14));

    // predictions outside the solver box are clipped into it
    std::vector<PrecalcRecord> shallow{make_rec(0.05, 0.01, 0.5, 0.2, 0.3, -0.2, 0.0)};
    shallow[0].x_star_opt = std::log(1000.0) - 1e-9; // above the minimum gap
    InitGuess clipped = predict_init(env, p, 1000.0, shallow, ms);
    SolverBox box;
    CHECK(std::log(1000.0) - clipped.x_star >= box.gap_lo - 1e-12);
}

TEST_CASE("bandwidth fitting identifies the driving dimension") {
    std::vector<PrecalcRecord> recs =
        synthetic_records(40, 23, [](double s) { return std::sin(5.0 * s); });
    FitOptions opts;
    opts.seed = 99;
    KernelModel m = fit_bandwidths(recs, "lambda", opts);
    REQUIRE(m.response == "lambda");
    for (double a : m.bandwidths) CHECK(a > 0.0);
    for (int j = 0; j < 6; ++j) {
        if (j == 3) continue; // sigma axis carries all signal
        CHECK(m.bandwidths[3] > 10.0 * m.bandwidths[std::size_t(j)]);
    }
}

TEST_CASE("bandwidth fitting is deterministic and flag-sensitive") {
    std::vector<PrecalcRecord> recs =
        synthetic_records(30, 29, [](double s) { return std::cos(4.0 * s); });
    FitOptions opts;
    opts.seed = 7;
    KernelModel a = fit_bandwidths(recs, "g_3", opts);
    KernelModel b = fit_bandwidths(recs, "g_3", opts);
    CHECK(a.bandwidths == b.bandwidths);

    FitOptions holdout = opts;
    holdout.holdout_only = true;
    KernelModel c = fit_bandwidths(recs, "g_3", holdout);
    CHECK(a.bandwidths != c.bandwidths);

    CHECK_THROWS_AS(fit_bandwidths(recs, "nonsense", opts), std::invalid_argument);
}

TEST_CASE("dataset files round-trip at full precision") {
    TempDir tmp;
    std::vector<PrecalcRecord> recs =
        synthetic_records(8, 31, [](double s) { return 1.0 / 3.0 + s; });
    recs[3].g[5] = 1e-17;
    recs[4].lambda_opt = -59.987654321098765;
    std::string path = tmp.file("roundtrip.tsv");
    save_dataset(recs, path);
    std::vector<PrecalcRecord> back = load_dataset(path);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].env.r == recs[i].env.r);
        CHECK(back[i].env.T == recs[i].env.T);
        CHECK(back[i].params.theta == recs[i].params.theta);
        CHECK(back[i].k0 == recs[i].k0);
        CHECK(back[i].lambda_opt == recs[i].lambda_opt);
        CHECK(back[i].x_star_opt == recs[i].x_star_opt);
        for (int j = 0; j <= 6; ++j) CHECK(back[i].g[std::size_t(j)] == recs[i].g[std::size_t(j)]);
    }

    std::uint64_t sum = dataset_checksum(path);
    CHECK(sum == dataset_checksum(path));
    std::vector<PrecalcRecord> reordered = recs;
    std::swap(reordered[0], reordered[1]);
    std::string path2 = tmp.file("reordered.tsv");
    save_dataset(reordered, path2);
    CHECK(dataset_checksum(path2) != sum);
}

TEST_CASE("interrupted trailing writes are tolerated, torn interiors are not") {
    TempDir tmp;
    std::vector<PrecalcRecord> recs =
        synthetic_records(5, 37, [](double s) { return 2.0 * s; });
    std::string path = tmp.file("partial.tsv");
    save_dataset(recs, path);

    // a crash mid-append leaves an incomplete final line
    {
        std::ofstream out(path, std::ios::app);
        out << "0.05\t0.01\t0.25";
    }
    CHECK(load_dataset(path).size() == recs.size());

    // a malformed interior line is a real corruption
    std::string path2 = tmp.file("torn.tsv");
    {
        std::ifstream in(path);
        std::ofstream out(path2);
        std::string line;
        int i = 0;
        while (std::getline(in, line)) {
            if (i == 3) out << "not\ta\trecord\n";
            else out << line << "\n";
            ++i;
        }
    }
    CHECK_THROWS_AS(load_dataset(path2), std::runtime_error);
    CHECK_THROWS_AS(load_dataset(tmp.file("missing.tsv")), std::runtime_error);
}

TEST_CASE("model files persist bandwidths and provenance") {
    TempDir tmp;
    ModelSet ms = flat_models(2.5);
    ms.lambda.bandwidths = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    ms.lambda.dataset_checksum = 0xabcdef0123456789ull;
    ms.g[6].options.holdout_only = true;
    ms.g[6].options.seed = 31337;
    std::string path = tmp.file("models.json");
    save_models(ms, path);
    ModelSet back = load_models(path);
    CHECK(back.lambda.bandwidths == ms.lambda.bandwidths);
    CHECK(back.lambda.dataset_checksum == ms.lambda.dataset_checksum);
    CHECK(back.lambda.response == "lambda");
    CHECK(back.g[6].options.holdout_only == true);
    CHECK(back.g[6].options.seed == 31337);
    CHECK(back.x_star.response == "x_star");
    CHECK_THROWS_AS(load_models(tmp.file("absent.json")), std::runtime_error);
}

TEST_CASE("single-state records are reproducible and internally consistent") {
    MarketEnv env{0.05, 0.01, 0.25};
    VgParams p{0.4, 0.1, -0.1};
    PrecalcRecord a = build_record(env, p);
    PrecalcRecord b = build_record(env, p);

    CHECK(a.lambda_opt == b.lambda_opt);
    CHECK(a.x_star_opt == b.x_star_opt);
    CHECK(a.g == b.g);

    CHECK(a.k0 == 1000.0);
    CHECK(a.lambda_opt < 0.0);
    CHECK(a.x_star_opt < std::log(a.k0));
    for (double g : a.g) CHECK(std::isfinite(g));

    // replaying the stored fit through the assembled pricer reproduces the
    // reference price at the money to within one percent
    EuroCurve curve = build_curve(env, p);
    PremiumFit fit{a.lambda_opt, a.x_star_opt, b_from(a.x_star_opt, a.k0, curve)};
    FdSolution sol =
        fd_solve(a.k0, env, p, fd_fine_grid(a.k0, env, p), Exercise::american, false);
    double want = sol.value_at(a.k0);
    CHECK(std::abs(price_american(a.k0, a.k0, fit, curve) - want) <= 0.01 * want);
}

TEST_CASE("dataset builds resume without recomputing or drifting") {
    TempDir tmp;
    MarketEnv env{0.05, 0.01, 0.25};
    std::vector<GridPoint> one{{env, VgParams{0.4, 0.1, -0.1}}};
    std::vector<GridPoint> two = one;
    two.push_back({env, VgParams{0.1, 0.1, -0.5}});

    std::string resumed = tmp.file("resumed.tsv");
    BuildReport r1 = build_dataset(one, resumed, 1);
    CHECK(r1.n_requested == 1);
    CHECK(r1.n_done == 1);
    CHECK(r1.n_failed == 0);

    BuildReport r2 = build_dataset(two, resumed, 1);
    CHECK(r2.n_requested == 2);
    CHECK(r2.n_skipped == 1);
    CHECK(r2.n_done == 1);

    BuildReport r3 = build_dataset(two, resumed, 1);
    CHECK(r3.n_skipped == 2);
    CHECK(r3.n_done == 0);

    std::string fresh = tmp.file("fresh.tsv");
    build_dataset(two, fresh, 1);
    std::ifstream fa(resumed), fb(fresh);
    std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
    CHECK(dataset_checksum(resumed) == dataset_checksum(fresh));
}

} // TEST_SUITE
