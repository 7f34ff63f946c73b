// vgpricer command-line tool.
//
// Subcommands:
//   precalc  build the correction dataset on a built-in (or file-supplied) grid
//   fit      fit kernel-regression bandwidths on a dataset, write a model file
//   price    one American/European put price by any engine
//   bench    preset benchmark tables with RMSE/MAE/CPU reporting
//
// Exit codes: 0 success, 1 numerical/runtime failure, 2 usage error.

#include "CLI11.hpp"

#include "vgpricer/bench.hpp"
#include "vgpricer/bms_approx.hpp"
#include "vgpricer/correction_learn.hpp"
#include "vgpricer/euro_fft.hpp"
#include "vgpricer/mc_lsm.hpp"
#include "vgpricer/pide_fd.hpp"
#include "vgpricer/quad_core.hpp"
#include "vgpricer/vg_model.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct PrecalcArgs {
    std::string grid = "desk";
    std::string grid_file;
    std::string out;
    int workers = 1;
    double k0 = 1000.0;
};

struct FitArgs {
    std::string dataset;
    std::string out;
    std::uint64_t seed = 20240601;
    int repeats = 5;
    double train_fraction = 0.75;
    bool holdout_only = false;
};

struct PriceArgs {
    double r = 0.05, q = 0.01, T = 0.25;
    double sigma = 0.2, nu = 0.3, theta = -0.3;
    double spot = 0.0, strike = 0.0;
    std::string method;
    std::string dataset, model;
    std::uint64_t seed = 42;
};

struct BenchArgs {
    std::vector<int> tables{2};
    std::vector<std::string> methods{"main", "fd_fine"};
    std::string dataset, model;
    std::string out;
    std::uint64_t seed = 42;
    int reps = 20;
};

// grid file: one "r q T sigma nu theta" line per state, '#' comments
std::vector<vgp::GridPoint> read_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("precalc: cannot open grid file " + path);
    std::vector<vgp::GridPoint> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = line.substr(0, line.find('#'));
        std::istringstream ss(body);
        vgp::GridPoint g;
        if (!(ss >> g.env.r >> g.env.q >> g.env.T >> g.params.sigma >> g.params.nu >>
              g.params.theta)) {
            if (body.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw std::runtime_error("precalc: bad grid line " + std::to_string(lineno) + " in " +
                                     path);
        }
        g.env.validate();
        g.params.validate();
        out.push_back(g);
    }
    return out;
}

int run_precalc(const PrecalcArgs& a) {
    std::vector<vgp::GridPoint> points;
    if (!a.grid_file.empty())
        points = read_grid_file(a.grid_file);
    else if (a.grid == "full")
        points = vgp::full_grid();
    else if (a.grid == "desk")
        points = vgp::desk_grid();
    else {
        std::cerr << "precalc: unknown grid '" << a.grid << "' (expected full or desk)\n";
        return 2;
    }

    std::cerr << "precalc: " << points.size() << " states -> " << a.out << " with " << a.workers
              << " worker(s)\n";
    auto progress = [](int done, int total) {
        if (done % 8 == 0 || done == total)
            std::fprintf(stderr, "precalc: %d/%d\n", done, total);
    };
    vgp::BuildReport rep = vgp::build_dataset(points, a.out, a.workers, a.k0, progress);
    std::cout << "precalc: requested=" << rep.n_requested << " skipped=" << rep.n_skipped
              << " done=" << rep.n_done << " failed=" << rep.n_failed << '\n';
    for (const std::string& f : rep.failures) std::cerr << "precalc: failed: " << f << '\n';
    return rep.n_failed == 0 ? 0 : 1;
}

int run_fit(const FitArgs& a) {
    std::vector<vgp::PrecalcRecord> records = vgp::load_dataset(a.dataset);
    std::uint64_t checksum = vgp::dataset_checksum(a.dataset);
    vgp::FitOptions opts;
    opts.seed = a.seed;
    opts.repeats = a.repeats;
    opts.train_fraction = a.train_fraction;
    opts.holdout_only = a.holdout_only;

    std::cerr << "fit: " << records.size() << " records from " << a.dataset << '\n';
    vgp::ModelSet models = vgp::fit_all_models(records, opts, checksum);
    vgp::save_models(models, a.out);

    auto show = [](const vgp::KernelModel& m) {
        std::cout << "fit: " << m.response << " bandwidths";
        for (double b : m.bandwidths) std::fprintf(stdout, " %.6g", b);
        std::cout << '\n';
    };
    for (const auto& m : models.g) show(m);
    show(models.lambda);
    show(models.x_star);
    std::cout << "fit: wrote " << a.out << '\n';
    return 0;
}

int run_price(const PriceArgs& a) {
    const vgp::MarketEnv env{a.r, a.q, a.T};
    const vgp::VgParams params{a.sigma, a.nu, a.theta};
    const vgp::Method method = vgp::method_from(a.method); // invalid_argument on bad name
    env.validate();
    params.validate();
    if (a.spot <= 0.0) throw std::invalid_argument("price: --spot must be > 0");
    if (a.strike < 0.0) throw std::invalid_argument("price: --strike must be >= 0");

    double price = 0.0;
    switch (method) {
        case vgp::Method::euro: {
            vgp::EuroCurve curve = vgp::build_curve(env, params);
            price = vgp::euro_put(a.spot, a.strike, curve);
            break;
        }
        case vgp::Method::fd_fine:
        case vgp::Method::fd_coarse: {
            vgp::FdGrid grid = method == vgp::Method::fd_fine
                                   ? vgp::fd_fine_grid(a.strike, env, params)
                                   : vgp::fd_coarse_grid(a.strike, env, params);
            price = vgp::fd_solve(a.strike, env, params, grid, vgp::Exercise::american, false)
                        .value_at(a.spot);
            break;
        }
        case vgp::Method::mc: {
            vgp::McConfig mc;
            mc.seed = a.seed;
            vgp::McResult res = vgp::lsm_price(a.spot, a.strike, env, params, mc);
            std::cerr << "mc: std_error=" << res.std_error << '\n';
            price = res.price;
            break;
        }
        case vgp::Method::simple: {
            vgp::EuroCurve curve = vgp::build_curve(env, params);
            price = vgp::simple_american_put(a.spot, a.strike, env, params, curve);
            break;
        }
        case vgp::Method::main_fit: {
            std::vector<vgp::PrecalcRecord> records = vgp::load_dataset(a.dataset);
            vgp::ModelSet models = vgp::load_models(a.model);
            vgp::MainPriceResult res =
                vgp::main_price(a.spot, a.strike, env, params, records, models);
            std::fprintf(stderr, "main: lambda=%.10g x_star=%.10g loss=%.6g restarts=%d\n",
                         res.fit.lambda, res.fit.x_star, res.loss, res.restarts);
            price = res.price;
            break;
        }
    }
    std::printf("%.4f\n", price);
    return 0;
}

int run_bench(const BenchArgs& a) {
    vgp::BenchConfig cfg;
    cfg.tables = a.tables;
    cfg.methods.clear();
    for (const std::string& name : a.methods) cfg.methods.push_back(vgp::method_from(name));
    cfg.reps = a.reps;
    cfg.mc_seed = a.seed;

    std::vector<vgp::PrecalcRecord> records;
    vgp::ModelSet models;
    bool wants_main = false;
    for (vgp::Method m : cfg.methods) wants_main = wants_main || m == vgp::Method::main_fit;
    if (wants_main) {
        records = vgp::load_dataset(a.dataset);
        models = vgp::load_models(a.model);
        cfg.dataset = &records;
        cfg.models = &models;
    }

    vgp::BenchReport rep = vgp::run_bench(cfg);
    vgp::print_report(rep, std::cout);
    if (!a.out.empty()) {
        vgp::write_report(rep, a.out);
        std::cerr << "bench: wrote " << a.out << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"American put pricer under variance gamma dynamics"};
    app.require_subcommand(1);

    PrecalcArgs pa;
    CLI::App* precalc = app.add_subcommand("precalc", "build the correction dataset");
    precalc->add_option("--grid", pa.grid, "built-in grid: full (3456 states) or desk (144)")
        ->capture_default_str();
    precalc->add_option("--grid-file", pa.grid_file,
                        "file with one 'r q T sigma nu theta' state per line (overrides --grid)");
    precalc->add_option("--out", pa.out, "dataset output path")->required();
    precalc->add_option("--workers", pa.workers, "precalc threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    precalc->add_option("--k0", pa.k0, "reference strike of the dataset")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    FitArgs fa;
    CLI::App* fit = app.add_subcommand("fit", "fit kernel bandwidths, write a model file");
    fit->add_option("--dataset", fa.dataset, "dataset path from precalc")->required();
    fit->add_option("--out", fa.out, "model output path (json)")->required();
    fit->add_option("--seed", fa.seed, "subset-sampling seed")->capture_default_str();
    fit->add_option("--repeats", fa.repeats, "training subsets to average")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit->add_option("--train-fraction", fa.train_fraction, "training subset fraction")
        ->capture_default_str()
        ->check(CLI::Range(0.05, 1.0));
    fit->add_flag("--holdout-only", fa.holdout_only, "score only held-out records");

    PriceArgs qa;
    CLI::App* price = app.add_subcommand("price", "price one American/European put");
    price->add_option("--r", qa.r, "riskless rate")->capture_default_str();
    price->add_option("--q", qa.q, "dividend yield")->capture_default_str();
    price->add_option("--T", qa.T, "maturity in years")->capture_default_str();
    price->add_option("--sigma", qa.sigma, "variance gamma sigma")->capture_default_str();
    price->add_option("--nu", qa.nu, "variance gamma nu")->capture_default_str();
    price->add_option("--theta", qa.theta, "variance gamma theta")->capture_default_str();
    price->add_option("--spot", qa.spot, "spot price")->required();
    price->add_option("--strike", qa.strike, "strike")->required();
    price->add_option("--method", qa.method, "main, fd_fine, fd_coarse, mc, simple or euro")
        ->required();
    price->add_option("--dataset", qa.dataset, "dataset path (main only)");
    price->add_option("--model", qa.model, "model path (main only)");
    price->add_option("--seed", qa.seed, "Monte-Carlo seed (mc only)")->capture_default_str();

    BenchArgs ba;
    CLI::App* bench = app.add_subcommand("bench", "run preset benchmark tables");
    bench->add_option("--tables", ba.tables, "table ids, 1..4")
        ->capture_default_str()
        ->delimiter(',')
        ->check(CLI::Range(1, 4));
    bench->add_option("--methods", ba.methods, "methods to run")
        ->capture_default_str()
        ->delimiter(',');
    bench->add_option("--dataset", ba.dataset, "dataset path (needed by main)");
    bench->add_option("--model", ba.model, "model path (needed by main)");
    bench->add_option("--out", ba.out, "machine-readable report path");
    bench->add_option("--seed", ba.seed, "Monte-Carlo seed")->capture_default_str();
    bench->add_option("--reps", ba.reps, "timing repetitions per query and method")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    // flag combinations CLI11 cannot express: main needs its data files
    const bool price_main = price->parsed() && qa.method == "main";
    const bool bench_main = bench->parsed() && std::find(ba.methods.begin(), ba.methods.end(),
                                                         std::string("main")) != ba.methods.end();
    if ((price_main && (qa.dataset.empty() || qa.model.empty())) ||
        (bench_main && (ba.dataset.empty() || ba.model.empty()))) {
        std::cerr << "error: method 'main' needs --dataset and --model\n";
        return 2;
    }

    try {
        if (precalc->parsed()) return run_precalc(pa);
        if (fit->parsed()) return run_fit(fa);
        if (price->parsed()) return run_price(qa);
        if (bench->parsed()) return run_bench(ba);
    } catch (const std::invalid_argument& e) {
        // bad method names / parameter domains are usage errors
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 2;
}
