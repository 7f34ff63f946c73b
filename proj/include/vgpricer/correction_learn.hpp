#pragma once

// Pre-calculation of correction targets on a parameter grid and their
// reconstruction at query points by Gaussian-kernel (Nadaraya-Watson)
// regression with per-dimension bandwidths chosen by repeated subset fits.

#include "vgpricer/pide_fd.hpp"
#include "vgpricer/quad_core.hpp"
#include "vgpricer/vg_model.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vgp {

struct PrecalcRecord {
    MarketEnv env;
    VgParams params;
    double k0 = 1000.0;
    double lambda_opt = 0.0;
    double x_star_opt = 0.0;
    std::array<double, 7> g{};
};

struct GridPoint {
    MarketEnv env;
    VgParams params;
};

// the full pre-calculation grid: 4 x 4 x 6 x 4 x 3 x 3 = 3456 states
std::vector<GridPoint> full_grid();

// reduced grid for CI runs, covering the rate/maturity/shape ranges of the
// benchmark tables with 3 x 2 x 3 x 2 x 2 x 2 = 144 states; documented in the
// README
std::vector<GridPoint> desk_grid();

// fine FD solve at strike k0, boundary and slope extraction, then the
// equation residuals at the collocation points of the extracted fit
PrecalcRecord build_record(const MarketEnv& env, const VgParams& params, double k0 = 1000.0);
PrecalcRecord build_record(const MarketEnv& env, const VgParams& params, double k0,
                           const FdGrid& grid);

// --- dataset file: tab-separated, versioned header, >= 17 significant digits
void save_dataset(const std::vector<PrecalcRecord>& records, const std::string& path);
std::vector<PrecalcRecord> load_dataset(const std::string& path);
std::uint64_t dataset_checksum(const std::string& path); // FNV-1a over file bytes

struct BuildReport {
    int n_requested = 0;
    int n_skipped = 0; // already present on resume
    int n_done = 0;
    int n_failed = 0;
    std::vector<std::string> failures;
};

// computes missing records with `workers` threads and appends each finished
// record to `path` (flushed per record, so an interrupted run resumes).
// progress(done, total) fires under the writer lock when provided.
BuildReport build_dataset(const std::vector<GridPoint>& points, const std::string& path,
                          int workers, double k0 = 1000.0,
                          const std::function<void(int, int)>& progress = nullptr);

// --- kernel regression
struct FitOptions {
    double train_fraction = 0.75;
    int repeats = 5;
    std::uint64_t seed = 20240601;
    bool holdout_only = false; // score only records outside the training subset
    int max_iter = 600;
};

struct KernelModel {
    std::string response; // g_0 .. g_6, lambda, x_star
    std::array<double, 6> bandwidths{};
    std::uint64_t dataset_checksum = 0;
    FitOptions options;
};

// bandwidths by simplex search in log space, averaged over `repeats` random
// 75% training subsets; loss is the squared prediction error of the subset
// regressor, scored over all records (or only held-out ones with holdout_only)
KernelModel fit_bandwidths(const std::vector<PrecalcRecord>& records, const std::string& response,
                           const FitOptions& opts = {}, std::uint64_t checksum = 0);

struct ModelSet {
    std::array<KernelModel, 7> g;
    KernelModel lambda;
    KernelModel x_star;
};

ModelSet fit_all_models(const std::vector<PrecalcRecord>& records, const FitOptions& opts = {},
                        std::uint64_t checksum = 0);

void save_models(const ModelSet& models, const std::string& path); // JSON
ModelSet load_models(const std::string& path);

// Nadaraya-Watson estimate of one response at a query state
double kernel_predict(const std::vector<PrecalcRecord>& records, const KernelModel& model,
                      const MarketEnv& env, const VgParams& params);

// correction targets at strike k: predictions at the reference strike scaled
// by k / k0
CollocationTargets predict_correction(const MarketEnv& env, const VgParams& params, double k,
                                      const std::vector<PrecalcRecord>& records,
                                      const ModelSet& models);

struct InitGuess {
    double lambda;
    double x_star;
};

// warm start for the fit: predicted slope, predicted boundary shifted by
// ln(k / k0), both clipped into the solver box
InitGuess predict_init(const MarketEnv& env, const VgParams& params, double k,
                       const std::vector<PrecalcRecord>& records, const ModelSet& models,
                       const SolverBox& box = {});

// one-call main pricing path: predict targets and warm start, run the fit,
// assemble the price
struct MainPriceResult {
    double price = 0.0;
    PremiumFit fit{};
    double loss = 0.0;
    int restarts = 0;
};

MainPriceResult main_price(double s0, double k, const MarketEnv& env, const VgParams& params,
                           const std::vector<PrecalcRecord>& records, const ModelSet& models);

} // namespace vgp
