#pragma once

// Benchmark harness: prices fixed grids of American puts with every engine,
// reports errors against the fine finite-difference reference and per-method
// CPU cost, and round-trips the result table through a text report.

#include "vgpricer/correction_learn.hpp"
#include "vgpricer/vg_model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace vgp {

enum class Method { main_fit, fd_fine, fd_coarse, mc, simple, euro };

std::string method_name(Method m);
Method method_from(const std::string& name);

struct BenchQuery {
    int table = 0;
    MarketEnv env;
    VgParams params;
    double s0 = 0.0;
    double k = 0.0;
};

// preset query grids (tables 1..4): a rates/strikes sweep at fixed shape
// parameters, and three maturities sweeping the shape parameters
std::vector<BenchQuery> table_queries(int table);

struct BenchConfig {
    std::vector<int> tables{2};
    std::vector<Method> methods{Method::main_fit, Method::fd_coarse};
    int reps = 20;             // timing repetitions per (query, method)
    std::uint64_t mc_seed = 42;
    const std::vector<PrecalcRecord>* dataset = nullptr; // needed by main_fit
    const ModelSet* models = nullptr;
};

struct BenchReport {
    std::vector<Method> methods;
    std::vector<BenchQuery> queries;
    std::vector<std::vector<double>> prices; // [query][method]
    std::vector<double> rmse;                // per method vs fd_fine, NaN without it
    std::vector<double> mae;                 // maximum absolute error vs fd_fine
    std::vector<double> cpu_mean;            // seconds per price
    std::vector<double> cpu_median;
    int reps = 0;

    bool has(Method m) const;
    double price_of(std::size_t query, Method m) const;
};

BenchReport run_bench(const BenchConfig& cfg);

// exact text round-trip (17 significant digits)
void write_report(const BenchReport& rep, const std::string& path);
BenchReport read_report(const std::string& path);
bool reports_equal(const BenchReport& a, const BenchReport& b);

// human-readable table, prices to 3 decimals
void print_report(const BenchReport& rep, std::ostream& os);

// root-mean-square and maximum absolute error over matched vectors
double rmse_of(const std::vector<double>& a, const std::vector<double>& b);
double mae_of(const std::vector<double>& a, const std::vector<double>& b);

} // namespace vgp
