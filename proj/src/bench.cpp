#include "vgpricer/bench.hpp"

#include "vgpricer/bms_approx.hpp"
#include "vgpricer/euro_fft.hpp"
#include "vgpricer/mc_lsm.hpp"
#include "vgpricer/pide_fd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace vgp {

namespace {

constexpr const char* kReportTag = "vgbench.v1";
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return kNan;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool near_or_both_nan(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, '\t')) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw std::runtime_error("read_report: bad number '" + tok + "'");
    return v;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::main_fit: return "main";
        case Method::fd_fine: return "fd_fine";
        case Method::fd_coarse: return "fd_coarse";
        case Method::mc: return "mc";
        case Method::simple: return "simple";
        case Method::euro: return "euro";
    }
    throw std::logic_error("method_name: bad enum");
}

Method method_from(const std::string& name) {
    if (name == "main") return Method::main_fit;
    if (name == "fd_fine") return Method::fd_fine;
    if (name == "fd_coarse") return Method::fd_coarse;
    if (name == "mc") return Method::mc;
    if (name == "simple") return Method::simple;
    if (name == "euro") return Method::euro;
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected main, fd_fine, fd_coarse, mc, simple or euro)");
}

std::vector<BenchQuery> table_queries(int table) {
    std::vector<BenchQuery> out;
    const double s0 = 2900.0;
    if (table == 1) {
        // rates sweep at fixed shape parameters, half-year maturity
        const VgParams p{0.1, 0.6, -0.5};
        const double rq[3][2] = {{0.10, 0.01}, {0.05, 0.05}, {0.01, 0.10}};
        const double ks[4] = {2600.0, 2800.0, 3000.0, 3200.0};
        for (const auto& pair : rq)
            for (double k : ks)
                out.push_back({1, MarketEnv{pair[0], pair[1], 0.5}, p, s0, k});
        return out;
    }
    if (table >= 2 && table <= 4) {
        // shape-parameter sweep at fixed rates, one maturity per table
        const double T = table == 2 ? 1.0 / 12.0 : table == 3 ? 0.25 : 1.0;
        const MarketEnv env{0.05, 0.01, T};
        const VgParams rows[4] = {
            {0.1, 0.1, -0.5}, {0.4, 0.6, -0.5}, {0.1, 0.6, -0.1}, {0.4, 0.1, -0.1}};
        std::vector<double> ks = table == 4 ? std::vector<double>{2700.0, 2900.0, 3100.0}
                                            : std::vector<double>{2800.0, 2900.0, 3000.0};
        for (const auto& p : rows)
            for (double k : ks) out.push_back({table, env, p, s0, k});
        return out;
    }
    throw std::invalid_argument("table_queries: table must be 1..4");
}

bool BenchReport::has(Method m) const {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
}

double BenchReport::price_of(std::size_t query, Method m) const {
    for (std::size_t j = 0; j < methods.size(); ++j)
        if (methods[j] == m) return prices.at(query).at(j);
    throw std::out_of_range("BenchReport::price_of: method not in report");
}

BenchReport run_bench(const BenchConfig& cfg) {
    if (cfg.methods.empty()) throw std::invalid_argument("run_bench: no methods");
    if (cfg.reps < 1) throw std::invalid_argument("run_bench: reps must be >= 1");
    bool wants_main =
        std::find(cfg.methods.begin(), cfg.methods.end(), Method::main_fit) != cfg.methods.end();
    if (wants_main && (cfg.dataset == nullptr || cfg.models == nullptr))
        throw std::invalid_argument("run_bench: main method needs a dataset and a model set");

    BenchReport rep;
    rep.methods = cfg.methods;
    rep.reps = cfg.reps;
    for (int t : cfg.tables) {
        auto qs = table_queries(t);
        rep.queries.insert(rep.queries.end(), qs.begin(), qs.end());
    }
    if (rep.queries.empty()) throw std::invalid_argument("run_bench: no queries");

    const std::size_t nq = rep.queries.size(), nm = rep.methods.size();
    rep.prices.assign(nq, std::vector<double>(nm, kNan));
    std::vector<std::vector<double>> samples(nm); // per-method rep times, all queries

    auto price_once = [&](const BenchQuery& bq, Method m, std::size_t qi) -> double {
        switch (m) {
            case Method::main_fit:
                return main_price(bq.s0, bq.k, bq.env, bq.params, *cfg.dataset, *cfg.models)
                    .price;
            case Method::fd_fine: {
                FdGrid g = fd_fine_grid(bq.k, bq.env, bq.params);
                return fd_solve(bq.k, bq.env, bq.params, g, Exercise::american, false)
                    .value_at(bq.s0);
            }
            case Method::fd_coarse: {
                FdGrid g = fd_coarse_grid(bq.k, bq.env, bq.params);
                return fd_solve(bq.k, bq.env, bq.params, g, Exercise::american, false)
                    .value_at(bq.s0);
            }
            case Method::mc: {
                McConfig mc;
                mc.seed = cfg.mc_seed + qi; // one stream per query, stable across reps
                return lsm_price(bq.s0, bq.k, bq.env, bq.params, mc).price;
            }
            case Method::simple: {
                EuroCurve curve = build_curve(bq.env, bq.params);
                return simple_american_put(bq.s0, bq.k, bq.env, bq.params, curve);
            }
            case Method::euro: {
                EuroCurve curve = build_curve(bq.env, bq.params);
                return euro_put(bq.s0, bq.k, curve);
            }
        }
        throw std::logic_error("run_bench: bad method enum");
    };

    for (std::size_t j = 0; j < nm; ++j) {
        for (std::size_t qi = 0; qi < nq; ++qi) {
            for (int rep_i = 0; rep_i < cfg.reps; ++rep_i) {
                double t0 = now_seconds();
                double px = price_once(rep.queries[qi], rep.methods[j], qi);
                samples[j].push_back(now_seconds() - t0);
                rep.prices[qi][j] = px;
            }
        }
    }

    rep.cpu_mean.assign(nm, kNan);
    rep.cpu_median.assign(nm, kNan);
    for (std::size_t j = 0; j < nm; ++j) {
        double s = 0.0;
        for (double v : samples[j]) s += v;
        rep.cpu_mean[j] = s / double(samples[j].size());
        rep.cpu_median[j] = median_of(samples[j]);
    }

    rep.rmse.assign(nm, kNan);
    rep.mae.assign(nm, kNan);
    auto ref_it = std::find(rep.methods.begin(), rep.methods.end(), Method::fd_fine);
    if (ref_it != rep.methods.end()) {
        std::size_t rj = std::size_t(ref_it - rep.methods.begin());
        std::vector<double> ref(nq);
        for (std::size_t qi = 0; qi < nq; ++qi) ref[qi] = rep.prices[qi][rj];
        for (std::size_t j = 0; j < nm; ++j) {
            std::vector<double> col(nq);
            for (std::size_t qi = 0; qi < nq; ++qi) col[qi] = rep.prices[qi][j];
            rep.rmse[j] = rmse_of(col, ref);
            rep.mae[j] = mae_of(col, ref);
        }
    }
    return rep;
}

double rmse_of(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("rmse_of: size mismatch or empty");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s / double(a.size()));
}

double mae_of(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("mae_of: size mismatch or empty");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void write_report(const BenchReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_report: cannot open " + path);
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };

    out << kReportTag << '\n';
    out << "reps\t" << rep.reps << '\n';
    out << "methods";
    for (Method m : rep.methods) out << '\t' << method_name(m);
    out << '\n';
    out << "query\ttable\tr\tq\tT\tsigma\tnu\ttheta\ts0\tk\n";
    for (std::size_t qi = 0; qi < rep.queries.size(); ++qi) {
        const BenchQuery& b = rep.queries[qi];
        out << "row\t" << b.table << '\t' << num(b.env.r) << '\t' << num(b.env.q) << '\t'
            << num(b.env.T) << '\t' << num(b.params.sigma) << '\t' << num(b.params.nu) << '\t'
            << num(b.params.theta) << '\t' << num(b.s0) << '\t' << num(b.k);
        for (double p : rep.prices[qi]) out << '\t' << num(p);
        out << '\n';
    }
    auto stat_row = [&](const char* name, const std::vector<double>& v) {
        out << name;
        for (double x : v) out << '\t' << num(x);
        out << '\n';
    };
    stat_row("rmse", rep.rmse);
    stat_row("mae", rep.mae);
    stat_row("cpu_mean", rep.cpu_mean);
    stat_row("cpu_median", rep.cpu_median);
    if (!out) throw std::runtime_error("write_report: write failed for " + path);
}

BenchReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_report: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kReportTag)
        throw std::runtime_error("read_report: " + path + " is not a " + std::string(kReportTag) +
                                 " file");

    BenchReport rep;
    auto expect_stat = [&](const std::string& name, std::vector<double>& dst,
                           const std::vector<std::string>& f) {
        if (f.size() != rep.methods.size() + 1)
            throw std::runtime_error("read_report: bad " + name + " row");
        dst.clear();
        for (std::size_t i = 1; i < f.size(); ++i) dst.push_back(parse_double(f[i]));
    };

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_tabs(line);
        const std::string& tag = f[0];
        if (tag == "reps") {
            rep.reps = int(parse_double(f.at(1)));
        } else if (tag == "methods") {
            for (std::size_t i = 1; i < f.size(); ++i) rep.methods.push_back(method_from(f[i]));
        } else if (tag == "query") {
            // column header, informational
        } else if (tag == "row") {
            if (f.size() != 10 + rep.methods.size())
                throw std::runtime_error("read_report: bad row width");
            BenchQuery b;
            b.table = int(parse_double(f[1]));
            b.env = MarketEnv{parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
            b.params = VgParams{parse_double(f[5]), parse_double(f[6]), parse_double(f[7])};
            b.s0 = parse_double(f[8]);
            b.k = parse_double(f[9]);
            rep.queries.push_back(b);
            std::vector<double> row;
            for (std::size_t i = 10; i < f.size(); ++i) row.push_back(parse_double(f[i]));
            rep.prices.push_back(std::move(row));
        } else if (tag == "rmse") {
            expect_stat("rmse", rep.rmse, f);
        } else if (tag == "mae") {
            expect_stat("mae", rep.mae, f);
        } else if (tag == "cpu_mean") {
            expect_stat("cpu_mean", rep.cpu_mean, f);
        } else if (tag == "cpu_median") {
            expect_stat("cpu_median", rep.cpu_median, f);
        } else {
            throw std::runtime_error("read_report: unknown tag '" + tag + "'");
        }
    }
    return rep;
}

bool reports_equal(const BenchReport& a, const BenchReport& b) {
    if (a.reps != b.reps || a.methods != b.methods) return false;
    if (a.queries.size() != b.queries.size() || a.prices.size() != b.prices.size()) return false;
    for (std::size_t i = 0; i < a.queries.size(); ++i) {
        const BenchQuery &x = a.queries[i], &y = b.queries[i];
        if (x.table != y.table || x.env.r != y.env.r || x.env.q != y.env.q || x.env.T != y.env.T ||
            x.params.sigma != y.params.sigma || x.params.nu != y.params.nu ||
            x.params.theta != y.params.theta || x.s0 != y.s0 || x.k != y.k)
            return false;
        if (a.prices[i].size() != b.prices[i].size()) return false;
        for (std::size_t j = 0; j < a.prices[i].size(); ++j)
            if (!near_or_both_nan(a.prices[i][j], b.prices[i][j])) return false;
    }
    auto stat_eq = [](const std::vector<double>& u, const std::vector<double>& v) {
        if (u.size() != v.size()) return false;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (!near_or_both_nan(u[i], v[i])) return false;
        return true;
    };
    return stat_eq(a.rmse, b.rmse) && stat_eq(a.mae, b.mae) && stat_eq(a.cpu_mean, b.cpu_mean) &&
           stat_eq(a.cpu_median, b.cpu_median);
}

void print_report(const BenchReport& rep, std::ostream& os) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%5s %5s %5s %6s %5s %5s %6s %8s %8s", "table", "r", "q", "T",
                  "sigma", "nu", "theta", "s0", "k");
    os << buf;
    for (Method m : rep.methods) {
        std::snprintf(buf, sizeof buf, " %10s", method_name(m).c_str());
        os << buf;
    }
    os << '\n';
    for (std::size_t qi = 0; qi < rep.queries.size(); ++qi) {
        const BenchQuery& b = rep.queries[qi];
        std::snprintf(buf, sizeof buf, "%5d %5.2f %5.2f %6.3f %5.2f %5.2f %6.2f %8.1f %8.1f",
                      b.table, b.env.r, b.env.q, b.env.T, b.params.sigma, b.params.nu,
                      b.params.theta, b.s0, b.k);
        os << buf;
        for (double p : rep.prices[qi]) {
            std::snprintf(buf, sizeof buf, " %10.3f", p);
            os << buf;
        }
        os << '\n';
    }
    auto stat_line = [&](const char* name, const std::vector<double>& v, const char* fmt) {
        std::snprintf(buf, sizeof buf, "%-14s", name);
        os << buf;
        for (std::size_t j = 0; j < v.size(); ++j) {
            std::snprintf(buf, sizeof buf, fmt, v[j]);
            os << ' ' << method_name(rep.methods[j]) << '=' << buf;
        }
        os << '\n';
    };
    stat_line("rmse", rep.rmse, "%.3f");
    stat_line("mae", rep.mae, "%.3f");
    stat_line("cpu_mean[s]", rep.cpu_mean, "%.6f");
    stat_line("cpu_median[s]", rep.cpu_median, "%.6f");
}

} // namespace vgp
