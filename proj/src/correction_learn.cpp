#include "vgpricer/correction_learn.hpp"

#include "vgpricer/errors.hpp"
#include "vgpricer/nelder_mead.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace vgp {

namespace {

constexpr const char* kDatasetTag = "vgprecalc.v1";
constexpr const char* kModelTag = "vgmodels.v1";
constexpr int kRowFields = 16; // 6 state + k0 + lambda + x_star + 7 residuals

std::array<double, 6> feature(const MarketEnv& env, const VgParams& p) {
    return {env.r, env.q, env.T, p.sigma, p.nu, p.theta};
}

std::array<double, 6> feature(const PrecalcRecord& rec) {
    return feature(rec.env, rec.params);
}

// bitwise-stable text key for resume matching; %.17g round-trips doubles
std::string state_key(const MarketEnv& env, const VgParams& p, double k0) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g", env.r, env.q,
                  env.T, p.sigma, p.nu, p.theta, k0);
    return buf;
}

std::vector<GridPoint> cross(const std::vector<double>& rs, const std::vector<double>& qs,
                             const std::vector<double>& ts, const std::vector<double>& sigmas,
                             const std::vector<double>& nus, const std::vector<double>& thetas) {
    std::vector<GridPoint> out;
    out.reserve(rs.size() * qs.size() * ts.size() * sigmas.size() * nus.size() * thetas.size());
    for (double r : rs)
        for (double q : qs)
            for (double t : ts)
                for (double sg : sigmas)
                    for (double nu : nus)
                        for (double th : thetas)
                            out.push_back({MarketEnv{r, q, t}, VgParams{sg, nu, th}});
    return out;
}

double response_of(const PrecalcRecord& rec, const std::string& response) {
    if (response == "lambda") return rec.lambda_opt;
    if (response == "x_star") return rec.x_star_opt;
    if (response.size() == 3 && response[0] == 'g' && response[1] == '_') {
        int i = response[2] - '0';
        if (i >= 0 && i <= 6) return rec.g[std::size_t(i)];
    }
    throw std::invalid_argument("response_of: unknown response " + response);
}

// canonical record order so bandwidth fits do not depend on file row order
void sort_canonical(std::vector<std::size_t>& idx, const std::vector<PrecalcRecord>& recs) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return feature(recs[a]) < feature(recs[b]);
    });
}

// weighted average of y over `train` at query x, Gaussian kernel with
// bandwidths a; the largest exponent is shifted to zero so far-field queries
// cannot underflow to 0/0
double nw_estimate(const std::array<double, 6>& x, const std::vector<std::array<double, 6>>& xs,
                   const std::vector<double>& ys, const std::vector<std::size_t>& train,
                   const std::array<double, 6>& a) {
    double zmax = -std::numeric_limits<double>::infinity();
    std::vector<double> z(train.size());
    for (std::size_t t = 0; t < train.size(); ++t) {
        const auto& xt = xs[train[t]];
        double s = 0.0;
        for (int j = 0; j < 6; ++j) {
            double d = x[std::size_t(j)] - xt[std::size_t(j)];
            s += a[std::size_t(j)] * d * d;
        }
        z[t] = -s;
        zmax = std::max(zmax, z[t]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < train.size(); ++t) {
        double w = std::exp(z[t] - zmax);
        num += w * ys[train[t]];
        den += w;
    }
    return num / den;
}

std::string checksum_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json model_to_json(const KernelModel& m) {
    nlohmann::json j;
    j["response"] = m.response;
    j["bandwidths"] = m.bandwidths;
    j["dataset_checksum"] = checksum_hex(m.dataset_checksum);
    j["options"] = {{"train_fraction", m.options.train_fraction},
                    {"repeats", m.options.repeats},
                    {"seed", m.options.seed},
                    {"holdout_only", m.options.holdout_only},
                    {"max_iter", m.options.max_iter}};
    return j;
}

KernelModel model_from_json(const nlohmann::json& j) {
    KernelModel m;
    m.response = j.at("response").get<std::string>();
    auto bw = j.at("bandwidths").get<std::vector<double>>();
    if (bw.size() != 6) throw std::runtime_error("load_models: expected 6 bandwidths");
    std::copy(bw.begin(), bw.end(), m.bandwidths.begin());
    m.dataset_checksum = std::strtoull(j.at("dataset_checksum").get<std::string>().c_str(),
                                       nullptr, 16);
    const auto& o = j.at("options");
    m.options.train_fraction = o.at("train_fraction").get<double>();
    m.options.repeats = o.at("repeats").get<int>();
    m.options.seed = o.at("seed").get<std::uint64_t>();
    m.options.holdout_only = o.at("holdout_only").get<bool>();
    m.options.max_iter = o.at("max_iter").get<int>();
    return m;
}

} // namespace

std::vector<GridPoint> full_grid() {
    return cross({0.01, 0.04, 0.07, 0.10}, {0.01, 0.04, 0.07, 0.10},
                 {0.1, 0.3, 0.5, 0.7, 0.9, 1.1}, {0.1, 0.2, 0.3, 0.4}, {0.1, 0.3, 0.5},
                 {-0.5, -0.3, -0.1});
}

std::vector<GridPoint> desk_grid() {
    return cross({0.01, 0.05, 0.10}, {0.01, 0.07}, {1.0 / 12.0, 0.25, 1.0}, {0.1, 0.4},
                 {0.1, 0.6}, {-0.5, -0.1});
}

PrecalcRecord build_record(const MarketEnv& env, const VgParams& params, double k0) {
    return build_record(env, params, k0, fd_fine_grid(k0, env, params));
}

PrecalcRecord build_record(const MarketEnv& env, const VgParams& params, double k0,
                           const FdGrid& grid) {
    env.validate();
    params.validate();
    if (!(k0 > 0.0)) throw std::invalid_argument("build_record: k0 must be positive");

    FdSolution sol = fd_solve(k0, env, params, grid, Exercise::american, true);
    double x_star = extract_boundary(sol, k0, 1e-6 * k0);
    double lambda = extract_lambda(sol, x_star, k0);
    if (!(lambda < 0.0))
        throw std::runtime_error("build_record: extracted premium slope is not negative");

    EuroCurve curve = build_curve(env, params);
    PremiumFit fit{lambda, x_star, b_from(x_star, k0, curve)};

    PrecalcRecord rec;
    rec.env = env;
    rec.params = params;
    rec.k0 = k0;
    rec.lambda_opt = lambda;
    rec.x_star_opt = x_star;
    auto pts = collocation_points(x_star, k0);
    for (std::size_t i = 0; i < pts.size(); ++i) rec.g[i] = g_eval(pts[i], k0, fit, curve);
    return rec;
}

void save_dataset(const std::vector<PrecalcRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    out << kDatasetTag
        << "\tr\tq\tT\tsigma\tnu\ttheta\tk0\tlambda\tx_star\tg_0\tg_1\tg_2\tg_3\tg_4\tg_5\tg_6\n";
    char buf[64];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
        out << buf;
    };
    for (const auto& rec : records) {
        put(rec.env.r, '\t');
        put(rec.env.q, '\t');
        put(rec.env.T, '\t');
        put(rec.params.sigma, '\t');
        put(rec.params.nu, '\t');
        put(rec.params.theta, '\t');
        put(rec.k0, '\t');
        put(rec.lambda_opt, '\t');
        put(rec.x_star_opt, '\t');
        for (int i = 0; i < 7; ++i) put(rec.g[std::size_t(i)], i == 6 ? '\n' : '\t');
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

std::vector<PrecalcRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind(kDatasetTag, 0) != 0)
        throw std::runtime_error("load_dataset: " + path + " is not a " +
                                 std::string(kDatasetTag) + " file");

    std::vector<PrecalcRecord> out;
    std::vector<std::string> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);

    for (std::size_t li = 0; li < rows.size(); ++li) {
        std::vector<double> f;
        f.reserve(kRowFields);
        std::stringstream ss(rows[li]);
        std::string tok;
        bool bad = false;
        while (std::getline(ss, tok, '\t')) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                bad = true;
                break;
            }
            f.push_back(v);
        }
        if (bad || f.size() != kRowFields) {
            // a short or garbled final row is the footprint of an interrupted
            // append; drop it so the build can resume. Anywhere else it is
            // corruption.
            if (li + 1 == rows.size()) break;
            throw std::runtime_error("load_dataset: malformed row " + std::to_string(li + 2) +
                                     " in " + path);
        }
        PrecalcRecord rec;
        rec.env = MarketEnv{f[0], f[1], f[2]};
        rec.params = VgParams{f[3], f[4], f[5]};
        rec.k0 = f[6];
        rec.lambda_opt = f[7];
        rec.x_star_opt = f[8];
        for (int i = 0; i < 7; ++i) rec.g[std::size_t(i)] = f[std::size_t(9 + i)];
        out.push_back(rec);
    }
    return out;
}

std::uint64_t dataset_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("dataset_checksum: cannot open " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (in.eof()) break;
    }
    return h;
}

BuildReport build_dataset(const std::vector<GridPoint>& points, const std::string& path,
                          int workers, double k0,
                          const std::function<void(int, int)>& progress) {
    BuildReport report;
    report.n_requested = int(points.size());

    std::vector<PrecalcRecord> existing;
    {
        std::ifstream probe(path);
        if (probe.good()) existing = load_dataset(path);
    }
    std::vector<std::string> have;
    have.reserve(existing.size());
    for (const auto& rec : existing) have.push_back(state_key(rec.env, rec.params, rec.k0));
    std::sort(have.begin(), have.end());

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::string key = state_key(points[i].env, points[i].params, k0);
        if (std::binary_search(have.begin(), have.end(), key))
            ++report.n_skipped;
        else
            pending.push_back(i);
    }

    std::ofstream out;
    if (existing.empty() && report.n_skipped == 0) {
        // fresh file (or one holding only a truncated row): start over
        out.open(path, std::ios::trunc);
        if (!out) throw std::runtime_error("build_dataset: cannot open " + path);
        out << kDatasetTag
            << "\tr\tq\tT\tsigma\tnu\ttheta\tk0\tlambda\tx_star\tg_0\tg_1\tg_2\tg_3\tg_4\tg_5\tg_6\n";
        out.flush();
    } else {
        out.open(path, std::ios::app);
        if (!out) throw std::runtime_error("build_dataset: cannot open " + path);
    }

    std::mutex io_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<int> done{0};
    const int total = int(pending.size());

    auto emit = [&](const PrecalcRecord& rec) {
        char buf[64];
        std::string row;
        auto put = [&](double v, char sep) {
            std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
            row += buf;
        };
        put(rec.env.r, '\t');
        put(rec.env.q, '\t');
        put(rec.env.T, '\t');
        put(rec.params.sigma, '\t');
        put(rec.params.nu, '\t');
        put(rec.params.theta, '\t');
        put(rec.k0, '\t');
        put(rec.lambda_opt, '\t');
        put(rec.x_star_opt, '\t');
        for (int i = 0; i < 7; ++i) put(rec.g[std::size_t(i)], i == 6 ? '\n' : '\t');
        out << row;
        out.flush();
    };

    auto work = [&]() {
        for (;;) {
            std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            const GridPoint& gp = points[pending[slot]];
            try {
                PrecalcRecord rec = build_record(gp.env, gp.params, k0);
                std::lock_guard<std::mutex> lock(io_mutex);
                emit(rec);
                ++report.n_done;
                int d = ++done;
                if (progress) progress(d, total);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(io_mutex);
                ++report.n_failed;
                char head[160];
                std::snprintf(head, sizeof head,
                              "r=%g q=%g T=%g sigma=%g nu=%g theta=%g: ", gp.env.r, gp.env.q,
                              gp.env.T, gp.params.sigma, gp.params.nu, gp.params.theta);
                report.failures.push_back(std::string(head) + e.what());
                int d = ++done;
                if (progress) progress(d, total);
            }
        }
    };

    int nw = std::max(1, workers);
    if (nw == 1 || pending.size() <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(nw));
        for (int i = 0; i < nw; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return report;
}

KernelModel fit_bandwidths(const std::vector<PrecalcRecord>& records, const std::string& response,
                           const FitOptions& opts, std::uint64_t checksum) {
    const std::size_t n = records.size();
    if (n < 4) throw std::invalid_argument("fit_bandwidths: need at least 4 records");
    if (!(opts.train_fraction > 0.0 && opts.train_fraction <= 1.0))
        throw std::invalid_argument("fit_bandwidths: train_fraction outside (0, 1]");
    if (opts.repeats < 1) throw std::invalid_argument("fit_bandwidths: repeats must be >= 1");

    std::vector<std::array<double, 6>> xs(n);
    std::vector<double> ys(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    sort_canonical(order, records);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = feature(records[order[i]]);
        ys[i] = response_of(records[order[i]], response);
    }

    // start from bandwidths matched to the per-dimension spread of the grid
    std::array<double, 6> lo{}, hi{};
    for (int j = 0; j < 6; ++j) {
        lo[std::size_t(j)] = xs[0][std::size_t(j)];
        hi[std::size_t(j)] = xs[0][std::size_t(j)];
    }
    for (const auto& x : xs)
        for (int j = 0; j < 6; ++j) {
            lo[std::size_t(j)] = std::min(lo[std::size_t(j)], x[std::size_t(j)]);
            hi[std::size_t(j)] = std::max(hi[std::size_t(j)], x[std::size_t(j)]);
        }
    std::vector<double> u0(6);
    for (int j = 0; j < 6; ++j) {
        double range = std::max(hi[std::size_t(j)] - lo[std::size_t(j)], 1e-8);
        u0[std::size_t(j)] = std::log(1.0 / (2.0 * range * range));
        u0[std::size_t(j)] = std::clamp(u0[std::size_t(j)], -10.0, 10.0);
    }

    std::size_t n_train = std::size_t(std::lround(opts.train_fraction * double(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, opts.holdout_only ? n - 1 : n);

    std::array<double, 6> accum{};
    for (int rep = 0; rep < opts.repeats; ++rep) {
        std::mt19937_64 rng(opts.seed + std::uint64_t(rep));
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::size_t> train(perm.begin(), perm.begin() + std::ptrdiff_t(n_train));
        std::vector<std::size_t> score;
        if (opts.holdout_only)
            score.assign(perm.begin() + std::ptrdiff_t(n_train), perm.end());
        else
            for (std::size_t i = 0; i < n; ++i) score.push_back(i);

        auto objective = [&](const std::vector<double>& la) {
            std::array<double, 6> a{};
            for (int j = 0; j < 6; ++j) a[std::size_t(j)] = std::exp(la[std::size_t(j)]);
            double loss = 0.0;
            for (std::size_t i : score) {
                double yhat = nw_estimate(xs[i], xs, ys, train, a);
                double d = ys[i] - yhat;
                loss += d * d;
            }
            return loss;
        };

        NmOptions nm;
        nm.max_iter = opts.max_iter;
        nm.f_tol = 0.0;
        nm.f_tol_rel = 1e-9;
        std::vector<double> step(6, 1.0), box_lo(6, -10.0), box_hi(6, 10.0);
        NmResult res = nelder_mead(objective, u0, step, box_lo, box_hi, nm);
        for (int j = 0; j < 6; ++j) accum[std::size_t(j)] += std::exp(res.x[std::size_t(j)]);
    }

    KernelModel model;
    model.response = response;
    for (int j = 0; j < 6; ++j) model.bandwidths[std::size_t(j)] = accum[std::size_t(j)] / opts.repeats;
    model.dataset_checksum = checksum;
    model.options = opts;
    return model;
}

ModelSet fit_all_models(const std::vector<PrecalcRecord>& records, const FitOptions& opts,
                        std::uint64_t checksum) {
    ModelSet set;
    for (int i = 0; i < 7; ++i)
        set.g[std::size_t(i)] =
            fit_bandwidths(records, "g_" + std::to_string(i), opts, checksum);
    set.lambda = fit_bandwidths(records, "lambda", opts, checksum);
    set.x_star = fit_bandwidths(records, "x_star", opts, checksum);
    return set;
}

void save_models(const ModelSet& models, const std::string& path) {
    nlohmann::json j;
    j["format"] = kModelTag;
    j["dataset_checksum"] = checksum_hex(models.lambda.dataset_checksum);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : models.g) arr.push_back(model_to_json(m));
    arr.push_back(model_to_json(models.lambda));
    arr.push_back(model_to_json(models.x_star));
    j["models"] = arr;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_models: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_models: write failed for " + path);
}

ModelSet load_models(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_models: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != kModelTag)
        throw std::runtime_error("load_models: " + path + " is not a " + std::string(kModelTag) +
                                 " file");
    ModelSet set;
    bool seen[9] = {};
    for (const auto& jm : j.at("models")) {
        KernelModel m = model_from_json(jm);
        if (m.response == "lambda") {
            set.lambda = m;
            seen[7] = true;
        } else if (m.response == "x_star") {
            set.x_star = m;
            seen[8] = true;
        } else {
            int i = (m.response.size() == 3 && m.response[0] == 'g') ? m.response[2] - '0' : -1;
            if (i < 0 || i > 6)
                throw std::runtime_error("load_models: unknown response " + m.response);
            set.g[std::size_t(i)] = m;
            seen[i] = true;
        }
    }
    for (bool s : seen)
        if (!s) throw std::runtime_error("load_models: " + path + " is missing responses");
    return set;
}

double kernel_predict(const std::vector<PrecalcRecord>& records, const KernelModel& model,
                      const MarketEnv& env, const VgParams& params) {
    if (records.empty()) throw std::invalid_argument("kernel_predict: empty dataset");
    std::vector<std::array<double, 6>> xs(records.size());
    std::vector<double> ys(records.size());
    std::vector<std::size_t> all(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        xs[i] = feature(records[i]);
        ys[i] = response_of(records[i], model.response);
        all[i] = i;
    }
    return nw_estimate(feature(env, params), xs, ys, all, model.bandwidths);
}

CollocationTargets predict_correction(const MarketEnv& env, const VgParams& params, double k,
                                      const std::vector<PrecalcRecord>& records,
                                      const ModelSet& models) {
    if (records.empty()) throw std::invalid_argument("predict_correction: empty dataset");
    if (!(k > 0.0)) throw std::invalid_argument("predict_correction: strike must be positive");
    double k0 = records.front().k0;
    double scale = k / k0;
    CollocationTargets t;
    for (int i = 0; i < 7; ++i)
        t.e[std::size_t(i)] =
            scale * kernel_predict(records, models.g[std::size_t(i)], env, params);
    return t;
}

InitGuess predict_init(const MarketEnv& env, const VgParams& params, double k,
                       const std::vector<PrecalcRecord>& records, const ModelSet& models,
                       const SolverBox& box) {
    if (records.empty()) throw std::invalid_argument("predict_init: empty dataset");
    if (!(k > 0.0)) throw std::invalid_argument("predict_init: strike must be positive");
    double k0 = records.front().k0;
    InitGuess g;
    g.lambda = std::clamp(kernel_predict(records, models.lambda, env, params), box.lambda_lo,
                          box.lambda_hi);
    double x0 = kernel_predict(records, models.x_star, env, params) + std::log(k / k0);
    double gap = std::clamp(std::log(k) - x0, box.gap_lo, box.gap_hi);
    g.x_star = std::log(k) - gap;
    return g;
}

MainPriceResult main_price(double s0, double k, const MarketEnv& env, const VgParams& params,
                           const std::vector<PrecalcRecord>& records, const ModelSet& models) {
    if (!(s0 > 0.0)) throw std::invalid_argument("main_price: spot must be positive");
    EuroCurve curve = build_curve(env, params);
    CollocationTargets targets = predict_correction(env, params, k, records, models);
    InitGuess init = predict_init(env, params, k, records, models);
    FitResult fr = solve_fit(targets, k, curve, init.lambda, init.x_star);
    MainPriceResult out;
    out.price = price_american(s0, k, fr.fit, curve);
    out.fit = fr.fit;
    out.loss = fr.loss;
    out.restarts = fr.restarts;
    return out;
}

} // namespace vgp
