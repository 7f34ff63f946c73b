#pragma once

// Derivative-free simplex minimizer with box projection.
// Shared by the collocation solver (2-d) and the kernel bandwidth search (6-d).

#include <algorithm>
#include <functional>
#include <vector>

namespace vgp {

struct NmResult {
    std::vector<double> x;
    double fval = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct NmOptions {
    int max_iter = 400;
    double f_tol = 1e-12;     // absolute spread of simplex values
    double f_tol_rel = 1e-10; // relative spread
};

// Minimizes f over the box [lo, hi]. Every trial point is clamped into the box
// before evaluation, so f never sees infeasible coordinates. init_step sets the
// offset of vertex i+1 from the start point along coordinate i.
inline NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                            std::vector<double> start,
                            const std::vector<double>& init_step,
                            const std::vector<double>& lo,
                            const std::vector<double>& hi,
                            const NmOptions& opt = {}) {
    const std::size_t n = start.size();
    auto clamp = [&](std::vector<double>& p) {
        for (std::size_t i = 0; i < n; ++i)
            p[i] = std::clamp(p[i], lo[i], hi[i]);
    };

    std::vector<std::vector<double>> v(n + 1, start);
    clamp(v[0]);
    for (std::size_t i = 0; i < n; ++i) {
        v[i + 1][i] += init_step[i];
        clamp(v[i + 1]);
        // degenerate vertex (start on the boundary): step the other way
        if (v[i + 1][i] == v[0][i]) {
            v[i + 1][i] -= init_step[i];
            clamp(v[i + 1]);
        }
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(v[i]);

    NmResult res;
    int iter = 0;
    while (iter < opt.max_iter) {
        // order vertices by value
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::size_t best = idx[0], worst = idx[n], second = idx[n - 1];

        double spread = fv[worst] - fv[best];
        if (spread <= opt.f_tol + opt.f_tol_rel * std::abs(fv[best])) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += v[i][j];
        }
        for (std::size_t j = 0; j < n; ++j) centroid[j] /= double(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + t * (centroid[j] - v[worst][j]);
            clamp(p);
            return p;
        };

        std::vector<double> xr = blend(1.0);
        double fr = f(xr);
        ++iter;

        if (fr < fv[best]) {
            std::vector<double> xe = blend(2.0);
            double fe = f(xe);
            ++iter;
            if (fe < fr) { v[worst] = xe; fv[worst] = fe; }
            else         { v[worst] = xr; fv[worst] = fr; }
        } else if (fr < fv[second]) {
            v[worst] = xr; fv[worst] = fr;
        } else {
            bool outside = fr < fv[worst];
            std::vector<double> xc = blend(outside ? 0.5 : -0.5);
            double fc = f(xc);
            ++iter;
            if (fc < std::min(fr, fv[worst])) {
                v[worst] = xc; fv[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        v[i][j] = v[best][j] + 0.5 * (v[i][j] - v[best][j]);
                    clamp(v[i]);
                    fv[i] = f(v[i]);
                    ++iter;
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    res.x = v[best];
    res.fval = fv[best];
    res.iterations = iter;
    return res;
}

} // namespace vgp
