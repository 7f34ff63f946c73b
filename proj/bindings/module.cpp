// Python bindings for the variance gamma American put pricer.
//
// Exposes the model primitives, the transform-priced European curve, the
// finite-difference and Monte-Carlo references, the fast approximations and
// the dataset/model pipeline of the main method.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vgpricer/bench.hpp"
#include "vgpricer/bms_approx.hpp"
#include "vgpricer/correction_learn.hpp"
#include "vgpricer/euro_fft.hpp"
#include "vgpricer/mc_lsm.hpp"
#include "vgpricer/pide_fd.hpp"
#include "vgpricer/quad_core.hpp"
#include "vgpricer/vg_model.hpp"

#include <array>
#include <sstream>
#include <string>

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace vgp;

PYBIND11_MODULE(_vgpricer, m) {
    m.doc() = "American put pricing under the variance gamma model";

    py::class_<VgParams>(m, "VgParams")
        .def(py::init([](double sigma, double nu, double theta) {
                 VgParams p{sigma, nu, theta};
                 p.validate();
                 return p;
             }),
             py::arg("sigma"), py::arg("nu"), py::arg("theta"))
        .def_readonly("sigma", &VgParams::sigma)
        .def_readonly("nu", &VgParams::nu)
        .def_readonly("theta", &VgParams::theta)
        .def("__repr__", [](const VgParams& p) {
            std::ostringstream os;
            os << "VgParams(sigma=" << p.sigma << ", nu=" << p.nu << ", theta=" << p.theta << ")";
            return os.str();
        });

    py::class_<MarketEnv>(m, "MarketEnv")
        .def(py::init([](double r, double q, double T) {
                 MarketEnv e{r, q, T};
                 e.validate();
                 return e;
             }),
             py::arg("r"), py::arg("q"), py::arg("T"))
        .def_readonly("r", &MarketEnv::r)
        .def_readonly("q", &MarketEnv::q)
        .def_readonly("T", &MarketEnv::T)
        .def("__repr__", [](const MarketEnv& e) {
            std::ostringstream os;
            os << "MarketEnv(r=" << e.r << ", q=" << e.q << ", T=" << e.T << ")";
            return os.str();
        });

    py::class_<Lambdas>(m, "Lambdas")
        .def_readonly("p", &Lambdas::p)
        .def_readonly("n", &Lambdas::n);

    m.def("lambda_pn", &lambda_pn, py::arg("params"),
          "exponential decay rates (positive, negative) of the jump density");
    m.def("levy_density", &levy_density, py::arg("y"), py::arg("params"));
    m.def("martingale_drift", &martingale_drift, py::arg("params"));
    m.def("truncated_variance", &truncated_variance, py::arg("eps"), py::arg("params"));
    m.def("truncated_drift", &truncated_drift, py::arg("eps"), py::arg("params"));

    // --- European curve
    py::class_<EuroCurve>(m, "EuroCurve")
        .def_readonly("omega", &EuroCurve::omega)
        .def_readonly("df_r", &EuroCurve::df_r)
        .def_readonly("df_q", &EuroCurve::df_q);

    m.def("build_curve",
          [](const MarketEnv& env, const VgParams& params) { return build_curve(env, params); },
          py::arg("env"), py::arg("params"),
          "tabulate the transform-priced European put curve for one parameter set");
    m.def("euro_put", &euro_put, py::arg("s"), py::arg("k"), py::arg("curve"));
    m.def("euro_put_dx", &euro_put_dx, py::arg("x"), py::arg("k"), py::arg("curve"));

    // --- finite-difference reference
    m.def("fd_price",
          [](double s0, double k, const MarketEnv& env, const VgParams& params,
             const std::string& resolution, bool american) {
              FdGrid grid = resolution == "fine" ? fd_fine_grid(k, env, params)
                            : resolution == "coarse"
                                ? fd_coarse_grid(k, env, params)
                                : throw std::invalid_argument(
                                      "fd_price: resolution must be 'fine' or 'coarse'");
              Exercise ex = american ? Exercise::american : Exercise::european;
              return fd_solve(k, env, params, grid, ex, false).value_at(s0);
          },
          py::arg("s0"), py::arg("k"), py::arg("env"), py::arg("params"),
          py::arg("resolution") = "fine", py::arg("american") = true,
          "implicit finite-difference price on the preset fine/coarse grid");

    // --- Monte-Carlo
    py::class_<McResult>(m, "McResult")
        .def_readonly("price", &McResult::price)
        .def_readonly("std_error", &McResult::std_error)
        .def_readonly("euro_price", &McResult::euro_price)
        .def_readonly("euro_std_error", &McResult::euro_std_error);

    m.def("lsm_price",
          [](double s0, double k, const MarketEnv& env, const VgParams& params, int n_paths,
             int n_steps, std::uint64_t seed) {
              McConfig cfg;
              cfg.n_paths = n_paths;
              cfg.n_steps = n_steps;
              cfg.seed = seed;
              return lsm_price(s0, k, env, params, cfg);
          },
          py::arg("s0"), py::arg("k"), py::arg("env"), py::arg("params"),
          py::arg("n_paths") = 100000, py::arg("n_steps") = 250, py::arg("seed") = 42,
          "least-squares Monte-Carlo American put");

    // --- diffusion-transfer approximation
    m.def("simple_price",
          [](double s0, double k, const MarketEnv& env, const VgParams& params, double eps) {
              EuroCurve curve = build_curve(env, params);
              return simple_american_put(s0, k, env, params, curve, eps);
          },
          py::arg("s0"), py::arg("k"), py::arg("env"), py::arg("params"), py::arg("eps") = 0.65,
          "moment-transfer American put (exact European plus diffusion premium)");

    // --- premium fit internals
    py::class_<PremiumFit>(m, "PremiumFit")
        .def_readonly("lambda_", &PremiumFit::lambda)
        .def_readonly("x_star", &PremiumFit::x_star)
        .def_readonly("b", &PremiumFit::b);

    py::class_<MainPriceResult>(m, "MainPriceResult")
        .def_readonly("price", &MainPriceResult::price)
        .def_readonly("fit", &MainPriceResult::fit)
        .def_readonly("loss", &MainPriceResult::loss)
        .def_readonly("restarts", &MainPriceResult::restarts);

    // --- dataset / model pipeline
    py::class_<PrecalcRecord>(m, "PrecalcRecord")
        .def_readonly("env", &PrecalcRecord::env)
        .def_readonly("params", &PrecalcRecord::params)
        .def_readonly("k0", &PrecalcRecord::k0)
        .def_readonly("lambda_opt", &PrecalcRecord::lambda_opt)
        .def_readonly("x_star_opt", &PrecalcRecord::x_star_opt)
        .def_property_readonly("g", [](const PrecalcRecord& r) {
            return std::vector<double>(r.g.begin(), r.g.end());
        });

    py::class_<ModelSet>(m, "ModelSet");

    m.def("build_record",
          [](const MarketEnv& env, const VgParams& params, double k0) {
              return build_record(env, params, k0);
          },
          py::arg("env"), py::arg("params"), py::arg("k0") = 1000.0,
          "one pre-calculation record (fine FD solve plus residual extraction)");
    m.def("load_dataset", &load_dataset, py::arg("path"));
    m.def("load_models", &load_models, py::arg("path"));
    m.def("main_price",
          [](double s0, double k, const MarketEnv& env, const VgParams& params,
             const std::vector<PrecalcRecord>& records, const ModelSet& models) {
              return main_price(s0, k, env, params, records, models);
          },
          py::arg("s0"), py::arg("k"), py::arg("env"), py::arg("params"), py::arg("records"),
          py::arg("models"),
          "fast American put: kernel-predicted corrections plus collocation fit");

#ifdef VERSION_INFO
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
