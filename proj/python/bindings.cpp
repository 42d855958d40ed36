#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trustgame/analysis.hpp"
#include "trustgame/cli.hpp"
#include "trustgame/engine.hpp"
#include "trustgame/error.hpp"
#include "trustgame/master_eq.hpp"
#include "trustgame/stability.hpp"

namespace py = pybind11;
using namespace trustgame;

PYBIND11_MODULE(_trustgame, m) {
    m.doc() = "Trust game on an adaptive donator/rewarder network";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

    m.def(
        "simulate",
        [](std::int64_t N, std::int64_t K, double a, double r, std::uint64_t seed, std::int64_t burn_in,
           std::int64_t sweeps, std::int64_t record_every, const std::string& init) {
            SimParams p;
            p.N = N;
            p.K = K;
            p.a = a;
            p.r = r;
            p.seed = seed;
            p.burn_in_sweeps = burn_in;
            p.measure_sweeps = sweeps;
            p.record_every_sweeps = record_every;
            if (init == "ones")
                p.init = InitialCondition::all_ones;
            else if (init != "uniform")
                throw ValidationError("init must be 'uniform' or 'ones'");
            RunResult res;
            {
                py::gil_scoped_release release;
                res = run(p);
            }
            py::dict out;
            out["mean_w_series"] = res.series.values;
            out["sample_period"] = res.series.sample_period_sweeps;
            out["degree_counts"] = res.degrees.counts;
            out["n_snapshots"] = res.degrees.n_snapshots;
            out["mean_w"] = res.mean_w;
            out["variance_w"] = res.variance_w;
            return out;
        },
        py::arg("N") = 100000, py::arg("K") = 1, py::arg("a") = 0.1, py::arg("r") = 1e-6, py::arg("seed") = 1,
        py::arg("burn_in") = 1000, py::arg("sweeps") = 10000, py::arg("record_every") = 1,
        py::arg("init") = "uniform", "Run one simulation; returns the <w> series and accumulated in-degree counts.");

    m.def(
        "find_critical_a",
        [](std::int64_t K, double tol) {
            const auto cp = stability::find_critical_a(K, tol);
            return py::make_tuple(cp.a_c, cp.k_max);
        },
        py::arg("K"), py::arg("tol") = 1e-6, "Critical rewarder-update rate; returns (a_c, k_max).");

    m.def(
        "stability_indicator",
        [](std::int64_t K, double a, std::int64_t k_max) {
            return stability::stability_indicator(
                stability::build_linearized_matrix(K, a, k_max > 0 ? k_max : stability::default_k_max(K)));
        },
        py::arg("K"), py::arg("a"), py::arg("k_max") = 0);

    m.def(
        "master_eq",
        [](std::int64_t K, double a, std::int64_t n_w, double T, double dt, double sample_every, std::int64_t k_max) {
            const auto km = k_max > 0 ? k_max : master_eq::default_k_max(K);
            master_eq::IntegrateOptions opt;
            opt.a = a;
            opt.T = T;
            opt.dt = dt;
            opt.sample_every = sample_every;
            master_eq::Trajectory traj;
            {
                py::gil_scoped_release release;
                traj = master_eq::integrate(master_eq::uniform_poisson(K, km, n_w), opt);
            }
            return py::make_tuple(traj.t, traj.mean_w);
        },
        py::arg("K"), py::arg("a"), py::arg("n_w") = 32, py::arg("T") = 100.0, py::arg("dt") = 0.1,
        py::arg("sample_every") = 1.0, py::arg("k_max") = 0,
        "Integrate the master equation from the uniform state; returns (t, <w>).");

    m.def(
        "psd",
        [](const std::vector<double>& values, std::int64_t segment_length, double sample_period) {
            const auto s = analysis::psd(values, segment_length, sample_period);
            return py::make_tuple(s.frequencies, s.power);
        },
        py::arg("values"), py::arg("segment_length") = 4096, py::arg("sample_period") = 1.0);

    m.def(
        "loglog_slope",
        [](const std::vector<double>& f, const std::vector<double>& power, double f_min, double f_max) {
            analysis::Spectrum s;
            s.frequencies = f;
            s.power = power;
            return analysis::loglog_slope(s, f_min, f_max);
        },
        py::arg("f"), py::arg("power"), py::arg("f_min"), py::arg("f_max"));

    m.def(
        "tail_exponent",
        [](const std::vector<std::int64_t>& counts, std::int64_t k_min) {
            return analysis::powerlaw_tail_exponent(counts, k_min).exponent;
        },
        py::arg("counts"), py::arg("k_min"));

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line interface in-process; returns (exit code, stdout, stderr).");
}
