// Python bindings for the main operations: model handling, analytic
// predictions, winding extraction and Monte Carlo moments.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "windingstats/analytic.hpp"
#include "windingstats/model_io.hpp"
#include "windingstats/stats.hpp"

namespace py = pybind11;
using namespace windingstats;

namespace {

py::dict curve_to_dict(const Curve& curve) {
    std::vector<double> t, p, q, s1, s2, dp, dq;
    for (const CurveSample& s : curve.samples) {
        t.push_back(s.t);
        p.push_back(s.p);
        q.push_back(s.q);
        s1.push_back(s.s1);
        s2.push_back(s.s2);
        dp.push_back(s.abs_delta_p);
        dq.push_back(s.abs_delta_q);
    }
    py::dict d;
    d["length"] = curve.length;
    d["t"] = t;
    d["p"] = p;
    d["q"] = q;
    d["s1"] = s1;
    d["s2"] = s2;
    d["abs_delta_p"] = dp;
    d["abs_delta_q"] = dq;
    return d;
}

py::dict report_to_dict(const MomentReport& report) {
    py::dict d;
    d["n"] = report.n;
    d["samples"] = report.samples;
    d["excluded"] = report.excluded;
    d["i2"] = report.i2;
    d["mean"] = report.mean;
    d["mean_std_error"] = report.mean_std_error;
    d["mean_predicted"] = report.mean_predicted;
    d["mean_z"] = report.mean_z;
    py::list moments;
    for (const MomentRecord& rec : report.central_moments) {
        py::dict m;
        m["order"] = rec.order;
        m["value"] = rec.value;
        m["std_error"] = rec.std_error;
        m["predicted"] = rec.predicted;
        m["z"] = rec.z;
        moments.append(m);
    }
    d["central_moments"] = moments;
    d["skewness"] = report.skewness.value;
    d["skewness_std_error"] = report.skewness.std_error;
    d["kurtosis"] = report.kurtosis.value;
    d["kurtosis_std_error"] = report.kurtosis.std_error;
    d["windings"] = report.windings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_windingstats, m) {
    m.doc() = "Winding-number statistics of parametric chiral random matrices";

    py::register_exception<ModelError>(m, "ModelError");
    py::register_exception<MulticriticalPointError>(m, "MulticriticalPointError");

    py::class_<CoefficientField>(m, "CoefficientField")
        .def("canonicalize", &CoefficientField::canonicalize,
             py::arg("grid_size") = 4096)
        .def("canonical", &CoefficientField::canonical)
        .def("periodic", &CoefficientField::periodic)
        .def("covariance", &CoefficientField::covariance)
        .def("delta", &CoefficientField::delta)
        .def("berry_phase",
             [](const CoefficientField& f) -> py::object {
                 if (!f.berry_phase()) return py::none();
                 return py::cast(*f.berry_phase());
             })
        .def("model_hash", &CoefficientField::model_hash);

    m.def("load_model", &load_model_file, py::arg("path"));
    m.def("trig_model", &models::trig);
    m.def("reference_affine_model", &models::reference_affine);
    m.def("crossing_model", &models::crossing);

    m.def(
        "corr_k",
        [](const CoefficientField& field, int n, const std::vector<double>& p) {
            return corr_k(field, n, p);
        },
        py::arg("field"), py::arg("n"), py::arg("p"));
    m.def(
        "gen_func",
        [](const CoefficientField& field, int n, const std::vector<double>& p,
           const std::vector<double>& j) { return gen_func(field, n, p, j); },
        py::arg("field"), py::arg("n"), py::arg("p"), py::arg("j"));
    m.def(
        "find_parallel_curves",
        [](const CoefficientField& field, int scan_grid) {
            py::list out;
            for (const Curve& c : find_parallel_curves(field, scan_grid).curves)
                out.append(curve_to_dict(c));
            return out;
        },
        py::arg("field"), py::arg("scan_grid") = 256);
    m.def(
        "i2",
        [](const CoefficientField& field, int scan_grid) {
            return i2(field, find_parallel_curves(field, scan_grid));
        },
        py::arg("field"), py::arg("scan_grid") = 256);
    m.def(
        "predict_moments",
        [](int n, int k, double i2_value) {
            const MomentPrediction pred = predict_moments(n, k, i2_value);
            py::dict d;
            d["order"] = pred.order;
            d["value"] = pred.leading_value;
            d["error_order"] = pred.error_order;
            return d;
        },
        py::arg("n"), py::arg("k"), py::arg("i2"));
    m.def("gaussian_pdf", &gaussian_pdf, py::arg("w"), py::arg("mean"), py::arg("n"),
          py::arg("i2"));

    m.def(
        "winding",
        [](const CoefficientField& field, int n, std::uint64_t seed,
           const std::string& method) {
            const Realization real = sample(n, seed);
            WindingMethod wm = WindingMethod::pencil;
            if (method == "unwrap") wm = WindingMethod::phase_unwrap;
            else if (method == "root-count") wm = WindingMethod::root_count;
            else if (method != "pencil") throw ModelError("unknown method: " + method);
            return compute_winding(real, field, wm).w;
        },
        py::arg("field"), py::arg("n"), py::arg("seed"), py::arg("method") = "pencil");

    m.def(
        "mc_winding_moments",
        [](const CoefficientField& field, int n, std::size_t samples,
           std::uint64_t seed, int workers) {
            McOptions opts;
            opts.workers = workers;
            return report_to_dict(mc_winding_moments(field, n, samples, seed, opts));
        },
        py::arg("field"), py::arg("n"), py::arg("samples"), py::arg("seed"),
        py::arg("workers") = 1);
}
