#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "volinfo/artifact_io.hpp"
#include "volinfo/errors.hpp"
#include "volinfo/gp_stochvol.hpp"
#include "volinfo/heston_transforms.hpp"
#include "volinfo/info_measures.hpp"
#include "volinfo/laplace_inversion.hpp"
#include "volinfo/market_data.hpp"
#include "volinfo/version.hpp"

namespace py = pybind11;
using namespace volinfo;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

ReturnsSeries make_series(const std::vector<double>& returns, const std::vector<double>& days, int days_per_year) {
    ReturnsSeries s;
    s.returns = returns;
    s.days = days;
    if (s.days.empty())
        for (std::size_t i = 0; i < returns.size(); ++i) s.days.push_back(static_cast<double>(i));
    s.calendar.days_per_year = days_per_year;
    s.validate();
    return s;
}

KernelSpec resolve_kernel(const std::string& name) {
    try {
        return make_template(name);
    } catch (const InputError&) {
        return parse_kernel(name, name);
    }
}

OptimizeOptions options(int restarts, std::uint64_t seed) {
    OptimizeOptions o;
    o.restarts = restarts;
    o.seed = seed;
    return o;
}

py::dict prediction_dict(const Prediction& p) {
    py::dict d;
    d["days"] = p.days;
    d["mean"] = p.mean;
    d["variance"] = p.variance;
    d["sigma_lo"] = p.sigma_lo;
    d["sigma_hi"] = p.sigma_hi;
    return d;
}

}  // namespace

PYBIND11_MODULE(_volinfo, m) {
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "VolinfoError", PyExc_RuntimeError);
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<ToleranceError>(m, "ToleranceError", base.ptr());

    py::class_<HestonParams>(m, "HestonParams")
        .def(py::init<>())
        .def(py::init([](double gamma, double theta, double kappa, double rho, double mu) {
                 HestonParams p{gamma, theta, kappa, rho, mu};
                 p.validate();
                 return p;
             }),
             py::arg("gamma"), py::arg("theta"), py::arg("kappa"), py::arg("rho"), py::arg("mu") = 0.0)
        .def_readwrite("gamma", &HestonParams::gamma)
        .def_readwrite("theta", &HestonParams::theta)
        .def_readwrite("kappa", &HestonParams::kappa)
        .def_readwrite("rho", &HestonParams::rho)
        .def_readwrite("mu", &HestonParams::mu)
        .def_property_readonly("feller_alpha", &HestonParams::feller_alpha)
        .def("__repr__", &HestonParams::describe);

    m.def("stationary_pdf", &stationary_pdf, py::arg("v"), py::arg("params") = HestonParams{});

    m.def(
        "stehfest_invert",
        [](const std::function<double(double)>& f, double v, int degree) {
            return stehfest_weights(degree).invert(f, v);
        },
        py::arg("transform"), py::arg("v"), py::arg("degree") = kDefaultStehfestDegree,
        "Invert a real Laplace transform s -> F(s) at v.");

    m.def(
        "mi_curve",
        [](const std::vector<double>& t_days, const HestonParams& params, int days_per_year) {
            params.validate();
            CalendarConvention cal{days_per_year};
            cal.validate();
            std::vector<double> years;
            for (double d : t_days) years.push_back(cal.years(d));
            std::vector<CurvePoint> pts;
            {
                py::gil_scoped_release release;
                pts = mi_curve(params, years);
            }
            py::list out;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                py::dict d;
                d["t_days"] = t_days[i];
                d["bits"] = pts[i].bits;
                d["mass"] = pts[i].mass;
                d["clipped_mass"] = pts[i].clipped_mass;
                out.append(d);
            }
            return out;
        },
        py::arg("t_days"), py::arg("params") = HestonParams{}, py::arg("days_per_year") = 252,
        "Mutual information in bits between the return over t and the variance at t.");

    m.def(
        "flow",
        [](int n, double tau_days, const HestonParams& params, int days_per_year) {
            params.validate();
            CalendarConvention cal{days_per_year};
            FlowQuery q{n, cal.years(tau_days)};
            FlowBreakdown b;
            {
                py::gil_scoped_release release;
                b = flow_breakdown(q, params);
            }
            py::dict d;
            d["n"] = n;
            d["tau_days"] = tau_days;
            d["flow_bits"] = b.flow;
            d["stock_mi_bits"] = b.stock_mi;
            d["ratio"] = n >= 1 && b.stock_mi >= 1e-4 ? py::cast(flow_ratio(b)) : py::none();
            return d;
        },
        py::arg("n"), py::arg("tau_days"), py::arg("params") = HestonParams{}, py::arg("days_per_year") = 252,
        "Information flow from the variance and stock mutual information for lag n and step tau.");

    m.def(
        "load_returns",
        [](const std::string& path, const std::string& date_column, const std::string& price_column) {
            LoadReport rep;
            PriceSeries p = load_prices(path, ColumnSelectors{date_column, price_column}, &rep);
            ReturnsSeries r = to_returns(p);
            std::vector<std::string> dates;
            for (const Date& d : p.dates) dates.push_back(format_date(d));
            py::dict out;
            out["dates"] = dates;
            out["prices"] = p.prices;
            out["days"] = r.days;
            out["returns"] = r.returns;
            out["manifest"] = to_python(price_manifest(path, p, rep));
            return out;
        },
        py::arg("path"), py::arg("date_column") = "Date", py::arg("price_column") = "Adj Close");

    m.def(
        "synthetic_returns",
        [](const std::string& kernel, double mean_y, std::size_t n, std::uint64_t seed) {
            SyntheticSeries s = synthetic_returns(resolve_kernel(kernel), mean_y, n, seed);
            return py::make_tuple(s.series.returns, s.y);
        },
        py::arg("kernel"), py::arg("mean_y"), py::arg("n"), py::arg("seed") = 0,
        "Draw returns whose log-variance follows the given kernel; returns (returns, log_variance).");

    py::class_<OptimizeResult>(m, "GpFit")
        .def_property_readonly("log_evidence", [](const OptimizeResult& r) { return r.fit.log_marginal; })
        .def_property_readonly("kernel", [](const OptimizeResult& r) { return to_python(r.kernel.to_json()); })
        .def("to_dict", [](const OptimizeResult& r) { return to_python(r.to_json()); })
        .def("band", [](const OptimizeResult& r) { return prediction_dict(posterior_band(r.fit)); })
        .def(
            "predict", [](const OptimizeResult& r, const std::vector<double>& days) { return prediction_dict(predict(r.fit, days)); },
            py::arg("days"))
        .def(
            "information_gain",
            [](const OptimizeResult& r, const std::vector<int>& windows, py::object target) {
                const std::size_t t = target.is_none() ? r.fit.series.size() - 1 : target.cast<std::size_t>();
                return info_gain_curve(r.fit, t, windows).gain;
            },
            py::arg("windows"), py::arg("target") = py::none(), "Bits gained about y[target] from each preceding window.");

    m.def(
        "fit_gp",
        [](const std::vector<double>& returns, const std::string& kernel, int restarts, std::uint64_t seed,
           const std::vector<double>& days, int days_per_year) {
            ReturnsSeries s = make_series(returns, days, days_per_year);
            KernelSpec k = resolve_kernel(kernel);
            py::gil_scoped_release release;
            return optimize_hyperparams(k, s, options(restarts, seed));
        },
        py::arg("returns"), py::arg("kernel") = "OU", py::arg("restarts") = 100, py::arg("seed") = 0,
        py::arg("days") = std::vector<double>{}, py::arg("days_per_year") = 252,
        "Maximise the Laplace evidence of a log-variance Gaussian-process model.");

    m.def(
        "compare_models",
        [](const std::vector<double>& returns, const std::vector<std::string>& kernels, int restarts,
           std::uint64_t seed, const std::vector<double>& days, int days_per_year) {
            ReturnsSeries s = make_series(returns, days, days_per_year);
            std::vector<KernelSpec> specs;
            for (const std::string& k : kernels) specs.push_back(resolve_kernel(k));
            std::vector<ModelScore> scores;
            {
                py::gil_scoped_release release;
                scores = compare_models(s, specs, options(restarts, seed));
            }
            py::list out;
            for (const ModelScore& sc : scores) {
                py::dict d;
                d["rank"] = sc.rank;
                d["template"] = sc.name;
                d["log_evidence"] = sc.evidence;
                d["n_hyper"] = sc.n_hyper;
                out.append(d);
            }
            return out;
        },
        py::arg("returns"), py::arg("kernels"), py::arg("restarts") = 100, py::arg("seed") = 0,
        py::arg("days") = std::vector<double>{}, py::arg("days_per_year") = 252);
}
