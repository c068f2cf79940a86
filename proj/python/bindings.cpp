#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lossrobust/cli.hpp"
#include "lossrobust/closed_form.hpp"
#include "lossrobust/ratelab.hpp"

namespace py = pybind11;
using namespace lossrobust;

namespace {

// Python callables are not safe to run on worker threads without the GIL.
std::function<double(double)> hold_gil(py::function f) {
  return [f = std::move(f)](double s) {
    py::gil_scoped_acquire gil;
    return f(s).cast<double>();
  };
}

BivariateFn hold_gil2(py::function f) {
  return [f = std::move(f)](double sigma, double d) {
    py::gil_scoped_acquire gil;
    return f(sigma, d).cast<double>();
  };
}

std::string interval_repr(const Interval& i) {
  std::ostringstream s;
  s << "Interval(" << i.lo << ", " << i.hi << ")";
  return s.str();
}

ClassSpec class_spec(const std::string& kind, double k1, double k2) {
  if (kind == "asymmetric_quadratic") {
    const EnvelopeClass cls = make_asymmetric_quadratic(k1, k2);
    return {cls, cls.l0, asymmetric_quadratic_band(k1, k2), std::nullopt};
  }
  if (kind == "dam") {
    const DamLosses dam = make_dam_losses();
    return {dam.envelope, dam.l0, dam.band, Interval{0.01, 40.0}};
  }
  if (kind == "smooth_envelope") {
    const EnvelopeClass cls = make_smooth_envelope();
    return {cls, cls.l0, std::nullopt, std::nullopt};
  }
  throw DomainError("class kind must be asymmetric_quadratic, dam or smooth_envelope, got '" + kind + "'");
}

ExperimentConfig experiment(std::vector<std::size_t> n_grid, std::size_t replications, std::uint64_t seed,
                            unsigned workers) {
  ExperimentConfig cfg;
  if (!n_grid.empty()) cfg.n_grid = std::move(n_grid);
  cfg.replications = replications;
  cfg.master_seed = seed;
  cfg.workers = workers;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Loss robustness measures for Bayesian decisions";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<BracketError>(m, "BracketError", error.ptr());
  py::register_exception<SingularError>(m, "SingularError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());
  py::register_exception<BandViolation>(m, "BandViolation", error.ptr());
  py::register_exception<ExperimentError>(m, "ExperimentError", error.ptr());
  py::register_exception<cli::ConfigError>(m, "ConfigError", error.ptr());

  py::class_<Interval>(m, "Interval")
      .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
      .def(py::init([](py::tuple t) {
        if (t.size() != 2) throw DomainError("an interval needs (lo, hi)");
        return Interval{t[0].cast<double>(), t[1].cast<double>()};
      }))
      .def_readwrite("lo", &Interval::lo)
      .def_readwrite("hi", &Interval::hi)
      .def("__repr__", &interval_repr);
  py::implicitly_convertible<py::tuple, Interval>();

  // ---- posteriors
  py::class_<NormalPosterior>(m, "NormalPosterior")
      .def(py::init([](double mu, double precision) { return NormalPosterior{mu, precision}; }), py::arg("mu"),
           py::arg("precision"))
      .def_readonly("mu", &NormalPosterior::mu)
      .def_readonly("precision", &NormalPosterior::precision)
      .def("mean", &NormalPosterior::mean)
      .def("sd", &NormalPosterior::sd)
      .def("density", &NormalPosterior::density);
  py::class_<GammaPosterior>(m, "GammaPosterior")
      .def(py::init([](double shape, double rate) { return GammaPosterior{shape, rate}; }), py::arg("shape"),
           py::arg("rate"))
      .def_readonly("shape", &GammaPosterior::shape)
      .def_readonly("rate", &GammaPosterior::rate)
      .def("mean", &GammaPosterior::mean)
      .def("sd", &GammaPosterior::sd)
      .def("density", &GammaPosterior::density)
      .def("quantile", &GammaPosterior::quantile);
  py::class_<GridPosterior>(m, "GridPosterior")
      .def("nodes", [](const GridPosterior& g) { return std::vector<double>(g.nodes().begin(), g.nodes().end()); })
      .def("weights",
           [](const GridPosterior& g) { return std::vector<double>(g.weights().begin(), g.weights().end()); })
      .def("mean", &GridPosterior::mean)
      .def("sd", &GridPosterior::sd);

  m.def("normal_update",
        [](double mu0, double lambda0, double obs_precision, const std::vector<double>& data) {
          return normal_update(mu0, lambda0, obs_precision, data);
        },
        py::arg("mu0"), py::arg("lambda0"), py::arg("obs_precision"), py::arg("data"));
  m.def("gamma_update", [](const std::vector<double>& data) { return gamma_update(data); }, py::arg("data"));
  m.def("gamma_from_summary", &gamma_from_summary, py::arg("n"), py::arg("total"));
  m.def("grid_posterior",
        [](py::function prior_log_density, py::function log_likelihood, const std::vector<double>& data,
           Interval support, int resolution) {
          auto like = [log_likelihood](double s, std::span<const double> x) {
            return log_likelihood(s, std::vector<double>(x.begin(), x.end())).cast<double>();
          };
          return grid_posterior([prior_log_density](double s) { return prior_log_density(s).cast<double>(); }, like,
                                data, support, resolution);
        },
        py::arg("prior_log_density"), py::arg("log_likelihood"), py::arg("data"), py::arg("support"),
        py::arg("resolution") = 2001);
  m.def("posterior_mean", &posterior_mean);
  m.def("posterior_sd", &posterior_sd);
  m.def("expectation",
        [](const Posterior& post, py::function g, const std::vector<double>& breakpoints) {
          return expectation(post, [g](double s) { return g(s).cast<double>(); }, breakpoints);
        },
        py::arg("posterior"), py::arg("g"), py::arg("breakpoints") = std::vector<double>{});

  // ---- losses
  py::enum_<Partial>(m, "Partial")
      .value("d01", Partial::d01)
      .value("d10", Partial::d10)
      .value("d02", Partial::d02)
      .value("d11", Partial::d11)
      .value("d20", Partial::d20);

  py::class_<Loss>(m, "Loss")
      // kinks: callables d -> sigma locating where l(., d) is not smooth.
      // partials: {Partial: callable(sigma, d)}; the rest use central differences,
      // which smear a kink over one step and slow the quadrature down.
      .def(py::init([](std::string label, py::function f, std::vector<py::function> kinks,
                       std::map<Partial, py::function> partials) {
             Loss l(std::move(label), hold_gil2(f));
             for (auto& k : kinks) l.with_kink(Kink{hold_gil(k)});
             for (auto& [which, fn] : partials) l.with_partial(which, hold_gil2(fn));
             return l;
           }),
           py::arg("label"), py::arg("fn"), py::arg("kinks") = std::vector<py::function>{},
           py::arg("partials") = std::map<Partial, py::function>{})
      .def("__call__", &Loss::operator(), py::arg("sigma"), py::arg("d"))
      .def("partial", &Loss::partial, py::arg("which"), py::arg("sigma"), py::arg("d"))
      .def("scaled", &Loss::scaled, py::arg("c"), py::arg("label") = std::string())
      .def_property_readonly("label", &Loss::label)
      .def("__repr__", [](const Loss& l) { return "Loss('" + l.label() + "')"; });

  py::class_<EnvelopeClass>(m, "EnvelopeClass")
      .def_readonly("upper", &EnvelopeClass::upper)
      .def_readonly("lower", &EnvelopeClass::lower)
      .def_readonly("l0", &EnvelopeClass::l0);
  py::class_<BandClass>(m, "BandClass")
      .def(py::init([](Loss inf, Loss sup, Loss l0) { return BandClass{std::move(inf), std::move(sup), std::move(l0)}; }),
           py::arg("inf"), py::arg("sup"), py::arg("l0"))
      .def_readonly("inf", &BandClass::inf)
      .def_readonly("sup", &BandClass::sup)
      .def_readonly("l0", &BandClass::l0);
  py::class_<FiniteClass>(m, "FiniteClass")
      .def(py::init([](std::vector<Loss> losses) { return FiniteClass{std::move(losses)}; }), py::arg("losses"))
      .def_readonly("losses", &FiniteClass::losses);
  py::class_<DamLosses>(m, "DamLosses")
      .def_readonly("l0", &DamLosses::l0)
      .def_readonly("finite", &DamLosses::finite)
      .def_readonly("envelope", &DamLosses::envelope)
      .def_readonly("band", &DamLosses::band);

  m.def("make_asymmetric_quadratic", [](double k1, double k2) { return make_asymmetric_quadratic(k1, k2); },
        py::arg("k1"), py::arg("k2"));
  m.def("asymmetric_quadratic_band", &asymmetric_quadratic_band, py::arg("k1"), py::arg("k2"));
  m.def("make_dam_losses", &make_dam_losses);
  m.def("make_smooth_envelope", &make_smooth_envelope);
  m.def("pointwise_minimizer", &pointwise_minimizer, py::arg("loss"), py::arg("sigma"), py::arg("bracket"));

  py::enum_<CheckStatus>(m, "CheckStatus")
      .value("pass_", CheckStatus::pass)
      .value("fail", CheckStatus::fail)
      .value("flagged", CheckStatus::flagged)
      .value("unchecked", CheckStatus::unchecked);
  py::class_<AssumptionCheck>(m, "AssumptionCheck")
      .def_readonly("id", &AssumptionCheck::id)
      .def_property_readonly("status", [](const AssumptionCheck& c) { return std::string(to_string(c.status)); })
      .def_readonly("witness", &AssumptionCheck::witness);
  py::class_<DiagnosticReport>(m, "DiagnosticReport")
      .def_readonly("theta", &DiagnosticReport::theta)
      .def_readonly("kappa", &DiagnosticReport::kappa)
      .def_readonly("checks", &DiagnosticReport::checks)
      .def("status", [](const DiagnosticReport& r, const std::string& id) {
        return std::string(to_string(r.check(id).status));
      });
  m.def("class_diagnostics",
        [](const LossClass& cls, double theta, const std::vector<double>& eta) {
          return class_diagnostics(cls, theta, eta);
        },
        py::arg("cls"), py::arg("theta"), py::arg("eta"));

  // ---- decisions and measures
  py::class_<BayesAction>(m, "BayesAction")
      .def_readonly("action", &BayesAction::action)
      .def_readonly("expected_loss", &BayesAction::expected_loss)
      .def_readonly("gradient", &BayesAction::gradient)
      .def_readonly("unique", &BayesAction::unique);
  py::class_<ActionSet>(m, "ActionSet")
      .def_readonly("lower", &ActionSet::lower)
      .def_readonly("upper", &ActionSet::upper)
      .def_readonly("unique", &ActionSet::unique)
      .def("diameter", &ActionSet::diameter);
  py::class_<RobustnessReport>(m, "RobustnessReport")
      .def_readonly("action_set", &RobustnessReport::action_set)
      .def_readonly("diameter", &RobustnessReport::diameter)
      .def_readonly("sup_regret", &RobustnessReport::sup_regret)
      .def_readonly("range", &RobustnessReport::range)
      .def_readonly("reference_decision", &RobustnessReport::reference_decision);

  const auto no_bracket = std::optional<Interval>{};
  m.def("expected_loss", &expected_loss, py::arg("loss"), py::arg("posterior"), py::arg("d"));
  m.def("bayes_action", &bayes_action, py::arg("loss"), py::arg("posterior"), py::arg("bracket") = no_bracket);
  m.def("action_set", &action_set, py::arg("cls"), py::arg("posterior"), py::arg("bracket") = no_bracket);
  m.def("regret", &regret, py::arg("loss"), py::arg("posterior"), py::arg("d"), py::arg("bracket") = no_bracket);
  m.def("sup_regret", &sup_regret, py::arg("cls"), py::arg("posterior"), py::arg("d"),
        py::arg("bracket") = no_bracket);
  m.def("range_band", &range_band, py::arg("band"), py::arg("posterior"), py::arg("d"));
  m.def("range_finite", &range_finite, py::arg("cls"), py::arg("posterior"), py::arg("d"));
  m.def("robustness_report", &robustness_report, py::arg("cls"), py::arg("l0"), py::arg("posterior"),
        py::arg("band") = std::optional<BandClass>{}, py::arg("bracket") = no_bracket);

  // ---- limits
  m.def("phi", &phi, py::arg("loss"), py::arg("theta"), py::arg("bracket"));
  m.def("limit_diameter", &limit_diameter, py::arg("cls"), py::arg("theta"), py::arg("bracket"));
  m.def("limit_regret", &limit_regret, py::arg("loss"), py::arg("l0"), py::arg("theta"), py::arg("bracket"));
  m.def("limit_regret_coeff", &limit_regret_coeff, py::arg("loss"), py::arg("l0"), py::arg("theta"),
        py::arg("bracket"));
  m.def("limit_regret_quadform", &limit_regret_quadform, py::arg("loss"), py::arg("l0"), py::arg("theta"),
        py::arg("bracket"));
  m.def("L_f", &L_f, py::arg("hessian_at_theta"), py::arg("I_theta"), py::arg("F_second_moment") = 1.0);

  auto cf = m.def_submodule("closed_form", "asymmetric quadratic class under a normal posterior");
  cf.def("constants", [](double k1, double k2) {
    const auto c = closed_form::asymmetric_quadratic_constants(k1, k2);
    py::dict d;
    d["r_upper"] = c.r_upper;
    d["r_lower"] = c.r_lower;
    d["c_upper"] = c.c_upper;
    d["c_lower"] = c.c_lower;
    return d;
  });
  cf.def("diameter", &closed_form::asymmetric_quadratic_diameter, py::arg("k1"), py::arg("k2"), py::arg("lambda_n"));
  cf.def("sup_regret_at_mean", &closed_form::asymmetric_quadratic_sup_regret_at_mean, py::arg("k1"), py::arg("k2"),
         py::arg("lambda_n"));
  cf.def("range_at_mean", &closed_form::asymmetric_quadratic_range_at_mean, py::arg("k1"), py::arg("k2"),
         py::arg("lambda_n"));

  // ---- experiments
  py::class_<SamplingModel>(m, "SamplingModel")
      .def_readonly("label", &SamplingModel::label)
      .def_readonly("theta", &SamplingModel::theta)
      .def_readonly("I_theta", &SamplingModel::I_theta);
  m.def("normal_model", &normal_model, py::arg("theta"), py::arg("mu0"), py::arg("lambda0"),
        py::arg("obs_precision"));
  m.def("exponential_model", &exponential_model, py::arg("theta"));

  py::class_<CurveRow>(m, "CurveRow")
      .def_readonly("n", &CurveRow::n)
      .def_readonly("values", &CurveRow::values)
      .def_readonly("status", &CurveRow::status)
      .def_readonly("failures", &CurveRow::failures)
      .def_readonly("median", &CurveRow::median)
      .def_readonly("q1", &CurveRow::q1)
      .def_readonly("q3", &CurveRow::q3);
  py::class_<MeasureCurve>(m, "MeasureCurve").def_readonly("rows", &MeasureCurve::rows);
  py::class_<RateFit>(m, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("slope_stderr", &RateFit::slope_stderr)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("r_squared", &RateFit::r_squared)
      .def_readonly("predicted_exponent", &RateFit::predicted_exponent)
      .def("within", &RateFit::within, py::arg("band"));
  py::class_<TrendReport>(m, "TrendReport")
      .def_readonly("n", &TrendReport::n)
      .def_readonly("median", &TrendReport::median)
      .def_readonly("q1", &TrendReport::q1)
      .def_readonly("q3", &TrendReport::q3)
      .def_readonly("numerically_zero", &TrendReport::numerically_zero)
      .def_readonly("passed", &TrendReport::pass);

  m.def("simulate_measure_curve",
        [](const SamplingModel& model, const std::string& kind, const std::string& measure, double k1, double k2,
           std::vector<std::size_t> n_grid, std::size_t replications, std::uint64_t seed, unsigned workers) {
          ExperimentConfig cfg = experiment(std::move(n_grid), replications, seed, workers);
          cfg.class_spec = class_spec(kind, k1, k2);
          cfg.measure = measure_from_string(measure);
          py::gil_scoped_release release;
          return simulate_measure_curve(model, cfg);
        },
        py::arg("model"), py::arg("kind"), py::arg("measure") = "diameter", py::arg("k1") = 1.0,
        py::arg("k2") = 2.0, py::arg("n_grid") = std::vector<std::size_t>{}, py::arg("replications") = 200,
        py::arg("seed") = 42, py::arg("workers") = 1);
  m.def("fit_log_slope",
        [](const std::vector<double>& n, const std::vector<double>& values, double predicted) {
          return fit_log_slope(n, values, predicted);
        },
        py::arg("n"), py::arg("values"), py::arg("predicted_exponent"));
  m.def("fit_curve_slope",
        [](const MeasureCurve& curve, double predicted, double limit) { return fit_log_slope(curve, predicted, limit); },
        py::arg("curve"), py::arg("predicted_exponent"), py::arg("limit") = 0.0);
  m.def("verify_thm81",
        [](const SamplingModel& model, py::function f, double gradient, std::vector<std::size_t> n_grid,
           std::size_t replications, std::uint64_t seed, unsigned workers) {
          const ExperimentConfig cfg = experiment(std::move(n_grid), replications, seed, workers);
          auto fn = hold_gil(f);
          py::gil_scoped_release release;
          return verify_thm81(model, fn, gradient, cfg);
        },
        py::arg("model"), py::arg("f"), py::arg("gradient_at_theta"), py::arg("n_grid") = std::vector<std::size_t>{},
        py::arg("replications") = 200, py::arg("seed") = 42, py::arg("workers") = 1);
  m.def("verify_thm82",
        [](const SamplingModel& model, py::function f, double hessian, std::vector<std::size_t> n_grid,
           std::size_t replications, std::uint64_t seed, unsigned workers, double m2) {
          const ExperimentConfig cfg = experiment(std::move(n_grid), replications, seed, workers);
          auto fn = hold_gil(f);
          py::gil_scoped_release release;
          return verify_thm82(model, fn, hessian, cfg, m2);
        },
        py::arg("model"), py::arg("f"), py::arg("hessian_at_theta"), py::arg("n_grid") = std::vector<std::size_t>{},
        py::arg("replications") = 200, py::arg("seed") = 42, py::arg("workers") = 1,
        py::arg("F_second_moment") = 1.0);

  // ---- command line
  m.def("run_cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "lossrobust");
          std::vector<const char*> argv;
          for (const auto& a : args) argv.push_back(a.c_str());
          std::ostringstream out, err;
          const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command line front end; returns (exit_code, stdout, stderr).");
}
