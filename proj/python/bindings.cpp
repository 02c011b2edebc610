#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "csof/augmented.hpp"
#include "csof/montecarlo.hpp"
#include "csof/result.hpp"
#include "csof/scp.hpp"

namespace py = pybind11;
using namespace csof;

namespace {

SamplingMode parse_sampling(const std::string& s) {
  if (s == "case1") return SamplingMode::Case1;
  if (s == "case2") return SamplingMode::Case2;
  if (s == "joint") return SamplingMode::Joint;
  throw py::value_error("sampling must be case1, case2 or joint, got '" + s + "'");
}

ProblemSpec builtin(const std::string& name) {
  const auto c = parse_builtin_case(name);
  if (!c) throw py::value_error("unknown builtin case '" + name + "'");
  return builtin_double_integrator(*c);
}

template <class T, class F>
auto sym_getter(F f) {
  return [f](const T& self) -> Matrix { return f(self).matrix(); };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Covariance steering with output feedback";

  auto base = py::register_exception<Error>(m, "CsofError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  py::class_<ProblemSpec>(m, "Problem")
      .def_static("builtin", &builtin, py::arg("name"))
      .def_static("load", [](const std::filesystem::path& p) { return load_problem(p); }, py::arg("path"))
      .def_static("from_json", [](const std::string& s) { return parse_problem(s); }, py::arg("text"))
      .def("to_json", [](const ProblemSpec& s) { return serialize_problem(s); })
      .def("validate", [](const ProblemSpec& s) { validate(s); })
      .def_readwrite("name", &ProblemSpec::name)
      .def_readonly("N", &ProblemSpec::N)
      .def_property_readonly("nx", [](const ProblemSpec& s) { return s.dims.nx; })
      .def_property_readonly("nu", [](const ProblemSpec& s) { return s.dims.nu; })
      .def_property_readonly("ny", [](const ProblemSpec& s) { return s.dims.ny; })
      .def_readwrite("underweight_p", &ProblemSpec::underweight_p)
      .def_property_readonly("mu0", [](const ProblemSpec& s) { return s.boundary.mu0; })
      .def_property_readonly("muf", [](const ProblemSpec& s) { return s.boundary.muf; })
      .def_property_readonly("Pf", [](const ProblemSpec& s) { return s.boundary.Pf.matrix(); })
      .def_property_readonly("Paug0", [](const ProblemSpec& s) { return s.boundary.init.Paug0.matrix(); })
      .def("__repr__", [](const ProblemSpec& s) {
        return "<Problem " + s.name + " N=" + std::to_string(s.N) + " nx=" + std::to_string(s.dims.nx) + ">";
      });

  py::class_<FilterStage>(m, "FilterStage")
      .def_readonly("L", &FilterStage::L)
      .def_property_readonly("Ptilde_minus", sym_getter<FilterStage>([](const FilterStage& f) { return f.Ptilde_minus; }))
      .def_property_readonly("Ptilde", sym_getter<FilterStage>([](const FilterStage& f) { return f.Ptilde; }))
      .def_property_readonly("Pinno", sym_getter<FilterStage>([](const FilterStage& f) { return f.Pinno; }));

  py::class_<FilterSchedule>(m, "FilterSchedule")
      .def_readonly("stages", &FilterSchedule::stages)
      .def_readonly("p", &FilterSchedule::p)
      .def("__len__", &FilterSchedule::size);

  py::class_<Policy>(m, "Policy")
      .def(py::init([](std::vector<Vector> ubar, std::vector<Matrix> K) {
             if (ubar.size() != K.size()) throw py::value_error("ubar and K must have the same length");
             return Policy{std::move(ubar), std::move(K)};
           }),
           py::arg("ubar"), py::arg("K"))
      .def_static("zero", &Policy::zero, py::arg("N"), py::arg("nx"), py::arg("nu"))
      .def_readonly("ubar", &Policy::ubar)
      .def_readonly("K", &Policy::K)
      .def("__len__", &Policy::size);

  py::class_<AugmentedMoments>(m, "AugmentedMoments")
      .def_readonly("mu", &AugmentedMoments::mu)
      .def_property_readonly("Paug", sym_getter<AugmentedMoments>([](const AugmentedMoments& a) { return a.Paug; }))
      .def_property_readonly("P", sym_getter<AugmentedMoments>([](const AugmentedMoments& a) { return a.truth(); }))
      .def_property_readonly("Phat", sym_getter<AugmentedMoments>([](const AugmentedMoments& a) { return a.estimate(); }))
      .def_property_readonly("Sigma", &AugmentedMoments::cross);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("prior", &Trajectory::prior)
      .def_readonly("posterior", &Trajectory::posterior);

  py::class_<LegacyStage>(m, "LegacyStage")
      .def_property_readonly("P", sym_getter<LegacyStage>([](const LegacyStage& l) { return l.P; }))
      .def_property_readonly("Phat", sym_getter<LegacyStage>([](const LegacyStage& l) { return l.Phat; }));

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iter", &IterationRecord::iter)
      .def_readonly("max_e", &IterationRecord::max_e)
      .def_readonly("J", &IterationRecord::J)
      .def_readonly("dJ", &IterationRecord::dJ)
      .def_readonly("weight", &IterationRecord::weight)
      .def_readonly("e", &IterationRecord::e)
      .def_readonly("multipliers", &IterationRecord::multipliers)
      .def_readonly("gaps", &IterationRecord::gaps)
      .def_readonly("wall_seconds", &IterationRecord::wall_seconds)
      .def_readonly("backend_iterations", &IterationRecord::backend_iterations);

  py::class_<McStage>(m, "McStage")
      .def_readonly("mean", &McStage::mean)
      .def_readonly("mean_xhat", &McStage::mean_xhat)
      .def_property_readonly("cov", sym_getter<McStage>([](const McStage& s) { return s.cov; }))
      .def_readonly("mean_u", &McStage::mean_u)
      .def_readonly("mean_error", &McStage::mean_error)
      .def_readonly("mean_max_abs", &McStage::mean_max_abs)
      .def_readonly("truth_cov_error", &McStage::truth_cov_error)
      .def_readonly("aug_cov_error", &McStage::aug_cov_error);

  py::class_<McReport>(m, "McReport")
      .def_readonly("n_trials", &McReport::n_trials)
      .def_readonly("seed", &McReport::seed)
      .def_property_readonly("sampling", [](const McReport& r) { return std::string(to_string(r.mode)); })
      .def_readonly("stages", &McReport::stages)
      .def_readonly("terminal_ok", &McReport::terminal_ok)
      .def_readonly("terminal_min_eig", &McReport::terminal_min_eig)
      .def_readonly("terminal_mean_error", &McReport::terminal_mean_error)
      .def("consistent", &McReport::consistent, py::arg("stages"));

  py::class_<RunResult>(m, "Result")
      .def_readonly("problem", &RunResult::problem)
      .def_property_readonly("status", [](const RunResult& r) { return std::string(to_string(r.status)); })
      .def_property_readonly("converged", [](const RunResult& r) { return r.status == ScpStatus::Converged; })
      .def_readonly("message", &RunResult::message)
      .def_readonly("schedule", &RunResult::schedule)
      .def_readonly("policy", &RunResult::policy)
      .def_readonly("predicted", &RunResult::predicted)
      .def_readonly("legacy", &RunResult::legacy)
      .def_readonly("trace", &RunResult::trace)
      .def_readwrite("monte_carlo", &RunResult::monte_carlo)
      .def_readonly("gain_norms", &RunResult::gain_norms)
      .def_readonly("solve_seconds", &RunResult::solve_seconds)
      .def("to_json", [](const RunResult& r) { return serialize_result(r); })
      .def_static("from_json", [](const std::string& s) { return parse_result(s); }, py::arg("text"))
      .def("save", [](const RunResult& r, const std::filesystem::path& p) { save_result(r, p); }, py::arg("path"))
      .def_static("load", [](const std::filesystem::path& p) { return load_result(p); }, py::arg("path"));

  m.def("design_filter", &design_filter, py::arg("problem"));
  m.def("propagate", &propagate, py::arg("problem"), py::arg("schedule"), py::arg("policy"));
  m.def(
      "legacy_recursion",
      [](const ProblemSpec& s, const FilterSchedule& f, const Policy& p, bool assume_orthogonality) {
        return legacy_recursion(s, f, p,
                                assume_orthogonality ? LegacyMode::AssumeOrthogonality
                                                     : LegacyMode::RequireOptimalGain);
      },
      py::arg("problem"), py::arg("schedule"), py::arg("policy"), py::arg("assume_orthogonality") = false);

  m.def(
      "solve",
      [](const ProblemSpec& spec, bool hard_decrease, std::function<void(const IterationRecord&)> on_iteration) {
        ScpOptions opts;
        opts.hard_decrease = hard_decrease;
        if (on_iteration) {
          opts.on_iteration = [&on_iteration](const IterationRecord& rec) {
            py::gil_scoped_acquire gil;
            on_iteration(rec);
          };
        }
        ScpResult scp;
        {
          py::gil_scoped_release release;
          scp = run(spec, opts);
        }
        RunResult r = make_result(spec, scp);
        if (scp.converged()) r.legacy = legacy_recursion(spec, scp.schedule, scp.policy, LegacyMode::AssumeOrthogonality);
        return r;
      },
      py::arg("problem"), py::arg("hard_decrease") = false, py::arg("on_iteration") = nullptr);

  m.def(
      "monte_carlo",
      [](const ProblemSpec& spec, const FilterSchedule& schedule, const Policy& policy, int n_trials,
         std::uint64_t seed, unsigned threads, std::optional<std::string> sampling, double mean_tol,
         double cov_tol) {
        McOptions o;
        o.n_trials = n_trials;
        o.seed = seed;
        o.threads = threads;
        o.mode = sampling ? parse_sampling(*sampling) : default_sampling(spec);
        o.mean_tol = mean_tol;
        o.cov_tol = cov_tol;
        py::gil_scoped_release release;
        return run_ensemble(spec, schedule, policy, o);
      },
      py::arg("problem"), py::arg("schedule"), py::arg("policy"), py::arg("n_trials") = 10000,
      py::arg("seed") = 0, py::arg("threads") = 0, py::arg("sampling") = py::none(), py::arg("mean_tol") = 0.05,
      py::arg("cov_tol") = 0.05);
}
