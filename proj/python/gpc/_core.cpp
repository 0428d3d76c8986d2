// Python bindings for the composition workbench: schedules, mixture oracles,
// estimator fields, composition operators, samplers, the certification
// routines, and the bench/search loop.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gpc/bench.hpp"
#include "gpc/cli.hpp"
#include "gpc/compose.hpp"
#include "gpc/oracle.hpp"
#include "gpc/param.hpp"
#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/schedule.hpp"
#include "gpc/search.hpp"
#include "gpc/theory.hpp"

namespace py = pybind11;
using namespace gpc;

namespace {

OdeDynamics dynamics_for(const NoiseSchedule& sched, const std::string& convention) {
  if (convention == "pf-ode") return reverse_ode(sched);
  if (convention == "reverse-drift") return reverse_drift_ode(sched);
  throw std::invalid_argument("unknown dynamics convention '" + convention +
                              "' (expected 'pf-ode' or 'reverse-drift')");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Score-field composition workbench with analytic Gaussian-mixture oracles";
  m.attr("__version__") = kVersion;

  // ---- enums ----------------------------------------------------------------
  py::enum_<ScheduleKind>(m, "ScheduleKind")
      .value("vp_linear", ScheduleKind::vp_linear)
      .value("vp_scaled_linear", ScheduleKind::vp_scaled_linear)
      .value("flow_linear", ScheduleKind::flow_linear);
  py::enum_<Solver>(m, "Solver")
      .value("ddpm", Solver::ddpm)
      .value("ddim", Solver::ddim)
      .value("pf_ode_euler", Solver::pf_ode_euler)
      .value("flow_euler", Solver::flow_euler);
  py::enum_<Parameterization>(m, "Parameterization")
      .value("score", Parameterization::score)
      .value("epsilon", Parameterization::epsilon)
      .value("sample", Parameterization::sample)
      .value("velocity", Parameterization::velocity);
  py::enum_<Provenance>(m, "Provenance")
      .value("oracle", Provenance::oracle)
      .value("perturbed", Provenance::perturbed)
      .value("composed", Provenance::composed);
  py::enum_<BiasKind>(m, "BiasKind")
      .value("none", BiasKind::none)
      .value("constant", BiasKind::constant)
      .value("linear", BiasKind::linear)
      .value("mean_shift", BiasKind::mean_shift);
  py::enum_<NoiseKind>(m, "NoiseKind")
      .value("none", NoiseKind::none)
      .value("gaussian", NoiseKind::gaussian);
  py::enum_<NoiseFreshness>(m, "NoiseFreshness")
      .value("per_call", NoiseFreshness::per_call)
      .value("frozen_per_trajectory", NoiseFreshness::frozen_per_trajectory);
  py::enum_<CompositionOperator>(m, "CompositionOperator")
      .value("convex", CompositionOperator::convex)
      .value("cfg", CompositionOperator::cfg)
      .value("logical_and", CompositionOperator::logical_and)
      .value("logical_or", CompositionOperator::logical_or);
  py::enum_<BenchMetric>(m, "BenchMetric")
      .value("success_rate", BenchMetric::success_rate)
      .value("energy_distance", BenchMetric::energy_distance);

  // ---- schedules --------------------------------------------------------------
  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_static("vp_linear", &NoiseSchedule::vp_linear, py::arg("beta_min") = 0.1,
                  py::arg("beta_max") = 20.0)
      .def_static("vp_scaled_linear", &NoiseSchedule::vp_scaled_linear,
                  py::arg("beta_min") = 0.1, py::arg("beta_max") = 20.0)
      .def_static("flow_linear", &NoiseSchedule::flow_linear)
      .def_static("make", &NoiseSchedule::make, py::arg("kind"), py::arg("beta_min") = 0.1,
                  py::arg("beta_max") = 20.0)
      .def_property_readonly("kind", &NoiseSchedule::kind)
      .def_property_readonly("is_vp", &NoiseSchedule::is_vp)
      .def("beta", &NoiseSchedule::beta, py::arg("t"))
      .def("beta_integral", &NoiseSchedule::beta_integral, py::arg("t"))
      .def("alpha", &NoiseSchedule::alpha, py::arg("t"))
      .def("sigma", &NoiseSchedule::sigma, py::arg("t"))
      .def("alpha_dot", &NoiseSchedule::alpha_dot, py::arg("t"))
      .def("sigma_dot", &NoiseSchedule::sigma_dot, py::arg("t"))
      .def("drift_x_coef", &NoiseSchedule::drift_x_coef, py::arg("t"))
      .def("drift_s_coef", &NoiseSchedule::drift_s_coef, py::arg("t"))
      .def("__repr__", [](const NoiseSchedule& s) {
        return "NoiseSchedule(" + to_string(s.kind()) + ")";
      });
  m.def("time_grid", &time_grid, py::arg("n_steps"));

  py::class_<StepCoefficients>(m, "StepCoefficients")
      .def_readonly("a", &StepCoefficients::a)
      .def_readonly("b", &StepCoefficients::b)
      .def_readonly("noise", &StepCoefficients::noise)
      .def_readonly("input", &StepCoefficients::input)
      .def_readonly("t_from", &StepCoefficients::t_from)
      .def_readonly("t_to", &StepCoefficients::t_to);
  m.def("step_coefficients", &step_coefficients, py::arg("sched"), py::arg("solver"),
        py::arg("t_from"), py::arg("t_to"));

  // ---- mixtures and oracles -----------------------------------------------------
  py::class_<MixtureComponent>(m, "MixtureComponent")
      .def(py::init([](double weight, Eigen::VectorXd mean, Eigen::MatrixXd cov) {
             return MixtureComponent{weight, std::move(mean), std::move(cov)};
           }),
           py::arg("weight"), py::arg("mean"), py::arg("cov"))
      .def_readwrite("weight", &MixtureComponent::weight)
      .def_readwrite("mean", &MixtureComponent::mean)
      .def_readwrite("cov", &MixtureComponent::cov);

  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init<std::vector<MixtureComponent>>(), py::arg("components"))
      .def_static("single", &GaussianMixture::single, py::arg("mean"), py::arg("cov"))
      .def_property_readonly("dim", &GaussianMixture::dim)
      .def_property_readonly("is_single", &GaussianMixture::is_single)
      .def("components", &GaussianMixture::components)
      .def("shifted", &GaussianMixture::shifted, py::arg("delta"))
      .def("draw", &GaussianMixture::draw, py::arg("key"), py::arg("counter"));

  m.def("oracle_score", &oracle_score, py::arg("mix"), py::arg("sched"), py::arg("t"),
        py::arg("x"));
  m.def("oracle_logdensity", &oracle_logdensity, py::arg("mix"), py::arg("sched"), py::arg("t"),
        py::arg("x"));
  m.def("oracle_dt_logdensity", &oracle_dt_logdensity, py::arg("mix"), py::arg("sched"),
        py::arg("t"), py::arg("x"));
  m.def("oracle_score_lipschitz", &oracle_score_lipschitz, py::arg("mix"), py::arg("sched"),
        py::arg("t"));
  m.def("oracle_field", &oracle_field, py::arg("mix"), py::arg("sched"));

  // ---- score fields ------------------------------------------------------------
  py::class_<ScoreField>(m, "ScoreField")
      .def_readonly("dim", &ScoreField::dim)
      .def_readonly("provenance", &ScoreField::provenance)
      .def_readonly("native_kind", &ScoreField::native_kind)
      .def("has_logdensity", &ScoreField::has_logdensity)
      .def("has_time_derivative", &ScoreField::has_time_derivative)
      .def(
          "__call__",
          [](const ScoreField& f, double t, const Eigen::VectorXd& x,
             std::optional<std::uint64_t> seed, std::uint64_t trajectory_id,
             std::int64_t step_index) {
            EvalContext ctx;
            ctx.trajectory_id = trajectory_id;
            ctx.step_index = step_index;
            RngStream stream(0);
            if (seed) {
              stream = RngStream::from(*seed, 0);
              ctx.stream = &stream;
            }
            return f(t, x, ctx);
          },
          py::arg("t"), py::arg("x"), py::arg("seed") = std::nullopt,
          py::arg("trajectory_id") = 0, py::arg("step_index") = 0)
      .def("logdensity",
           [](const ScoreField& f, double t, const Eigen::VectorXd& x) {
             if (!f.has_logdensity()) {
               throw std::runtime_error("field is not density-capable");
             }
             return f.logdensity(t, x);
           },
           py::arg("t"), py::arg("x"))
      .def("dt_logdensity",
           [](const ScoreField& f, double t, const Eigen::VectorXd& x) {
             if (!f.has_time_derivative()) {
               throw std::runtime_error("field has no time derivative");
             }
             return f.dt_logdensity(t, x);
           },
           py::arg("t"), py::arg("x"));

  m.def("convert_value", &convert_value, py::arg("from_kind"), py::arg("to_kind"),
        py::arg("value"), py::arg("t"), py::arg("x"), py::arg("sched"));
  m.def("as_score_field", &as_score_field, py::arg("field"), py::arg("sched"));
  m.def("as_kind_field", &as_kind_field, py::arg("field"), py::arg("kind"), py::arg("sched"));

  // ---- estimators ---------------------------------------------------------------
  py::class_<BiasSpec>(m, "BiasSpec")
      .def_static("none", &BiasSpec::none)
      .def_static("constant", &BiasSpec::constant, py::arg("b"))
      .def_static("linear", &BiasSpec::linear, py::arg("G"))
      .def_static("mean_shift", &BiasSpec::mean_shift, py::arg("delta"))
      .def_readonly("kind", &BiasSpec::kind)
      .def_readonly("vector", &BiasSpec::vector)
      .def_readonly("matrix", &BiasSpec::matrix);
  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def_static("none", &NoiseSpec::none)
      .def_static("gaussian", &NoiseSpec::gaussian, py::arg("cov"))
      .def_readonly("kind", &NoiseSpec::kind)
      .def_readonly("cov", &NoiseSpec::cov);
  py::class_<EstimatorSpec>(m, "EstimatorSpec")
      .def(py::init([](GaussianMixture base, BiasSpec bias, NoiseSpec noise,
                       NoiseFreshness freshness) {
             return EstimatorSpec{std::move(base), std::move(bias), std::move(noise), freshness};
           }),
           py::arg("base"), py::arg("bias") = BiasSpec::none(),
           py::arg("noise") = NoiseSpec::none(),
           py::arg("freshness") = NoiseFreshness::per_call)
      .def_readwrite("base", &EstimatorSpec::base)
      .def_readwrite("bias", &EstimatorSpec::bias)
      .def_readwrite("noise", &EstimatorSpec::noise)
      .def_readwrite("freshness", &EstimatorSpec::freshness);
  m.def("make_estimator", &make_estimator, py::arg("spec"), py::arg("sched"), py::arg("seed"));
  m.def("make_estimator_pair", &make_estimator_pair, py::arg("spec1"), py::arg("spec2"),
        py::arg("rho"), py::arg("sched"), py::arg("seed"));

  // ---- composition ----------------------------------------------------------------
  py::class_<CompositionSpec>(m, "CompositionSpec")
      .def(py::init([](CompositionOperator op, std::vector<double> weights, double temperature,
                       double offset) {
             CompositionSpec spec;
             spec.op = op;
             spec.weights = std::move(weights);
             spec.temperature = temperature;
             spec.offset = offset;
             return spec;
           }),
           py::arg("op") = CompositionOperator::convex,
           py::arg("weights") = std::vector<double>{}, py::arg("temperature") = 1.0,
           py::arg("offset") = 0.0)
      .def_readwrite("op", &CompositionSpec::op)
      .def_readwrite("weights", &CompositionSpec::weights)
      .def_readwrite("temperature", &CompositionSpec::temperature)
      .def_readwrite("offset", &CompositionSpec::offset);

  m.def("convex_compose",
        [](const std::vector<ScoreField>& fields, const std::vector<double>& weights, double t,
           const Eigen::VectorXd& x) { return convex_compose(fields, weights, t, x); },
        py::arg("fields"), py::arg("weights"), py::arg("t"), py::arg("x"));
  m.def("cfg_compose",
        [](const ScoreField& uncond, const std::vector<ScoreField>& cond,
           const std::vector<double>& weights, double t, const Eigen::VectorXd& x) {
          return cfg_compose(uncond, cond, weights, t, x);
        },
        py::arg("uncond"), py::arg("cond"), py::arg("weights"), py::arg("t"), py::arg("x"));
  m.def("or_weights", &or_weights, py::arg("fields"), py::arg("temperature"), py::arg("offset"),
        py::arg("t"), py::arg("x"));
  py::class_<AndWeights>(m, "AndWeights")
      .def_readonly("weights", &AndWeights::weights)
      .def_readonly("degenerate", &AndWeights::degenerate);
  m.def("and_weights",
        [](const std::vector<ScoreField>& fields, const NoiseSchedule& sched, double t,
           const Eigen::VectorXd& x, const std::string& convention) {
          return and_weights(fields, dynamics_for(sched, convention), t, x);
        },
        py::arg("fields"), py::arg("sched"), py::arg("t"), py::arg("x"),
        py::arg("convention") = "pf-ode");
  m.def("compose_field",
        [](const CompositionSpec& spec, std::vector<ScoreField> fields,
           std::optional<ScoreField> uncond, std::optional<NoiseSchedule> sched,
           const std::string& convention) {
          std::optional<OdeDynamics> dynamics;
          if (sched) dynamics = dynamics_for(*sched, convention);
          return compose_field(spec, std::move(fields), std::move(uncond), std::move(dynamics));
        },
        py::arg("spec"), py::arg("fields"), py::arg("uncond") = std::nullopt,
        py::arg("sched") = std::nullopt, py::arg("convention") = "pf-ode");
  m.def("project_to_simplex", &project_to_simplex, py::arg("v"));

  // ---- sampling -----------------------------------------------------------------
  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("grid", &Trajectory::grid)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("solver", &Trajectory::solver)
      .def_readonly("seed", &Trajectory::seed);
  m.def("sample", &sample, py::arg("field"), py::arg("sched"), py::arg("solver"),
        py::arg("n_steps"), py::arg("n_samples"), py::arg("seed"));
  m.def("sample_endpoints", &sample_endpoints, py::arg("field"), py::arg("sched"),
        py::arg("solver"), py::arg("n_steps"), py::arg("n_samples"), py::arg("seed"),
        py::arg("workers") = 1);

  py::class_<PairResult>(m, "PairResult")
      .def_readonly("oracle", &PairResult::oracle)
      .def_readonly("estimate", &PairResult::estimate)
      .def_readonly("terminal_error", &PairResult::terminal_error);
  m.def("simulate_pair",
        [](const ScoreField& oracle, const ScoreField& estimate, const NoiseSchedule& sched,
           int n_steps, std::uint64_t seed, const std::string& convention) {
          return simulate_pair(oracle, estimate, dynamics_for(sched, convention), n_steps, seed);
        },
        py::arg("oracle"), py::arg("estimate"), py::arg("sched"), py::arg("n_steps"),
        py::arg("seed"), py::arg("convention") = "pf-ode");
  m.def("simulate_pair_sde", &simulate_pair_sde, py::arg("oracle"), py::arg("estimate"),
        py::arg("sched"), py::arg("n_steps"), py::arg("seed"));

  // ---- certification ---------------------------------------------------------------
  py::class_<EstimatorPairSpec>(m, "EstimatorPairSpec")
      .def(py::init([](EstimatorSpec first, EstimatorSpec second, double noise_correlation) {
             return EstimatorPairSpec{std::move(first), std::move(second), noise_correlation};
           }),
           py::arg("first"), py::arg("second"), py::arg("noise_correlation") = 0.0)
      .def_readwrite("first", &EstimatorPairSpec::first)
      .def_readwrite("second", &EstimatorPairSpec::second)
      .def_readwrite("noise_correlation", &EstimatorPairSpec::noise_correlation);

  py::class_<MSEQuadratic>(m, "MSEQuadratic")
      .def_readonly("A", &MSEQuadratic::A)
      .def_readonly("B", &MSEQuadratic::B)
      .def_readonly("C", &MSEQuadratic::C)
      .def_readonly("w_star", &MSEQuadratic::w_star)
      .def_readonly("q_star", &MSEQuadratic::q_star)
      .def_readonly("gap0", &MSEQuadratic::gap0)
      .def_readonly("gap1", &MSEQuadratic::gap1)
      .def_readonly("aligned", &MSEQuadratic::aligned)
      .def("q", &MSEQuadratic::q, py::arg("w"));
  py::class_<MSECrossCheck>(m, "MSECrossCheck")
      .def_readonly("a_mc", &MSECrossCheck::a_mc)
      .def_readonly("b_mc", &MSECrossCheck::b_mc)
      .def_readonly("c_mc", &MSECrossCheck::c_mc)
      .def_readonly("a_se", &MSECrossCheck::a_se)
      .def_readonly("b_se", &MSECrossCheck::b_se)
      .def_readonly("c_se", &MSECrossCheck::c_se)
      .def_readonly("n_mc", &MSECrossCheck::n_mc);
  m.def("analytic_mse",
        [](const EstimatorPairSpec& pair, const NoiseSchedule& sched, double t,
           const Eigen::VectorXd& x, int n_mc, std::uint64_t seed) {
          MSECrossCheck cross;
          const MSEQuadratic quad = analytic_mse(pair, sched, t, x, n_mc, seed, &cross);
          return py::make_tuple(quad, cross);
        },
        py::arg("pair"), py::arg("sched"), py::arg("t"), py::arg("x"), py::arg("n_mc") = 0,
        py::arg("seed") = 0);
  py::class_<MSECurve>(m, "MSECurve")
      .def_readonly("w", &MSECurve::w)
      .def_readonly("q", &MSECurve::q)
      .def_readonly("se", &MSECurve::se)
      .def_readonly("n_mc", &MSECurve::n_mc)
      .def("q_at", &MSECurve::q_at, py::arg("w"))
      .def("se_at", &MSECurve::se_at, py::arg("w"));
  m.def("empirical_mse_curve", &empirical_mse_curve, py::arg("pair"), py::arg("sched"),
        py::arg("t"), py::arg("x"), py::arg("w_grid"), py::arg("n_mc"), py::arg("seed"),
        py::arg("workers") = 1, py::call_guard<py::gil_scoped_release>());

  py::class_<GronwallCertificate>(m, "GronwallCertificate")
      .def_readonly("grid", &GronwallCertificate::grid)
      .def_readonly("l_x", &GronwallCertificate::l_x)
      .def_readonly("l_s", &GronwallCertificate::l_s)
      .def_readonly("lambda_hat", &GronwallCertificate::lambda_hat)
      .def_readonly("kappa", &GronwallCertificate::kappa)
      .def_readonly("l_tilde", &GronwallCertificate::l_tilde)
      .def_readonly("pathwise_bound", &GronwallCertificate::pathwise_bound)
      .def_readonly("expected_bound", &GronwallCertificate::expected_bound)
      .def_readonly("measured", &GronwallCertificate::measured)
      .def_readonly("mean_measured", &GronwallCertificate::mean_measured)
      .def_readonly("max_measured", &GronwallCertificate::max_measured)
      .def_readonly("slack", &GronwallCertificate::slack)
      .def_readonly("dynamics_convention", &GronwallCertificate::dynamics_convention);
  m.def("gronwall_certificate",
        [](const GaussianMixture& oracle_mix, const EstimatorSpec& estimator,
           const NoiseSchedule& sched, int n_steps, int n_pairs, std::uint64_t seed, int workers,
           const std::string& convention) {
          py::gil_scoped_release release;
          return gronwall_certificate(oracle_mix, estimator, sched,
                                      dynamics_for(sched, convention), n_steps, n_pairs, seed,
                                      workers);
        },
        py::arg("oracle_mix"), py::arg("estimator"), py::arg("sched"), py::arg("n_steps"),
        py::arg("n_pairs"), py::arg("seed"), py::arg("workers") = 1,
        py::arg("convention") = "pf-ode");
  m.def("expected_bound_from_functions", &expected_bound_from_functions, py::arg("grid"),
        py::arg("l_tilde"), py::arg("l_s"), py::arg("kappa"));
  m.def("pathwise_bound_from_functions", &pathwise_bound_from_functions, py::arg("grid"),
        py::arg("l_tilde"), py::arg("l_s"), py::arg("kappa"));

  py::class_<CorollaryEntry>(m, "CorollaryEntry")
      .def_readonly("w", &CorollaryEntry::w)
      .def_readonly("integrated_mse", &CorollaryEntry::integrated_mse)
      .def_readonly("certified_bound", &CorollaryEntry::certified_bound)
      .def_readonly("measured_error", &CorollaryEntry::measured_error);
  py::class_<CorollaryReport>(m, "CorollaryReport")
      .def_readonly("entries", &CorollaryReport::entries)
      .def_readonly("parent_first", &CorollaryReport::parent_first)
      .def_readonly("parent_second", &CorollaryReport::parent_second)
      .def_readonly("premise_holds_somewhere", &CorollaryReport::premise_holds_somewhere)
      .def_readonly("bounds_follow_premise", &CorollaryReport::bounds_follow_premise)
      .def_readonly("measured_follows_premise", &CorollaryReport::measured_follows_premise);
  m.def("corollary_check",
        [](const EstimatorPairSpec& pair, const NoiseSchedule& sched,
           const std::vector<double>& w_grid, int n_steps, int n_pairs, std::uint64_t seed,
           int workers, const std::string& convention) {
          py::gil_scoped_release release;
          return corollary_check(pair, sched, w_grid, dynamics_for(sched, convention), n_steps,
                                 n_pairs, seed, workers);
        },
        py::arg("pair"), py::arg("sched"), py::arg("w_grid"), py::arg("n_steps"),
        py::arg("n_pairs"), py::arg("seed"), py::arg("workers") = 1,
        py::arg("convention") = "pf-ode");

  // ---- bench and search -----------------------------------------------------------
  py::class_<BenchTask>(m, "BenchTask")
      .def(py::init([](Eigen::VectorXd target, double radius, GaussianMixture data_law,
                       int horizon, BenchMetric metric) {
             return BenchTask{std::move(target), radius, std::move(data_law), horizon, metric};
           }),
           py::arg("target"), py::arg("radius"), py::arg("data_law"), py::arg("horizon") = 100,
           py::arg("metric") = BenchMetric::success_rate)
      .def_readwrite("target", &BenchTask::target)
      .def_readwrite("radius", &BenchTask::radius)
      .def_readwrite("data_law", &BenchTask::data_law)
      .def_readwrite("horizon", &BenchTask::horizon)
      .def_readwrite("metric", &BenchTask::metric);
  py::class_<BenchResult>(m, "BenchResult")
      .def_readonly("episodes", &BenchResult::episodes)
      .def_readonly("successes", &BenchResult::successes)
      .def_readonly("success_rate", &BenchResult::success_rate)
      .def_readonly("metric_value", &BenchResult::metric_value)
      .def_readonly("endpoints", &BenchResult::endpoints);
  m.def("run_bench", &run_bench, py::arg("task"), py::arg("field"), py::arg("sched"),
        py::arg("solver"), py::arg("n_episodes"), py::arg("seed"), py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("bench_rewards", &bench_rewards, py::arg("task"), py::arg("field"), py::arg("sched"),
        py::arg("solver"), py::arg("n_episodes"), py::arg("seed"), py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("energy_distance", &energy_distance, py::arg("a"), py::arg("b"), py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());
  py::class_<PermutationTest>(m, "PermutationTest")
      .def_readonly("statistic", &PermutationTest::statistic)
      .def_readonly("threshold", &PermutationTest::threshold)
      .def_readonly("p_value", &PermutationTest::p_value)
      .def_readonly("shuffles", &PermutationTest::shuffles);
  m.def("energy_permutation_test", &energy_permutation_test, py::arg("a"), py::arg("b"),
        py::arg("shuffles"), py::arg("seed"), py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());

  py::class_<RewardCell>(m, "RewardCell")
      .def_readonly("w", &RewardCell::w)
      .def_readonly("episodes", &RewardCell::episodes)
      .def_readonly("successes", &RewardCell::successes)
      .def_readonly("mean_reward", &RewardCell::mean_reward)
      .def_readonly("se", &RewardCell::se)
      .def_readonly("seed", &RewardCell::seed)
      .def_readonly("valid", &RewardCell::valid);
  py::class_<RewardPool>(m, "RewardPool").def_readonly("cells", &RewardPool::cells);
  py::class_<GridSearchResult>(m, "GridSearchResult")
      .def_readonly("w_star", &GridSearchResult::w_star)
      .def_readonly("best_reward", &GridSearchResult::best_reward)
      .def_readonly("pool", &GridSearchResult::pool);
  // Python evaluators hold the interpreter lock, so the search runs its cells
  // on the calling thread regardless of the requested worker count.
  m.def("grid_search",
        [](const CellEvaluator& evaluator, double grid_step, int episodes_per_cell,
           std::uint64_t seed) {
          return grid_search(evaluator, grid_step, episodes_per_cell, seed, 1);
        },
        py::arg("evaluator"), py::arg("grid_step"), py::arg("episodes_per_cell"),
        py::arg("seed"));
  m.def("sweep_csv", &sweep_csv, py::arg("pool"));

  // ---- rng helpers ------------------------------------------------------------
  m.def("derive_key", [](std::uint64_t a, std::uint64_t b) { return derive_key(a, b); },
        py::arg("a"), py::arg("b"));
  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("key"))
      .def_static("from_seed", &RngStream::from, py::arg("seed"), py::arg("stream_id"))
      .def("raw", &RngStream::raw)
      .def("uniform", &RngStream::uniform)
      .def("normal", &RngStream::normal)
      .def("normal_vector", &RngStream::normal_vector, py::arg("dim"));
}
