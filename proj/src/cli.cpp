#include "gpc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpc/bench.hpp"
#include "gpc/compose.hpp"
#include "gpc/param.hpp"
#include "gpc/rng.hpp"
#include "gpc/sampler.hpp"
#include "gpc/search.hpp"
#include "gpc/svg.hpp"
#include "gpc/theory.hpp"
#include "gpc/util.hpp"

namespace gpc {

namespace {

using Json = nlohmann::ordered_json;

VerifyCheck two_sided(const std::string& name, double value, double expected, double tolerance,
                      const std::string& note = "") {
  VerifyCheck c{name, value, expected, tolerance, std::abs(value - expected) <= tolerance, note};
  return c;
}

VerifyCheck upper_bounded(const std::string& name, double value, double bound,
                          const std::string& note = "") {
  VerifyCheck c{name, value, bound, 0.0, value <= bound, note};
  return c;
}

void finish(VerifyReport& report) {
  report.passed = true;
  for (const VerifyCheck& c : report.checks) report.passed = report.passed && c.pass;
}

std::vector<double> uniform_grid(double lo, double hi, int cells) {
  std::vector<double> g(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) {
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / cells;
  }
  return g;
}

}  // namespace

VerifyReport verify_conversions(const ExperimentConfig& config) {
  VerifyReport report;
  report.suite = "conversions";
  const NoiseSchedule sched = config.schedule();
  const Parameterization kinds[] = {Parameterization::score, Parameterization::epsilon,
                                    Parameterization::sample, Parameterization::velocity};
  const int n_probes = 10000;
  const Eigen::Index dim = 2;
  RngStream stream = RngStream::from(derive_key(config.seed, 0xc0), 0);
  double max_err = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    const double t = 0.05 + 0.9 * stream.uniform();
    const Eigen::VectorXd x = 2.0 * stream.normal_vector(dim);
    const Eigen::VectorXd value = 2.0 * stream.normal_vector(dim);
    for (Parameterization from : kinds) {
      for (Parameterization to : kinds) {
        if (from == to) continue;
        const Eigen::VectorXd there = convert_value(from, to, value, t, x, sched);
        const Eigen::VectorXd back = convert_value(to, from, there, t, x, sched);
        max_err = std::max(max_err, (back - value).cwiseAbs().maxCoeff());
      }
    }
  }
  report.checks.push_back(upper_bounded("round-trip-max-abs-error", max_err, 1e-12,
                                        "12 directed pairs, 1e4 probes"));

  // Combining in score space then converting must match converting members
  // first and combining in epsilon space (linearity of the conversions).
  std::vector<ScoreField> members = config.member_fields(derive_key(config.seed, 0xce));
  std::vector<double> weights = config.composition.weights;
  if (weights.size() != members.size()) {
    weights.assign(members.size(), 1.0 / static_cast<double>(members.size()));
  }
  double max_mix_err = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double t = 0.05 + 0.9 * stream.uniform();
    const Eigen::VectorXd x = 2.0 * stream.normal_vector(members[0].dim);
    const Eigen::VectorXd s_mix = convex_compose(members, weights, t, x);
    const Eigen::VectorXd eps_of_mix =
        convert_value(Parameterization::score, Parameterization::epsilon, s_mix, t, x, sched);
    Eigen::VectorXd eps_mix = Eigen::VectorXd::Zero(x.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      eps_mix += weights[k] * convert_value(Parameterization::score, Parameterization::epsilon,
                                            members[k](t, x), t, x, sched);
    }
    max_mix_err = std::max(max_mix_err, (eps_of_mix - eps_mix).cwiseAbs().maxCoeff());
  }
  report.checks.push_back(upper_bounded("composition-order-equivalence", max_mix_err, 1e-12,
                                        "score-space vs epsilon-space convex combine"));
  finish(report);
  return report;
}

VerifyReport verify_prop1(const ExperimentConfig& config) {
  VerifyReport report;
  report.suite = "prop1";
  const NoiseSchedule sched = config.schedule();
  const EstimatorPairSpec pair = config.pair_spec();
  const double t = config.theory.prop1_t;
  const Eigen::VectorXd& x = config.theory.prop1_x;
  const int n_mc = config.theory.prop1_n_mc;

  MSECrossCheck cross;
  const MSEQuadratic quad =
      analytic_mse(pair, sched, t, x, n_mc, derive_key(config.seed, 0x11), &cross);

  const double wc = std::clamp(quad.w_star, 0.0, 1.0);
  const double min_endpoint = std::min(quad.q(0.0), quad.q(1.0));
  report.checks.push_back(upper_bounded("optimum-not-above-endpoints", quad.q(wc) - min_endpoint,
                                        1e-12, "Q(w*) - min(Q(0), Q(1))"));

  const MSECurve curve =
      empirical_mse_curve(pair, sched, t, x, uniform_grid(0.0, 1.0, 1000), n_mc,
                          derive_key(config.seed, 0x12), config.workers);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < curve.q.size(); ++i) {
    if (curve.q[i] < curve.q[arg]) arg = i;
  }
  report.checks.push_back(
      two_sided("empirical-argmin-w", curve.w[arg], wc, 0.02, "0.001 grid, CRN draws"));

  const double rel = 0.02;
  report.checks.push_back(two_sided("mc-coefficient-A", cross.a_mc, quad.A,
                                    std::max(5.0 * cross.a_se, rel * std::abs(quad.A))));
  report.checks.push_back(two_sided("mc-coefficient-B", cross.b_mc, quad.B,
                                    std::max(5.0 * cross.b_se, rel * std::abs(quad.B))));
  report.checks.push_back(two_sided("mc-coefficient-C", cross.c_mc, quad.C,
                                    std::max(5.0 * cross.c_se, rel * std::abs(quad.C))));
  finish(report);
  return report;
}

VerifyReport verify_gronwall(const ExperimentConfig& config) {
  VerifyReport report;
  report.suite = "gronwall";
  const NoiseSchedule sched = config.schedule();
  const EstimatorSpec estimator = config.estimator_spec(config.theory.gronwall_estimator);
  const OdeDynamics dynamics = reverse_ode(sched);
  const int workers = config.workers;

  const GronwallCertificate cert =
      gronwall_certificate(estimator.base, estimator, sched, dynamics, config.theory.n_steps,
                           config.theory.n_pairs, derive_key(config.seed, 0x21), workers);
  report.checks.push_back(upper_bounded("pathwise-bound-dominates-max", cert.max_measured,
                                        cert.pathwise_bound,
                                        "max terminal error over " +
                                            std::to_string(cert.measured.size()) + " pairs"));
  report.checks.push_back(upper_bounded("expected-bound-dominates-mean", cert.mean_measured,
                                        cert.expected_bound));

  EstimatorSpec control = estimator;
  control.bias = BiasSpec::none();
  control.noise = NoiseSpec::none();
  const GronwallCertificate zero =
      gronwall_certificate(control.base, control, sched, dynamics, config.theory.n_steps,
                           std::min(config.theory.n_pairs, 10), derive_key(config.seed, 0x22),
                           workers);
  report.checks.push_back(two_sided("kappa-zero-control", zero.pathwise_bound + zero.max_measured,
                                    0.0, 0.0, "bound and measured both exactly zero"));

  // Closed-form quadrature spot check: constant L~ = L_s = kappa = 1 on [0,1]
  // gives expected bound sqrt((e^2 - 1) / 2).
  const std::vector<double> grid = time_grid(std::max(config.theory.n_steps, 1000));
  const std::vector<double> ones(grid.size(), 1.0);
  const double spot = expected_bound_from_functions(grid, ones, ones, ones);
  report.checks.push_back(two_sided("constant-coefficient-spot-value", spot,
                                    std::sqrt((std::exp(2.0) - 1.0) / 2.0), 1e-3, "quadrature"));
  finish(report);
  return report;
}

VerifyReport verify_corollary(const ExperimentConfig& config) {
  VerifyReport report;
  report.suite = "corollary";
  const NoiseSchedule sched = config.schedule();
  const EstimatorPairSpec pair{config.estimator_spec(config.theory.corollary_first),
                               config.estimator_spec(config.theory.corollary_second), 0.0};
  const OdeDynamics dynamics = reverse_ode(sched);

  const CorollaryReport rep =
      corollary_check(pair, sched, uniform_grid(0.0, 1.0, 10), dynamics, config.theory.n_steps,
                      config.theory.n_pairs, derive_key(config.seed, 0x31), config.workers);

  VerifyCheck premise{"premise-holds-somewhere", rep.premise_holds_somewhere ? 1.0 : 0.0, 1.0,
                      0.0, rep.premise_holds_somewhere,
                      "some w beats both parents' integrated MSE"};
  report.checks.push_back(premise);
  VerifyCheck follows{"bounds-follow-premise", rep.bounds_follow_premise ? 1.0 : 0.0, 1.0, 0.0,
                      rep.bounds_follow_premise,
                      "certified bounds ordered with integrated MSE"};
  report.checks.push_back(follows);

  std::size_t mid = 0;
  for (std::size_t i = 1; i < rep.entries.size(); ++i) {
    if (std::abs(rep.entries[i].w - 0.5) < std::abs(rep.entries[mid].w - 0.5)) mid = i;
  }
  report.checks.push_back(upper_bounded("midpoint-measured-error",
                                        rep.entries[mid].measured_error, 1e-9,
                                        "opposing biases cancel at w = 0.5"));
  const double parent_min =
      std::min(rep.parent_first.measured_error, rep.parent_second.measured_error);
  VerifyCheck parents{"parents-measurably-off", parent_min, 0.05, 0.0, parent_min > 0.05,
                      "each parent's mean terminal error exceeds 0.05"};
  report.checks.push_back(parents);
  const double parent_bound =
      std::min(rep.parent_first.certified_bound, rep.parent_second.certified_bound);
  report.checks.push_back(upper_bounded("midpoint-bound-below-parents",
                                        rep.entries[mid].certified_bound, parent_bound));
  finish(report);
  return report;
}

VerifyReport run_verify_suite(const std::string& suite, const ExperimentConfig& config) {
  if (suite == "prop1") return verify_prop1(config);
  if (suite == "gronwall") return verify_gronwall(config);
  if (suite == "corollary") return verify_corollary(config);
  if (suite == "conversions") return verify_conversions(config);
  if (suite == "all") {
    VerifyReport all;
    all.suite = "all";
    for (const char* name : {"conversions", "prop1", "gronwall", "corollary"}) {
      VerifyReport part = run_verify_suite(name, config);
      for (VerifyCheck& c : part.checks) {
        c.name = part.suite + "/" + c.name;
        all.checks.push_back(std::move(c));
      }
    }
    finish(all);
    return all;
  }
  throw ConfigError("config: unknown verify suite '" + suite + "'");
}

std::string verify_report_json(const VerifyReport& report) {
  Json doc;
  doc["suite"] = report.suite;
  doc["passed"] = report.passed;
  Json checks = Json::array();
  for (const VerifyCheck& c : report.checks) {
    Json jc;
    jc["name"] = c.name;
    jc["value"] = c.value;
    jc["expected"] = c.expected;
    jc["tolerance"] = c.tolerance;
    jc["pass"] = c.pass;
    if (!c.note.empty()) jc["note"] = c.note;
    checks.push_back(std::move(jc));
  }
  doc["checks"] = std::move(checks);
  return doc.dump(2) + "\n";
}

namespace {

std::uint64_t parse_env_u64(const char* text, const char* name) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text, &end, 10);
  if (end == text || *end != '\0') {
    throw ConfigError(std::string("config: ") + name + " must be a nonnegative integer");
  }
  return static_cast<std::uint64_t>(v);
}

int parse_env_int(const char* text, const char* name) {
  char* end = nullptr;
  const long v = std::strtol(text, &end, 10);
  if (end == text || *end != '\0' || v < 0) {
    throw ConfigError(std::string("config: ") + name + " must be a nonnegative integer");
  }
  return static_cast<int>(v);
}

std::filesystem::path prepare_output_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("config: cannot create output directory '" + config.output_dir +
                      "': " + ec.message());
  }
  return dir;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<std::string>& argv, const ExperimentConfig& config,
                    const std::vector<std::string>& outputs) {
  Json doc;
  doc["version"] = kVersion;
  doc["schema_version"] = config.schema_version;
  doc["command"] = command;
  doc["argv"] = argv;
  doc["seed"] = config.seed;
  doc["workers"] = config.workers;
  doc["config_hash"] = config_hash(config);
  doc["outputs"] = outputs;
  doc["config"] = Json::parse(serialize_config(config));
  write_text_file((dir / "manifest.json").string(), doc.dump(2) + "\n");
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"composition workbench for analytic score fields"};
  app.name("gpc");
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 0;
  auto* config_opt = app.add_option("--config", config_path, "experiment config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  auto* out_opt = app.add_option("--out", out_dir, "output directory override");
  auto* workers_opt = app.add_option("--workers", workers, "worker thread count (0 = hardware)");

  std::string suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "run numerical certification suites");
  verify_cmd->add_option("suite", suite, "prop1|gronwall|corollary|conversions|all");

  int sample_n = 64;
  auto* sample_cmd = app.add_subcommand("sample", "generate reverse trajectories");
  sample_cmd->add_option("--n", sample_n, "number of trajectories")->check(CLI::NonNegativeNumber);

  double sweep_step = 0.0;
  int sweep_episodes = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "grid-search the composition weight");
  auto* step_opt = sweep_cmd->add_option("--grid-step", sweep_step, "weight grid step");
  auto* episodes_opt = sweep_cmd->add_option("--episodes", sweep_episodes, "episodes per cell");

  int bench_episodes = 0;
  auto* bench_cmd = app.add_subcommand("bench", "run the endpoint task once");
  auto* bench_episodes_opt = bench_cmd->add_option("--episodes", bench_episodes, "episode count");

  app.require_subcommand(1);

  {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }
  }

  ExperimentConfig config = config_opt->count() ? load_config(config_path) : default_config();
  if (const char* s = std::getenv("GPC_SEED")) config.seed = parse_env_u64(s, "GPC_SEED");
  if (const char* s = std::getenv("GPC_WORKERS")) config.workers = parse_env_int(s, "GPC_WORKERS");
  if (seed_opt->count()) config.seed = seed;
  if (workers_opt->count()) {
    if (workers < 0) throw ConfigError("config: --workers must be >= 0");
    config.workers = workers;
  }
  if (out_opt->count()) config.output_dir = out_dir;

  const std::filesystem::path dir = prepare_output_dir(config);
  const NoiseSchedule sched = config.schedule();

  if (app.got_subcommand(verify_cmd)) {
    const VerifyReport report = run_verify_suite(suite, config);
    const std::string json = verify_report_json(report);
    const std::string filename = "verify_" + suite + ".json";
    write_text_file((dir / filename).string(), json);
    write_manifest(dir, "verify", args, config, {filename});
    std::cout << json;
    return report.passed ? 0 : 1;
  }

  if (app.got_subcommand(sample_cmd)) {
    const ScoreField field = config.composed_field(derive_key(config.seed, 0xf1e1d));
    const Eigen::MatrixXd endpoints = sample_endpoints(field, sched, config.solver.name,
                                                       config.solver.steps, sample_n, config.seed,
                                                       config.workers);
    const std::vector<Trajectory> trajs =
        sample(field, sched, config.solver.name, config.solver.steps, sample_n, config.seed);
    write_endpoints_csv((dir / "endpoints.csv").string(), endpoints);
    write_trajectories_jsonl((dir / "trajectories.jsonl").string(), trajs);
    write_manifest(dir, "sample", args, config, {"endpoints.csv", "trajectories.jsonl"});
    std::cout << "sample: wrote " << sample_n << " trajectories to " << dir.string() << "\n";
    return 0;
  }

  if (app.got_subcommand(sweep_cmd)) {
    if (config.composition.op != CompositionOperator::convex ||
        config.composition.members.size() != 2) {
      throw ConfigError(
          "config: sweep requires a convex composition with exactly two members");
    }
    const double grid_step = step_opt->count() ? sweep_step : config.sweep.grid_step;
    const int episodes = episodes_opt->count() ? sweep_episodes : config.sweep.episodes;
    const BenchTask task = config.bench_task();
    const std::vector<ScoreField> members =
        config.member_fields(derive_key(config.seed, 0xf1e1d));
    const CellEvaluator evaluator = [&](double w, int n_episodes, std::uint64_t cell_seed) {
      CompositionSpec cs;
      cs.op = CompositionOperator::convex;
      cs.weights = {w, 1.0 - w};
      const ScoreField field = compose_field(cs, members);
      return bench_rewards(task, field, sched, config.solver.name, n_episodes, cell_seed, 1);
    };
    const GridSearchResult result =
        grid_search(evaluator, grid_step, episodes, config.seed, config.workers);
    sweep_report(result.pool, (dir / "pool.csv").string(), (dir / "sweep.svg").string());

    Json pool;
    pool["w_star"] = result.w_star;
    pool["best_reward"] = result.best_reward;
    Json cells = Json::array();
    for (const RewardCell& cell : result.pool.cells) {
      Json jc;
      jc["w"] = cell.w;
      jc["episodes"] = cell.episodes;
      jc["successes"] = cell.successes;
      jc["mean_reward"] = cell.mean_reward;
      jc["se"] = cell.se;
      jc["valid"] = cell.valid;
      cells.push_back(std::move(jc));
    }
    pool["cells"] = std::move(cells);
    write_text_file((dir / "pool.json").string(), pool.dump(2) + "\n");
    write_manifest(dir, "sweep", args, config, {"pool.csv", "pool.json", "sweep.svg"});
    std::cout << "sweep: w* = " << format_double(result.w_star)
              << ", mean reward = " << format_double(result.best_reward) << "\n";
    return 0;
  }

  if (app.got_subcommand(bench_cmd)) {
    const int episodes = bench_episodes_opt->count() ? bench_episodes : config.sweep.episodes;
    const BenchTask task = config.bench_task();
    const ScoreField field = config.composed_field(derive_key(config.seed, 0xf1e1d));
    const BenchResult result =
        run_bench(task, field, sched, config.solver.name, episodes, config.seed, config.workers);
    std::ostringstream csv;
    csv << "episodes,successes,success_rate,metric,metric_value\n";
    csv << result.episodes << ',' << result.successes << ','
        << format_double(result.success_rate) << ',' << to_string(task.metric) << ','
        << format_double(result.metric_value) << '\n';
    write_text_file((dir / "bench.csv").string(), csv.str());
    write_endpoints_csv((dir / "bench_endpoints.csv").string(), result.endpoints);
    write_manifest(dir, "bench", args, config, {"bench.csv", "bench_endpoints.csv"});
    std::cout << "bench: success rate " << format_double(result.success_rate) << " over "
              << result.episodes << " episodes\n";
    return 0;
  }

  throw ConfigError("config: no subcommand selected");
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  try {
    return run_cli(args);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args);
}

}  // namespace gpc
