// hjbnn command-line tool: dataset generation, single trainings, benchmark
// experiments, gradient checks and the quartic basin sweep.
//
// Exit codes: 0 ok, 1 check failed, 2 bad config or arguments, 3 I/O, 4 numeric.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hjbnn/critic.hpp"
#include "hjbnn/error.hpp"
#include "hjbnn/harness.hpp"
#include "hjbnn/json_io.hpp"

using namespace hjbnn;
namespace fs = std::filesystem;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct Common {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string format = "json";
  std::size_t jobs = 1;
  bool quiet = false;
};

void note(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << msg << '\n';
}

// Writes to --out, or to stdout when no path was given.
void deliver(const Common& c, const std::string& text) {
  if (c.out_path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(c.out_path, text);
    note(c, "wrote " + c.out_path);
  }
}

Json load_config(const std::string& path) {
  if (path.empty()) throw ParameterError("--config is required");
  if (!fs::exists(path)) throw ParameterError("config file not found: " + path);
  return read_json_file(path);
}

// Relative dataset paths are taken relative to the config file.
void anchor_dataset_path(DatasetSpec& spec, const std::string& config_path) {
  if (spec.name != "csv" || spec.path.empty()) return;
  const fs::path p(spec.path);
  if (p.is_relative()) spec.path = (fs::path(config_path).parent_path() / p).lexically_normal().string();
}

std::string matrix_rows_csv(const Dataset& d) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < d.input_width(); ++i) out << (i ? "," : "") << "x" << i;
  for (std::size_t o = 0; o < d.output_width(); ++o) out << ",t" << o;
  out << '\n';
  for (std::size_t p = 0; p < d.pattern_count(); ++p) {
    for (std::size_t i = 0; i < d.input_width(); ++i) out << (i ? "," : "") << d.inputs(p, i);
    for (std::size_t o = 0; o < d.output_width(); ++o) out << ',' << d.targets(p, o);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string name;
  std::size_t bits = 8;
  std::size_t n = 100;
  bool isotropic = false;
};

int cmd_gen_data(const Common& c, const GenDataArgs& a) {
  DatasetSpec spec;
  spec.name = a.name;
  spec.bits = a.bits;
  spec.n = a.n;
  spec.seed = c.seed.value_or(0);
  spec.gabor_isotropic = a.isotropic;
  if (spec.name == "csv") throw ParameterError("gen-data: csv is a loader, not a generator");
  const Dataset d = spec.build();
  note(c, d.name + ": " + std::to_string(d.pattern_count()) + " patterns");
  deliver(c, parse_report_format(c.format) == ReportFormat::Csv ? matrix_rows_csv(d)
                                                                 : Json(d).dump(2) + "\n");
  return 0;
}

// Single-run config: {dataset_spec, arch, trainer, seed?, init_half_range?, network?}.
struct RunConfig {
  DatasetSpec dataset_spec;
  Architecture arch;
  TrainerConfig trainer;
  std::uint64_t seed = 0;
  double init_half_range = 1.0;
  std::optional<Network> network;
};

RunConfig parse_run_config(const Json& j, const Common& c) {
  json_detail::require_known_keys(
      j, {"dataset_spec", "arch", "trainer", "seed", "init_half_range", "network"}, "run config");
  for (const char* key : {"dataset_spec", "arch", "trainer"})
    if (!j.contains(key)) throw ParseError(std::string("run config: missing field '") + key + "'");
  RunConfig rc;
  rc.dataset_spec = j["dataset_spec"].get<DatasetSpec>();
  rc.arch = j["arch"].get<Architecture>();
  rc.trainer = j["trainer"].get<TrainerConfig>();
  if (j.contains("seed")) rc.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("init_half_range")) rc.init_half_range = j["init_half_range"].get<double>();
  if (j.contains("network")) {
    rc.network = j["network"].get<Network>();
    if (!(rc.network->arch == rc.arch))
      throw ParameterError("run config: network does not match arch " + rc.arch.to_string());
  }
  if (c.seed) rc.seed = *c.seed;
  anchor_dataset_path(rc.dataset_spec, c.config_path);
  rc.arch.validate();
  rc.trainer.validate();
  return rc;
}

Json run_config_json(const RunConfig& rc) {
  Json j{{"dataset_spec", rc.dataset_spec},
         {"arch", rc.arch},
         {"trainer", rc.trainer.resolved()},
         {"seed", rc.seed},
         {"init_half_range", rc.init_half_range}};
  return j;
}

std::string curve_csv(const TrialResult& r) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,rms\n";
  for (std::size_t k = 0; k < r.rms_history.size(); ++k) out << k + 1 << ',' << r.rms_history[k] << '\n';
  return out.str();
}

int run_single(const Common& c, bool with_critic) {
  RunConfig rc = parse_run_config(load_config(c.config_path), c);
  if (with_critic && !rc.trainer.critic) rc.trainer.critic = CriticConfig{};
  const Dataset data = rc.dataset_spec.build();
  Network net = rc.network ? *rc.network : init_weights(rc.arch, rc.seed, rc.init_half_range);

  Json out{{"config", run_config_json(rc)},
           {"dataset_name", data.name},
           {"init_hash", weight_hash(net)}};
  TrialResult result;
  if (rc.trainer.critic) {
    CriticSetup setup = make_critic_setup(net, rc.trainer, rc.seed);
    SnacResult s = snac_train(setup, data, rc.trainer);
    result = std::move(s.trial);
    net = setup.main_net;
    Json res = Json::array();
    for (double v : s.residual_history) res.push_back(json_detail::number(v));
    out["residual_history"] = res;
    out["critic_network"] = setup.critic_net;
  } else {
    result = train(net, data, rc.trainer);
  }
  out["result"] = result;
  out["network"] = net;
  if (data.test_inputs && net.arch.n_output == 1)
    out["misclassification_rate"] = misclassification_rate(net, *data.test_inputs, *data.test_targets);

  note(c, rc.trainer.resolved().label + ": " + (result.converged ? "converged" : "not converged") +
              " after " + std::to_string(result.epochs_used) + " epochs, rms " +
              std::to_string(result.final_rms) +
              (result.failure.empty() ? "" : " (" + result.failure + ")"));
  deliver(c, parse_report_format(c.format) == ReportFormat::Csv ? curve_csv(result)
                                                                 : out.dump(2) + "\n");
  return 0;
}

int cmd_bench(const Common& c) {
  Experiment exp = load_config(c.config_path).get<Experiment>();
  if (c.seed) exp.base_seed = *c.seed;
  if (c.trials) exp.n_trials = *c.trials;
  anchor_dataset_path(exp.dataset_spec, c.config_path);
  const ReportFormat format = parse_report_format(c.format);

  RunOptions options;
  options.jobs = c.jobs;
  if (!c.quiet) options.progress = [](const std::string& m) { std::cerr << m << '\n'; };
  const SuccessReport report = run_experiment(exp, options);

  for (const auto& a : report.algorithms) {
    std::ostringstream line;
    line << a.label << ": success " << a.success_score * 100.0 << "%";
    if (a.avg_epochs) line << ", avg epochs " << *a.avg_epochs;
    if (a.misclassification_rate) line << ", misclassification " << *a.misclassification_rate * 100.0 << "%";
    note(c, line.str());
  }
  if (!c.out_path.empty()) {
    emit_report(report, c.out_path, format);
    note(c, "wrote " + c.out_path);
  } else {
    std::cout << (format == ReportFormat::Json ? Json(report).dump(2) + "\n" : summary_csv(report));
  }
  return 0;
}

struct CheckGradArgs {
  std::string arch = "3-4-1";
  std::size_t patterns = 10;
  bool corrupt = false;
};

int cmd_check_grad(const Common& c, const CheckGradArgs& a) {
  const Architecture arch = parse_architecture(a.arch);
  const std::uint64_t seed = c.seed.value_or(0);
  const Network net = init_weights(arch, seed);
  std::mt19937_64 gen(seed + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t p = 0; p < a.patterns; ++p) {
    Vector x(arch.n_input);
    for (std::size_t i = 0; i + 1 < arch.n_input; ++i) x[i] = unit(gen);
    x[arch.n_input - 1] = 1.0;
    Matrix analytic = jacobian(net, x);
    if (a.corrupt) analytic(0, analytic.cols() - 1) += 1e-3;
    worst = std::max(worst, max_abs_diff(analytic, finite_difference_jacobian(net, x)));
  }
  const bool ok = worst <= 1e-5;
  char line[160];
  std::snprintf(line, sizeof line, "check-grad %s seed=%llu patterns=%zu max_abs_diff=%.3e %s\n",
                arch.to_string().c_str(), static_cast<unsigned long long>(seed), a.patterns, worst,
                ok ? "PASS" : "FAIL");
  std::cout << line;
  return ok ? 0 : kExitCheckFailed;
}

struct BasinArgs {
  std::string rule = "gradient";
  double eta = 0.1;
  double r = 1.0;
  double dt = 1.0;
  std::size_t max_steps = 1'000'000;
  double lo = -0.98;
  double hi = -0.02;
  std::size_t n = 50;
};

int cmd_basin(const Common& c, const BasinArgs& a) {
  if (a.n < 1) throw ParameterError("basin: --n must be at least 1");
  BasinSettings s;
  s.rule = parse_scalar_rule(a.rule);
  s.eta = a.eta;
  s.r = a.r;
  s.dt = a.dt;
  s.max_steps = a.max_steps;
  std::vector<double> grid(a.n);
  for (std::size_t i = 0; i < a.n; ++i)
    grid[i] = a.n == 1 ? a.lo : a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.n - 1);
  const auto points = basin_experiment(s, grid);

  std::ostringstream out;
  out.precision(12);
  if (parse_report_format(c.format) == ReportFormat::Csv) {
    out << "w0,terminal,steps,stationary\n";
    for (const auto& p : points)
      out << p.w0 << ',' << p.terminal << ',' << p.steps << ',' << (p.stationary ? 1 : 0) << '\n';
  } else {
    Json pts = Json::array();
    for (const auto& p : points)
      pts.push_back({{"w0", p.w0}, {"terminal", json_detail::number(p.terminal)},
                     {"steps", p.steps}, {"stationary", p.stationary}});
    Json j{{"settings",
            {{"rule", to_string(s.rule)}, {"eta", s.eta}, {"r", s.r}, {"dt", s.dt},
             {"jac_tolerance", s.jac_tolerance}, {"max_steps", s.max_steps}}},
           {"points", pts}};
    out << j.dump(2) << '\n';
  }
  deliver(c, out.str());
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Numeric:
    case ErrorKind::Divergence: return kExitNumeric;
    default: return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train two-layer sigmoid networks with HJB-derived and classical update laws"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool config) {
    if (config) sub->add_option("--config", c.config_path, "JSON config file")->required();
    sub->add_option("--out", c.out_path, "Output file (stdout when omitted)");
    sub->add_option("--seed", c.seed, "Seed override");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--quiet", c.quiet, "Only data on stdout, no diagnostics");
  };

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a benchmark dataset");
  gen_cmd->add_option("name", gen.name, "modulo2, xor, parity or gabor")->required();
  gen_cmd->add_option("--bits", gen.bits, "Parity width");
  gen_cmd->add_option("--n", gen.n, "Gabor sample count");
  gen_cmd->add_flag("--isotropic", gen.isotropic, "Gabor with x1^2 + x2^2 envelope");
  add_common(gen_cmd, false);

  auto* train_cmd = app.add_subcommand("train", "Train one network from a run config");
  add_common(train_cmd, true);

  auto* snac_cmd = app.add_subcommand("snac", "Train one network with an adaptive critic");
  add_common(snac_cmd, true);

  auto* bench_cmd = app.add_subcommand("bench", "Run a multi-trial experiment");
  add_common(bench_cmd, true);
  bench_cmd->add_option("--trials", c.trials, "Trial count override");
  bench_cmd->add_option("--jobs", c.jobs, "Worker threads across trials")->check(CLI::PositiveNumber);

  CheckGradArgs grad;
  auto* grad_cmd = app.add_subcommand("check-grad", "Compare analytic and finite-difference Jacobians");
  grad_cmd->add_option("--arch", grad.arch, "Architecture, e.g. 3-4-1");
  grad_cmd->add_option("--patterns", grad.patterns, "Random patterns to check");
  grad_cmd->add_flag("--corrupt", grad.corrupt, "Perturb the analytic Jacobian (negative control)");
  grad_cmd->add_option("--seed", c.seed, "Seed");

  BasinArgs basin;
  auto* basin_cmd = app.add_subcommand("basin", "Terminal points of scalar updates on the quartic toy error");
  basin_cmd->add_option("--rule", basin.rule, "gradient or hjb");
  basin_cmd->add_option("--eta", basin.eta, "Gradient learning rate");
  basin_cmd->add_option("--r", basin.r, "HJB control weight");
  basin_cmd->add_option("--dt", basin.dt, "Euler step");
  basin_cmd->add_option("--max-steps", basin.max_steps, "Step cap per start");
  basin_cmd->add_option("--lo", basin.lo, "First start");
  basin_cmd->add_option("--hi", basin.hi, "Last start");
  basin_cmd->add_option("--n", basin.n, "Number of starts");
  add_common(basin_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(c, gen);
    if (train_cmd->parsed()) return run_single(c, false);
    if (snac_cmd->parsed()) return run_single(c, true);
    if (bench_cmd->parsed()) return cmd_bench(c);
    if (grad_cmd->parsed()) return cmd_check_grad(c, grad);
    if (basin_cmd->parsed()) return cmd_basin(c, basin);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}
