#include "hjbnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "hjbnn/critic.hpp"
#include "hjbnn/error.hpp"
#include "hjbnn/json_io.hpp"

namespace hjbnn {

Dataset DatasetSpec::build() const {
  if (name == "modulo2") return gen_modulo2();
  if (name == "xor") return gen_xor();
  if (name == "parity") return gen_parity(bits);
  if (name == "gabor") return gen_gabor(n, seed, gabor_isotropic);
  if (name == "csv") {
    if (path.empty()) throw ParameterError("csv dataset needs a path");
    CsvOptions o;
    o.n_inputs = n_inputs;
    o.target_column = target_column;
    o.encode_targets = encode_targets;
    o.split_train = split_train;
    o.seed = seed;
    o.skip_columns = skip_columns;
    o.name = label.empty() ? std::filesystem::path(path).stem().string() : label;
    return load_csv(path, o);
  }
  throw ParameterError("unknown dataset '" + name + "'");
}

void Experiment::validate() const {
  arch.validate();
  if (n_trials < 1) throw ParameterError("experiment: n_trials must be at least 1");
  if (!(init_half_range > 0.0)) throw ParameterError("experiment: init_half_range must be positive");
  if (trainer_configs.empty()) throw ParameterError("experiment: no trainer configs");
  for (const auto& c : trainer_configs) {
    c.validate();
    if (c.algorithm == Algorithm::HJB_SINGLE && arch.n_output != 1)
      throw ParameterError("experiment: HJB_SINGLE needs a single-output architecture");
    if (c.critic) c.critic->resolve(arch);
  }
}

const AlgorithmReport& SuccessReport::find(const std::string& label) const {
  for (const auto& a : algorithms)
    if (a.label == label) return a;
  throw ParameterError("report has no algorithm labelled '" + label + "'");
}

double misclassification_rate(const Network& net, const Matrix& inputs, const Matrix& targets,
                              double threshold) {
  if (inputs.rows() == 0) throw ParameterError("misclassification_rate: empty test set");
  if (net.arch.n_output != 1 || targets.cols() != 1)
    throw DimensionError("misclassification_rate: needs a single-output network");
  if (inputs.rows() != targets.rows() || inputs.cols() != net.arch.n_input)
    throw DimensionError("misclassification_rate: test set does not fit the network");
  std::vector<double> hidden(net.arch.n_hidden), output(1);
  std::size_t wrong = 0;
  for (std::size_t p = 0; p < inputs.rows(); ++p) {
    forward_into(net, inputs.row(p), hidden, output);
    const bool predicted_high = output[0] >= threshold;
    const bool actual_high = targets(p, 0) >= 0.5;
    wrong += predicted_high != actual_high ? 1 : 0;
  }
  return static_cast<double>(wrong) / static_cast<double>(inputs.rows());
}

namespace {

double rms_at_epoch(const TrialResult& r, std::size_t epoch) {
  if (epoch >= 1 && epoch <= r.rms_history.size()) return r.rms_history[epoch - 1];
  return r.final_rms;
}

TrialRecord run_one(const Network& initial, const Dataset& data, const TrainerConfig& config,
                    std::size_t trial, std::uint64_t seed) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = seed;
  rec.init_hash = weight_hash(initial);
  Network net = initial;
  try {
    if (config.critic) {
      CriticSetup setup = make_critic_setup(initial, config, seed);
      SnacResult s = snac_train(setup, data, config);
      rec.result = std::move(s.trial);
      rec.residual_history = std::move(s.residual_history);
      net = setup.main_net;
    } else {
      rec.result = train(net, data, config);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parameter || e.kind() == ErrorKind::Dimension) throw;
    rec.result.converged = false;
    rec.result.failure = e.what();
  }
  if (data.test_inputs && net.arch.n_output == 1 && rec.result.failure.empty())
    rec.misclassification_rate = misclassification_rate(net, *data.test_inputs, *data.test_targets);
  return rec;
}

}  // namespace

AlgorithmReport summarize(const TrainerConfig& config, std::vector<TrialRecord> trials,
                          std::span<const std::size_t> checkpoints) {
  AlgorithmReport a;
  a.config = config.resolved();
  a.label = a.config.label;
  a.trials = std::move(trials);
  const double n = static_cast<double>(a.trials.size());
  if (a.trials.empty()) return a;

  std::vector<double> epochs;
  double wall = 0.0, final_rms = 0.0, miscl = 0.0;
  std::size_t miscl_count = 0;
  for (const auto& t : a.trials) {
    if (t.result.converged) epochs.push_back(static_cast<double>(t.result.epochs_used));
    wall += t.result.wall_time;
    final_rms += t.result.final_rms;
    if (t.misclassification_rate) {
      miscl += *t.misclassification_rate;
      ++miscl_count;
    }
  }
  a.converged_trials = epochs.size();
  a.success_score = static_cast<double>(epochs.size()) / n;
  if (!epochs.empty()) {
    double sum = 0.0;
    for (double e : epochs) sum += e;
    a.avg_epochs = sum / static_cast<double>(epochs.size());
    std::sort(epochs.begin(), epochs.end());
    const std::size_t m = epochs.size();
    a.median_epochs = m % 2 ? epochs[m / 2] : 0.5 * (epochs[m / 2 - 1] + epochs[m / 2]);
  }
  a.avg_wall_time = wall / n;
  a.mean_final_rms = final_rms / n;
  if (miscl_count > 0) a.misclassification_rate = miscl / static_cast<double>(miscl_count);
  for (std::size_t cp : checkpoints) {
    double s = 0.0;
    for (const auto& t : a.trials) s += rms_at_epoch(t.result, cp);
    a.rms_at_checkpoints[cp] = s / n;
  }
  return a;
}

SuccessReport run_experiment(const Experiment& exp, const RunOptions& options) {
  return run_experiment(exp, exp.dataset_spec.build(), options);
}

SuccessReport run_experiment(const Experiment& exp, const Dataset& data,
                             const RunOptions& options) {
  exp.validate();
  data.validate();
  if (data.input_width() != exp.arch.n_input || data.output_width() != exp.arch.n_output)
    throw DimensionError("experiment: dataset '" + data.name + "' does not fit architecture " +
                         exp.arch.to_string());

  const std::size_t n_cfg = exp.trainer_configs.size();
  // results[c][i] = trial i under config c, placed by index for deterministic order.
  std::vector<std::vector<TrialRecord>> results(n_cfg, std::vector<TrialRecord>(exp.n_trials));
  std::mutex progress_mutex;

  auto run_trial = [&](std::size_t i) {
    const std::uint64_t seed = exp.base_seed + i;
    const Network initial = init_weights(exp.arch, seed, exp.init_half_range);
    for (std::size_t c = 0; c < n_cfg; ++c) {
      results[c][i] = run_one(initial, data, exp.trainer_configs[c], i, seed);
      if (options.progress) {
        const auto& r = results[c][i].result;
        std::ostringstream msg;
        msg << exp.trainer_configs[c].resolved().label << " trial " << i << ": "
            << (r.converged ? "converged" : "not converged") << " after " << r.epochs_used
            << " epochs, rms " << r.final_rms;
        std::lock_guard lock(progress_mutex);
        options.progress(msg.str());
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, exp.n_trials));
  if (jobs == 1) {
    for (std::size_t i = 0; i < exp.n_trials; ++i) run_trial(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < exp.n_trials; i = next++) {
          try {
            run_trial(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  SuccessReport report;
  report.experiment = exp;
  report.dataset_name = data.name;
  for (std::size_t c = 0; c < n_cfg; ++c)
    report.algorithms.push_back(
        summarize(exp.trainer_configs[c], std::move(results[c]), exp.checkpoints));
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  throw ParseError("unknown report format '" + s + "' (expected json or csv)");
}

namespace {

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string params_of(const TrainerConfig& c) {
  std::ostringstream o;
  o << "mode=" << to_string(c.mode) << ";eta=" << c.eta << ";mu=" << c.mu << ";beta=" << c.beta
    << ";r=" << c.r << ";eps=" << c.eps << ";stop_rms=" << c.stop_rms
    << ";max_epochs=" << c.resolved_max_epochs() << ";euler_dt=" << c.euler_dt;
  return o.str();
}

}  // namespace

std::string summary_csv(const SuccessReport& report) {
  std::ostringstream out;
  out << "name,params,success_score,avg_epochs,avg_wall_time,misclassification_rate\n";
  for (const auto& a : report.algorithms) {
    out << csv_quote(a.label) << ',' << csv_quote(params_of(a.config)) << ','
        << csv_number(a.success_score) << ','
        << (a.avg_epochs ? csv_number(*a.avg_epochs) : std::string()) << ','
        << csv_number(a.avg_wall_time) << ','
        << (a.misclassification_rate ? csv_number(*a.misclassification_rate) : std::string())
        << '\n';
  }
  return out.str();
}

std::string curves_csv(const SuccessReport& report) {
  std::ostringstream out;
  out << "algorithm,trial,epoch,rms\n";
  for (const auto& a : report.algorithms)
    for (const auto& t : a.trials)
      for (std::size_t k = 0; k < t.result.rms_history.size(); ++k)
        out << csv_quote(a.label) << ',' << t.trial << ',' << (k + 1) << ','
            << csv_number(t.result.rms_history[k]) << '\n';
  return out.str();
}

void emit_report(const SuccessReport& report, const std::string& path, ReportFormat format) {
  if (format == ReportFormat::Json) {
    write_text_file(path, Json(report).dump(2) + "\n");
    return;
  }
  write_text_file(path, summary_csv(report));
  const std::filesystem::path p(path);
  const auto curves = p.parent_path() / (p.stem().string() + "_curves.csv");
  write_text_file(curves.string(), curves_csv(report));
}

// ---------------------------------------------------------------------------
// Quartic basins

ScalarRule parse_scalar_rule(const std::string& s) {
  if (s == "gradient" || s == "bp") return ScalarRule::Gradient;
  if (s == "hjb" || s == "hjb-single" || s == "hjb_single") return ScalarRule::HjbSingle;
  throw ParseError("unknown scalar rule '" + s + "' (expected gradient or hjb)");
}

std::string to_string(ScalarRule rule) {
  return rule == ScalarRule::Gradient ? "gradient" : "hjb-single";
}

std::vector<BasinPoint> basin_experiment(const BasinSettings& s, std::span<const double> w0_grid) {
  if (!(s.dt > 0.0)) throw ParameterError("basin_experiment: dt must be positive");
  if (s.rule == ScalarRule::HjbSingle && !(s.r > 0.0))
    throw ParameterError("basin_experiment: r must be positive");
  std::vector<BasinPoint> out;
  out.reserve(w0_grid.size());
  for (double w0 : w0_grid) {
    BasinPoint pt{w0, w0, 0, false};
    double w = w0;
    while (pt.steps < s.max_steps) {
      const double j = toy1d_jac(w);
      if (std::abs(j) < s.jac_tolerance) {
        pt.stationary = true;
        break;
      }
      const double e = toy1d_error(w);
      double u = 0.0;
      if (s.rule == ScalarRule::Gradient) {
        u = s.eta * j * e;
      } else {
        // Lyapunov branch dV*/de = +e √r/|J|, i.e. u = J e / √(r J²).
        u = j * e / std::sqrt(s.r * j * j);
      }
      w += s.dt * u;
      ++pt.steps;
      if (!std::isfinite(w)) break;
    }
    pt.terminal = w;
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {
using json_detail::number;
using json_detail::read_number;
using json_detail::require_known_keys;

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

std::optional<double> read_optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return read_number(j[key]);
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

void to_json(Json& j, const DatasetSpec& s) {
  j = Json{{"name", s.name}};
  if (s.name == "parity") j["bits"] = s.bits;
  if (s.name == "gabor") {
    j["n"] = s.n;
    j["seed"] = s.seed;
    j["gabor_isotropic"] = s.gabor_isotropic;
  }
  if (s.name == "csv") {
    j["path"] = s.path;
    j["n_inputs"] = s.n_inputs;
    j["target_column"] = s.target_column;
    j["skip_columns"] = s.skip_columns;
    j["encode_targets"] = s.encode_targets;
    j["split_train"] = s.split_train;
    j["seed"] = s.seed;
    j["label"] = s.label;
  }
}

void from_json(const Json& j, DatasetSpec& s) {
  require_known_keys(j,
                     {"name", "bits", "n", "seed", "gabor_isotropic", "path", "n_inputs",
                      "target_column", "skip_columns", "encode_targets", "split_train", "label"},
                     "dataset_spec");
  s = DatasetSpec{};
  if (!j.contains("name")) throw ParseError("dataset_spec: missing field 'name'");
  s.name = get_or<std::string>(j, "name", s.name);
  s.bits = get_or(j, "bits", s.bits);
  s.n = get_or(j, "n", s.n);
  s.seed = get_or(j, "seed", s.seed);
  s.gabor_isotropic = get_or(j, "gabor_isotropic", s.gabor_isotropic);
  s.path = get_or(j, "path", s.path);
  s.n_inputs = get_or(j, "n_inputs", s.n_inputs);
  s.target_column = get_or(j, "target_column", s.target_column);
  s.skip_columns = get_or(j, "skip_columns", s.skip_columns);
  s.encode_targets = get_or(j, "encode_targets", s.encode_targets);
  s.split_train = get_or(j, "split_train", s.split_train);
  s.label = get_or(j, "label", s.label);
}

void to_json(Json& j, const Experiment& e) {
  j = Json{{"dataset_spec", e.dataset_spec},       {"arch", e.arch},
           {"trainer_configs", e.trainer_configs}, {"n_trials", e.n_trials},
           {"base_seed", e.base_seed},             {"init_half_range", e.init_half_range},
           {"checkpoints", e.checkpoints}};
}

void from_json(const Json& j, Experiment& e) {
  require_known_keys(j,
                     {"dataset_spec", "arch", "trainer_configs", "n_trials", "base_seed",
                      "init_half_range", "checkpoints"},
                     "experiment");
  e = Experiment{};
  for (const char* key : {"dataset_spec", "arch", "trainer_configs"})
    if (!j.contains(key)) throw ParseError(std::string("experiment: missing field '") + key + "'");
  e.dataset_spec = j["dataset_spec"].get<DatasetSpec>();
  e.arch = j["arch"].get<Architecture>();
  if (!j["trainer_configs"].is_array()) throw ParseError("experiment: trainer_configs must be a list");
  for (const auto& c : j["trainer_configs"]) e.trainer_configs.push_back(c.get<TrainerConfig>());
  e.n_trials = get_or(j, "n_trials", e.n_trials);
  e.base_seed = get_or(j, "base_seed", e.base_seed);
  e.init_half_range = get_or(j, "init_half_range", e.init_half_range);
  e.checkpoints = get_or(j, "checkpoints", e.checkpoints);
}

void to_json(Json& j, const TrialRecord& t) {
  j = Json{{"trial", t.trial},
           {"seed", t.seed},
           {"init_hash", t.init_hash},
           {"result", t.result},
           {"misclassification_rate", optional_number(t.misclassification_rate)}};
  if (!t.residual_history.empty()) {
    Json r = Json::array();
    for (double v : t.residual_history) r.push_back(number(v));
    j["residual_history"] = r;
  }
}

void from_json(const Json& j, TrialRecord& t) {
  require_known_keys(j,
                     {"trial", "seed", "init_hash", "result", "misclassification_rate",
                      "residual_history"},
                     "trial record");
  t = TrialRecord{};
  t.trial = get_or(j, "trial", t.trial);
  t.seed = get_or(j, "seed", t.seed);
  t.init_hash = get_or(j, "init_hash", t.init_hash);
  if (!j.contains("result")) throw ParseError("trial record: missing field 'result'");
  t.result = j["result"].get<TrialResult>();
  t.misclassification_rate = read_optional_number(j, "misclassification_rate");
  if (j.contains("residual_history"))
    for (const auto& v : j["residual_history"]) t.residual_history.push_back(read_number(v));
}

void to_json(Json& j, const AlgorithmReport& a) {
  Json cps = Json::object();
  for (const auto& [epoch, rms] : a.rms_at_checkpoints) cps[std::to_string(epoch)] = number(rms);
  j = Json{{"label", a.label},
           {"config", a.config},
           {"success_score", a.success_score},
           {"converged_trials", a.converged_trials},
           {"avg_epochs", optional_number(a.avg_epochs)},
           {"median_epochs", optional_number(a.median_epochs)},
           {"avg_wall_time", a.avg_wall_time},
           {"mean_final_rms", number(a.mean_final_rms)},
           {"misclassification_rate", optional_number(a.misclassification_rate)},
           {"rms_at_checkpoints", cps},
           {"trials", a.trials}};
}

void from_json(const Json& j, AlgorithmReport& a) {
  require_known_keys(j,
                     {"label", "config", "success_score", "converged_trials", "avg_epochs",
                      "median_epochs", "avg_wall_time", "mean_final_rms",
                      "misclassification_rate", "rms_at_checkpoints", "trials"},
                     "algorithm report");
  a = AlgorithmReport{};
  a.label = get_or<std::string>(j, "label", "");
  if (j.contains("config")) a.config = j["config"].get<TrainerConfig>();
  a.success_score = read_number(j.at("success_score"));
  a.converged_trials = get_or(j, "converged_trials", a.converged_trials);
  a.avg_epochs = read_optional_number(j, "avg_epochs");
  a.median_epochs = read_optional_number(j, "median_epochs");
  a.avg_wall_time = get_or(j, "avg_wall_time", 0.0);
  a.mean_final_rms = j.contains("mean_final_rms") ? read_number(j["mean_final_rms"]) : 0.0;
  a.misclassification_rate = read_optional_number(j, "misclassification_rate");
  if (j.contains("rms_at_checkpoints"))
    for (const auto& item : j["rms_at_checkpoints"].items())
      a.rms_at_checkpoints[std::stoul(item.key())] = read_number(item.value());
  if (j.contains("trials"))
    for (const auto& t : j["trials"]) a.trials.push_back(t.get<TrialRecord>());
}

void to_json(Json& j, const SuccessReport& r) {
  j = Json{{"experiment", r.experiment}, {"dataset_name", r.dataset_name}, {"algorithms", r.algorithms}};
}

void from_json(const Json& j, SuccessReport& r) {
  require_known_keys(j, {"experiment", "dataset_name", "algorithms"}, "report");
  r = SuccessReport{};
  if (j.contains("experiment")) r.experiment = j["experiment"].get<Experiment>();
  r.dataset_name = get_or<std::string>(j, "dataset_name", "");
  if (j.contains("algorithms"))
    for (const auto& a : j["algorithms"]) r.algorithms.push_back(a.get<AlgorithmReport>());
}

}  // namespace hjbnn
