#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hjbnn/config.hpp"
#include "hjbnn/error.hpp"
#include "hjbnn/json_io.hpp"

namespace hjbnn {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::BP: return "BP";
    case Algorithm::LF: return "LF";
    case Algorithm::LM: return "LM";
    case Algorithm::HJB: return "HJB";
    case Algorithm::HJB_LM: return "HJB_LM";
    case Algorithm::HJB_SINGLE: return "HJB_SINGLE";
  }
  return "?";
}

std::string to_string(Mode m) { return m == Mode::Offline ? "offline" : "online"; }

Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::BP, Algorithm::LF, Algorithm::LM, Algorithm::HJB, Algorithm::HJB_LM,
                      Algorithm::HJB_SINGLE})
    if (s == to_string(a)) return a;
  if (s == "HJB-LM") return Algorithm::HJB_LM;
  if (s == "HJB-SINGLE") return Algorithm::HJB_SINGLE;
  throw ParseError("unknown algorithm '" + s + "'");
}

Mode parse_mode(const std::string& s) {
  if (s == "offline" || s == "batch") return Mode::Offline;
  if (s == "online") return Mode::Online;
  throw ParseError("unknown mode '" + s + "' (expected offline or online)");
}

Architecture CriticConfig::resolve(const Architecture& main) const {
  const Architecture derived{main.n_output + main.n_input, hidden, main.n_output};
  if (!arch) return derived;
  if (arch->n_input != derived.n_input || arch->n_output != derived.n_output)
    throw ParameterError("critic architecture " + arch->to_string() + " does not fit main network " +
                         main.to_string() + " (expected " + std::to_string(derived.n_input) +
                         "-H-" + std::to_string(derived.n_output) + ")");
  return *arch;
}

std::size_t TrainerConfig::resolved_max_epochs() const {
  if (max_epochs) return *max_epochs;
  return mode == Mode::Offline ? kDefaultOfflineEpochs : kDefaultOnlineEpochs;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string TrainerConfig::default_label() const {
  std::string params;
  switch (algorithm) {
    case Algorithm::BP: params = "eta=" + fmt(eta); break;
    case Algorithm::LF: params = "mu=" + fmt(mu); break;
    case Algorithm::LM:
    case Algorithm::HJB_LM: params = "mu=" + fmt(mu) + ",beta=" + fmt(beta); break;
    case Algorithm::HJB:
    case Algorithm::HJB_SINGLE: params = "r=" + fmt(r); break;
  }
  const std::string name = critic ? "SNAC" : to_string(algorithm);
  return name + "-" + to_string(mode) + "(" + params + ")";
}

TrainerConfig TrainerConfig::resolved() const {
  TrainerConfig c = *this;
  c.max_epochs = resolved_max_epochs();
  if (c.label.empty()) c.label = default_label();
  return c;
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& m) { throw ParameterError("trainer config: " + m); };
  const bool uses_r = algorithm == Algorithm::HJB || algorithm == Algorithm::HJB_LM ||
                      algorithm == Algorithm::HJB_SINGLE || critic.has_value();
  const bool uses_beta = algorithm == Algorithm::LM || algorithm == Algorithm::HJB_LM;
  if (uses_r && !(r > 0.0)) fail("r must be positive");
  if (uses_beta && !(beta > 1.0)) fail("beta must exceed 1");
  if (!(stop_rms > 0.0)) fail("stop_rms must be positive");
  if (!(eps >= 0.0)) fail("eps must be nonnegative");
  if (!(mu >= 0.0)) fail("mu must be nonnegative");
  if (!(euler_dt > 0.0) || !std::isfinite(euler_dt)) fail("euler_dt must be positive");
  if (!std::isfinite(eta)) fail("eta must be finite");
  if (uses_beta && mode == Mode::Online) fail(to_string(algorithm) + " is a batch (offline) law");
  if (algorithm == Algorithm::HJB_SINGLE && mode == Mode::Offline)
    fail("HJB_SINGLE is an online law");
  if (critic) {
    if (mode != Mode::Online) fail("the adaptive critic trains online");
    if (critic->hidden < 1) fail("critic hidden width must be at least 1");
    if (!(critic->scale > 0.0)) fail("critic scale must be positive");
    if (!(critic->critic_lr >= 0.0)) fail("critic_lr must be nonnegative");
    if (!(critic->init_half_range > 0.0)) fail("critic init_half_range must be positive");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace json_detail {

void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw ParseError(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double read_number(const Json& j) {
  if (j.is_null()) return std::nan("");
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  return j.get<double>();
}

}  // namespace json_detail

namespace {

using json_detail::number;
using json_detail::read_number;
using json_detail::require_known_keys;

template <class T>
void read_field(const Json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      out = read_number(*it);
    } else {
      out = it->template get<T>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T required_field(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ParseError(std::string(what) + ": missing field '" + key + "'");
  T out{};
  read_field(j, key, out);
  return out;
}

Json number_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> read_number_array(const Json& j) {
  if (!j.is_array()) throw ParseError("expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(read_number(x));
  return v;
}

}  // namespace

void to_json(Json& j, const Matrix& m) {
  j = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    j.push_back(number_array(std::vector<double>(row.begin(), row.end())));
  }
}

void from_json(const Json& j, Matrix& m) {
  if (!j.is_array()) throw ParseError("matrix: expected an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw ParseError("matrix: ragged or malformed rows");
    for (const auto& x : row) data.push_back(read_number(x));
  }
  try {
    m = Matrix(rows, cols, std::move(data));
  } catch (const ParameterError& e) {
    throw ParseError(std::string("matrix: ") + e.what());
  }
}

void to_json(Json& j, const Architecture& a) {
  j = Json{{"n_input", a.n_input}, {"n_hidden", a.n_hidden}, {"n_output", a.n_output}};
}

void from_json(const Json& j, Architecture& a) {
  if (j.is_string()) {
    a = parse_architecture(j.get<std::string>());
    return;
  }
  require_known_keys(j, {"n_input", "n_hidden", "n_output"}, "architecture");
  a.n_input = required_field<std::size_t>(j, "n_input", "architecture");
  a.n_hidden = required_field<std::size_t>(j, "n_hidden", "architecture");
  a.n_output = required_field<std::size_t>(j, "n_output", "architecture");
  a.validate();
}

void to_json(Json& j, const Network& n) {
  j = Json{{"arch", n.arch}, {"w1", n.w1}, {"w2", n.w2}};
  j["seed"] = n.init ? Json(n.init->seed) : Json(nullptr);
  j["half_range"] = n.init ? Json(n.init->half_range) : Json(nullptr);
}

void from_json(const Json& j, Network& n) {
  require_known_keys(j, {"arch", "w1", "w2", "seed", "half_range"}, "network");
  n.arch = required_field<Architecture>(j, "arch", "network");
  n.w1 = required_field<Matrix>(j, "w1", "network");
  n.w2 = required_field<Matrix>(j, "w2", "network");
  if (n.w1.rows() != n.arch.n_hidden || n.w1.cols() != n.arch.n_input ||
      n.w2.rows() != n.arch.n_output || n.w2.cols() != n.arch.n_hidden)
    throw ParseError("network: weight shapes do not match " + n.arch.to_string());
  n.init.reset();
  if (j.contains("seed") && !j["seed"].is_null()) {
    InitInfo info;
    read_field(j, "seed", info.seed);
    read_field(j, "half_range", info.half_range);
    n.init = info;
  }
}

void to_json(Json& j, const Dataset& d) {
  j = Json{{"name", d.name}, {"inputs", d.inputs}, {"targets", d.targets}};
  j["test_inputs"] = d.test_inputs ? Json(*d.test_inputs) : Json(nullptr);
  j["test_targets"] = d.test_targets ? Json(*d.test_targets) : Json(nullptr);
  j["metadata"] = d.metadata;
}

void from_json(const Json& j, Dataset& d) {
  require_known_keys(j, {"name", "inputs", "targets", "test_inputs", "test_targets", "metadata"},
                     "dataset");
  d.name = required_field<std::string>(j, "name", "dataset");
  d.inputs = required_field<Matrix>(j, "inputs", "dataset");
  d.targets = required_field<Matrix>(j, "targets", "dataset");
  d.test_inputs.reset();
  d.test_targets.reset();
  if (j.contains("test_inputs") && !j["test_inputs"].is_null())
    d.test_inputs = j["test_inputs"].get<Matrix>();
  if (j.contains("test_targets") && !j["test_targets"].is_null())
    d.test_targets = j["test_targets"].get<Matrix>();
  d.metadata.clear();
  read_field(j, "metadata", d.metadata);
  d.validate();
}

void to_json(Json& j, const CriticConfig& c) {
  j = Json{{"hidden", c.hidden},
           {"critic_lr", c.critic_lr},
           {"scale", c.scale},
           {"offset", c.offset},
           {"init_half_range", c.init_half_range}};
  j["arch"] = c.arch ? Json(*c.arch) : Json(nullptr);
}

void from_json(const Json& j, CriticConfig& c) {
  require_known_keys(j, {"arch", "hidden", "critic_lr", "scale", "offset", "init_half_range"},
                     "critic");
  c = CriticConfig{};
  if (j.contains("arch") && !j["arch"].is_null()) {
    c.arch = j["arch"].get<Architecture>();
    c.hidden = c.arch->n_hidden;
  }
  read_field(j, "hidden", c.hidden);
  read_field(j, "critic_lr", c.critic_lr);
  read_field(j, "scale", c.scale);
  read_field(j, "offset", c.offset);
  read_field(j, "init_half_range", c.init_half_range);
}

void to_json(Json& j, const TrainerConfig& c) {
  j = Json{{"algorithm", to_string(c.algorithm)},
           {"eta", c.eta},
           {"mu", c.mu},
           {"beta", c.beta},
           {"r", c.r},
           {"eps", c.eps},
           {"mode", to_string(c.mode)},
           {"stop_rms", c.stop_rms},
           {"euler_dt", c.euler_dt},
           {"shuffle", c.shuffle},
           {"seed", c.seed},
           {"record_lyapunov", c.record_lyapunov},
           {"label", c.label}};
  j["max_epochs"] = c.max_epochs ? Json(*c.max_epochs) : Json(nullptr);
  if (c.critic) j["critic"] = *c.critic;
}

void from_json(const Json& j, TrainerConfig& c) {
  require_known_keys(j,
                     {"algorithm", "eta", "mu", "beta", "r", "eps", "mode", "stop_rms",
                      "max_epochs", "euler_dt", "shuffle", "seed", "record_lyapunov", "label",
                      "critic"},
                     "trainer config");
  c = TrainerConfig{};
  c.algorithm = parse_algorithm(required_field<std::string>(j, "algorithm", "trainer config"));
  if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
  read_field(j, "eta", c.eta);
  read_field(j, "mu", c.mu);
  read_field(j, "beta", c.beta);
  read_field(j, "r", c.r);
  read_field(j, "eps", c.eps);
  read_field(j, "stop_rms", c.stop_rms);
  read_field(j, "euler_dt", c.euler_dt);
  read_field(j, "shuffle", c.shuffle);
  read_field(j, "seed", c.seed);
  read_field(j, "record_lyapunov", c.record_lyapunov);
  read_field(j, "label", c.label);
  if (j.contains("max_epochs") && !j["max_epochs"].is_null())
    c.max_epochs = j["max_epochs"].get<std::size_t>();
  if (j.contains("critic") && !j["critic"].is_null()) c.critic = j["critic"].get<CriticConfig>();
  c.validate();
}

void to_json(Json& j, const TrialResult& r) {
  j = Json{{"converged", r.converged},
           {"epochs_used", r.epochs_used},
           {"rms_history", number_array(r.rms_history)},
           {"final_rms", number(r.final_rms)},
           {"wall_time", r.wall_time},
           {"failure", r.failure}};
  j["lyapunov_rates"] = r.lyapunov_rates ? number_array(*r.lyapunov_rates) : Json(nullptr);
}

void from_json(const Json& j, TrialResult& r) {
  require_known_keys(j,
                     {"converged", "epochs_used", "rms_history", "final_rms", "wall_time",
                      "failure", "lyapunov_rates"},
                     "trial result");
  r = TrialResult{};
  read_field(j, "converged", r.converged);
  read_field(j, "epochs_used", r.epochs_used);
  if (j.contains("rms_history")) r.rms_history = read_number_array(j["rms_history"]);
  read_field(j, "final_rms", r.final_rms);
  read_field(j, "wall_time", r.wall_time);
  read_field(j, "failure", r.failure);
  if (j.contains("lyapunov_rates") && !j["lyapunov_rates"].is_null())
    r.lyapunov_rates = read_number_array(j["lyapunov_rates"]);
  if (r.rms_history.size() != r.epochs_used)
    throw ParseError("trial result: rms_history length differs from epochs_used");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace hjbnn
