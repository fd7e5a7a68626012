#include "hjbnn/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "hjbnn/error.hpp"

namespace hjbnn {

namespace {

void check_system(const Matrix& j, const Vector& e) {
  if (j.rows() != e.size())
    throw DimensionError("update law: Jacobian has " + std::to_string(j.rows()) +
                         " rows but the error has length " + std::to_string(e.size()));
}

}  // namespace

Vector step_bp(const Matrix& j, const Vector& e, double eta) {
  check_system(j, e);
  return scale(multiply_transposed(j, e), eta);
}

std::optional<Vector> step_lf(const Matrix& j, const Vector& e, double mu) {
  check_system(j, e);
  Vector g = multiply_transposed(j, e);
  const double gg = squared_norm(g);
  if (std::sqrt(gg) <= kDegenerateTolerance) return std::nullopt;
  return scale(g, mu * squared_norm(e) / gg);
}

Vector step_lm(const Matrix& j, const Vector& e, double mu) {
  check_system(j, e);
  if (mu < 0.0) throw ParameterError("step_lm: mu must be nonnegative");
  Matrix a = gram_cols(j);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += mu;
  return solve_spd(a, multiply_transposed(j, e));
}

HjbDirection::HjbDirection(const Matrix& j, double r) : j_(j), r_(r) {
  if (!(r > 0.0)) throw ParameterError("HJB update: r must be positive");
  if (j.rows() == 0) throw DimensionError("HJB update: Jacobian has no rows");
  eig_ = sym_eig(scale(gram_rows(j), 1.0 / r));
}

Vector HjbDirection::operator()(const Vector& e, double mu, double eps) const {
  check_system(j_, e);
  return scale(multiply_transposed(j_, apply_c_from_eig(eig_, mu, eps, e)), 1.0 / r_);
}

Vector step_hjb(const Matrix& j, const Vector& e, double r, double mu, double eps) {
  check_system(j, e);
  return HjbDirection(j, r)(e, mu, eps);
}

std::optional<Vector> step_hjb_single(const Matrix& j_row, double e, double r) {
  if (j_row.rows() != 1) throw DimensionError("step_hjb_single: J must have exactly one row");
  if (!(r > 0.0)) throw ParameterError("step_hjb_single: r must be positive");
  double jj = 0.0;
  for (double v : j_row.span()) jj += v * v;
  if (jj <= kDegenerateTolerance) return std::nullopt;
  const double s = e / std::sqrt(r * jj);
  Vector u(j_row.cols());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = s * j_row(0, k);
  return u;
}

double lyapunov_rate(const Matrix& j, const Vector& e, const Vector& u) {
  check_system(j, e);
  return dot(e, multiply(j, u));
}

double cost_integrand(const Vector& e, const Vector& u, double r) {
  if (r < 0.0) throw ParameterError("cost_integrand: r must be nonnegative");
  return 0.5 * (squared_norm(e) + r * squared_norm(u));
}

// ---------------------------------------------------------------------------

namespace {

double sum_squared_error(const Network& net, const Matrix& inputs, const Matrix& targets,
                         std::vector<double>& hidden, std::vector<double>& output) {
  double sse = 0.0;
  for (std::size_t p = 0; p < inputs.rows(); ++p) {
    forward_into(net, inputs.row(p), hidden, output);
    auto t = targets.row(p);
    for (std::size_t o = 0; o < output.size(); ++o) {
      const double d = t[o] - output[o];
      sse += d * d;
    }
  }
  return sse;
}

void check_compatible(const Network& net, const Dataset& data) {
  if (data.pattern_count() == 0) throw ParameterError("training needs at least one pattern");
  if (data.input_width() != net.arch.n_input || data.output_width() != net.arch.n_output)
    throw DimensionError("dataset '" + data.name + "' (" + std::to_string(data.input_width()) +
                         " inputs, " + std::to_string(data.output_width()) +
                         " outputs) does not fit network " + net.arch.to_string());
}

bool weights_finite(const Network& net) {
  return all_finite(net.w1.span()) && all_finite(net.w2.span());
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

double rms_error(const Network& net, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() != targets.rows()) throw DimensionError("rms_error: row count mismatch");
  if (inputs.rows() == 0) throw ParameterError("rms_error: empty pattern set");
  if (inputs.cols() != net.arch.n_input || targets.cols() != net.arch.n_output)
    throw DimensionError("rms_error: data does not fit network " + net.arch.to_string());
  std::vector<double> hidden(net.arch.n_hidden), output(net.arch.n_output);
  const double sse = sum_squared_error(net, inputs, targets, hidden, output);
  return std::sqrt(sse / static_cast<double>(inputs.rows() * targets.cols()));
}

double rms_error(const Network& net, const Dataset& data) {
  return rms_error(net, data.inputs, data.targets);
}

StackedSystem stack_system(const Network& net, const Dataset& data) {
  check_compatible(net, data);
  const auto& a = net.arch;
  const std::size_t n_o = a.n_output;
  StackedSystem s{Matrix(data.pattern_count() * n_o, a.weight_count()),
                  Vector(data.pattern_count() * n_o)};
  std::vector<double> hidden(a.n_hidden), output(n_o);
  const std::size_t block = n_o * a.weight_count();
  for (std::size_t p = 0; p < data.pattern_count(); ++p) {
    forward_jacobian_into(net, data.inputs.row(p), hidden, output,
                          s.j.span().subspan(p * block, block));
    auto t = data.targets.row(p);
    for (std::size_t o = 0; o < n_o; ++o) s.e[p * n_o + o] = t[o] - output[o];
  }
  return s;
}

TrialResult train_offline(Network& net, const Dataset& data, const TrainerConfig& config) {
  config.validate();
  if (config.mode != Mode::Offline) throw ParameterError("train_offline: config.mode is online");
  if (config.algorithm == Algorithm::HJB_SINGLE)
    throw ParameterError("train_offline: HJB_SINGLE is an online, single-output law");
  check_compatible(net, data);

  const Stopwatch clock;
  const std::size_t max_epochs = config.resolved_max_epochs();
  const double denom = static_cast<double>(data.pattern_count() * net.arch.n_output);
  std::vector<double> hidden(net.arch.n_hidden), output(net.arch.n_output);
  auto sse_of = [&](const Network& n) {
    return sum_squared_error(n, data.inputs, data.targets, hidden, output);
  };

  TrialResult result;
  if (config.record_lyapunov) result.lyapunov_rates.emplace();
  double mu = config.mu;

  try {
    while (true) {
      const StackedSystem sys = stack_system(net, data);
      const double sse = squared_norm(sys.e);
      const double rms = std::sqrt(sse / denom);
      if (result.epochs_used > 0) result.rms_history.push_back(rms);
      result.final_rms = rms;
      if (!std::isfinite(rms) || !weights_finite(net)) {
        result.failure = "diverged: non-finite error or weights";
        break;
      }
      if (rms <= config.stop_rms) {
        result.converged = true;
        break;
      }
      if (result.epochs_used >= max_epochs) break;

      std::optional<Vector> u;
      switch (config.algorithm) {
        case Algorithm::BP:
          u = step_bp(sys.j, sys.e, config.eta);
          break;
        case Algorithm::LF:
          u = step_lf(sys.j, sys.e, config.mu);
          break;
        case Algorithm::HJB:
          u = step_hjb(sys.j, sys.e, config.r, 0.0, config.eps);
          break;
        case Algorithm::LM:
        case Algorithm::HJB_LM: {
          std::optional<HjbDirection> hjb;
          Matrix normal;
          Vector gradient;
          if (config.algorithm == Algorithm::HJB_LM) {
            hjb.emplace(sys.j, config.r);
          } else {
            normal = gram_cols(sys.j);
            gradient = multiply_transposed(sys.j, sys.e);
          }
          for (int attempt = 0; attempt <= kMaxDampingRetries; ++attempt) {
            std::optional<Vector> candidate;
            if (hjb) {
              candidate = (*hjb)(sys.e, mu, config.eps);
            } else {
              Matrix damped = normal;
              for (std::size_t i = 0; i < damped.rows(); ++i) damped(i, i) += mu;
              try {
                candidate = solve_spd(damped, gradient);
              } catch (const NumericError&) {
                // Numerically singular at this damping; treat like a rejected step.
              }
            }
            if (candidate) {
              Network trial = net;
              add_scaled(trial, *candidate, config.euler_dt);
              const double trial_sse = sse_of(trial);
              if (std::isfinite(trial_sse) && trial_sse < sse) {
                u = std::move(candidate);
                mu = std::max(mu / config.beta, kMuFloor);
                break;
              }
            }
            if (attempt == kMaxDampingRetries) break;
            mu = std::min(mu * config.beta, kMuCeiling);
          }
          break;
        }
        case Algorithm::HJB_SINGLE:
          break;
      }

      if (u) {
        if (result.lyapunov_rates) result.lyapunov_rates->push_back(lyapunov_rate(sys.j, sys.e, *u));
        add_scaled(net, *u, config.euler_dt);
      } else if (result.lyapunov_rates) {
        result.lyapunov_rates->push_back(0.0);
      }
      ++result.epochs_used;
    }
  } catch (const NumericError& err) {
    result.failure = err.what();
  }

  if (!result.failure.empty()) result.converged = false;
  result.wall_time = clock.seconds();
  return result;
}

TrialResult train_online(Network& net, const Dataset& data, const TrainerConfig& config) {
  config.validate();
  if (config.mode != Mode::Online) throw ParameterError("train_online: config.mode is offline");
  if (config.algorithm == Algorithm::LM || config.algorithm == Algorithm::HJB_LM)
    throw ParameterError("train_online: " + to_string(config.algorithm) + " is a batch law");
  if (config.algorithm == Algorithm::HJB_SINGLE && net.arch.n_output != 1)
    throw ParameterError("train_online: HJB_SINGLE needs a single-output network");
  check_compatible(net, data);

  const Stopwatch clock;
  const std::size_t max_epochs = config.resolved_max_epochs();
  const std::size_t n_p = data.pattern_count();
  const std::size_t n_o = net.arch.n_output;
  const double denom = static_cast<double>(n_p * n_o);

  std::vector<double> hidden(net.arch.n_hidden), output(n_o);
  Matrix jp(n_o, net.arch.weight_count());
  Vector ep(n_o);
  std::vector<std::size_t> order(n_p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffler(config.seed);

  TrialResult result;
  if (config.record_lyapunov) result.lyapunov_rates.emplace();

  try {
    double rms = std::sqrt(sum_squared_error(net, data.inputs, data.targets, hidden, output) / denom);
    result.final_rms = rms;
    while (std::isfinite(rms) && rms > config.stop_rms && result.epochs_used < max_epochs) {
      if (config.shuffle)
        for (std::size_t i = n_p; i > 1; --i) std::swap(order[i - 1], order[shuffler() % i]);

      for (std::size_t p : order) {
        forward_jacobian_into(net, data.inputs.row(p), hidden, output, jp.span());
        auto t = data.targets.row(p);
        for (std::size_t o = 0; o < n_o; ++o) ep[o] = t[o] - output[o];

        std::optional<Vector> u;
        switch (config.algorithm) {
          case Algorithm::BP:
            u = step_bp(jp, ep, config.eta);
            break;
          case Algorithm::LF:
            u = step_lf(jp, ep, config.mu);
            break;
          case Algorithm::HJB:
            u = step_hjb(jp, ep, config.r, 0.0, config.eps);
            break;
          case Algorithm::HJB_SINGLE:
            u = step_hjb_single(jp, ep[0], config.r);
            break;
          case Algorithm::LM:
          case Algorithm::HJB_LM:
            break;
        }
        if (u) {
          if (result.lyapunov_rates) result.lyapunov_rates->push_back(lyapunov_rate(jp, ep, *u));
          add_scaled(net, *u, config.euler_dt);
        } else if (result.lyapunov_rates) {
          result.lyapunov_rates->push_back(0.0);
        }
      }

      ++result.epochs_used;
      rms = std::sqrt(sum_squared_error(net, data.inputs, data.targets, hidden, output) / denom);
      result.rms_history.push_back(rms);
      result.final_rms = rms;
    }
    if (!std::isfinite(rms) || !weights_finite(net)) {
      result.failure = "diverged: non-finite error or weights";
    } else {
      result.converged = rms <= config.stop_rms;
    }
  } catch (const NumericError& err) {
    result.failure = err.what();
    result.converged = false;
  }

  result.wall_time = clock.seconds();
  return result;
}

TrialResult train(Network& net, const Dataset& data, const TrainerConfig& config) {
  return config.mode == Mode::Offline ? train_offline(net, data, config)
                                      : train_online(net, data, config);
}

}  // namespace hjbnn
