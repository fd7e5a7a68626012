#include "hjbnn/critic.hpp"

#include <chrono>
#include <cmath>

#include "hjbnn/error.hpp"

namespace hjbnn {

namespace {

// Distinct stream for the critic so it never repeats the main network's draws.
std::uint64_t critic_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ull; }

struct Prediction {
  Vector error;
  Matrix jac;
};

Prediction main_error(const Network& net, std::span<const double> x, std::span<const double> t) {
  Prediction p{Vector(net.arch.n_output), Matrix(net.arch.n_output, net.arch.weight_count())};
  std::vector<double> hidden(net.arch.n_hidden), output(net.arch.n_output);
  forward_jacobian_into(net, x, hidden, output, p.jac.span());
  for (std::size_t o = 0; o < output.size(); ++o) p.error[o] = t[o] - output[o];
  return p;
}

// λ̂_{k+1}, u_k, e_{k+1}, λ̂_{k+2} for the current weights, without side effects.
struct Rollout {
  Vector critic_in;
  Vector costate_next;
  Vector update;
  Vector next_error;
  Vector target;
};

Rollout roll_out(const CriticSetup& s, const Prediction& p, std::span<const double> x) {
  Rollout r;
  r.critic_in = critic_input(p.error, x);
  r.costate_next = costate_estimate(s, r.critic_in);
  r.update = scale(multiply_transposed(p.jac, r.costate_next), 1.0 / s.r);
  r.next_error = subtract(p.error, scale(multiply(p.jac, r.update), s.euler_dt));
  r.target = add(r.next_error, costate_estimate(s, critic_input(r.next_error, x)));
  return r;
}

}  // namespace

CriticSetup make_critic_setup(const Network& main_net, const TrainerConfig& config,
                              std::uint64_t seed) {
  const CriticConfig cc = config.critic.value_or(CriticConfig{});
  const Architecture arch = cc.resolve(main_net.arch);
  CriticSetup s;
  s.main_net = main_net;
  s.critic_net = init_weights(arch, critic_seed(seed), cc.init_half_range);
  s.r = config.r;
  s.critic_lr = cc.critic_lr;
  s.scale = cc.scale;
  s.offset = cc.offset;
  s.euler_dt = config.euler_dt;
  s.outer_epochs = config.resolved_max_epochs();
  return s;
}

Vector critic_input(const Vector& error, std::span<const double> x) {
  std::vector<double> z(error.begin(), error.end());
  z.insert(z.end(), x.begin(), x.end());
  Vector out(z.size());
  std::copy(z.begin(), z.end(), out.begin());
  return out;
}

Vector costate_estimate(const CriticSetup& setup, const Vector& critic_in) {
  Vector lambda = forward(setup.critic_net, critic_in).output;
  for (double& v : lambda) v = setup.scale * v + setup.offset;
  return lambda;
}

SnacStepInfo snac_step(CriticSetup& setup, std::span<const double> x,
                       std::span<const double> target) {
  if (x.size() != setup.main_net.arch.n_input || target.size() != setup.main_net.arch.n_output)
    throw DimensionError("snac_step: pattern does not fit the main network");
  if (setup.critic_net.arch.n_output != setup.main_net.arch.n_output)
    throw DimensionError("snac_step: critic output width must match the main network output");
  if (!(setup.r > 0.0)) throw ParameterError("snac_step: r must be positive");

  const Prediction p = main_error(setup.main_net, x, target);
  Rollout roll = roll_out(setup, p, x);

  add_scaled(setup.main_net, roll.update, setup.euler_dt);

  // Critic: one gradient step on ½‖λ̂_{k+1} − target‖² through the de-normalization.
  const Matrix jc = jacobian(setup.critic_net, roll.critic_in);
  Vector delta = subtract(roll.target, roll.costate_next);
  const double residual = norm2(delta);
  for (double& d : delta) d *= setup.scale;
  add_scaled(setup.critic_net, multiply_transposed(jc, delta), setup.critic_lr);

  if (!all_finite(setup.main_net.w1.span()) || !all_finite(setup.main_net.w2.span()) ||
      !all_finite(setup.critic_net.w1.span()) || !all_finite(setup.critic_net.w2.span()))
    throw DivergenceError("snac_step: non-finite weights");

  return SnacStepInfo{p.error, std::move(roll.costate_next), std::move(roll.update),
                      std::move(roll.next_error), std::move(roll.target), residual};
}

double recursion_residual(const CriticSetup& setup, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() == 0) throw ParameterError("recursion_residual: empty probe set");
  double total = 0.0;
  for (std::size_t p = 0; p < inputs.rows(); ++p) {
    const Prediction pred = main_error(setup.main_net, inputs.row(p), targets.row(p));
    const Rollout roll = roll_out(setup, pred, inputs.row(p));
    total += norm2(subtract(roll.costate_next, roll.target));
  }
  return total / static_cast<double>(inputs.rows());
}

SnacResult snac_train(CriticSetup& setup, const Dataset& data, const TrainerConfig& config) {
  config.validate();
  if (data.input_width() != setup.main_net.arch.n_input ||
      data.output_width() != setup.main_net.arch.n_output)
    throw DimensionError("snac_train: dataset does not fit the main network");
  const auto start = std::chrono::steady_clock::now();

  SnacResult out;
  TrialResult& result = out.trial;
  double rms = rms_error(setup.main_net, data);
  result.final_rms = rms;
  try {
    while (rms > config.stop_rms && result.epochs_used < setup.outer_epochs) {
      for (std::size_t p = 0; p < data.pattern_count(); ++p)
        snac_step(setup, data.inputs.row(p), data.targets.row(p));
      ++result.epochs_used;
      rms = rms_error(setup.main_net, data);
      result.rms_history.push_back(rms);
      result.final_rms = rms;
      out.residual_history.push_back(recursion_residual(setup, data.inputs, data.targets));
      if (!std::isfinite(rms)) throw DivergenceError("snac_train: non-finite error");
    }
    result.converged = rms <= config.stop_rms;
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::Divergence && err.kind() != ErrorKind::Numeric) throw;
    result.failure = err.what();
    result.converged = false;
  }
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace hjbnn
