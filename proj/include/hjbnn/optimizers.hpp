#pragma once

// Weight-update laws and the offline (batch) / online (per-pattern) training
// loops. Every law returns the continuous-time rate u = dŵ/dt; the loops apply
// it with an explicit Euler step ŵ += euler_dt * u.
//
// The error convention is e = y_desired - y and J = ∂y/∂ŵ, so the first-order
// error dynamics are ė = -J u and V = ½ eᵀe decreases at rate eᵀ J u.

#include <optional>
#include <string>
#include <vector>

#include "hjbnn/config.hpp"
#include "hjbnn/datasets.hpp"
#include "hjbnn/linalg.hpp"
#include "hjbnn/network.hpp"

namespace hjbnn {

/// Below this ‖Jᵀe‖ (LF) or √(JJᵀ) (single-output HJB) the update is degenerate.
inline constexpr double kDegenerateTolerance = 1e-12;
/// Retries per epoch of the damping adaptation before a zero update is accepted.
inline constexpr int kMaxDampingRetries = 20;
inline constexpr double kMuCeiling = 1e10;
inline constexpr double kMuFloor = 1e-15;

struct TrialResult {
  bool converged = false;
  std::size_t epochs_used = 0;
  std::vector<double> rms_history;  // RMS after each epoch
  double final_rms = 0.0;
  double wall_time = 0.0;  // seconds
  std::optional<std::vector<double>> lyapunov_rates;
  /// Non-empty when the trial stopped on divergence or a numeric failure.
  std::string failure;

  bool operator==(const TrialResult&) const = default;
};

/// u = eta Jᵀe
Vector step_bp(const Matrix& j, const Vector& e, double eta);
/// u = mu (‖e‖² / ‖Jᵀe‖²) Jᵀe; nullopt when ‖Jᵀe‖ <= kDegenerateTolerance.
std::optional<Vector> step_lf(const Matrix& j, const Vector& e, double mu);
/// Solves (JᵀJ + mu I) u = Jᵀe. Throws NumericError if the system is not SPD.
Vector step_lm(const Matrix& j, const Vector& e, double mu);
/// u = (1/r) Jᵀ C e with C = build_c(j, r, mu, eps).
Vector step_hjb(const Matrix& j, const Vector& e, double r, double mu, double eps);
/// u = Jᵀ e / √(r JJᵀ) for a single-row J; nullopt when JJᵀ <= kDegenerateTolerance.
std::optional<Vector> step_hjb_single(const Matrix& j_row, double e, double r);

/// eᵀ J u; nonnegative values certify a first-order descent direction.
double lyapunov_rate(const Matrix& j, const Vector& e, const Vector& u);
/// ½ (eᵀe + r uᵀu)
double cost_integrand(const Vector& e, const Vector& u, double r);

/// HJB directions for several damping values sharing one eigendecomposition of
/// (1/r) J Jᵀ, as needed by the damping retries.
class HjbDirection {
 public:
  HjbDirection(const Matrix& j, double r);
  Vector operator()(const Vector& e, double mu, double eps) const;
  const EigenDecomposition& decomposition() const noexcept { return eig_; }

 private:
  Matrix j_;
  double r_;
  EigenDecomposition eig_;
};

/// √(Σ‖y_desired − y‖² / (N_p N_o)), the stop metric shared by all trainers.
double rms_error(const Network& net, const Matrix& inputs, const Matrix& targets);
double rms_error(const Network& net, const Dataset& data);

/// Stacked error e (N_o N_p) and Jacobian J (N_o N_p x N_w); row p*N_o + o
/// belongs to output o of pattern p.
struct StackedSystem {
  Matrix j;
  Vector e;
};
StackedSystem stack_system(const Network& net, const Dataset& data);

TrialResult train_offline(Network& net, const Dataset& data, const TrainerConfig& config);
TrialResult train_online(Network& net, const Dataset& data, const TrainerConfig& config);
/// Dispatches on config.mode.
TrialResult train(Network& net, const Dataset& data, const TrainerConfig& config);

}  // namespace hjbnn
