#pragma once

// Single-network adaptive critic for online training.
//
// With discrete error dynamics e_{k+1} = e_k - J_k u_k and stage cost
// ½(eᵀe + r uᵀu), stationarity gives
//
//   u_k = (1/r) J_kᵀ λ_{k+1},      λ_k = e_k + λ_{k+1}.
//
// A second network (the critic) estimates λ_{k+1} from the current state and
// is trained online toward the right-hand side of the costate recursion.

#include <cstdint>
#include <vector>

#include "hjbnn/config.hpp"
#include "hjbnn/datasets.hpp"
#include "hjbnn/network.hpp"
#include "hjbnn/optimizers.hpp"

namespace hjbnn {

struct CriticSetup {
  Network main_net;
  Network critic_net;  // input: [e_k, x_k]; output width = main output width
  double r = 1.0;
  double critic_lr = 0.1;
  double scale = 4.0;
  double offset = -2.0;
  double euler_dt = 1.0;
  std::size_t outer_epochs = 0;
};

/// Builds a setup around `main_net`, drawing the critic weights from `seed`.
CriticSetup make_critic_setup(const Network& main_net, const TrainerConfig& config,
                              std::uint64_t seed);

/// Critic input [e, x] for one pattern.
Vector critic_input(const Vector& error, std::span<const double> x);
/// De-normalized critic output scale * sigmoid + offset.
Vector costate_estimate(const CriticSetup& setup, const Vector& critic_in);

struct SnacStepInfo {
  Vector error;          // e_k
  Vector costate_next;   // λ̂_{k+1}
  Vector update;         // u_k applied to the main network
  Vector next_error;     // e_{k+1} predicted by the discrete dynamics
  Vector target;         // e_{k+1} + λ̂_{k+2}, the critic's training target
  double residual = 0.0; // ‖λ̂_{k+1} − target‖ before the critic step
};

/// One pattern presentation: predict λ̂_{k+1}, move the main network, then take
/// one gradient step on the critic toward the costate recursion.
SnacStepInfo snac_step(CriticSetup& setup, std::span<const double> x,
                       std::span<const double> target);

/// Mean costate-recursion residual over a probe set; leaves the networks untouched.
double recursion_residual(const CriticSetup& setup, const Matrix& inputs, const Matrix& targets);

struct SnacResult {
  TrialResult trial;
  std::vector<double> residual_history;  // probe residual after each epoch
};

/// Epoch loop over the patterns in dataset order; stops like train_online.
SnacResult snac_train(CriticSetup& setup, const Dataset& data, const TrainerConfig& config);

}  // namespace hjbnn
