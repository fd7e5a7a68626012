#pragma once

// Two-layer sigmoid feed-forward network.
//
// The input vector already carries the bias (+1) as its last component, so an
// "N_i-N_h-N_o" architecture has N_i inputs including bias and no hidden bias.
// The flat weight vector orders the output-layer weights first (row-major over
// w2) followed by the hidden-layer weights (row-major over w1). Jacobian
// columns, pack/unpack and add_scaled all share that ordering.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "hjbnn/linalg.hpp"

namespace hjbnn {

struct Architecture {
  std::size_t n_input = 1;  // includes the bias unit
  std::size_t n_hidden = 1;
  std::size_t n_output = 1;

  /// Total weight count N_w.
  std::size_t weight_count() const noexcept { return n_hidden * n_input + n_output * n_hidden; }
  /// Throws ParameterError unless every count is at least one.
  void validate() const;
  std::string to_string() const;

  bool operator==(const Architecture&) const = default;
};

/// Parses "3-4-1" style strings.
Architecture parse_architecture(const std::string& text);

struct InitInfo {
  std::uint64_t seed = 0;
  double half_range = 1.0;
  bool operator==(const InitInfo&) const = default;
};

struct Network {
  Architecture arch;
  Matrix w1;  // n_hidden x n_input
  Matrix w2;  // n_output x n_hidden
  std::optional<InitInfo> init;

  bool operator==(const Network&) const = default;
};

struct ForwardTrace {
  Vector hidden;
  Vector output;
};

/// Logistic function, clamped to the open interval (0, 1).
double sigmoid(double h) noexcept;

ForwardTrace forward(const Network& net, const Vector& x);

/// n_output x N_w Jacobian of the outputs with respect to the flat weights.
Matrix jacobian(const Network& net, const Vector& x);

Vector pack(const Network& net);
Network unpack(const Architecture& arch, const Vector& weights);

/// net.weights += s * u, in flat-vector order.
void add_scaled(Network& net, const Vector& u, double s);

/// Uniform(-half_range, +half_range) weights from a seeded 64-bit Mersenne Twister.
Network init_weights(const Architecture& arch, std::uint64_t seed, double half_range = 1.0);

/// Central differences of forward() with step h, same layout as jacobian().
Matrix finite_difference_jacobian(const Network& net, const Vector& x, double h = 1e-6);

/// FNV-1a over the packed weight bytes; used to certify identical initial points.
std::uint64_t weight_hash(const Network& net);

// Allocation-free kernels used by the trainers. Span lengths must match the
// architecture; they are not re-checked.
void forward_into(const Network& net, std::span<const double> x, std::span<double> hidden,
                  std::span<double> output);
void forward_jacobian_into(const Network& net, std::span<const double> x,
                           std::span<double> hidden, std::span<double> output,
                           std::span<double> jac_rows);

}  // namespace hjbnn
