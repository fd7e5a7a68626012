#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hjbnn/linalg.hpp"
#include "hjbnn/network.hpp"

namespace hjbnn {

enum class Algorithm { BP, LF, LM, HJB, HJB_LM, HJB_SINGLE };
enum class Mode { Offline, Online };

std::string to_string(Algorithm a);
std::string to_string(Mode m);
Algorithm parse_algorithm(const std::string& s);
Mode parse_mode(const std::string& s);

inline constexpr std::size_t kDefaultOfflineEpochs = 10000;
inline constexpr std::size_t kDefaultOnlineEpochs = 8000;

/// Settings of the adaptive-critic trainer. The critic sees the current error
/// vector followed by the pattern input (bias included), so its input width is
/// n_output + n_input of the main network.
struct CriticConfig {
  std::optional<Architecture> arch;  // derived from the main network when absent
  std::size_t hidden = 6;
  double critic_lr = 0.1;
  /// Costate estimate = scale * sigmoid_output + offset.
  double scale = 4.0;
  double offset = -2.0;
  double init_half_range = 1.0;

  Architecture resolve(const Architecture& main) const;
  bool operator==(const CriticConfig&) const = default;
};

struct TrainerConfig {
  Algorithm algorithm = Algorithm::HJB;
  double eta = 1.0;   // BP learning rate
  double mu = 1e-2;   // LF gain, or the initial LM / HJB-LM damping
  double beta = 10.0; // LM / HJB-LM damping factor
  double r = 1.0;     // R = r I
  double eps = kDefaultEps;
  Mode mode = Mode::Offline;
  double stop_rms = 0.01;
  std::optional<std::size_t> max_epochs;  // 10000 offline, 8000 online when unset
  double euler_dt = 1.0;
  bool shuffle = false;  // online pattern order; fixed order unless set
  std::uint64_t seed = 0;  // shuffle stream
  bool record_lyapunov = false;
  std::string label;  // report name; derived when empty
  std::optional<CriticConfig> critic;

  std::size_t resolved_max_epochs() const;
  /// Copy with max_epochs and label filled in.
  TrainerConfig resolved() const;
  std::string default_label() const;
  /// Throws ParameterError on inconsistent settings.
  void validate() const;

  bool operator==(const TrainerConfig&) const = default;
};

}  // namespace hjbnn
